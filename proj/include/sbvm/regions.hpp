#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "sbvm/network.hpp"
#include "sbvm/rng.hpp"

namespace sbvm {

/// One bit per hidden unit (layers 1..L in order): pre-activation > 0.
/// A pre-activation of exactly 0 counts as inactive.
struct ActivationPattern {
  std::vector<bool> bits;

  std::string to_string() const;
  auto operator<=>(const ActivationPattern&) const = default;
};

ActivationPattern activation_pattern(const NetworkParams& net, const Eigen::Ref<const Eigen::VectorXd>& x);

/// A linear piece f(x) = slope' x + intercept on the design points in `members`.
struct RegionCell {
  ActivationPattern pattern;
  Eigen::VectorXd slope;
  double intercept = 0.0;
  std::vector<std::size_t> members;
};

/// Cells sorted by pattern; their members partition the design rows.
struct RegionDecomposition {
  std::vector<RegionCell> cells;

  /// Index of the cell containing design row i.
  std::size_t cell_of(std::size_t row) const;
  /// Sum over cells of 1(x_i in cell) (slope' x_i + intercept).
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::MatrixXd>& design) const;
};

/// Slope and intercept of the affine map the network computes under a fixed pattern:
/// W_{L+1} D_L W_L ... D_1 W_1 and the matching accumulated shift.
std::pair<Eigen::VectorXd, double> affine_piece(const NetworkParams& net, const ActivationPattern& pattern);

RegionDecomposition decompose_at(const NetworkParams& net, const Eigen::Ref<const Eigen::MatrixXd>& design);

struct RegionBounds {
  std::uint64_t lower = 0;
  std::uint64_t upper = 0;
  bool upper_saturated = false;
  bool lower_saturated = false;
};

/// Region-count bounds for an architecture: upper 2^T (saturating at
/// 2^63), lower (prod_{l<L} floor(p_l/p)^p) * sum_{j=1}^{p} C(p_L, j).
RegionBounds region_count_bounds(const Architecture& arch);

struct SlopeCovariance {
  /// E[slope_i' slope_j] summed over both input coordinates, 3 x 3.
  Eigen::Matrix3d summed;
  Eigen::Matrix3d summed_se;
  /// Covariance of one input coordinate of the slopes, 3 x 3.
  Eigen::Matrix3d per_coordinate;
  Eigen::Matrix3d per_coordinate_se;
  std::size_t draws = 0;
};

/// Monte Carlo covariance of the three nonzero cell slopes of a two-input,
/// two-unit network (cells "both on", "unit 1 only", "unit 2 only") when all
/// weights are iid Uniform[-1, 1].
SlopeCovariance prior_slope_covariance_mc(std::size_t draws, std::uint64_t seed);

}  // namespace sbvm
