#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sbvm {

/// A regression truth f0 on [0,1]^p.
struct TruthFunction {
  std::string id;
  double param = 0.0;  // alpha for holder_frac, c for constant; unused otherwise
  double alpha_nominal = 0.0;
  double sup_bound = 1.0;
  std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)> evaluator;

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const { return evaluator(x); }
  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::MatrixXd>& design) const;
};

/// Truth by id: "smooth_prod", "bump", "holder_frac" (param = alpha, default 0.6),
/// "constant" (param = c, default 0). `p` sets the nominal smoothness label.
TruthFunction make_truth(const std::string& id, std::optional<double> param = std::nullopt, int p = 1);
/// Default instance of every truth.
std::vector<TruthFunction> truth_library(int p = 1);
bool is_known_truth(const std::string& id);

enum class DesignKind { Grid, FixedUniform };
DesignKind parse_design_kind(const std::string& s);
std::string to_string(DesignKind k);

/// n x p design in [0,1]^p.
///
/// Grid: an endpoint-inclusive lattice with m = ceil(n^{1/p}) points per axis
/// (coordinates k/(m-1), or 0.5 when m = 1), enumerated lexicographically with
/// the last coordinate fastest and truncated to the first n points.
/// FixedUniform: iid uniform rows from `seed`.
Eigen::MatrixXd make_design(std::size_t n, int p, DesignKind kind, std::uint64_t seed = 0);

struct RegressionDataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> eps;
  std::optional<Eigen::VectorXd> f0;
  std::optional<TruthFunction> truth;
  std::uint64_t seed = 0;

  std::size_t n() const { return static_cast<std::size_t>(x.rows()); }
  int p() const { return static_cast<int>(x.cols()); }
  bool has_oracle() const { return eps.has_value() && f0.has_value(); }
};

/// Y = f0(X) + eps with eps iid N(0, 1) from `seed`; eps and f0 values are kept.
RegressionDataset simulate(const TruthFunction& truth, const Eigen::Ref<const Eigen::MatrixXd>& design,
                           std::uint64_t seed);

}  // namespace sbvm
