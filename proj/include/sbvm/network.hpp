#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sbvm/architecture.hpp"

namespace sbvm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Position of layer l's weights and shifts in the stacked parameter vector.
/// Each layer stores W_l row-major followed by b_l.
struct LayerLayout {
  int rows = 0;
  int cols = 0;
  std::size_t weight_offset = 0;
  std::size_t shift_offset = 0;

  bool operator==(const LayerLayout&) const = default;
};

/// Where one stacked coordinate lives.
struct SlotInfo {
  int layer = 0;  // 1-based
  int row = 0;
  int col = -1;   // -1 for a shift coordinate
  bool is_shift() const { return col < 0; }
};

/// All weights and shifts of a network plus its connectivity mask.
///
/// Values are stored in the stacked order (W_1, b_1, ..., W_{L+1}, b_{L+1}).
/// Evaluation always masks by gamma, so a stray value behind gamma = 0 has no
/// effect on outputs.
class NetworkParams {
 public:
  NetworkParams() = default;
  /// Zero network: deep coordinates inactive, top layer active.
  explicit NetworkParams(Architecture arch);
  NetworkParams(Architecture arch, std::vector<double> values, std::vector<std::uint8_t> gamma);

  const Architecture& arch() const { return arch_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<const std::uint8_t> gamma() const { return gamma_; }
  double value(std::size_t j) const { return values_[j]; }
  bool active(std::size_t j) const { return gamma_[j] != 0; }
  double effective(std::size_t j) const { return gamma_[j] ? values_[j] : 0.0; }

  void set_value(std::size_t j, double v) { values_[j] = v; }
  void set_active(std::size_t j, bool on) { gamma_[j] = on ? 1 : 0; }
  /// Sets gamma_j and the value together; deactivation zeroes the value.
  void set(std::size_t j, double v, bool on);

  /// |gamma|.
  std::size_t active_count() const;
  std::size_t active_deep_count() const;

  const LayerLayout& layout(int layer) const { return layouts_[static_cast<std::size_t>(layer - 1)]; }
  SlotInfo slot(std::size_t j) const;

  /// Masked W_l and b_l (1-based layer index, l = 1..L+1).
  RowMatrix weights(int layer) const;
  Eigen::VectorXd shifts(int layer) const;
  void set_weights(int layer, const RowMatrix& w);
  void set_shifts(int layer, const Eigen::VectorXd& b);

  /// Top layer (W_{L+1}, b_{L+1}) as one vector of length p_L + 1.
  Eigen::VectorXd top_layer() const;
  void set_top_layer(const Eigen::VectorXd& theta);

  /// Deep weights as a hashable byte key (gamma bits plus value bits).
  std::string deep_key() const;

  bool operator==(const NetworkParams&) const = default;

 private:
  Architecture arch_;
  std::vector<double> values_;
  std::vector<std::uint8_t> gamma_;
  std::vector<LayerLayout> layouts_;
};

/// Describes the first violated structural invariant, if any: top layer
/// fully active, masked values zero, |gamma| <= s. The deep-weight box
/// |beta| <= 1 is a prior-support condition and is checked by log_prior.
std::optional<std::string> check_invariants(const NetworkParams& net);

/// Hidden activations Z_1..Z_L for a single input.
struct HiddenState {
  std::vector<Eigen::VectorXd> layers;
};

double forward(const NetworkParams& net, const Eigen::Ref<const Eigen::VectorXd>& x);
HiddenState hidden_state(const NetworkParams& net, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Row-wise network outputs for a design X (n x p).
Eigen::VectorXd forward_batch(const NetworkParams& net, const Eigen::Ref<const Eigen::MatrixXd>& design);
/// Outputs of every layer for a design: element 0 is X, element l is Z_l (n x p_l).
std::vector<Eigen::MatrixXd> layer_outputs(const NetworkParams& net,
                                           const Eigen::Ref<const Eigen::MatrixXd>& design);
/// Z_L(x_i) stacked as rows (n x p_L).
Eigen::MatrixXd hidden_features(const NetworkParams& net, const Eigen::Ref<const Eigen::MatrixXd>& design);

/// max_i |f(x_i)|; the computable stand-in for the sup-norm bound.
double sup_norm_surrogate(const NetworkParams& net, const Eigen::Ref<const Eigen::MatrixXd>& design);

}  // namespace sbvm
