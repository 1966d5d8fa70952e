#pragma once

#include <Eigen/Core>

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "sbvm/datagen.hpp"
#include "sbvm/network.hpp"

namespace sbvm {

/// Design, truth values and (in simulation) the noise that produced Y.
struct LanContext {
  Eigen::MatrixXd x;
  Eigen::VectorXd f0;
  std::optional<Eigen::VectorXd> eps;

  std::size_t n() const { return static_cast<std::size_t>(f0.size()); }
  static LanContext from_dataset(const RegressionDataset& data);
};

enum class FunctionalKind { Linear, SquaredL2 };
FunctionalKind parse_functional_kind(const std::string& s);
std::string to_string(FunctionalKind k);

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::Linear;
  double a = 1.0;  // constant weight of the linear functional

  static FunctionalSpec linear(double a) { return {FunctionalKind::Linear, a}; }
  static FunctionalSpec squared_l2() { return {FunctionalKind::SquaredL2, 1.0}; }
};

/// Psi(f0), the centering point and the limit variance.
struct BvmTargets {
  double psi_true = 0.0;
  double psi_hat = 0.0;
  double v0 = 0.0;
};

/// <g, h>_L = (1/n) sum g(x_i) h(x_i).
double lan_inner(const Eigen::Ref<const Eigen::VectorXd>& g, const Eigen::Ref<const Eigen::VectorXd>& h);
double lan_norm_sq(const Eigen::Ref<const Eigen::VectorXd>& g);

/// Linear: (a/n) sum f(x_i). Squared L2: (1/n) sum f(x_i)^2.
double psi(const Eigen::Ref<const Eigen::VectorXd>& f_values, const FunctionalSpec& spec);

/// W_n(g) = (1/sqrt n) sum eps_i g(x_i). Throws when the context has no noise.
double w_n(const Eigen::Ref<const Eigen::VectorXd>& g_values, const LanContext& ctx);

BvmTargets bvm_targets(const LanContext& ctx, const FunctionalSpec& spec);

/// Least-squares fit of a target over span{Z_L columns, 1} (minimum-norm on rank deficiency).
struct Projection {
  Eigen::VectorXd coeffs;  // (W, b), length p_L + 1
  Eigen::VectorXd fitted;
  double l2_error = 0.0;   // ||fitted - target||_L
};

Projection project_onto_features(const Eigen::Ref<const Eigen::VectorXd>& target, const NetworkParams& net,
                                 const Eigen::Ref<const Eigen::MatrixXd>& design);
Projection project_onto_columns(const Eigen::Ref<const Eigen::VectorXd>& target,
                                const Eigen::Ref<const Eigen::MatrixXd>& features);

/// r(f, f0) = ||f - f0||_L^2 + 2 <f0 - f0_proj, f - f0>_L.
double remainder_quadratic(const Eigen::Ref<const Eigen::VectorXd>& f_values, const LanContext& ctx,
                           const Eigen::Ref<const Eigen::VectorXd>& projection_values);

/// Projections of one fixed target, keyed by a network's deep weights and
/// mask. Safe for concurrent use.
class ProjectionCache {
 public:
  ProjectionCache(Eigen::VectorXd target, Eigen::MatrixXd design, std::size_t capacity = 256);

  /// Returns a copy; the cache is flushed when it reaches capacity.
  Projection get(const NetworkParams& net);
  std::size_t hits() const { return hits_; }
  std::size_t size() const;

 private:
  Eigen::VectorXd target_;
  Eigen::MatrixXd design_;
  mutable std::mutex mu_;
  std::map<std::string, Projection> entries_;
  std::size_t capacity_;
  std::size_t hits_ = 0;
};

/// Functional values of one network draw, computed from scratch.
struct DrawFunctionals {
  double mean_f = 0.0;     // (1/n) sum f(x_i)
  double sq_norm = 0.0;    // ||f||_L^2
  double remainder = 0.0;  // r(f, f0)
};

DrawFunctionals evaluate_draw(const NetworkParams& net, const LanContext& ctx, ProjectionCache* cache = nullptr);

}  // namespace sbvm
