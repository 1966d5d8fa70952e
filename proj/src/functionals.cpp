#include "sbvm/functionals.hpp"

#include <Eigen/QR>

#include <cmath>

#include "sbvm/error.hpp"

namespace sbvm {

LanContext LanContext::from_dataset(const RegressionDataset& data) {
  LanContext ctx;
  ctx.x = data.x;
  if (data.f0) {
    ctx.f0 = *data.f0;
  } else if (data.eps) {
    ctx.f0 = data.y - *data.eps;
  } else {
    throw ValueError("centering requires simulation oracle");
  }
  ctx.eps = data.eps;
  return ctx;
}

FunctionalKind parse_functional_kind(const std::string& s) {
  if (s == "linear") return FunctionalKind::Linear;
  if (s == "squared_l2") return FunctionalKind::SquaredL2;
  throw ValueError("unknown functional kind '" + s + "'");
}

std::string to_string(FunctionalKind k) { return k == FunctionalKind::Linear ? "linear" : "squared_l2"; }

double lan_inner(const Eigen::Ref<const Eigen::VectorXd>& g, const Eigen::Ref<const Eigen::VectorXd>& h) {
  if (g.size() != h.size()) {
    throw DimensionError("inner product of lengths " + std::to_string(g.size()) + " and " + std::to_string(h.size()));
  }
  if (g.size() == 0) throw DimensionError("inner product needs n >= 1");
  return g.dot(h) / static_cast<double>(g.size());
}

double lan_norm_sq(const Eigen::Ref<const Eigen::VectorXd>& g) { return lan_inner(g, g); }

double psi(const Eigen::Ref<const Eigen::VectorXd>& f, const FunctionalSpec& spec) {
  if (f.size() == 0) throw DimensionError("functional needs n >= 1");
  if (spec.kind == FunctionalKind::Linear) return spec.a * f.mean();
  return lan_norm_sq(f);
}

double w_n(const Eigen::Ref<const Eigen::VectorXd>& g, const LanContext& ctx) {
  if (!ctx.eps) throw ValueError("centering requires simulation oracle");
  if (g.size() != ctx.eps->size()) throw DimensionError("W_n argument has wrong length");
  return ctx.eps->dot(g) / std::sqrt(static_cast<double>(g.size()));
}

BvmTargets bvm_targets(const LanContext& ctx, const FunctionalSpec& spec) {
  BvmTargets t;
  const double root_n = std::sqrt(static_cast<double>(ctx.n()));
  t.psi_true = psi(ctx.f0, spec);
  if (spec.kind == FunctionalKind::Linear) {
    const Eigen::VectorXd a = Eigen::VectorXd::Constant(ctx.f0.size(), spec.a);
    t.psi_hat = t.psi_true + w_n(a, ctx) / root_n;
    t.v0 = spec.a * spec.a;
  } else {
    t.psi_hat = t.psi_true + 2.0 * w_n(ctx.f0, ctx) / root_n;
    t.v0 = 4.0 * lan_norm_sq(ctx.f0);
  }
  return t;
}

Projection project_onto_columns(const Eigen::Ref<const Eigen::VectorXd>& target,
                                const Eigen::Ref<const Eigen::MatrixXd>& features) {
  if (features.rows() != target.size()) throw DimensionError("feature rows differ from target length");
  Eigen::MatrixXd m(features.rows(), features.cols() + 1);
  m.leftCols(features.cols()) = features;
  m.col(features.cols()).setOnes();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(m);
  Projection out;
  out.coeffs = cod.solve(target);
  out.fitted = m * out.coeffs;
  out.l2_error = std::sqrt(lan_norm_sq(out.fitted - target));
  return out;
}

Projection project_onto_features(const Eigen::Ref<const Eigen::VectorXd>& target, const NetworkParams& net,
                                 const Eigen::Ref<const Eigen::MatrixXd>& design) {
  return project_onto_columns(target, hidden_features(net, design));
}

double remainder_quadratic(const Eigen::Ref<const Eigen::VectorXd>& f, const LanContext& ctx,
                           const Eigen::Ref<const Eigen::VectorXd>& proj) {
  const Eigen::VectorXd diff = f - ctx.f0;
  return lan_norm_sq(diff) + 2.0 * lan_inner(ctx.f0 - proj, diff);
}

ProjectionCache::ProjectionCache(Eigen::VectorXd target, Eigen::MatrixXd design, std::size_t capacity)
    : target_(std::move(target)), design_(std::move(design)), capacity_(capacity) {}

Projection ProjectionCache::get(const NetworkParams& net) {
  std::string key = net.deep_key();
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it != entries_.end()) {
      ++hits_;
      return it->second;
    }
  }
  Projection p = project_onto_features(target_, net, design_);
  std::lock_guard lock(mu_);
  if (entries_.size() >= capacity_) entries_.clear();
  entries_.try_emplace(std::move(key), p);
  return p;
}

std::size_t ProjectionCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

DrawFunctionals evaluate_draw(const NetworkParams& net, const LanContext& ctx, ProjectionCache* cache) {
  const Eigen::VectorXd f = forward_batch(net, ctx.x);
  DrawFunctionals d;
  d.mean_f = f.mean();
  d.sq_norm = lan_norm_sq(f);
  if (cache != nullptr) {
    d.remainder = remainder_quadratic(f, ctx, cache->get(net).fitted);
  } else {
    d.remainder = remainder_quadratic(f, ctx, project_onto_features(ctx.f0, net, ctx.x).fitted);
  }
  return d;
}

}  // namespace sbvm
