#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "sbvm/datagen.hpp"
#include "sbvm/error.hpp"
#include "sbvm/functionals.hpp"
#include "sbvm/sampler.hpp"
#include "support.hpp"

using namespace sbvm;
using sbvm::testing::arch_of;
using sbvm::testing::random_net;
using sbvm::testing::uniform_design;

TEST_CASE("LAN inner product") {
  CHECK(lan_inner(Eigen::Vector3d::Constant(2.0), Eigen::Vector3d::Constant(2.0)) == doctest::Approx(4.0));
  CHECK(lan_inner(Eigen::Vector2d(1, -1), Eigen::Vector2d(1, 1)) == 0.0);
  CHECK_THROWS_AS(lan_inner(Eigen::Vector2d(1, 1), Eigen::Vector3d(1, 1, 1)), DimensionError);

  Rng rng(1);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd g(257), h(257);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    g(i) = normal(rng);
    h(i) = normal(rng);
  }
  double naive = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) naive += g(i) * h(i);
  CHECK(std::abs(lan_inner(g, h) - naive / 257.0) <= 1e-12);
  double sq = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i) sq += g(i) * g(i);
  CHECK(std::abs(psi(g, FunctionalSpec::squared_l2()) - sq / 257.0) <= 1e-12);
}

TEST_CASE("functional values") {
  CHECK(psi(Eigen::VectorXd::Constant(4, 3.0), FunctionalSpec::linear(2.0)) == doctest::Approx(6.0));
  CHECK(psi(Eigen::VectorXd::Constant(4, -1.5), FunctionalSpec::squared_l2()) == doctest::Approx(2.25));
}

TEST_CASE("W_n") {
  LanContext ctx;
  ctx.x = Eigen::MatrixXd::Zero(2, 1);
  ctx.f0 = Eigen::VectorXd::Zero(2);
  ctx.eps = Eigen::Vector2d(1.0, -1.0);
  CHECK(w_n(Eigen::Vector2d(1.0, 1.0), ctx) == 0.0);
  CHECK(w_n(Eigen::Vector2d::Zero(), ctx) == 0.0);
  CHECK(w_n(Eigen::Vector2d(1.0, 0.0), ctx) == doctest::Approx(1.0 / std::sqrt(2.0)));
  ctx.eps.reset();
  CHECK_THROWS_WITH_AS(w_n(Eigen::Vector2d(1.0, 1.0), ctx), "centering requires simulation oracle", ValueError);
}

TEST_CASE("centering and limit variance") {
  LanContext ctx;
  ctx.x = Eigen::MatrixXd::Zero(4, 1);
  ctx.f0 = Eigen::VectorXd::Ones(4);
  ctx.eps = Eigen::Vector4d(0.5, -0.1, 0.3, 0.2);
  const BvmTargets q = bvm_targets(ctx, FunctionalSpec::squared_l2());
  CHECK(q.v0 == doctest::Approx(4.0));
  CHECK(q.psi_true == doctest::Approx(1.0));
  CHECK(q.psi_hat == doctest::Approx(1.0 + 2.0 * 0.9 / 4.0));
  const BvmTargets l = bvm_targets(ctx, FunctionalSpec::linear(3.0));
  CHECK(l.v0 == doctest::Approx(9.0));
  CHECK(l.psi_hat == doctest::Approx(3.0 + 3.0 * 0.9 / 4.0));
  ctx.eps = Eigen::Vector4d::Zero();
  CHECK(bvm_targets(ctx, FunctionalSpec::squared_l2()).psi_hat == 1.0);
}

TEST_CASE("LAN identity on random nets") {
  Rng rng(2);
  for (int rep = 0; rep < 100; ++rep) {
    const int depth = 1 + rep % 3;
    const int p = 1 + rep % 2;
    const NetworkParams net = random_net(arch_of(p, std::vector<int>(static_cast<std::size_t>(depth), 4)), rng);
    const RegressionDataset data =
        simulate(make_truth("smooth_prod", std::nullopt, p), uniform_design(100 + rep, p, rng), derive_seed(3, rep));
    const LanContext ctx = LanContext::from_dataset(data);
    const Eigen::VectorXd f = forward_batch(net, data.x);
    const double n = static_cast<double>(data.n());
    const double ll_f = log_likelihood(net, data);
    const Eigen::VectorXd r0 = data.y - *data.f0;
    const double ll_0 = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * r0.squaredNorm();
    const double lhs = ll_f - ll_0;
    const double rhs = -0.5 * n * lan_norm_sq(f - ctx.f0) + std::sqrt(n) * w_n(f - ctx.f0, ctx);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("linear shift identity") {
  Rng rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd f(64);
  for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = normal(rng);
  const double a = 1.7, t = 0.4, n = 64.0;
  const FunctionalSpec spec = FunctionalSpec::linear(a);
  const Eigen::VectorXd shifted = f.array() - t * a / std::sqrt(n);
  CHECK(psi(shifted, spec) == doctest::Approx(psi(f, spec) - t * a * a / std::sqrt(n)).epsilon(1e-14));
}

TEST_CASE("projection onto features") {
  Rng rng(4);
  const Architecture a = arch_of(2, {5});
  const NetworkParams net = random_net(a, rng, 0.8);
  const Eigen::MatrixXd x = uniform_design(120, 2, rng);

  // Exactly representable target.
  const Eigen::VectorXd f = forward_batch(net, x);
  const Projection exact = project_onto_features(f, net, x);
  CHECK(exact.l2_error <= 1e-10);

  // Residual orthogonality and dominance for a general target.
  const Eigen::VectorXd target = make_truth("bump", std::nullopt, 2).evaluate(x);
  const Projection pr = project_onto_features(target, net, x);
  const Eigen::MatrixXd z = hidden_features(net, x);
  const Eigen::VectorXd resid = target - pr.fitted;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    CHECK(std::abs(lan_inner(resid, z.col(j))) <= 1e-8 * std::sqrt(lan_norm_sq(target) * lan_norm_sq(z.col(j))) + 1e-15);
  }
  CHECK(std::abs(resid.mean()) <= 1e-10);
  NetworkParams other = net;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd theta(a.top_size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = normal(rng);
    other.set_top_layer(theta);
    const Eigen::VectorXd g = forward_batch(other, x);
    CHECK(pr.l2_error <= std::sqrt(lan_norm_sq(g - target)) + 1e-12);
  }
}

TEST_CASE("projection with every unit dead is the mean") {
  NetworkParams net(arch_of(1, {3}));
  RowMatrix w = RowMatrix::Zero(3, 1);
  net.set_weights(1, w);
  net.set_shifts(1, Eigen::Vector3d::Constant(-1.0));
  Eigen::MatrixXd x(4, 1);
  x << 0.0, 0.3, 0.6, 1.0;
  const Eigen::Vector4d target(1.0, 2.0, 4.0, 5.0);
  const Projection pr = project_onto_features(target, net, x);
  CHECK(pr.fitted.isConstant(3.0, 1e-12));
  CHECK(pr.l2_error == doctest::Approx(std::sqrt(2.5)));
}

TEST_CASE("quadratic remainder") {
  Rng rng(5);
  const Architecture a = arch_of(1, {6});
  for (int rep = 0; rep < 50; ++rep) {
    const NetworkParams net = random_net(a, rng);
    const RegressionDataset data = simulate(make_truth("smooth_prod"), uniform_design(80, 1, rng), derive_seed(6, rep));
    const LanContext ctx = LanContext::from_dataset(data);
    const Eigen::VectorXd f = forward_batch(net, data.x);
    const Projection pr = project_onto_features(ctx.f0, net, data.x);
    const double r = remainder_quadratic(f, ctx, pr.fitted);
    CHECK(std::abs(r) <= 3.0 * lan_norm_sq(f - ctx.f0) + 1e-12);
    CHECK(remainder_quadratic(ctx.f0, ctx, pr.fitted) == doctest::Approx(0.0));
    CHECK(remainder_quadratic(f, ctx, ctx.f0) == doctest::Approx(lan_norm_sq(f - ctx.f0)));
  }
}

TEST_CASE("projection cache") {
  Rng rng(7);
  const NetworkParams net = random_net(arch_of(1, {4}), rng);
  const Eigen::MatrixXd x = uniform_design(30, 1, rng);
  const Eigen::VectorXd target = make_truth("smooth_prod").evaluate(x);
  ProjectionCache cache(target, x, 2);
  const Projection a = cache.get(net);
  NetworkParams top_only = net;
  top_only.set_top_layer(Eigen::VectorXd::Zero(5));
  const Projection b = cache.get(top_only);
  CHECK(cache.hits() == 1);
  CHECK(a.coeffs == b.coeffs);
  CHECK(a.coeffs == project_onto_features(target, net, x).coeffs);
  for (int i = 0; i < 5; ++i) cache.get(random_net(arch_of(1, {4}), rng));
  CHECK(cache.size() <= 2);
}

TEST_CASE("evaluate_draw") {
  Rng rng(8);
  const NetworkParams net = random_net(arch_of(2, {4}), rng);
  const RegressionDataset data =
      simulate(make_truth("smooth_prod", std::nullopt, 2), uniform_design(60, 2, rng), 1);
  const LanContext ctx = LanContext::from_dataset(data);
  const DrawFunctionals d = evaluate_draw(net, ctx);
  const Eigen::VectorXd f = forward_batch(net, data.x);
  CHECK(d.mean_f == doctest::Approx(f.mean()));
  CHECK(d.sq_norm == doctest::Approx(lan_norm_sq(f)));
  CHECK(d.remainder == doctest::Approx(remainder_quadratic(f, ctx, project_onto_features(ctx.f0, net, data.x).fitted)));
}

TEST_CASE("context without an oracle") {
  RegressionDataset d;
  d.x = Eigen::MatrixXd::Zero(3, 1);
  d.y = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_WITH_AS(LanContext::from_dataset(d), "centering requires simulation oracle", ValueError);
}
