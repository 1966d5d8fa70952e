#include <doctest.h>

#include <cmath>

#include "sbvm/architecture.hpp"
#include "sbvm/construct.hpp"
#include "sbvm/error.hpp"
#include "sbvm/network.hpp"
#include "sbvm/regions.hpp"
#include "support.hpp"

using namespace sbvm;
using sbvm::testing::arch_of;
using sbvm::testing::random_net;
using sbvm::testing::uniform_design;

TEST_CASE("parameter count and layout") {
  const Architecture a = arch_of(2, {3, 4});
  // 3*(2+1) + 4*(3+1) + 1*(4+1)
  CHECK(a.param_count() == 30);
  CHECK(a.top_offset() == 25);
  CHECK(a.deep_count() == 25);
  NetworkParams net(a);
  CHECK(net.layout(2).weight_offset == 9);
  CHECK(net.layout(2).shift_offset == 21);
  const SlotInfo s = net.slot(22);
  CHECK(s.layer == 2);
  CHECK(s.row == 1);
  CHECK(s.is_shift());
  CHECK(net.slot(10).col == 1);
}

TEST_CASE("architecture invariants") {
  Architecture a = make_architecture(1, {2}, 2);
  CHECK_THROWS_AS(a.validate(), ValueError);
  a.sparsity = 3;
  CHECK_NOTHROW(a.validate());
  a.sup_bound = 0.0;
  CHECK_THROWS_AS(a.validate(), ValueError);
  CHECK_THROWS_AS(make_architecture(0, {2}, 5).validate(), ValueError);
}

TEST_CASE("constant network returns its output shift") {
  NetworkParams net(arch_of(3, {4, 2}));
  net.set(net.size() - 1, 7.0, true);
  const Eigen::Vector3d x(0.1, 0.5, 0.9);
  CHECK(forward(net, x) == 7.0);
  CHECK(sup_norm_surrogate(net, Eigen::MatrixXd::Random(5, 3)) == 7.0);
}

TEST_CASE("dead unit") {
  NetworkParams net(arch_of(1, {1}));
  net.set(0, 1.0, true);
  net.set(1, -0.5, true);
  net.set(2, 1.0, true);
  Eigen::VectorXd x(1);
  x << 0.25;
  CHECK(forward(net, x) == 0.0);
  x << 0.75;
  CHECK(forward(net, x) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("identity hidden layer") {
  NetworkParams net(arch_of(2, {2}));
  RowMatrix w = RowMatrix::Identity(2, 2);
  net.set_weights(1, w);
  const Eigen::Vector2d x(0.2, 0.7);
  const HiddenState h = hidden_state(net, x);
  CHECK(h.layers[0](0) == 0.2);
  CHECK(h.layers[0](1) == 0.7);

  net.set_shifts(1, Eigen::Vector2d(-1.0, -1.0));
  const HiddenState dead = hidden_state(net, x);
  CHECK(dead.layers[0].isZero(0.0));
}

TEST_CASE("forward equals the top layer applied to Z_L") {
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const int depth = 1 + rep % 3;
    std::vector<int> hidden(static_cast<std::size_t>(depth), 2 + rep % 5);
    const NetworkParams net = random_net(arch_of(2, hidden), rng);
    const Eigen::VectorXd x = uniform_design(1, 2, rng).row(0).transpose();
    const HiddenState h = hidden_state(net, x);
    const Eigen::VectorXd theta = net.top_layer();
    const double rebuilt = h.layers.back().dot(theta.head(theta.size() - 1)) + theta(theta.size() - 1);
    CHECK(std::abs(rebuilt - forward(net, x)) <= 1e-12);
  }
}

TEST_CASE("hidden state ignores the top layer and masked values") {
  Rng rng(5);
  const Architecture a = arch_of(2, {4, 3});
  NetworkParams net = random_net(a, rng, 0.5);
  const Eigen::MatrixXd x = uniform_design(50, 2, rng);
  const Eigen::MatrixXd z = hidden_features(net, x);
  const Eigen::VectorXd f = forward_batch(net, x);

  NetworkParams other = net;
  other.set_top_layer(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(a.top_size()), 3.0));
  CHECK(hidden_features(other, x) == z);

  // Writing garbage into inactive coordinates changes nothing.
  NetworkParams masked = net;
  for (std::size_t j = 0; j < a.deep_count(); ++j) {
    if (!masked.active(j)) masked.set_value(j, 0.9);
  }
  CHECK(forward_batch(masked, x) == f);
}

TEST_CASE("dimension mismatch names the layer") {
  NetworkParams net(arch_of(3, {2}));
  const Eigen::Vector2d x(0.1, 0.2);
  try {
    forward(net, x);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

TEST_CASE("invariant checks") {
  NetworkParams net(arch_of(1, {2}));
  CHECK_FALSE(check_invariants(net).has_value());
  net.set_active(net.size() - 1, false);
  CHECK(check_invariants(net).has_value());
  NetworkParams masked(arch_of(1, {2}));
  masked.set_value(0, 0.5);
  CHECK(check_invariants(masked).has_value());
  Architecture tight = arch_of(1, {2});
  tight.sparsity = 4;
  NetworkParams over(tight);
  over.set(0, 0.5, true);
  over.set(1, 0.5, true);
  CHECK(check_invariants(over).has_value());
}

TEST_CASE("piecewise linearity inside a cell") {
  Rng rng(8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  int checked = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const NetworkParams net = random_net(arch_of(2, {3, 3}), rng);
    const Eigen::MatrixXd pts = uniform_design(2, 2, rng);
    const Eigen::VectorXd x = pts.row(0).transpose();
    const Eigen::VectorXd y = pts.row(1).transpose();
    const ActivationPattern px = activation_pattern(net, x);
    if (px != activation_pattern(net, y)) continue;
    const double lam = unif(rng);
    const Eigen::VectorXd mid = lam * x + (1.0 - lam) * y;
    // Cells are convex, so the segment stays in the cell.
    CHECK(activation_pattern(net, mid) == px);
    CHECK(std::abs(forward(net, mid) - (lam * forward(net, x) + (1.0 - lam) * forward(net, y))) <= 1e-10);
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("sup-norm surrogate grows under refinement") {
  Rng rng(21);
  const NetworkParams net = random_net(arch_of(1, {6}), rng);
  Eigen::MatrixXd coarse(11, 1), fine(101, 1);
  for (int i = 0; i < 11; ++i) coarse(i, 0) = i / 10.0;
  for (int i = 0; i < 101; ++i) fine(i, 0) = i / 100.0;
  CHECK(sup_norm_surrogate(net, fine) >= sup_norm_surrogate(net, coarse));
  CHECK(sup_norm_surrogate(NetworkParams(arch_of(1, {6})), fine) == 0.0);
}

TEST_CASE("architecture schedule") {
  const Architecture tiny = architecture_schedule(1, 0.5, 1);
  CHECK(tiny.depth() == 1);
  CHECK(tiny.widths[1] == 12);

  // alpha = p/2 with p = 2: N = floor(100 / log(1e4)) = 10.
  const Architecture a = architecture_schedule(10000, 1.0, 2);
  CHECK(a.widths[1] == 12 * 2 * 10);
  CHECK(a.depth() == static_cast<int>(std::ceil(std::log(10000.0))));

  const double n = 5000.0;
  const double ratio = schedule_width_raw(2 * n, 0.6, 1) / schedule_width_raw(n, 0.6, 1);
  CHECK(ratio == doctest::Approx(std::pow(2.0, 1.0 / 2.2) * std::log(n) / std::log(2 * n)).epsilon(1e-12));
  CHECK_THROWS_AS(architecture_schedule(100, 2.0, 2), ValueError);
}

TEST_CASE("construction with one connected node") {
  const Architecture a = arch_of(2, {3});
  NetworkParams net(a);
  Rng rng(2);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (std::size_t j = 0; j < a.deep_count(); ++j) net.set(j, unif(rng), true);
  RowMatrix top(1, 3);
  top << 0.9, 0.0, 0.0;
  net.set_weights(2, top);
  const Construction c = construct_full_top(net);
  const RowMatrix route = c.net.weights(2);
  for (int j = 0; j < 3; ++j) {
    CHECK(route(j, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(route(j, 1) == 0.0);
    CHECK(route(j, 2) == 0.0);
  }
  CHECK(c.net.weights(3) == RowMatrix::Ones(1, 3));
  const Eigen::MatrixXd x = uniform_design(1000, 2, rng);
  CHECK((forward_batch(net, x) - forward_batch(c.net, x)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("construction with a dense top layer routes diagonally") {
  Rng rng(4);
  const NetworkParams net = random_net(arch_of(1, {4}), rng, 1.0);
  const Construction c = construct_full_top(net);
  const RowMatrix route = c.net.weights(2);
  const RowMatrix top = net.weights(2);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(route(i, j) == (i == j ? std::abs(top(0, i)) : 0.0));
  }
  const Eigen::MatrixXd x = uniform_design(1000, 1, rng);
  CHECK((forward_batch(net, x) - forward_batch(c.net, x)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("construction relabels when the first node is unconnected") {
  Rng rng(6);
  NetworkParams net = random_net(arch_of(2, {3}), rng, 1.0);
  RowMatrix top(1, 3);
  top << 0.0, -0.4, 0.0;
  net.set_weights(2, top);
  const Construction c = construct_full_top(net);
  CHECK(c.relabeled);
  CHECK(c.node_order[0] == 1);
  const Eigen::MatrixXd x = uniform_design(1000, 2, rng);
  CHECK((forward_batch(net, x) - forward_batch(c.net, x)).cwiseAbs().maxCoeff() <= 1e-12);

  net.set_weights(2, RowMatrix::Zero(1, 3));
  CHECK_THROWS_WITH_AS(construct_full_top(net), "no connected output node", ValueError);
}

TEST_CASE("construction sparsity accounting on random nets") {
  Rng rng(10);
  std::bernoulli_distribution keep(0.5);
  for (int rep = 0; rep < 50; ++rep) {
    const int depth = 1 + rep % 2;
    NetworkParams net = random_net(arch_of(2, std::vector<int>(static_cast<std::size_t>(depth), 2 + rep % 4)), rng);
    RowMatrix top = net.weights(depth + 1);
    for (Eigen::Index k = 0; k < top.cols(); ++k) {
      if (keep(rng)) top(0, k) = 0.0;
    }
    if ((top.array() == 0.0).all()) top(0, top.cols() - 1) = 0.5;
    net.set_weights(depth + 1, top);
    const Construction c = construct_full_top(net);
    CHECK(c.s_new == c.s_star + 2 * static_cast<std::size_t>(net.arch().top_width()) - c.top_nonzero);
    CHECK(c.s_new <= c.bound);
    const Eigen::MatrixXd x = uniform_design(200, 2, rng);
    CHECK((forward_batch(net, x) - forward_batch(c.net, x)).cwiseAbs().maxCoeff() <= 1e-12);
  }
}
