#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <numbers>

#include "sbvm/priors.hpp"
#include "sbvm/stats.hpp"
#include "support.hpp"

using namespace sbvm;
using sbvm::testing::arch_of;

namespace {

// Tiny architecture with T - p_L - 1 = 4 deep coordinates: widths (1, 2, 1)
// has 4 deep and 3 top coordinates.
PriorSpec tiny_spec(std::size_t s) {
  PriorSpec spec;
  spec.arch = arch_of(1, {2});
  spec.arch.sparsity = s;
  return spec;
}

}  // namespace

TEST_CASE("log binomial and normal density") {
  CHECK(log_binomial(4, 1) == doctest::Approx(std::log(4.0)));
  CHECK(log_binomial(10, 3) == doctest::Approx(std::log(120.0)));
  CHECK(log_binomial(6, 0) == 0.0);
  CHECK(log_normal_pdf(0.0) == doctest::Approx(-0.5 * std::log(2.0 * std::numbers::pi)));
}

TEST_CASE("gamma term with one active deep coordinate") {
  PriorSpec spec = tiny_spec(4);
  NetworkParams net(spec.arch);
  net.set(2, 0.5, true);
  const LogPrior lp = log_prior(net, spec);
  CHECK(lp.gamma_term == doctest::Approx(-std::log(4.0)));
  // Deep slab: -log 2; top zeros: 3 log phi(0).
  CHECK(lp.slab_term == doctest::Approx(-std::numbers::ln2 + 3.0 * log_normal_pdf(0.0)));
}

TEST_CASE("prior support violations give -inf") {
  PriorSpec spec = tiny_spec(4);
  NetworkParams net(spec.arch);
  net.set(0, 1.5, true);
  CHECK(log_prior(net, spec).slab_term == -INFINITY);
  net.set(0, 0.5, true);
  net.set_active(net.size() - 1, false);
  net.set_value(net.size() - 1, 0.0);
  CHECK(log_prior(net, spec).gamma_term == -INFINITY);

  NetworkParams zero_top(spec.arch);
  zero_top.set(1, -0.2, true);
  CHECK(std::isfinite(log_prior(zero_top, spec).total()));

  PriorSpec gauss = spec;
  gauss.slab = SlabKind::AllGaussian;
  NetworkParams wide(spec.arch);
  wide.set(0, 1.5, true);
  CHECK(std::isfinite(log_prior(wide, gauss).slab_term));
}

TEST_CASE("sampled nets lie in the prior support") {
  PriorSpec spec;
  spec.arch = arch_of(2, {4, 3});
  spec.arch.sparsity = 20;
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const NetworkParams net = sample_prior(spec, rng);
    CHECK(net.active_count() == 20);
    for (std::size_t j = spec.arch.top_offset(); j < net.size(); ++j) CHECK(net.active(j));
    CHECK(std::isfinite(log_prior(net, spec).total()));
  }
  spec.adaptive_s = true;
  for (int i = 0; i < 200; ++i) {
    const NetworkParams net = sample_prior(spec, rng);
    CHECK(net.active_count() > static_cast<std::size_t>(spec.arch.top_width()));
    CHECK(net.active_count() <= spec.arch.param_count());
    CHECK(std::isfinite(log_prior(net, spec).total()));
  }
}

TEST_CASE("minimal sparsity picks the deep coordinate uniformly") {
  const PriorSpec spec = tiny_spec(4);
  Rng rng(5);
  std::vector<double> counts(4, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const NetworkParams net = sample_prior(spec, rng);
    REQUIRE(net.active_deep_count() == 1);
    for (std::size_t j = 0; j < 4; ++j) counts[j] += net.active(j) ? 1.0 : 0.0;
  }
  const double expect = draws / 4.0;
  const double sd = std::sqrt(draws * 0.25 * 0.75);
  for (double c : counts) CHECK(std::abs(c - expect) <= 3.0 * sd);
}

TEST_CASE("gamma patterns are uniform for fixed s") {
  // s = p_L + 1 + 2: C(4, 2) = 6 patterns.
  const PriorSpec spec = tiny_spec(5);
  Rng rng(6);
  std::map<std::string, double> counts;
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) {
    const NetworkParams net = sample_prior(spec, rng);
    std::string key;
    for (std::size_t j = 0; j < 4; ++j) key.push_back(net.active(j) ? '1' : '0');
    counts[key] += 1.0;
  }
  REQUIRE(counts.size() == 6);
  std::vector<double> obs, probs(6, 1.0 / 6.0);
  for (const auto& [k, c] : counts) obs.push_back(c);
  const double stat = stats::chi_square_statistic(obs, probs);
  CHECK(stats::chi_square_sf(stat, 5.0) > 0.01);
}

TEST_CASE("deep slab draws are uniform on [-1, 1]") {
  PriorSpec spec;
  spec.arch = arch_of(1, {6});
  spec.arch.sparsity = 10;
  Rng rng(7);
  std::vector<double> values;
  while (values.size() < 100000) {
    const NetworkParams net = sample_prior(spec, rng);
    for (std::size_t j = 0; j < spec.arch.deep_count(); ++j) {
      if (net.active(j)) values.push_back(net.value(j));
    }
  }
  values.resize(100000);
  const double ks = stats::ks_statistic(values, [](double v) { return std::clamp((v + 1.0) / 2.0, 0.0, 1.0); });
  CHECK(ks < stats::ks_critical_value(0.01, values.size()));
}

TEST_CASE("width prior normalizes") {
  for (double lambda : {0.3, 1.0, 4.0}) {
    double total = 0.0;
    for (std::size_t n = 1; n < 200; ++n) {
      const double p = std::exp(width_prior_log_pmf(n, lambda));
      total += p;
      if (n > 5 && p < 1e-16) break;
    }
    CHECK(std::abs(total - 1.0) <= 1e-10);
  }
  CHECK(width_prior_log_pmf(0, 1.0) == -INFINITY);
}

TEST_CASE("sparsity prior is a normalized exponential on its support") {
  const Architecture a = arch_of(1, {3});
  const auto pmf = sparsity_prior_pmf(a, 0.4);
  CHECK(pmf.size() == a.param_count() - a.top_size() + 1);
  double total = 0.0;
  for (double p : pmf) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 1; i < pmf.size(); ++i) CHECK(pmf[i] / pmf[i - 1] == doctest::Approx(std::exp(-0.4)));
}

TEST_CASE("adaptive width draws use the configured unit") {
  PriorSpec spec;
  spec.arch = arch_of(2, {24, 24});
  spec.adaptive_N = true;
  spec.adaptive_s = true;
  Rng rng(8);
  for (int i = 0; i < 50; ++i) {
    const NetworkParams net = sample_prior(spec, rng);
    CHECK(net.arch().widths[1] % 24 == 0);
    CHECK(net.arch().widths[1] == net.arch().widths[2]);
    PriorSpec at = spec;
    at.arch = net.arch();
    CHECK(std::isfinite(log_prior(net, at).n_term));
  }
}

TEST_CASE("sieve check") {
  NetworkParams net(arch_of(1, {3}));
  CHECK(sieve_check(net, 0.5));
  net.set_top_layer(Eigen::VectorXd::Ones(4));
  CHECK(sieve_check(net, 4.0));
  CHECK_FALSE(sieve_check(net, 3.9));
}

TEST_CASE("prior mass outside the sieve is a chi-square tail") {
  PriorSpec spec;
  spec.arch = arch_of(1, {3});
  Rng rng(9);
  const int draws = 100000;
  for (double cn : {2.0, 4.0, 8.0}) {
    int out = 0;
    for (int i = 0; i < draws; ++i) out += sieve_check(sample_prior(spec, rng), cn) ? 0 : 1;
    const double expect = boost::math::cdf(boost::math::complement(boost::math::chi_squared(4.0), cn));
    const double se = std::sqrt(expect * (1.0 - expect) / draws);
    CHECK(std::abs(out / static_cast<double>(draws) - expect) <= 3.0 * se);
  }
}
