#include "sbvm/bvm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <thread>

#include "sbvm/error.hpp"
#include "sbvm/rng.hpp"
#include "sbvm/stats.hpp"

namespace sbvm {

GaussianDistance gaussian_distance(const std::vector<double>& draws, double v0) {
  if (draws.size() < 100) throw ValueError("gaussian_distance needs at least 100 draws, got " + std::to_string(draws.size()));
  if (v0 < 0.0 || !std::isfinite(v0)) throw ValueError("v0 must be finite and nonnegative");
  GaussianDistance out;
  if (v0 == 0.0) {
    constexpr double kTol = 1e-12;
    double off = 0.0, total = 0.0;
    for (double d : draws) {
      off += std::abs(d) > kTol ? 1.0 : 0.0;
      total += std::abs(d);
    }
    out.ks = off / static_cast<double>(draws.size());
    out.w1 = total / static_cast<double>(draws.size());
    return out;
  }
  std::vector<double> z(draws);
  const double scale = std::sqrt(v0);
  for (double& v : z) v /= scale;
  out.ks = stats::ks_statistic(z, stats::normal_cdf);
  out.w1 = stats::w1_to_normal(z);
  return out;
}

std::pair<double, double> credible_interval(const std::vector<double>& draws, double level) {
  if (!(level > 0.0 && level <= 1.0)) throw ValueError("ci_level must be in (0, 1]");
  if (draws.empty()) throw ValueError("credible interval of an empty sample");
  if (level == 1.0) {
    const double inf = std::numeric_limits<double>::infinity();
    return {-inf, inf};
  }
  std::vector<double> sorted(draws);
  std::sort(sorted.begin(), sorted.end());
  return {stats::quantile_sorted(sorted, 0.5 * (1.0 - level)), stats::quantile_sorted(sorted, 0.5 * (1.0 + level))};
}

namespace {

BvmReport report_from_chain(const PosteriorChain& chain, const LanContext& ctx, const FunctionalSpec& spec,
                            double ci_level, std::uint64_t seed) {
  const BvmTargets targets = bvm_targets(ctx, spec);
  BvmReport r;
  r.n = ctx.n();
  r.kind = spec.kind;
  r.a = spec.a;
  r.n_draws = chain.size();
  r.psi_true = targets.psi_true;
  r.psi_hat = targets.psi_hat;
  r.v0 = targets.v0;
  r.ci_level = ci_level;
  r.chain_seed = seed;
  r.weights_accept = chain.weights.rate();
  r.warnings = chain.warnings;

  r.psi_draws.reserve(r.n_draws);
  for (std::size_t i = 0; i < r.n_draws; ++i) {
    r.psi_draws.push_back(spec.kind == FunctionalKind::Linear ? spec.a * chain.mean_f_trace[i]
                                                              : chain.sq_norm_trace[i]);
  }
  const double root_n = std::sqrt(static_cast<double>(r.n));
  const double scale = r.v0 > 0.0 ? std::sqrt(r.v0) : 1.0;
  r.standardized_draws.reserve(r.n_draws);
  for (double v : r.psi_draws) r.standardized_draws.push_back(root_n * (v - r.psi_hat) / scale);

  // Distances are taken on the already standardized draws.
  const GaussianDistance d = gaussian_distance(r.standardized_draws, r.v0 > 0.0 ? 1.0 : 0.0);
  r.ks_distance = d.ks;
  r.w1_distance = d.w1;
  r.psi_mean = stats::mean(r.psi_draws);
  std::tie(r.ci_lower, r.ci_upper) = credible_interval(r.psi_draws, ci_level);
  r.covered = r.ci_lower <= r.psi_true && r.psi_true <= r.ci_upper;

  std::vector<double> abs_rem;
  abs_rem.reserve(chain.remainder_trace.size());
  for (double v : chain.remainder_trace) abs_rem.push_back(std::abs(v));
  r.remainder_q90 = stats::quantile(abs_rem, 0.9);

  double s_total = 0.0;
  for (std::size_t s : chain.s_trace) s_total += static_cast<double>(s);
  r.mean_s = s_total / static_cast<double>(r.n_draws);
  return r;
}

}  // namespace

std::vector<BvmReport> bvm_experiment(const RegressionDataset& data, const PriorSpec& prior,
                                      const ChainConfig& chain_cfg, const std::vector<FunctionalSpec>& specs,
                                      double ci_level) {
  if (!data.has_oracle()) throw ValueError("oracle required: dataset has no eps column");
  if (!(ci_level > 0.0 && ci_level <= 1.0)) throw ValueError("ci_level must be in (0, 1]");
  const LanContext ctx = LanContext::from_dataset(data);
  ChainConfig cfg = chain_cfg;
  cfg.store_draws = false;
  const PosteriorChain chain = run_chain(data, prior, cfg);
  std::vector<BvmReport> out;
  for (const auto& spec : specs) out.push_back(report_from_chain(chain, ctx, spec, ci_level, cfg.seed));
  return out;
}

BvmReport bvm_experiment(const RegressionDataset& data, const PriorSpec& prior, const ChainConfig& chain_cfg,
                         const FunctionalSpec& spec, double ci_level) {
  return std::move(bvm_experiment(data, prior, chain_cfg, std::vector<FunctionalSpec>{spec}, ci_level).front());
}

ConjugatePsi conjugate_linear_psi(const NetworkParams& net, const RegressionDataset& data, double a) {
  PriorSpec prior;
  prior.arch = net.arch();
  const ChainState st(net, data, prior, ConstraintOptions{});
  const auto [mu, cov] = st.top_posterior();
  const Eigen::Index k = st.gram().rows();
  const double n = static_cast<double>(data.n());
  const Eigen::VectorXd row = st.gram().row(k - 1).transpose() * (a / n);
  return {row.dot(mu), std::sqrt(row.dot(cov * row))};
}

std::uint64_t replication_noise_seed(std::uint64_t master, std::size_t r) {
  return derive_seed(derive_seed(master, r), 0);
}

std::uint64_t replication_chain_seed(std::uint64_t master, std::size_t r) {
  return derive_seed(derive_seed(master, r), 1);
}

CoverageSummary coverage_study(std::uint64_t master_seed, std::size_t replications, const StudySetup& setup,
                               unsigned workers) {
  if (replications < 20) throw ValueError("coverage study needs at least 20 replications");
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, replications));

  std::vector<std::optional<BvmReport>> results(replications);
  std::vector<std::string> errors(replications);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t r = next++; r < replications; r = next++) {
      try {
        const RegressionDataset data = simulate(setup.truth, setup.design, replication_noise_seed(master_seed, r));
        ChainConfig cfg = setup.chain;
        cfg.seed = replication_chain_seed(master_seed, r);
        results[r] = bvm_experiment(data, setup.prior, cfg, setup.functional, setup.ci_level);
      } catch (const std::exception& e) {
        errors[r] = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  CoverageSummary s;
  s.replications = replications;
  double covered = 0.0, width = 0.0;
  std::vector<double> ks;
  for (std::size_t r = 0; r < replications; ++r) {
    if (!results[r]) {
      s.failures.push_back({r, errors[r]});
      continue;
    }
    covered += results[r]->covered ? 1.0 : 0.0;
    width += results[r]->ci_width();
    ks.push_back(results[r]->ks_distance);
    s.indices.push_back(r);
    s.reports.push_back(std::move(*results[r]));
  }
  s.completed = s.reports.size();
  if (s.completed > 0) {
    s.coverage_rate = covered / static_cast<double>(s.completed);
    s.mean_ci_width = width / static_cast<double>(s.completed);
    s.median_ks = stats::quantile(ks, 0.5);
  }
  return s;
}

}  // namespace sbvm
