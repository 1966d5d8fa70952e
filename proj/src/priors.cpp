#include "sbvm/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "sbvm/error.hpp"

namespace sbvm {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

SlabKind parse_slab_kind(const std::string& s) {
  if (s == "uniform-deep") return SlabKind::UniformDeep;
  if (s == "all-gaussian") return SlabKind::AllGaussian;
  throw ValueError("unknown slab kind '" + s + "'");
}

std::string to_string(SlabKind k) { return k == SlabKind::UniformDeep ? "uniform-deep" : "all-gaussian"; }

void PriorSpec::validate() const {
  arch.validate();
  if (!(lambda_s > 0.0)) throw ValueError("lambda_s must be positive");
  if (adaptive_N && !(lambda_N > 0.0)) throw ValueError("lambda_N must be positive");
  if (width_unit < 0) throw ValueError("width_unit must be >= 0");
}

double log_binomial(std::size_t n, std::size_t k) {
  if (k > n) return kNegInf;
  const auto nd = static_cast<double>(n);
  const auto kd = static_cast<double>(k);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
}

double log_normal_pdf(double x) { return -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * x * x; }

double width_prior_log_pmf(std::size_t width_n, double lambda) {
  if (width_n < 1) return kNegInf;
  const auto n = static_cast<double>(width_n);
  return n * std::log(lambda) - std::log(std::expm1(lambda)) - std::lgamma(n + 1.0);
}

std::vector<double> sparsity_prior_pmf(const Architecture& arch, double lambda_s) {
  const std::size_t lo = arch.top_size();
  const std::size_t hi = arch.param_count();
  std::vector<double> pmf(hi - lo + 1);
  // Shifted by the smallest exponent to avoid underflow.
  for (std::size_t i = 0; i < pmf.size(); ++i) pmf[i] = std::exp(-lambda_s * static_cast<double>(i));
  const double z = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (auto& v : pmf) v /= z;
  return pmf;
}

double log_slab(SlabKind kind, bool top, double value) {
  if (top || kind == SlabKind::AllGaussian) return log_normal_pdf(value);
  return std::abs(value) <= 1.0 ? -std::numbers::ln2 : kNegInf;
}

NetworkParams sample_prior(const PriorSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return sample_prior(spec, rng);
}

NetworkParams sample_prior(const PriorSpec& in, Rng& rng) {
  PriorSpec spec = in;
  spec.validate();
  if (spec.adaptive_N) {
    // Zero-truncated Poisson by rejection.
    std::poisson_distribution<int> pois(spec.lambda_N);
    int width_n = 0;
    while (width_n < 1) width_n = pois(rng);
    const int w = spec.resolved_width_unit() * width_n;
    std::vector<int> hidden(static_cast<std::size_t>(spec.arch.depth()), w);
    spec.arch = make_architecture(spec.arch.input_dim(), hidden, spec.arch.sparsity, spec.arch.sup_bound);
  }
  const Architecture& arch = spec.arch;
  const std::size_t t = arch.param_count();
  const std::size_t deep = arch.deep_count();

  std::size_t s = std::min(arch.sparsity, t);
  if (spec.adaptive_s) {
    const auto pmf = sparsity_prior_pmf(arch, spec.lambda_s);
    std::discrete_distribution<std::size_t> pick(pmf.begin(), pmf.end());
    s = arch.top_size() + pick(rng);
  }
  const std::size_t active_deep = s - arch.top_size();

  // Uniform subset of deep slots of size active_deep (partial Fisher-Yates).
  std::vector<std::size_t> slots(deep);
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  for (std::size_t i = 0; i < active_deep; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, deep - 1);
    std::swap(slots[i], slots[pick(rng)]);
  }
  std::sort(slots.begin(), slots.begin() + static_cast<std::ptrdiff_t>(active_deep));

  Architecture out_arch = arch;
  if (spec.adaptive_s) out_arch.sparsity = t;
  NetworkParams net(out_arch);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < active_deep; ++i) {
    const double v = spec.slab == SlabKind::UniformDeep ? unif(rng) : normal(rng);
    net.set(slots[i], v, true);
  }
  for (std::size_t j = arch.top_offset(); j < t; ++j) net.set(j, normal(rng), true);
  return net;
}

LogPrior log_prior(const NetworkParams& net, const PriorSpec& spec) {
  const Architecture& arch = net.arch();
  LogPrior lp;
  const std::size_t off = arch.top_offset();
  bool top_ok = true;
  for (std::size_t j = off; j < net.size(); ++j) top_ok = top_ok && net.active(j);
  const std::size_t s = net.active_count();
  const std::size_t deep_active = net.active_deep_count();

  if (!top_ok) {
    lp.gamma_term = kNegInf;
  } else if (!spec.adaptive_s && s != arch.sparsity) {
    lp.gamma_term = kNegInf;
  } else {
    lp.gamma_term = -log_binomial(arch.deep_count(), deep_active);
  }

  for (std::size_t j = 0; j < net.size(); ++j) {
    if (!net.active(j)) {
      if (net.value(j) != 0.0) lp.slab_term = kNegInf;
      continue;
    }
    lp.slab_term += log_slab(spec.slab, j >= off, net.value(j));
  }

  if (spec.adaptive_s) {
    const auto pmf = sparsity_prior_pmf(arch, spec.lambda_s);
    lp.s_term = s < arch.top_size() || s > arch.param_count() ? kNegInf : std::log(pmf[s - arch.top_size()]);
  }
  if (spec.adaptive_N) {
    const int unit = spec.resolved_width_unit();
    bool uniform = true;
    const int w = arch.widths[1];
    for (int l = 1; l <= arch.depth(); ++l) uniform = uniform && arch.widths[static_cast<std::size_t>(l)] == w;
    lp.n_term = uniform && w % unit == 0 ? width_prior_log_pmf(static_cast<std::size_t>(w / unit), spec.lambda_N)
                                          : kNegInf;
  }
  return lp;
}

bool sieve_check(const NetworkParams& net, double c_n) { return net.top_layer().squaredNorm() <= c_n; }

}  // namespace sbvm
