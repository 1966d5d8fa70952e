#include "sbvm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "sbvm/error.hpp"

namespace sbvm::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    if (prob == 0.0) return -std::numeric_limits<double>::infinity();
    if (prob == 1.0) return std::numeric_limits<double>::infinity();
    throw ValueError("probability outside [0, 1]");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw ValueError("empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double m = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  return d;
}

double ks_critical_value(double alpha, std::size_t m) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(m));
}

double ks_pvalue(double statistic, std::size_t m) {
  const double t = statistic * std::sqrt(static_cast<double>(m));
  if (t < 1e-3) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    p += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

double w1_to_normal(std::span<const double> sample) {
  if (sample.empty()) throw ValueError("empty sample");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double m = static_cast<double>(s.size());
  double w = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    w += std::abs(s[i] - normal_quantile((static_cast<double>(i) + 0.5) / m));
  }
  return w / m;
}

double quantile_sorted(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw ValueError("empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> sample, double prob) {
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  return quantile_sorted(s, prob);
}

double mean(std::span<const double> v) {
  if (v.empty()) throw ValueError("empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.size() < 2) throw ValueError("variance needs two values");
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return ss / static_cast<double>(v.size() - 1);
}

double chi_square_sf(double x, double df) {
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

double chi_square_statistic(std::span<const double> observed, std::span<const double> probs) {
  if (observed.size() != probs.size()) throw DimensionError("observed and expected lengths differ");
  const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
  double chi = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = total * probs[i];
    if (e > 0.0) chi += (observed[i] - e) * (observed[i] - e) / e;
  }
  return chi;
}

}  // namespace sbvm::stats
