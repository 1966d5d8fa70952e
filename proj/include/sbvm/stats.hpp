#pragma once

#include <functional>
#include <span>
#include <vector>

namespace sbvm::stats {

double normal_cdf(double x);
double normal_quantile(double prob);

/// sup_x |F_m(x) - F(x)| for a continuous reference CDF, evaluated at the
/// sorted sample on both sides of each jump.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Asymptotic two-sided Kolmogorov critical value sqrt(-log(alpha/2)/2)/sqrt(m).
double ks_critical_value(double alpha, std::size_t m);
/// Asymptotic p-value of sqrt(m) * D under the Kolmogorov distribution.
double ks_pvalue(double statistic, std::size_t m);

/// (1/m) sum_i |x_(i) - Phi^{-1}((i - 0.5)/m)|.
double w1_to_normal(std::span<const double> sample);

/// Type-7 (linear interpolation) sample quantile.
double quantile(std::span<const double> sample, double prob);
double quantile_sorted(std::span<const double> sorted, double prob);

double mean(std::span<const double> v);
double variance(std::span<const double> v);

/// Upper tail P(chi2_df > x).
double chi_square_sf(double x, double df);
/// Pearson statistic of observed counts against expected probabilities.
double chi_square_statistic(std::span<const double> observed, std::span<const double> probs);

}  // namespace sbvm::stats
