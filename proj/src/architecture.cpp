#include "sbvm/architecture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sbvm/error.hpp"

namespace sbvm {

std::size_t Architecture::param_count() const {
  std::size_t t = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    t += static_cast<std::size_t>(widths[l + 1]) * static_cast<std::size_t>(widths[l] + 1);
  }
  return t;
}

std::size_t Architecture::hidden_units() const {
  std::size_t total = 0;
  for (std::size_t l = 1; l + 1 < widths.size(); ++l) total += static_cast<std::size_t>(widths[l]);
  return total;
}

void Architecture::validate() const {
  if (widths.size() < 3) throw ValueError("architecture needs at least one hidden layer");
  for (std::size_t l = 0; l < widths.size(); ++l) {
    if (widths[l] < 1) throw ValueError("width p_" + std::to_string(l) + " must be >= 1");
  }
  if (widths.back() != 1) throw ValueError("output width p_{L+1} must be 1");
  if (sparsity <= static_cast<std::size_t>(top_width())) {
    throw ValueError("sparsity s=" + std::to_string(sparsity) + " must exceed p_L=" + std::to_string(top_width()));
  }
  if (!(sup_bound > 0.0)) throw ValueError("sup bound F must be positive");
}

Architecture make_architecture(int input_dim, const std::vector<int>& hidden, std::size_t sparsity,
                               double sup_bound) {
  Architecture a;
  a.widths.reserve(hidden.size() + 2);
  a.widths.push_back(input_dim);
  a.widths.insert(a.widths.end(), hidden.begin(), hidden.end());
  a.widths.push_back(1);
  a.sparsity = sparsity;
  a.sup_bound = sup_bound;
  return a;
}

double schedule_width_raw(double n, double alpha, int p, double c_width) {
  const double log_n = std::log(n);
  if (!(log_n > 0.0)) return 1.0;
  const double e = static_cast<double>(p) / (2.0 * alpha + static_cast<double>(p));
  return c_width * std::pow(n, e) / log_n;
}

Architecture architecture_schedule(std::size_t n, double alpha, int p, const ScheduleConstants& constants) {
  if (n < 1) throw ValueError("schedule requires n >= 1");
  if (p < 1) throw ValueError("schedule requires p >= 1");
  if (!(alpha > 0.0) || alpha >= static_cast<double>(p)) {
    throw ValueError("schedule requires 0 < alpha < p");
  }
  const double nd = static_cast<double>(n);
  const double log_n = std::log(nd);
  const int depth = std::max(1, static_cast<int>(std::ceil(constants.c_depth * log_n)));
  const int width_n = std::max(1, static_cast<int>(std::floor(schedule_width_raw(nd, alpha, p, constants.c_width))));
  const double e = static_cast<double>(p) / (2.0 * alpha + static_cast<double>(p));
  const auto s_star = static_cast<std::size_t>(std::max(1.0, std::ceil(constants.c_sparsity * std::pow(nd, e))));

  Architecture a = make_architecture(p, std::vector<int>(static_cast<std::size_t>(depth), 12 * p * width_n), 0);
  a.sparsity = std::min(a.param_count(), s_star + static_cast<std::size_t>(24 * p * width_n));
  return a;
}

}  // namespace sbvm
