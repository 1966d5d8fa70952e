#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbvm/architecture.hpp"
#include "sbvm/network.hpp"
#include "sbvm/rng.hpp"

namespace sbvm {

enum class SlabKind {
  UniformDeep,  // deep Uniform[-1, 1], top N(0, 1)
  AllGaussian,  // every coordinate N(0, 1)
};

SlabKind parse_slab_kind(const std::string& s);
std::string to_string(SlabKind k);

struct PriorSpec {
  Architecture arch;
  double lambda_N = 1.0;
  double lambda_s = 0.1;
  bool adaptive_s = false;
  /// Draw the width N when sampling. Hidden widths become width_unit * N.
  bool adaptive_N = false;
  /// Hidden units per unit of N; 0 means 12 p.
  int width_unit = 0;
  SlabKind slab = SlabKind::UniformDeep;

  int resolved_width_unit() const { return width_unit > 0 ? width_unit : 12 * arch.input_dim(); }
  void validate() const;
};

struct LogPrior {
  double gamma_term = 0.0;
  double slab_term = 0.0;
  double s_term = 0.0;
  double n_term = 0.0;

  double total() const { return gamma_term + slab_term + s_term + n_term; }
};

/// log C(n, k).
double log_binomial(std::size_t n, std::size_t k);
double log_normal_pdf(double x);

/// pi(N) = lambda^N / ((e^lambda - 1) N!) for N >= 1.
double width_prior_log_pmf(std::size_t width_n, double lambda);
/// pi(s) proportional to exp(-lambda_s s) on {p_L + 1, ..., T}; element i is s = p_L + 1 + i.
std::vector<double> sparsity_prior_pmf(const Architecture& arch, double lambda_s);
/// Log density of one slab draw at coordinate j (deep or top).
double log_slab(SlabKind kind, bool top, double value);

NetworkParams sample_prior(const PriorSpec& spec, Rng& rng);
NetworkParams sample_prior(const PriorSpec& spec, std::uint64_t seed);

/// Component-wise log prior; components are -inf where the support is violated.
LogPrior log_prior(const NetworkParams& net, const PriorSpec& spec);

/// ||W_{L+1}||^2 + b_{L+1}^2 <= c_n.
bool sieve_check(const NetworkParams& net, double c_n);

}  // namespace sbvm
