#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sbvm/datagen.hpp"
#include "sbvm/functionals.hpp"
#include "sbvm/priors.hpp"
#include "sbvm/sampler.hpp"

namespace sbvm {

struct GaussianDistance {
  double ks = 0.0;
  double w1 = 0.0;
};

/// KS and matched-quantile W1 distance of draws/sqrt(v0) to N(0, 1).
/// With v0 == 0 the reference is the point mass at zero: ks is the fraction
/// of draws farther than 1e-12 from zero and w1 the mean absolute draw.
GaussianDistance gaussian_distance(const std::vector<double>& draws, double v0);

/// Equal-tailed interval from type-7 quantiles. Level 1 gives (-inf, inf).
std::pair<double, double> credible_interval(const std::vector<double>& draws, double level);

struct BvmReport {
  std::size_t n = 0;
  FunctionalKind kind = FunctionalKind::Linear;
  double a = 1.0;
  std::size_t n_draws = 0;
  double psi_true = 0.0;
  double psi_hat = 0.0;
  double v0 = 0.0;
  double psi_mean = 0.0;
  std::vector<double> psi_draws;
  std::vector<double> standardized_draws;  // sqrt(n)(psi - psi_hat)/sqrt(v0); unscaled when v0 == 0
  double ks_distance = 0.0;
  double w1_distance = 0.0;
  double ci_level = 0.95;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  bool covered = false;
  double remainder_q90 = 0.0;  // 90th percentile of |r(f, f0)|
  double weights_accept = 0.0;
  double mean_s = 0.0;
  std::uint64_t chain_seed = 0;
  std::vector<std::string> warnings;

  double ci_width() const { return ci_upper - ci_lower; }
};

/// Runs the chain on a simulated dataset and compares the posterior of the
/// functional with its Gaussian limit. Requires the noise oracle.
BvmReport bvm_experiment(const RegressionDataset& data, const PriorSpec& prior, const ChainConfig& chain_cfg,
                         const FunctionalSpec& spec, double ci_level = 0.95);

/// One chain, one report per functional.
std::vector<BvmReport> bvm_experiment(const RegressionDataset& data, const PriorSpec& prior,
                                      const ChainConfig& chain_cfg, const std::vector<FunctionalSpec>& specs,
                                      double ci_level = 0.95);

/// Exact posterior of the linear functional when the deep weights are held
/// fixed at those of `net`.
struct ConjugatePsi {
  double mean = 0.0;
  double sd = 0.0;
};
ConjugatePsi conjugate_linear_psi(const NetworkParams& net, const RegressionDataset& data, double a);

/// Everything a replication needs apart from its seeds.
struct StudySetup {
  TruthFunction truth;
  Eigen::MatrixXd design;
  PriorSpec prior;
  ChainConfig chain;
  FunctionalSpec functional;
  double ci_level = 0.95;
};

struct ReplicationFailure {
  std::size_t index = 0;
  std::string message;
};

struct CoverageSummary {
  std::size_t replications = 0;
  std::size_t completed = 0;
  double coverage_rate = 0.0;
  double mean_ci_width = 0.0;
  double median_ks = 0.0;
  std::vector<std::size_t> indices;  // replication index of each report
  std::vector<BvmReport> reports;
  std::vector<ReplicationFailure> failures;

  /// More than 10% of the replications failed.
  bool failed() const { return 10 * failures.size() > replications; }
};

/// Noise and chain seeds of replication r.
std::uint64_t replication_noise_seed(std::uint64_t master, std::size_t r);
std::uint64_t replication_chain_seed(std::uint64_t master, std::size_t r);

/// Repeats bvm_experiment over fresh noise on the fixed design. Replications
/// run on `workers` threads (0 = hardware concurrency); the result does not
/// depend on the worker count.
CoverageSummary coverage_study(std::uint64_t master_seed, std::size_t replications, const StudySetup& setup,
                               unsigned workers = 0);

}  // namespace sbvm
