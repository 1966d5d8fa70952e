#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbvm/datagen.hpp"
#include "sbvm/network.hpp"
#include "sbvm/priors.hpp"
#include "sbvm/rng.hpp"

namespace sbvm {

/// Per-sweep move-type probabilities. `update_weights` is the chance of
/// skipping the gamma move; the rest pick birth, death or swap.
struct MoveProbs {
  double update_weights = 0.25;
  double birth = 0.25;
  double death = 0.25;
  double swap = 0.25;
};

struct ChainConfig {
  std::size_t n_iter = 2000;
  std::size_t burn_in = 500;
  std::size_t thin = 1;
  double rw_scale = 0.2;
  MoveProbs move_probs;
  std::uint64_t seed = 1;
  bool enforce_F = false;
  std::optional<double> enforce_sieve;
  /// Integrate the Gaussian top layer out of deep and gamma moves. Ignored
  /// (conditional likelihood used) when a top-layer constraint is enforced.
  bool collapse_top = true;
  /// Keep deep weights and gamma at their initial values; only the top layer moves.
  bool freeze_deep = false;
  /// Target the prior alone (data-less mode).
  bool use_likelihood = true;
  bool store_draws = true;
  double adapt_rate = 1.0;
  double target_accept = 0.3;
  std::size_t gibbs_retry_cap = 100;

  void validate() const;
};

enum class MoveType { None, Birth, Death, Swap };
std::string to_string(MoveType m);

struct AcceptStats {
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  double rate() const { return attempts == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(attempts); }
};

struct PosteriorChain {
  std::vector<NetworkParams> draws;
  std::vector<std::size_t> iterations;
  std::vector<double> loglik_trace;
  std::vector<std::size_t> s_trace;
  std::vector<double> mean_f_trace;     // (1/n) sum f(x_i)
  std::vector<double> sq_norm_trace;    // ||f||_L^2
  std::vector<double> remainder_trace;  // r(f, f0); empty without truth values
  std::vector<double> scale_trace;      // random-walk scale in force at each stored draw
  AcceptStats weights, birth, death, swap;  // post burn-in
  double final_rw_scale = 0.0;
  std::vector<std::string> warnings;

  std::size_t size() const { return s_trace.size(); }
};

/// Exact Gaussian likelihood with unit noise variance.
double log_likelihood(const NetworkParams& net, const RegressionDataset& data);

/// Reflects a value into [-1, 1].
double reflect_unit(double v);

/// Log of the prior-times-proposal part of a gamma-move acceptance ratio
/// (everything except the likelihood ratio), for a move from `active_deep`
/// active deep slots out of `deep_slots`.
double gamma_move_log_ratio(MoveType move, std::size_t deep_slots, std::size_t active_deep, double lambda_s,
                            bool adaptive_s, const MoveProbs& probs);

struct ConstraintOptions {
  bool enforce_F = false;
  std::optional<double> sieve;
  bool collapse_top = true;
  bool use_likelihood = true;
  std::size_t gibbs_retry_cap = 100;

  static ConstraintOptions from(const ChainConfig& cfg);
  bool collapsed() const { return collapse_top && !enforce_F && !sieve; }
};

/// Sampler state: a network plus cached layer outputs and the Gram
/// statistics of the top-layer design M = [Z_L, 1].
class ChainState {
 public:
  ChainState(NetworkParams net, const RegressionDataset& data, PriorSpec prior, ConstraintOptions opts);

  const NetworkParams& net() const { return net_; }
  const Eigen::MatrixXd& gram() const { return gram_; }  // M'M
  const Eigen::VectorXd& cross() const { return cross_; }  // M'Y
  const Eigen::MatrixXd& features() const { return z_.back(); }

  /// Likelihood part of the log target (marginal if collapsed) plus 0/-inf constraint indicators.
  double log_target() const { return target_; }
  double conditional_log_likelihood() const;
  /// Posterior mean and covariance of the top layer given the deep weights.
  std::pair<Eigen::VectorXd, Eigen::MatrixXd> top_posterior() const;

  /// Random-walk step on an active deep slot with standardized increment z
  /// and uniform u deciding acceptance.
  bool rw_step(std::size_t slot, double scale, double z, double u);
  bool rw_move(Rng& rng, double scale);
  /// One gamma move; returns the move attempted and whether it was accepted.
  std::pair<MoveType, bool> gamma_move(Rng& rng, const MoveProbs& probs);
  void gibbs_top(Rng& rng);

  std::vector<std::size_t> active_deep_slots() const;

  double mean_f() const;
  double sq_norm() const;
  /// r(f, f0) from the Gram statistics; NaN without truth values.
  double remainder() const;

 private:
  struct Undo {
    std::size_t slot = 0;
    double value = 0.0;
    bool active = false;
    int first_layer = 0;
    int unit = 0;
    std::vector<Eigen::MatrixXd> layers;  // saved Z_first..Z_L, or one column when first == L
    Eigen::MatrixXd gram;
    Eigen::VectorXd cross, truth_cross;
    double target = 0.0;
  };

  Undo change_slot(std::size_t slot, double value, bool active);
  void undo(Undo&& u);
  void refresh_gram();
  void refresh_gram_column(int unit);
  void recompute_unit(int layer, int unit);
  void recompute_layer(int layer);
  double compute_target() const;
  bool top_constraints_ok(const Eigen::VectorXd& theta) const;

  NetworkParams net_;
  const RegressionDataset* data_;
  PriorSpec prior_;
  ConstraintOptions opts_;
  std::vector<Eigen::MatrixXd> z_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd cross_;
  Eigen::VectorXd truth_cross_;
  double yy_ = 0.0;
  double f0f0_ = 0.0;
  double target_ = 0.0;
};

/// Fresh draw of (W_{L+1}, b_{L+1}) from N((M'M + I)^{-1} M'Y, (M'M + I)^{-1}).
NetworkParams gibbs_top_layer(const NetworkParams& net, const RegressionDataset& data, Rng& rng,
                              const ConstraintOptions& opts = {});

struct MoveResult {
  NetworkParams net;
  MoveType move = MoveType::None;
  bool accepted = false;
};

MoveResult rw_metropolis_deep(const NetworkParams& net, const RegressionDataset& data, const PriorSpec& spec,
                              Rng& rng, double scale, const ConstraintOptions& opts = {});
MoveResult birth_death_swap(const NetworkParams& net, const RegressionDataset& data, const PriorSpec& spec,
                            Rng& rng, const MoveProbs& probs = {}, const ConstraintOptions& opts = {});

/// Full sampler: per sweep one gamma move, one random-walk move per active
/// deep coordinate (random order), then a Gibbs draw of the top layer.
/// The random-walk scale adapts toward `target_accept` during burn-in only.
PosteriorChain run_chain(const RegressionDataset& data, const PriorSpec& spec, const ChainConfig& cfg,
                         std::optional<NetworkParams> init = std::nullopt);

}  // namespace sbvm
