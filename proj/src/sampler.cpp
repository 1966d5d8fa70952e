#include "sbvm/sampler.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sbvm/error.hpp"

namespace sbvm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

struct EffectiveProbs {
  double none, birth, death, swap;
};

EffectiveProbs effective_probs(const MoveProbs& p, bool adaptive_s) {
  EffectiveProbs e{p.update_weights, p.birth, p.death, p.swap};
  if (!adaptive_s) {
    e.swap += e.birth + e.death;
    e.birth = e.death = 0.0;
  }
  const double total = e.none + e.birth + e.death + e.swap;
  e.none /= total;
  e.birth /= total;
  e.death /= total;
  e.swap /= total;
  return e;
}

bool accept(double log_ratio, double u) {
  if (std::isnan(log_ratio)) return false;
  return std::log(u) < log_ratio;
}

Eigen::LLT<Eigen::MatrixXd> factor(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    throw NumericalError("Cholesky of I + M'M failed (condition number " + std::to_string(cond) + ")");
  }
  return llt;
}

}  // namespace

void ChainConfig::validate() const {
  const double total = move_probs.update_weights + move_probs.birth + move_probs.death + move_probs.swap;
  if (std::abs(total - 1.0) > 1e-9) throw ValueError("move_probs must sum to 1");
  if (move_probs.update_weights < 0 || move_probs.birth < 0 || move_probs.death < 0 || move_probs.swap < 0) {
    throw ValueError("move_probs must be nonnegative");
  }
  if (n_iter < burn_in) throw ValueError("n_iter must be >= burn_in");
  if (thin < 1) throw ValueError("thin must be >= 1");
  if (!(rw_scale > 0.0)) throw ValueError("rw_scale must be positive");
  if (enforce_sieve && !(*enforce_sieve > 0.0)) throw ValueError("sieve bound must be positive");
}

std::string to_string(MoveType m) {
  switch (m) {
    case MoveType::Birth: return "birth";
    case MoveType::Death: return "death";
    case MoveType::Swap: return "swap";
    default: return "none";
  }
}

ConstraintOptions ConstraintOptions::from(const ChainConfig& cfg) {
  ConstraintOptions o;
  o.enforce_F = cfg.enforce_F;
  o.sieve = cfg.enforce_sieve;
  o.collapse_top = cfg.collapse_top;
  o.use_likelihood = cfg.use_likelihood;
  o.gibbs_retry_cap = cfg.gibbs_retry_cap;
  return o;
}

double log_likelihood(const NetworkParams& net, const RegressionDataset& data) {
  const Eigen::VectorXd r = data.y - forward_batch(net, data.x);
  return -0.5 * static_cast<double>(data.n()) * kLog2Pi - 0.5 * r.squaredNorm();
}

double reflect_unit(double v) {
  double y = std::fmod(v + 1.0, 4.0);
  if (y < 0.0) y += 4.0;
  if (y > 2.0) y = 4.0 - y;
  return y - 1.0;
}

double gamma_move_log_ratio(MoveType move, std::size_t deep_slots, std::size_t active_deep, double lambda_s,
                            bool adaptive_s, const MoveProbs& probs) {
  const EffectiveProbs e = effective_probs(probs, adaptive_s);
  const auto d = static_cast<double>(deep_slots);
  const auto a = static_cast<double>(active_deep);
  switch (move) {
    case MoveType::Birth:
      if (active_deep >= deep_slots || e.birth <= 0.0) return kNegInf;
      return log_binomial(deep_slots, active_deep) - log_binomial(deep_slots, active_deep + 1) - lambda_s +
             std::log(e.death / (a + 1.0)) - std::log(e.birth / (d - a));
    case MoveType::Death:
      if (active_deep == 0 || e.death <= 0.0) return kNegInf;
      return log_binomial(deep_slots, active_deep) - log_binomial(deep_slots, active_deep - 1) + lambda_s +
             std::log(e.birth / (d - a + 1.0)) - std::log(e.death / a);
    case MoveType::Swap:
      return active_deep == 0 || active_deep >= deep_slots ? kNegInf : 0.0;
    default:
      return 0.0;
  }
}

ChainState::ChainState(NetworkParams net, const RegressionDataset& data, PriorSpec prior, ConstraintOptions opts)
    : net_(std::move(net)), data_(&data), prior_(std::move(prior)), opts_(opts) {
  if (data.p() != net_.arch().input_dim() && data.n() > 0) {
    throw DimensionError("layer 1: dataset has p=" + std::to_string(data.p()) + ", network expects " +
                         std::to_string(net_.arch().input_dim()));
  }
  for (std::size_t j = 0; j < net_.size(); ++j) {
    if (!net_.active(j)) net_.set_value(j, 0.0);
  }
  const int depth = net_.arch().depth();
  z_.resize(static_cast<std::size_t>(depth) + 1);
  z_[0] = data.n() > 0 ? data.x : Eigen::MatrixXd(0, net_.arch().input_dim());
  for (int l = 1; l <= depth; ++l) recompute_layer(l);
  yy_ = data.y.squaredNorm();
  if (data.f0) f0f0_ = data.f0->squaredNorm();
  refresh_gram();
  target_ = compute_target();
}

void ChainState::recompute_layer(int layer) {
  const auto& ly = net_.layout(layer);
  const double* base = net_.values().data();
  Eigen::Map<const RowMatrix> w(base + ly.weight_offset, ly.rows, ly.cols);
  Eigen::Map<const Eigen::VectorXd> b(base + ly.shift_offset, ly.rows);
  const auto l = static_cast<std::size_t>(layer);
  Eigen::MatrixXd a = z_[l - 1] * w.transpose();
  a.rowwise() += b.transpose();
  z_[l] = a.cwiseMax(0.0);
}

void ChainState::recompute_unit(int layer, int unit) {
  const auto& ly = net_.layout(layer);
  const double* base = net_.values().data();
  Eigen::Map<const Eigen::VectorXd> w(base + ly.weight_offset + static_cast<std::size_t>(unit * ly.cols), ly.cols);
  const double b = base[ly.shift_offset + static_cast<std::size_t>(unit)];
  const auto l = static_cast<std::size_t>(layer);
  z_[l].col(unit) = ((z_[l - 1] * w).array() + b).cwiseMax(0.0).matrix();
}

void ChainState::refresh_gram() {
  const Eigen::MatrixXd& z = z_.back();
  const Eigen::Index k = z.cols() + 1;
  gram_.resize(k, k);
  cross_.resize(k);
  truth_cross_ = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < z.cols(); ++i) refresh_gram_column(static_cast<int>(i));
  gram_(k - 1, k - 1) = static_cast<double>(z.rows());
  cross_(k - 1) = data_->y.sum();
  if (data_->f0) truth_cross_(k - 1) = data_->f0->sum();
}

void ChainState::refresh_gram_column(int unit) {
  const Eigen::MatrixXd& z = z_.back();
  const Eigen::Index k = z.cols() + 1;
  const auto col = z.col(unit);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double v = col.dot(z.col(j));
    gram_(unit, j) = v;
    gram_(j, unit) = v;
  }
  const double s = col.sum();
  gram_(unit, k - 1) = s;
  gram_(k - 1, unit) = s;
  cross_(unit) = col.dot(data_->y);
  if (data_->f0) truth_cross_(unit) = col.dot(*data_->f0);
}

bool ChainState::top_constraints_ok(const Eigen::VectorXd& theta) const {
  if (opts_.sieve && theta.squaredNorm() > *opts_.sieve) return false;
  if (opts_.enforce_F && z_.back().rows() > 0) {
    const Eigen::Index p_l = z_.back().cols();
    const Eigen::VectorXd f = (z_.back() * theta.head(p_l)).array() + theta(p_l);
    if (!(f.cwiseAbs().maxCoeff() < net_.arch().sup_bound)) return false;
  }
  return true;
}

double ChainState::conditional_log_likelihood() const {
  const Eigen::VectorXd theta = net_.top_layer();
  const auto n = static_cast<double>(z_.back().rows());
  return -0.5 * n * kLog2Pi - 0.5 * (yy_ - 2.0 * theta.dot(cross_) + theta.dot(gram_ * theta));
}

double ChainState::compute_target() const {
  double t = 0.0;
  if (opts_.use_likelihood) {
    if (opts_.collapsed()) {
      const Eigen::Index k = gram_.rows();
      const auto llt = factor(gram_ + Eigen::MatrixXd::Identity(k, k));
      const Eigen::VectorXd w = llt.matrixL().solve(cross_);
      const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
      const double logdet = 2.0 * diag.array().log().sum();
      const auto n = static_cast<double>(z_.back().rows());
      t = -0.5 * n * kLog2Pi - 0.5 * logdet - 0.5 * (yy_ - w.squaredNorm());
    } else {
      t = conditional_log_likelihood();
    }
  }
  if (!opts_.collapsed() && !top_constraints_ok(net_.top_layer())) return kNegInf;
  return t;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> ChainState::top_posterior() const {
  const Eigen::Index k = gram_.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
  if (opts_.use_likelihood) {
    a += gram_;
    c = cross_;
  }
  const auto llt = factor(a);
  return {llt.solve(c), llt.solve(Eigen::MatrixXd::Identity(k, k))};
}

ChainState::Undo ChainState::change_slot(std::size_t slot, double value, bool active) {
  const SlotInfo info = net_.slot(slot);
  const int depth = net_.arch().depth();
  Undo u;
  u.slot = slot;
  u.value = net_.value(slot);
  u.active = net_.active(slot);
  u.first_layer = info.layer;
  u.unit = info.row;
  u.gram = gram_;
  u.cross = cross_;
  u.truth_cross = truth_cross_;
  u.target = target_;
  if (info.layer == depth) {
    u.layers.emplace_back(z_.back().col(info.row));
  } else {
    for (int l = info.layer; l <= depth; ++l) u.layers.push_back(z_[static_cast<std::size_t>(l)]);
  }
  net_.set(slot, value, active);
  recompute_unit(info.layer, info.row);
  if (info.layer == depth) {
    refresh_gram_column(info.row);
  } else {
    for (int l = info.layer + 1; l <= depth; ++l) recompute_layer(l);
    refresh_gram();
  }
  target_ = compute_target();
  return u;
}

void ChainState::undo(Undo&& u) {
  net_.set(u.slot, u.value, u.active);
  const int depth = net_.arch().depth();
  if (u.first_layer == depth) {
    z_.back().col(u.unit) = u.layers.front();
  } else {
    for (int l = u.first_layer; l <= depth; ++l) {
      z_[static_cast<std::size_t>(l)] = std::move(u.layers[static_cast<std::size_t>(l - u.first_layer)]);
    }
  }
  gram_ = std::move(u.gram);
  cross_ = std::move(u.cross);
  truth_cross_ = std::move(u.truth_cross);
  target_ = u.target;
}

std::vector<std::size_t> ChainState::active_deep_slots() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < net_.arch().deep_count(); ++j) {
    if (net_.active(j)) out.push_back(j);
  }
  return out;
}

bool ChainState::rw_step(std::size_t slot, double scale, double z, double u) {
  const double old_value = net_.value(slot);
  const bool uniform = prior_.slab == SlabKind::UniformDeep;
  const double proposal = uniform ? reflect_unit(old_value + scale * z) : old_value + scale * z;
  const double old_target = target_;
  Undo saved = change_slot(slot, proposal, true);
  const double log_ratio =
      target_ - old_target + log_slab(prior_.slab, false, proposal) - log_slab(prior_.slab, false, old_value);
  if (accept(log_ratio, u)) return true;
  undo(std::move(saved));
  return false;
}

bool ChainState::rw_move(Rng& rng, double scale) {
  const auto slots = active_deep_slots();
  if (slots.empty()) throw ValueError("random-walk move needs an active deep coordinate");
  std::uniform_int_distribution<std::size_t> pick(0, slots.size() - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t slot = slots[pick(rng)];
  const double z = normal(rng);
  return rw_step(slot, scale, z, unif(rng));
}

std::pair<MoveType, bool> ChainState::gamma_move(Rng& rng, const MoveProbs& probs) {
  const EffectiveProbs e = effective_probs(probs, prior_.adaptive_s);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r = unif(rng);
  MoveType move = MoveType::None;
  if (r < e.none) {
    return {MoveType::None, false};
  } else if (r < e.none + e.birth) {
    move = MoveType::Birth;
  } else if (r < e.none + e.birth + e.death) {
    move = MoveType::Death;
  } else {
    move = MoveType::Swap;
  }

  const std::size_t deep = net_.arch().deep_count();
  std::vector<std::size_t> on, off;
  for (std::size_t j = 0; j < deep; ++j) (net_.active(j) ? on : off).push_back(j);
  const double prior_part =
      gamma_move_log_ratio(move, deep, on.size(), prior_.lambda_s, prior_.adaptive_s, probs);
  if (prior_part == kNegInf) return {move, false};

  auto draw_slab = [&]() {
    if (prior_.slab == SlabKind::UniformDeep) return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    return std::normal_distribution<double>(0.0, 1.0)(rng);
  };
  auto pick = [&](const std::vector<std::size_t>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };

  const double old_target = target_;
  std::vector<Undo> undos;
  if (move == MoveType::Birth) {
    const std::size_t j = pick(off);
    undos.push_back(change_slot(j, draw_slab(), true));
  } else if (move == MoveType::Death) {
    undos.push_back(change_slot(pick(on), 0.0, false));
  } else {
    const std::size_t dead = pick(on);
    const std::size_t born = pick(off);
    const double v = draw_slab();
    undos.push_back(change_slot(dead, 0.0, false));
    undos.push_back(change_slot(born, v, true));
  }
  const double log_ratio = target_ - old_target + prior_part;
  if (accept(log_ratio, unif(rng))) return {move, true};
  for (auto it = undos.rbegin(); it != undos.rend(); ++it) undo(std::move(*it));
  return {move, false};
}

void ChainState::gibbs_top(Rng& rng) {
  const Eigen::Index k = gram_.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(k);
  if (opts_.use_likelihood) {
    a += gram_;
    c = cross_;
  }
  const auto llt = factor(a);
  const Eigen::VectorXd mu = llt.solve(c);
  std::normal_distribution<double> normal(0.0, 1.0);
  const bool constrained = opts_.enforce_F || opts_.sieve.has_value();
  const std::size_t tries = constrained ? std::max<std::size_t>(1, opts_.gibbs_retry_cap) : 1;
  for (std::size_t t = 0; t < tries; ++t) {
    Eigen::VectorXd z(k);
    for (Eigen::Index i = 0; i < k; ++i) z(i) = normal(rng);
    const Eigen::VectorXd theta = mu + llt.matrixU().solve(z);
    if (!constrained || top_constraints_ok(theta)) {
      net_.set_top_layer(theta);
      target_ = compute_target();
      return;
    }
  }
}

double ChainState::mean_f() const {
  const Eigen::Index k = gram_.rows();
  const double n = gram_(k - 1, k - 1);
  return gram_.row(k - 1).dot(net_.top_layer()) / n;
}

double ChainState::sq_norm() const {
  const Eigen::Index k = gram_.rows();
  const Eigen::VectorXd theta = net_.top_layer();
  return theta.dot(gram_ * theta) / gram_(k - 1, k - 1);
}

double ChainState::remainder() const {
  if (!data_->f0) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::Index k = gram_.rows();
  const double n = gram_(k - 1, k - 1);
  const Eigen::VectorXd theta = net_.top_layer();
  const double dist = (theta.dot(gram_ * theta) - 2.0 * theta.dot(truth_cross_) + f0f0_) / n;
  const Eigen::VectorXd coef = Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(gram_).solve(truth_cross_);
  const double resid = std::max(0.0, (f0f0_ - truth_cross_.dot(coef)) / n);
  return dist - 2.0 * resid;
}

NetworkParams gibbs_top_layer(const NetworkParams& net, const RegressionDataset& data, Rng& rng,
                              const ConstraintOptions& opts) {
  PriorSpec prior;
  prior.arch = net.arch();
  ChainState st(net, data, prior, opts);
  st.gibbs_top(rng);
  return st.net();
}

MoveResult rw_metropolis_deep(const NetworkParams& net, const RegressionDataset& data, const PriorSpec& spec,
                              Rng& rng, double scale, const ConstraintOptions& opts) {
  ChainState st(net, data, spec, opts);
  const bool ok = st.rw_move(rng, scale);
  return {st.net(), MoveType::None, ok};
}

MoveResult birth_death_swap(const NetworkParams& net, const RegressionDataset& data, const PriorSpec& spec,
                            Rng& rng, const MoveProbs& probs, const ConstraintOptions& opts) {
  MoveProbs p = probs;
  // The gamma move is forced: rescale away the skip probability.
  const double rest = p.birth + p.death + p.swap;
  if (!(rest > 0.0)) throw ValueError("birth/death/swap probabilities are all zero");
  p = MoveProbs{0.0, p.birth / rest, p.death / rest, p.swap / rest};
  ChainState st(net, data, spec, opts);
  const auto [move, ok] = st.gamma_move(rng, p);
  return {st.net(), move, ok};
}

PosteriorChain run_chain(const RegressionDataset& data, const PriorSpec& spec, const ChainConfig& cfg,
                         std::optional<NetworkParams> init) {
  cfg.validate();
  spec.validate();
  Rng rng(cfg.seed);
  NetworkParams start = init ? std::move(*init) : sample_prior(spec, rng);
  if (spec.adaptive_s && start.arch().sparsity != start.arch().param_count()) {
    Architecture a = start.arch();
    a.sparsity = a.param_count();
    start = NetworkParams(a, std::vector<double>(start.values().begin(), start.values().end()),
                          std::vector<std::uint8_t>(start.gamma().begin(), start.gamma().end()));
  }
  ChainState st(std::move(start), data, spec, ConstraintOptions::from(cfg));

  PosteriorChain chain;
  const std::size_t kept = cfg.n_iter > cfg.burn_in ? (cfg.n_iter - cfg.burn_in + cfg.thin - 1) / cfg.thin : 0;
  chain.iterations.reserve(kept);
  if (cfg.store_draws) chain.draws.reserve(kept);

  double log_scale = std::log(cfg.rw_scale);
  double scale = cfg.rw_scale;
  constexpr double kMinScale = 1e-4;
  constexpr double kMaxScale = 2.0;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  for (std::size_t it = 0; it < cfg.n_iter; ++it) {
    const bool burning = it < cfg.burn_in;
    if (!cfg.freeze_deep) {
      const auto [move, ok] = st.gamma_move(rng, cfg.move_probs);
      if (!burning) {
        AcceptStats* s = move == MoveType::Birth   ? &chain.birth
                         : move == MoveType::Death ? &chain.death
                         : move == MoveType::Swap  ? &chain.swap
                                                   : nullptr;
        if (s != nullptr) {
          ++s->attempts;
          s->accepted += ok ? 1 : 0;
        }
      }
      auto slots = st.active_deep_slots();
      std::shuffle(slots.begin(), slots.end(), rng);
      for (std::size_t slot : slots) {
        const double z = normal(rng);
        const bool ok_rw = st.rw_step(slot, scale, z, unif(rng));
        if (burning) {
          log_scale += cfg.adapt_rate / static_cast<double>(it + 1) * ((ok_rw ? 1.0 : 0.0) - cfg.target_accept);
          log_scale = std::clamp(log_scale, std::log(kMinScale), std::log(kMaxScale));
          scale = std::exp(log_scale);
        } else {
          ++chain.weights.attempts;
          chain.weights.accepted += ok_rw ? 1 : 0;
        }
      }
    }
    st.gibbs_top(rng);

    if (!burning && (it - cfg.burn_in) % cfg.thin == 0) {
      chain.iterations.push_back(it);
      chain.loglik_trace.push_back(st.conditional_log_likelihood());
      chain.s_trace.push_back(st.net().active_count());
      chain.mean_f_trace.push_back(st.mean_f());
      chain.sq_norm_trace.push_back(st.sq_norm());
      if (data.f0) chain.remainder_trace.push_back(st.remainder());
      chain.scale_trace.push_back(scale);
      if (cfg.store_draws) chain.draws.push_back(st.net());
    }
  }
  chain.final_rw_scale = scale;
  if (chain.weights.attempts > 0 && chain.weights.rate() < 0.05) {
    chain.warnings.push_back("post-burn-in random-walk acceptance " + std::to_string(chain.weights.rate()) +
                             " is below 5%");
  }
  return chain;
}

}  // namespace sbvm
