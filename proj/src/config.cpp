#include "sbvm/config.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <type_traits>
#include <sstream>

#include "json.hpp"

namespace sbvm {

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seed fields are read as size_t");

using nlohmann::json;

namespace {

class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  void read(const std::string& key, double& out) {
    if (const json* v = get(key)) out = as_double(*v, field(key));
  }
  void read(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::size_t& out) {
    if (const json* v = get(key)) out = as_unsigned(*v, field(key));
  }
  void read(const std::string& key, int& out) {
    if (const json* v = get(key)) {
      const auto u = as_unsigned(*v, field(key));
      if (u > 1'000'000) throw ConfigError(field(key), "value too large");
      out = static_cast<int>(u);
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  template <class T>
  void read(const std::string& key, std::optional<T>& out) {
    if (get(key) == nullptr) return;
    T tmp{};
    read(key, tmp);
    out = tmp;
  }

  std::optional<Block> child(const std::string& key) {
    const json* v = get(key);
    if (v == nullptr) return std::nullopt;
    return Block(*v, field(key));
  }

  template <class T>
  std::optional<std::vector<T>> list(const std::string& key) {
    const json* v = get(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_array()) throw ConfigError(field(key), "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto u = as_unsigned((*v)[i], field(key) + "[" + std::to_string(i) + "]");
      out.push_back(static_cast<T>(u));
    }
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
    }
  }

 private:
  static double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    return v.get<double>();
  }
  static std::uint64_t as_unsigned(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) throw ConfigError(path, "expected a nonnegative integer");
    throw ConfigError(path, "expected an integer");
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto field_guard(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("(document)", std::string("not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Block top(root, "");

  if (auto b = top.child("dataset")) {
    DatasetBlock& d = cfg.dataset;
    b->read("truth", d.truth);
    if (!is_known_truth(d.truth)) throw ConfigError("dataset.truth", "unknown truth id '" + d.truth + "'");
    b->read("truth_param", d.truth_param);
    b->read("n", d.n);
    if (d.n < 1) throw ConfigError("dataset.n", "must be >= 1");
    b->read("p", d.p);
    if (d.p < 1) throw ConfigError("dataset.p", "must be >= 1");
    std::string design = to_string(d.design);
    b->read("design", design);
    d.design = field_guard("dataset.design", [&] { return parse_design_kind(design); });
    b->read("seed", d.seed);
    b->read("design_seed", d.design_seed);
    b->finish();
  }

  if (auto b = top.child("prior")) {
    PriorBlock& p = cfg.prior;
    p.hidden = b->list<int>("hidden");
    if (p.hidden) {
      if (p.hidden->empty()) throw ConfigError("prior.hidden", "needs at least one hidden layer");
      for (int w : *p.hidden) {
        if (w < 1) throw ConfigError("prior.hidden", "widths must be >= 1");
      }
    }
    b->read("sparsity", p.sparsity);
    b->read("sup_bound", p.sup_bound);
    if (!(p.sup_bound > 0.0)) throw ConfigError("prior.sup_bound", "must be positive");
    b->read("alpha", p.alpha);
    if (auto s = b->child("schedule")) {
      s->read("c_depth", p.schedule.c_depth);
      s->read("c_width", p.schedule.c_width);
      s->read("c_sparsity", p.schedule.c_sparsity);
      s->finish();
    }
    b->read("lambda_N", p.lambda_N);
    b->read("lambda_s", p.lambda_s);
    if (!(p.lambda_s > 0.0)) throw ConfigError("prior.lambda_s", "must be positive");
    if (!(p.lambda_N > 0.0)) throw ConfigError("prior.lambda_N", "must be positive");
    b->read("adaptive_s", p.adaptive_s);
    b->read("adaptive_N", p.adaptive_N);
    b->read("width_unit", p.width_unit);
    std::string slab = to_string(p.slab);
    b->read("slab_kind", slab);
    p.slab = field_guard("prior.slab_kind", [&] { return parse_slab_kind(slab); });
    b->finish();
  }

  if (auto b = top.child("chain")) {
    ChainConfig& c = cfg.chain;
    b->read("n_iter", c.n_iter);
    b->read("burn_in", c.burn_in);
    b->read("thin", c.thin);
    b->read("rw_scale", c.rw_scale);
    if (auto m = b->child("move_probs")) {
      m->read("update_weights", c.move_probs.update_weights);
      m->read("birth", c.move_probs.birth);
      m->read("death", c.move_probs.death);
      m->read("swap", c.move_probs.swap);
      m->finish();
    }
    b->read("seed", c.seed);
    b->read("enforce_F", c.enforce_F);
    b->read("enforce_sieve", c.enforce_sieve);
    b->read("collapse_top", c.collapse_top);
    b->read("freeze_deep", c.freeze_deep);
    b->read("use_likelihood", c.use_likelihood);
    b->read("adapt_rate", c.adapt_rate);
    b->read("target_accept", c.target_accept);
    b->read("gibbs_retry_cap", c.gibbs_retry_cap);
    field_guard("chain", [&] {
      c.validate();
      return 0;
    });
    b->finish();
  }

  if (auto b = top.child("functional")) {
    FunctionalBlock& f = cfg.functional;
    std::string kind = to_string(f.kind);
    b->read("kind", kind);
    f.kind = field_guard("functional.kind", [&] { return parse_functional_kind(kind); });
    b->read("a", f.a);
    b->read("ci_level", f.ci_level);
    if (!(f.ci_level > 0.0 && f.ci_level <= 1.0)) throw ConfigError("functional.ci_level", "must be in (0, 1]");
    b->finish();
  }

  if (auto b = top.child("study")) {
    StudyBlock& s = cfg.study;
    b->read("replications", s.replications);
    if (auto grid = b->list<std::size_t>("n_grid")) s.n_grid = *grid;
    b->read("master_seed", s.master_seed);
    b->finish();
  }
  top.finish();

  // Resolve once so that architecture errors surface as config errors.
  field_guard("prior", [&] {
    cfg.prior_spec().validate();
    return 0;
  });
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("(document)", "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

TruthFunction ExperimentConfig::truth() const { return make_truth(dataset.truth, dataset.truth_param, dataset.p); }

Eigen::MatrixXd ExperimentConfig::design(std::size_t n) const {
  return make_design(n, dataset.p, dataset.design, dataset.design_seed.value_or(dataset.seed));
}

Eigen::MatrixXd ExperimentConfig::design() const { return design(dataset.n); }

RegressionDataset ExperimentConfig::simulate_dataset() const { return simulate(truth(), design(), dataset.seed); }

PriorSpec ExperimentConfig::prior_spec(std::size_t n) const {
  PriorSpec spec;
  if (prior.hidden) {
    spec.arch = make_architecture(dataset.p, *prior.hidden, 0, prior.sup_bound);
    spec.arch.sparsity = prior.sparsity.value_or(spec.arch.param_count());
  } else {
    const double alpha = prior.alpha.value_or(truth().alpha_nominal);
    spec.arch = architecture_schedule(n, alpha, dataset.p, prior.schedule);
    spec.arch.sup_bound = prior.sup_bound;
    if (prior.sparsity) spec.arch.sparsity = *prior.sparsity;
  }
  spec.arch.validate();
  spec.lambda_N = prior.lambda_N;
  spec.lambda_s = prior.lambda_s;
  spec.adaptive_s = prior.adaptive_s;
  spec.adaptive_N = prior.adaptive_N;
  spec.width_unit = prior.width_unit;
  spec.slab = prior.slab;
  return spec;
}

StudySetup ExperimentConfig::study_setup() const {
  StudySetup s;
  s.truth = truth();
  s.design = design();
  s.prior = prior_spec();
  s.chain = chain;
  s.functional = functional_spec();
  s.ci_level = functional.ci_level;
  return s;
}

}  // namespace sbvm
