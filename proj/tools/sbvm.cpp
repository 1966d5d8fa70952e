// sbvm: simulate data, fit the sparse ReLU posterior and run BvM checks.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "sbvm/bvm.hpp"
#include "sbvm/config.hpp"
#include "sbvm/construct.hpp"
#include "sbvm/io.hpp"
#include "sbvm/regions.hpp"
#include "sbvm/sampler.hpp"

namespace fs = std::filesystem;
using namespace sbvm;

namespace {

constexpr int kOk = 0;
constexpr int kStudyFailure = 1;
constexpr int kUsage = 2;

struct Options {
  std::string config;
  std::string data;
  std::string network;
  std::string out = ".";
  unsigned workers = 0;
  bool conjugate = false;
  bool quiet = false;
};

// Raised for failures that are the caller's fault (bad input files).
struct UsageError : Error {
  using Error::Error;
};

void say(const Options& o, const std::string& line) {
  if (!o.quiet) std::cout << line << "\n";
}

fs::path out_dir(const Options& o) {
  fs::path dir(o.out);
  fs::create_directories(dir);
  return dir;
}

void save_stream(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  fn(os);
}

ExperimentConfig config_for(const Options& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.conjugate) cfg.chain.freeze_deep = true;
  return cfg;
}

RegressionDataset dataset_for(const Options& o, const ExperimentConfig& cfg) {
  RegressionDataset data = load_dataset(o.data);
  if (data.p() != cfg.dataset.p) {
    throw DimensionError("dataset has p=" + std::to_string(data.p()) + " but the config expects p=" +
                         std::to_string(cfg.dataset.p));
  }
  return data;
}

int cmd_simulate(const Options& o) {
  const ExperimentConfig cfg = config_for(o);
  const RegressionDataset data = cfg.simulate_dataset();
  const fs::path path = out_dir(o) / "dataset.csv";
  save_dataset(path, data);
  say(o, "wrote " + path.string() + " (n=" + std::to_string(data.n()) + ", p=" + std::to_string(data.p()) + ")");
  return kOk;
}

int cmd_fit(const Options& o) {
  const ExperimentConfig cfg = config_for(o);
  const RegressionDataset data = dataset_for(o, cfg);
  const PosteriorChain chain = run_chain(data, cfg.prior_spec(data.n()), cfg.chain);
  const fs::path dir = out_dir(o);
  save_stream(dir / "draws.csv", [&](std::ostream& os) { write_draw_log(os, chain, cfg.functional.a); });
  write_text(dir / "chain_summary.json", chain_summary_json(chain));
  if (!chain.draws.empty()) save_network(dir / "final_network.json", chain.draws.back());
  say(o, "draws: " + std::to_string(chain.size()));
  say(o, "acceptance weights: " + format_double(chain.weights.rate()) +
             " birth: " + format_double(chain.birth.rate()) + " death: " + format_double(chain.death.rate()) +
             " swap: " + format_double(chain.swap.rate()));
  for (const auto& w : chain.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

void print_report(const Options& o, const BvmReport& r) {
  say(o, "kind " + to_string(r.kind) + " n " + std::to_string(r.n) + " draws " + std::to_string(r.n_draws));
  say(o, "ks " + format_double(r.ks_distance) + " w1 " + format_double(r.w1_distance));
  say(o, "ci [" + format_double(r.ci_lower) + ", " + format_double(r.ci_upper) + "] covers psi(f0)=" +
             format_double(r.psi_true) + ": " + (r.covered ? "yes" : "no"));
}

int cmd_bvm(const Options& o) {
  const ExperimentConfig cfg = config_for(o);
  const RegressionDataset data = dataset_for(o, cfg);
  if (!data.has_oracle()) throw UsageError("oracle required: dataset has no eps column or truth metadata");
  const BvmReport r =
      bvm_experiment(data, cfg.prior_spec(data.n()), cfg.chain, cfg.functional_spec(), cfg.functional.ci_level);
  const fs::path dir = out_dir(o);
  write_text(dir / "report.json", bvm_report_json(r));
  save_stream(dir / "standardized_draws.csv", [&](std::ostream& os) { write_standardized_draws(os, r); });
  print_report(o, r);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

int cmd_coverage(const Options& o) {
  const ExperimentConfig cfg = config_for(o);
  if (cfg.study.replications < 20) throw ConfigError("study.replications", "must be >= 20");
  const CoverageSummary s = coverage_study(cfg.study.master_seed, cfg.study.replications, cfg.study_setup(), o.workers);
  const fs::path dir = out_dir(o);
  write_text(dir / "coverage_summary.json", coverage_summary_json(s, cfg.study.master_seed));
  fs::create_directories(dir / "replications");
  for (std::size_t i = 0; i < s.reports.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "replication_%04zu.json", s.indices[i]);
    write_text(dir / "replications" / name, bvm_report_json(s.reports[i]));
  }
  say(o, "coverage " + format_double(s.coverage_rate) + " over " + std::to_string(s.completed) + " replications, mean width " +
             format_double(s.mean_ci_width));
  if (s.failed()) {
    std::cerr << "error: " << s.failures.size() << " of " << s.replications << " replications failed\n";
    return kStudyFailure;
  }
  return kOk;
}

int cmd_regions(const Options& o) {
  const NetworkParams net = load_network(o.network);
  const RegressionDataset data = load_dataset(o.data);
  if (data.p() != net.arch().input_dim()) {
    throw DimensionError("dataset has p=" + std::to_string(data.p()) + " but the network expects " +
                         std::to_string(net.arch().input_dim()));
  }
  const RegionDecomposition dec = decompose_at(net, data.x);
  const double err = decomposition_error(dec, net, data.x);
  const RegionBounds bounds = region_count_bounds(net.arch());
  const fs::path dir = out_dir(o);
  save_stream(dir / "regions.csv", [&](std::ostream& os) { write_decomposition(os, dec, net, data.x); });
  std::ostringstream js;
  js << "{\n \"cells\": " << dec.cells.size() << ",\n \"n\": " << data.n() << ",\n \"max_abs_error\": "
     << format_double(err) << ",\n \"upper_bound\": " << bounds.upper
     << ",\n \"upper_saturated\": " << (bounds.upper_saturated ? "true" : "false")
     << ",\n \"lower_bound\": " << bounds.lower
     << ",\n \"within_bounds\": " << ((dec.cells.size() <= data.n() && (bounds.upper_saturated || dec.cells.size() <= bounds.upper)) ? "true" : "false")
     << "\n}\n";
  write_text(dir / "regions_summary.json", js.str());
  say(o, "cells " + std::to_string(dec.cells.size()) + ", max reconstruction error " + format_double(err));
  return kOk;
}

int cmd_construct(const Options& o) {
  const NetworkParams net = load_network(o.network);
  const Construction c = construct_full_top(net);
  constexpr std::size_t kProbes = 1000;
  Rng rng(derive_seed(0x5eed, 0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd probes(kProbes, net.arch().input_dim());
  for (Eigen::Index i = 0; i < probes.rows(); ++i) {
    for (Eigen::Index j = 0; j < probes.cols(); ++j) probes(i, j) = unif(rng);
  }
  const double diff = (forward_batch(net, probes) - forward_batch(c.net, probes)).cwiseAbs().maxCoeff();
  const fs::path dir = out_dir(o);
  save_network(dir / "constructed_network.json", c.net);
  write_text(dir / "construction_report.json", construction_report_json(c, diff, kProbes));
  say(o, "max |f - f_new| over " + std::to_string(kProbes) + " probes: " + format_double(diff));
  say(o, "s_new " + std::to_string(c.s_new) + " <= s* + 2 p_L = " + std::to_string(c.bound));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse deep ReLU regression posteriors and Bernstein-von Mises diagnostics"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub, bool config, bool data) {
    if (config) sub->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    if (data) sub->add_option("--data", o.data, "dataset CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--quiet", o.quiet, "no summary on stdout");
  };
  auto* simulate = app.add_subcommand("simulate", "simulate a dataset from the config");
  common(simulate, true, false);
  auto* fit = app.add_subcommand("fit", "run the sampler and write the draw log");
  common(fit, true, true);
  auto* bvm = app.add_subcommand("bvm", "BvM experiment on one dataset");
  common(bvm, true, true);
  auto* coverage = app.add_subcommand("coverage", "credible-interval coverage over replicated noise");
  common(coverage, true, false);
  coverage->add_option("--workers", o.workers, "worker threads (default: all processors)");
  for (auto* sub : {fit, bvm, coverage}) sub->add_flag("--conjugate-mode", o.conjugate, "freeze the deep weights");
  auto* regions = app.add_subcommand("regions", "linear-region decomposition of a network on a design");
  common(regions, false, true);
  regions->add_option("--network", o.network, "network JSON")->required()->check(CLI::ExistingFile);
  auto* construct = app.add_subcommand("construct", "rewrite a sparse-top network with a dense top layer");
  common(construct, false, false);
  construct->add_option("--network", o.network, "network JSON")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(o);
    if (*fit) return cmd_fit(o);
    if (*bvm) return cmd_bvm(o);
    if (*coverage) return cmd_coverage(o);
    if (*regions) return cmd_regions(o);
    if (*construct) return cmd_construct(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "dimension mismatch: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValueError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStudyFailure;
  }
  return kUsage;
}
