#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sbvm/architecture.hpp"
#include "sbvm/bvm.hpp"
#include "sbvm/datagen.hpp"
#include "sbvm/error.hpp"
#include "sbvm/functionals.hpp"
#include "sbvm/priors.hpp"
#include "sbvm/sampler.hpp"

namespace sbvm {

/// Invalid experiment config. `path` names the offending field, e.g. "chain.n_iter".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct DatasetBlock {
  std::string truth = "smooth_prod";
  std::optional<double> truth_param;
  std::size_t n = 100;
  int p = 1;
  DesignKind design = DesignKind::Grid;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> design_seed;  // defaults to seed
};

struct PriorBlock {
  std::optional<std::vector<int>> hidden;  // widths of the hidden layers; else the n-schedule
  std::optional<std::size_t> sparsity;     // defaults to T
  double sup_bound = 10.0;
  std::optional<double> alpha;  // schedule smoothness; defaults to the truth's nominal alpha
  ScheduleConstants schedule;
  double lambda_N = 1.0;
  double lambda_s = 0.1;
  bool adaptive_s = false;
  bool adaptive_N = false;
  int width_unit = 0;
  SlabKind slab = SlabKind::UniformDeep;
};

struct FunctionalBlock {
  FunctionalKind kind = FunctionalKind::Linear;
  double a = 1.0;
  double ci_level = 0.95;
};

struct StudyBlock {
  std::size_t replications = 100;
  std::vector<std::size_t> n_grid;
  std::uint64_t master_seed = 1;
};

/// JSON document with blocks "dataset", "prior", "chain", "functional", "study".
struct ExperimentConfig {
  DatasetBlock dataset;
  PriorBlock prior;
  ChainConfig chain;
  FunctionalBlock functional;
  StudyBlock study;

  TruthFunction truth() const;
  Eigen::MatrixXd design() const;
  Eigen::MatrixXd design(std::size_t n) const;
  RegressionDataset simulate_dataset() const;
  /// Architecture and prior for sample size n.
  PriorSpec prior_spec(std::size_t n) const;
  PriorSpec prior_spec() const { return prior_spec(dataset.n); }
  FunctionalSpec functional_spec() const { return {functional.kind, functional.a}; }
  StudySetup study_setup() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace sbvm
