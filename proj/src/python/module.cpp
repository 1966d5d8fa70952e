// Python bindings. Structured results cross as JSON text; arrays as numpy.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sbvm/bvm.hpp"
#include "sbvm/config.hpp"
#include "sbvm/construct.hpp"
#include "sbvm/io.hpp"
#include "sbvm/regions.hpp"
#include "sbvm/sampler.hpp"

namespace py = pybind11;
using namespace sbvm;

namespace {

py::dict dataset_dict(const RegressionDataset& d) {
  py::dict out;
  out["x"] = d.x;
  out["y"] = d.y;
  out["eps"] = d.eps ? py::cast(*d.eps) : py::none();
  out["f0"] = d.f0 ? py::cast(*d.f0) : py::none();
  out["seed"] = d.seed;
  return out;
}

RegressionDataset dataset_from(const ExperimentConfig& cfg, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const std::optional<Eigen::VectorXd>& eps) {
  if (x.rows() != y.size()) throw DimensionError("x has " + std::to_string(x.rows()) + " rows but y has " + std::to_string(y.size()));
  if (eps && eps->size() != y.size()) throw DimensionError("eps and y lengths differ");
  RegressionDataset d;
  d.x = x;
  d.y = y;
  if (eps) {
    d.truth = cfg.truth();
    d.f0 = d.truth->evaluate(x);
    d.eps = *eps;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_sbvm, m) {
  m.doc() = "Sparse deep ReLU regression posteriors and Bernstein-von Mises diagnostics";

  static py::exception<Error> error(m, "SbvmError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  m.def("validate_config", [](const std::string& text) { parse_config(text); }, py::arg("config"),
        "Raise SbvmError with the field path if the config is invalid.");

  m.def(
      "simulate",
      [](const std::string& config) { return dataset_dict(parse_config(config).simulate_dataset()); },
      py::arg("config"), "Dataset described by the config: x, y, eps, f0, seed.");

  m.def(
      "fit",
      [](const std::string& config, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
        const ExperimentConfig cfg = parse_config(config);
        const RegressionDataset data = dataset_from(cfg, x, y, std::nullopt);
        PosteriorChain chain;
        {
          py::gil_scoped_release release;
          chain = run_chain(data, cfg.prior_spec(data.n()), cfg.chain);
        }
        py::dict out;
        out["summary"] = chain_summary_json(chain);
        out["iterations"] = chain.iterations;
        out["loglik"] = chain.loglik_trace;
        out["s"] = chain.s_trace;
        out["mean_f"] = chain.mean_f_trace;
        out["sq_norm"] = chain.sq_norm_trace;
        out["final_network"] = chain.draws.empty() ? py::none() : py::cast(network_to_json(chain.draws.back()));
        return out;
      },
      py::arg("config"), py::arg("x"), py::arg("y"), "Run the sampler; traces plus a JSON chain summary.");

  m.def(
      "bvm",
      [](const std::string& config, const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& eps) {
        const ExperimentConfig cfg = parse_config(config);
        const RegressionDataset data = dataset_from(cfg, x, y, eps);
        py::gil_scoped_release release;
        return bvm_report_json(bvm_experiment(data, cfg.prior_spec(data.n()), cfg.chain, cfg.functional_spec(),
                                              cfg.functional.ci_level));
      },
      py::arg("config"), py::arg("x"), py::arg("y"), py::arg("eps"), "BvM report as JSON; needs the noise column.");

  m.def(
      "coverage",
      [](const std::string& config, std::size_t workers) {
        const ExperimentConfig cfg = parse_config(config);
        py::gil_scoped_release release;
        const CoverageSummary s = coverage_study(cfg.study.master_seed, cfg.study.replications, cfg.study_setup(), workers);
        return coverage_summary_json(s, cfg.study.master_seed);
      },
      py::arg("config"), py::arg("workers") = 1, "Coverage study summary as JSON.");

  m.def(
      "forward",
      [](const std::string& network, const Eigen::MatrixXd& x) { return forward_batch(network_from_json(network), x); },
      py::arg("network"), py::arg("x"), "Network output at each row of x.");

  m.def(
      "regions",
      [](const std::string& network, const Eigen::MatrixXd& x) {
        const NetworkParams net = network_from_json(network);
        const RegionDecomposition dec = decompose_at(net, x);
        py::list cells;
        for (const RegionCell& c : dec.cells) {
          py::dict cell;
          cell["pattern"] = c.pattern.to_string();
          cell["members"] = c.members;
          cell["slope"] = c.slope;
          cell["intercept"] = c.intercept;
          cells.append(cell);
        }
        return cells;
      },
      py::arg("network"), py::arg("x"), "Activation-pattern cells of the design with their affine pieces.");

  m.def(
      "construct",
      [](const std::string& network) {
        const Construction c = construct_full_top(network_from_json(network));
        return py::make_tuple(network_to_json(c.net), c.s_star, c.top_nonzero, c.s_new, c.bound);
      },
      py::arg("network"), "Dense-top rewrite: (network, s_star, top_nonzero, s_new, bound).");
}
