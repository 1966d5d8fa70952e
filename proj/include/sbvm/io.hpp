#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "sbvm/bvm.hpp"
#include "sbvm/construct.hpp"
#include "sbvm/datagen.hpp"
#include "sbvm/network.hpp"
#include "sbvm/regions.hpp"
#include "sbvm/sampler.hpp"

namespace sbvm {

/// Shortest text that parses back to the same double; "inf", "-inf", "nan"
/// for non-finite values.
std::string format_double(double v);
double parse_double(const std::string& s);

// Networks: JSON with per-layer weight matrices, shift vectors and an
// optional gamma bit string ("1" = active). Without gamma a coordinate is
// active iff it is nonzero or belongs to the top layer.
std::string network_to_json(const NetworkParams& net);
NetworkParams network_from_json(const std::string& text);
void save_network(const std::filesystem::path& path, const NetworkParams& net);
NetworkParams load_network(const std::filesystem::path& path);

// Datasets: CSV with "# key: value" metadata lines (format, truth, truth_param,
// seed, n, p), then a header x1..xp,y[,eps]. Truth values are recomputed from
// the truth id on load.
void write_dataset(std::ostream& os, const RegressionDataset& data);
RegressionDataset read_dataset(std::istream& is);
void save_dataset(const std::filesystem::path& path, const RegressionDataset& data);
RegressionDataset load_dataset(const std::filesystem::path& path);

/// Cell table: cell, pattern, members, slope_1..slope_p, intercept, max_abs_error.
void write_decomposition(std::ostream& os, const RegionDecomposition& dec, const NetworkParams& net,
                         const Eigen::Ref<const Eigen::MatrixXd>& design);
/// Largest |f(x_i) - cell piece(x_i)| over the design.
double decomposition_error(const RegionDecomposition& dec, const NetworkParams& net,
                           const Eigen::Ref<const Eigen::MatrixXd>& design);

/// One row per stored draw: iteration, loglik, s, rw_scale, psi_linear, psi_quadratic, remainder.
void write_draw_log(std::ostream& os, const PosteriorChain& chain, double a);
/// Acceptance rates, traces summary and warnings as JSON.
std::string chain_summary_json(const PosteriorChain& chain);

std::string construction_report_json(const Construction& c, double max_diff, std::size_t probes);

std::string bvm_report_json(const BvmReport& r);
/// index, psi, standardized
void write_standardized_draws(std::ostream& os, const BvmReport& r);
std::string coverage_summary_json(const CoverageSummary& s, std::uint64_t master_seed);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace sbvm
