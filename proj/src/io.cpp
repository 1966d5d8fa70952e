#include "sbvm/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include "json.hpp"
#include <sstream>

#include "sbvm/error.hpp"

namespace sbvm {

using nlohmann::json;

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(what + ": expected an unsigned integer, got '" + s + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw ParseError("not a number: '" + s + "'");
  return v;
}

std::string network_to_json(const NetworkParams& net) {
  const Architecture& a = net.arch();
  json j;
  j["format"] = "sbvm-network";
  j["version"] = 1;
  j["architecture"] = {{"widths", a.widths}, {"sparsity", a.sparsity}, {"sup_bound", a.sup_bound}};
  json layers = json::array();
  for (int l = 1; l <= a.depth() + 1; ++l) {
    const RowMatrix w = net.weights(l);
    json rows = json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
      rows.push_back(row);
    }
    const Eigen::VectorXd b = net.shifts(l);
    layers.push_back({{"weights", rows}, {"shifts", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  j["layers"] = layers;
  std::string bits;
  for (auto g : net.gamma()) bits.push_back(g ? '1' : '0');
  j["gamma"] = bits;
  return j.dump(1) + "\n";
}

NetworkParams network_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("network: ") + e.what());
  }
  try {
    if (j.value("format", std::string()) != "sbvm-network") throw ParseError("network: missing format \"sbvm-network\"");
    const json& ja = j.at("architecture");
    Architecture arch;
    arch.widths = ja.at("widths").get<std::vector<int>>();
    if (arch.widths.size() < 3) throw ParseError("network: need at least one hidden layer");
    arch.sup_bound = ja.value("sup_bound", 10.0);
    std::size_t t = 0;
    for (std::size_t l = 0; l + 1 < arch.widths.size(); ++l) {
      t += static_cast<std::size_t>(arch.widths[l + 1]) * static_cast<std::size_t>(arch.widths[l] + 1);
    }
    arch.sparsity = ja.value("sparsity", t);
    try {
      arch.validate();
    } catch (const ValueError& e) {
      throw ParseError(std::string("network: ") + e.what());
    }

    std::vector<double> values;
    values.reserve(t);
    const json& layers = j.at("layers");
    if (!layers.is_array() || layers.size() + 1 != arch.widths.size()) throw ParseError("network: wrong number of layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto rows = static_cast<std::size_t>(arch.widths[l + 1]);
      const auto cols = static_cast<std::size_t>(arch.widths[l]);
      const std::string where = "network: layer " + std::to_string(l + 1);
      const auto w = layers[l].at("weights").get<std::vector<std::vector<double>>>();
      const auto b = layers[l].at("shifts").get<std::vector<double>>();
      if (w.size() != rows || b.size() != rows) throw ParseError(where + ": expected " + std::to_string(rows) + " rows");
      for (const auto& row : w) {
        if (row.size() != cols) throw ParseError(where + ": expected " + std::to_string(cols) + " columns");
        values.insert(values.end(), row.begin(), row.end());
      }
      values.insert(values.end(), b.begin(), b.end());
    }
    std::vector<std::uint8_t> gamma(t, 0);
    if (j.contains("gamma")) {
      const auto bits = j.at("gamma").get<std::string>();
      if (bits.size() != t) throw ParseError("network: gamma has " + std::to_string(bits.size()) + " bits, expected " + std::to_string(t));
      for (std::size_t i = 0; i < t; ++i) {
        if (bits[i] != '0' && bits[i] != '1') throw ParseError("network: gamma must be a 0/1 string");
        gamma[i] = bits[i] == '1';
      }
    } else {
      for (std::size_t i = 0; i < t; ++i) gamma[i] = values[i] != 0.0 || i >= arch.top_offset();
    }
    for (std::size_t i = 0; i < t; ++i) {
      if (!gamma[i]) values[i] = 0.0;
    }
    NetworkParams net(arch, std::move(values), std::move(gamma));
    if (auto msg = check_invariants(net)) throw ParseError("network: " + *msg);
    return net;
  } catch (const json::exception& e) {
    throw ParseError(std::string("network: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

void save_network(const std::filesystem::path& path, const NetworkParams& net) { write_text(path, network_to_json(net)); }

NetworkParams load_network(const std::filesystem::path& path) { return network_from_json(read_text(path)); }

void write_dataset(std::ostream& os, const RegressionDataset& data) {
  os << "# format: sbvm-dataset\n";
  if (data.truth) {
    os << "# truth: " << data.truth->id << "\n";
    os << "# truth_param: " << format_double(data.truth->param) << "\n";
  }
  os << "# seed: " << data.seed << "\n";
  os << "# n: " << data.n() << "\n";
  os << "# p: " << data.p() << "\n";
  for (int j = 0; j < data.p(); ++j) os << "x" << j + 1 << ",";
  os << "y" << (data.eps ? ",eps" : "") << "\n";
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) os << format_double(data.x(i, j)) << ",";
    os << format_double(data.y(i));
    if (data.eps) os << "," << format_double((*data.eps)(i));
    os << "\n";
  }
}

RegressionDataset read_dataset(std::istream& is) {
  std::map<std::string, std::string> meta;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon == std::string::npos) continue;
      meta[trim(line.substr(1, colon - 1))] = trim(line.substr(colon + 1));
      continue;
    }
    header = split(line, ',');
    break;
  }
  if (header.empty()) throw ParseError("dataset: missing header");
  int p = 0;
  while (p < static_cast<int>(header.size()) && header[static_cast<std::size_t>(p)] == "x" + std::to_string(p + 1)) ++p;
  if (p == 0) throw ParseError("dataset: header must start with x1");
  const auto rest = static_cast<std::size_t>(p);
  if (header.size() <= rest || header[rest] != "y") throw ParseError("dataset: expected column y after x" + std::to_string(p));
  const bool has_eps = header.size() > rest + 1;
  if (has_eps && (header[rest + 1] != "eps" || header.size() > rest + 2)) throw ParseError("dataset: unexpected columns after y");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError("dataset: row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) + " fields, expected " + std::to_string(header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_double(c));
    rows.push_back(std::move(row));
  }

  RegressionDataset d;
  const auto n = static_cast<Eigen::Index>(rows.size());
  d.x.resize(n, p);
  d.y.resize(n);
  if (has_eps) d.eps = Eigen::VectorXd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (int j = 0; j < p; ++j) d.x(i, j) = r[static_cast<std::size_t>(j)];
    d.y(i) = r[rest];
    if (has_eps) (*d.eps)(i) = r[rest + 1];
  }
  if (meta.count("n") && parse_u64(meta["n"], "dataset n") != rows.size()) throw ParseError("dataset: metadata n does not match the row count");
  if (meta.count("p") && parse_u64(meta["p"], "dataset p") != static_cast<std::uint64_t>(p)) throw ParseError("dataset: metadata p does not match the columns");
  if (meta.count("seed")) d.seed = parse_u64(meta["seed"], "dataset seed");
  if (meta.count("truth")) {
    if (!is_known_truth(meta["truth"])) throw ParseError("dataset: unknown truth '" + meta["truth"] + "'");
    std::optional<double> param;
    if (meta.count("truth_param")) param = parse_double(meta["truth_param"]);
    d.truth = make_truth(meta["truth"], param, p);
    d.f0 = d.truth->evaluate(d.x);
  }
  return d;
}

void save_dataset(const std::filesystem::path& path, const RegressionDataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  write_dataset(os, data);
}

RegressionDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ParseError("cannot read " + path.string());
  return read_dataset(is);
}

double decomposition_error(const RegionDecomposition& dec, const NetworkParams& net,
                           const Eigen::Ref<const Eigen::MatrixXd>& design) {
  if (design.rows() == 0) return 0.0;
  return (forward_batch(net, design) - dec.evaluate(design)).cwiseAbs().maxCoeff();
}

void write_decomposition(std::ostream& os, const RegionDecomposition& dec, const NetworkParams& net,
                         const Eigen::Ref<const Eigen::MatrixXd>& design) {
  const Eigen::VectorXd f = forward_batch(net, design);
  os << "cell,pattern,members";
  for (Eigen::Index j = 0; j < design.cols(); ++j) os << ",slope_" << j + 1;
  os << ",intercept,max_abs_error\n";
  for (std::size_t c = 0; c < dec.cells.size(); ++c) {
    const RegionCell& cell = dec.cells[c];
    double err = 0.0;
    for (std::size_t i : cell.members) {
      const auto row = static_cast<Eigen::Index>(i);
      err = std::max(err, std::abs(f(row) - (design.row(row).dot(cell.slope) + cell.intercept)));
    }
    os << c << "," << cell.pattern.to_string() << "," << cell.members.size();
    for (Eigen::Index j = 0; j < cell.slope.size(); ++j) os << "," << format_double(cell.slope(j));
    os << "," << format_double(cell.intercept) << "," << format_double(err) << "\n";
  }
}

void write_draw_log(std::ostream& os, const PosteriorChain& chain, double a) {
  os << "iteration,loglik,s,rw_scale,psi_linear,psi_quadratic,remainder\n";
  for (std::size_t i = 0; i < chain.size(); ++i) {
    os << chain.iterations[i] << "," << format_double(chain.loglik_trace[i]) << "," << chain.s_trace[i] << ","
       << format_double(chain.scale_trace[i]) << "," << format_double(a * chain.mean_f_trace[i]) << ","
       << format_double(chain.sq_norm_trace[i]) << ","
       << (chain.remainder_trace.empty() ? std::string("nan") : format_double(chain.remainder_trace[i])) << "\n";
  }
}

std::string chain_summary_json(const PosteriorChain& chain) {
  auto stats = [](const AcceptStats& s) {
    return json{{"attempts", s.attempts}, {"accepted", s.accepted}, {"rate", s.rate()}};
  };
  json j;
  j["draws"] = chain.size();
  j["acceptance"] = {{"weights", stats(chain.weights)},
                     {"birth", stats(chain.birth)},
                     {"death", stats(chain.death)},
                     {"swap", stats(chain.swap)}};
  j["final_rw_scale"] = chain.final_rw_scale;
  double s_mean = 0.0;
  for (auto s : chain.s_trace) s_mean += static_cast<double>(s);
  j["mean_s"] = chain.size() > 0 ? json(s_mean / static_cast<double>(chain.size())) : json(nullptr);
  j["warnings"] = chain.warnings;
  return j.dump(1) + "\n";
}

std::string construction_report_json(const Construction& c, double max_diff, std::size_t probes) {
  json j;
  j["probes"] = probes;
  j["max_abs_diff"] = number(max_diff);
  j["relabeled"] = c.relabeled;
  j["node_order"] = c.node_order;
  j["s_star"] = c.s_star;
  j["top_nonzero"] = c.top_nonzero;
  j["s_new"] = c.s_new;
  j["bound"] = c.bound;
  j["within_bound"] = c.s_new <= c.bound;
  return j.dump(1) + "\n";
}

namespace {

json report_object(const BvmReport& r) {
  json j;
  j["n"] = r.n;
  j["kind"] = to_string(r.kind);
  j["a"] = r.a;
  j["n_draws"] = r.n_draws;
  j["psi_true"] = number(r.psi_true);
  j["psi_hat"] = number(r.psi_hat);
  j["v0"] = number(r.v0);
  j["psi_mean"] = number(r.psi_mean);
  j["ks_distance"] = number(r.ks_distance);
  j["w1_distance"] = number(r.w1_distance);
  j["ci_level"] = r.ci_level;
  j["ci_lower"] = number(r.ci_lower);
  j["ci_upper"] = number(r.ci_upper);
  j["covered"] = r.covered;
  j["remainder_q90"] = number(r.remainder_q90);
  j["weights_accept"] = r.weights_accept;
  j["mean_s"] = r.mean_s;
  j["chain_seed"] = r.chain_seed;
  j["warnings"] = r.warnings;
  return j;
}

}  // namespace

std::string bvm_report_json(const BvmReport& r) { return report_object(r).dump(1) + "\n"; }

void write_standardized_draws(std::ostream& os, const BvmReport& r) {
  os << "index,psi,standardized\n";
  for (std::size_t i = 0; i < r.psi_draws.size(); ++i) {
    os << i << "," << format_double(r.psi_draws[i]) << "," << format_double(r.standardized_draws[i]) << "\n";
  }
}

std::string coverage_summary_json(const CoverageSummary& s, std::uint64_t master_seed) {
  json j;
  j["master_seed"] = master_seed;
  j["replications"] = s.replications;
  j["completed"] = s.completed;
  j["failures"] = s.failures.size();
  j["coverage_rate"] = s.coverage_rate;
  j["mean_ci_width"] = number(s.mean_ci_width);
  j["median_ks"] = s.median_ks;
  j["study_failed"] = s.failed();
  json reps = json::array();
  for (std::size_t i = 0; i < s.reports.size(); ++i) {
    json r = report_object(s.reports[i]);
    r["replication"] = s.indices[i];
    reps.push_back(std::move(r));
  }
  j["reports"] = reps;
  json fails = json::array();
  for (const auto& f : s.failures) fails.push_back({{"replication", f.index}, {"message", f.message}});
  j["failed_replications"] = fails;
  return j.dump(1) + "\n";
}

}  // namespace sbvm
