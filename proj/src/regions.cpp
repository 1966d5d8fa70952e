#include "sbvm/regions.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "sbvm/error.hpp"

namespace sbvm {

std::string ActivationPattern::to_string() const {
  std::string s;
  s.reserve(bits.size());
  for (bool b : bits) s.push_back(b ? '1' : '0');
  return s;
}

ActivationPattern activation_pattern(const NetworkParams& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != net.arch().input_dim()) {
    throw DimensionError("layer 1: input has dimension " + std::to_string(x.size()));
  }
  ActivationPattern pat;
  pat.bits.reserve(net.arch().hidden_units());
  Eigen::VectorXd z = x;
  for (int l = 1; l <= net.arch().depth(); ++l) {
    Eigen::VectorXd a = net.weights(l) * z + net.shifts(l);
    for (Eigen::Index i = 0; i < a.size(); ++i) pat.bits.push_back(a(i) > 0.0);
    z = a.cwiseMax(0.0);
  }
  return pat;
}

std::pair<Eigen::VectorXd, double> affine_piece(const NetworkParams& net, const ActivationPattern& pattern) {
  const int p = net.arch().input_dim();
  if (pattern.bits.size() != net.arch().hidden_units()) {
    throw DimensionError("pattern length " + std::to_string(pattern.bits.size()) + " does not match " +
                         std::to_string(net.arch().hidden_units()) + " hidden units");
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(p, p);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p);
  std::size_t bit = 0;
  for (int l = 1; l <= net.arch().depth(); ++l) {
    Eigen::MatrixXd na = net.weights(l) * a;
    Eigen::VectorXd nc = net.weights(l) * c + net.shifts(l);
    for (Eigen::Index i = 0; i < na.rows(); ++i, ++bit) {
      if (!pattern.bits[bit]) {
        na.row(i).setZero();
        nc(i) = 0.0;
      }
    }
    a = std::move(na);
    c = std::move(nc);
  }
  const int top = net.arch().depth() + 1;
  const RowMatrix w = net.weights(top);
  Eigen::VectorXd slope = (w * a).transpose();
  const double intercept = (w * c)(0) + net.shifts(top)(0);
  return {slope, intercept};
}

RegionDecomposition decompose_at(const NetworkParams& net, const Eigen::Ref<const Eigen::MatrixXd>& design) {
  std::map<ActivationPattern, std::vector<std::size_t>> groups;
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    groups[activation_pattern(net, design.row(i).transpose())].push_back(static_cast<std::size_t>(i));
  }
  RegionDecomposition out;
  out.cells.reserve(groups.size());
  for (auto& [pattern, members] : groups) {
    auto [slope, intercept] = affine_piece(net, pattern);
    out.cells.push_back(RegionCell{pattern, std::move(slope), intercept, std::move(members)});
  }
  return out;
}

std::size_t RegionDecomposition::cell_of(std::size_t row) const {
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (std::find(cells[k].members.begin(), cells[k].members.end(), row) != cells[k].members.end()) return k;
  }
  throw ValueError("row " + std::to_string(row) + " belongs to no cell");
}

Eigen::VectorXd RegionDecomposition::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& design) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(design.rows());
  for (const auto& cell : cells) {
    for (std::size_t i : cell.members) {
      const auto r = static_cast<Eigen::Index>(i);
      f(r) += design.row(r).dot(cell.slope) + cell.intercept;
    }
  }
  return f;
}

namespace {

constexpr std::uint64_t kSaturated = std::uint64_t{1} << 63;

// Saturating product; sets `sat` on overflow past kSaturated.
std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b, bool& sat) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) {
    sat = true;
    return kSaturated;
  }
  return a * b;
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k, bool& sat) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  // Exact while the running value fits; C(n, i) * (n - i) / (i + 1) stays integral.
  unsigned __int128 r = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    r = r * (n - i) / (i + 1);
    if (r > kSaturated) {
      sat = true;
      return kSaturated;
    }
  }
  return static_cast<std::uint64_t>(r);
}

}  // namespace

RegionBounds region_count_bounds(const Architecture& arch) {
  RegionBounds b;
  const std::size_t t = arch.param_count();
  if (t >= 63) {
    b.upper = kSaturated;
    b.upper_saturated = true;
  } else {
    b.upper = std::uint64_t{1} << t;
  }
  const auto p = static_cast<std::uint64_t>(arch.input_dim());
  std::uint64_t prod = 1;
  for (int l = 1; l < arch.depth(); ++l) {
    const std::uint64_t ratio = static_cast<std::uint64_t>(arch.widths[static_cast<std::size_t>(l)]) / p;
    for (std::uint64_t e = 0; e < p; ++e) prod = sat_mul(prod, ratio, b.lower_saturated);
  }
  std::uint64_t sum = 0;
  const auto top = static_cast<std::uint64_t>(arch.top_width());
  for (std::uint64_t j = 1; j <= p; ++j) {
    sum += binomial(top, j, b.lower_saturated);
    if (sum > kSaturated) {
      sum = kSaturated;
      b.lower_saturated = true;
    }
  }
  b.lower = sat_mul(prod, sum, b.lower_saturated);
  return b;
}

SlopeCovariance prior_slope_covariance_mc(std::size_t draws, std::uint64_t seed) {
  if (draws < 2) throw ValueError("need at least two draws");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  // Running sums of products for the summed (trace) form and the
  // first-coordinate covariance.
  Eigen::Matrix3d sum_tr = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d sumsq_tr = Eigen::Matrix3d::Zero();
  Eigen::Vector3d sum_c = Eigen::Vector3d::Zero();
  Eigen::Matrix3d sum_cc = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d sumsq_cc = Eigen::Matrix3d::Zero();
  for (std::size_t d = 0; d < draws; ++d) {
    // Hidden rows W^1_1, W^1_2 in R^2, output weights W^2_1, W^2_2.
    const double w11 = unif(rng), w12 = unif(rng);
    const double w21 = unif(rng), w22 = unif(rng);
    const double v1 = unif(rng), v2 = unif(rng);
    Eigen::Matrix<double, 3, 2> s;
    s.row(1) << v1 * w11, v1 * w12;
    s.row(2) << v2 * w21, v2 * w22;
    s.row(0) = s.row(1) + s.row(2);
    const Eigen::Matrix3d tr = s * s.transpose();
    sum_tr += tr;
    sumsq_tr += tr.cwiseProduct(tr);
    const Eigen::Vector3d c = s.col(0);
    sum_c += c;
    const Eigen::Matrix3d cc = c * c.transpose();
    sum_cc += cc;
    sumsq_cc += cc.cwiseProduct(cc);
  }
  const double m = static_cast<double>(draws);
  SlopeCovariance out;
  out.draws = draws;
  out.summed = sum_tr / m;
  out.summed_se = ((sumsq_tr / m - out.summed.cwiseProduct(out.summed)) / (m - 1.0)).cwiseMax(0.0).cwiseSqrt();
  const Eigen::Vector3d mean_c = sum_c / m;
  out.per_coordinate = (sum_cc - m * mean_c * mean_c.transpose()) / (m - 1.0);
  const Eigen::Matrix3d raw = sum_cc / m;
  out.per_coordinate_se = ((sumsq_cc / m - raw.cwiseProduct(raw)) / (m - 1.0)).cwiseMax(0.0).cwiseSqrt();
  return out;
}

}  // namespace sbvm
