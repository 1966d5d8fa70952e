#include "sbvm/datagen.hpp"

#include <cmath>
#include <numbers>

#include "sbvm/error.hpp"
#include "sbvm/rng.hpp"

namespace sbvm {

Eigen::VectorXd TruthFunction::evaluate(const Eigen::Ref<const Eigen::MatrixXd>& design) const {
  Eigen::VectorXd out(design.rows());
  for (Eigen::Index i = 0; i < design.rows(); ++i) out(i) = evaluator(design.row(i).transpose());
  return out;
}

namespace {

double bump1(double t) {
  const double u = 2.0 * t - 1.0;
  const double q = 1.0 - u * u;
  return q > 0.0 ? std::exp(1.0 - 1.0 / q) : 0.0;
}

}  // namespace

TruthFunction make_truth(const std::string& id, std::optional<double> param, int p) {
  TruthFunction t;
  t.id = id;
  t.alpha_nominal = 0.75 * p;
  if (id == "smooth_prod") {
    t.sup_bound = 1.0;
    t.evaluator = [](const Eigen::Ref<const Eigen::VectorXd>& x) {
      double v = 1.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) v *= std::sin(std::numbers::pi * x(j));
      return v;
    };
  } else if (id == "bump") {
    t.sup_bound = 1.0;
    t.evaluator = [](const Eigen::Ref<const Eigen::VectorXd>& x) {
      double v = 1.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) v *= bump1(x(j));
      return v;
    };
  } else if (id == "holder_frac") {
    const double alpha = param.value_or(0.6);
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValueError("holder_frac alpha must lie in (0, 1]");
    t.param = alpha;
    t.alpha_nominal = alpha;
    t.sup_bound = std::pow(0.5, alpha);
    t.evaluator = [alpha](const Eigen::Ref<const Eigen::VectorXd>& x) {
      double v = 0.0;
      for (Eigen::Index j = 0; j < x.size(); ++j) v += std::pow(std::abs(x(j) - 0.5), alpha);
      return v / static_cast<double>(x.size());
    };
  } else if (id == "constant") {
    const double c = param.value_or(0.0);
    t.param = c;
    t.sup_bound = std::abs(c);
    t.evaluator = [c](const Eigen::Ref<const Eigen::VectorXd>&) { return c; };
  } else {
    throw ValueError("unknown truth id '" + id + "'");
  }
  return t;
}

bool is_known_truth(const std::string& id) {
  return id == "smooth_prod" || id == "bump" || id == "holder_frac" || id == "constant";
}

std::vector<TruthFunction> truth_library(int p) {
  return {make_truth("smooth_prod", std::nullopt, p), make_truth("bump", std::nullopt, p),
          make_truth("holder_frac", std::nullopt, p), make_truth("constant", std::nullopt, p)};
}

DesignKind parse_design_kind(const std::string& s) {
  if (s == "grid") return DesignKind::Grid;
  if (s == "fixed_uniform") return DesignKind::FixedUniform;
  throw ValueError("unknown design kind '" + s + "'");
}

std::string to_string(DesignKind k) { return k == DesignKind::Grid ? "grid" : "fixed_uniform"; }

Eigen::MatrixXd make_design(std::size_t n, int p, DesignKind kind, std::uint64_t seed) {
  if (n < 1 || p < 1) throw ValueError("design needs n >= 1 and p >= 1");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  if (kind == DesignKind::FixedUniform) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (int j = 0; j < p; ++j) x(i, j) = unif(rng);
    }
    return x;
  }
  auto m = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 1.0 / p) - 1e-9));
  std::size_t total = 1;
  for (int j = 0; j < p; ++j) total *= m;
  while (total < n) {  // guard against pow rounding down
    ++m;
    total = 1;
    for (int j = 0; j < p; ++j) total *= m;
  }
  auto coord = [m](std::size_t k) { return m == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(m - 1); };
  std::vector<std::size_t> digits(static_cast<std::size_t>(p), 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) x(static_cast<Eigen::Index>(i), j) = coord(digits[static_cast<std::size_t>(j)]);
    for (int j = p - 1; j >= 0; --j) {
      if (++digits[static_cast<std::size_t>(j)] < m) break;
      digits[static_cast<std::size_t>(j)] = 0;
    }
  }
  return x;
}

RegressionDataset simulate(const TruthFunction& truth, const Eigen::Ref<const Eigen::MatrixXd>& design,
                           std::uint64_t seed) {
  RegressionDataset d;
  d.x = design;
  d.truth = truth;
  d.seed = seed;
  d.f0 = truth.evaluate(design);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd eps(design.rows());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = normal(rng);
  d.y = *d.f0 + eps;
  d.eps = std::move(eps);
  return d;
}

}  // namespace sbvm
