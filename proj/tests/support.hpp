#pragma once

#include <Eigen/Core>

#include <random>
#include <vector>

#include "sbvm/architecture.hpp"
#include "sbvm/network.hpp"
#include "sbvm/rng.hpp"

namespace sbvm::testing {

// Dense-budget architecture (s = T).
inline Architecture arch_of(int p, const std::vector<int>& hidden) {
  Architecture a = make_architecture(p, hidden, 0);
  a.sparsity = a.param_count();
  return a;
}

// Deep coordinates active with probability `keep`, values U[-1, 1]; top layer N(0, 1).
inline NetworkParams random_net(const Architecture& a, Rng& rng, double keep = 0.6) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution on(keep);
  std::normal_distribution<double> normal(0.0, 1.0);
  NetworkParams net(a);
  for (std::size_t j = 0; j < a.param_count(); ++j) {
    if (j >= a.top_offset()) {
      net.set(j, normal(rng), true);
    } else if (on(rng)) {
      net.set(j, unif(rng), true);
    }
  }
  return net;
}

inline Eigen::MatrixXd uniform_design(std::size_t n, int p, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = unif(rng);
  }
  return x;
}

}  // namespace sbvm::testing
