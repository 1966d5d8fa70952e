#pragma once

#include <cstddef>
#include <vector>

#include "sbvm/network.hpp"

namespace sbvm {

struct Construction {
  NetworkParams net;
  /// Layer-L relabeling applied before construction: new position i holds old node order[i].
  std::vector<int> node_order;
  bool relabeled = false;
  /// Nonzeros of the input, counting the output shift as active.
  std::size_t s_star = 0;
  std::size_t top_nonzero = 0;  // ||W*_{L+1}||_0
  std::size_t s_new = 0;        // |gamma| of the constructed network
  std::size_t bound = 0;        // s* + 2 p*_L
};

/// Rewrites a network whose top layer may be sparse as an equivalent network
/// with one extra hidden layer of width p_L and a fully connected top layer.
///
/// Node j of the new layer copies the last connected node h(j) <= j,
/// scaled by |w*_{h(j)}| / iota(j), where iota(j) counts the nodes sharing
/// h(j). The new top layer carries sign(w*_{h(j)}) so that negative output
/// weights survive the extra ReLU. If the first node is unconnected, it is
/// swapped with the first connected one.
///
/// Throws ValueError("no connected output node") for an all-zero top layer.
Construction construct_full_top(const NetworkParams& net_star);

}  // namespace sbvm
