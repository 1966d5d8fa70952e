#include "sbvm/construct.hpp"

#include <cmath>

#include <numeric>
#include <utility>

#include "sbvm/error.hpp"

namespace sbvm {

namespace {

// Swaps layer-L nodes a and b: rows of W_L and b_L, columns of W_{L+1}.
void swap_top_nodes(NetworkParams& net, int a, int b) {
  const int depth = net.arch().depth();
  const auto& ly = net.layout(depth);
  const auto& top = net.layout(depth + 1);
  auto swap_slots = [&](std::size_t i, std::size_t j) {
    const double vi = net.value(i);
    const bool gi = net.active(i);
    net.set_value(i, net.value(j));
    net.set_active(i, net.active(j));
    net.set_value(j, vi);
    net.set_active(j, gi);
  };
  for (int c = 0; c < ly.cols; ++c) {
    swap_slots(ly.weight_offset + static_cast<std::size_t>(a * ly.cols + c),
               ly.weight_offset + static_cast<std::size_t>(b * ly.cols + c));
  }
  swap_slots(ly.shift_offset + static_cast<std::size_t>(a), ly.shift_offset + static_cast<std::size_t>(b));
  swap_slots(top.weight_offset + static_cast<std::size_t>(a), top.weight_offset + static_cast<std::size_t>(b));
}

}  // namespace

Construction construct_full_top(const NetworkParams& net_star) {
  const Architecture& arch = net_star.arch();
  const int depth = arch.depth();
  const int width = arch.top_width();

  NetworkParams src = net_star;
  Construction out;
  out.node_order.resize(static_cast<std::size_t>(width));
  std::iota(out.node_order.begin(), out.node_order.end(), 0);

  RowMatrix w_star = src.weights(depth + 1);
  int first = -1;
  for (int k = 0; k < width; ++k) {
    if (w_star(0, k) != 0.0) {
      first = k;
      break;
    }
  }
  if (first < 0) throw ValueError("no connected output node");
  if (first > 0) {
    swap_top_nodes(src, 0, first);
    std::swap(out.node_order[0], out.node_order[static_cast<std::size_t>(first)]);
    out.relabeled = true;
    w_star = src.weights(depth + 1);
  }

  // h(j): last connected node up to j; iota(j): nodes sharing h(j).
  std::vector<int> h(static_cast<std::size_t>(width));
  for (int j = 0, last = 0; j < width; ++j) {
    if (w_star(0, j) != 0.0) last = j;
    h[static_cast<std::size_t>(j)] = last;
  }
  std::vector<int> share(static_cast<std::size_t>(width), 0);
  for (int j = 0; j < width; ++j) ++share[static_cast<std::size_t>(h[static_cast<std::size_t>(j)])];

  std::vector<int> hidden(arch.widths.begin() + 1, arch.widths.end() - 1);
  hidden.push_back(width);
  out.top_nonzero = 0;
  for (int k = 0; k < width; ++k) out.top_nonzero += w_star(0, k) != 0.0 ? 1 : 0;
  out.s_star = src.active_deep_count() + out.top_nonzero + 1;
  out.bound = out.s_star + 2 * static_cast<std::size_t>(width);

  NetworkParams net(make_architecture(arch.input_dim(), hidden, out.bound, arch.sup_bound));
  for (int l = 1; l <= depth; ++l) {
    const auto& from = src.layout(l);
    const auto& to = net.layout(l);
    const std::size_t count = to.shift_offset + static_cast<std::size_t>(to.rows) - to.weight_offset;
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = from.weight_offset + i;
      net.set(to.weight_offset + i, src.effective(j), src.active(j));
    }
  }

  RowMatrix routing = RowMatrix::Zero(width, width);
  RowMatrix top(1, width);
  for (int j = 0; j < width; ++j) {
    const int hj = h[static_cast<std::size_t>(j)];
    const double w = w_star(0, hj);
    routing(j, hj) = std::abs(w) / static_cast<double>(share[static_cast<std::size_t>(hj)]);
    top(0, j) = w > 0.0 ? 1.0 : -1.0;
  }
  net.set_weights(depth + 1, routing);
  net.set_weights(depth + 2, top);
  Eigen::VectorXd b_top(1);
  b_top(0) = src.shifts(depth + 1)(0);
  net.set_shifts(depth + 2, b_top);
  out.s_new = net.active_count();
  out.net = std::move(net);
  return out;
}

}  // namespace sbvm
