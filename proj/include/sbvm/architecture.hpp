#pragma once

#include <cstddef>
#include <vector>

namespace sbvm {

/// Layer widths, sparsity budget and output bound of a sparse ReLU network.
///
/// `widths` holds (p_0, ..., p_{L+1}) with p_0 the input dimension and
/// p_{L+1} = 1. `sparsity` bounds the number of nonzero parameters and must
/// exceed p_L, since the top layer alone carries p_L + 1 active parameters.
struct Architecture {
  std::vector<int> widths;
  std::size_t sparsity = 0;
  double sup_bound = 10.0;

  int depth() const { return static_cast<int>(widths.size()) - 2; }
  int input_dim() const { return widths.front(); }
  int top_width() const { return widths[widths.size() - 2]; }

  /// T = sum_{l=0}^{L} p_{l+1}(p_l + 1).
  std::size_t param_count() const;
  /// Index of the first top-layer coordinate, T - (p_L + 1).
  std::size_t top_offset() const { return param_count() - top_size(); }
  std::size_t top_size() const { return static_cast<std::size_t>(top_width()) + 1; }
  std::size_t deep_count() const { return top_offset(); }
  std::size_t hidden_units() const;

  /// Throws ValueError when an invariant is violated.
  void validate() const;

  bool operator==(const Architecture&) const = default;
};

/// Builds an architecture from hidden widths; p_{L+1} = 1 is appended.
Architecture make_architecture(int input_dim, const std::vector<int>& hidden,
                               std::size_t sparsity, double sup_bound = 10.0);

struct ScheduleConstants {
  double c_depth = 1.0;     // L = max(1, ceil(c_depth * log n))
  double c_width = 1.0;     // N = max(1, floor(c_width * n^e / log n))
  double c_sparsity = 1.0;  // s* = ceil(c_sparsity * n^e)
};

/// Width N before flooring: c_width * n^{p/(2 alpha + p)} / log n.
double schedule_width_raw(double n, double alpha, int p, double c_width = 1.0);

/// Depth, width and sparsity growing with n. Hidden widths are 12 p N and the
/// sparsity is s* + 24 p N (capped at T).
Architecture architecture_schedule(std::size_t n, double alpha, int p,
                                   const ScheduleConstants& constants = {});

}  // namespace sbvm
