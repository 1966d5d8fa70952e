#include "sbvm/network.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "sbvm/error.hpp"

namespace sbvm {

namespace {

std::vector<LayerLayout> build_layouts(const Architecture& arch) {
  std::vector<LayerLayout> out;
  std::size_t off = 0;
  for (std::size_t l = 1; l < arch.widths.size(); ++l) {
    LayerLayout ly;
    ly.rows = arch.widths[l];
    ly.cols = arch.widths[l - 1];
    ly.weight_offset = off;
    off += static_cast<std::size_t>(ly.rows) * static_cast<std::size_t>(ly.cols);
    ly.shift_offset = off;
    off += static_cast<std::size_t>(ly.rows);
    out.push_back(ly);
  }
  return out;
}

void check_input(const NetworkParams& net, Eigen::Index dim) {
  if (dim != net.arch().input_dim()) {
    throw DimensionError("layer 1: input has dimension " + std::to_string(dim) + ", expected p_0=" +
                         std::to_string(net.arch().input_dim()));
  }
}

}  // namespace

NetworkParams::NetworkParams(Architecture arch)
    : arch_(std::move(arch)),
      values_(arch_.param_count(), 0.0),
      gamma_(arch_.param_count(), 0),
      layouts_(build_layouts(arch_)) {
  std::fill(gamma_.begin() + static_cast<std::ptrdiff_t>(arch_.top_offset()), gamma_.end(), 1);
}

NetworkParams::NetworkParams(Architecture arch, std::vector<double> values, std::vector<std::uint8_t> gamma)
    : arch_(std::move(arch)), values_(std::move(values)), gamma_(std::move(gamma)), layouts_(build_layouts(arch_)) {
  const std::size_t t = arch_.param_count();
  if (values_.size() != t || gamma_.size() != t) {
    throw DimensionError("parameter vector has " + std::to_string(values_.size()) + " values and " +
                         std::to_string(gamma_.size()) + " mask bits, expected T=" + std::to_string(t));
  }
  for (auto& g : gamma_) g = g ? 1 : 0;
}

void NetworkParams::set(std::size_t j, double v, bool on) {
  gamma_[j] = on ? 1 : 0;
  values_[j] = on ? v : 0.0;
}

std::size_t NetworkParams::active_count() const {
  return static_cast<std::size_t>(std::count(gamma_.begin(), gamma_.end(), std::uint8_t{1}));
}

std::size_t NetworkParams::active_deep_count() const {
  return static_cast<std::size_t>(
      std::count(gamma_.begin(), gamma_.begin() + static_cast<std::ptrdiff_t>(arch_.top_offset()), std::uint8_t{1}));
}

SlotInfo NetworkParams::slot(std::size_t j) const {
  for (std::size_t l = 0; l < layouts_.size(); ++l) {
    const auto& ly = layouts_[l];
    const std::size_t end = ly.shift_offset + static_cast<std::size_t>(ly.rows);
    if (j < end) {
      SlotInfo s;
      s.layer = static_cast<int>(l) + 1;
      if (j >= ly.shift_offset) {
        s.row = static_cast<int>(j - ly.shift_offset);
      } else {
        const std::size_t k = j - ly.weight_offset;
        s.row = static_cast<int>(k / static_cast<std::size_t>(ly.cols));
        s.col = static_cast<int>(k % static_cast<std::size_t>(ly.cols));
      }
      return s;
    }
  }
  throw DimensionError("coordinate " + std::to_string(j) + " outside parameter vector");
}

RowMatrix NetworkParams::weights(int layer) const {
  const auto& ly = layout(layer);
  RowMatrix w(ly.rows, ly.cols);
  for (int r = 0; r < ly.rows; ++r) {
    for (int c = 0; c < ly.cols; ++c) {
      w(r, c) = effective(ly.weight_offset + static_cast<std::size_t>(r * ly.cols + c));
    }
  }
  return w;
}

Eigen::VectorXd NetworkParams::shifts(int layer) const {
  const auto& ly = layout(layer);
  Eigen::VectorXd b(ly.rows);
  for (int r = 0; r < ly.rows; ++r) b(r) = effective(ly.shift_offset + static_cast<std::size_t>(r));
  return b;
}

void NetworkParams::set_weights(int layer, const RowMatrix& w) {
  const auto& ly = layout(layer);
  if (w.rows() != ly.rows || w.cols() != ly.cols) {
    throw DimensionError("layer " + std::to_string(layer) + ": weight matrix is " + std::to_string(w.rows()) + "x" +
                         std::to_string(w.cols()) + ", expected " + std::to_string(ly.rows) + "x" +
                         std::to_string(ly.cols));
  }
  for (int r = 0; r < ly.rows; ++r) {
    for (int c = 0; c < ly.cols; ++c) {
      const std::size_t j = ly.weight_offset + static_cast<std::size_t>(r * ly.cols + c);
      set(j, w(r, c), w(r, c) != 0.0 || j >= arch_.top_offset());
    }
  }
}

void NetworkParams::set_shifts(int layer, const Eigen::VectorXd& b) {
  const auto& ly = layout(layer);
  if (b.size() != ly.rows) {
    throw DimensionError("layer " + std::to_string(layer) + ": shift vector has length " + std::to_string(b.size()) +
                         ", expected " + std::to_string(ly.rows));
  }
  for (int r = 0; r < ly.rows; ++r) {
    const std::size_t j = ly.shift_offset + static_cast<std::size_t>(r);
    set(j, b(r), b(r) != 0.0 || j >= arch_.top_offset());
  }
}

Eigen::VectorXd NetworkParams::top_layer() const {
  const std::size_t off = arch_.top_offset();
  Eigen::VectorXd theta(static_cast<Eigen::Index>(arch_.top_size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = effective(off + static_cast<std::size_t>(i));
  return theta;
}

void NetworkParams::set_top_layer(const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != arch_.top_size()) {
    throw DimensionError("top layer needs " + std::to_string(arch_.top_size()) + " values");
  }
  const std::size_t off = arch_.top_offset();
  for (Eigen::Index i = 0; i < theta.size(); ++i) set(off + static_cast<std::size_t>(i), theta(i), true);
}

std::string NetworkParams::deep_key() const {
  const std::size_t d = arch_.top_offset();
  std::string key(d + d * sizeof(double), '\0');
  for (std::size_t j = 0; j < d; ++j) {
    key[j] = static_cast<char>(gamma_[j]);
    const double v = effective(j);
    std::memcpy(key.data() + d + j * sizeof(double), &v, sizeof(double));
  }
  return key;
}

std::optional<std::string> check_invariants(const NetworkParams& net) {
  const auto& arch = net.arch();
  for (std::size_t j = arch.top_offset(); j < net.size(); ++j) {
    if (!net.active(j)) return "top-layer coordinate " + std::to_string(j) + " is inactive";
  }
  for (std::size_t j = 0; j < net.size(); ++j) {
    if (!net.active(j) && net.value(j) != 0.0) return "masked coordinate " + std::to_string(j) + " holds a nonzero value";
  }
  if (net.active_count() > arch.sparsity) {
    return "|gamma|=" + std::to_string(net.active_count()) + " exceeds s=" + std::to_string(arch.sparsity);
  }
  return std::nullopt;
}

HiddenState hidden_state(const NetworkParams& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  check_input(net, x.size());
  HiddenState h;
  Eigen::VectorXd z = x;
  for (int l = 1; l <= net.arch().depth(); ++l) {
    Eigen::VectorXd a = net.weights(l) * z + net.shifts(l);
    z = a.cwiseMax(0.0);
    h.layers.push_back(z);
  }
  return h;
}

double forward(const NetworkParams& net, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const HiddenState h = hidden_state(net, x);
  const int top = net.arch().depth() + 1;
  return (net.weights(top) * h.layers.back())(0) + net.shifts(top)(0);
}

std::vector<Eigen::MatrixXd> layer_outputs(const NetworkParams& net, const Eigen::Ref<const Eigen::MatrixXd>& design) {
  check_input(net, design.cols());
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(net.arch().depth()) + 1);
  out.emplace_back(design);
  for (int l = 1; l <= net.arch().depth(); ++l) {
    const RowMatrix w = net.weights(l);
    const Eigen::VectorXd b = net.shifts(l);
    Eigen::MatrixXd a = out.back() * w.transpose();
    a.rowwise() += b.transpose();
    out.emplace_back(a.cwiseMax(0.0));
  }
  return out;
}

Eigen::MatrixXd hidden_features(const NetworkParams& net, const Eigen::Ref<const Eigen::MatrixXd>& design) {
  return layer_outputs(net, design).back();
}

Eigen::VectorXd forward_batch(const NetworkParams& net, const Eigen::Ref<const Eigen::MatrixXd>& design) {
  const Eigen::MatrixXd z = hidden_features(net, design);
  const int top = net.arch().depth() + 1;
  Eigen::VectorXd f = z * net.weights(top).transpose();
  f.array() += net.shifts(top)(0);
  return f;
}

double sup_norm_surrogate(const NetworkParams& net, const Eigen::Ref<const Eigen::MatrixXd>& design) {
  if (design.rows() == 0) return 0.0;
  return forward_batch(net, design).cwiseAbs().maxCoeff();
}

}  // namespace sbvm
