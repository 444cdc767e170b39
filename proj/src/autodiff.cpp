#include "eegcn/autodiff.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace eegcn::ad {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

thread_local GradientTape* g_active_tape = nullptr;

std::size_t rows_of(const Shape& s) { return s.size() == 2 ? s[0] : 1; }
std::size_t cols_of(const Shape& s) {
  if (s.empty()) return 1;
  return s.back();
}

ConstMap view(const Node& n) {
  return {n.value.data(), static_cast<Eigen::Index>(rows_of(n.shape)),
          static_cast<Eigen::Index>(cols_of(n.shape))};
}

MutMap grad_view(Node& n) {
  auto& g = n.ensure_grad();
  return {g.data(), static_cast<Eigen::Index>(rows_of(n.shape)), static_cast<Eigen::Index>(cols_of(n.shape))};
}

ConstMap out_grad(const Node& n) {
  return {n.grad.data(), static_cast<Eigen::Index>(rows_of(n.shape)), static_cast<Eigen::Index>(cols_of(n.shape))};
}

using BackwardFn = std::function<void(Node&)>;

Tensor make_result(Shape shape, std::vector<double> value, std::initializer_list<NodePtr> inputs,
                   BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  GradientTape* tape = g_active_tape;
  const bool track = tape != nullptr && std::any_of(inputs.begin(), inputs.end(),
                                                    [](const NodePtr& p) { return p->requires_grad; });
  if (track) {
    node->requires_grad = true;
    node->leaf = false;
    node->inputs.assign(inputs.begin(), inputs.end());
    node->backward = std::move(fn);
    tape->record(node);
  }
  return Tensor(node);
}

Tensor make_result_n(Shape shape, std::vector<double> value, std::vector<NodePtr> inputs, BackwardFn fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  GradientTape* tape = g_active_tape;
  const bool track = tape != nullptr && std::any_of(inputs.begin(), inputs.end(),
                                                    [](const NodePtr& p) { return p->requires_grad; });
  if (track) {
    node->requires_grad = true;
    node->leaf = false;
    node->inputs = std::move(inputs);
    node->backward = std::move(fn);
    tape->record(node);
  }
  return Tensor(node);
}

bool is_row_broadcast(const Tensor& a, const Tensor& b) {
  return b.shape() != a.shape() && b.rows() == 1 && b.size() == a.cols() && a.rank() <= 2;
}

template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D dfdx_from_y) {
  std::vector<double> out(a.size());
  auto in = a.data();
  std::transform(in.begin(), in.end(), out.begin(), f);
  return make_result(a.shape(), std::move(out), {a.node()}, [dfdx_from_y](Node& self) {
    Node& x = *self.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = x.ensure_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * dfdx_from_y(x.value[i], self.value[i]);
  });
}

// Elementwise binary op with optional row broadcast of b.
template <typename F, typename DA, typename DB>
Tensor binary(std::string_view kernel, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  const bool bcast = is_row_broadcast(a, b);
  if (!bcast && a.shape() != b.shape()) {
    throw ShapeError(kernel, shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], y[bcast ? i % cols : i]);
  return make_result(a.shape(), std::move(out), {a.node(), b.node()}, [bcast, cols, da, db](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    const auto& g = self.grad;
    if (na.requires_grad) {
      auto& ga = na.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * da(na.value[i], nb.value[bcast ? i % cols : i]);
    }
    if (nb.requires_grad) {
      auto& gb = nb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t j = bcast ? i % cols : i;
        gb[j] += g[i] * db(na.value[i], nb.value[j]);
      }
    }
  });
}

void require_rank_le2(std::string_view kernel, const Tensor& a) {
  if (a.rank() > 2) throw ShapeError(kernel, "expected rank <= 2, got " + shape_str(a.shape()));
}

}  // namespace

// ---- shapes / errors -------------------------------------------------------

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

ShapeError::ShapeError(std::string_view kernel, const std::string& detail)
    : std::invalid_argument("shape mismatch in kernel '" + std::string(kernel) + "': " + detail) {}

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor() : node_(std::make_shared<Node>()) { node_->shape = {0}; }

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double v) {
  const auto n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, v));
}

Tensor Tensor::from(Shape shape, std::vector<double> data) {
  if (shape_size(shape) != data.size()) {
    throw ShapeError("from", shape_str(shape) + " holds " + std::to_string(shape_size(shape)) +
                                 " values, got " + std::to_string(data.size()));
  }
  for (auto d : shape) {
    if (d == 0) throw ShapeError("from", "zero-length dimension in " + shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  return Tensor(node);
}

Tensor Tensor::scalar(double v) { return from({}, {v}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> data) {
  Tensor t = from(std::move(shape), std::move(data));
  t.node_->requires_grad = true;
  return t;
}

std::size_t Tensor::rows() const { return rows_of(node_->shape); }
std::size_t Tensor::cols() const { return cols_of(node_->shape); }

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item", "expected a single value, got " + shape_str(shape()));
  return node_->value[0];
}

std::span<const double> Tensor::grad() const { return node_->ensure_grad(); }

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::clone() const {
  auto node = std::make_shared<Node>();
  node->shape = node_->shape;
  node->value = node_->value;
  node->requires_grad = node_->requires_grad && node_->leaf;
  return Tensor(node);
}

Tensor Tensor::detach() const { return from(node_->shape, node_->value); }

// ---- tape ------------------------------------------------------------------

GradientTape::GradientTape() : previous_(g_active_tape) { g_active_tape = this; }

GradientTape::~GradientTape() {
  reset();
  g_active_tape = previous_;
}

GradientTape* GradientTape::active() { return g_active_tape; }

void GradientTape::record(const std::shared_ptr<Node>& node) {
  node->tape = this;
  node->tape_index = nodes_.size();
  nodes_.push_back(node);
}

void GradientTape::backward(const Tensor& loss) {
  if (consumed_) throw TapeError("backward called twice on the same tape without reset()");
  if (loss.size() != 1) throw TapeError("backward requires a scalar loss, got shape " + shape_str(loss.shape()));
  const auto& root = loss.node();
  if (root->tape != this) {
    consumed_ = true;  // loss does not depend on any recorded parameter
    return;
  }
  consumed_ = true;
  root->ensure_grad()[0] += 1.0;
  for (std::size_t i = root->tape_index + 1; i-- > 0;) {
    Node& node = *nodes_[i];
    if (node.grad.empty() || !node.backward) continue;
    node.backward(node);
  }
}

void GradientTape::reset() {
  for (auto& node : nodes_) {
    node->tape = nullptr;
    node->inputs.clear();
    node->backward = nullptr;
  }
  nodes_.clear();
  consumed_ = false;
}

NoGradGuard::NoGradGuard() : saved_(g_active_tape) { g_active_tape = nullptr; }
NoGradGuard::~NoGradGuard() { g_active_tape = saved_; }

// ---- kernels ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank_le2("matmul", a);
  require_rank_le2("matmul", b);
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul", "inner dimensions differ: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const std::size_t n = a.rows();
  const std::size_t m = b.cols();
  std::vector<double> out(n * m);
  MutMap(out.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)).noalias() =
      view(*a.node()) * view(*b.node());
  return make_result({n, m}, std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& na = *self.inputs[0];
    Node& nb = *self.inputs[1];
    auto g = out_grad(self);
    if (na.requires_grad) grad_view(na).noalias() += g * view(nb).transpose();
    if (nb.requires_grad) grad_view(nb).noalias() += view(na).transpose() * g;
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softmax(const Tensor& a) {
  require_rank_le2("softmax", a);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  auto x = a.data();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = x.data() + i * c;
    double* o = out.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (o[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) o[j] /= z;
  }
  return make_result(a.shape(), std::move(out), {a.node()}, [r, c](Node& self) {
    Node& x = *self.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = x.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      const double* y = self.value.data() + i * c;
      const double* g = self.grad.data() + i * c;
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += g[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor log_softmax(const Tensor& a) {
  require_rank_le2("log_softmax", a);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  auto x = a.data();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = x.data() + i * c;
    const double mx = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = row[j] - lse;
  }
  return make_result(a.shape(), std::move(out), {a.node()}, [r, c](Node& self) {
    Node& x = *self.inputs[0];
    if (!x.requires_grad) return;
    auto& gx = x.ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      const double* y = self.value.data() + i * c;
      const double* g = self.grad.data() + i * c;
      double gsum = 0.0;
      for (std::size_t j = 0; j < c; ++j) gsum += g[j];
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j] - std::exp(y[j]) * gsum;
    }
  });
}

Tensor mean(const Tensor& a, int axis) {
  require_rank_le2("mean", a);
  if (axis != 0 && axis != 1) throw ShapeError("mean", "axis must be 0 or 1, got " + std::to_string(axis));
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  auto x = a.data();
  if (axis == 0) {
    std::vector<double> out(c, 0.0);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out[j] += x[i * c + j];
    for (auto& v : out) v /= static_cast<double>(r);
    return make_result({1, c}, std::move(out), {a.node()}, [r, c](Node& self) {
      Node& in = *self.inputs[0];
      if (!in.requires_grad) return;
      auto& g = in.ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[j] / static_cast<double>(r);
    });
  }
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i] += x[i * c + j];
    out[i] /= static_cast<double>(c);
  }
  return make_result({r, 1}, std::move(out), {a.node()}, [r, c](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i] / static_cast<double>(c);
  });
}

Tensor sum(const Tensor& a) {
  auto x = a.data();
  const double s = std::accumulate(x.begin(), x.end(), 0.0);
  return make_result({}, {s}, {a.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor transpose(const Tensor& a) {
  require_rank_le2("transpose", a);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  std::vector<double> out(a.size());
  MutMap(out.data(), static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = view(*a.node()).transpose();
  return make_result({c, r}, std::move(out), {a.node()}, [](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    grad_view(in) += out_grad(self).transpose();
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat", "no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank_le2("concat", p);
    if (p.rows() != r) {
      throw ShapeError("concat", "row counts differ: " + shape_str(parts[0].shape()) + " vs " + shape_str(p.shape()));
    }
    total += p.cols();
  }
  std::vector<double> out(r * total);
  std::vector<NodePtr> inputs;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.cols();
    auto x = p.data();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(x.data() + i * c, c, out.data() + i * total + off);
    inputs.push_back(p.node());
    offsets.push_back(off);
    off += c;
  }
  return make_result_n({r, total}, std::move(out), std::move(inputs), [r, total, offsets](Node& self) {
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      Node& in = *self.inputs[k];
      if (!in.requires_grad) continue;
      const std::size_t c = cols_of(in.shape);
      auto& g = in.ensure_grad();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) g[i * c + j] += self.grad[i * total + offsets[k] + j];
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows", "no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_rank_le2("concat_rows", p);
    if (p.cols() != c) {
      throw ShapeError("concat_rows",
                       "column counts differ: " + shape_str(parts[0].shape()) + " vs " + shape_str(p.shape()));
    }
    total += p.rows();
  }
  std::vector<double> out;
  out.reserve(total * c);
  std::vector<NodePtr> inputs;
  for (const auto& p : parts) {
    out.insert(out.end(), p.data().begin(), p.data().end());
    inputs.push_back(p.node());
  }
  return make_result_n({total, c}, std::move(out), std::move(inputs), [](Node& self) {
    std::size_t off = 0;
    for (auto& ptr : self.inputs) {
      Node& in = *ptr;
      const std::size_t n = in.value.size();
      if (in.requires_grad) {
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
      }
      off += n;
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank_le2("slice_cols", a);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  if (begin >= end || end > c) {
    throw ShapeError("slice_cols", "range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                       ") invalid for " + shape_str(a.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<double> out(r * w);
  auto x = a.data();
  for (std::size_t i = 0; i < r; ++i) std::copy_n(x.data() + i * c + begin, w, out.data() + i * w);
  return make_result({r, w}, std::move(out), {a.node()}, [r, c, w, begin](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * c + begin + j] += self.grad[i * w + j];
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  require_rank_le2("slice_rows", a);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  if (begin >= end || end > r) {
    throw ShapeError("slice_rows", "range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                       ") invalid for " + shape_str(a.shape()));
  }
  auto x = a.data();
  std::vector<double> out(x.begin() + static_cast<std::ptrdiff_t>(begin * c),
                          x.begin() + static_cast<std::ptrdiff_t>(end * c));
  return make_result({end - begin, c}, std::move(out), {a.node()}, [begin, c](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * c + i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank_le2("gather_rows", table);
  if (ids.empty()) throw ShapeError("gather_rows", "empty id list");
  const std::size_t c = table.cols();
  const std::size_t r = table.rows();
  std::vector<double> out(ids.size() * c);
  auto x = table.data();
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (ids[k] >= r) {
      throw ShapeError("gather_rows", "id " + std::to_string(ids[k]) + " out of range for " + shape_str(table.shape()));
    }
    std::copy_n(x.data() + ids[k] * c, c, out.data() + k * c);
  }
  std::vector<std::size_t> idv(ids.begin(), ids.end());
  return make_result({ids.size(), c}, std::move(out), {table.node()}, [idv = std::move(idv), c](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (std::size_t k = 0; k < idv.size(); ++k)
      for (std::size_t j = 0; j < c; ++j) g[idv[k] * c + j] += self.grad[k * c + j];
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_rank_le2("layer_norm", x);
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (gain.size() != c || bias.size() != c) {
    throw ShapeError("layer_norm", shape_str(x.shape()) + " with gain " + shape_str(gain.shape()) + " and bias " +
                                       shape_str(bias.shape()));
  }
  auto in = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(r);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = in.data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (row[j] - mu) * inv_std[i];
      out[i * c + j] = xhat[i * c + j] * gv[j] + bv[j];
    }
  }
  return make_result(
      x.shape(), std::move(out), {x.node(), gain.node(), bias.node()},
      [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
        Node& nx = *self.inputs[0];
        Node& ng = *self.inputs[1];
        Node& nb = *self.inputs[2];
        const auto& g = self.grad;
        if (ng.requires_grad) {
          auto& gg = ng.ensure_grad();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gg[j] += g[i * c + j] * xhat[i * c + j];
        }
        if (nb.requires_grad) {
          auto& gb = nb.ensure_grad();
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gb[j] += g[i * c + j];
        }
        if (nx.requires_grad) {
          auto& gx = nx.ensure_grad();
          const double inv_c = 1.0 / static_cast<double>(c);
          for (std::size_t i = 0; i < r; ++i) {
            double sum_d = 0.0;
            double sum_dx = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              const double d = g[i * c + j] * ng.value[j];
              sum_d += d;
              sum_dx += d * xhat[i * c + j];
            }
            for (std::size_t j = 0; j < c; ++j) {
              const double d = g[i * c + j] * ng.value[j];
              gx[i * c + j] += inv_std[i] * (d - inv_c * sum_d - xhat[i * c + j] * inv_c * sum_dx);
            }
          }
        }
      });
}

Tensor l2_norm(const Tensor& a) {
  auto x = a.data();
  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double norm = std::sqrt(ss);
  return make_result({}, {norm}, {a.node()}, [norm](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad || norm == 0.0) return;
    auto& g = in.ensure_grad();
    const double k = self.grad[0] / norm;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += k * in.value[i];
  });
}

Tensor cross_entropy(const Tensor& logits, std::size_t label) {
  if (logits.rows() != 1 || logits.rank() > 2) {
    throw ShapeError("cross_entropy", "expected a single row of logits, got " + shape_str(logits.shape()));
  }
  if (label >= logits.cols()) {
    throw ShapeError("cross_entropy", "label " + std::to_string(label) + " out of range for " +
                                          shape_str(logits.shape()));
  }
  auto x = logits.data();
  const double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  return make_result({}, {lse - x[label]}, {logits.node()}, [label, lse](Node& self) {
    Node& in = *self.inputs[0];
    if (!in.requires_grad) return;
    auto& g = in.ensure_grad();
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] += self.grad[0] * (std::exp(in.value[j] - lse) - (j == label ? 1.0 : 0.0));
    }
  });
}

Tensor forward_kernel(std::string_view tag, std::span<const Tensor> inputs, const KernelAttrs& attrs) {
  auto need = [&](std::size_t n) {
    if (inputs.size() != n) {
      throw ShapeError(tag, "expected " + std::to_string(n) + " inputs, got " + std::to_string(inputs.size()));
    }
  };
  if (tag == "matmul") return need(2), matmul(inputs[0], inputs[1]);
  if (tag == "add") return need(2), add(inputs[0], inputs[1]);
  if (tag == "sub") return need(2), sub(inputs[0], inputs[1]);
  if (tag == "mul") return need(2), mul(inputs[0], inputs[1]);
  if (tag == "concat") return concat_cols(inputs);
  if (tag == "concat_rows") return concat_rows(inputs);
  if (tag == "relu") return need(1), relu(inputs[0]);
  if (tag == "tanh") return need(1), tanh(inputs[0]);
  if (tag == "sigmoid") return need(1), sigmoid(inputs[0]);
  if (tag == "softmax") return need(1), softmax(inputs[0]);
  if (tag == "log_softmax") return need(1), log_softmax(inputs[0]);
  if (tag == "mean") return need(1), mean(inputs[0], attrs.axis);
  if (tag == "sum") return need(1), sum(inputs[0]);
  if (tag == "transpose") return need(1), transpose(inputs[0]);
  if (tag == "scale") return need(1), scale(inputs[0], attrs.scalar);
  if (tag == "slice_cols") return need(1), slice_cols(inputs[0], attrs.begin, attrs.end);
  if (tag == "slice_rows") return need(1), slice_rows(inputs[0], attrs.begin, attrs.end);
  if (tag == "layer_norm") return need(3), layer_norm(inputs[0], inputs[1], inputs[2]);
  if (tag == "l2_norm") return need(1), l2_norm(inputs[0]);
  throw std::invalid_argument("unknown kernel '" + std::string(tag) + "'");
}

}  // namespace eegcn::ad
