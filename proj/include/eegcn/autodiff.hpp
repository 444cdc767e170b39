#pragma once

// Minimal reverse-mode automatic differentiation over dense double tensors.
//
// A Tensor is a shared handle to a node holding row-major data and a lazily
// allocated gradient buffer. Operations executed while a GradientTape is
// active, and that touch at least one tensor requiring gradient, are
// recorded on that tape; everything else produces detached constants.
// Tapes are thread-confined: the active tape is a thread_local.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eegcn::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_size(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  ShapeError(std::string_view kernel, const std::string& detail);
};

class TapeError : public std::logic_error {
  using std::logic_error::logic_error;
};

class NonFiniteError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class GradientTape;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool leaf = true;
  GradientTape* tape = nullptr;
  std::size_t tape_index = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor();

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double v);
  static Tensor from(Shape shape, std::vector<double> data);
  static Tensor scalar(double v);
  // A leaf that accumulates gradient (model weights).
  static Tensor parameter(Shape shape, std::vector<double> data);

  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->value.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->value; }
  std::span<double> mutable_data() { return node_->value; }
  double operator[](std::size_t i) const { return node_->value[i]; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool on_tape() const { return node_->tape != nullptr; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zeros when nothing has been accumulated yet.
  std::span<const double> grad() const;
  void zero_grad();

  // Deep copy with no tape history; keeps requires_grad for parameters.
  Tensor clone() const;
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Records operations executed on this thread while alive. Nested tapes
// shadow the outer one until destroyed.
class GradientTape {
 public:
  GradientTape();
  ~GradientTape();
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  // Populates grad for every requires_grad tensor reachable from loss.
  void backward(const Tensor& loss);
  void reset();
  std::size_t size() const { return nodes_.size(); }

  static GradientTape* active();

  void record(const std::shared_ptr<detail::Node>& node);

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;
  GradientTape* previous_ = nullptr;
  bool consumed_ = false;
};

// Suspends recording for the current scope (evaluation, finite differences).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  GradientTape* saved_;
};

// ---- kernels ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
// Same shape, or b broadcast as a row vector (size == a.cols()) over rows of a.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softmax(const Tensor& a);
Tensor log_softmax(const Tensor& a);
// Reduces a rank-2 tensor over axis 0 (-> 1 x cols) or axis 1 (-> rows x 1).
Tensor mean(const Tensor& a, int axis);
Tensor sum(const Tensor& a);
Tensor transpose(const Tensor& a);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
// Rows of table selected by ids, in order; gradient scatter-adds into table.
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
// Per-row normalization over the last axis with learned gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
// Frobenius norm as a scalar; subgradient 0 at the origin.
Tensor l2_norm(const Tensor& a);
// -log softmax(logits)[label] for a single row of logits.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

struct KernelAttrs {
  double scalar = 1.0;
  int axis = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Dispatch by kernel name ("matmul", "add", "mul", "concat", "relu", "tanh",
// "sigmoid", "softmax", "mean", "transpose", "scale", ...).
Tensor forward_kernel(std::string_view tag, std::span<const Tensor> inputs, const KernelAttrs& attrs = {});

}  // namespace eegcn::ad
