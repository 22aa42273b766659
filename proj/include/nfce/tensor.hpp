#pragma once

// Minimal reverse-mode autodiff over dense row-major tensors.
//
// A Tensor is a shared handle to a graph node. Operations that touch any
// input requiring gradients record a backward closure; backward() walks the
// recorded graph in reverse topological order. Leaf gradients accumulate
// across backward() calls until zero_grad().

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace nfce::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first needed
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    return grad;
  }
};

template <typename T>
class Tensor {
 public:
  using NodePtr = std::shared_ptr<Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  /// Gradient buffer; allocated (zeros) on first access.
  std::span<T> grad() { return node_->ensure_grad(); }
  bool has_grad() const { return node_->grad.size() == node_->data.size(); }

  bool requires_grad() const { return node_->requires_grad; }
  T item() const;
  void zero_grad();

  Node<T>* node() const { return node_.get(); }
  const NodePtr& node_ptr() const { return node_; }

 private:
  NodePtr node_;
};

/// While alive, operations on this thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Builds an op output. Records `backward` only when some input requires grad.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data, std::vector<Tensor<T>> inputs,
                      std::function<void(Node<T>&)> backward);

/// Reverse-mode sweep from a scalar. Throws std::invalid_argument otherwise.
template <typename T>
void backward(const Tensor<T>& loss);

// ---- operators -----------------------------------------------------------

/// x [H, W, Cin], kernel [k, k, Cin/groups, Cout], bias [Cout] or undefined.
/// Zero "same" padding (k odd), output [ceil(H/stride), ceil(W/stride), Cout].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias, int stride = 1,
                 int groups = 1);

/// Normalizes over the last axis, then applies gain/bias [C].
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias, T eps = T(1e-5));

/// Max-subtracted softmax along `axis`.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, std::size_t axis);

/// Exact x * Phi(x).
template <typename T>
Tensor<T> gelu(const Tensor<T>& x);

/// op(a) [m, k] times op(b) [k, n], op = transpose when the flag is set.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool transpose_a = false, bool transpose_b = false);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);
/// a / s with s a single-element tensor.
template <typename T>
Tensor<T> div_scalar(const Tensor<T>& a, const Tensor<T>& s);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);
/// Features [begin, begin + count) of the last axis.
template <typename T>
Tensor<T> slice_last(const Tensor<T>& x, std::size_t begin, std::size_t count);
/// Concatenation along the last axis; leading extents must agree.
template <typename T>
Tensor<T> concat_last(const std::vector<Tensor<T>>& parts);

/// [H, W, C] -> [H/2, W, 2C]: rows [0, H/2) keep features [0, C), rows
/// [H/2, H) move to features [C, 2C).
template <typename T>
Tensor<T> rows_to_features(const Tensor<T>& x);
/// Exact inverse of rows_to_features: [H, W, C] -> [2H, W, C/2].
template <typename T>
Tensor<T> features_to_rows(const Tensor<T>& x);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
/// mean((a - b)^2) over all elements.
template <typename T>
Tensor<T> mse_loss(const Tensor<T>& prediction, const Tensor<T>& target);

}  // namespace nfce::ad
