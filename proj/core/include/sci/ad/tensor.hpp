#pragma once

// Reverse-mode autodiff over dense row-major double tensors.
//
// A Tensor is a shared handle onto a graph node. Ops record their inputs and
// a backward rule when any input requires grad and recording is enabled.
// backward() walks the graph from a scalar in reverse topological order.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace sci::ad {

using Shape = std::vector<int>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

class Tensor;

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  bool straight_through = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const noexcept { return inputs.empty(); }
  std::vector<double>& ensure_grad();
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  int ndim() const { return static_cast<int>(node_->shape.size()); }
  int dim(int axis) const;
  std::size_t numel() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  /// Direct access for optimizers and initializers; bypasses the graph.
  std::span<double> mutable_data() { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }

  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient view; zeros if nothing has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad.clear(); }

  /// Accumulates d(this)/d(leaf) into every requires_grad leaf. Requires a
  /// scalar. Interior gradients are recomputed on each call; leaf gradients add.
  void backward() const;

  const std::string& op() const { return node_->op; }
  Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<Node>& node_ptr() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Whether ops record graph edges on this thread.
bool grad_enabled() noexcept;

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// While active, straight-through nodes forward their input unchanged.
/// Used by gradient checking so finite differences see the same identity map
/// the backward pass uses.
bool straight_through_bypassed() noexcept;

class StraightThroughBypass {
 public:
  StraightThroughBypass();
  ~StraightThroughBypass();
  StraightThroughBypass(const StraightThroughBypass&) = delete;
  StraightThroughBypass& operator=(const StraightThroughBypass&) = delete;

 private:
  bool previous_;
};

/// Builds the result node for an op. `backward` is dropped (and inputs not
/// retained) when no input requires grad or recording is disabled.
Tensor make_result(std::string op, Shape shape, std::vector<double> value,
                   std::vector<Tensor> inputs, std::function<void(Node&)> backward);

/// Debug check: throws std::domain_error if any value is NaN or infinite.
void check_finite(const Tensor& tensor, const std::string& where);

}  // namespace sci::ad
