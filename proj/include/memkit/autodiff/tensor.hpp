#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace memkit::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Propagates self.grad into the grads of the node's parents.
using BackwardFn = std::function<void(const Node& self)>;

struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  mutable std::vector<double> grad;
  std::vector<NodePtr> parents;
  BackwardFn backward;
  const char* op = "leaf";
  bool requires_grad = false;
  bool on_tape = false;
  std::uint64_t zero_epoch = 0;

  std::size_t size() const { return rows * cols; }
};

// A 2-D array of doubles that may take part in reverse-mode differentiation.
// Vectors are 1 x n rows; a batch of vectors is B x n.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor constant(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor constant(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor leaf(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> values);

  bool defined() const { return static_cast<bool>(node_); }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->size(); }
  bool requires_grad() const { return node_->requires_grad; }

  const std::vector<double>& value() const { return node_->value; }
  // Direct write access for optimizers and finite differences. Invalidates
  // any graph built on top of this tensor.
  std::vector<double>& mutable_value() { return node_->value; }
  const std::vector<double>& grad() const;
  std::vector<double>& mutable_grad();

  double item() const;
  double at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }

  Node* node() const { return node_.get(); }
  const NodePtr& ptr() const { return node_; }

 private:
  NodePtr node_;
};

// Records operations in creation order. Creation order is a valid
// topological order, so backward is a single reverse sweep.
class Tape {
 public:
  static Tape& active();

  void record(const NodePtr& node);
  void clear();
  std::size_t size() const { return nodes_.size(); }
  const std::vector<NodePtr>& nodes() const { return nodes_; }

  // Zeroes every gradient reachable from recorded nodes, seeds loss with 1
  // and sweeps the tape in reverse.
  void backward(const Tensor& loss);

 private:
  std::vector<NodePtr> nodes_;
  std::uint64_t epoch_ = 0;
};

void backward(const Tensor& loss);

bool grad_enabled();

// Disables recording in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Builds an op result. Records it when grad mode is on and a parent needs a
// gradient; throws DomainError when the value holds NaN or Inf.
Tensor make_op(std::size_t rows, std::size_t cols, std::vector<double> value,
               std::vector<Tensor> parents, BackwardFn backward, const char* op);

// Accumulates into a parent's gradient only when it participates.
inline bool wants_grad(const Node* n) { return n->requires_grad; }

}  // namespace memkit::ad
