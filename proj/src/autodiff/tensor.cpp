#include "memkit/autodiff/tensor.hpp"

#include <cmath>

#include "memkit/errors.hpp"

namespace memkit::ad {

namespace {
thread_local bool g_grad_enabled = true;

NodePtr new_node(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (rows == 0 || cols == 0) throw ShapeError("tensor extents must be positive");
  if (values.size() != rows * cols) throw ShapeError("value count does not match shape");
  auto n = std::make_shared<Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(values);
  return n;
}
}  // namespace

Tensor Tensor::constant(std::size_t rows, std::size_t cols, double fill) {
  return Tensor(new_node(rows, cols, std::vector<double>(rows * cols, fill)));
}

Tensor Tensor::constant(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(new_node(rows, cols, std::move(values)));
}

Tensor Tensor::leaf(std::size_t rows, std::size_t cols, std::vector<double> values) {
  auto n = new_node(rows, cols, std::move(values));
  n->requires_grad = true;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return constant(1, 1, std::vector<double>{v}); }

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return constant(1, n, std::move(values));
}

const std::vector<double>& Tensor::grad() const {
  if (node_->grad.size() != node_->size()) node_->grad.assign(node_->size(), 0.0);
  return node_->grad;
}

std::vector<double>& Tensor::mutable_grad() {
  if (node_->grad.size() != node_->size()) node_->grad.assign(node_->size(), 0.0);
  return node_->grad;
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() needs a 1x1 tensor");
  return node_->value[0];
}

Tape& Tape::active() {
  thread_local Tape tape;
  return tape;
}

void Tape::record(const NodePtr& node) {
  node->on_tape = true;
  nodes_.push_back(node);
}

void Tape::clear() {
  for (auto& n : nodes_) n->on_tape = false;
  nodes_.clear();
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined()) throw ArgumentError("backward on an undefined tensor");
  if (loss.size() != 1) throw ShapeError("backward needs a scalar loss");
  ++epoch_;
  auto zero = [this](Node* n) {
    if (n->zero_epoch == epoch_) return;
    n->zero_epoch = epoch_;
    n->grad.assign(n->size(), 0.0);
  };
  for (auto& n : nodes_) {
    zero(n.get());
    for (auto& p : n->parents)
      if (p->requires_grad) zero(p.get());
  }
  Node* root = loss.node();
  if (!root->requires_grad) return;
  zero(root);
  root->grad[0] = 1.0;
  if (!root->on_tape) return;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (!n.backward) continue;
    bool nonzero = false;
    for (double g : n.grad)
      if (g != 0.0) {
        nonzero = true;
        break;
      }
    if (nonzero) n.backward(n);
  }
}

void backward(const Tensor& loss) { Tape::active().backward(loss); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor make_op(std::size_t rows, std::size_t cols, std::vector<double> value,
               std::vector<Tensor> parents, BackwardFn backward, const char* op) {
  for (double v : value)
    if (!std::isfinite(v)) throw DomainError(std::string("non-finite value produced by ") + op);
  auto n = new_node(rows, cols, std::move(value));
  n->op = op;
  bool needs = false;
  if (g_grad_enabled)
    for (auto& p : parents) needs = needs || p.requires_grad();
  if (needs) {
    n->requires_grad = true;
    n->backward = std::move(backward);
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.ptr());
    Tape::active().record(n);
  }
  return Tensor(std::move(n));
}

}  // namespace memkit::ad
