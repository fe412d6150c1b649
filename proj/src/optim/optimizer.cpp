#include "memkit/optim/optimizer.hpp"

#include <cmath>

#include "memkit/errors.hpp"

namespace memkit::optim {

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam") return OptimizerKind::Adam;
  if (name == "rmsprop") return OptimizerKind::RmsProp;
  throw ArgumentError("unknown optimizer: " + std::string(name));
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::Adam ? "adam" : "rmsprop"; }

OptimizerSpec default_spec(OptimizerKind kind) {
  OptimizerSpec s;
  s.kind = kind;
  s.lr = kind == OptimizerKind::Adam ? 1e-3 : 1e-4;
  return s;
}

double clip_global_norm(std::vector<std::vector<double>*>& grads, double max_norm) {
  double sq = 0;
  for (auto* g : grads)
    for (double v : *g) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto* g : grads)
      for (double& v : *g) v *= s;
  }
  return norm;
}

Optimizer::Optimizer(const OptimizerSpec& spec, const ad::ParameterSet& params) : spec_(spec) {
  if (!(spec.lr > 0)) throw ArgumentError("learning rate must be positive");
  for (const auto& p : params.items()) {
    a_.emplace_back(p.tensor.size(), 0.0);
    b_.emplace_back(p.tensor.size(), 0.0);
  }
}

StepReport Optimizer::step(ad::ParameterSet& params) {
  auto& items = params.items();
  if (items.size() != a_.size()) throw ShapeError("optimizer: parameter count changed");
  StepReport r;
  std::vector<std::vector<double>*> grads;
  for (std::size_t i = 0; i < items.size(); ++i) {
    ad::Tensor t = items[i].tensor;
    if (t.size() != a_[i].size()) throw ShapeError("optimizer: parameter shape changed");
    grads.push_back(&t.mutable_grad());
  }
  for (auto* g : grads)
    for (double v : *g)
      if (!std::isfinite(v)) {
        r.skipped = true;
        r.grad_norm = NAN;
        return r;
      }
  r.grad_norm = clip_global_norm(grads, spec_.clip);
  r.clipped = spec_.clip > 0 && r.grad_norm > spec_.clip;
  ++t_;
  const double bc1 = 1 - std::pow(spec_.beta1, static_cast<double>(t_));
  const double bc2 = 1 - std::pow(spec_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < items.size(); ++i) {
    ad::Tensor t = items[i].tensor;
    auto& w = t.mutable_value();
    const auto& g = *grads[i];
    auto& a = a_[i];
    auto& b = b_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (spec_.kind == OptimizerKind::Adam) {
        a[k] = spec_.beta1 * a[k] + (1 - spec_.beta1) * g[k];
        b[k] = spec_.beta2 * b[k] + (1 - spec_.beta2) * g[k] * g[k];
        w[k] -= spec_.lr * (a[k] / bc1) / (std::sqrt(b[k] / bc2) + spec_.adam_eps);
      } else {
        a[k] = spec_.rms_decay * a[k] + (1 - spec_.rms_decay) * g[k] * g[k];
        b[k] = spec_.momentum * b[k] + spec_.lr * g[k] / std::sqrt(a[k] + spec_.rms_eps);
        w[k] -= b[k];
      }
    }
  }
  return r;
}

}  // namespace memkit::optim
