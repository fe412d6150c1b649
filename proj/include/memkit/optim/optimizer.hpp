#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "memkit/autodiff/parameters.hpp"

namespace memkit::optim {

enum class OptimizerKind { Adam, RmsProp };

OptimizerKind parse_optimizer(std::string_view name);
std::string to_string(OptimizerKind kind);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double clip = 10.0;  // global-norm threshold; <= 0 disables clipping
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  double rms_decay = 0.95, momentum = 0.9, rms_eps = 1e-10;
};

// Defaults of each rule: Adam lr 1e-3, RMSprop lr 1e-4 with momentum 0.9.
OptimizerSpec default_spec(OptimizerKind kind);

// Scales the gradients in place so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_global_norm(std::vector<std::vector<double>*>& grads, double max_norm);

struct StepReport {
  double grad_norm = 0.0;
  bool clipped = false;
  bool skipped = false;  // non-finite gradient, parameters untouched
};

class Optimizer {
 public:
  Optimizer(const OptimizerSpec& spec, const ad::ParameterSet& params);

  // Applies one update from the gradients currently stored on the parameters.
  StepReport step(ad::ParameterSet& params);

  const OptimizerSpec& spec() const { return spec_; }
  std::size_t steps() const { return t_; }
  // Flat state slots in parameter order: Adam (m, v), RMSprop (mean square,
  // momentum buffer).
  std::vector<std::vector<double>>& slots_a() { return a_; }
  std::vector<std::vector<double>>& slots_b() { return b_; }
  void set_steps(std::size_t t) { t_ = t; }

 private:
  OptimizerSpec spec_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> a_, b_;
};

}  // namespace memkit::optim
