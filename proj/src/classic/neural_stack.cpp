#include "memkit/classic/neural_stack.hpp"

#include <algorithm>

#include "memkit/errors.hpp"

namespace memkit::classic {

Eigen::VectorXd neural_stack_read(const NeuralStackState& state, std::size_t dim) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  double above = 0.0;
  for (std::size_t k = state.s.size(); k-- > 0;) {
    const double w = std::min(state.s[k], std::max(0.0, 1.0 - above));
    if (w > 0.0) r += w * state.V[k];
    above += state.s[k];
  }
  return r;
}

NeuralStackStep neural_stack_step(const NeuralStackState& state, double push, double pop, const Eigen::VectorXd& value) {
  if (push < 0.0 || push > 1.0 || pop < 0.0 || pop > 1.0)
    throw ArgumentError("neural_stack_step: push and pop must lie in [0, 1]");
  if (!state.V.empty() && state.V.front().size() != value.size())
    throw ShapeError("neural_stack_step: value width mismatch");
  NeuralStackStep out;
  out.state = state;
  auto& s = out.state.s;
  // Strengths above row i use the previous step's values.
  double above = 0.0;
  for (std::size_t k = s.size(); k-- > 0;) {
    const double old = state.s[k];
    s[k] = std::max(0.0, old - std::max(0.0, pop - above));
    above += old;
  }
  out.state.V.push_back(value);
  s.push_back(push);
  out.read = neural_stack_read(out.state, static_cast<std::size_t>(value.size()));
  return out;
}

}  // namespace memkit::classic
