#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace memkit::classic {

// Continuous stack: rows of V are appended once and never modified; push
// and pop only move the strengths.
struct NeuralStackState {
  std::vector<Eigen::VectorXd> V;
  std::vector<double> s;
};

struct NeuralStackStep {
  NeuralStackState state;
  Eigen::VectorXd read;
};

// Pops with strength u from the top down, then appends v with strength d.
NeuralStackStep neural_stack_step(const NeuralStackState& state, double push, double pop, const Eigen::VectorXd& value);

// Read from a state: each row contributes min(s_i, max(0, 1 - strength above)).
Eigen::VectorXd neural_stack_read(const NeuralStackState& state, std::size_t dim);

}  // namespace memkit::classic
