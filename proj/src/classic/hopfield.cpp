#include "memkit/classic/hopfield.hpp"

#include <cmath>

#include "memkit/errors.hpp"

namespace memkit::classic {

namespace {

void check_bipolar(const Eigen::VectorXd& x, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(x.size()) != n) throw ShapeError(std::string(what) + ": length mismatch");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] != 1.0 && x[i] != -1.0) throw ArgumentError(std::string(what) + ": entries must be +1 or -1");
}

}  // namespace

HopfieldNet::HopfieldNet(std::size_t n) : W_(Eigen::MatrixXd::Zero(n, n)) {
  if (n == 0) throw ArgumentError("HopfieldNet: size must be positive");
}

void HopfieldNet::store(const Eigen::VectorXd& pattern) {
  check_bipolar(pattern, size(), "HopfieldNet::store");
  W_.noalias() += pattern * pattern.transpose();
  W_.diagonal().setZero();
}

void HopfieldNet::store_all(const std::vector<Eigen::VectorXd>& patterns) {
  for (const auto& p : patterns) store(p);
}

double HopfieldNet::energy(const Eigen::VectorXd& x) const { return -0.5 * x.dot(W_ * x); }

RecallResult hopfield_recall(const HopfieldNet& net, const Eigen::VectorXd& cue, std::size_t max_sweeps,
                             std::uint64_t start_seed) {
  const std::size_t n = net.size();
  check_bipolar(cue, n, "hopfield_recall");
  const auto& W = net.weights();
  RecallResult out;
  out.state = cue;
  double e = net.energy(cue);
  out.energies.push_back(e);
  const std::size_t start = static_cast<std::size_t>(start_seed % n);
  while (out.sweeps < max_sweeps) {
    bool changed = false;
    for (std::size_t k = 0; k < n; ++k) {
      const Eigen::Index i = static_cast<Eigen::Index>((start + k) % n);
      const double field = W.row(i).dot(out.state);
      double next = out.state[i];
      if (field > 0) next = 1.0;
      else if (field < 0) next = -1.0;
      if (next != out.state[i]) {
        // Flipping x_i changes the energy by -(next - x_i) * field.
        e -= (next - out.state[i]) * field;
        out.state[i] = next;
        changed = true;
      }
      out.energies.push_back(e);
    }
    ++out.sweeps;
    if (!changed) {
      out.converged = true;
      break;
    }
  }
  return out;
}

RecallResult hopfield_store_recall(const std::vector<Eigen::VectorXd>& patterns, const Eigen::VectorXd& cue,
                                   std::size_t max_sweeps, std::uint64_t start_seed) {
  if (patterns.empty()) throw ArgumentError("hopfield_store_recall: no patterns");
  HopfieldNet net(static_cast<std::size_t>(patterns.front().size()));
  net.store_all(patterns);
  return hopfield_recall(net, cue, max_sweeps, start_seed);
}

}  // namespace memkit::classic
