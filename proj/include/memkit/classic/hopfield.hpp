#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace memkit::classic {

// Binary (+1/-1) auto-associative network with Hebbian weights.
class HopfieldNet {
 public:
  explicit HopfieldNet(std::size_t n);

  // W += p p^T with the diagonal kept at zero. No 1/N scaling.
  void store(const Eigen::VectorXd& pattern);
  void store_all(const std::vector<Eigen::VectorXd>& patterns);

  double energy(const Eigen::VectorXd& x) const;
  const Eigen::MatrixXd& weights() const { return W_; }
  std::size_t size() const { return static_cast<std::size_t>(W_.rows()); }

 private:
  Eigen::MatrixXd W_;
};

struct RecallResult {
  Eigen::VectorXd state;
  std::vector<double> energies;  // initial energy, then one entry per neuron update
  std::size_t sweeps = 0;        // full scans performed
  bool converged = false;        // a whole sweep changed nothing
};

// Asynchronous sign updates in cyclic scan order starting at
// start_seed % N. A zero local field keeps the current state.
RecallResult hopfield_recall(const HopfieldNet& net, const Eigen::VectorXd& cue, std::size_t max_sweeps,
                             std::uint64_t start_seed = 0);

RecallResult hopfield_store_recall(const std::vector<Eigen::VectorXd>& patterns, const Eigen::VectorXd& cue,
                                   std::size_t max_sweeps, std::uint64_t start_seed = 0);

}  // namespace memkit::classic
