#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace memkit::classic {

// Correlation matrix memory M = sum y x^T.
class CmmMatrix {
 public:
  CmmMatrix(std::size_t key_dim, std::size_t value_dim);
  void store(const Eigen::VectorXd& key, const Eigen::VectorXd& value);
  Eigen::VectorXd retrieve(const Eigen::VectorXd& key) const;
  const Eigen::MatrixXd& matrix() const { return M_; }

 private:
  Eigen::MatrixXd M_;
};

// Mean L2 retrieval error over all stored pairs (keys and values as columns).
double cmm_retrieval_error(const Eigen::MatrixXd& keys, const Eigen::MatrixXd& values);

// Filler-role bindings T = sum f r^T; unbinding is T r.
class TprTensor {
 public:
  TprTensor(std::size_t filler_dim, std::size_t role_dim);
  void bind(const Eigen::VectorXd& filler, const Eigen::VectorXd& role);
  Eigen::VectorXd unbind(const Eigen::VectorXd& role) const;
  const Eigen::MatrixXd& tensor() const { return T_; }

 private:
  Eigen::MatrixXd T_;
};

// Role of a tree position given as a path of child indices, built as the
// Kronecker product of the per-level roles and placed in the direct sum of
// the depth-1..max_depth role spaces. base holds one role per column.
Eigen::VectorXd tree_role(const std::vector<int>& path, const Eigen::MatrixXd& base, std::size_t max_depth);

class FastWeightMatrix {
 public:
  FastWeightMatrix(std::size_t dim, double decay, double rate);
  // A <- lambda A + eta h h^T
  void store(const Eigen::VectorXd& h);
  Eigen::VectorXd apply(const Eigen::VectorXd& h) const { return A_ * h; }
  const Eigen::MatrixXd& matrix() const { return A_; }

 private:
  Eigen::MatrixXd A_;
  double decay_;
  double rate_;
};

// h_0 = f(W h_prev + C x), then h_{s+1} = f(W h_prev + C x + A h_s).
// Returns h_0..h_steps.
std::vector<Eigen::VectorXd> fast_weight_refine(
    const FastWeightMatrix& fw, const Eigen::MatrixXd& W, const Eigen::MatrixXd& C,
    const Eigen::VectorXd& h_prev, const Eigen::VectorXd& x, std::size_t steps,
    const std::function<double(double)>& f = [](double v) { return std::tanh(v); });

}  // namespace memkit::classic
