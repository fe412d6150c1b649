#include "memkit/classic/outer_product.hpp"

#include "memkit/errors.hpp"

namespace memkit::classic {

CmmMatrix::CmmMatrix(std::size_t key_dim, std::size_t value_dim) : M_(Eigen::MatrixXd::Zero(value_dim, key_dim)) {}

void CmmMatrix::store(const Eigen::VectorXd& key, const Eigen::VectorXd& value) {
  if (key.size() != M_.cols() || value.size() != M_.rows()) throw ShapeError("CmmMatrix::store: shape mismatch");
  M_.noalias() += value * key.transpose();
}

Eigen::VectorXd CmmMatrix::retrieve(const Eigen::VectorXd& key) const {
  if (key.size() != M_.cols()) throw ShapeError("CmmMatrix::retrieve: shape mismatch");
  return M_ * key;
}

double cmm_retrieval_error(const Eigen::MatrixXd& keys, const Eigen::MatrixXd& values) {
  if (keys.cols() != values.cols() || keys.cols() == 0) throw ShapeError("cmm_retrieval_error: pair count mismatch");
  CmmMatrix m(static_cast<std::size_t>(keys.rows()), static_cast<std::size_t>(values.rows()));
  for (Eigen::Index q = 0; q < keys.cols(); ++q) m.store(keys.col(q), values.col(q));
  double err = 0.0;
  for (Eigen::Index q = 0; q < keys.cols(); ++q) err += (m.retrieve(keys.col(q)) - values.col(q)).norm();
  return err / static_cast<double>(keys.cols());
}

TprTensor::TprTensor(std::size_t filler_dim, std::size_t role_dim) : T_(Eigen::MatrixXd::Zero(filler_dim, role_dim)) {}

void TprTensor::bind(const Eigen::VectorXd& filler, const Eigen::VectorXd& role) {
  if (filler.size() != T_.rows() || role.size() != T_.cols()) throw ShapeError("TprTensor::bind: shape mismatch");
  T_.noalias() += filler * role.transpose();
}

Eigen::VectorXd TprTensor::unbind(const Eigen::VectorXd& role) const {
  if (role.size() != T_.cols()) throw ShapeError("TprTensor::unbind: shape mismatch");
  return T_ * role;
}

Eigen::VectorXd tree_role(const std::vector<int>& path, const Eigen::MatrixXd& base, std::size_t max_depth) {
  if (path.empty() || path.size() > max_depth) throw ArgumentError("tree_role: path depth out of range");
  const Eigen::Index r = base.rows();
  Eigen::VectorXd role(1);
  role[0] = 1.0;
  for (int c : path) {
    if (c < 0 || c >= base.cols()) throw ArgumentError("tree_role: child index out of range");
    Eigen::VectorXd next(role.size() * r);
    for (Eigen::Index i = 0; i < role.size(); ++i) next.segment(i * r, r) = role[i] * base.col(c);
    role = std::move(next);
  }
  Eigen::Index total = 0, offset = 0, width = 1;
  for (std::size_t d = 1; d <= max_depth; ++d) {
    width *= r;
    if (d < path.size()) offset += width;
    total += width;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(total);
  out.segment(offset, role.size()) = role;
  return out;
}

FastWeightMatrix::FastWeightMatrix(std::size_t dim, double decay, double rate)
    : A_(Eigen::MatrixXd::Zero(dim, dim)), decay_(decay), rate_(rate) {}

void FastWeightMatrix::store(const Eigen::VectorXd& h) {
  if (h.size() != A_.rows()) throw ShapeError("FastWeightMatrix::store: shape mismatch");
  A_ = decay_ * A_ + rate_ * h * h.transpose();
}

std::vector<Eigen::VectorXd> fast_weight_refine(const FastWeightMatrix& fw, const Eigen::MatrixXd& W,
                                                const Eigen::MatrixXd& C, const Eigen::VectorXd& h_prev,
                                                const Eigen::VectorXd& x, std::size_t steps,
                                                const std::function<double(double)>& f) {
  const Eigen::Index n = fw.matrix().rows();
  if (W.rows() != n || W.cols() != h_prev.size() || C.rows() != n || C.cols() != x.size())
    throw ShapeError("fast_weight_refine: shape mismatch");
  const Eigen::VectorXd base = W * h_prev + C * x;
  std::vector<Eigen::VectorXd> hs;
  hs.push_back(base.unaryExpr(f));
  for (std::size_t s = 0; s < steps; ++s) hs.push_back((base + fw.apply(hs.back())).unaryExpr(f));
  return hs;
}

}  // namespace memkit::classic
