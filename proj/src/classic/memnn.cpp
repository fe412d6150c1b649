#include "memkit/classic/memnn.hpp"

#include "memkit/errors.hpp"

namespace memkit::classic {

MemnnRead memnn_hop_read(const Eigen::MatrixXd& memory, const Eigen::MatrixXd& outputs, const Eigen::VectorXd& query,
                         std::size_t hops, const Eigen::MatrixXd& H) {
  if (hops == 0) throw ArgumentError("memnn_hop_read: hops must be >= 1");
  if (memory.rows() == 0 || memory.rows() != outputs.rows() || memory.cols() != query.size())
    throw ShapeError("memnn_hop_read: memory shape mismatch");
  if (H.rows() != outputs.cols() || H.cols() != query.size() || outputs.cols() != query.size())
    throw ShapeError("memnn_hop_read: hop map shape mismatch");
  MemnnRead out;
  Eigen::VectorXd u = query;
  for (std::size_t k = 0; k < hops; ++k) {
    MemnnHop hop;
    const Eigen::VectorXd scores = memory * u;
    hop.p = (scores.array() - scores.maxCoeff()).exp();
    hop.p /= hop.p.sum();
    hop.r = outputs.transpose() * hop.p;
    u = H * u + hop.r;
    hop.u = u;
    out.hops.push_back(std::move(hop));
  }
  out.answer = u;
  return out;
}

}  // namespace memkit::classic
