#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace memkit::classic {

struct MemnnHop {
  Eigen::VectorXd p;  // attention over memory rows
  Eigen::VectorXd r;  // read vector
  Eigen::VectorXd u;  // query after the hop
};

struct MemnnRead {
  std::vector<MemnnHop> hops;
  Eigen::VectorXd answer;  // final query
};

// Per hop: p = softmax(M u), r = sum p_i c_i, u <- H u + r.
// memory and outputs hold one slot per row.
MemnnRead memnn_hop_read(const Eigen::MatrixXd& memory, const Eigen::MatrixXd& outputs, const Eigen::VectorXd& query,
                         std::size_t hops, const Eigen::MatrixXd& H);

}  // namespace memkit::classic
