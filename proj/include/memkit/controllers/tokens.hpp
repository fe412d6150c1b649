#pragma once

#include <cstddef>
#include <vector>

#include "memkit/autodiff/tensor.hpp"

namespace memkit::ctrl {

// B x vocab one-hot rows; a negative token gives an all-zero row.
ad::Tensor one_hot(const std::vector<int>& tokens, std::size_t vocab);
// Row-wise argmax, lowest index on ties.
std::vector<int> argmax_rows(const ad::Tensor& logits);

}  // namespace memkit::ctrl
