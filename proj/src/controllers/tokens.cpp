#include "memkit/controllers/tokens.hpp"

#include <string>

#include "memkit/errors.hpp"

namespace memkit::ctrl {

ad::Tensor one_hot(const std::vector<int>& tokens, std::size_t vocab) {
  if (tokens.empty() || vocab == 0) throw ShapeError("one_hot: empty batch or vocabulary");
  std::vector<double> v(tokens.size() * vocab, 0.0);
  for (std::size_t b = 0; b < tokens.size(); ++b) {
    if (tokens[b] < 0) continue;
    if (static_cast<std::size_t>(tokens[b]) >= vocab)
      throw ArgumentError("one_hot: token " + std::to_string(tokens[b]) + " outside vocabulary");
    v[b * vocab + static_cast<std::size_t>(tokens[b])] = 1.0;
  }
  return ad::Tensor::constant(tokens.size(), vocab, v);
}

std::vector<int> argmax_rows(const ad::Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace memkit::ctrl
