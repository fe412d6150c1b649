#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "memkit/autodiff/tensor.hpp"

namespace memkit::ad {

enum class Activation { Sigmoid, Tanh, Relu, Softplus, OneMinus, Identity };

Activation parse_activation(std::string_view name);

// Elementwise binary ops broadcast any extent of 1 against the other operand.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor neg(const Tensor& a);
Tensor one_minus(const Tensor& a);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor square(const Tensor& a);
Tensor apply_activation(Activation kind, const Tensor& x);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// x * W^T + b with W stored out x in and b a 1 x out row (b may be undefined).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_rows(const Tensor& a);  // 1 x cols
Tensor sum_cols(const Tensor& a);  // rows x 1
Tensor row_max(const Tensor& a);   // rows x 1, gradient routed to the argmax

Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
// Row-wise softmax(beta * scores); beta is 1x1 or rows x 1 and must be >= 0.
Tensor softmax_with_strength(const Tensor& scores, const Tensor& beta);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t count);
Tensor slice_rows(const Tensor& a, std::size_t start, std::size_t count);
Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols);

// Forward value of `hard`, gradient of `soft`.
Tensor straight_through(const Tensor& hard, const Tensor& soft);

// Mean-free elementwise losses, summed over entries where mask != 0.
Tensor sigmoid_bce_with_logits(const Tensor& logits, const Tensor& targets, const Tensor& mask);
// Sum over rows of -log softmax(logits)[row, target[row]].
Tensor softmax_cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets);

struct CosineResult {
  double value = 0.0;
  bool degenerate = false;  // a zero-norm operand; value is then 0
};

CosineResult cosine_similarity(std::span<const double> u, std::span<const double> v);
std::vector<double> softmax_with_strength(std::span<const double> scores, double beta);

// Batched memory primitives. A batch of B memories with N slots of width W
// is stored as a (B*N) x W tensor, batch-major.

// keys B x W against mem (B*N) x W -> B x N cosine similarities. Zero-norm
// rows give 0.
Tensor cosine_rows(const Tensor& keys, const Tensor& mem);
// Per-batch outer product: a B x N, b B x W -> (B*N) x W.
Tensor batched_outer(const Tensor& a, const Tensor& b);
// Per-batch weighted read: w B x N, mem (B*N) x W -> B x W.
Tensor batched_read(const Tensor& w, const Tensor& mem);
// Per-batch matrix-vector product: mats (B*N) x N, w B x N -> B x N,
// computing mats_b * w_b, or mats_b^T * w_b when transpose is set.
Tensor batched_matvec(const Tensor& mats, const Tensor& w, bool transpose);
// Per-batch vector-matrix product: x B x K, mats B x (K*M) -> B x M where
// row b of mats holds a K x M matrix row-major.
Tensor batched_vecmat(const Tensor& x, const Tensor& mats);
// Circular convolution of w B x N with shift weights s B x S over offsets
// -(S/2) .. +(S/2).
Tensor circular_shift(const Tensor& w, const Tensor& s);
// w^gamma / sum(w^gamma) per row, gamma B x 1 and >= 1.
Tensor sharpen(const Tensor& w, const Tensor& gamma);
// Free-list allocation weights from usage B x N. Sort order is treated as
// constant for the gradient.
Tensor allocation_weights(const Tensor& usage);
// Temporal link update on links (B*N) x N with write weights w and previous
// precedence p (both B x N). Diagonal stays zero.
Tensor link_update(const Tensor& links, const Tensor& w, const Tensor& p);
// Block-concatenates per-batch slot memories along the slot axis:
// a (B*Na) x W and b (B*Nb) x W -> (B*(Na+Nb)) x W.
Tensor batched_concat_slots(const Tensor& a, std::size_t na, const Tensor& b, std::size_t nb);

}  // namespace memkit::ad
