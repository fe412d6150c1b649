#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "memkit/autodiff/ops.hpp"
#include "memkit/autodiff/parameters.hpp"

namespace memkit::ctrl {

using ad::Tensor;

// Additive scorer e_j = v^T tanh(W s + U h_j).
struct AdditiveAttention {
  AdditiveAttention() = default;
  AdditiveAttention(ad::ParameterSet& params, const std::string& prefix, std::size_t query_dim,
                    std::size_t item_dim, std::size_t attn_dim, std::mt19937_64& rng);

  std::size_t query_dim = 0, item_dim = 0, attn_dim = 0;
  Tensor W, U, v;
};

struct AttentionResult {
  Tensor context;  // B x d
  Tensor alpha;    // B x L
};

// Batched form: query_proj is the B x attn_dim pre-activation shared by all
// items (W s plus any extra terms); items are L tensors of shape B x d.
AttentionResult additive_attend(const AdditiveAttention& att, const Tensor& query_proj,
                                const std::vector<Tensor>& items);

// dec_state 1 x d_s, enc_states L x d.
AttentionResult bahdanau_attention(const AdditiveAttention& att, const Tensor& dec_state,
                                   const Tensor& enc_states);

// softmax(Q K^T / sqrt(d_k)) V.
Tensor scaled_dot_attention(const Tensor& Q, const Tensor& K, const Tensor& V);

}  // namespace memkit::ctrl
