#include "memkit/controllers/attention.hpp"

#include <cmath>

#include "memkit/controllers/cells.hpp"
#include "memkit/errors.hpp"

namespace memkit::ctrl {

AdditiveAttention::AdditiveAttention(ad::ParameterSet& params, const std::string& prefix, std::size_t q,
                                     std::size_t d, std::size_t a, std::mt19937_64& rng)
    : query_dim(q), item_dim(d), attn_dim(a) {
  W = params.uniform(prefix + ".W", a, q, kInitScale, rng);
  U = params.uniform(prefix + ".U", a, d, kInitScale, rng);
  v = params.uniform(prefix + ".v", 1, a, kInitScale, rng);
}

AttentionResult additive_attend(const AdditiveAttention& att, const Tensor& query_proj,
                                const std::vector<Tensor>& items) {
  if (items.empty()) throw ArgumentError("attention over an empty set");
  std::vector<Tensor> scores;
  scores.reserve(items.size());
  for (const auto& h : items) {
    if (h.cols() != att.item_dim || h.rows() != query_proj.rows()) throw ShapeError("attention item shape");
    Tensor e = ad::tanh(ad::add(query_proj, ad::linear(h, att.U, Tensor())));
    scores.push_back(ad::linear(e, att.v, Tensor()));
  }
  Tensor alpha = ad::softmax_rows(items.size() == 1 ? scores[0] : ad::concat_cols(scores));
  Tensor ctx;
  for (std::size_t j = 0; j < items.size(); ++j) {
    Tensor term = ad::mul(items[j], ad::slice_cols(alpha, j, 1));
    ctx = ctx.defined() ? ad::add(ctx, term) : term;
  }
  return {ctx, alpha};
}

AttentionResult bahdanau_attention(const AdditiveAttention& att, const Tensor& dec_state,
                                   const Tensor& enc_states) {
  if (!enc_states.defined()) throw ArgumentError("bahdanau_attention: no encoder states");
  if (dec_state.rows() != 1 || dec_state.cols() != att.query_dim) throw ShapeError("decoder state shape");
  std::vector<Tensor> items;
  for (std::size_t j = 0; j < enc_states.rows(); ++j) items.push_back(ad::slice_rows(enc_states, j, 1));
  return additive_attend(att, ad::linear(dec_state, att.W, Tensor()), items);
}

Tensor scaled_dot_attention(const Tensor& Q, const Tensor& K, const Tensor& V) {
  if (Q.cols() != K.cols()) throw ShapeError("attention: query and key dims differ");
  if (K.rows() != V.rows()) throw ShapeError("attention: key and value counts differ");
  const double s = 1.0 / std::sqrt(static_cast<double>(K.cols()));
  return ad::matmul(ad::softmax_rows(ad::scale(ad::matmul(Q, ad::transpose(K)), s)), V);
}

}  // namespace memkit::ctrl
