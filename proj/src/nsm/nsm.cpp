#include "memkit/nsm/nsm.hpp"

#include <cmath>
#include <sstream>

#include "memkit/errors.hpp"

namespace memkit::nsm {

namespace {

Tensor tile_rows(const Tensor& a, std::size_t times) {
  if (times == 1) return a;
  return ad::concat_rows(std::vector<Tensor>(times, a));
}

Tensor unit_rows(const Tensor& k) {
  return ad::div(k, ad::sqrt(ad::sum_cols(ad::square(k))));
}

}  // namespace

ProgramMemory make_program_memory(ad::ParameterSet& params, const std::string& prefix, std::size_t programs,
                                  std::size_t key_dim, std::size_t value_dim, std::mt19937_64& rng) {
  if (programs == 0 || key_dim == 0 || value_dim == 0) throw ArgumentError("program memory sizes must be positive");
  ProgramMemory pm;
  pm.keys = params.uniform(prefix + ".keys", programs, key_dim, 1.0, rng);
  pm.values = params.uniform(prefix + ".values", programs, value_dim, ctrl::kInitScale, rng);
  return pm;
}

LookupResult program_lookup(const ProgramMemory& pm, const Tensor& query, const Tensor& beta,
                            const LookupOptions& opts) {
  if (query.cols() != pm.key_dim()) throw ShapeError("program lookup: key width");
  if (beta.rows() != query.rows() || beta.cols() != 1) throw ShapeError("program lookup: strength shape");
  for (double b : beta.value())
    if (b < 0) throw ArgumentError("program lookup: strength must be >= 0");
  const std::size_t B = query.rows(), P = pm.programs();
  LookupResult r;
  for (std::size_t b = 0; b < B; ++b) {
    double n = 0;
    for (std::size_t k = 0; k < query.cols(); ++k) n += query.at(b, k) * query.at(b, k);
    r.degenerate.push_back(n == 0.0);
  }
  Tensor scores = ad::cosine_rows(query, tile_rows(pm.keys, B));
  Tensor soft = ad::softmax_with_strength(scores, beta);
  if (!opts.hard) {
    r.attn = soft;
  } else {
    if (!opts.rng) throw ArgumentError("program lookup: hard mode needs a generator");
    if (!(opts.temperature > 0)) throw ArgumentError("program lookup: temperature must be positive");
    std::uniform_real_distribution<double> u(1e-12, 1.0 - 1e-12);
    std::vector<double> g(B * P);
    for (auto& v : g) v = -std::log(-std::log(u(*opts.rng)));
    Tensor logits = ad::log(ad::add_scalar(soft, 1e-20));
    Tensor relaxed = ad::softmax_rows(ad::scale(ad::add(logits, Tensor::constant(B, P, g)), 1.0 / opts.temperature));
    std::vector<double> hard(B * P, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < P; ++i)
        if (relaxed.at(b, i) > relaxed.at(b, best)) best = i;
      hard[b * P + best] = 1.0;
    }
    r.attn = ad::straight_through(Tensor::constant(B, P, hard), relaxed);
  }
  r.program = ad::matmul(r.attn, pm.values);
  return r;
}

Tensor key_overlap_loss(const ProgramMemory& pm) {
  const std::size_t P = pm.programs();
  Tensor kn = unit_rows(pm.keys);
  Tensor gram = ad::matmul(kn, ad::transpose(kn));
  std::vector<double> upper(P * P, 0.0);
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = i + 1; j < P; ++j) upper[i * P + j] = 1.0;
  return ad::sum(ad::mul(gram, Tensor::constant(P, P, upper)));
}

Tensor key_orthogonality_loss(const ProgramMemory& pm) {
  const std::size_t P = pm.programs();
  if (pm.key_dim() != P) throw ArgumentError("orthogonality loss needs key width equal to program count");
  std::vector<double> eye(P * P, 0.0);
  for (std::size_t i = 0; i < P; ++i) eye[i * P + i] = 1.0;
  Tensor d = ad::sub(ad::matmul(pm.keys, ad::transpose(pm.keys)), Tensor::constant(P, P, eye));
  return ad::sqrt(ad::sum(ad::square(d)));
}

double annealing_factor(std::size_t step, std::size_t decay_every) {
  if (decay_every == 0) throw ArgumentError("decay_every must be positive");
  return 0.1 * std::pow(0.9, static_cast<double>(step / decay_every));
}

double annealed_total_loss(double pred_loss, double l_p, std::size_t step, std::size_t decay_every) {
  return pred_loss + annealing_factor(step, decay_every) * l_p;
}

Tensor annealed_total_loss(const Tensor& pred_loss, const Tensor& l_p, std::size_t step, std::size_t decay_every) {
  return ad::add(pred_loss, ad::scale(l_p, annealing_factor(step, decay_every)));
}

NutmModel::NutmModel(const NutmConfig& cfg, std::uint64_t seed)
    : ntm::NtmModel(cfg.core, seed, false), ncfg_(cfg), gumbel_rng_(seed ^ 0x9b1ULL) {
  if (cfg.programs == 0 || cfg.key_dim == 0) throw ArgumentError("nutm: program sizes must be positive");
  const std::size_t H1 = cfg_.hidden + 1;
  for (std::size_t n = 0; n < head_count(); ++n) {
    const std::string p = "nsm" + std::to_string(n);
    programs_.push_back(make_program_memory(params_, p, cfg.programs, cfg.key_dim, H1 * head_emission_width(n), rng_));
    meta_.push_back(params_.uniform(p + ".meta", H1, cfg.key_dim + 1, ctrl::kInitScale, rng_));
  }
  last_attn_.resize(head_count());
}

Tensor NutmModel::program_regularizer() const {
  Tensor total = key_overlap_loss(programs_[0]);
  for (std::size_t n = 1; n < programs_.size(); ++n) total = ad::add(total, key_overlap_loss(programs_[n]));
  return total;
}

Tensor NutmModel::head_interface(std::size_t n, const Tensor& c_aug) {
  Tensor q = ad::matmul(c_aug, meta_[n]);
  Tensor key = ad::slice_cols(q, 0, ncfg_.key_dim);
  Tensor beta = ad::softplus(ad::slice_cols(q, ncfg_.key_dim, 1));
  LookupOptions opts{ncfg_.hard, ncfg_.temperature, &gumbel_rng_};
  LookupResult r = program_lookup(programs_[n], key, beta, opts);
  last_attn_[n] = r.attn;
  return ad::batched_vecmat(c_aug, r.program);
}

std::string program_attention_csv(const std::vector<std::vector<Tensor>>& per_step) {
  std::ostringstream out;
  out << "step,head,program,weight\n";
  for (std::size_t t = 0; t < per_step.size(); ++t)
    for (std::size_t h = 0; h < per_step[t].size(); ++h)
      for (std::size_t p = 0; p < per_step[t][h].cols(); ++p)
        out << t << ',' << h << ',' << p << ',' << per_step[t][h].at(0, p) << '\n';
  return out.str();
}

}  // namespace memkit::nsm
