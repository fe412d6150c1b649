#include "memkit/vmed/model.hpp"

#include "memkit/errors.hpp"

namespace memkit::vmed {

namespace {

dnc::DncConfig core_config(const VmedConfig& c) {
  if (c.vocab == 0 || c.latent == 0 || c.modes == 0) throw ArgumentError("vmed: sizes must be positive");
  dnc::DncConfig d;
  d.input = c.vocab + c.latent;
  d.output = c.vocab;
  d.hidden = c.hidden;
  d.slots = c.slots;
  d.width = 2 * c.latent;
  d.read_heads = c.modes;
  return d;
}

}  // namespace

VmedModel::VmedModel(const VmedConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(seed ^ 0x7e3dULL), core_(core_config(cfg), seed) {
  params_.adopt("core", core_.params());
  utterance_ = ctrl::LstmCell(params_, "utt", cfg.vocab, cfg.hidden, rng_);
  post_mu_ = ctrl::Dense(params_, "post_mu", 2 * cfg.hidden, cfg.latent, rng_);
  post_sigma_ = ctrl::Dense(params_, "post_sigma", 2 * cfg.hidden, cfg.latent, rng_);
}

Tensor VmedModel::one_hot(const std::vector<std::vector<int>>& seqs, std::size_t t, bool pad) const {
  const std::size_t width = cfg_.vocab + (pad ? cfg_.latent : 0);
  std::vector<double> v(seqs.size() * width, 0.0);
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    const int tok = seqs[b].at(t);
    if (tok < 0 || static_cast<std::size_t>(tok) >= cfg_.vocab) throw ArgumentError("vmed: token out of range");
    v[b * width + static_cast<std::size_t>(tok)] = 1.0;
  }
  return Tensor::constant(seqs.size(), width, v);
}

dnc::DncModelState VmedModel::encode(const std::vector<std::vector<int>>& contexts) {
  if (contexts.empty()) throw ArgumentError("vmed: empty batch");
  const std::size_t L = contexts[0].size();
  for (const auto& c : contexts)
    if (c.size() != L) throw ShapeError("vmed: context lengths differ within a batch");
  auto s = core_.initial_state(contexts.size());
  for (std::size_t t = 0; t < L; ++t) core_.step(one_hot(contexts, t, true), s);
  return s;
}

VmedLoss VmedModel::loss(const std::vector<std::vector<int>>& contexts, const std::vector<std::vector<int>>& targets,
                         double kl_weight, std::mt19937_64& rng) {
  if (targets.size() != contexts.size()) throw ShapeError("vmed: batch sizes differ");
  const std::size_t B = targets.size(), T = targets[0].size();
  for (const auto& y : targets)
    if (y.size() != T) throw ShapeError("vmed: target lengths differ within a batch");
  auto s = encode(contexts);
  ctrl::LstmState u = ctrl::lstm_zero_state(utterance_, B);
  Tensor kl_sum, nll_sum;
  VmedLoss out;
  for (std::size_t t = 0; t < T; ++t) {
    MixtureBatch prior = build_mog_prior(s.mem.reads, s.mem.w_read);
    u = ctrl::lstm_step(utterance_, one_hot(targets, t, false), u);
    Tensor q_in = ad::concat_cols({u.h, s.ctrl.h});
    GaussianBatch post{post_mu_(q_in), ad::softplus(post_sigma_(q_in))};
    Tensor z = sample_reparameterized(post, rng);
    Tensor prev = t == 0 ? Tensor::constant(B, cfg_.vocab) : one_hot(targets, t - 1, false);
    Tensor logits = core_.step(ad::concat_cols({prev, z}), s);
    std::vector<std::size_t> ys;
    for (const auto& y : targets) ys.push_back(static_cast<std::size_t>(y[t]));
    Tensor nll = ad::softmax_cross_entropy(logits, ys);
    Tensor kl = ad::sum(d_var(post, prior));
    kl_sum = kl_sum.defined() ? ad::add(kl_sum, kl) : kl;
    nll_sum = nll_sum.defined() ? ad::add(nll_sum, nll) : nll;
  }
  out.kl = kl_sum.item();
  out.nll = nll_sum.item();
  out.total = ad::scale(ad::add(ad::scale(kl_sum, kl_weight), nll_sum), 1.0 / static_cast<double>(B));
  return out;
}

std::vector<int> VmedModel::generate(const std::vector<int>& context, std::size_t length, std::uint64_t seed,
                                     double sigma_scale) {
  ad::NoGradGuard guard;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto s = encode({context});
  std::vector<int> out;
  int prev = -1;
  for (std::size_t t = 0; t < length; ++t) {
    MixtureBatch prior = build_mog_prior(s.mem.reads, s.mem.w_read);
    std::vector<double> pi(prior.pi.value());
    std::discrete_distribution<std::size_t> pick(pi.begin(), pi.end());
    const std::size_t mode = cfg_.modes == 1 ? 0 : pick(rng);
    const auto& c = prior.components[mode];
    std::vector<double> x(cfg_.vocab + cfg_.latent, 0.0);
    if (prev >= 0) x[static_cast<std::size_t>(prev)] = 1.0;
    for (std::size_t d = 0; d < cfg_.latent; ++d) {
      const double eps = normal(rng);
      x[cfg_.vocab + d] = c.mu.at(0, d) + sigma_scale * c.sigma.at(0, d) * eps;
    }
    Tensor logits = core_.step(Tensor::constant(1, x.size(), x), s);
    std::size_t best = 0;
    for (std::size_t k = 1; k < cfg_.vocab; ++k)
      if (logits.at(0, k) > logits.at(0, best)) best = k;
    prev = static_cast<int>(best);
    out.push_back(prev);
  }
  return out;
}

}  // namespace memkit::vmed
