#include "memkit/dual/dual.hpp"

#include <sstream>

#include "memkit/controllers/tokens.hpp"
#include "memkit/errors.hpp"
#include "memkit/scheduling/schedule.hpp"

namespace memkit::dual {

namespace {

std::size_t batch_length(const TokenBatch& seqs, const char* what) {
  if (seqs.empty()) throw ArgumentError(std::string(what) + ": empty batch");
  const std::size_t L = seqs[0].size();
  for (const auto& s : seqs)
    if (s.size() != L) throw ShapeError(std::string(what) + ": lengths differ within a batch");
  return L;
}

std::vector<int> column(const TokenBatch& seqs, std::size_t t) {
  std::vector<int> out;
  for (const auto& s : seqs) out.push_back(s.at(t));
  return out;
}

void record_predictions(Seq2SeqResult& r, const Tensor& logits) {
  const auto p = ctrl::argmax_rows(logits);
  if (r.predictions.empty()) r.predictions.resize(p.size());
  for (std::size_t b = 0; b < p.size(); ++b) r.predictions[b].push_back(p[b]);
  r.logits.push_back(logits);
}

std::vector<Tensor> with_reads(Tensor x, const std::vector<Tensor>& reads) {
  std::vector<Tensor> v{std::move(x)};
  v.insert(v.end(), reads.begin(), reads.end());
  return v;
}

// (B*N) x N blocks -> (B*2N) x 2N block-diagonal links.
Tensor block_links(const Tensor& a, const Tensor& b, std::size_t batch, std::size_t n) {
  Tensor z = Tensor::constant(batch * n, n);
  return ad::batched_concat_slots(ad::concat_cols({a, z}), n, ad::concat_cols({z, b}), n);
}

}  // namespace

Tensor sequence_loss(const Seq2SeqResult& result, const TokenBatch& targets) {
  const std::size_t T = batch_length(targets, "sequence loss");
  if (T != result.logits.size()) throw ShapeError("sequence loss: target length differs from decode length");
  Tensor total;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<std::size_t> ys;
    for (int y : column(targets, t)) ys.push_back(static_cast<std::size_t>(y));
    Tensor ce = ad::softmax_cross_entropy(result.logits[t], ys);
    total = total.defined() ? ad::add(total, ce) : ce;
  }
  return ad::scale(total, 1.0 / static_cast<double>(targets.size()));
}

DcwMann::DcwMann(const DcwConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
  if (cfg.in_vocab == 0 || cfg.out_vocab == 0 || cfg.hidden == 0) throw ArgumentError("dcw: sizes must be positive");
  const std::size_t rw = cfg.read_heads * cfg.width;
  embed_in_ = ctrl::Dense(params_, "embed_in", cfg.in_vocab, cfg.embed, rng_, false);
  embed_out_ = ctrl::Dense(params_, "embed_out", cfg.out_vocab, cfg.embed, rng_, false);
  encoder_ = ctrl::LstmCell(params_, "enc", cfg.embed + rw, cfg.hidden, rng_);
  decoder_ = ctrl::LstmCell(params_, "dec", cfg.embed + rw, cfg.hidden, rng_);
  enc_iface_ = dnc::DncInterface(params_, "enc_iface", cfg.hidden, cfg.width, cfg.read_heads, rng_);
  dec_iface_ = dnc::DncInterface(params_, "dec_iface", cfg.hidden, cfg.width, cfg.read_heads, rng_);
  out_ = ctrl::Dense(params_, "out", cfg.hidden + rw, cfg.out_vocab, rng_);
}

Seq2SeqResult DcwMann::run(const TokenBatch& inputs, std::size_t decode_len, bool keep_snapshots) const {
  const std::size_t L = batch_length(inputs, "dcw");
  if (L == 0) throw ArgumentError("dcw: empty input sequence");
  if (decode_len == 0) throw ArgumentError("dcw: decode length must be positive");
  const std::size_t B = inputs.size();
  dnc::DncState mem = dnc::dnc_zero_state(B, cfg_.slots, cfg_.width, cfg_.read_heads);
  ctrl::LstmState st = ctrl::lstm_zero_state(encoder_, B);
  const int L_in = static_cast<int>(L);
  for (std::size_t t = 0; t < L; ++t) {
    Tensor x = embed_in_(ctrl::one_hot(column(inputs, t), cfg_.in_vocab));
    st = ctrl::lstm_step(encoder_, ad::concat_cols(with_reads(x, mem.reads)), st);
    auto e = enc_iface_(st.h);
    mem = sched::write_protected_update(mem, e, static_cast<int>(t) + 1, L_in);
    mem = dnc::read_step(mem, e);
  }
  Seq2SeqResult r;
  std::vector<int> prev(B, -1);
  for (std::size_t k = 0; k < decode_len; ++k) {
    Tensor y = embed_out_(ctrl::one_hot(prev, cfg_.out_vocab));
    st = ctrl::lstm_step(decoder_, ad::concat_cols(with_reads(y, mem.reads)), st);
    auto e = dec_iface_(st.h);
    mem = sched::write_protected_update(mem, e, L_in + static_cast<int>(k) + 1, L_in);
    mem = dnc::read_step(mem, e);
    Tensor logits = out_(ad::concat_cols(with_reads(st.h, mem.reads)));
    record_predictions(r, logits);
    prev = ctrl::argmax_rows(logits);
    if (keep_snapshots) r.memory_snapshots.push_back(mem.M);
  }
  return r;
}

namespace {
dnc::DncConfig baseline_core(const BaselineConfig& c) {
  if (c.in_vocab == 0 || c.out_vocab == 0) throw ArgumentError("baseline: sizes must be positive");
  dnc::DncConfig d;
  d.input = c.in_vocab + c.out_vocab;
  d.output = c.out_vocab;
  d.hidden = c.hidden;
  d.slots = c.slots;
  d.width = c.width;
  d.read_heads = c.read_heads;
  return d;
}
}  // namespace

DncSeq2Seq::DncSeq2Seq(const BaselineConfig& cfg, std::uint64_t seed) : cfg_(cfg), model_(baseline_core(cfg), seed) {}

Seq2SeqResult DncSeq2Seq::run(const TokenBatch& inputs, std::size_t decode_len, bool keep_snapshots) const {
  const std::size_t L = batch_length(inputs, "baseline");
  if (decode_len == 0) throw ArgumentError("baseline: decode length must be positive");
  const std::size_t B = inputs.size();
  auto s = model_.initial_state(B);
  for (std::size_t t = 0; t < L; ++t)
    model_.step(ad::concat_cols({ctrl::one_hot(column(inputs, t), cfg_.in_vocab), Tensor::constant(B, cfg_.out_vocab)}), s);
  Seq2SeqResult r;
  std::vector<int> prev(B, -1);
  for (std::size_t k = 0; k < decode_len; ++k) {
    Tensor x = ad::concat_cols({Tensor::constant(B, cfg_.in_vocab), ctrl::one_hot(prev, cfg_.out_vocab)});
    Tensor logits = model_.step(x, s);
    record_predictions(r, logits);
    prev = ctrl::argmax_rows(logits);
    if (keep_snapshots) r.memory_snapshots.push_back(s.mem.M);
  }
  return r;
}

DmncModel::DmncModel(const DmncConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
  if (cfg.vocab1 == 0 || cfg.vocab2 == 0 || cfg.out_vocab == 0 || cfg.hidden == 0)
    throw ArgumentError("dmnc: sizes must be positive");
  const std::size_t rw = cfg.read_heads * cfg.width, H = cfg.hidden;
  const std::array<std::size_t, 2> vocab{cfg.vocab1, cfg.vocab2};
  for (std::size_t v = 0; v < 2; ++v) {
    const std::string p = "view" + std::to_string(v + 1);
    embed_[v] = ctrl::Dense(params_, p + ".embed", vocab[v], cfg.embed, rng_, false);
    encoder_[v] = ctrl::LstmCell(params_, p + ".enc", cfg.embed + rw, H, rng_);
    iface_[v] = dnc::DncInterface(params_, p + ".iface", H, cfg.width, cfg.read_heads, rng_);
    if (cfg.fusion == Fusion::Early && cfg.cache) cache_gate_[v] = ctrl::Dense(params_, p + ".fc", H, cfg.width, rng_);
  }
  if (cfg.fusion == Fusion::Early)
    shared_read_ = dnc::DncInterface(params_, "shared_read", H, cfg.width, cfg.read_heads, rng_);
  dec_read_ = dnc::DncInterface(params_, "dec_read", H, cfg.width, cfg.read_heads, rng_);
  if (cfg.output == OutputKind::Sequence) {
    embed_out_ = ctrl::Dense(params_, "embed_out", cfg.out_vocab, cfg.embed, rng_, false);
    decoder_ = ctrl::LstmCell(params_, "dec", cfg.embed + 2 * rw, 2 * H, rng_);
    out_ = ctrl::Dense(params_, "out", 2 * H, cfg.out_vocab, rng_);
    fd_ = ctrl::Dense(params_, "fd", 2 * rw, cfg.out_vocab, rng_, false);
  } else {
    set_w_[0] = ctrl::Dense(params_, "W1", rw, H, rng_, false);
    set_w_[1] = ctrl::Dense(params_, "W2", rw, H, rng_, false);
    set_w_[2] = ctrl::Dense(params_, "W3", 2 * H, H, rng_, false);
    fd_ = ctrl::Dense(params_, "fd", H, cfg.out_vocab, rng_);
  }
}

DmncState DmncModel::initial_state(std::size_t batch) const {
  DmncState s;
  for (std::size_t v = 0; v < 2; ++v) s.mem[v] = dnc::dnc_zero_state(batch, cfg_.slots, cfg_.width, cfg_.read_heads);
  reset_controllers(s);
  return s;
}

void DmncModel::reset_controllers(DmncState& s) const {
  const std::size_t B = s.mem[0].batch;
  for (std::size_t v = 0; v < 2; ++v) {
    s.enc[v] = ctrl::lstm_zero_state(encoder_[v], B);
    s.reads[v].assign(cfg_.read_heads, Tensor::constant(B, cfg_.width));
    s.joint_w_read[v].assign(cfg_.read_heads, Tensor::constant(B, 2 * cfg_.slots));
    s.cache[v] = Tensor::constant(B, cfg_.width);
    s.steps[v] = 0;
  }
}

void DmncModel::read_joint(int view, const dnc::DncEmission& e, DmncState& s) const {
  const std::size_t v = static_cast<std::size_t>(view - 1);
  const std::size_t B = s.mem[0].batch, N = cfg_.slots;
  dnc::DncState j;
  j.batch = B;
  j.slots = 2 * N;
  j.width = cfg_.width;
  j.M = ad::batched_concat_slots(s.mem[0].M, N, s.mem[1].M, N);
  j.links = block_links(s.mem[0].links, s.mem[1].links, B, N);
  j.w_read = s.joint_w_read[v];
  j.reads = s.reads[v];
  j = dnc::read_step(j, e);
  s.joint_w_read[v] = j.w_read;
  s.reads[v] = j.reads;
  // Free gates of the next write act on this view's share of the weights.
  for (std::size_t k = 0; k < j.w_read.size(); ++k) s.mem[v].w_read[k] = ad::slice_cols(j.w_read[k], v * N, N);
}

void DmncModel::encode_step(int view, const std::vector<int>& tokens, DmncState& s,
                            std::vector<WriteGateRecord>* trace) const {
  if (view != 1 && view != 2) throw ArgumentError("dmnc: view must be 1 or 2");
  const std::size_t v = static_cast<std::size_t>(view - 1);
  const std::size_t vocab = v == 0 ? cfg_.vocab1 : cfg_.vocab2;
  Tensor x = embed_[v](ctrl::one_hot(tokens, vocab));
  s.enc[v] = ctrl::lstm_step(encoder_[v], ad::concat_cols(with_reads(x, s.reads[v])), s.enc[v]);
  const Tensor& o = s.enc[v].h;
  dnc::DncEmission e = iface_[v](o);
  if (cfg_.fusion == Fusion::Early && cfg_.cache) {
    Tensor g = cfg_.forced_cache_gate ? Tensor::constant(o.rows(), cfg_.width, *cfg_.forced_cache_gate)
                                      : ad::sigmoid(cache_gate_[v](o));
    s.cache[v] = ad::add(ad::mul(g, s.cache[v]), ad::mul(ad::one_minus(g), e.write_vec));
    e.write_vec = s.cache[v];
  }
  s.mem[v] = dnc::write_step(s.mem[v], e);
  if (trace) trace->push_back({view, s.steps[v], e.write_gate.at(0, 0)});
  if (cfg_.fusion == Fusion::Late) {
    s.mem[v] = dnc::read_step(s.mem[v], e);
    s.reads[v] = s.mem[v].reads;
  } else {
    dnc::DncEmission r = shared_read_(o);
    read_joint(view, r, s);
  }
  ++s.steps[v];
}

void DmncModel::encode(const TokenBatch& x1, const TokenBatch& x2, DmncState& s,
                       std::vector<WriteGateRecord>* trace) const {
  const std::size_t L1 = batch_length(x1, "dmnc view 1"), L2 = batch_length(x2, "dmnc view 2");
  std::size_t t1 = 0, t2 = 0;
  while (t1 < L1 || t2 < L2) {
    if (t1 < L1) encode_step(1, column(x1, t1++), s, trace);
    if (t2 < L2) encode_step(2, column(x2, t2++), s, trace);
  }
}

Seq2SeqResult DmncModel::decode_sequence(const DmncState& s, std::optional<std::size_t> decode_len) const {
  if (cfg_.output != OutputKind::Sequence) throw ArgumentError("dmnc: model was built for set output");
  if (!decode_len || *decode_len == 0) throw ArgumentError("dmnc: sequence decoding needs a decode length");
  const std::size_t B = s.mem[0].batch, H = cfg_.hidden;
  std::array<dnc::DncState, 2> mem = s.mem;
  std::array<std::vector<Tensor>, 2> reads = s.reads;
  ctrl::LstmState st{ad::concat_cols({s.enc[0].h, s.enc[1].h}), ad::concat_cols({s.enc[0].c, s.enc[1].c})};
  Seq2SeqResult r;
  std::vector<int> prev(B, -1);
  for (std::size_t k = 0; k < *decode_len; ++k) {
    std::vector<Tensor> in{embed_out_(ctrl::one_hot(prev, cfg_.out_vocab))};
    for (std::size_t v = 0; v < 2; ++v) in.insert(in.end(), reads[v].begin(), reads[v].end());
    st = ctrl::lstm_step(decoder_, ad::concat_cols(in), st);
    std::vector<Tensor> rs;
    for (std::size_t v = 0; v < 2; ++v) {
      dnc::DncEmission e = dec_read_(ad::slice_cols(st.h, v * H, H));
      mem[v] = dnc::read_step(mem[v], e);
      reads[v] = mem[v].reads;
      rs.insert(rs.end(), reads[v].begin(), reads[v].end());
    }
    Tensor logits = ad::add(out_(st.h), fd_(ad::concat_cols(rs)));
    record_predictions(r, logits);
    prev = ctrl::argmax_rows(logits);
  }
  return r;
}

Tensor DmncModel::decode_set(const DmncState& s) const {
  if (cfg_.output != OutputKind::Set) throw ArgumentError("dmnc: model was built for sequence output");
  std::array<Tensor, 2> r;
  for (std::size_t v = 0; v < 2; ++v) {
    dnc::DncEmission e = dec_read_(s.enc[v].h);
    r[v] = ad::concat_cols(dnc::read_step(s.mem[v], e).reads);
  }
  Tensor mix = ad::add(ad::add(set_w_[0](r[0]), set_w_[1](r[1])), set_w_[2](ad::concat_cols({s.enc[0].h, s.enc[1].h})));
  return fd_(mix);
}

Tensor set_loss(const Tensor& logits, const TokenBatch& labels) {
  if (labels.size() != logits.rows()) throw ShapeError("set loss: batch size");
  const std::size_t S = logits.cols();
  std::vector<double> y(logits.size(), 0.0);
  for (std::size_t b = 0; b < labels.size(); ++b)
    for (int l : labels[b]) {
      if (l < 0 || static_cast<std::size_t>(l) >= S) throw ArgumentError("set loss: label outside the output set");
      y[b * S + static_cast<std::size_t>(l)] = 1.0;
    }
  return ad::scale(ad::sigmoid_bce_with_logits(logits, Tensor::constant(logits.rows(), S, y), Tensor()),
                   1.0 / static_cast<double>(labels.size()));
}

std::vector<Tensor> persistent_episode_run(const DmncModel& model, const std::vector<Episode>& episodes,
                                           std::vector<DmncState>* states_after) {
  if (episodes.empty()) return {};
  DmncState s = model.initial_state(episodes[0].x1.size());
  std::vector<Tensor> losses;
  for (const auto& ep : episodes) {
    if (ep.x1.size() != s.mem[0].batch) throw ShapeError("persistent run: batch size changed");
    model.reset_controllers(s);
    model.encode(ep.x1, ep.x2, s);
    if (model.config().output == OutputKind::Set) {
      losses.push_back(set_loss(model.decode_set(s), ep.y));
    } else {
      auto r = model.decode_sequence(s, ep.y.at(0).size());
      losses.push_back(sequence_loss(r, ep.y));
    }
    if (states_after) states_after->push_back(s);
  }
  return losses;
}

std::string write_gate_csv(const std::vector<WriteGateRecord>& trace) {
  std::ostringstream out;
  out << "view,step,write_gate\n";
  for (const auto& r : trace) out << r.view << ',' << r.step << ',' << r.gate << '\n';
  return out.str();
}

}  // namespace memkit::dual
