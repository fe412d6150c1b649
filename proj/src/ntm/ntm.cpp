#include "memkit/ntm/ntm.hpp"

#include <cmath>

#include "memkit/errors.hpp"

namespace memkit::ntm {

SlotMemory SlotMemory::filled(std::size_t batch, std::size_t slots, std::size_t width, double value) {
  return {Tensor::constant(batch * slots, width, value), batch, slots, width};
}

std::vector<double> SlotMemory::row(std::size_t b, std::size_t i) const {
  const auto& v = M.value();
  auto first = v.begin() + static_cast<std::ptrdiff_t>((b * slots + i) * width);
  return {first, first + static_cast<std::ptrdiff_t>(width)};
}

std::size_t emission_width(std::size_t word, bool write_head) {
  return word + 6 + (write_head ? 2 * word : 0);
}

HeadEmission parse_emission(const Tensor& raw, std::size_t W, bool write_head) {
  if (raw.cols() != emission_width(W, write_head)) throw ShapeError("head emission width");
  HeadEmission e;
  e.key = ad::slice_cols(raw, 0, W);
  e.beta = ad::softplus(ad::slice_cols(raw, W, 1));
  e.gate = ad::sigmoid(ad::slice_cols(raw, W + 1, 1));
  e.shift = ad::softmax_rows(ad::slice_cols(raw, W + 2, 3));
  e.gamma = ad::add_scalar(ad::softplus(ad::slice_cols(raw, W + 5, 1)), 1.0);
  if (write_head) {
    e.erase = ad::sigmoid(ad::slice_cols(raw, W + 6, W));
    e.add = ad::slice_cols(raw, 2 * W + 6, W);
  }
  return e;
}

Tensor address_head(const SlotMemory& mem, const HeadEmission& emit, const Tensor& w_prev) {
  const std::size_t B = mem.batch;
  if (emit.key.rows() != B || emit.key.cols() != mem.width) throw ShapeError("address_head: key shape");
  if (w_prev.rows() != B || w_prev.cols() != mem.slots) throw ShapeError("address_head: previous weight shape");
  for (double g : emit.gamma.value())
    if (g < 1.0) throw ArgumentError("address_head: gamma must be >= 1");
  for (double g : emit.gate.value())
    if (g < 0.0 || g > 1.0) throw ArgumentError("address_head: gate outside [0, 1]");
  for (std::size_t b = 0; b < B; ++b) {
    double s = 0;
    for (std::size_t j = 0; j < emit.shift.cols(); ++j) s += emit.shift.at(b, j);
    if (std::abs(s - 1.0) > 1e-9) throw ArgumentError("address_head: shift weights must sum to 1");
  }
  Tensor content = ad::softmax_with_strength(ad::cosine_rows(emit.key, mem.M), emit.beta);
  Tensor gated = ad::add(ad::mul(emit.gate, content), ad::mul(ad::one_minus(emit.gate), w_prev));
  return ad::sharpen(ad::circular_shift(gated, emit.shift), emit.gamma);
}

SlotMemory write_slot(const SlotMemory& mem, const Tensor& w, const Tensor& erase, const Tensor& add) {
  if (w.rows() != mem.batch || w.cols() != mem.slots) throw ShapeError("write_slot: weight shape");
  if (erase.cols() != mem.width || add.cols() != mem.width) throw ShapeError("write_slot: vector width");
  for (double e : erase.value())
    if (e < 0.0 || e > 1.0) throw ArgumentError("write_slot: erase outside [0, 1]");
  Tensor kept = ad::mul(mem.M, ad::one_minus(ad::batched_outer(w, erase)));
  return {ad::add(kept, ad::batched_outer(w, add)), mem.batch, mem.slots, mem.width};
}

Tensor read_slot(const SlotMemory& mem, const Tensor& w) {
  if (w.rows() != mem.batch || w.cols() != mem.slots) throw ShapeError("read_slot: weight shape");
  return ad::batched_read(w, mem.M);
}

Tensor augment_with_bias(const Tensor& h) {
  return ad::concat_cols({h, Tensor::constant(h.rows(), 1, 1.0)});
}

NtmModel::NtmModel(const NtmConfig& cfg, std::uint64_t seed) : NtmModel(cfg, seed, true) {}

NtmModel::NtmModel(const NtmConfig& cfg, std::uint64_t seed, bool static_interfaces)
    : cfg_(cfg), rng_(seed) {
  if (cfg.input == 0 || cfg.output == 0 || cfg.hidden == 0 || cfg.slots == 0 || cfg.width == 0)
    throw ArgumentError("ntm: sizes must be positive");
  if (cfg.read_heads == 0) throw ArgumentError("ntm: at least one read head");
  controller_ = ctrl::LstmCell(params_, "ctrl", cfg.input + cfg.read_heads * cfg.width, cfg.hidden, rng_);
  out_ = ctrl::Dense(params_, "out", cfg.hidden + cfg.read_heads * cfg.width, cfg.output, rng_);
  if (static_interfaces)
    for (std::size_t n = 0; n < head_count(); ++n)
      interface_.push_back(params_.uniform("head" + std::to_string(n) + ".Wc", cfg.hidden + 1,
                                           head_emission_width(n), ctrl::kInitScale, rng_));
}

NtmState NtmModel::initial_state(std::size_t batch) const {
  NtmState s;
  s.ctrl = ctrl::lstm_zero_state(controller_, batch);
  s.mem = SlotMemory::filled(batch, cfg_.slots, cfg_.width);
  std::vector<double> first(batch * cfg_.slots, 0.0);
  for (std::size_t b = 0; b < batch; ++b) first[b * cfg_.slots] = 1.0;
  for (std::size_t n = 0; n < cfg_.read_heads; ++n) {
    s.w_read.push_back(Tensor::constant(batch, cfg_.slots, first));
    s.reads.push_back(Tensor::constant(batch, cfg_.width));
  }
  for (std::size_t n = 0; n < cfg_.write_heads; ++n) s.w_write.push_back(Tensor::constant(batch, cfg_.slots, first));
  return s;
}

Tensor NtmModel::head_interface(std::size_t n, const Tensor& c_aug) { return ad::matmul(c_aug, interface_[n]); }

Tensor NtmModel::step(const Tensor& x, NtmState& s, NtmStepTrace* trace) {
  if (x.cols() != cfg_.input) throw ShapeError("ntm step: input width");
  std::vector<Tensor> ctrl_in{x};
  for (auto& r : s.reads) ctrl_in.push_back(r);
  s.ctrl = ctrl::lstm_step(controller_, ad::concat_cols(ctrl_in), s.ctrl);
  Tensor c_aug = augment_with_bias(s.ctrl.h);

  for (std::size_t n = 0; n < cfg_.write_heads; ++n) {
    const std::size_t head = cfg_.read_heads + n;
    HeadEmission e = parse_emission(head_interface(head, c_aug), cfg_.width, true);
    s.w_write[n] = address_head(s.mem, e, s.w_write[n]);
    s.mem = write_slot(s.mem, s.w_write[n], e.erase, e.add);
    if (trace) trace->write_weights.push_back(s.w_write[n]);
  }
  for (std::size_t n = 0; n < cfg_.read_heads; ++n) {
    HeadEmission e = parse_emission(head_interface(n, c_aug), cfg_.width, false);
    s.w_read[n] = address_head(s.mem, e, s.w_read[n]);
    s.reads[n] = read_slot(s.mem, s.w_read[n]);
    if (trace) trace->read_weights.push_back(s.w_read[n]);
  }
  std::vector<Tensor> out_in{s.ctrl.h};
  for (auto& r : s.reads) out_in.push_back(r);
  return out_(ad::concat_cols(out_in));
}

}  // namespace memkit::ntm
