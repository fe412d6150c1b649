#include "memkit/dnc/dnc.hpp"

#include <cmath>
#include <sstream>

#include "memkit/errors.hpp"
#include "memkit/ntm/ntm.hpp"

namespace memkit::dnc {

DncState dnc_zero_state(std::size_t batch, std::size_t slots, std::size_t width, std::size_t read_heads) {
  if (batch == 0 || slots == 0 || width == 0 || read_heads == 0) throw ArgumentError("dnc: sizes must be positive");
  DncState s;
  s.batch = batch;
  s.slots = slots;
  s.width = width;
  s.M = Tensor::constant(batch * slots, width, 1e-6);
  s.usage = Tensor::constant(batch, slots);
  s.precedence = Tensor::constant(batch, slots);
  s.links = Tensor::constant(batch * slots, slots);
  s.w_write = Tensor::constant(batch, slots);
  for (std::size_t k = 0; k < read_heads; ++k) {
    s.w_read.push_back(Tensor::constant(batch, slots));
    s.reads.push_back(Tensor::constant(batch, width));
  }
  return s;
}

std::size_t dnc_interface_width(std::size_t W, std::size_t R) { return R * W + R + W + 1 + W + W + R + 1 + 1 + 3 * R; }

DncEmission parse_dnc_emission(const Tensor& raw, std::size_t W, std::size_t R) {
  if (raw.cols() != dnc_interface_width(W, R)) throw ShapeError("dnc emission width");
  DncEmission e;
  std::size_t off = 0;
  auto take = [&](std::size_t n) {
    Tensor t = ad::slice_cols(raw, off, n);
    off += n;
    return t;
  };
  for (std::size_t k = 0; k < R; ++k) e.read_keys.push_back(take(W));
  for (std::size_t k = 0; k < R; ++k) e.read_strengths.push_back(ad::softplus(take(1)));
  e.write_key = take(W);
  e.write_strength = ad::softplus(take(1));
  e.erase = ad::sigmoid(take(W));
  e.write_vec = take(W);
  for (std::size_t k = 0; k < R; ++k) e.free_gates.push_back(ad::sigmoid(take(1)));
  e.alloc_gate = ad::sigmoid(take(1));
  e.write_gate = ad::sigmoid(take(1));
  for (std::size_t k = 0; k < R; ++k) e.read_modes.push_back(ad::softmax_rows(take(3)));
  return e;
}

AllocationResult allocation_step(const DncState& s, const DncEmission& e) {
  if (e.free_gates.size() != s.w_read.size()) throw ShapeError("dnc: free gates per read head");
  Tensor u = ad::sub(ad::add(s.usage, s.w_write), ad::mul(s.usage, s.w_write));
  for (std::size_t k = 0; k < s.w_read.size(); ++k)
    u = ad::mul(u, ad::one_minus(ad::mul(e.free_gates[k], s.w_read[k])));
  return {u, ad::allocation_weights(u)};
}

DncState write_step(const DncState& s, const DncEmission& e, bool temporal_links) {
  DncState next = s;
  auto [u, alloc] = allocation_step(s, e);
  Tensor content = ad::softmax_with_strength(ad::cosine_rows(e.write_key, s.M), e.write_strength);
  Tensor mixed = ad::add(ad::mul(e.alloc_gate, alloc), ad::mul(ad::one_minus(e.alloc_gate), content));
  Tensor ww = ad::mul(e.write_gate, mixed);
  Tensor gated = ad::mul(e.write_gate, ww);
  next.M = ad::add(ad::mul(s.M, ad::one_minus(ad::batched_outer(gated, e.erase))),
                   ad::batched_outer(gated, e.write_vec));
  next.usage = u;
  next.w_write = ww;
  if (temporal_links) {
    next.links = ad::link_update(s.links, ww, s.precedence);
    next.precedence = ad::add(ad::mul(ad::one_minus(ad::sum_cols(ww)), s.precedence), ww);
  }
  return next;
}

DncState read_step(const DncState& s, const DncEmission& e, bool temporal_links) {
  if (e.read_keys.size() != s.w_read.size()) throw ShapeError("dnc: read keys per read head");
  DncState next = s;
  for (std::size_t k = 0; k < s.w_read.size(); ++k) {
    Tensor content = ad::softmax_with_strength(ad::cosine_rows(e.read_keys[k], s.M), e.read_strengths[k]);
    Tensor w = content;
    if (temporal_links) {
      const Tensor& pi = e.read_modes[k];
      Tensor bwd = ad::batched_matvec(s.links, s.w_read[k], true);
      Tensor fwd = ad::batched_matvec(s.links, s.w_read[k], false);
      w = ad::add(ad::add(ad::mul(ad::slice_cols(pi, 0, 1), bwd), ad::mul(ad::slice_cols(pi, 1, 1), content)),
                  ad::mul(ad::slice_cols(pi, 2, 1), fwd));
    }
    next.w_read[k] = w;
    next.reads[k] = ad::batched_read(w, s.M);
  }
  return next;
}

std::string check_invariants(const DncState& s, double tol) {
  std::ostringstream err;
  const std::size_t B = s.batch, N = s.slots;
  auto weight_ok = [&](const Tensor& w, const char* name) {
    for (std::size_t b = 0; b < B; ++b) {
      double total = 0;
      for (std::size_t i = 0; i < N; ++i) {
        const double x = w.at(b, i);
        if (x < -tol) err << name << " negative; ";
        total += x;
      }
      if (total > 1 + tol) err << name << " sums above 1; ";
    }
  };
  for (double u : s.usage.value())
    if (u < -tol || u > 1 + tol) err << "usage outside [0,1]; ";
  weight_ok(s.w_write, "write weight");
  weight_ok(s.precedence, "precedence");
  for (auto& w : s.w_read) weight_ok(w, "read weight");
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<double> col(N, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
      double row = 0;
      for (std::size_t j = 0; j < N; ++j) {
        const double l = s.links.at(b * N + i, j);
        if (i == j && l != 0.0) err << "link diagonal nonzero; ";
        if (l < -tol || l > 1 + tol) err << "link outside [0,1]; ";
        row += l;
        col[j] += l;
      }
      if (row > 1 + tol) err << "link row sum above 1; ";
    }
    for (double c : col)
      if (c > 1 + tol) err << "link column sum above 1; ";
  }
  return err.str();
}

DncInterface::DncInterface(ad::ParameterSet& params, const std::string& prefix, std::size_t hidden,
                           std::size_t w, std::size_t r, std::mt19937_64& rng)
    : width(w), read_heads(r) {
  Wc = params.uniform(prefix + ".Wc", hidden + 1, dnc_interface_width(w, r), ctrl::kInitScale, rng);
}

Tensor DncInterface::raw(const Tensor& h) const { return ad::matmul(ntm::augment_with_bias(h), Wc); }

DncEmission DncInterface::operator()(const Tensor& h) const { return parse_dnc_emission(raw(h), width, read_heads); }

DncModel::DncModel(const DncConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) {
  if (cfg.input == 0 || cfg.output == 0 || cfg.hidden == 0) throw ArgumentError("dnc: sizes must be positive");
  controller_ = ctrl::LstmCell(params_, "ctrl", cfg.input + cfg.read_heads * cfg.width, cfg.hidden, rng_);
  interface_ = DncInterface(params_, "iface", cfg.hidden, cfg.width, cfg.read_heads, rng_);
  out_ = ctrl::Dense(params_, "out", cfg.hidden + cfg.read_heads * cfg.width, cfg.output, rng_);
}

DncModelState DncModel::initial_state(std::size_t batch) const {
  return {ctrl::lstm_zero_state(controller_, batch),
          dnc_zero_state(batch, cfg_.slots, cfg_.width, cfg_.read_heads), DncEmission{}};
}

void DncModel::controller_step(const Tensor& x, DncModelState& s, const Tensor& h_override) const {
  if (x.cols() != cfg_.input) throw ShapeError("dnc step: input width");
  std::vector<Tensor> in{x};
  for (auto& r : s.mem.reads) in.push_back(r);
  const Tensor& h_prev = h_override.defined() ? h_override : s.ctrl.h;
  s.ctrl = ctrl::lstm_step(controller_, ad::concat_cols(in), h_prev, s.ctrl.c);
  s.emission = interface_(s.ctrl.h);
}

void DncModel::write(DncModelState& s) const { s.mem = write_step(s.mem, s.emission, cfg_.temporal_links); }

void DncModel::read(DncModelState& s) const { s.mem = read_step(s.mem, s.emission, cfg_.temporal_links); }

Tensor DncModel::output(const DncModelState& s) const {
  std::vector<Tensor> in{s.ctrl.h};
  for (auto& r : s.mem.reads) in.push_back(r);
  return out_(ad::concat_cols(in));
}

Tensor DncModel::step(const Tensor& x, DncModelState& s, bool write_enabled) const {
  controller_step(x, s);
  if (write_enabled) write(s);
  read(s);
  return output(s);
}

}  // namespace memkit::dnc
