#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "memkit/autodiff/ops.hpp"
#include "memkit/autodiff/parameters.hpp"
#include "memkit/controllers/cells.hpp"

namespace memkit::ntm {

using ad::Tensor;

// B memories of N slots by W columns, stored (B*N) x W.
struct SlotMemory {
  Tensor M;
  std::size_t batch = 0, slots = 0, width = 0;

  static SlotMemory filled(std::size_t batch, std::size_t slots, std::size_t width, double value = 1e-6);
  // Row i of batch element b.
  std::vector<double> row(std::size_t b, std::size_t i) const;
};

// Head emission for a batch: key/erase/add are B x W, beta/gate/gamma B x 1,
// shift B x 3 over offsets -1, 0, +1. Erase and add are unset for read heads.
struct HeadEmission {
  Tensor key, beta, gate, shift, gamma, erase, add;
};

std::size_t emission_width(std::size_t word, bool write_head);

// Squashes a raw controller emission so every field satisfies its domain:
// beta = softplus, gate = sigmoid, shift = softmax, gamma = 1 + softplus,
// erase = sigmoid, add = identity.
HeadEmission parse_emission(const Tensor& raw, std::size_t word, bool write_head);

// Content, gate, shift, sharpen. Returns B x N weights.
Tensor address_head(const SlotMemory& mem, const HeadEmission& emit, const Tensor& w_prev);

SlotMemory write_slot(const SlotMemory& mem, const Tensor& w, const Tensor& erase, const Tensor& add);
Tensor read_slot(const SlotMemory& mem, const Tensor& w);

struct NtmConfig {
  std::size_t input = 0;
  std::size_t output = 0;
  std::size_t hidden = 100;
  std::size_t slots = 16;
  std::size_t width = 16;
  std::size_t read_heads = 1;
  std::size_t write_heads = 1;
};

struct NtmState {
  ctrl::LstmState ctrl;
  SlotMemory mem;
  std::vector<Tensor> w_read, w_write, reads;
};

struct NtmStepTrace {
  std::vector<Tensor> read_weights, write_weights;
};

// LSTM-controlled NTM. Each head n maps the augmented controller output
// [h, 1] through interface weights W^c_n ((H+1) x emission width); writes
// happen before reads within a step.
class NtmModel {
 public:
  NtmModel(const NtmConfig& cfg, std::uint64_t seed);
  virtual ~NtmModel() = default;

  const NtmConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

  NtmState initial_state(std::size_t batch) const;
  // One step; returns output logits B x output.
  Tensor step(const Tensor& x, NtmState& state, NtmStepTrace* trace = nullptr);

  std::size_t head_count() const { return cfg_.read_heads + cfg_.write_heads; }
  bool is_write_head(std::size_t n) const { return n >= cfg_.read_heads; }
  std::size_t head_emission_width(std::size_t n) const { return emission_width(cfg_.width, is_write_head(n)); }
  Tensor& static_interface(std::size_t n) { return interface_[n]; }

 protected:
  // Raw emission of head n from the augmented controller output B x (H+1).
  virtual Tensor head_interface(std::size_t n, const Tensor& c_aug);
  // Builds parameters shared by subclasses; static interface weights only
  // when requested.
  NtmModel(const NtmConfig& cfg, std::uint64_t seed, bool static_interfaces);

  NtmConfig cfg_;
  ad::ParameterSet params_;
  std::mt19937_64 rng_;
  ctrl::LstmCell controller_;
  ctrl::Dense out_;
  std::vector<Tensor> interface_;
};

// Appends a constant 1 column: B x H -> B x (H+1).
Tensor augment_with_bias(const Tensor& h);

}  // namespace memkit::ntm
