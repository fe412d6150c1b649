#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "memkit/autodiff/ops.hpp"
#include "memkit/autodiff/parameters.hpp"
#include "memkit/controllers/cells.hpp"

namespace memkit::dnc {

using ad::Tensor;

// Batched DNC memory state. M and links are (B*N) x W and (B*N) x N; the
// per-slot vectors are B x N; reads are B x W per head.
struct DncState {
  std::size_t batch = 0, slots = 0, width = 0;
  Tensor M, usage, precedence, links, w_write;
  std::vector<Tensor> w_read, reads;
};

DncState dnc_zero_state(std::size_t batch, std::size_t slots, std::size_t width, std::size_t read_heads);

// Interface fields, all B x ...:
//
//   field            width   squashing
//   read keys        R*W     none
//   read strengths   R       softplus
//   write key        W       none
//   write strength   1       softplus
//   erase            W       sigmoid
//   write vector     W       none
//   free gates       R       sigmoid
//   allocation gate  1       sigmoid
//   write gate       1       sigmoid
//   read modes       3R      softmax per head (backward, content, forward)
struct DncEmission {
  std::vector<Tensor> read_keys, read_strengths, free_gates, read_modes;
  Tensor write_key, write_strength, erase, write_vec, alloc_gate, write_gate;
};

std::size_t dnc_interface_width(std::size_t width, std::size_t read_heads);
DncEmission parse_dnc_emission(const Tensor& raw, std::size_t width, std::size_t read_heads);

struct AllocationResult {
  Tensor usage, alloc;
};

// Usage decays by the free gates applied to the previous read weights and
// grows with the previous write weights.
AllocationResult allocation_step(const DncState& state, const DncEmission& emission);

// Allocation, write weighting, erase/add with the write gate applied to the
// final write weights, then precedence and link updates.
DncState write_step(const DncState& state, const DncEmission& emission, bool temporal_links = true);

// Three-mode read weights and read vectors for every head.
DncState read_step(const DncState& state, const DncEmission& emission, bool temporal_links = true);

// Empty string when every invariant holds within tol, else a description.
std::string check_invariants(const DncState& state, double tol = 1e-9);

// Projects a controller output into a DNC emission through [h, 1] W^c.
struct DncInterface {
  DncInterface() = default;
  DncInterface(ad::ParameterSet& params, const std::string& prefix, std::size_t hidden, std::size_t width,
               std::size_t read_heads, std::mt19937_64& rng);
  std::size_t width = 0, read_heads = 0;
  Tensor Wc;
  Tensor raw(const Tensor& h) const;
  DncEmission operator()(const Tensor& h) const;
};

struct DncConfig {
  std::size_t input = 0;
  std::size_t output = 0;
  std::size_t hidden = 64;
  std::size_t slots = 16;
  std::size_t width = 16;
  std::size_t read_heads = 1;
  bool temporal_links = true;
};

struct DncModelState {
  ctrl::LstmState ctrl;
  DncState mem;
  DncEmission emission;  // from the latest controller step
};

// LSTM-controlled DNC. The pieces are exposed so schedulers can run the
// controller, write and read phases separately.
class DncModel {
 public:
  DncModel(const DncConfig& cfg, std::uint64_t seed);

  const DncConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }
  std::mt19937_64& rng() { return rng_; }

  DncModelState initial_state(std::size_t batch) const;
  // Controller update on [x, previous reads]; h_override replaces h_{t-1}.
  void controller_step(const Tensor& x, DncModelState& s, const Tensor& h_override = Tensor()) const;
  void write(DncModelState& s) const;
  void read(DncModelState& s) const;
  Tensor output(const DncModelState& s) const;
  // Regular step: controller, optional write, read, output logits.
  Tensor step(const Tensor& x, DncModelState& s, bool write_enabled = true) const;

 private:
  DncConfig cfg_;
  ad::ParameterSet params_;
  std::mt19937_64 rng_;
  ctrl::LstmCell controller_;
  DncInterface interface_;
  ctrl::Dense out_;
};

}  // namespace memkit::dnc
