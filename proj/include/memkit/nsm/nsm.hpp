#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "memkit/ntm/ntm.hpp"

namespace memkit::nsm {

using ad::Tensor;

// P programs: keys P x K, values P x S (S = flattened interface weights).
struct ProgramMemory {
  Tensor keys, values;
  std::size_t programs() const { return keys.rows(); }
  std::size_t key_dim() const { return keys.cols(); }
  std::size_t value_dim() const { return values.cols(); }
};

ProgramMemory make_program_memory(ad::ParameterSet& params, const std::string& prefix, std::size_t programs,
                                  std::size_t key_dim, std::size_t value_dim, std::mt19937_64& rng);

struct LookupOptions {
  bool hard = false;
  double temperature = 0.5;
  std::mt19937_64* rng = nullptr;  // required when hard
};

struct LookupResult {
  Tensor program;  // B x S
  Tensor attn;     // B x P, one-hot in the forward pass when hard
  std::vector<bool> degenerate;  // per batch row: zero-norm query key
};

// Query keys B x K, strengths B x 1 (>= 0).
LookupResult program_lookup(const ProgramMemory& pm, const Tensor& query, const Tensor& beta,
                            const LookupOptions& opts = {});

// Sum over pairs i < j of cos(key_i, key_j).
Tensor key_overlap_loss(const ProgramMemory& pm);
// ||K K^T - I||_F; needs K == P.
Tensor key_orthogonality_loss(const ProgramMemory& pm);

inline constexpr std::size_t kDefaultDecayEvery = 1000;

double annealing_factor(std::size_t step, std::size_t decay_every = kDefaultDecayEvery);
double annealed_total_loss(double pred_loss, double l_p, std::size_t step, std::size_t decay_every = kDefaultDecayEvery);
Tensor annealed_total_loss(const Tensor& pred_loss, const Tensor& l_p, std::size_t step,
                           std::size_t decay_every = kDefaultDecayEvery);

struct NutmConfig {
  ntm::NtmConfig core;
  std::size_t programs = 4;
  std::size_t key_dim = 8;
  bool hard = false;
  double temperature = 0.5;
};

// NTM whose per-head interface weights W^c are read from a program memory
// each step. A meta network maps [h, 1] to the program query.
class NutmModel : public ntm::NtmModel {
 public:
  NutmModel(const NutmConfig& cfg, std::uint64_t seed);

  const NutmConfig& nutm_config() const { return ncfg_; }
  ProgramMemory& program_memory(std::size_t head) { return programs_[head]; }
  // Sum of key overlap losses over heads.
  Tensor program_regularizer() const;
  // Program attention of every head from the most recent step, B x P each.
  const std::vector<Tensor>& last_attention() const { return last_attn_; }

 protected:
  Tensor head_interface(std::size_t n, const Tensor& c_aug) override;

 private:
  NutmConfig ncfg_;
  std::vector<ProgramMemory> programs_;
  std::vector<Tensor> meta_;  // (H+1) x (K+1) per head
  std::vector<Tensor> last_attn_;
  std::mt19937_64 gumbel_rng_;
};

// Rows step,head,program,weight for batch row 0 of each traced step.
std::string program_attention_csv(const std::vector<std::vector<Tensor>>& per_step);

}  // namespace memkit::nsm
