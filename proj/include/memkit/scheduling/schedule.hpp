#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "memkit/autodiff/ops.hpp"
#include "memkit/autodiff/parameters.hpp"
#include "memkit/controllers/attention.hpp"
#include "memkit/dnc/dnc.hpp"
#include "memkit/ntm/ntm.hpp"

namespace memkit::sched {

using ad::Tensor;

enum class WritePolicy { Regular, Random, Uniform, CachedUniform, WriteProtected };

std::string to_string(WritePolicy p);
WritePolicy parse_policy(const std::string& name);

struct WriteSchedule {
  int T = 0;
  std::vector<int> steps;  // sorted, 1-based
  WritePolicy policy = WritePolicy::Regular;

  bool writes_at(int t) const;
  // JSON list of write steps.
  std::string to_json() const;
};

struct ScheduleOptions {
  // Cache size for cached_uniform, encode length for write_protected.
  std::optional<int> L;
  std::optional<std::uint64_t> seed;
  // When false, uniform schedules keep only the first D writes.
  bool count_final_write = true;
};

WriteSchedule make_schedule(WritePolicy policy, int T, int D, const ScheduleOptions& opts = {});

// Additive attention over cached controller states with an extra read term:
// e_j = v^T tanh(W h_{t-1} + U d_j + V r_{t-1}).
struct Cache {
  Cache() = default;
  Cache(ad::ParameterSet& params, const std::string& prefix, std::size_t capacity, std::size_t hidden,
        std::size_t read_width, std::size_t attn_dim, std::mt19937_64& rng);

  std::size_t capacity = 0;
  std::vector<Tensor> buffer;
  ctrl::AdditiveAttention att;
  Tensor V;
};

struct CuwHooks {
  // Runs the controller on x with the given recurrent input; returns new h.
  std::function<Tensor(const Tensor& x, const Tensor& h_in)> controller;
  std::function<void(const Tensor& h)> write;
  std::function<Tensor(const Tensor& h)> read;
};

struct CuwResult {
  Tensor h, r;
  bool wrote = false;
  Tensor alpha;  // cache attention on write steps
};

CuwResult cuw_step(Cache& cache, const Tensor& h_prev, const Tensor& r_prev, const Tensor& x, int t,
                   const CuwHooks& hooks);

// Writes while t <= L_in, returns the memory untouched afterwards.
ntm::SlotMemory write_protected_update(const ntm::SlotMemory& mem, const Tensor& w, const Tensor& erase,
                                       const Tensor& add, int t, int L_in);
dnc::DncState write_protected_update(const dnc::DncState& mem, const dnc::DncEmission& emission, int t,
                                     int L_in, bool temporal_links = true);

// A DNC whose encoding-phase writes follow a schedule. Decoding steps are
// read-only for every policy.
class ScheduledDnc {
 public:
  ScheduledDnc(const dnc::DncConfig& cfg, WritePolicy policy, int memory_slots_D, std::uint64_t seed,
               std::optional<int> cache_L = std::nullopt);

  ad::ParameterSet& params() { return model_.params(); }
  const dnc::DncModel& model() const { return model_; }
  WritePolicy policy() const { return policy_; }
  WriteSchedule schedule_for(int T) const;

  // Encodes every input row block (B x input each), then decodes
  // decode_inputs.size() steps; returns one logit tensor per decode step.
  std::vector<Tensor> run(const std::vector<Tensor>& inputs, const std::vector<Tensor>& decode_inputs,
                          std::vector<int>* wrote_steps = nullptr);

 private:
  dnc::DncModel model_;
  WritePolicy policy_;
  int D_;
  std::optional<int> cache_L_;
  std::uint64_t seed_;
  Cache cache_;
};

}  // namespace memkit::sched
