#include "memkit/scheduling/schedule.hpp"

#include <random>
#include <sstream>

#include "memkit/errors.hpp"

namespace memkit::sched {

std::string to_string(WritePolicy p) {
  switch (p) {
    case WritePolicy::Regular: return "regular";
    case WritePolicy::Random: return "random";
    case WritePolicy::Uniform: return "uniform";
    case WritePolicy::CachedUniform: return "cached_uniform";
    case WritePolicy::WriteProtected: return "write_protected";
  }
  return "unknown";
}

WritePolicy parse_policy(const std::string& name) {
  for (auto p : {WritePolicy::Regular, WritePolicy::Random, WritePolicy::Uniform, WritePolicy::CachedUniform,
                 WritePolicy::WriteProtected})
    if (to_string(p) == name) return p;
  throw ArgumentError("unknown write policy: " + name);
}

bool WriteSchedule::writes_at(int t) const {
  for (int s : steps)
    if (s == t) return true;
  return false;
}

std::string WriteSchedule::to_json() const {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < steps.size(); ++i) out << (i ? "," : "") << steps[i];
  out << ']';
  return out.str();
}

WriteSchedule make_schedule(WritePolicy policy, int T, int D, const ScheduleOptions& opts) {
  if (T < 1) throw ArgumentError("schedule: T must be >= 1");
  if (D < 1) throw ArgumentError("schedule: D must be >= 1");
  WriteSchedule s;
  s.T = T;
  s.policy = policy;
  const int interval = T / (D + 1);
  if (opts.L && policy != WritePolicy::WriteProtected && (*opts.L < 1 || *opts.L > interval))
    throw ArgumentError("schedule: cache size must lie in [1, floor(T/(D+1))]");
  switch (policy) {
    case WritePolicy::Regular:
      for (int t = 1; t <= T; ++t) s.steps.push_back(t);
      break;
    case WritePolicy::Uniform:
      if (D + 1 > T) throw ArgumentError("uniform schedule needs D + 1 <= T");
      for (int t = interval; t <= T; t += interval) s.steps.push_back(t);
      if (!opts.count_final_write && static_cast<int>(s.steps.size()) > D) s.steps.resize(static_cast<std::size_t>(D));
      break;
    case WritePolicy::CachedUniform: {
      if (D + 1 > T) throw ArgumentError("cached uniform schedule needs D + 1 <= T");
      const int L = opts.L.value_or(interval);
      for (int t = L; t <= T; t += L) s.steps.push_back(t);
      break;
    }
    case WritePolicy::Random: {
      std::mt19937_64 rng(opts.seed.value_or(0));
      const double p = std::min(1.0, static_cast<double>(D + 1) / static_cast<double>(T));
      std::bernoulli_distribution coin(p);
      for (int t = 1; t <= T; ++t)
        if (coin(rng)) s.steps.push_back(t);
      break;
    }
    case WritePolicy::WriteProtected: {
      if (!opts.L) throw ArgumentError("write_protected schedule needs the encode length");
      for (int t = 1; t <= std::min(T, *opts.L); ++t) s.steps.push_back(t);
      break;
    }
  }
  return s;
}

Cache::Cache(ad::ParameterSet& params, const std::string& prefix, std::size_t cap, std::size_t hidden,
             std::size_t read_width, std::size_t attn_dim, std::mt19937_64& rng)
    : capacity(cap), att(params, prefix, hidden, hidden, attn_dim, rng) {
  if (cap == 0) throw ArgumentError("cache capacity must be positive");
  V = params.uniform(prefix + ".V", attn_dim, read_width, ctrl::kInitScale, rng);
}

CuwResult cuw_step(Cache& cache, const Tensor& h_prev, const Tensor& r_prev, const Tensor& x, int t,
                   const CuwHooks& hooks) {
  if (cache.capacity == 0) throw ArgumentError("cuw_step: cache capacity unset");
  cache.buffer.push_back(h_prev);
  CuwResult out;
  if (t % static_cast<int>(cache.capacity) == 0) {
    Tensor query = ad::add(ad::linear(h_prev, cache.att.W, Tensor()), ad::linear(r_prev, cache.V, Tensor()));
    auto att = ctrl::additive_attend(cache.att, query, cache.buffer);
    out.alpha = att.alpha;
    out.h = hooks.controller(x, att.context);
    hooks.write(out.h);
    out.r = hooks.read(out.h);
    out.wrote = true;
    cache.buffer.clear();
  } else {
    out.h = hooks.controller(x, h_prev);
    out.r = r_prev;
  }
  return out;
}

ntm::SlotMemory write_protected_update(const ntm::SlotMemory& mem, const Tensor& w, const Tensor& erase,
                                       const Tensor& add, int t, int L_in) {
  if (t < 1) throw ArgumentError("write_protected_update: t must be >= 1");
  if (t > L_in) return mem;
  return ntm::write_slot(mem, w, erase, add);
}

dnc::DncState write_protected_update(const dnc::DncState& mem, const dnc::DncEmission& emission, int t,
                                     int L_in, bool temporal_links) {
  if (t < 1) throw ArgumentError("write_protected_update: t must be >= 1");
  if (t > L_in) return mem;
  return dnc::write_step(mem, emission, temporal_links);
}

ScheduledDnc::ScheduledDnc(const dnc::DncConfig& cfg, WritePolicy policy, int D, std::uint64_t seed,
                           std::optional<int> cache_L)
    : model_(cfg, seed), policy_(policy), D_(D), cache_L_(cache_L), seed_(seed) {
  if (policy == WritePolicy::CachedUniform) {
    if (!cache_L || *cache_L < 1) throw ArgumentError("cached uniform writing needs a cache size");
    cache_ = Cache(model_.params(), "cache", static_cast<std::size_t>(*cache_L), cfg.hidden,
                   cfg.read_heads * cfg.width, cfg.hidden, model_.rng());
  }
}

WriteSchedule ScheduledDnc::schedule_for(int T) const {
  ScheduleOptions opts;
  opts.seed = seed_ ^ 0x5eedULL;
  if (policy_ == WritePolicy::CachedUniform) opts.L = cache_L_;
  if (policy_ == WritePolicy::WriteProtected) opts.L = T;
  return make_schedule(policy_, T, D_, opts);
}

std::vector<Tensor> ScheduledDnc::run(const std::vector<Tensor>& inputs, const std::vector<Tensor>& decode_inputs,
                                      std::vector<int>* wrote_steps) {
  if (inputs.empty()) throw ArgumentError("scheduled dnc: empty input");
  const std::size_t B = inputs[0].rows();
  dnc::DncModelState s = model_.initial_state(B);
  const int T = static_cast<int>(inputs.size());
  if (policy_ == WritePolicy::CachedUniform) {
    cache_.buffer.clear();
    CuwHooks hooks;
    hooks.controller = [&](const Tensor& x, const Tensor& h_in) {
      model_.controller_step(x, s, h_in);
      return s.ctrl.h;
    };
    hooks.write = [&](const Tensor&) { model_.write(s); };
    hooks.read = [&](const Tensor&) {
      model_.read(s);
      return ad::concat_cols(s.mem.reads);
    };
    Tensor r = ad::concat_cols(s.mem.reads);
    for (int t = 1; t <= T; ++t) {
      auto res = cuw_step(cache_, s.ctrl.h, r, inputs[static_cast<std::size_t>(t - 1)], t, hooks);
      r = res.r;
      if (res.wrote && wrote_steps) wrote_steps->push_back(t);
    }
    cache_.buffer.clear();
  } else {
    const WriteSchedule sched = schedule_for(T);
    for (int t = 1; t <= T; ++t) {
      model_.controller_step(inputs[static_cast<std::size_t>(t - 1)], s);
      if (sched.writes_at(t)) {
        model_.write(s);
        if (wrote_steps) wrote_steps->push_back(t);
      }
      model_.read(s);
    }
  }
  std::vector<Tensor> logits;
  for (const auto& x : decode_inputs) logits.push_back(model_.step(x, s, false));
  return logits;
}

}  // namespace memkit::sched
