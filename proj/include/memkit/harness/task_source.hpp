#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "memkit/tasks/tasks.hpp"

namespace memkit::harness {

// Aligned: per-row binary targets under a mask. Seq2Seq: token sequence in,
// token sequence out. TwoView: two token sequences in. Regression: real rows.
enum class Family { Aligned, Seq2Seq, TwoView, Regression };
std::string to_string(Family f);

// Task json from a CLI name: NTM task names, sequencing, the discrete
// operations (copy is the NTM task; discrete copy is "seq_copy"), odd_even,
// sum_two_sequences and sinusoid.
nlohmann::json task_from_name(const std::string& name);

class TaskSource {
 public:
  // Unknown kinds or fields are ArgumentErrors.
  explicit TaskSource(const nlohmann::json& task);

  Family family() const { return family_; }
  const nlohmann::json& spec() const { return spec_; }
  std::string kind() const { return spec_.at("kind").get<std::string>(); }
  std::size_t input_width() const { return in_w_; }
  std::size_t input2_width() const { return in2_w_; }
  std::size_t output_width() const { return out_w_; }
  std::vector<std::string> default_metrics() const;

  tasks::Sample sample(std::uint64_t seed) const;
  // Sample i uses derive_seed(seed, i). Token tasks draw one length per
  // batch so the batch stacks without padding.
  std::vector<tasks::Sample> batch(std::size_t n, std::uint64_t seed) const;

 private:
  tasks::Sample sample_with_length(std::uint64_t seed, int length) const;

  nlohmann::json spec_;
  Family family_ = Family::Aligned;
  std::size_t in_w_ = 0, in2_w_ = 0, out_w_ = 0;
  std::vector<tasks::NtmSpec> ntm_;  // one spec, or the sequenced subtasks
  bool sequencing_ = false;
  tasks::DiscreteSpec discrete_;
  tasks::OddEvenSpec odd_even_;
  tasks::SumSpec sum_;
  tasks::SinusoidSpec sinusoid_;
};

// Checks a metric against the task family; mismatches are ArgumentErrors.
void check_metric_supported(const std::string& metric, Family family);

}  // namespace memkit::harness
