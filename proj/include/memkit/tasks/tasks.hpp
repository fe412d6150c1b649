#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace memkit::tasks {

using Rows = std::vector<std::vector<double>>;

// One generated example. Rows are time steps. Two-view tasks fill input2.
// mask has one entry per target row; 1 marks a scored step.
struct Sample {
  Rows input;
  Rows input2;
  Rows target;
  std::vector<double> mask;
  nlohmann::json meta;
};

nlohmann::json to_json(const Sample& s);
// One JSON object per line.
std::string to_jsonl(const std::vector<Sample>& samples);

Rows one_hot_rows(const std::vector<int>& tokens, std::size_t width);
// Index of the largest entry per row, lowest index on ties.
std::vector<int> argmax_tokens(const Rows& rows);

// Independent per-sample seed for sample i of a batch.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// ---- seq2seq integer tasks ----

enum class DiscreteKind { Double, Copy, Reverse, Add, Max, LongCopy };
DiscreteKind parse_discrete_kind(const std::string& s);
std::string to_string(DiscreteKind k);

struct DiscreteSpec {
  DiscreteKind kind = DiscreteKind::Copy;
  int min_len = 1;
  int max_len = 10;
  int min_value = 1;
  int max_value = 10;
};

// Value ranges [1,50] for Max and [1,10] otherwise.
DiscreteSpec default_discrete_spec(DiscreteKind kind, int min_len, int max_len);

// Target rule. Add rounds the pair mean down to stay in the vocabulary.
std::vector<int> discrete_target(DiscreteKind kind, const std::vector<int>& x);

// One-hot rows of width max_value + 1; index 0 is unused padding.
Sample generate_discrete(const DiscreteSpec& spec, std::uint64_t seed);

// ---- NTM binary tasks ----

enum class NtmKind { Copy, RepeatCopy, AssocRecall, DynNgrams, PrioritySort };
NtmKind parse_ntm_kind(const std::string& s);
std::string to_string(NtmKind k);

struct NtmSpec {
  NtmKind kind = NtmKind::Copy;
  int bits = 8;
  int min_len = 1, max_len = 20;     // copy and repeat copy
  int min_repeat = 1, max_repeat = 10;
  double repeat_norm = 1.0;          // repeat count is fed as n / repeat_norm
  int min_items = 2, max_items = 6;  // associative recall
  int item_len = 3;
  int items = 20, sorted = 16;       // priority sort
  int ngram_len = 50, history = 6;   // dynamic n-grams
  bool downscaled = false;           // skip the published-range check
};

// Training settings of the single-task table.
NtmSpec published_ntm_spec(NtmKind kind);
// Throws ArgumentError on malformed specs, or on ranges outside every
// published setting for the task unless downscaled is set.
void validate(const NtmSpec& spec);

// Input channels: bits, start-of-input, start-of-target, scalar (repeat
// count or priority).
inline std::size_t ntm_input_width(int bits) { return static_cast<std::size_t>(bits) + 3; }
std::size_t ntm_target_width(const NtmSpec& spec);

// Input phase followed by a silent output phase.
struct NtmEpisode {
  Rows in;   // input phase rows, width ntm_input_width
  Rows out;  // expected output rows
  nlohmann::json meta;
};
NtmEpisode ntm_episode(const NtmSpec& spec, std::mt19937_64& rng);

// Time-aligned sample: target and mask are zero during the input phase.
// Dynamic n-grams is a one-channel next-bit prediction stream instead.
Sample generate_ntm_task(const NtmSpec& spec, std::uint64_t seed);

// ---- two healthcare-style synthetic tasks ----

struct OddEvenSpec {
  int min_len = 1, max_len = 20;
};
inline constexpr int kOddEvenInVocab = 50;    // tokens 0..49, 0 reserved
inline constexpr int kOddEvenOutVocab = 125;  // tokens 0..124 (L = 25 reaches 98 + 26), 0 reserved

// y_n = 2 x_n for n <= max(1, floor(L/2)), else y_{n-1} + 2.
std::vector<int> odd_even_target(const std::vector<int>& x);
Sample generate_odd_even(const OddEvenSpec& spec, std::uint64_t seed);

struct SumSpec {
  int min_len = 1, max_len = 10;
  int min_value = 1, max_value = 50;
};
// y_i = x1_i + x2_{L+1-i}.
std::vector<int> sum_target(const std::vector<int>& x1, const std::vector<int>& x2);
// One-hot views of width max_value + 1, target width 2 max_value + 1.
Sample generate_sum(const SumSpec& spec, std::uint64_t seed);

// ---- sinusoid continuation ----

struct SinusoidSpec {
  int T = 100;
  bool noisy = false;
  bool zero_amplitude = false;
};
// y = 5 + A sin(2 pi f x + phi) at x_t = (t + e)/1000, e ~ U(-1,1) per point;
// input is points 1..T (plus U(-2,2) noise when noisy), target T+1..2T.
Sample generate_sinusoid(const SinusoidSpec& spec, std::uint64_t seed);

// ---- sequencing and continual learning ----

inline constexpr std::size_t kIndicatorChannels = 4;

// Indicator rows (one per subtask, one-hot over C/RC/AR/PS), all input
// phases, then all output phases. meta["segments"] lists each subtask's
// scored [begin, end) rows.
Sample compose_sequencing(const std::vector<NtmSpec>& subtasks, std::uint64_t seed);

// Continual-learning table settings in order C, RC, AR, PS.
std::vector<NtmSpec> published_continual_specs();

inline constexpr std::size_t kPublishedItersPerTask = 20000;
inline constexpr std::size_t kPublishedCurriculumBatch = 16;

struct CurriculumEvent {
  enum class Type { Batch, Eval };
  Type type = Type::Batch;
  std::size_t task = 0;       // index into the order
  std::size_t iteration = 0;  // within the task
  std::vector<Sample> batch;  // empty for Eval
};

// Batches task by task; after the last batch of each task an Eval marker
// covering all tasks is emitted.
class ContinualCurriculum {
 public:
  ContinualCurriculum(std::vector<NtmSpec> order, std::size_t iters_per_task, std::size_t batch, std::uint64_t seed);
  std::optional<CurriculumEvent> next();
  const std::vector<NtmSpec>& order() const { return order_; }

 private:
  std::vector<NtmSpec> order_;
  std::size_t iters_, batch_;
  std::uint64_t seed_;
  std::size_t task_ = 0, iter_ = 0, emitted_ = 0;
  bool eval_pending_ = false;
};

}  // namespace memkit::tasks
