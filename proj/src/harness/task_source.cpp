#include "memkit/harness/task_source.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "memkit/errors.hpp"
#include "memkit/harness/metrics.hpp"

namespace memkit::harness {

using nlohmann::json;

std::string to_string(Family f) {
  switch (f) {
    case Family::Aligned: return "aligned";
    case Family::Seq2Seq: return "seq2seq";
    case Family::TwoView: return "two_view";
    case Family::Regression: return "regression";
  }
  return "?";
}

namespace {

const std::set<std::string> kNtmKinds = {"copy", "repeat_copy", "assoc_recall", "dyn_ngrams", "priority_sort"};
const std::set<std::string> kDiscreteOps = {"double", "reverse", "add", "max", "long_copy"};

void allow_keys(const json& j, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : j.items())
    if (k != "kind" && !allowed.count(k))
      throw ArgumentError("task " + j.at("kind").get<std::string>() + ": unknown field '" + k + "'");
}

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

const std::set<std::string> kNtmFields = {"bits",      "min_len", "max_len",  "min_repeat", "max_repeat",
                                          "repeat_norm", "min_items", "max_items", "item_len", "items",
                                          "sorted",    "ngram_len", "history", "downscaled"};

tasks::NtmSpec ntm_spec_from(const json& j, tasks::NtmKind kind) {
  tasks::NtmSpec s = tasks::published_ntm_spec(kind);
  take(j, "bits", s.bits);
  take(j, "min_len", s.min_len);
  take(j, "max_len", s.max_len);
  take(j, "min_repeat", s.min_repeat);
  take(j, "max_repeat", s.max_repeat);
  take(j, "repeat_norm", s.repeat_norm);
  take(j, "min_items", s.min_items);
  take(j, "max_items", s.max_items);
  take(j, "item_len", s.item_len);
  take(j, "items", s.items);
  take(j, "sorted", s.sorted);
  take(j, "ngram_len", s.ngram_len);
  take(j, "history", s.history);
  take(j, "downscaled", s.downscaled);
  tasks::validate(s);
  return s;
}

}  // namespace

json task_from_name(const std::string& name) {
  if (kNtmKinds.count(name) || name == "odd_even" || name == "sum_two_sequences" || name == "sinusoid")
    return {{"kind", name}};
  if (name == "sequencing") return {{"kind", name}, {"subtasks", {"copy", "repeat_copy"}}};
  if (kDiscreteOps.count(name)) return {{"kind", "discrete"}, {"op", name}};
  if (name == "seq_copy") return {{"kind", "discrete"}, {"op", "copy"}};
  throw ArgumentError("unknown task: " + name);
}

TaskSource::TaskSource(const json& task) : spec_(task) {
  if (!task.is_object() || !task.contains("kind")) throw ArgumentError("task needs a kind");
  const std::string kind = task.at("kind").get<std::string>();
  try {
    if (kNtmKinds.count(kind)) {
      allow_keys(task, kNtmFields);
      ntm_.push_back(ntm_spec_from(task, tasks::parse_ntm_kind(kind)));
      in_w_ = tasks::ntm_input_width(ntm_[0].bits);
      out_w_ = tasks::ntm_target_width(ntm_[0]);
    } else if (kind == "sequencing") {
      auto fields = kNtmFields;
      fields.insert("subtasks");
      allow_keys(task, fields);
      if (!task.contains("subtasks")) throw ArgumentError("sequencing needs subtasks");
      for (const auto& name : task.at("subtasks")) {
        const auto k = tasks::parse_ntm_kind(name.get<std::string>());
        ntm_.push_back(ntm_spec_from(task, k));
        out_w_ = std::max(out_w_, tasks::ntm_target_width(ntm_.back()));
      }
      if (ntm_.empty()) throw ArgumentError("sequencing needs at least one subtask");
      sequencing_ = true;
      in_w_ = tasks::ntm_input_width(ntm_[0].bits) + tasks::kIndicatorChannels;
    } else if (kind == "discrete") {
      allow_keys(task, {"op", "min_len", "max_len", "min_value", "max_value"});
      if (!task.contains("op")) throw ArgumentError("discrete task needs an op");
      int lo = 1, hi = 10;
      take(task, "min_len", lo);
      take(task, "max_len", hi);
      discrete_ = tasks::default_discrete_spec(tasks::parse_discrete_kind(task.at("op").get<std::string>()), lo, hi);
      take(task, "min_value", discrete_.min_value);
      take(task, "max_value", discrete_.max_value);
      if (lo < 1 || hi < lo || discrete_.min_value < 1 || discrete_.max_value < discrete_.min_value)
        throw ArgumentError("discrete task: bad ranges");
      if ((discrete_.kind == tasks::DiscreteKind::Add || discrete_.kind == tasks::DiscreteKind::Max) && lo < 2)
        throw ArgumentError("discrete add/max need min_len >= 2 for a non-empty target");
      family_ = Family::Seq2Seq;
      in_w_ = out_w_ = static_cast<std::size_t>(discrete_.max_value) + 1;
    } else if (kind == "odd_even") {
      allow_keys(task, {"min_len", "max_len"});
      take(task, "min_len", odd_even_.min_len);
      take(task, "max_len", odd_even_.max_len);
      if (odd_even_.min_len < 1 || odd_even_.max_len < odd_even_.min_len || odd_even_.max_len > 25)
        throw ArgumentError("odd_even: length range must lie in [1, 25]");
      family_ = Family::Seq2Seq;
      in_w_ = tasks::kOddEvenInVocab;
      out_w_ = tasks::kOddEvenOutVocab;
    } else if (kind == "sum_two_sequences") {
      allow_keys(task, {"min_len", "max_len", "min_value", "max_value"});
      take(task, "min_len", sum_.min_len);
      take(task, "max_len", sum_.max_len);
      take(task, "min_value", sum_.min_value);
      take(task, "max_value", sum_.max_value);
      if (sum_.min_len < 1 || sum_.max_len < sum_.min_len || sum_.min_value < 1 || sum_.max_value < sum_.min_value)
        throw ArgumentError("sum_two_sequences: bad ranges");
      family_ = Family::TwoView;
      in_w_ = in2_w_ = static_cast<std::size_t>(sum_.max_value) + 1;
      out_w_ = 2 * in_w_ - 1;
    } else if (kind == "sinusoid") {
      allow_keys(task, {"T", "noisy"});
      take(task, "T", sinusoid_.T);
      take(task, "noisy", sinusoid_.noisy);
      if (sinusoid_.T < 1) throw ArgumentError("sinusoid: T must be >= 1");
      family_ = Family::Regression;
      in_w_ = out_w_ = 1;
    } else {
      throw ArgumentError("unknown task kind: " + kind);
    }
  } catch (const json::exception& e) {
    throw ArgumentError("task " + kind + ": wrong field type: " + e.what());
  }
}

std::vector<std::string> TaskSource::default_metrics() const {
  switch (family_) {
    case Family::Aligned: return {"bit_accuracy", "bit_error"};
    case Family::Seq2Seq:
    case Family::TwoView: return {"seq_accuracy", "nld"};
    case Family::Regression: return {"mse"};
  }
  return {};
}

tasks::Sample TaskSource::sample_with_length(std::uint64_t seed, int length) const {
  switch (family_) {
    case Family::Aligned:
      return sequencing_ ? tasks::compose_sequencing(ntm_, seed) : tasks::generate_ntm_task(ntm_[0], seed);
    case Family::Seq2Seq:
      if (spec_.at("kind") == "discrete") {
        auto s = discrete_;
        if (length > 0) s.min_len = s.max_len = length;
        return tasks::generate_discrete(s, seed);
      } else {
        auto s = odd_even_;
        if (length > 0) s.min_len = s.max_len = length;
        return tasks::generate_odd_even(s, seed);
      }
    case Family::TwoView: {
      auto s = sum_;
      if (length > 0) s.min_len = s.max_len = length;
      return tasks::generate_sum(s, seed);
    }
    case Family::Regression: return tasks::generate_sinusoid(sinusoid_, seed);
  }
  throw ArgumentError("unreachable task family");
}

tasks::Sample TaskSource::sample(std::uint64_t seed) const { return sample_with_length(seed, 0); }

std::vector<tasks::Sample> TaskSource::batch(std::size_t n, std::uint64_t seed) const {
  int length = 0;
  if (family_ == Family::Seq2Seq || family_ == Family::TwoView) {
    int lo = 1, hi = 1;
    if (spec_.at("kind") == "discrete") {
      lo = discrete_.min_len;
      hi = discrete_.max_len;
    } else if (family_ == Family::TwoView) {
      lo = sum_.min_len;
      hi = sum_.max_len;
    } else {
      lo = odd_even_.min_len;
      hi = odd_even_.max_len;
    }
    std::mt19937_64 rng(tasks::derive_seed(seed, 0xba7c4ULL));
    length = std::uniform_int_distribution<int>(lo, hi)(rng);
  }
  std::vector<tasks::Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_with_length(tasks::derive_seed(seed, i), length));
  return out;
}

void check_metric_supported(const std::string& metric, Family family) {
  const MetricKind m = parse_metric(metric);
  bool ok = false;
  switch (m) {
    case MetricKind::BitError:
    case MetricKind::BitAccuracy: ok = family == Family::Aligned; break;
    case MetricKind::SeqAccuracy:
    case MetricKind::Nld: ok = family == Family::Seq2Seq || family == Family::TwoView; break;
    case MetricKind::Mse: ok = family == Family::Regression || family == Family::Aligned; break;
    case MetricKind::PrecisionAtK: ok = false; break;
  }
  if (!ok) throw ArgumentError("metric " + metric + " does not apply to " + to_string(family) + " tasks");
}

}  // namespace memkit::harness
