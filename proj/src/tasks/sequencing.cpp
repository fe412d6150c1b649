#include <algorithm>
#include <random>

#include "memkit/errors.hpp"
#include "memkit/tasks/tasks.hpp"

namespace memkit::tasks {

namespace {

std::size_t indicator_index(NtmKind k) {
  switch (k) {
    case NtmKind::Copy: return 0;
    case NtmKind::RepeatCopy: return 1;
    case NtmKind::AssocRecall: return 2;
    case NtmKind::PrioritySort: return 3;
    case NtmKind::DynNgrams: break;
  }
  throw ArgumentError("compose_sequencing: dynamic n-grams cannot be sequenced");
}

}  // namespace

Sample compose_sequencing(const std::vector<NtmSpec>& subtasks, std::uint64_t seed) {
  if (subtasks.empty()) throw ArgumentError("compose_sequencing: empty subtask list");
  const int bits = subtasks.front().bits;
  std::size_t tw = 0;
  for (const auto& s : subtasks) {
    indicator_index(s.kind);
    if (s.bits != bits) throw ArgumentError("compose_sequencing: subtasks must share the bit width");
    tw = std::max(tw, ntm_target_width(s));
  }
  const std::size_t iw = ntm_input_width(bits) + kIndicatorChannels;

  std::mt19937_64 rng(seed);
  std::vector<NtmEpisode> eps;
  for (const auto& s : subtasks) eps.push_back(ntm_episode(s, rng));

  Sample out;
  nlohmann::json names = nlohmann::json::array(), parts = nlohmann::json::array();
  for (const auto& s : subtasks) {
    std::vector<double> row(iw, 0.0);
    row[ntm_input_width(bits) + indicator_index(s.kind)] = 1.0;
    out.input.push_back(row);
    names.push_back(to_string(s.kind));
  }
  for (const auto& ep : eps)
    for (const auto& r : ep.in) {
      auto row = r;
      row.resize(iw, 0.0);
      out.input.push_back(row);
    }
  const std::size_t in_len = out.input.size();
  out.target.assign(in_len, std::vector<double>(tw, 0.0));
  out.mask.assign(in_len, 0.0);
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& ep : eps) {
    const std::size_t begin = out.target.size();
    for (const auto& r : ep.out) {
      auto row = r;
      row.resize(tw, 0.0);
      out.target.push_back(row);
      out.input.push_back(std::vector<double>(iw, 0.0));
      out.mask.push_back(1.0);
    }
    segments.push_back({begin, out.target.size()});
    parts.push_back(ep.meta);
  }
  out.meta = {{"task", "sequencing"}, {"order", names}, {"segments", segments}, {"subtasks", parts}, {"seed", seed}};
  return out;
}

std::vector<NtmSpec> published_continual_specs() {
  NtmSpec c = published_ntm_spec(NtmKind::Copy);
  c.max_len = 10;
  NtmSpec rc = published_ntm_spec(NtmKind::RepeatCopy);
  rc.max_len = 5;
  rc.max_repeat = 5;
  NtmSpec ar = published_ntm_spec(NtmKind::AssocRecall);
  ar.max_items = 3;
  NtmSpec ps = published_ntm_spec(NtmKind::PrioritySort);
  ps.items = 10;
  ps.sorted = 8;
  return {c, rc, ar, ps};
}

ContinualCurriculum::ContinualCurriculum(std::vector<NtmSpec> order, std::size_t iters_per_task, std::size_t batch,
                                         std::uint64_t seed)
    : order_(std::move(order)), iters_(iters_per_task), batch_(batch), seed_(seed) {
  if (order_.empty()) throw ArgumentError("ContinualCurriculum: empty task order");
  if (iters_ < 1 || batch_ < 1) throw ArgumentError("ContinualCurriculum: iters_per_task and batch must be >= 1");
  for (const auto& s : order_) validate(s);
}

std::optional<CurriculumEvent> ContinualCurriculum::next() {
  if (eval_pending_) {
    eval_pending_ = false;
    CurriculumEvent ev;
    ev.type = CurriculumEvent::Type::Eval;
    ev.task = task_ - 1;
    ev.iteration = iters_;
    return ev;
  }
  if (task_ >= order_.size()) return std::nullopt;
  CurriculumEvent ev;
  ev.task = task_;
  ev.iteration = iter_;
  for (std::size_t b = 0; b < batch_; ++b)
    ev.batch.push_back(generate_ntm_task(order_[task_], derive_seed(seed_, emitted_++)));
  if (++iter_ == iters_) {
    iter_ = 0;
    ++task_;
    eval_pending_ = true;
  }
  return ev;
}

}  // namespace memkit::tasks
