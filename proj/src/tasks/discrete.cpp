#include <algorithm>
#include <random>

#include "memkit/errors.hpp"
#include "memkit/tasks/tasks.hpp"

namespace memkit::tasks {

DiscreteKind parse_discrete_kind(const std::string& s) {
  if (s == "double") return DiscreteKind::Double;
  if (s == "copy") return DiscreteKind::Copy;
  if (s == "reverse") return DiscreteKind::Reverse;
  if (s == "add") return DiscreteKind::Add;
  if (s == "max") return DiscreteKind::Max;
  if (s == "long_copy") return DiscreteKind::LongCopy;
  throw ArgumentError("unknown discrete task: " + s);
}

std::string to_string(DiscreteKind k) {
  switch (k) {
    case DiscreteKind::Double: return "double";
    case DiscreteKind::Copy: return "copy";
    case DiscreteKind::Reverse: return "reverse";
    case DiscreteKind::Add: return "add";
    case DiscreteKind::Max: return "max";
    case DiscreteKind::LongCopy: return "long_copy";
  }
  return "?";
}

DiscreteSpec default_discrete_spec(DiscreteKind kind, int min_len, int max_len) {
  DiscreteSpec s;
  s.kind = kind;
  s.min_len = min_len;
  s.max_len = max_len;
  s.max_value = kind == DiscreteKind::Max ? 50 : 10;
  return s;
}

std::vector<int> discrete_target(DiscreteKind kind, const std::vector<int>& x) {
  const std::size_t T = x.size();
  std::vector<int> y;
  switch (kind) {
    case DiscreteKind::Double:
      y = x;
      y.insert(y.end(), x.begin(), x.end());
      break;
    case DiscreteKind::Copy:
    case DiscreteKind::LongCopy:
      y = x;
      break;
    case DiscreteKind::Reverse:
      y.assign(x.rbegin(), x.rend());
      break;
    case DiscreteKind::Add:
      // 1-based: y_t = (x_t + x_{T-t}) / 2 for t <= floor(T/2).
      for (std::size_t t = 1; t <= T / 2; ++t) y.push_back((x[t - 1] + x[T - t - 1]) / 2);
      break;
    case DiscreteKind::Max:
      for (std::size_t t = 1; t <= T / 2; ++t) y.push_back(std::max(x[2 * t - 2], x[2 * t - 1]));
      break;
  }
  return y;
}

Sample generate_discrete(const DiscreteSpec& spec, std::uint64_t seed) {
  if (spec.min_len < 1 || spec.max_len < spec.min_len) throw ArgumentError("generate_discrete: bad length range");
  if (spec.min_value < 1 || spec.max_value < spec.min_value) throw ArgumentError("generate_discrete: bad value range");
  std::mt19937_64 rng(seed);
  const int T = std::uniform_int_distribution<int>(spec.min_len, spec.max_len)(rng);
  std::uniform_int_distribution<int> value(spec.min_value, spec.max_value);
  std::vector<int> x(static_cast<std::size_t>(T));
  for (auto& v : x) v = value(rng);
  const auto y = discrete_target(spec.kind, x);
  const std::size_t width = static_cast<std::size_t>(spec.max_value) + 1;
  Sample s;
  s.input = one_hot_rows(x, width);
  s.target = one_hot_rows(y, width);
  s.mask.assign(y.size(), 1.0);
  s.meta = {{"task", to_string(spec.kind)}, {"length", T}, {"vocab", width}, {"seed", seed}};
  return s;
}

}  // namespace memkit::tasks
