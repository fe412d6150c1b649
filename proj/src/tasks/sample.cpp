#include <sstream>

#include "memkit/errors.hpp"
#include "memkit/tasks/tasks.hpp"

namespace memkit::tasks {

nlohmann::json to_json(const Sample& s) {
  nlohmann::json j;
  j["input"] = s.input;
  if (!s.input2.empty()) j["input2"] = s.input2;
  j["target"] = s.target;
  j["mask"] = s.mask;
  j["meta"] = s.meta.is_null() ? nlohmann::json::object() : s.meta;
  return j;
}

std::string to_jsonl(const std::vector<Sample>& samples) {
  std::ostringstream os;
  for (const auto& s : samples) os << to_json(s).dump() << '\n';
  return os.str();
}

Rows one_hot_rows(const std::vector<int>& tokens, std::size_t width) {
  Rows rows(tokens.size(), std::vector<double>(width, 0.0));
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] < 0 || static_cast<std::size_t>(tokens[t]) >= width)
      throw ArgumentError("one_hot_rows: token " + std::to_string(tokens[t]) + " outside vocabulary");
    rows[t][static_cast<std::size_t>(tokens[t])] = 1.0;
  }
  return rows;
}

std::vector<int> argmax_tokens(const Rows& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < r.size(); ++i)
      if (r[i] > r[best]) best = i;
    out.push_back(static_cast<int>(best));
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser over seed and index.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace memkit::tasks
