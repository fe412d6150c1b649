#include "memkit/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "memkit/errors.hpp"

namespace memkit::harness {

MetricKind parse_metric(const std::string& name) {
  if (name == "bit_error") return MetricKind::BitError;
  if (name == "bit_accuracy") return MetricKind::BitAccuracy;
  if (name == "seq_accuracy") return MetricKind::SeqAccuracy;
  if (name == "nld") return MetricKind::Nld;
  if (name == "precision_at_k") return MetricKind::PrecisionAtK;
  if (name == "mse") return MetricKind::Mse;
  throw ArgumentError("unknown metric: " + name);
}

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::BitError: return "bit_error";
    case MetricKind::BitAccuracy: return "bit_accuracy";
    case MetricKind::SeqAccuracy: return "seq_accuracy";
    case MetricKind::Nld: return "nld";
    case MetricKind::PrecisionAtK: return "precision_at_k";
    case MetricKind::Mse: return "mse";
  }
  return "?";
}

namespace {

void check_rows(const tasks::Rows& pred, const tasks::Rows& target, const std::vector<double>& mask,
                const char* who) {
  if (pred.size() != target.size() || mask.size() != target.size())
    throw ShapeError(std::string(who) + ": row counts differ");
  for (std::size_t t = 0; t < target.size(); ++t)
    if (pred[t].size() != target[t].size()) throw ShapeError(std::string(who) + ": row widths differ");
}

}  // namespace

double bit_error(const tasks::Rows& pred, const tasks::Rows& target, const std::vector<double>& mask) {
  check_rows(pred, target, mask, "bit_error");
  double wrong = 0.0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    if (mask[t] <= 0.0) continue;
    for (std::size_t j = 0; j < target[t].size(); ++j) wrong += (pred[t][j] > 0.5) != (target[t][j] > 0.5);
  }
  return wrong;
}

double bit_accuracy(const tasks::Rows& pred, const tasks::Rows& target, const std::vector<double>& mask) {
  check_rows(pred, target, mask, "bit_accuracy");
  double bits = 0.0;
  for (std::size_t t = 0; t < target.size(); ++t)
    if (mask[t] > 0.0) bits += static_cast<double>(target[t].size());
  if (bits == 0.0) throw ArgumentError("bit_accuracy: no masked bits");
  return 1.0 - bit_error(pred, target, mask) / bits;
}

double seq_accuracy(const std::vector<int>& pred, const std::vector<int>& target) {
  if (target.empty()) throw ArgumentError("seq_accuracy: empty target");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < target.size() && i < pred.size(); ++i) hit += pred[i] == target[i];
  return static_cast<double>(hit) / static_cast<double>(target.size());
}

std::size_t levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double nld(const std::vector<int>& pred, const std::vector<int>& target) {
  const std::size_t longer = std::max(pred.size(), target.size());
  if (longer == 0) return 0.0;
  return static_cast<double>(levenshtein(pred, target)) / static_cast<double>(longer);
}

double precision_at_k(const std::vector<double>& scores, const std::vector<int>& relevant, std::size_t k) {
  if (k == 0 || k > scores.size()) throw ArgumentError("precision_at_k: k must lie in [1, candidates]");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Ties keep the lower index first.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t hit = 0;
  for (std::size_t i = 0; i < k; ++i)
    hit += std::find(relevant.begin(), relevant.end(), static_cast<int>(order[i])) != relevant.end();
  return static_cast<double>(hit) / static_cast<double>(k);
}

double mse(const tasks::Rows& pred, const tasks::Rows& target, const std::vector<double>& mask) {
  check_rows(pred, target, mask, "mse");
  double se = 0.0, n = 0.0;
  for (std::size_t t = 0; t < target.size(); ++t) {
    if (mask[t] <= 0.0) continue;
    for (std::size_t j = 0; j < target[t].size(); ++j) {
      const double d = pred[t][j] - target[t][j];
      se += d * d;
      n += 1.0;
    }
  }
  if (n == 0.0) throw ArgumentError("mse: no masked values");
  return se / n;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

}  // namespace memkit::harness
