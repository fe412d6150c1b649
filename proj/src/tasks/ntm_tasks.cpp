#include <algorithm>
#include <numeric>
#include <random>

#include "memkit/errors.hpp"
#include "memkit/tasks/tasks.hpp"

namespace memkit::tasks {

namespace {

std::vector<double> random_bits(int bits, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<double> v(static_cast<std::size_t>(bits));
  for (auto& b : v) b = coin(rng) ? 1.0 : 0.0;
  return v;
}

// Input row carrying payload bits and optional control channels.
std::vector<double> input_row(int bits, const std::vector<double>& payload, bool start_in, bool start_out,
                              double scalar) {
  std::vector<double> r(ntm_input_width(bits), 0.0);
  std::copy(payload.begin(), payload.end(), r.begin());
  r[static_cast<std::size_t>(bits)] = start_in ? 1.0 : 0.0;
  r[static_cast<std::size_t>(bits) + 1] = start_out ? 1.0 : 0.0;
  r[static_cast<std::size_t>(bits) + 2] = scalar;
  return r;
}

bool in_set(int v, std::initializer_list<int> allowed) {
  return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
}

}  // namespace

NtmKind parse_ntm_kind(const std::string& s) {
  if (s == "copy") return NtmKind::Copy;
  if (s == "repeat_copy") return NtmKind::RepeatCopy;
  if (s == "assoc_recall") return NtmKind::AssocRecall;
  if (s == "dyn_ngrams") return NtmKind::DynNgrams;
  if (s == "priority_sort") return NtmKind::PrioritySort;
  throw ArgumentError("unknown NTM task: " + s);
}

std::string to_string(NtmKind k) {
  switch (k) {
    case NtmKind::Copy: return "copy";
    case NtmKind::RepeatCopy: return "repeat_copy";
    case NtmKind::AssocRecall: return "assoc_recall";
    case NtmKind::DynNgrams: return "dyn_ngrams";
    case NtmKind::PrioritySort: return "priority_sort";
  }
  return "?";
}

NtmSpec published_ntm_spec(NtmKind kind) {
  NtmSpec s;
  s.kind = kind;
  switch (kind) {
    case NtmKind::Copy: s.min_len = 1; s.max_len = 20; break;
    case NtmKind::RepeatCopy: s.min_len = 1; s.max_len = 10; s.min_repeat = 1; s.max_repeat = 10; break;
    case NtmKind::AssocRecall: s.min_items = 2; s.max_items = 6; s.item_len = 3; break;
    case NtmKind::DynNgrams: s.ngram_len = 50; break;
    case NtmKind::PrioritySort: s.items = 20; s.sorted = 16; break;
  }
  return s;
}

void validate(const NtmSpec& s) {
  if (s.bits < 1) throw ArgumentError("NtmSpec: bits must be >= 1");
  switch (s.kind) {
    case NtmKind::Copy:
    case NtmKind::RepeatCopy:
      if (s.min_len < 1 || s.max_len < s.min_len) throw ArgumentError("NtmSpec: bad length range");
      if (s.kind == NtmKind::RepeatCopy) {
        if (s.min_repeat < 1 || s.max_repeat < s.min_repeat) throw ArgumentError("NtmSpec: bad repeat range");
        if (!(s.repeat_norm > 0)) throw ArgumentError("NtmSpec: repeat_norm must be positive");
      }
      break;
    case NtmKind::AssocRecall:
      if (s.min_items < 2 || s.max_items < s.min_items) throw ArgumentError("NtmSpec: need at least 2 items");
      if (s.item_len < 1) throw ArgumentError("NtmSpec: item_len must be >= 1");
      if (s.bits * s.item_len < 31 && (1L << (s.bits * s.item_len)) < s.max_items)
        throw ArgumentError("NtmSpec: too few distinct items for max_items");
      break;
    case NtmKind::DynNgrams:
      if (s.ngram_len < 1 || s.history < 1 || s.history > 20) throw ArgumentError("NtmSpec: bad n-gram settings");
      break;
    case NtmKind::PrioritySort:
      if (s.items < 1 || s.sorted < 1 || s.sorted > s.items) throw ArgumentError("NtmSpec: bad sort sizes");
      break;
  }
  if (s.downscaled) return;
  // Union of the published training and testing settings.
  bool ok = true;
  switch (s.kind) {
    case NtmKind::Copy: ok = s.max_len <= 200; break;
    case NtmKind::RepeatCopy: ok = s.max_len <= 20 && s.max_repeat <= 20; break;
    case NtmKind::AssocRecall: ok = s.max_items <= 20 && in_set(s.item_len, {3, 6, 8}); break;
    case NtmKind::DynNgrams: ok = in_set(s.ngram_len, {50, 200}); break;
    case NtmKind::PrioritySort: ok = in_set(s.items, {10, 20}) && in_set(s.sorted, {8, 10, 16, 20}); break;
  }
  if (!ok) throw ArgumentError("NtmSpec: " + to_string(s.kind) + " settings outside the published ranges; set downscaled");
}

std::size_t ntm_target_width(const NtmSpec& spec) {
  if (spec.kind == NtmKind::DynNgrams) return 1;
  return static_cast<std::size_t>(spec.bits) + (spec.kind == NtmKind::RepeatCopy ? 1 : 0);
}

NtmEpisode ntm_episode(const NtmSpec& spec, std::mt19937_64& rng) {
  validate(spec);
  if (spec.kind == NtmKind::DynNgrams) throw ArgumentError("ntm_episode: n-grams has no input/output phases");
  const int w = spec.bits;
  const std::vector<double> none;
  NtmEpisode ep;
  ep.meta["task"] = to_string(spec.kind);
  ep.meta["bits"] = w;
  switch (spec.kind) {
    case NtmKind::Copy: {
      const int L = std::uniform_int_distribution<int>(spec.min_len, spec.max_len)(rng);
      ep.in.push_back(input_row(w, none, true, false, 0.0));
      for (int i = 0; i < L; ++i) {
        auto item = random_bits(w, rng);
        ep.in.push_back(input_row(w, item, false, false, 0.0));
        ep.out.push_back(item);
      }
      ep.in.push_back(input_row(w, none, false, true, 0.0));
      ep.meta["length"] = L;
      break;
    }
    case NtmKind::RepeatCopy: {
      const int L = std::uniform_int_distribution<int>(spec.min_len, spec.max_len)(rng);
      Rows items;
      ep.in.push_back(input_row(w, none, true, false, 0.0));
      for (int i = 0; i < L; ++i) {
        items.push_back(random_bits(w, rng));
        ep.in.push_back(input_row(w, items.back(), false, false, 0.0));
      }
      // Drawn after the items so repeat copy shares them with copy.
      const int n = std::uniform_int_distribution<int>(spec.min_repeat, spec.max_repeat)(rng);
      ep.in.push_back(input_row(w, none, false, true, n / spec.repeat_norm));
      for (int k = 0; k < n; ++k)
        for (const auto& it : items) {
          auto row = it;
          row.push_back(0.0);
          ep.out.push_back(row);
        }
      std::vector<double> end(static_cast<std::size_t>(w) + 1, 0.0);
      end.back() = 1.0;
      ep.out.push_back(end);
      ep.meta["length"] = L;
      ep.meta["repeats"] = n;
      break;
    }
    case NtmKind::AssocRecall: {
      const int k = std::uniform_int_distribution<int>(spec.min_items, spec.max_items)(rng);
      // Items are distinct so the query has a unique successor.
      std::vector<Rows> items;
      while (static_cast<int>(items.size()) < k) {
        Rows item;
        for (int r = 0; r < spec.item_len; ++r) item.push_back(random_bits(w, rng));
        if (std::find(items.begin(), items.end(), item) != items.end()) continue;
        ep.in.push_back(input_row(w, none, true, false, 0.0));
        for (const auto& row : item) ep.in.push_back(input_row(w, row, false, false, 0.0));
        items.push_back(std::move(item));
      }
      const int q = std::uniform_int_distribution<int>(0, k - 2)(rng);
      ep.in.push_back(input_row(w, none, false, true, 0.0));
      for (const auto& row : items[static_cast<std::size_t>(q)]) ep.in.push_back(input_row(w, row, false, false, 0.0));
      ep.in.push_back(input_row(w, none, false, true, 0.0));
      ep.out = items[static_cast<std::size_t>(q) + 1];
      ep.meta["items"] = k;
      ep.meta["query"] = q;
      break;
    }
    case NtmKind::PrioritySort: {
      std::uniform_real_distribution<double> prio(-1.0, 1.0);
      Rows items;
      std::vector<double> priorities;
      ep.in.push_back(input_row(w, none, true, false, 0.0));
      for (int i = 0; i < spec.items; ++i) {
        items.push_back(random_bits(w, rng));
        priorities.push_back(prio(rng));
        ep.in.push_back(input_row(w, items.back(), false, false, priorities.back()));
      }
      ep.in.push_back(input_row(w, none, false, true, 0.0));
      std::vector<std::size_t> order(items.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return priorities[a] > priorities[b]; });
      for (int i = 0; i < spec.sorted; ++i) ep.out.push_back(items[order[static_cast<std::size_t>(i)]]);
      ep.meta["items"] = spec.items;
      ep.meta["sorted"] = spec.sorted;
      ep.meta["priorities"] = priorities;
      break;
    }
    case NtmKind::DynNgrams:
      break;
  }
  return ep;
}

namespace {

Sample ngram_sample(const NtmSpec& spec, std::mt19937_64& rng) {
  validate(spec);
  const std::size_t contexts = std::size_t{1} << spec.history;
  // Beta(1/2, 1/2) via two Gamma(1/2) draws.
  std::gamma_distribution<double> g(0.5, 1.0);
  std::vector<double> table(contexts);
  for (auto& p : table) {
    const double a = g(rng), b = g(rng);
    p = (a + b) > 0 ? a / (a + b) : 0.5;
  }
  std::bernoulli_distribution coin(0.5);
  std::vector<int> bits;
  for (int i = 0; i < spec.history; ++i) bits.push_back(coin(rng));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int total = spec.ngram_len + 1;
  while (static_cast<int>(bits.size()) < total + spec.history) {
    std::size_t ctx = 0;
    for (int i = spec.history; i >= 1; --i) ctx = (ctx << 1) | static_cast<std::size_t>(bits[bits.size() - i]);
    bits.push_back(u(rng) < table[ctx] ? 1 : 0);
  }
  // Drop the warm-up history so every scored bit has a full context.
  Sample s;
  for (int t = 0; t < spec.ngram_len; ++t) {
    s.input.push_back({static_cast<double>(bits[static_cast<std::size_t>(spec.history + t)])});
    s.target.push_back({static_cast<double>(bits[static_cast<std::size_t>(spec.history + t + 1)])});
  }
  s.mask.assign(static_cast<std::size_t>(spec.ngram_len), 1.0);
  s.meta = {{"task", "dyn_ngrams"}, {"history", spec.history}, {"table", table},
            {"warmup", std::vector<int>(bits.begin(), bits.begin() + spec.history)}};
  return s;
}

}  // namespace

Sample generate_ntm_task(const NtmSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (spec.kind == NtmKind::DynNgrams) {
    auto s = ngram_sample(spec, rng);
    s.meta["seed"] = seed;
    return s;
  }
  auto ep = ntm_episode(spec, rng);
  const std::size_t tw = ntm_target_width(spec);
  const std::size_t iw = ntm_input_width(spec.bits);
  Sample s;
  s.input = ep.in;
  s.input.insert(s.input.end(), ep.out.size(), std::vector<double>(iw, 0.0));
  s.target.assign(ep.in.size(), std::vector<double>(tw, 0.0));
  s.target.insert(s.target.end(), ep.out.begin(), ep.out.end());
  s.mask.assign(ep.in.size(), 0.0);
  s.mask.insert(s.mask.end(), ep.out.size(), 1.0);
  s.meta = ep.meta;
  s.meta["seed"] = seed;
  return s;
}

}  // namespace memkit::tasks
