#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "memkit/errors.hpp"
#include "memkit/tasks/tasks.hpp"

namespace memkit::tasks {

std::vector<int> odd_even_target(const std::vector<int>& x) {
  const std::size_t L = x.size();
  // With L = 1 the half is empty; the first output still doubles x_1.
  const std::size_t half = std::max<std::size_t>(1, L / 2);
  std::vector<int> y;
  for (std::size_t n = 0; n < L; ++n) y.push_back(n < half ? 2 * x[n] : y.back() + 2);
  return y;
}

Sample generate_odd_even(const OddEvenSpec& spec, std::uint64_t seed) {
  if (spec.min_len < 1 || spec.max_len < spec.min_len || spec.max_len > 25)
    throw ArgumentError("generate_odd_even: length range must lie in [1, 25]");
  std::mt19937_64 rng(seed);
  const int L = std::uniform_int_distribution<int>(spec.min_len, spec.max_len)(rng);
  std::vector<int> pool(25);
  for (int i = 0; i < 25; ++i) pool[static_cast<std::size_t>(i)] = 2 * i + 1;
  // Partial Fisher-Yates: a draw without replacement.
  for (int i = 0; i < L; ++i) {
    const int j = std::uniform_int_distribution<int>(i, 24)(rng);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  const std::vector<int> x(pool.begin(), pool.begin() + L);
  const auto y = odd_even_target(x);
  Sample s;
  s.input = one_hot_rows(x, kOddEvenInVocab);
  s.target = one_hot_rows(y, kOddEvenOutVocab);
  s.mask.assign(y.size(), 1.0);
  s.meta = {{"task", "odd_even"}, {"length", L}, {"seed", seed}};
  return s;
}

std::vector<int> sum_target(const std::vector<int>& x1, const std::vector<int>& x2) {
  if (x1.size() != x2.size()) throw ArgumentError("sum_target: views differ in length");
  const std::size_t L = x1.size();
  std::vector<int> y(L);
  for (std::size_t i = 0; i < L; ++i) y[i] = x1[i] + x2[L - 1 - i];
  return y;
}

Sample generate_sum(const SumSpec& spec, std::uint64_t seed) {
  if (spec.min_len < 1 || spec.max_len < spec.min_len || spec.min_value < 1 || spec.max_value < spec.min_value)
    throw ArgumentError("generate_sum: bad ranges");
  std::mt19937_64 rng(seed);
  const int L = std::uniform_int_distribution<int>(spec.min_len, spec.max_len)(rng);
  std::uniform_int_distribution<int> value(spec.min_value, spec.max_value);
  std::vector<int> x1(static_cast<std::size_t>(L)), x2(static_cast<std::size_t>(L));
  for (auto& v : x1) v = value(rng);
  for (auto& v : x2) v = value(rng);
  const auto y = sum_target(x1, x2);
  const std::size_t in_w = static_cast<std::size_t>(spec.max_value) + 1;
  Sample s;
  s.input = one_hot_rows(x1, in_w);
  s.input2 = one_hot_rows(x2, in_w);
  s.target = one_hot_rows(y, 2 * in_w - 1);
  s.mask.assign(y.size(), 1.0);
  s.meta = {{"task", "sum_two_sequences"}, {"length", L}, {"seed", seed}};
  return s;
}

Sample generate_sinusoid(const SinusoidSpec& spec, std::uint64_t seed) {
  if (spec.T < 1) throw ArgumentError("generate_sinusoid: T must be >= 1");
  std::mt19937_64 rng(seed);
  const double A = spec.zero_amplitude ? 0.0 : std::uniform_real_distribution<double>(1.0, 5.0)(rng);
  const double f = std::uniform_real_distribution<double>(10.0, 30.0)(rng);
  const double phi = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0), noise(-2.0, 2.0);
  // Separate stream so the clean and noisy variants share the signal.
  std::mt19937_64 noise_rng(derive_seed(seed, 1));
  Sample s;
  for (int t = 1; t <= 2 * spec.T; ++t) {
    const double x = (t + jitter(rng)) / 1000.0;
    const double y = 5.0 + A * std::sin(2.0 * M_PI * f * x + phi);
    if (t <= spec.T) s.input.push_back({spec.noisy ? y + noise(noise_rng) : y});
    else s.target.push_back({y});
  }
  s.mask.assign(static_cast<std::size_t>(spec.T), 1.0);
  s.meta = {{"task", "sinusoid"}, {"A", A}, {"f", f}, {"phi", phi}, {"noisy", spec.noisy},
            {"degenerate", spec.zero_amplitude}, {"seed", seed}};
  return s;
}

}  // namespace memkit::tasks
