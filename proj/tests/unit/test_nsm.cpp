#include <doctest.h>

#include <cmath>
#include <random>

#include "memkit/autodiff/gradcheck.hpp"
#include "memkit/errors.hpp"
#include "memkit/nsm/nsm.hpp"

using namespace memkit;
using namespace memkit::nsm;
using ad::Tensor;

namespace {

Tensor random_leaf(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(r * c);
  for (auto& x : v) x = d(rng);
  return Tensor::leaf(r, c, v);
}

ProgramMemory fixed(std::size_t P, std::size_t K, std::vector<double> keys, std::vector<double> values) {
  const std::size_t S = values.size() / P;
  return {Tensor::leaf(P, K, std::move(keys)), Tensor::leaf(P, S, std::move(values))};
}

std::vector<Tensor> run_model(ntm::NtmModel& m, const std::vector<Tensor>& xs) {
  ad::NoGradGuard g;
  auto s = m.initial_state(xs[0].rows());
  std::vector<Tensor> ys;
  for (const auto& x : xs) ys.push_back(m.step(x, s));
  return ys;
}

std::vector<Tensor> random_inputs(std::size_t T, std::size_t B, std::size_t in, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution bit(0.5);
  std::vector<Tensor> xs;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> v(B * in);
    for (auto& e : v) e = bit(rng) ? 1.0 : 0.0;
    xs.push_back(Tensor::constant(B, in, v));
  }
  return xs;
}

ntm::NtmConfig small_core() {
  ntm::NtmConfig c;
  c.input = 5;
  c.output = 4;
  c.hidden = 12;
  c.slots = 6;
  c.width = 4;
  c.read_heads = 2;
  c.write_heads = 1;
  return c;
}

}  // namespace

TEST_CASE("program lookup examples") {
  SUBCASE("single program is returned for any query") {
    auto pm = fixed(1, 2, {0.3, -0.7}, {1, 2, 3});
    auto r = program_lookup(pm, Tensor::row({5, 1}), Tensor::scalar(3.0));
    CHECK(r.attn.item() == 1.0);
    CHECK(r.program.value() == std::vector<double>{1, 2, 3});
  }
  SUBCASE("zero strength averages the values") {
    auto pm = fixed(3, 2, {1, 0, 0, 1, 1, 1}, {3, 0, 0, 6, 0, 0});
    auto r = program_lookup(pm, Tensor::row({0.2, 0.9}), Tensor::scalar(0.0));
    for (double a : r.attn.value()) CHECK(a == doctest::Approx(1.0 / 3));
    CHECK(r.program.at(0, 0) == doctest::Approx(1.0));
    CHECK(r.program.at(0, 1) == doctest::Approx(2.0));
  }
  SUBCASE("saturated lookup on orthonormal keys") {
    auto pm = fixed(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {1, 2, -1, 5, 0.5, 0.5});
    auto r = program_lookup(pm, Tensor::row({0, 2.5, 0}), Tensor::scalar(100.0));
    CHECK(r.attn.at(0, 1) > 0.999);
    CHECK(std::abs(r.program.at(0, 0) - (-1)) < 1e-3);
    CHECK(std::abs(r.program.at(0, 1) - 5) < 1e-3);
  }
  SUBCASE("zero-norm query is flagged and uniform") {
    auto pm = fixed(2, 2, {1, 0, 0, 1}, {1, 3});
    auto r = program_lookup(pm, Tensor::row({0, 0}), Tensor::scalar(4.0));
    CHECK(r.degenerate[0]);
    CHECK(r.attn.at(0, 0) == doctest::Approx(0.5));
  }
  SUBCASE("errors") {
    auto pm = fixed(2, 2, {1, 0, 0, 1}, {1, 3});
    CHECK_THROWS_AS(program_lookup(pm, Tensor::row({1, 0, 0}), Tensor::scalar(1)), ShapeError);
    CHECK_THROWS_AS(program_lookup(pm, Tensor::row({1, 0}), Tensor::scalar(-1)), ArgumentError);
    CHECK_THROWS_AS(program_lookup(pm, Tensor::row({1, 0}), Tensor::scalar(1), {true, 0.5, nullptr}), ArgumentError);
  }
}

TEST_CASE("key regularizers") {
  auto same = fixed(4, 2, {1, 1, 1, 1, 1, 1, 1, 1}, {0, 0, 0, 0});
  CHECK(key_overlap_loss(same).item() == doctest::Approx(6.0).epsilon(1e-14));
  auto ortho = fixed(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0});
  CHECK(std::abs(key_overlap_loss(ortho).item()) < 1e-15);
  CHECK(std::abs(key_orthogonality_loss(ortho).item()) < 1e-15);
  auto pair = fixed(2, 2, {1, 0, std::sqrt(0.5), std::sqrt(0.5)}, {0, 0});
  CHECK(key_overlap_loss(pair).item() == doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-14));
  CHECK_THROWS_AS(key_orthogonality_loss(fixed(2, 3, {1, 0, 0, 0, 1, 0}, {0, 0})), ArgumentError);
}

TEST_CASE("annealed loss") {
  CHECK(annealed_total_loss(2.0, 5.0, 0) == doctest::Approx(2.5).epsilon(1e-15));
  for (std::size_t s : {0u, 10u, 5000u, 123456u}) CHECK(annealed_total_loss(1.25, 0.0, s) == 1.25);
  CHECK(annealing_factor(1000) == doctest::Approx(0.09).epsilon(1e-15));
  CHECK(annealing_factor(999) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(annealing_factor(50, 25) == doctest::Approx(0.081).epsilon(1e-15));
  auto t = annealed_total_loss(Tensor::scalar(1.0), Tensor::scalar(3.0), 1000);
  CHECK(t.item() == doctest::Approx(1.27));
}

TEST_CASE("property: soft attention is a distribution and hard attention is one-hot") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    ProgramMemory pm{random_leaf(5, 3, rng), random_leaf(5, 7, rng)};
    auto q = random_leaf(4, 3, rng, -3, 3);
    auto beta = random_leaf(4, 1, rng, 0, 20);
    auto soft = program_lookup(pm, q, beta);
    auto hard = program_lookup(pm, q, beta, {true, 0.5, &rng});
    for (std::size_t b = 0; b < 4; ++b) {
      double s = 0, h = 0, ones = 0;
      for (std::size_t i = 0; i < 5; ++i) {
        s += soft.attn.at(b, i);
        h += hard.attn.at(b, i);
        ones += hard.attn.at(b, i) == 1.0;
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
      CHECK(h == 1.0);
      CHECK(ones == 1.0);
    }
  }
}

TEST_CASE("property: permuting programs permutes attention only") {
  std::mt19937_64 rng(9);
  const std::size_t P = 5, K = 4, S = 6;
  for (int trial = 0; trial < 100; ++trial) {
    ProgramMemory pm{random_leaf(P, K, rng), random_leaf(P, S, rng)};
    std::vector<std::size_t> perm{0, 1, 2, 3, 4};
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> pk, pv;
    for (std::size_t i : perm) {
      for (std::size_t k = 0; k < K; ++k) pk.push_back(pm.keys.at(i, k));
      for (std::size_t s = 0; s < S; ++s) pv.push_back(pm.values.at(i, s));
    }
    ProgramMemory permuted{Tensor::constant(P, K, pk), Tensor::constant(P, S, pv)};
    auto q = random_leaf(2, K, rng);
    auto beta = random_leaf(2, 1, rng, 0, 5);
    auto a = program_lookup(pm, q, beta), b = program_lookup(permuted, q, beta);
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t i = 0; i < P; ++i) CHECK(std::abs(b.attn.at(r, i) - a.attn.at(r, perm[i])) < 1e-14);
      for (std::size_t s = 0; s < S; ++s) CHECK(std::abs(b.program.at(r, s) - a.program.at(r, s)) < 1e-12);
    }
  }
}

TEST_CASE("lookup gradients reach keys and values") {
  std::mt19937_64 rng(13);
  ProgramMemory pm{random_leaf(4, 3, rng), random_leaf(4, 5, rng)};
  auto q = random_leaf(2, 3, rng);
  auto beta = random_leaf(2, 1, rng, 0.5, 3);
  auto f = [&] {
    auto r = program_lookup(pm, q, beta);
    return ad::sum(ad::mul(r.program, Tensor::constant(2, 5, std::vector<double>{1, -2, 3, 0.5, 1, 2, 1, -1, 0.3, 0.7})));
  };
  auto rep = ad::finite_diff_check(f, {pm.keys, pm.values, q, beta});
  CHECK(rep.max_rel_err < 1e-4);
  double kg = 0, vg = 0;
  for (double g : pm.keys.grad()) kg += std::abs(g);
  for (double g : pm.values.grad()) vg += std::abs(g);
  CHECK(kg > 0);
  CHECK(vg > 0);

  auto reg = ad::finite_diff_check([&] { return key_overlap_loss(pm); }, {pm.keys});
  CHECK(reg.max_rel_err < 1e-4);

  // Straight-through keeps a gradient path to the keys in hard mode.
  ad::Tape::active().clear();
  auto r = program_lookup(pm, q, beta, {true, 0.5, &rng});
  ad::backward(ad::sum(ad::mul(r.program, r.program)));
  kg = 0;
  for (double g : pm.keys.grad()) kg += std::abs(g);
  CHECK(kg > 0);
  ad::Tape::active().clear();
}

TEST_CASE("single-program NUTM reproduces the NTM") {
  auto core = small_core();
  ntm::NtmModel base(core, 77);
  NutmConfig ncfg;
  ncfg.core = core;
  ncfg.programs = 1;
  ncfg.key_dim = 3;
  NutmModel nutm(ncfg, 77);
  for (std::size_t n = 0; n < base.head_count(); ++n)
    nutm.program_memory(n).values.mutable_value() = base.static_interface(n).value();
  auto xs = random_inputs(12, 3, core.input, 5);
  auto a = run_model(base, xs), b = run_model(nutm, xs);
  double worst = 0;
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t i = 0; i < a[t].size(); ++i) worst = std::max(worst, std::abs(a[t].value()[i] - b[t].value()[i]));
  CHECK(worst < 1e-12);

  SUBCASE("duplicated programs behave like one") {
    ncfg.programs = 2;
    NutmModel twin(ncfg, 77);
    for (std::size_t n = 0; n < base.head_count(); ++n) {
      auto v = base.static_interface(n).value();
      auto& dst = twin.program_memory(n).values.mutable_value();
      std::copy(v.begin(), v.end(), dst.begin());
      std::copy(v.begin(), v.end(), dst.begin() + static_cast<std::ptrdiff_t>(v.size()));
    }
    // Controller weights come from the same stream; only the program tables
    // differ in size, so copy the remaining shared parameters by name.
    for (const auto& p : base.params().items())
      if (twin.params().contains(p.name)) {
        auto t = twin.params().get(p.name);
        if (t.size() == p.tensor.size()) t.mutable_value() = p.tensor.value();
      }
    auto c = run_model(twin, xs);
    double w2 = 0;
    for (std::size_t t = 0; t < a.size(); ++t)
      for (std::size_t i = 0; i < a[t].size(); ++i) w2 = std::max(w2, std::abs(a[t].value()[i] - c[t].value()[i]));
    CHECK(w2 < 1e-12);
  }
}

TEST_CASE("NUTM gradients and attention trace") {
  NutmConfig ncfg;
  ncfg.core = small_core();
  ncfg.core.hidden = 6;
  ncfg.programs = 3;
  ncfg.key_dim = 2;
  NutmModel m(ncfg, 3);
  auto xs = random_inputs(3, 2, ncfg.core.input, 1);
  std::vector<Tensor> params;
  for (const auto& p : m.params().items()) params.push_back(p.tensor);
  auto f = [&] {
    auto s = m.initial_state(2);
    Tensor loss = m.program_regularizer();
    for (const auto& x : xs)
      loss = ad::add(loss, ad::sigmoid_bce_with_logits(m.step(x, s), Tensor::constant(2, 4, 1.0), Tensor()));
    return loss;
  };
  auto rep = ad::finite_diff_check(f, params);
  CHECK(rep.max_rel_err < 1e-4);

  auto s = m.initial_state(1);
  std::vector<std::vector<Tensor>> trace;
  for (const auto& x : random_inputs(4, 1, ncfg.core.input, 2)) {
    m.step(x, s);
    trace.push_back(m.last_attention());
  }
  auto csv = program_attention_csv(trace);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 1 + 4 * 3 * 3);
  CHECK(csv.rfind("step,head,program,weight\n", 0) == 0);
}
