#include <doctest.h>

#include <cmath>
#include <random>

#include "memkit/autodiff/gradcheck.hpp"
#include "memkit/dnc/dnc.hpp"
#include "memkit/errors.hpp"

using namespace memkit;
using namespace memkit::dnc;
using ad::Tensor;

namespace {

Tensor one_hot(std::size_t n, std::size_t i) {
  std::vector<double> v(n, 0.0);
  v[i] = 1.0;
  return Tensor::row(v);
}

// Exact-valued emission for a single-batch memory with one read head.
DncEmission hard_emission(std::size_t W, double write_gate, double alloc_gate, std::vector<double> modes) {
  DncEmission e;
  e.read_keys = {Tensor::constant(1, W, 1.0)};
  e.read_strengths = {Tensor::scalar(1.0)};
  e.free_gates = {Tensor::scalar(0.0)};
  e.read_modes = {Tensor::row(std::move(modes))};
  e.write_key = Tensor::constant(1, W, 1.0);
  e.write_strength = Tensor::scalar(1.0);
  e.erase = Tensor::constant(1, W, 1.0);
  std::vector<double> v(W);
  for (std::size_t j = 0; j < W; ++j) v[j] = 0.1 * static_cast<double>(j + 1);
  e.write_vec = Tensor::row(v);
  e.alloc_gate = Tensor::scalar(alloc_gate);
  e.write_gate = Tensor::scalar(write_gate);
  return e;
}

}  // namespace

TEST_CASE("allocation weights") {
  auto zero = ad::allocation_weights(Tensor::constant(1, 4));
  CHECK(zero.value() == std::vector<double>{1, 0, 0, 0});
  auto full = ad::allocation_weights(Tensor::constant(1, 4, 1.0));
  for (double a : full.value()) CHECK(a == 0.0);
  auto a = ad::allocation_weights(Tensor::row({0.5, 0.1, 0.9}));
  CHECK(a.value()[0] == doctest::Approx(0.05).epsilon(1e-14));
  CHECK(a.value()[1] == doctest::Approx(0.9).epsilon(1e-14));
  CHECK(a.value()[2] == doctest::Approx(0.005).epsilon(1e-14));
}

TEST_CASE("usage update") {
  auto s = dnc_zero_state(1, 3, 2, 1);
  s.usage = Tensor::row({0.2, 0.5, 0.0});
  s.w_write = Tensor::row({0.5, 0.0, 0.25});
  s.w_read = {Tensor::row({0.0, 1.0, 0.0})};
  auto e = hard_emission(2, 1, 1, {0, 1, 0});
  e.free_gates = {Tensor::scalar(0.5)};
  auto r = allocation_step(s, e);
  CHECK(r.usage.value()[0] == doctest::Approx(0.6));
  CHECK(r.usage.value()[1] == doctest::Approx(0.25));
  CHECK(r.usage.value()[2] == doctest::Approx(0.25));
}

TEST_CASE("closed write gate leaves everything unchanged") {
  auto s = dnc_zero_state(1, 4, 3, 1);
  auto next = write_step(s, hard_emission(3, 0.0, 1.0, {0, 1, 0}));
  CHECK(next.M.value() == s.M.value());
  CHECK(next.precedence.value() == s.precedence.value());
  CHECK(next.links.value() == s.links.value());
}

TEST_CASE("two hard writes link in order") {
  auto s = dnc_zero_state(1, 4, 3, 1);
  auto e = hard_emission(3, 1.0, 1.0, {0, 0, 1});
  s = write_step(s, e);  // slot 0
  for (std::size_t j = 0; j < 3; ++j) CHECK(s.M.at(0, j) == e.write_vec.value()[j]);
  s = write_step(s, e);  // slot 1
  CHECK(s.links.at(1, 0) == doctest::Approx(1.0));
  CHECK(s.precedence.value() == std::vector<double>{0, 1, 0, 0});

  auto fwd = s;
  fwd.w_read = {one_hot(4, 0)};
  fwd = read_step(fwd, e);
  CHECK(fwd.w_read[0].value() == std::vector<double>{0, 1, 0, 0});

  auto bwd = s;
  bwd.w_read = {one_hot(4, 1)};
  bwd = read_step(bwd, hard_emission(3, 1.0, 1.0, {1, 0, 0}));
  CHECK(bwd.w_read[0].value() == std::vector<double>{1, 0, 0, 0});

  auto content = s;
  content.w_read = {one_hot(4, 1)};
  content = read_step(content, hard_emission(3, 1.0, 1.0, {0, 1, 0}));
  auto expect = ad::softmax_with_strength(ad::cosine_rows(Tensor::constant(1, 3, 1.0), s.M), Tensor::scalar(1.0));
  for (std::size_t i = 0; i < 4; ++i) CHECK(content.w_read[0].value()[i] == doctest::Approx(expect.value()[i]));
}

TEST_CASE("property: traversal recovers the write order") {
  for (std::size_t H = 1; H <= 6; ++H) {
    auto s = dnc_zero_state(1, 6, 2, 1);
    auto e = hard_emission(2, 1.0, 1.0, {0, 0, 1});
    for (std::size_t h = 0; h < H; ++h) s = write_step(s, e);
    s.w_read = {one_hot(6, 0)};
    for (std::size_t h = 1; h < H; ++h) {
      s = read_step(s, e);
      CHECK(s.w_read[0].value()[h] == doctest::Approx(1.0));
    }
    auto back = hard_emission(2, 1.0, 1.0, {1, 0, 0});
    for (std::size_t h = H - 1; h-- > 0;) {
      s = read_step(s, back);
      CHECK(s.w_read[0].value()[h] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("property: invariants survive random rollouts") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-4, 4);
  const std::size_t N = 6, W = 3, R = 2;
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto s = dnc_zero_state(1, N, W, R);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> raw(dnc_interface_width(W, R));
      for (auto& x : raw) x = d(rng);
      auto e = parse_dnc_emission(Tensor::row(raw), W, R);
      s = read_step(write_step(s, e), e);
      if (!check_invariants(s).empty()) ++failures;
    }
  }
  CHECK(failures == 0);
}

TEST_CASE("dnc model gradient over a short rollout") {
  DncConfig cfg;
  cfg.input = 3;
  cfg.output = 2;
  cfg.hidden = 6;
  cfg.slots = 4;
  cfg.width = 3;
  cfg.read_heads = 2;
  DncModel model(cfg, 3);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<Tensor> xs;
  for (int t = 0; t < 3; ++t) {
    std::vector<double> v(2 * 3);
    for (auto& x : v) x = d(rng);
    xs.push_back(Tensor::constant(2, 3, v));
  }
  auto f = [&] {
    auto s = model.initial_state(2);
    Tensor loss;
    for (auto& x : xs) {
      auto y = ad::sum(ad::square(model.step(x, s)));
      loss = loss.defined() ? ad::add(loss, y) : y;
    }
    return loss;
  };
  std::vector<Tensor> ps;
  for (auto& p : model.params().items()) ps.push_back(p.tensor);
  auto r = ad::finite_diff_check(f, ps);
  CHECK(r.max_rel_err < 1e-4);
}
