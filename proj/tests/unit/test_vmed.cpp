#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "memkit/autodiff/gradcheck.hpp"
#include "memkit/errors.hpp"
#include "memkit/optim/optimizer.hpp"
#include "memkit/vmed/latent.hpp"
#include "memkit/vmed/model.hpp"

using namespace memkit;
using namespace memkit::vmed;
using ad::Tensor;

namespace {

GaussianDiag random_gaussian(std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mu(-1.5, 1.5), sd(0.3, 1.8);
  GaussianDiag g;
  for (std::size_t k = 0; k < d; ++k) {
    g.mu.push_back(mu(rng));
    g.sigma.push_back(sd(rng));
  }
  return g;
}

MixtureLatent random_mixture(std::size_t K, std::size_t d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(0.1, 1.0);
  MixtureLatent m;
  double total = 0;
  for (std::size_t i = 0; i < K; ++i) {
    m.components.push_back(random_gaussian(d, rng));
    m.pi.push_back(w(rng));
    total += m.pi.back();
  }
  for (double& p : m.pi) p /= total;
  return m;
}

MixtureLatent single(const GaussianDiag& g) { return {{1.0}, {g}, false}; }

}  // namespace

TEST_CASE("mixture prior from reads") {
  auto one = build_mog_prior({{0.3, -0.1, 0.0, 1.0}}, {{0.2, 0.7, 0.1}});
  CHECK(one.pi == std::vector<double>{1.0});
  CHECK(one.components[0].mu == std::vector<double>{0.3, -0.1});
  CHECK(one.components[0].sigma[0] == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(one.components[0].sigma[1] == doctest::Approx(1.3133).epsilon(1e-4));

  auto two = build_mog_prior({{1, 2}, {3, 4}}, {{0.6, 0.4}, {0.4, 0.6}});
  CHECK(two.pi[0] == doctest::Approx(0.5));
  CHECK(two.pi[1] == doctest::Approx(0.5));

  auto dead = build_mog_prior({{1, 2}, {3, 4}, {5, 6}}, {{0, 0}, {0, 0}, {0, 0}});
  CHECK(dead.degenerate);
  CHECK(dead.pi[2] == doctest::Approx(1.0 / 3));

  CHECK_THROWS_AS(build_mog_prior({{1, 2, 3}}, {{1}}), ShapeError);
}

TEST_CASE("gaussian kl") {
  GaussianDiag a{{1}, {1}}, b{{0}, {1}};
  CHECK(gaussian_kl(a, a) == 0.0);
  CHECK(gaussian_kl(a, b) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(gaussian_kl(GaussianDiag{{0}, {0}}, b), ArgumentError);
  CHECK_THROWS_AS(gaussian_kl(GaussianDiag{{0, 1}, {1, 1}}, b), ShapeError);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto f = random_gaussian(3, rng), g = random_gaussian(3, rng);
    CHECK(gaussian_kl(f, g) >= 0.0);
  }
}

TEST_CASE("variational bound") {
  std::mt19937_64 rng(2);
  auto f = random_gaussian(2, rng), g = random_gaussian(2, rng);
  CHECK(d_var(f, single(g)) == gaussian_kl(f, g));
  auto mix = random_mixture(3, 2, rng);
  mix.components[1] = f;
  mix.pi = {0.0, 1.0, 0.0};
  CHECK(std::abs(d_var(f, mix)) < 1e-15);

  SUBCASE("bounds the Monte Carlo divergence") {
    for (int i = 0; i < 10; ++i) {
      auto ff = random_gaussian(2, rng);
      auto gg = random_mixture(3, 2, rng);
      auto mc = monte_carlo_kl(ff, gg, 200000, rng);
      CHECK(d_var(ff, gg) >= mc.mean - 3 * mc.std_error);
    }
  }
  SUBCASE("invariant to mode order") {
    auto gg = random_mixture(4, 3, rng);
    auto ff = random_gaussian(3, rng);
    auto perm = gg;
    std::swap(perm.pi[0], perm.pi[3]);
    std::swap(perm.components[0], perm.components[3]);
    std::swap(perm.pi[1], perm.pi[2]);
    std::swap(perm.components[1], perm.components[2]);
    CHECK(d_var(ff, perm) == doctest::Approx(d_var(ff, gg)).epsilon(1e-14));
  }
}

TEST_CASE("reparameterized samples") {
  std::mt19937_64 rng(3);
  GaussianDiag tight{{0.4, -2}, {1e-300, 1e-300}};
  auto z = sample_reparameterized(tight, rng);
  CHECK(z[0] == doctest::Approx(0.4));
  CHECK(z[1] == doctest::Approx(-2));

  GaussianDiag g{{0.7}, {1.3}};
  const int n = 100000;
  double s = 0;
  for (int i = 0; i < n; ++i) s += sample_reparameterized(g, rng)[0];
  CHECK(std::abs(s / n - 0.7) < 4 * 1.3 / std::sqrt(n));

  // Common random numbers: E[sum z^2] with the noise reseeded on every call.
  auto mu = Tensor::leaf(1, 3, {0.3, -0.4, 1.1});
  auto sd = Tensor::leaf(1, 3, {0.5, 0.9, 0.2});
  auto objective = [&] {
    std::mt19937_64 crn(99);
    Tensor acc;
    for (int i = 0; i < 64; ++i) {
      auto zz = sample_reparameterized(GaussianBatch{mu, sd}, crn);
      auto term = ad::sum(ad::mul(ad::square(zz), Tensor::row({1.0, 0.5, 2.0})));
      acc = acc.defined() ? ad::add(acc, term) : term;
    }
    return ad::scale(acc, 1.0 / 64);
  };
  CHECK(ad::finite_diff_check(objective, {mu, sd}).max_rel_err < 1e-3);
}

TEST_CASE("timestep loss") {
  std::mt19937_64 rng(5);
  auto a = random_gaussian(2, rng), b = random_gaussian(2, rng);
  CHECK(timestep_elbo_loss({a, b}, {single(a), single(b)}, {-1.5, -0.25}) == doctest::Approx(1.75));
  CHECK(timestep_elbo_loss({a}, {single(b)}, {-0.3}) == doctest::Approx(gaussian_kl(a, b) + 0.3));
  auto near = b;
  near.mu[0] = (a.mu[0] + b.mu[0]) / 2;
  CHECK(timestep_elbo_loss({a, a}, {single(near), single(b)}, {-1, -1}) <
        timestep_elbo_loss({a, a}, {single(b), single(b)}, {-1, -1}));
  CHECK_THROWS_AS(timestep_elbo_loss({a}, {}, {1.0}), ShapeError);
}

TEST_CASE("tensor forms agree with scalar forms") {
  std::mt19937_64 rng(6);
  auto f = random_gaussian(3, rng);
  auto g = random_mixture(3, 3, rng);
  GaussianBatch fb{Tensor::row(f.mu), Tensor::row(f.sigma)};
  MixtureBatch gb{Tensor::row(g.pi), {}};
  for (const auto& c : g.components) gb.components.push_back({Tensor::row(c.mu), Tensor::row(c.sigma)});
  CHECK(gaussian_kl(fb, gb.components[0]).item() == doctest::Approx(gaussian_kl(f, g.components[0])).epsilon(1e-14));
  CHECK(d_var(fb, gb).item() == doctest::Approx(d_var(f, g)).epsilon(1e-13));

  std::vector<Tensor> reads{Tensor::row({0.3, -0.1, 0.0, 1.0}), Tensor::row({1, 1, -1, 2})};
  std::vector<Tensor> ws{Tensor::row({0.2, 0.8}), Tensor::row({0.6, 0.4})};
  auto pb = build_mog_prior(reads, ws);
  auto ps = build_mog_prior({{0.3, -0.1, 0.0, 1.0}, {1, 1, -1, 2}}, {{0.2, 0.8}, {0.6, 0.4}});
  CHECK(pb.pi.at(0, 0) == doctest::Approx(ps.pi[0]));
  CHECK(pb.components[1].sigma.at(0, 1) == doctest::Approx(ps.components[1].sigma[1]));
}

TEST_CASE("prior and posterior gradients") {
  std::mt19937_64 rng(7);
  auto r1 = Tensor::leaf(2, 4, {0.3, -0.1, 0.0, 1.0, 0.5, 0.2, -0.3, 0.1});
  auto r2 = Tensor::leaf(2, 4, {1.0, 0.4, -1.0, 0.5, -0.2, 0.6, 0.2, 0.3});
  auto w1 = Tensor::leaf(2, 3, {0.2, 0.7, 0.1, 0.5, 0.3, 0.2});
  auto w2 = Tensor::leaf(2, 3, {0.1, 0.1, 0.8, 0.3, 0.4, 0.3});
  auto mu = Tensor::leaf(2, 2, {0.1, 0.2, -0.5, 0.4});
  auto sd = Tensor::leaf(2, 2, {0.8, 1.1, 0.6, 0.9});
  auto f = [&] {
    std::mt19937_64 crn(3);
    auto prior = build_mog_prior({r1, r2}, {w1, w2});
    GaussianBatch post{mu, sd};
    auto z = sample_reparameterized(post, crn);
    return ad::add(ad::sum(d_var(post, prior)), ad::sum(ad::square(z)));
  };
  CHECK(ad::finite_diff_check(f, {r1, r2, w1, w2, mu, sd}).max_rel_err < 1e-3);
}

TEST_CASE("mixture product oracle") {
  GaussianDiag n0{{0}, {1}};
  auto rep = mog_product_oracle(single(n0), single(n0), {-6, 6, 401});
  REQUIRE(rep.product.components.size() == 1);
  CHECK(rep.product.weights[0] == doctest::Approx(1.0 / (2 * std::sqrt(std::numbers::pi))).epsilon(1e-14));
  CHECK(rep.product.components[0].sigma[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(rep.max_abs_err < 1e-14);

  GaussianDiag n2{{0, 0}, {1, 1}};
  auto rep2 = mog_product_oracle(single(n2), single(n2), {-4, 4, 41});
  CHECK(rep2.product.weights[0] == doctest::Approx(1.0 / (4 * std::numbers::pi)).epsilon(1e-14));

  GaussianDiag narrow{{0.8}, {1e-3}}, wide{{-0.5}, {1.2}};
  auto pn = mog_product(single(narrow), single(wide));
  CHECK(std::abs(pn.components[0].mu[0] - 0.8) < 1e-5);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_mixture(2, 1, rng), b = random_mixture(2, 1, rng);
    CHECK(mog_product_oracle(a, b, {-5, 5, 1001}).max_abs_err < 1e-8);
  }
  auto c3 = random_mixture(1, 3, rng);
  CHECK_THROWS_AS(mog_product_oracle(c3, c3), ArgumentError);
}

TEST_CASE("kl annealing ramp") {
  CHECK(kl_annealing(0, 1000) == 0.0);
  CHECK(kl_annealing(100, 1000) == doctest::Approx(0.5));
  CHECK(kl_annealing(200, 1000) == 1.0);
  CHECK(kl_annealing(900, 1000) == 1.0);
}

TEST_CASE("memory model loss gradient") {
  VmedConfig cfg;
  cfg.vocab = 5;
  cfg.hidden = 6;
  cfg.slots = 4;
  cfg.latent = 2;
  cfg.modes = 2;
  VmedModel m(cfg, 11);
  std::vector<std::vector<int>> ctx{{1, 2, 3}, {4, 0, 2}}, tgt{{3, 1}, {2, 2}};
  std::vector<Tensor> params;
  for (const auto& p : m.params().items()) params.push_back(p.tensor);
  auto f = [&] {
    std::mt19937_64 crn(4);
    return m.loss(ctx, tgt, 0.7, crn).total;
  };
  CHECK(ad::finite_diff_check(f, params).max_rel_err < 1e-3);
}

TEST_CASE("generation") {
  VmedConfig cfg;
  cfg.vocab = 6;
  cfg.hidden = 16;
  cfg.slots = 8;
  cfg.latent = 3;
  cfg.modes = 1;
  VmedModel m(cfg, 21);
  const std::vector<int> ctx{1, 4, 2, 5};
  CHECK(m.generate(ctx, 6, 1, 0.0) == m.generate(ctx, 6, 2, 0.0));
  CHECK(m.generate(ctx, 6, 9) == m.generate(ctx, 6, 9));

  // Toy copy-with-noise: every target token is the context token shifted by
  // a random 0/1 offset, so the response is ambiguous given the context.
  cfg.modes = 2;
  cfg.hidden = 32;
  VmedModel toy(cfg, 1);
  optim::Optimizer opt(optim::default_spec(optim::OptimizerKind::Adam), toy.params());
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> tok(0, 5);
  const std::size_t steps = 5000;
  for (std::size_t it = 0; it < steps; ++it) {
    std::vector<std::vector<int>> c(8), y(8);
    for (std::size_t b = 0; b < 8; ++b) {
      for (int k = 0; k < 4; ++k) c[b].push_back(tok(rng));
      y[b] = c[b];
      for (auto& v : y[b]) v = (v + tok(rng) % 2) % 6;
    }
    ad::Tape::active().clear();
    toy.params().zero_grad();
    auto l = toy.loss(c, y, kl_annealing(it, steps), rng);
    ad::backward(l.total);
    opt.step(toy.params());
  }
  ad::Tape::active().clear();
  std::set<std::vector<int>> outs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) outs.insert(toy.generate(ctx, 4, seed));
  CHECK(outs.size() >= 2);
}
