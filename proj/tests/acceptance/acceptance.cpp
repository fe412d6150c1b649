// Acceptance runner. One line per criterion: "[PASS] N name: detail" or
// "[FAIL] ...". Exit status is the number of failed criteria (capped at 9).

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "memkit/autodiff/gradcheck.hpp"
#include "memkit/autodiff/ops.hpp"
#include "memkit/capacity/capacity.hpp"
#include "memkit/classic/hopfield.hpp"
#include "memkit/classic/neural_stack.hpp"
#include "memkit/controllers/cells.hpp"
#include "memkit/dnc/dnc.hpp"
#include "memkit/errors.hpp"
#include "memkit/harness/config.hpp"
#include "memkit/harness/learner.hpp"
#include "memkit/harness/runner.hpp"
#include "memkit/harness/task_source.hpp"
#include "memkit/nsm/nsm.hpp"
#include "memkit/ntm/ntm.hpp"
#include "memkit/scheduling/schedule.hpp"
#include "memkit/tasks/tasks.hpp"
#include "memkit/vmed/latent.hpp"
#include "memkit/vmed/model.hpp"
#include "task_oracles.hpp"

namespace fs = std::filesystem;
using namespace memkit;
using ad::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path configs;
  fs::path work;
  std::uint64_t eval_seed = 20240601;
  std::size_t eval_samples = 1000;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

Tensor random_leaf(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(r * c);
  for (auto& x : v) x = d(rng);
  return Tensor::leaf(r, c, v);
}

Tensor random_const(std::size_t r, std::size_t c, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(r * c);
  for (auto& x : v) x = d(rng);
  return Tensor::constant(r, c, v);
}

// Weighted sum so every output coordinate gets its own upstream gradient.
Tensor probe(const Tensor& y) {
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
  return ad::sum(ad::mul(y, Tensor::constant(y.rows(), y.cols(), w)));
}

std::vector<Tensor> all_params(ad::ParameterSet& ps) {
  std::vector<Tensor> out;
  for (auto& p : ps.items()) out.push_back(p.tensor);
  return out;
}

std::size_t param_count(ad::ParameterSet& ps) {
  std::size_t n = 0;
  for (auto& p : ps.items()) n += p.tensor.size();
  return n;
}

// ---------------------------------------------------------------- 1

Outcome gradient_checks() {
  using namespace ad;
  std::vector<std::pair<std::string, double>> worst;  // group -> max rel err
  std::vector<std::pair<std::string, double>> limit;
  auto record = [&](const std::string& group, double err, double lim) {
    for (auto& [g, e] : worst)
      if (g == group) {
        e = std::max(e, err);
        return;
      }
    worst.push_back({group, err});
    limit.push_back({group, lim});
  };

  {
    std::mt19937_64 rng(7);
    auto a = random_leaf(3, 4, rng);
    auto b = random_leaf(3, 4, rng, 0.5, 1.5);
    auto row = random_leaf(1, 4, rng);
    auto col = random_leaf(3, 1, rng, 0.2, 2.0);
    auto pos = random_leaf(3, 4, rng, 0.1, 2.0);
    auto w = random_leaf(5, 4, rng);
    auto bias = random_leaf(1, 5, rng);
    const std::vector<std::function<Tensor()>> ops = {
        [&] { return probe(add(a, row)); },
        [&] { return probe(sub(a, b)); },
        [&] { return probe(mul(a, col)); },
        [&] { return probe(div(a, b)); },
        [&] { return probe(sigmoid(a)); },
        [&] { return probe(tanh(a)); },
        [&] { return probe(softplus(a)); },
        [&] { return probe(exp(a)); },
        [&] { return probe(log(pos)); },
        [&] { return probe(sqrt(pos)); },
        [&] { return probe(square(a)); },
        [&] { return probe(one_minus(a)); },
        [&] { return probe(matmul(a, transpose(w))); },
        [&] { return probe(linear(a, w, bias)); },
        [&] { return probe(softmax_rows(a)); },
        [&] { return probe(log_softmax_rows(a)); },
        [&] { return probe(softmax_with_strength(a, col)); },
        [&] { return probe(concat_cols({a, b, col})); },
        [&] { return probe(concat_rows({a, row})); },
        [&] { return probe(slice_rows(slice_cols(a, 1, 2), 1, 2)); },
        [&] { return probe(reshape(a, 2, 6)); },
        [&] { return add(probe(sum_rows(a)), probe(sum_cols(b))); },
        [&] { return probe(row_max(a)); },
        [&] { return sigmoid_bce_with_logits(a, Tensor::constant(3, 4, 1.0), Tensor()); },
        [&] { return softmax_cross_entropy(a, {0, 3, 1}); },
    };
    for (auto& f : ops) record("ops", finite_diff_check(f, {a, b, row, col, pos, w, bias}).max_rel_err, 1e-4);
  }
  {
    std::mt19937_64 rng(11);
    const std::size_t B = 2, N = 5, W = 3;
    auto keys = random_leaf(B, W, rng);
    auto mem = random_leaf(B * N, W, rng);
    auto wts = random_leaf(B, N, rng, 0.05, 1.0);
    auto vec = random_leaf(B, W, rng);
    auto shift = random_leaf(B, 3, rng, 0.1, 1.0);
    auto gamma = random_leaf(B, 1, rng, 1.0, 3.0);
    auto usage = random_leaf(B, N, rng, 0.05, 0.95);
    auto links = random_leaf(B * N, N, rng, 0.0, 0.2);
    auto prec = random_leaf(B, N, rng, 0.0, 0.2);
    auto mats = random_leaf(B, W * N, rng);
    auto mem2 = random_leaf(B * 2, W, rng);
    const std::vector<std::function<Tensor()>> ops = {
        [&] { return probe(cosine_rows(keys, mem)); },
        [&] { return probe(batched_outer(wts, vec)); },
        [&] { return probe(batched_read(wts, mem)); },
        [&] { return probe(batched_matvec(links, wts, false)); },
        [&] { return probe(batched_matvec(links, wts, true)); },
        [&] { return probe(batched_vecmat(vec, mats)); },
        [&] { return probe(circular_shift(wts, shift)); },
        [&] { return probe(sharpen(wts, gamma)); },
        [&] { return probe(allocation_weights(usage)); },
        [&] { return probe(link_update(links, wts, prec)); },
        [&] { return probe(batched_concat_slots(mem, N, mem2, 2)); },
    };
    for (auto& f : ops)
      record("memory ops",
             finite_diff_check(f, {keys, mem, wts, vec, shift, gamma, usage, links, prec, mats, mem2}).max_rel_err,
             1e-4);
  }
  {
    std::mt19937_64 rng(3);
    ParameterSet ps;
    ctrl::LstmCell cell(ps, "lstm", 3, 5, rng);
    std::vector<Tensor> xs;
    for (int t = 0; t < 10; ++t) xs.push_back(random_leaf(1, 3, rng));
    auto f = [&] {
      auto s = ctrl::lstm_zero_state(cell, 1);
      for (auto& x : xs) s = ctrl::lstm_step(cell, x, s);
      return sum(square(s.h));
    };
    auto inputs = xs;
    inputs.push_back(cell.W);
    inputs.push_back(cell.U);
    record("lstm", finite_diff_check(f, inputs).max_rel_err, 1e-4);
  }
  auto rollout = [](auto& model, const std::vector<Tensor>& xs) {
    auto s = model.initial_state(xs[0].rows());
    Tensor loss;
    for (auto& x : xs) {
      auto y = sum(square(model.step(x, s)));
      loss = loss.defined() ? add(loss, y) : y;
    }
    return loss;
  };
  {
    ntm::NtmConfig cfg;
    cfg.input = 4;
    cfg.output = 3;
    cfg.hidden = 8;
    cfg.slots = 5;
    cfg.width = 4;
    ntm::NtmModel model(cfg, 7);
    std::mt19937_64 rng(1);
    std::vector<Tensor> xs;
    for (int t = 0; t < 3; ++t) xs.push_back(random_const(2, 4, rng));
    record("ntm step", finite_diff_check([&] { return rollout(model, xs); }, all_params(model.params())).max_rel_err,
           1e-4);
  }
  {
    dnc::DncConfig cfg;
    cfg.input = 3;
    cfg.output = 2;
    cfg.hidden = 6;
    cfg.slots = 4;
    cfg.width = 3;
    cfg.read_heads = 2;
    dnc::DncModel model(cfg, 3);
    std::mt19937_64 rng(4);
    std::vector<Tensor> xs;
    for (int t = 0; t < 3; ++t) xs.push_back(random_const(2, 3, rng));
    record("dnc step", finite_diff_check([&] { return rollout(model, xs); }, all_params(model.params())).max_rel_err,
           1e-4);
  }
  {
    nsm::NutmConfig ncfg;
    ncfg.core.input = 5;
    ncfg.core.output = 4;
    ncfg.core.hidden = 6;
    ncfg.core.slots = 6;
    ncfg.core.width = 4;
    ncfg.core.read_heads = 2;
    ncfg.programs = 3;
    ncfg.key_dim = 2;
    nsm::NutmModel m(ncfg, 3);
    std::mt19937_64 rng(1);
    std::vector<Tensor> xs;
    for (int t = 0; t < 3; ++t) xs.push_back(random_const(2, 5, rng));
    auto f = [&] {
      auto s = m.initial_state(2);
      Tensor loss = m.program_regularizer();
      for (const auto& x : xs)
        loss = add(loss, sigmoid_bce_with_logits(m.step(x, s), Tensor::constant(2, 4, 1.0), Tensor()));
      return loss;
    };
    record("nutm step", finite_diff_check(f, all_params(m.params())).max_rel_err, 1e-4);
  }
  {
    // Sampled objectives reuse one seed per evaluation (common random numbers).
    auto r1 = Tensor::leaf(2, 4, {0.3, -0.1, 0.0, 1.0, 0.5, 0.2, -0.3, 0.1});
    auto r2 = Tensor::leaf(2, 4, {1.0, 0.4, -1.0, 0.5, -0.2, 0.6, 0.2, 0.3});
    auto w1 = Tensor::leaf(2, 3, {0.2, 0.7, 0.1, 0.5, 0.3, 0.2});
    auto w2 = Tensor::leaf(2, 3, {0.1, 0.1, 0.8, 0.3, 0.4, 0.3});
    auto mu = Tensor::leaf(2, 2, {0.1, 0.2, -0.5, 0.4});
    auto sd = Tensor::leaf(2, 2, {0.8, 1.1, 0.6, 0.9});
    auto f = [&] {
      std::mt19937_64 crn(3);
      auto prior = vmed::build_mog_prior({r1, r2}, {w1, w2});
      vmed::GaussianBatch post{mu, sd};
      auto z = vmed::sample_reparameterized(post, crn);
      return add(sum(vmed::d_var(post, prior)), sum(square(z)));
    };
    record("vmed bound", finite_diff_check(f, {r1, r2, w1, w2, mu, sd}).max_rel_err, 1e-3);

    vmed::VmedConfig cfg;
    cfg.vocab = 5;
    cfg.hidden = 6;
    cfg.slots = 4;
    cfg.latent = 2;
    cfg.modes = 2;
    vmed::VmedModel m(cfg, 11);
    std::vector<std::vector<int>> ctx{{1, 2, 3}, {4, 0, 2}}, tgt{{3, 1}, {2, 2}};
    auto g = [&] {
      std::mt19937_64 crn(4);
      return m.loss(ctx, tgt, 0.7, crn).total;
    };
    record("vmed loss", finite_diff_check(g, all_params(m.params())).max_rel_err, 1e-3);
  }

  Outcome o{true, ""};
  for (std::size_t i = 0; i < worst.size(); ++i) {
    if (!(worst[i].second < limit[i].second)) o.pass = false;
    o.detail += (i ? ", " : "") + worst[i].first + " " + fmt(worst[i].second, 2);
  }
  o.detail = "max rel err: " + o.detail;
  return o;
}

// ---------------------------------------------------------------- 2

// Average contribution summed step by step: step t keeps lambda^(k - t) of
// its contribution, k being the first write at or after t (T is implicit).
double direct_capacity(const std::vector<int>& writes, int T, double lambda, double C) {
  double total = 0;
  for (int t = 1; t <= T; ++t) {
    int k = T;
    for (int w : writes)
      if (w >= t) {
        k = w;
        break;
      }
    total += C * std::pow(lambda, k - t);
  }
  return total / T;
}

Outcome capacity_bound() {
  const double lambdas[] = {0.5, 0.8, 0.9, 0.99};
  std::size_t schedules = 0, violations = 0, uniform_cases = 0, uniform_misses = 0, unit_misses = 0;
  double worst_gap = 0;
  for (int T = 2; T <= 14; ++T)
    for (int D = 1; D <= std::min(4, T - 1); ++D) {
      for (double lambda : lambdas) {
        capacity::CapacityParams p;
        p.lambda = lambda;
        p.T = T;
        p.D = D;
        const double bound = capacity::uniform_bound(p);
        double best = -1;
        // Every subset of {1..T-1} with at most D writes.
        for (unsigned mask = 0; mask < (1u << (T - 1)); ++mask) {
          if (std::popcount(mask) > D) continue;
          std::vector<int> writes;
          for (int k = 1; k < T; ++k)
            if (mask & (1u << (k - 1))) writes.push_back(k);
          const double lib = capacity::capacity_of_schedule(writes, p).score;
          const double ref = direct_capacity(writes, T, lambda, p.C);
          worst_gap = std::max(worst_gap, std::abs(lib - ref));
          if (ref > bound + 1e-12) ++violations;
          best = std::max(best, ref);
          ++schedules;
        }
        const auto bf = capacity::brute_force_optimal_schedule(p);
        if (std::abs(bf.best - best) > 1e-12) ++violations;
        if (T % (D + 1) == 0) {
          ++uniform_cases;
          const auto uni = sched::make_schedule(sched::WritePolicy::Uniform, T, D);
          const double u = direct_capacity(uni.steps, T, lambda, p.C);
          if (std::abs(u - best) > 1e-9 || std::abs(u - bound) > 1e-9) ++uniform_misses;
        }
      }
      capacity::CapacityParams p1;
      p1.lambda = 1.0;
      p1.T = T;
      p1.D = D;
      for (unsigned mask = 0; mask < (1u << (T - 1)); ++mask) {
        if (std::popcount(mask) > D) continue;
        std::vector<int> writes;
        for (int k = 1; k < T; ++k)
          if (mask & (1u << (k - 1))) writes.push_back(k);
        if (std::abs(capacity::capacity_of_schedule(writes, p1).score - p1.C) > 1e-12) ++unit_misses;
      }
    }
  Outcome o;
  o.pass = violations == 0 && uniform_misses == 0 && unit_misses == 0 && worst_gap < 1e-12;
  o.detail = std::to_string(schedules) + " schedules, " + std::to_string(violations) + " above bound, uniform optimal in " +
             std::to_string(uniform_cases - uniform_misses) + "/" + std::to_string(uniform_cases) +
             " divisible cases, lambda=1 misses " + std::to_string(unit_misses) + ", library vs direct " +
             fmt(worst_gap, 2);
  return o;
}

// ---------------------------------------------------------------- 3

double closed_form_kl(const vmed::GaussianDiag& f, const vmed::GaussianDiag& g) {
  double kl = 0;
  for (std::size_t k = 0; k < f.dim(); ++k) {
    const double s1 = f.sigma[k], s2 = g.sigma[k], dm = f.mu[k] - g.mu[k];
    kl += std::log(s2 / s1) + (s1 * s1 + dm * dm) / (2 * s2 * s2) - 0.5;
  }
  return kl;
}

Outcome variational_bound() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mu(-1.5, 1.5), sd(0.3, 1.8), w(0.1, 1.0);
  auto gaussian = [&](std::size_t d) {
    vmed::GaussianDiag g;
    for (std::size_t k = 0; k < d; ++k) {
      g.mu.push_back(mu(rng));
      g.sigma.push_back(sd(rng));
    }
    return g;
  };
  std::size_t below = 0, k1 = 0;
  double k1_err = 0, min_margin = 1e300;
  for (int i = 0; i < 200; ++i) {
    const std::size_t d = 1 + rng() % 3, K = 1 + rng() % 4;
    const auto f = gaussian(d);
    vmed::MixtureLatent g;
    double total = 0;
    for (std::size_t c = 0; c < K; ++c) {
      g.components.push_back(gaussian(d));
      g.pi.push_back(w(rng));
      total += g.pi.back();
    }
    for (double& p : g.pi) p /= total;
    const double dv = vmed::d_var(f, g);
    const auto mc = vmed::monte_carlo_kl(f, g, 200000, rng);
    const double margin = (dv - (mc.mean - 3 * mc.std_error)) / std::max(mc.std_error, 1e-300);
    min_margin = std::min(min_margin, margin);
    if (dv < mc.mean - 3 * mc.std_error) ++below;
    if (K == 1) {
      ++k1;
      k1_err = std::max(k1_err, std::abs(dv - closed_form_kl(f, g.components[0])));
    }
  }
  Outcome o;
  o.pass = below == 0 && k1_err < 1e-10;
  o.detail = "200 instances, " + std::to_string(below) + " below MC-3se (tightest margin " + fmt(min_margin, 3) +
             " se), K=1 instances " + std::to_string(k1) + " max |D_var-KL| " + fmt(k1_err, 2);
  return o;
}

// ---------------------------------------------------------------- 4

Outcome nutm_degeneracy() {
  ntm::NtmConfig core;
  core.input = 5;
  core.output = 4;
  core.hidden = 12;
  core.slots = 6;
  core.width = 4;
  core.read_heads = 2;
  core.write_heads = 1;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ntm::NtmModel base(core, seed);
    nsm::NutmConfig ncfg;
    ncfg.core = core;
    ncfg.programs = 1;
    ncfg.key_dim = 3;
    nsm::NutmModel nutm(ncfg, seed);
    // Same controller weights; the single program holds the NTM's interface.
    for (const auto& p : base.params().items())
      if (nutm.params().contains(p.name)) {
        auto t = nutm.params().get(p.name);
        if (t.size() == p.tensor.size()) t.mutable_value() = p.tensor.value();
      }
    for (std::size_t n = 0; n < base.head_count(); ++n)
      nutm.program_memory(n).values.mutable_value() = base.static_interface(n).value();
    std::mt19937_64 rng(seed + 100);
    std::bernoulli_distribution bit(0.5);
    ad::NoGradGuard g;
    auto sa = base.initial_state(3);
    auto sb = nutm.initial_state(3);
    for (int t = 0; t < 12; ++t) {
      std::vector<double> v(3 * core.input);
      for (auto& e : v) e = bit(rng) ? 1.0 : 0.0;
      const auto x = Tensor::constant(3, core.input, v);
      const auto ya = base.step(x, sa), yb = nutm.step(x, sb);
      for (std::size_t i = 0; i < ya.size(); ++i) worst = std::max(worst, std::abs(ya.value()[i] - yb.value()[i]));
    }
  }
  return {worst < 1e-12, "10 models x 12 steps, max |NUTM - NTM| " + fmt(worst, 2)};
}

// ---------------------------------------------------------------- training helpers

harness::RunConfig desk_config(const Context& ctx, const std::string& name, std::uint64_t seed,
                               const std::string& tag) {
  auto cfg = harness::load_config(ctx.configs / (name + ".toml"), true);
  cfg.seed = seed;
  cfg.out_dir = (ctx.work / tag).string();
  return cfg;
}

struct TrainedScore {
  double value = 0;
  bool aborted = false;
  std::size_t params = 0;
};

TrainedScore train_and_score(const harness::RunConfig& cfg, const std::string& metric, const Context& ctx) {
  fs::remove_all(cfg.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const auto res = harness::run_training(cfg);
  TrainedScore s;
  s.aborted = res.aborted;
  if (res.aborted) {
    std::cerr << "  " << cfg.name << " seed " << cfg.seed << " aborted: " << res.abort_reason << "\n";
    s.value = std::nan("");
    return s;
  }
  const auto rep = harness::run_evaluation(cfg, res.checkpoint, {metric}, ctx.eval_samples, ctx.eval_seed);
  s.value = rep.metrics.at(metric).mean;
  harness::TaskSource task(cfg.task);
  auto learner = harness::make_learner(cfg.model, task, cfg.seed);
  s.params = param_count(learner->params());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "  " << cfg.name << " seed " << cfg.seed << ": " << metric << " " << fmt(s.value) << " ("
            << s.params << " params, " << fmt(secs, 3) << " s)\n";
  return s;
}

struct Comparison {
  double mean_a = 0, mean_b = 0;
  std::size_t params_a = 0, params_b = 0;
  bool aborted = false;
};

Comparison compare(const Context& ctx, const std::string& a, const std::string& b, const std::string& metric) {
  Comparison c;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto sa = train_and_score(desk_config(ctx, a, seed, a + "_s" + std::to_string(seed)), metric, ctx);
    const auto sb = train_and_score(desk_config(ctx, b, seed, b + "_s" + std::to_string(seed)), metric, ctx);
    c.mean_a += sa.value / 3;
    c.mean_b += sb.value / 3;
    c.params_a = sa.params;
    c.params_b = sb.params;
    c.aborted = c.aborted || sa.aborted || sb.aborted;
  }
  return c;
}

bool budgets_match(std::size_t a, std::size_t b) {
  const double hi = static_cast<double>(std::max(a, b)), lo = static_cast<double>(std::min(a, b));
  return hi > 0 && (hi - lo) / hi <= 0.05;
}

// ---------------------------------------------------------------- 5

Outcome desk_copy(const Context& ctx) {
  auto cfg = desk_config(ctx, "ntm_copy", 1, "ntm_copy");
  fs::remove_all(cfg.out_dir);
  const auto res = harness::run_training(cfg);
  if (res.aborted) return {false, "training aborted: " + res.abort_reason};
  const auto rep = harness::run_evaluation(cfg, res.checkpoint, {"bit_accuracy"}, ctx.eval_samples, ctx.eval_seed);
  const auto& m = rep.metrics.at("bit_accuracy");
  return {m.mean >= 0.99, "held-out bit accuracy " + fmt(m.mean) + " (s.d. " + fmt(m.sd, 3) + ", n=" +
                              std::to_string(m.n) + ") after " + std::to_string(res.steps_done) + " iterations"};
}

// ---------------------------------------------------------------- 6

Outcome uw_ordering(const Context& ctx) {
  const auto c = compare(ctx, "uw_copy_uniform", "uw_copy_regular", "seq_accuracy");
  const auto probe_cfg = harness::load_config(ctx.configs / "uw_copy_uniform.toml", true);
  const int T = probe_cfg.task.at("max_len").get<int>(), D = probe_cfg.model.at("writes").get<int>();
  const double ratio = static_cast<double>(D + 1) / T;
  Outcome o;
  o.pass = !c.aborted && c.mean_a > c.mean_b && c.params_a == c.params_b && ratio >= 0.1 && ratio <= 0.2;
  o.detail = "mean seq accuracy uniform " + fmt(c.mean_a) + " vs regular " + fmt(c.mean_b) + " (3 seeds, " +
             std::to_string(c.params_a) + " params each, compression " + fmt(ratio, 2) + ")";
  return o;
}

// ---------------------------------------------------------------- 7

Outcome dual_orderings(const Context& ctx) {
  const auto oe = compare(ctx, "odd_even_dcw", "odd_even_dnc_seq2seq", "nld");
  const auto sum = compare(ctx, "sum_dmnc_late", "sum_dnc_concat", "seq_accuracy");
  const bool oe_ok = !oe.aborted && oe.mean_a < oe.mean_b && budgets_match(oe.params_a, oe.params_b);
  const bool sum_ok = !sum.aborted && sum.mean_a > sum.mean_b && budgets_match(sum.params_a, sum.params_b);
  Outcome o;
  o.pass = oe_ok && sum_ok;
  o.detail = std::string("odd-even NLD dcw ") + fmt(oe.mean_a) + " vs single-controller " + fmt(oe.mean_b) + " (" +
             std::to_string(oe.params_a) + "/" + std::to_string(oe.params_b) + " params) " + (oe_ok ? "ok" : "WRONG") +
             "; sum accuracy dmnc-late " + fmt(sum.mean_a) + " vs concat " + fmt(sum.mean_b) + " (" +
             std::to_string(sum.params_a) + "/" + std::to_string(sum.params_b) + " params) " +
             (sum_ok ? "ok" : "WRONG");
  return o;
}

// ---------------------------------------------------------------- 8

std::string dnc_rollout_invariants() {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> d(-4, 4);
  const std::size_t N = 6, W = 3, R = 2;
  std::size_t failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto s = dnc::dnc_zero_state(1, N, W, R);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> raw(dnc::dnc_interface_width(W, R));
      for (auto& x : raw) x = d(rng);
      auto e = dnc::parse_dnc_emission(Tensor::row(raw), W, R);
      s = dnc::read_step(dnc::write_step(s, e), e);
      if (!dnc::check_invariants(s).empty()) ++failures;
    }
  }
  return failures == 0 ? "" : "dnc invariants broken in " + std::to_string(failures) + " steps";
}

std::string write_protected_decode() {
  std::size_t changed = 0;
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    dnc::DncConfig cfg;
    cfg.input = 4;
    cfg.output = 3;
    cfg.hidden = 8;
    cfg.slots = 5;
    cfg.width = 3;
    dnc::DncModel model(cfg, seed);
    ad::NoGradGuard g;
    auto s = model.initial_state(2);
    for (int t = 0; t < 6; ++t) model.step(random_const(2, 4, rng), s);
    const auto M = s.mem.M.value();
    const auto links = s.mem.links.value();
    for (int t = 0; t < 8; ++t) {
      model.step(random_const(2, 4, rng), s, false);
      if (s.mem.M.value() != M || s.mem.links.value() != links) ++changed;
    }
    // Step-gated form: nothing is written after the encoder length L.
    auto st = dnc::dnc_zero_state(1, 5, 3, 1);
    std::uniform_real_distribution<double> d(-2, 2);
    std::vector<double> raw(dnc::dnc_interface_width(3, 1));
    for (auto& x : raw) x = d(rng);
    st = sched::write_protected_update(st, dnc::parse_dnc_emission(Tensor::row(raw), 3, 1), 1, 1);
    const auto snap = st.M.value();
    for (int t = 2; t <= 11; ++t) {
      for (auto& x : raw) x = d(rng);
      st = sched::write_protected_update(st, dnc::parse_dnc_emission(Tensor::row(raw), 3, 1), t, 1);
      if (st.M.value() != snap) ++changed;
    }
  }
  return changed == 0 ? "" : "write-protected decode changed memory " + std::to_string(changed) + " times";
}

std::string hopfield_energy() {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.5);
  auto bipolar = [&](Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = coin(rng) ? 1.0 : -1.0;
    return v;
  };
  std::size_t rises = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Eigen::VectorXd> pats;
    for (int q = 0; q < 12; ++q) pats.push_back(bipolar(48));
    classic::HopfieldNet net(48);
    net.store_all(pats);
    const auto cue = bipolar(48);
    const auto res = classic::hopfield_recall(net, cue, 50, static_cast<std::uint64_t>(trial));
    for (std::size_t k = 1; k < res.energies.size(); ++k)
      if (res.energies[k] > res.energies[k - 1]) ++rises;
    if (std::abs(res.energies.back() - net.energy(res.state)) > 1e-9 * std::max(1.0, std::abs(res.energies.back())))
      ++rises;
  }
  return rises == 0 ? "" : "hopfield energy rose " + std::to_string(rises) + " times";
}

std::string stack_bisimulation() {
  std::mt19937_64 rng(16);
  std::uniform_int_distribution<int> op(0, 3), val(-9, 9);
  std::size_t mismatches = 0;
  for (int prog = 0; prog < 100; ++prog) {
    classic::NeuralStackState st;
    std::vector<Eigen::VectorXd> oracle;
    for (int k = 0; k < 20; ++k) {
      const int o = op(rng);
      const double push = (o == 0 || o == 2) ? 1.0 : 0.0;
      const double pop = (o == 1 || o == 2) ? 1.0 : 0.0;
      const Eigen::Vector3d v(val(rng), val(rng), val(rng));
      auto step = classic::neural_stack_step(st, push, pop, v);
      if (pop > 0 && !oracle.empty()) oracle.pop_back();
      if (push > 0) oracle.push_back(v);
      const Eigen::Vector3d top = oracle.empty() ? Eigen::Vector3d::Zero() : Eigen::Vector3d(oracle.back());
      if ((step.read - top).norm() != 0.0) ++mismatches;
      std::size_t live = 0;
      for (double s : step.state.s) live += s == 1.0;
      if (live != oracle.size()) ++mismatches;
      st = std::move(step.state);
    }
  }
  return mismatches == 0 ? "" : "neural stack diverged from the discrete stack " + std::to_string(mismatches) + " times";
}

std::string task_oracles() {
  using namespace tasks;
  std::size_t bad = 0;
  std::mt19937_64 rng(100);
  const DiscreteKind kinds[] = {DiscreteKind::Double, DiscreteKind::Copy, DiscreteKind::Reverse,
                                DiscreteKind::Add,    DiscreteKind::Max,  DiscreteKind::LongCopy};
  for (int i = 0; i < 1000; ++i) {
    const auto k = kinds[rng() % 6];
    const int lo = 1 + static_cast<int>(rng() % 10);
    const auto spec = default_discrete_spec(k, lo, lo + static_cast<int>(rng() % 30));
    const auto s = generate_discrete(spec, rng());
    if (argmax_tokens(s.target) != oracles::discrete(k, argmax_tokens(s.input))) ++bad;
  }
  const NtmKind ntm_kinds[] = {NtmKind::Copy, NtmKind::RepeatCopy, NtmKind::AssocRecall, NtmKind::PrioritySort};
  for (int i = 0; i < 1000; ++i) {
    NtmSpec spec = published_ntm_spec(ntm_kinds[i % 4]);
    spec.bits = 2 + static_cast<int>(rng() % 8);
    spec.downscaled = true;
    spec.max_len = 1 + static_cast<int>(rng() % 12);
    spec.max_repeat = 1 + static_cast<int>(rng() % 5);
    spec.repeat_norm = (rng() % 2) ? 1.0 : 10.0;
    spec.max_items = 2 + static_cast<int>(rng() % 6);
    spec.item_len = 2 + static_cast<int>(rng() % 3);
    spec.items = 1 + static_cast<int>(rng() % 20);
    spec.sorted = 1 + static_cast<int>(rng() % static_cast<unsigned>(spec.items));
    const auto s = generate_ntm_task(spec, rng());
    if (oracles::scored_rows(s) != oracles::ntm_target(spec, s)) ++bad;
  }
  for (int i = 0; i < 1000; ++i) {
    NtmSpec spec = published_ntm_spec(NtmKind::DynNgrams);
    spec.downscaled = true;
    spec.history = 1 + static_cast<int>(rng() % 6);
    spec.ngram_len = 5 + static_cast<int>(rng() % 60);
    const auto s = generate_ntm_task(spec, rng());
    for (std::size_t t = 0; t + 1 < s.input.size(); ++t)
      if (s.target[t] != s.input[t + 1]) ++bad;
    const auto table = s.meta["table"].get<std::vector<double>>();
    if (table.size() != (std::size_t{1} << spec.history)) ++bad;
    for (double p : table)
      if (!(p >= 0 && p <= 1)) ++bad;
  }
  for (int i = 0; i < 1000; ++i) {
    OddEvenSpec spec;
    spec.max_len = 1 + static_cast<int>(rng() % 25);
    spec.min_len = 1 + static_cast<int>(rng() % static_cast<unsigned>(spec.max_len));
    const auto s = generate_odd_even(spec, rng());
    const auto x = argmax_tokens(s.input);
    if (argmax_tokens(s.target) != oracles::odd_even(x)) ++bad;
    for (std::size_t a = 0; a < x.size(); ++a) {
      if (x[a] % 2 != 1 || x[a] < 1 || x[a] > 49) ++bad;
      for (std::size_t b = a + 1; b < x.size(); ++b)
        if (x[a] == x[b]) ++bad;
    }
  }
  for (int i = 0; i < 1000; ++i) {
    SumSpec spec;
    spec.max_len = 1 + static_cast<int>(rng() % 20);
    spec.max_value = 1 + static_cast<int>(rng() % 60);
    const auto s = generate_sum(spec, rng());
    if (argmax_tokens(s.target) != oracles::sum_two(argmax_tokens(s.input), argmax_tokens(s.input2))) ++bad;
  }
  for (int i = 0; i < 1000; ++i) {
    // Each clean point must lie on the stored curve somewhere in its jitter
    // window [(t-1)/1000, (t+1)/1000].
    SinusoidSpec spec;
    spec.T = 1 + static_cast<int>(rng() % 15);
    const auto s = generate_sinusoid(spec, rng());
    const double A = s.meta["A"], f = s.meta["f"], phi = s.meta["phi"];
    auto curve = [&](double x) { return 5.0 + A * std::sin(2.0 * M_PI * f * x + phi); };
    auto on_curve = [&](double y, int t) {
      double best = 1e300;
      for (int k = 0; k <= 2000; ++k) best = std::min(best, std::abs(y - curve((t - 1 + k / 1000.0) / 1000.0)));
      return best < 1e-3;
    };
    for (int t = 1; t <= 2 * spec.T; ++t) {
      const double y = t <= spec.T ? s.input[static_cast<std::size_t>(t - 1)][0]
                                   : s.target[static_cast<std::size_t>(t - spec.T - 1)][0];
      if (!on_curve(y, t)) ++bad;
    }
  }
  return bad == 0 ? "" : "task generators disagree with oracles in " + std::to_string(bad) + " checks";
}

Outcome structural_suites() {
  const std::vector<std::pair<std::string, std::function<std::string()>>> suites = {
      {"dnc rollouts", dnc_rollout_invariants}, {"write-protected decode", write_protected_decode},
      {"hopfield energy", hopfield_energy},     {"stack bisimulation", stack_bisimulation},
      {"task oracles", task_oracles},
  };
  Outcome o{true, ""};
  for (const auto& [name, run] : suites) {
    const auto err = run();
    if (!err.empty()) o.pass = false;
    o.detail += (o.detail.empty() ? "" : ", ") + name + (err.empty() ? " ok" : " FAILED (" + err + ")");
  }
  return o;
}

// ---------------------------------------------------------------- 9

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const Context& ctx) {
  const std::vector<std::pair<std::string, std::uint64_t>> runs = {
      {"ntm_copy", 1},          {"nutm_copy", 2},         {"ntm_seq_c_rc", 3},  {"uw_copy_uniform", 1},
      {"odd_even_dcw", 4},      {"sum_dmnc_late", 5},     {"sum_dnc_concat", 5}, {"sinusoid_cached_uniform", 6},
      {"odd_even_dnc_seq2seq", 7},
  };
  std::size_t same = 0;
  std::string diff;
  for (const auto& [name, seed] : runs) {
    std::string logs[2], ckpts[2];
    for (int rep = 0; rep < 2; ++rep) {
      auto cfg = desk_config(ctx, name, seed, "det_" + name + "_" + std::to_string(rep));
      cfg.iterations = 30;
      cfg.eval_every = 10;
      cfg.batch = std::min<std::size_t>(cfg.batch, 4);
      fs::remove_all(cfg.out_dir);
      harness::run_training(cfg);
      logs[rep] = slurp(fs::path(cfg.out_dir) / "metrics.csv");
      ckpts[rep] = slurp(fs::path(cfg.out_dir) / "checkpoint.bin");
    }
    if (!logs[0].empty() && logs[0] == logs[1] && ckpts[0] == ckpts[1]) ++same;
    else diff += " " + name;
  }
  return {same == runs.size(), std::to_string(same) + "/" + std::to_string(runs.size()) +
                                   " (config, seed) pairs byte-identical in metrics.csv and checkpoint" +
                                   (diff.empty() ? "" : "; differing:" + diff)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memkit acceptance criteria"};
  int criterion = 0;
  Context ctx;
  std::string configs = MEMKIT_CONFIG_DIR;
  std::string work = (fs::temp_directory_path() / "memkit_acceptance").string();
  app.add_option("--criterion", criterion, "1-9, or 0 for all")->check(CLI::Range(0, 9));
  app.add_option("--configs", configs, "directory holding the run configs");
  app.add_option("--work", work, "scratch directory for training runs");
  CLI11_PARSE(app, argc, argv);
  ctx.configs = configs;
  ctx.work = work;
  fs::create_directories(ctx.work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> all = {
      {"gradient correctness", gradient_checks},
      {"capacity bound oracle", capacity_bound},
      {"variational bound", variational_bound},
      {"single-program degeneracy", nutm_degeneracy},
      {"desk-scale copy", [&] { return desk_copy(ctx); }},
      {"uniform writing ordering", [&] { return uw_ordering(ctx); }},
      {"dual-architecture orderings", [&] { return dual_orderings(ctx); }},
      {"structural invariant suites", structural_suites},
      {"determinism", [&] { return determinism(ctx); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (criterion != 0 && static_cast<std::size_t>(criterion) != i + 1) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = all[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << i + 1 << " " << all[i].first << ": " << o.detail << " ["
              << fmt(secs, 3) << " s]" << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed;
}
