#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memkit/capacity/capacity.hpp"
#include "memkit/errors.hpp"
#include "memkit/harness/checkpoint.hpp"
#include "memkit/harness/config.hpp"
#include "memkit/harness/runner.hpp"
#include "memkit/harness/task_source.hpp"
#include "memkit/vmed/latent.hpp"

using namespace memkit;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommands = {"train", "eval", "gen", "analyze", "oracle", "plot-data"};

constexpr const char* kUsage =
    "usage: memkit <command> [options]\n"
    "commands:\n"
    "  train      --config <path> [--seed <n>] [--out <dir>] [--desk-scale]\n"
    "  eval       --config <path> [--checkpoint <file>] [--n <samples>] [--seed <n>] [--metrics a,b]\n"
    "  gen        --task <name> [--seed <n>] [--n <count>] [--set key=value ...] [--out <file>]\n"
    "  analyze    --T <n> --D <n> --lambda <x> [--C <x>] [--csv] [--out <file>]\n"
    "  oracle     dvar | mog | task [--seed <n>] [--n <count>] [--task <name>]\n"
    "  plot-data  --kind learning-curve|write-gate|program-usage [--run <dir>] [--config <path>] [--out <file>]\n";

// Writes to --out when given, stdout otherwise.
void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + out);
  f << text;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("file not found: " + p.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string cell;
  while (std::getline(s, cell, ',')) out.push_back(cell);
  return out;
}

harness::RunConfig config_with_overrides(const std::string& path, bool desk, const std::optional<std::uint64_t>& seed,
                                         const std::string& out_dir) {
  auto cfg = harness::load_config(path, desk);
  if (seed) cfg.seed = *seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  return cfg;
}

vmed::GaussianDiag random_gaussian(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> s(0.3, 2.0);
  vmed::GaussianDiag g;
  for (std::size_t d = 0; d < dim; ++d) {
    g.mu.push_back(n(rng));
    g.sigma.push_back(s(rng));
  }
  return g;
}

vmed::MixtureLatent random_mixture(std::size_t K, std::size_t dim, std::mt19937_64& rng) {
  vmed::MixtureLatent g;
  std::uniform_real_distribution<double> u(0.1, 1.0);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    g.pi.push_back(u(rng));
    total += g.pi.back();
    g.components.push_back(random_gaussian(dim, rng));
  }
  for (auto& p : g.pi) p /= total;
  return g;
}

int cmd_oracle(const std::string& which, std::uint64_t seed, std::size_t n, std::size_t samples,
               const std::string& task_name, const std::string& out) {
  std::mt19937_64 rng(seed);
  std::ostringstream o;
  o << std::setprecision(10);
  if (which == "dvar") {
    o << "instance,modes,dim,d_var,mc_kl,std_error,bound_holds\n";
    std::size_t held = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t K = 1 + rng() % 4, dim = 1 + rng() % 3;
      const auto f = random_gaussian(dim, rng);
      const auto g = random_mixture(K, dim, rng);
      const double dv = vmed::d_var(f, g);
      const auto mc = vmed::monte_carlo_kl(f, g, samples, rng);
      const bool ok = dv >= mc.mean - 3.0 * mc.std_error;
      held += ok;
      o << i << ',' << K << ',' << dim << ',' << dv << ',' << mc.mean << ',' << mc.std_error << ',' << ok << '\n';
    }
    o << "# bound held on " << held << " of " << n << " instances\n";
  } else if (which == "mog") {
    o << "instance,dim,modes1,modes2,max_abs_err,grid_points\n";
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t dim = 1 + rng() % 2;
      const auto g1 = random_mixture(1 + rng() % 3, dim, rng), g2 = random_mixture(1 + rng() % 3, dim, rng);
      const auto rep = vmed::mog_product_oracle(g1, g2, {-4, 4, dim == 1 ? 401u : 81u});
      o << i << ',' << dim << ',' << g1.modes() << ',' << g2.modes() << ',' << rep.max_abs_err << ',' << rep.points
        << '\n';
    }
  } else if (which == "task") {
    // Recomputes every target from the sample's own inputs.
    const harness::TaskSource src(harness::task_from_name(task_name));
    const std::string kind = src.kind();
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = src.sample(tasks::derive_seed(seed, i));
      const auto x = tasks::argmax_tokens(s.input), y = tasks::argmax_tokens(s.target);
      std::vector<int> expect;
      if (kind == "discrete") expect = tasks::discrete_target(tasks::parse_discrete_kind(src.spec().at("op")), x);
      else if (kind == "odd_even") expect = tasks::odd_even_target(x);
      else if (kind == "sum_two_sequences") expect = tasks::sum_target(x, tasks::argmax_tokens(s.input2));
      else throw ArgumentError("oracle task: no target oracle for " + task_name);
      agree += expect == y;
    }
    o << "task,samples,agree\n" << task_name << ',' << n << ',' << agree << '\n';
    emit(o.str(), out);
    return agree == n ? 0 : 1;
  } else {
    throw ArgumentError("oracle: expected dvar, mog or task, got '" + which + "'");
  }
  emit(o.str(), out);
  return 0;
}

int cmd_plot(const std::string& kind, const std::string& run_dir, const std::string& config, bool desk,
             const std::string& checkpoint, std::uint64_t seed, const std::string& out) {
  if (kind == "learning-curve") {
    if (run_dir.empty()) throw ArgumentError("plot-data learning-curve needs --run");
    // Joins the deterministic metric log with its timing log.
    std::stringstream metrics(read_file(std::filesystem::path(run_dir) / "metrics.csv"));
    std::stringstream timing(read_file(std::filesystem::path(run_dir) / "timing.csv"));
    std::string m, t;
    std::ostringstream o;
    while (std::getline(metrics, m)) {
      if (!std::getline(timing, t)) throw IoError("timing.csv is shorter than metrics.csv");
      const auto tc = split_csv_line(t);
      if (tc.size() != 2 || split_csv_line(m)[0] != tc[0]) throw IoError("timing.csv rows do not match metrics.csv");
      o << m << ',' << tc[1] << '\n';
    }
    emit(o.str(), out);
    return 0;
  }
  if (kind != "write-gate" && kind != "program-usage")
    throw ArgumentError("plot-data: unknown kind '" + kind + "'");
  if (config.empty()) throw ArgumentError("plot-data " + kind + " needs --config");
  const auto cfg = harness::load_config(config, desk);
  const harness::TaskSource src(cfg.task);
  auto learner = harness::make_learner(cfg.model, src, cfg.seed);
  const std::filesystem::path ck = checkpoint.empty() ? std::filesystem::path(cfg.out_dir) / "checkpoint.bin" : std::filesystem::path(checkpoint);
  if (std::filesystem::exists(ck))
    harness::restore(harness::load_checkpoint(ck, harness::config_hash(cfg)), learner->params(), nullptr);
  else
    std::cerr << "note: no checkpoint at " << ck.string() << ", tracing the initial weights\n";
  emit(learner->trace_csv(src.sample(seed)), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2 || std::find(kCommands.begin(), kCommands.end(), argv[1]) == kCommands.end()) {
    const std::string a = argc < 2 ? "" : argv[1];
    if (a == "-h" || a == "--help") {
      std::cout << kUsage;
      return 0;
    }
    if (!a.empty()) std::cerr << "unknown command: " << a << "\n";
    std::cerr << kUsage;
    return 2;
  }

  CLI::App app{"memory-augmented network toolkit"};
  app.require_subcommand(1);
  std::string config, out, checkpoint, task = "copy", run_dir, kind, metrics, which;
  std::optional<std::uint64_t> seed;
  std::uint64_t eval_seed = 20240601, gen_seed = 1;
  bool desk = false, csv = false;
  std::size_t n = 1, n_eval = 1000, samples = 200000;
  int T = 0, D = 0;
  double lambda = 0.9, C = 1.0;
  std::vector<std::string> sets;

  auto* train = app.add_subcommand("train", "train a model from a run config");
  train->add_option("--config", config, "run config (.toml)")->required();
  train->add_option("--seed", seed, "override run.seed");
  train->add_option("--out", out, "override run.out_dir");
  train->add_flag("--desk-scale", desk, "apply the [desk_scale] overlay");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on fresh samples");
  eval->add_option("--config", config, "run config (.toml)")->required();
  eval->add_option("--checkpoint", checkpoint, "checkpoint file (default <out_dir>/checkpoint.bin)");
  eval->add_option("--n", n_eval, "number of samples");
  eval->add_option("--seed", eval_seed, "evaluation set seed");
  eval->add_option("--metrics", metrics, "comma separated metric names");
  eval->add_option("--out", out, "write the JSON report here");
  eval->add_flag("--desk-scale", desk, "apply the [desk_scale] overlay");

  auto* gen = app.add_subcommand("gen", "print task samples as JSONL");
  gen->add_option("--task", task, "task name")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--n", n, "number of samples");
  gen->add_option("--set", sets, "task field override key=value");
  gen->add_option("--config", config, "take the task from a run config instead");
  gen->add_option("--out", out, "output file");

  auto* analyze = app.add_subcommand("analyze", "enumerate write schedules for the capacity bound");
  analyze->add_option("--T", T, "sequence length")->required();
  analyze->add_option("--D", D, "number of writes")->required();
  analyze->add_option("--lambda", lambda, "contribution decay")->required();
  analyze->add_option("--C", C, "contribution scale");
  analyze->add_flag("--csv", csv, "print every schedule as CSV");
  analyze->add_option("--out", out, "output file");
  analyze->add_option("--config", config, "unused; accepted for uniformity");
  analyze->add_option("--seed", seed, "unused; accepted for uniformity");

  auto* oracle = app.add_subcommand("oracle", "run a numeric oracle");
  oracle->add_option("which", which, "dvar, mog or task")->required();
  oracle->add_option("--seed", gen_seed, "instance seed");
  oracle->add_option("--n", n, "number of instances");
  oracle->add_option("--samples", samples, "Monte Carlo samples for dvar");
  oracle->add_option("--task", task, "task for the task oracle");
  oracle->add_option("--out", out, "output file");
  oracle->add_option("--config", config, "unused; accepted for uniformity");

  auto* plot = app.add_subcommand("plot-data", "emit CSV for offline plotting");
  plot->add_option("--kind", kind, "learning-curve, write-gate or program-usage")->required();
  plot->add_option("--run", run_dir, "run directory (learning-curve)");
  plot->add_option("--config", config, "run config (traces)");
  plot->add_option("--checkpoint", checkpoint, "checkpoint (traces)");
  plot->add_option("--seed", gen_seed, "sample seed (traces)");
  plot->add_option("--out", out, "output file");
  plot->add_flag("--desk-scale", desk, "apply the [desk_scale] overlay");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      const auto cfg = config_with_overrides(config, desk, seed, out);
      const auto res = harness::run_training(cfg, &std::cout);
      if (res.aborted) {
        std::cerr << "training aborted: " << res.abort_reason << "\n";
        return 1;
      }
      std::cout << "wrote " << cfg.out_dir << " (" << res.steps_done << " steps)\n";
      return 0;
    }
    if (*eval) {
      const auto cfg = harness::load_config(config, desk);
      std::vector<std::string> names;
      if (!metrics.empty()) names = split_csv_line(metrics);
      const std::filesystem::path ck =
          checkpoint.empty() ? std::filesystem::path(cfg.out_dir) / "checkpoint.bin" : std::filesystem::path(checkpoint);
      const auto rep = harness::run_evaluation(cfg, ck, names, n_eval, eval_seed);
      json j = {{"step", rep.step}, {"n_samples", rep.n_samples}, {"metrics", json::object()}};
      for (const auto& [k, s] : rep.metrics) j["metrics"][k] = {{"mean", s.mean}, {"sd", s.sd}};
      emit(j.dump(2) + "\n", out);
      return 0;
    }
    if (*gen) {
      json spec = config.empty() ? harness::task_from_name(task) : harness::load_config(config).task;
      for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ArgumentError("--set expects key=value, got '" + kv + "'");
        spec[kv.substr(0, eq)] = harness::parse_toml("v = " + kv.substr(eq + 1)).at("v");
      }
      const harness::TaskSource src(spec);
      std::vector<tasks::Sample> batch;
      for (std::size_t i = 0; i < n; ++i) batch.push_back(src.sample(tasks::derive_seed(gen_seed, i)));
      emit(tasks::to_jsonl(batch), out);
      return 0;
    }
    if (*analyze) {
      capacity::CapacityParams p;
      p.T = T;
      p.D = D;
      p.lambda = lambda;
      p.C = C;
      if (csv) {
        emit(capacity::analyze_csv(p), out);
        return 0;
      }
      const auto bf = capacity::brute_force_optimal_schedule(p);
      std::ostringstream o;
      o << std::setprecision(12) << "T=" << T << " D=" << D << " lambda=" << lambda << " C=" << C << "\n"
        << "schedules=" << bf.enumerated << " best=" << bf.best << " bound=" << capacity::uniform_bound(p) << "\n";
      for (const auto& s : bf.argmax) {
        o << "argmax {";
        for (std::size_t i = 0; i < s.steps.size(); ++i) o << (i ? "," : "") << s.steps[i];
        o << "}\n";
      }
      emit(o.str(), out);
      return 0;
    }
    if (*oracle) return cmd_oracle(which, gen_seed, n, samples, task, out);
    if (*plot) return cmd_plot(kind, run_dir, config, desk, checkpoint, gen_seed, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
