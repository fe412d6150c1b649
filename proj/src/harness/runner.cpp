#include "memkit/harness/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "memkit/errors.hpp"
#include "memkit/harness/checkpoint.hpp"
#include "memkit/optim/optimizer.hpp"

namespace memkit::harness {

namespace {

constexpr std::uint64_t kEvalSalt = 0xe7a1c0deULL;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
}

std::vector<std::string> resolve_metrics(const std::vector<std::string>& asked, const TaskSource& task) {
  auto names = asked.empty() ? task.default_metrics() : asked;
  for (const auto& m : names) check_metric_supported(m, task.family());
  return names;
}

}  // namespace

std::string format_record(const MetricRecord& r) {
  std::string s = std::to_string(r.step) + "," + num(r.loss);
  for (double m : r.metrics) s += "," + num(m);
  return s;
}

TrainResult run_training(const RunConfig& cfg, std::ostream* log) {
  const TaskSource task(cfg.task);
  auto learner = make_learner(cfg.model, task, cfg.seed);
  optim::Optimizer opt(cfg.optimizer, learner->params());
  const std::string hash = config_hash(cfg);

  TrainResult res;
  res.metric_names = resolve_metrics(cfg.metrics, task);
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  write_text(dir / "config.toml", config_text(cfg));
  std::ofstream metrics_csv(dir / "metrics.csv", std::ios::binary | std::ios::trunc);
  std::ofstream timing_csv(dir / "timing.csv", std::ios::binary | std::ios::trunc);
  if (!metrics_csv || !timing_csv) throw IoError("cannot write logs under " + dir.string());
  metrics_csv << "step,loss";
  for (const auto& m : res.metric_names) metrics_csv << "," << m;
  metrics_csv << "\n";
  timing_csv << "step,wall_ms\n";
  res.checkpoint = dir / "checkpoint.bin";

  const auto t0 = std::chrono::steady_clock::now();
  double loss_sum = 0.0;
  std::size_t loss_n = 0;
  std::vector<std::vector<double>> scores(res.metric_names.size());
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    const auto batch = task.batch(cfg.batch, tasks::derive_seed(cfg.seed, it));
    std::string failure;
    try {
      const Forward fwd = learner->forward(batch, it);
      const double loss = fwd.loss.item();
      if (!std::isfinite(loss)) throw DomainError("loss is " + num(loss));
      learner->params().zero_grad();
      ad::backward(fwd.loss);
      const auto report = opt.step(learner->params());
      if (report.skipped) throw DomainError("non-finite gradient");
      loss_sum += loss;
      ++loss_n;
      for (std::size_t k = 0; k < res.metric_names.size(); ++k) {
        const auto s = score(res.metric_names[k], fwd, batch, task.family());
        scores[k].insert(scores[k].end(), s.begin(), s.end());
      }
    } catch (const DomainError& e) {
      failure = e.what();
    }
    ad::Tape::active().clear();
    if (!failure.empty()) {
      res.aborted = true;
      res.abort_reason = failure;
      const nlohmann::json diag = {{"step", it}, {"reason", failure}, {"config_hash", hash}};
      write_text(dir / "abort.json", diag.dump(2) + "\n");
      if (log) *log << "aborted at step " << it << ": " << failure << "\n";
      return res;
    }
    res.steps_done = it;
    if (it % cfg.eval_every == 0 || it == cfg.iterations) {
      MetricRecord r;
      r.step = it;
      r.loss = loss_sum / static_cast<double>(loss_n);
      for (auto& s : scores) {
        r.metrics.push_back(summarize(s).mean);
        s.clear();
      }
      r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      metrics_csv << format_record(r) << "\n";
      metrics_csv.flush();
      timing_csv << r.step << "," << num(r.wall_ms) << "\n";
      if (log) *log << cfg.name << " " << format_record(r) << "\n";
      res.records.push_back(std::move(r));
      loss_sum = 0.0;
      loss_n = 0;
    }
  }
  save_checkpoint(res.checkpoint, capture(learner->params(), &opt, res.steps_done, hash));
  return res;
}

EvalReport evaluate(Learner& learner, const TaskSource& task, const std::vector<std::string>& metrics,
                    std::size_t n_samples, std::uint64_t seed, std::size_t batch) {
  if (n_samples < 1 || batch < 1) throw ArgumentError("evaluate: n_samples and batch must be >= 1");
  const auto names = resolve_metrics(metrics, task);
  ad::NoGradGuard guard;
  std::vector<std::vector<double>> scores(names.size());
  for (std::size_t done = 0, k = 0; done < n_samples; ++k) {
    const std::size_t n = std::min(batch, n_samples - done);
    const auto b = task.batch(n, tasks::derive_seed(seed ^ kEvalSalt, k));
    const Forward fwd = learner.forward(b, 0);
    for (std::size_t m = 0; m < names.size(); ++m) {
      const auto s = score(names[m], fwd, b, task.family());
      scores[m].insert(scores[m].end(), s.begin(), s.end());
    }
    ad::Tape::active().clear();
    done += n;
  }
  EvalReport rep;
  rep.n_samples = n_samples;
  for (std::size_t m = 0; m < names.size(); ++m) rep.metrics[names[m]] = summarize(scores[m]);
  return rep;
}

EvalReport run_evaluation(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                          std::vector<std::string> metrics, std::size_t n_samples, std::uint64_t seed) {
  const TaskSource task(cfg.task);
  resolve_metrics(metrics, task);
  auto learner = make_learner(cfg.model, task, cfg.seed);
  const Checkpoint ck = load_checkpoint(checkpoint, config_hash(cfg));
  restore(ck, learner->params(), nullptr);
  EvalReport rep = evaluate(*learner, task, metrics, n_samples, seed, cfg.batch);
  rep.step = ck.step;
  return rep;
}

}  // namespace memkit::harness
