#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "memkit/harness/config.hpp"
#include "memkit/harness/learner.hpp"
#include "memkit/harness/metrics.hpp"

namespace memkit::harness {

struct MetricRecord {
  std::size_t step = 0;
  double loss = 0.0;
  std::vector<double> metrics;  // in RunConfig metric order
  double wall_ms = 0.0;
};

struct TrainResult {
  std::vector<std::string> metric_names;
  std::vector<MetricRecord> records;
  std::size_t steps_done = 0;
  bool aborted = false;
  std::string abort_reason;
  std::filesystem::path checkpoint;
};

// Files written to cfg.out_dir:
//   config.toml     canonical copy of the run config
//   metrics.csv     step,loss,<metrics> per eval interval, training batches
//   timing.csv      step,wall_ms for the same rows
//   checkpoint.bin  final state, or the initial state for 0 iterations
//   abort.json      only when a non-finite loss or gradient stopped the run
// Batch i is drawn from derive_seed(seed, i), so logs depend only on the
// config. log, when given, receives one progress line per record.
TrainResult run_training(const RunConfig& cfg, std::ostream* log = nullptr);

struct EvalReport {
  std::size_t step = 0;
  std::size_t n_samples = 0;
  std::map<std::string, Summary> metrics;
};

// Mean and sample s.d. over n_samples fresh samples from a fixed seed. The
// checkpoint is only read.
EvalReport evaluate(Learner& learner, const TaskSource& task, const std::vector<std::string>& metrics,
                    std::size_t n_samples, std::uint64_t seed, std::size_t batch);
EvalReport run_evaluation(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                          std::vector<std::string> metrics, std::size_t n_samples, std::uint64_t seed);

std::string format_record(const MetricRecord& r);

}  // namespace memkit::harness
