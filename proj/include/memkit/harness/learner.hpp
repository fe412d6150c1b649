#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "memkit/autodiff/parameters.hpp"
#include "memkit/harness/task_source.hpp"

namespace memkit::harness {

struct Forward {
  ad::Tensor loss;                         // summed over steps, averaged over the batch
  std::vector<tasks::Rows> outputs;        // aligned: probabilities; regression: values
  std::vector<std::vector<int>> tokens;    // token families: argmax predictions
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual ad::ParameterSet& params() = 0;
  // step feeds step-dependent terms such as the program loss annealing.
  virtual Forward forward(const std::vector<tasks::Sample>& batch, std::size_t step) = 0;
  // Per-step trace CSV of one sample: program usage (nutm) or write gates
  // (dmnc). Other models throw ArgumentError.
  virtual std::string trace_csv(const tasks::Sample& sample);
};

// Model kinds by task family:
//   aligned     ntm, nutm, dnc, lstm
//   seq2seq     dnc (write policy options), dcw, dnc_seq2seq
//   two_view    dmnc (fusion late|early), dnc_concat
//   regression  dnc (write policy options)
// Unknown model fields are ArgumentErrors.
std::unique_ptr<Learner> make_learner(const nlohmann::json& model, const TaskSource& task, std::uint64_t seed);

// Per-sample scores of one metric over a forward pass.
std::vector<double> score(const std::string& metric, const Forward& fwd, const std::vector<tasks::Sample>& batch,
                          Family family);

}  // namespace memkit::harness
