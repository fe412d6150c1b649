#include "memkit/harness/learner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "memkit/controllers/cells.hpp"
#include "memkit/dnc/dnc.hpp"
#include "memkit/dual/dual.hpp"
#include "memkit/errors.hpp"
#include "memkit/harness/metrics.hpp"
#include "memkit/nsm/nsm.hpp"
#include "memkit/ntm/ntm.hpp"
#include "memkit/scheduling/schedule.hpp"

namespace memkit::harness {

using ad::Tensor;
using nlohmann::json;

std::string Learner::trace_csv(const tasks::Sample&) {
  throw ArgumentError("this model has no per-step trace");
}

namespace {

class Fields {
 public:
  explicit Fields(const json& j) : j_(j) {}
  std::size_t size(const char* key, std::size_t fallback) {
    used_.insert(key);
    return j_.contains(key) ? j_.at(key).get<std::size_t>() : fallback;
  }
  double real(const char* key, double fallback) {
    used_.insert(key);
    return j_.contains(key) ? j_.at(key).get<double>() : fallback;
  }
  bool flag(const char* key, bool fallback) {
    used_.insert(key);
    return j_.contains(key) ? j_.at(key).get<bool>() : fallback;
  }
  std::string text(const char* key, const std::string& fallback) {
    used_.insert(key);
    return j_.contains(key) ? j_.at(key).get<std::string>() : fallback;
  }
  void done() const {
    for (const auto& [k, v] : j_.items())
      if (k != "kind" && !used_.count(k)) throw ArgumentError("model: unknown field '" + k + "'");
  }

 private:
  const json& j_;
  std::set<std::string> used_;
};

std::vector<int> row_tokens(const tasks::Rows& rows) { return tasks::argmax_tokens(rows); }

// Stacks row t of every sample into B x width; samples shorter than t
// contribute zeros.
Tensor stack_rows(const std::vector<const tasks::Rows*>& rows, std::size_t t, std::size_t width) {
  std::vector<double> v(rows.size() * width, 0.0);
  for (std::size_t b = 0; b < rows.size(); ++b)
    if (t < rows[b]->size()) std::copy((*rows[b])[t].begin(), (*rows[b])[t].end(), v.begin() + static_cast<long>(b * width));
  return Tensor::constant(rows.size(), width, std::move(v));
}

std::vector<const tasks::Rows*> inputs_of(const std::vector<tasks::Sample>& batch) {
  std::vector<const tasks::Rows*> r;
  for (const auto& s : batch) r.push_back(&s.input);
  return r;
}

dual::TokenBatch token_batch(const std::vector<tasks::Sample>& batch, bool second = false) {
  dual::TokenBatch out;
  for (const auto& s : batch) out.push_back(row_tokens(second ? s.input2 : s.input));
  return out;
}

dual::TokenBatch target_batch(const std::vector<tasks::Sample>& batch) {
  dual::TokenBatch out;
  for (const auto& s : batch) out.push_back(row_tokens(s.target));
  for (const auto& t : out)
    if (t.size() != out[0].size()) throw ShapeError("token batch: targets differ in length");
  return out;
}

// ---- aligned binary tasks ----

class AlignedLearner : public Learner {
 public:
  AlignedLearner(const json& model, const TaskSource& task, std::uint64_t seed)
      : in_(task.input_width()), out_(task.output_width()) {
    Fields f(model);
    kind_ = model.at("kind").get<std::string>();
    if (kind_ == "ntm" || kind_ == "nutm") {
      ntm::NtmConfig c;
      c.input = in_;
      c.output = out_;
      c.hidden = f.size("hidden", c.hidden);
      c.slots = f.size("slots", c.slots);
      c.width = f.size("width", c.width);
      c.read_heads = f.size("read_heads", c.read_heads);
      c.write_heads = f.size("write_heads", c.write_heads);
      if (kind_ == "ntm") {
        ntm_ = std::make_unique<ntm::NtmModel>(c, seed);
      } else {
        nsm::NutmConfig nc;
        nc.core = c;
        nc.programs = f.size("programs", nc.programs);
        nc.key_dim = f.size("key_dim", nc.key_dim);
        nc.hard = f.flag("hard", nc.hard);
        nc.temperature = f.real("temperature", nc.temperature);
        decay_every_ = f.size("decay_every", nsm::kDefaultDecayEvery);
        auto m = std::make_unique<nsm::NutmModel>(nc, seed);
        nutm_ = m.get();
        ntm_ = std::move(m);
      }
    } else if (kind_ == "dnc") {
      dnc::DncConfig c;
      c.input = in_;
      c.output = out_;
      c.hidden = f.size("hidden", c.hidden);
      c.slots = f.size("slots", c.slots);
      c.width = f.size("width", c.width);
      c.read_heads = f.size("read_heads", c.read_heads);
      c.temporal_links = f.flag("temporal_links", c.temporal_links);
      dnc_ = std::make_unique<dnc::DncModel>(c, seed);
    } else if (kind_ == "lstm") {
      std::mt19937_64 rng(seed);
      const std::size_t h = f.size("hidden", 100);
      cell_ = ctrl::LstmCell(own_, "lstm", in_, h, rng);
      head_ = ctrl::Dense(own_, "out", h, out_, rng);
    } else {
      throw ArgumentError("model " + kind_ + " does not run aligned tasks");
    }
    f.done();
  }

  ad::ParameterSet& params() override {
    if (ntm_) return ntm_->params();
    if (dnc_) return dnc_->params();
    return own_;
  }

  Forward forward(const std::vector<tasks::Sample>& batch, std::size_t step) override {
    return run(batch, step, nullptr);
  }

  std::string trace_csv(const tasks::Sample& sample) override {
    if (!nutm_) return Learner::trace_csv(sample);
    std::vector<std::vector<Tensor>> per_step;
    ad::NoGradGuard guard;
    run({sample}, 0, &per_step);
    return nsm::program_attention_csv(per_step);
  }

 private:
  Forward run(const std::vector<tasks::Sample>& batch, std::size_t step, std::vector<std::vector<Tensor>>* attn) {
    const std::size_t B = batch.size();
    std::size_t T = 0;
    for (const auto& s : batch) {
      if (s.input.size() != s.target.size()) throw ShapeError("aligned task: input and target lengths differ");
      T = std::max(T, s.input.size());
    }
    const auto ins = inputs_of(batch);
    ntm::NtmState ns;
    dnc::DncModelState ds;
    ctrl::LstmState ls;
    if (ntm_) ns = ntm_->initial_state(B);
    else if (dnc_) ds = dnc_->initial_state(B);
    else ls = ctrl::lstm_zero_state(cell_, B);

    Forward fwd;
    fwd.outputs.resize(B);
    Tensor loss;
    for (std::size_t t = 0; t < T; ++t) {
      const Tensor x = stack_rows(ins, t, in_);
      Tensor logits;
      if (ntm_) {
        logits = ntm_->step(x, ns);
        if (attn) attn->push_back(nutm_->last_attention());
      } else if (dnc_) {
        logits = dnc_->step(x, ds);
      } else {
        ls = ctrl::lstm_step(cell_, x, ls);
        logits = head_(ls.h);
      }
      std::vector<double> y(B * out_, 0.0), m(B * out_, 0.0);
      bool any = false;
      for (std::size_t b = 0; b < B; ++b) {
        if (t >= batch[b].target.size()) continue;
        std::copy(batch[b].target[t].begin(), batch[b].target[t].end(), y.begin() + static_cast<long>(b * out_));
        if (batch[b].mask[t] > 0.0) {
          std::fill(m.begin() + static_cast<long>(b * out_), m.begin() + static_cast<long>((b + 1) * out_), 1.0);
          any = true;
        }
        std::vector<double> p(out_);
        for (std::size_t j = 0; j < out_; ++j) p[j] = 1.0 / (1.0 + std::exp(-logits.at(b, j)));
        fwd.outputs[b].push_back(std::move(p));
      }
      if (!any) continue;
      const Tensor l = ad::sigmoid_bce_with_logits(logits, Tensor::constant(B, out_, std::move(y)),
                                                   Tensor::constant(B, out_, std::move(m)));
      loss = loss.defined() ? ad::add(loss, l) : l;
    }
    if (!loss.defined()) throw ArgumentError("aligned task: batch has no masked rows");
    fwd.loss = ad::scale(loss, 1.0 / static_cast<double>(B));
    if (nutm_) fwd.loss = nsm::annealed_total_loss(fwd.loss, nutm_->program_regularizer(), step, decay_every_);
    return fwd;
  }

  std::size_t in_, out_;
  std::string kind_;
  std::unique_ptr<ntm::NtmModel> ntm_;
  nsm::NutmModel* nutm_ = nullptr;
  std::size_t decay_every_ = nsm::kDefaultDecayEvery;
  std::unique_ptr<dnc::DncModel> dnc_;
  ad::ParameterSet own_;
  ctrl::LstmCell cell_;
  ctrl::Dense head_;
};

dual::Seq2SeqResult with_predictions(std::vector<Tensor> logits) {
  dual::Seq2SeqResult r;
  r.logits = std::move(logits);
  if (r.logits.empty()) return r;
  const std::size_t B = r.logits[0].rows(), V = r.logits[0].cols();
  r.predictions.assign(B, {});
  for (const auto& l : r.logits)
    for (std::size_t b = 0; b < B; ++b) {
      const auto* row = l.value().data() + b * V;
      r.predictions[b].push_back(static_cast<int>(std::max_element(row, row + V) - row));
    }
  return r;
}

std::unique_ptr<sched::ScheduledDnc> make_scheduled(Fields& f, std::size_t in, std::size_t out, std::uint64_t seed) {
  dnc::DncConfig c;
  c.input = in;
  c.output = out;
  c.hidden = f.size("hidden", c.hidden);
  c.slots = f.size("slots", c.slots);
  c.width = f.size("width", c.width);
  c.read_heads = f.size("read_heads", c.read_heads);
  c.temporal_links = f.flag("temporal_links", c.temporal_links);
  const auto policy = sched::parse_policy(f.text("policy", "regular"));
  const int D = static_cast<int>(f.size("writes", c.slots));
  std::optional<int> L;
  const std::size_t cache = f.size("cache", 0);
  if (cache > 0) L = static_cast<int>(cache);
  return std::make_unique<sched::ScheduledDnc>(c, policy, D, seed, L);
}

// ---- token sequence to token sequence ----

class Seq2SeqLearner : public Learner {
 public:
  Seq2SeqLearner(const json& model, const TaskSource& task, std::uint64_t seed)
      : in_(task.input_width()), out_(task.output_width()) {
    Fields f(model);
    kind_ = model.at("kind").get<std::string>();
    if (kind_ == "dnc") {
      sched_ = make_scheduled(f, in_, out_, seed);
    } else if (kind_ == "dcw") {
      dual::DcwConfig c;
      c.in_vocab = in_;
      c.out_vocab = out_;
      c.embed = f.size("embed", c.embed);
      c.hidden = f.size("hidden", c.hidden);
      c.slots = f.size("slots", c.slots);
      c.width = f.size("width", c.width);
      c.read_heads = f.size("read_heads", c.read_heads);
      dcw_ = std::make_unique<dual::DcwMann>(c, seed);
    } else if (kind_ == "dnc_seq2seq") {
      dual::BaselineConfig c;
      c.in_vocab = in_;
      c.out_vocab = out_;
      c.hidden = f.size("hidden", c.hidden);
      c.slots = f.size("slots", c.slots);
      c.width = f.size("width", c.width);
      c.read_heads = f.size("read_heads", c.read_heads);
      base_ = std::make_unique<dual::DncSeq2Seq>(c, seed);
    } else {
      throw ArgumentError("model " + kind_ + " does not run seq2seq tasks");
    }
    f.done();
  }

  ad::ParameterSet& params() override {
    if (sched_) return sched_->params();
    if (dcw_) return dcw_->params();
    return base_->params();
  }

  Forward forward(const std::vector<tasks::Sample>& batch, std::size_t) override {
    const auto targets = target_batch(batch);
    const std::size_t L = targets[0].size();
    dual::Seq2SeqResult r;
    if (sched_) {
      const auto ins = inputs_of(batch);
      std::vector<Tensor> enc, dec(L, Tensor::constant(batch.size(), in_, 0.0));
      for (std::size_t t = 0; t < batch[0].input.size(); ++t) enc.push_back(stack_rows(ins, t, in_));
      r = with_predictions(sched_->run(enc, dec));
    } else {
      const auto x = token_batch(batch);
      r = dcw_ ? dcw_->run(x, L) : base_->run(x, L);
    }
    Forward fwd;
    fwd.loss = dual::sequence_loss(r, targets);
    fwd.tokens = r.predictions;
    return fwd;
  }

 private:
  std::size_t in_, out_;
  std::string kind_;
  std::unique_ptr<sched::ScheduledDnc> sched_;
  std::unique_ptr<dual::DcwMann> dcw_;
  std::unique_ptr<dual::DncSeq2Seq> base_;
};

// ---- two input views ----

class TwoViewLearner : public Learner {
 public:
  TwoViewLearner(const json& model, const TaskSource& task, std::uint64_t seed)
      : v1_(task.input_width()), v2_(task.input2_width()), out_(task.output_width()) {
    Fields f(model);
    kind_ = model.at("kind").get<std::string>();
    if (kind_ == "dmnc") {
      dual::DmncConfig c;
      c.vocab1 = v1_;
      c.vocab2 = v2_;
      c.out_vocab = out_;
      c.embed = f.size("embed", c.embed);
      c.hidden = f.size("hidden", c.hidden);
      c.slots = f.size("slots", c.slots);
      c.width = f.size("width", c.width);
      c.read_heads = f.size("read_heads", c.read_heads);
      const std::string fusion = f.text("fusion", "late");
      if (fusion != "late" && fusion != "early") throw ArgumentError("dmnc fusion must be late or early");
      c.fusion = fusion == "late" ? dual::Fusion::Late : dual::Fusion::Early;
      c.cache = f.flag("cache", c.cache);
      dmnc_ = std::make_unique<dual::DmncModel>(c, seed);
    } else if (kind_ == "dnc_concat") {
      dual::BaselineConfig c;
      c.in_vocab = v1_ + v2_;
      c.out_vocab = out_;
      c.hidden = f.size("hidden", c.hidden);
      c.slots = f.size("slots", c.slots);
      c.width = f.size("width", c.width);
      c.read_heads = f.size("read_heads", c.read_heads);
      base_ = std::make_unique<dual::DncSeq2Seq>(c, seed);
    } else {
      throw ArgumentError("model " + kind_ + " does not run two-view tasks");
    }
    f.done();
  }

  ad::ParameterSet& params() override { return dmnc_ ? dmnc_->params() : base_->params(); }

  Forward forward(const std::vector<tasks::Sample>& batch, std::size_t) override {
    const auto targets = target_batch(batch);
    const std::size_t L = targets[0].size();
    auto x1 = token_batch(batch), x2 = token_batch(batch, true);
    dual::Seq2SeqResult r;
    if (dmnc_) {
      auto s = dmnc_->initial_state(batch.size());
      dmnc_->encode(x1, x2, s);
      r = dmnc_->decode_sequence(s, L);
    } else {
      // The second view follows the first in time, in its own token block.
      for (std::size_t b = 0; b < x1.size(); ++b)
        for (int tok : x2[b]) x1[b].push_back(tok + static_cast<int>(v1_));
      r = base_->run(x1, L);
    }
    Forward fwd;
    fwd.loss = dual::sequence_loss(r, targets);
    fwd.tokens = r.predictions;
    return fwd;
  }

  std::string trace_csv(const tasks::Sample& sample) override {
    if (!dmnc_) return Learner::trace_csv(sample);
    ad::NoGradGuard guard;
    auto s = dmnc_->initial_state(1);
    std::vector<dual::WriteGateRecord> trace;
    dmnc_->encode({row_tokens(sample.input)}, {row_tokens(sample.input2)}, s, &trace);
    return dual::write_gate_csv(trace);
  }

 private:
  std::size_t v1_, v2_, out_;
  std::string kind_;
  std::unique_ptr<dual::DmncModel> dmnc_;
  std::unique_ptr<dual::DncSeq2Seq> base_;
};

// ---- real-valued continuation ----

class RegressionLearner : public Learner {
 public:
  RegressionLearner(const json& model, const TaskSource& task, std::uint64_t seed)
      : in_(task.input_width()), out_(task.output_width()) {
    Fields f(model);
    if (model.at("kind") != "dnc") throw ArgumentError("regression tasks run the dnc model only");
    sched_ = make_scheduled(f, in_, out_, seed);
    f.done();
  }

  ad::ParameterSet& params() override { return sched_->params(); }

  Forward forward(const std::vector<tasks::Sample>& batch, std::size_t) override {
    const std::size_t B = batch.size();
    const auto ins = inputs_of(batch);
    std::vector<const tasks::Rows*> tgts;
    for (const auto& s : batch) tgts.push_back(&s.target);
    std::vector<Tensor> enc, dec(batch[0].target.size(), Tensor::constant(B, in_, 0.0));
    for (std::size_t t = 0; t < batch[0].input.size(); ++t) enc.push_back(stack_rows(ins, t, in_));
    const auto preds = sched_->run(enc, dec);
    Forward fwd;
    fwd.outputs.resize(B);
    Tensor loss;
    for (std::size_t t = 0; t < preds.size(); ++t) {
      const Tensor l = ad::sum(ad::square(ad::sub(preds[t], stack_rows(tgts, t, out_))));
      loss = loss.defined() ? ad::add(loss, l) : l;
      for (std::size_t b = 0; b < B; ++b) fwd.outputs[b].push_back({preds[t].at(b, 0)});
    }
    fwd.loss = ad::scale(loss, 1.0 / static_cast<double>(B));
    return fwd;
  }

 private:
  std::size_t in_, out_;
  std::unique_ptr<sched::ScheduledDnc> sched_;
};

}  // namespace

std::unique_ptr<Learner> make_learner(const json& model, const TaskSource& task, std::uint64_t seed) {
  if (!model.contains("kind")) throw ArgumentError("model needs a kind");
  try {
    switch (task.family()) {
      case Family::Aligned: return std::make_unique<AlignedLearner>(model, task, seed);
      case Family::Seq2Seq: return std::make_unique<Seq2SeqLearner>(model, task, seed);
      case Family::TwoView: return std::make_unique<TwoViewLearner>(model, task, seed);
      case Family::Regression: return std::make_unique<RegressionLearner>(model, task, seed);
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("model: wrong field type: ") + e.what());
  }
  throw ArgumentError("unreachable task family");
}

std::vector<double> score(const std::string& metric, const Forward& fwd, const std::vector<tasks::Sample>& batch,
                          Family family) {
  check_metric_supported(metric, family);
  const MetricKind m = parse_metric(metric);
  std::vector<double> out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& s = batch[b];
    switch (m) {
      case MetricKind::BitError: out.push_back(bit_error(fwd.outputs[b], s.target, s.mask)); break;
      case MetricKind::BitAccuracy: out.push_back(bit_accuracy(fwd.outputs[b], s.target, s.mask)); break;
      case MetricKind::SeqAccuracy: out.push_back(seq_accuracy(fwd.tokens[b], row_tokens(s.target))); break;
      case MetricKind::Nld: out.push_back(nld(fwd.tokens[b], row_tokens(s.target))); break;
      case MetricKind::Mse: out.push_back(mse(fwd.outputs[b], s.target, s.mask)); break;
      case MetricKind::PrecisionAtK: break;
    }
  }
  return out;
}

}  // namespace memkit::harness
