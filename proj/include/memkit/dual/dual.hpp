#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "memkit/controllers/cells.hpp"
#include "memkit/dnc/dnc.hpp"

namespace memkit::dual {

using ad::Tensor;
using TokenBatch = std::vector<std::vector<int>>;  // B sequences of equal length

struct Seq2SeqResult {
  std::vector<Tensor> logits;            // one B x vocab tensor per decode step
  TokenBatch predictions;                // B x decode_len argmax tokens
  std::vector<Tensor> memory_snapshots;  // memory after every decode step, when requested
};

// Sum over steps of cross entropy, averaged over the batch.
Tensor sequence_loss(const Seq2SeqResult& result, const TokenBatch& targets);

// Encoder and decoder LSTMs sharing one DNC memory; the decoder is fed its
// own previous argmax prediction and never writes.
struct DcwConfig {
  std::size_t in_vocab = 0, out_vocab = 0;
  std::size_t embed = 16, hidden = 64, slots = 16, width = 16, read_heads = 1;
};

class DcwMann {
 public:
  DcwMann(const DcwConfig& cfg, std::uint64_t seed);
  ad::ParameterSet& params() { return params_; }
  Seq2SeqResult run(const TokenBatch& inputs, std::size_t decode_len, bool keep_snapshots = false) const;

 private:
  DcwConfig cfg_;
  ad::ParameterSet params_;
  std::mt19937_64 rng_;
  ctrl::Dense embed_in_, embed_out_;
  ctrl::LstmCell encoder_, decoder_;
  dnc::DncInterface enc_iface_, dec_iface_;
  ctrl::Dense out_;
};

// Single-controller DNC with regular writing at every step. Encoding inputs
// and fed-back predictions occupy separate one-hot blocks of one input.
struct BaselineConfig {
  std::size_t in_vocab = 0, out_vocab = 0;
  std::size_t hidden = 64, slots = 16, width = 16, read_heads = 1;
};

class DncSeq2Seq {
 public:
  DncSeq2Seq(const BaselineConfig& cfg, std::uint64_t seed);
  ad::ParameterSet& params() { return model_.params(); }
  Seq2SeqResult run(const TokenBatch& inputs, std::size_t decode_len, bool keep_snapshots = false) const;

 private:
  BaselineConfig cfg_;
  dnc::DncModel model_;
};

enum class Fusion { Late, Early };
enum class OutputKind { Sequence, Set };

struct DmncConfig {
  std::size_t vocab1 = 0, vocab2 = 0, out_vocab = 0;
  std::size_t embed = 16, hidden = 32, slots = 16, width = 16, read_heads = 1;
  Fusion fusion = Fusion::Late;
  OutputKind output = OutputKind::Sequence;
  bool cache = true;                         // early fusion writes through the cache
  std::optional<double> forced_cache_gate;   // pins g^c, for analysis
};

struct DmncState {
  std::array<ctrl::LstmState, 2> enc;
  std::array<dnc::DncState, 2> mem;
  std::array<std::vector<Tensor>, 2> joint_w_read;  // early fusion: B x 2N per head
  std::array<std::vector<Tensor>, 2> reads;
  std::array<Tensor, 2> cache;
  std::array<std::size_t, 2> steps{0, 0};
};

struct WriteGateRecord {
  int view = 0;
  std::size_t step = 0;
  double gate = 0.0;  // batch row 0
};

class DmncModel {
 public:
  DmncModel(const DmncConfig& cfg, std::uint64_t seed);
  const DmncConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }

  DmncState initial_state(std::size_t batch) const;
  // Fresh controllers, caches and reads; memories kept.
  void reset_controllers(DmncState& s) const;

  // view is 1 or 2.
  void encode_step(int view, const std::vector<int>& tokens, DmncState& s,
                   std::vector<WriteGateRecord>* trace = nullptr) const;
  // Alternates the two views until both are consumed.
  void encode(const TokenBatch& x1, const TokenBatch& x2, DmncState& s,
              std::vector<WriteGateRecord>* trace = nullptr) const;

  Seq2SeqResult decode_sequence(const DmncState& s, std::optional<std::size_t> decode_len) const;
  Tensor decode_set(const DmncState& s) const;  // B x out_vocab logits

 private:
  void read_joint(int view, const dnc::DncEmission& e, DmncState& s) const;

  DmncConfig cfg_;
  ad::ParameterSet params_;
  std::mt19937_64 rng_;
  std::array<ctrl::Dense, 2> embed_;
  ctrl::Dense embed_out_;
  std::array<ctrl::LstmCell, 2> encoder_;
  std::array<dnc::DncInterface, 2> iface_;
  dnc::DncInterface shared_read_;  // early fusion read function
  std::array<ctrl::Dense, 2> cache_gate_;
  ctrl::LstmCell decoder_;
  dnc::DncInterface dec_read_;
  ctrl::Dense out_, fd_;
  std::array<ctrl::Dense, 3> set_w_;
};

// -(sum over y in Y of log y_hat + sum over y not in Y of log(1 - y_hat)),
// averaged over the batch. labels[b] lists the members of Y.
Tensor set_loss(const Tensor& logits, const TokenBatch& labels);

struct Episode {
  TokenBatch x1, x2, y;
};

// Memories are cleared once, then carried across the episodes; controllers
// restart every episode. Returns one loss per episode.
std::vector<Tensor> persistent_episode_run(const DmncModel& model, const std::vector<Episode>& episodes,
                                           std::vector<DmncState>* states_after = nullptr);

std::string write_gate_csv(const std::vector<WriteGateRecord>& trace);

}  // namespace memkit::dual
