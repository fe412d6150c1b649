#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "memkit/controllers/cells.hpp"
#include "memkit/dnc/dnc.hpp"
#include "memkit/vmed/latent.hpp"

namespace memkit::vmed {

struct VmedConfig {
  std::size_t vocab = 0;
  std::size_t hidden = 64;
  std::size_t slots = 16;
  std::size_t latent = 8;
  std::size_t modes = 3;  // one prior mode per read head
};

struct VmedLoss {
  Tensor total;      // (kl_weight * sum D_var + NLL) / B
  double kl = 0.0;   // sum over batch and steps
  double nll = 0.0;  // sum over batch and steps
};

// Memory-augmented encoder-decoder with a mixture prior read from memory
// and a Gaussian posterior from an utterance encoder over the response.
class VmedModel {
 public:
  VmedModel(const VmedConfig& cfg, std::uint64_t seed);

  const VmedConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }

  // Contexts and targets hold B token sequences; lengths must agree within
  // each group.
  VmedLoss loss(const std::vector<std::vector<int>>& contexts, const std::vector<std::vector<int>>& targets,
                double kl_weight, std::mt19937_64& rng);

  // Samples z_t from the prior, feeds back the argmax token. sigma_scale
  // multiplies every prior standard deviation.
  std::vector<int> generate(const std::vector<int>& context, std::size_t length, std::uint64_t seed,
                            double sigma_scale = 1.0);

 private:
  Tensor one_hot(const std::vector<std::vector<int>>& seqs, std::size_t t, bool with_latent_pad) const;
  dnc::DncModelState encode(const std::vector<std::vector<int>>& contexts);

  VmedConfig cfg_;
  std::mt19937_64 rng_;
  dnc::DncModel core_;
  ad::ParameterSet params_;
  ctrl::LstmCell utterance_;
  ctrl::Dense post_mu_, post_sigma_;
};

}  // namespace memkit::vmed
