#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memkit/autodiff/parameters.hpp"
#include "memkit/optim/optimizer.hpp"

namespace memkit::harness {

inline constexpr const char* kCheckpointMagic = "MEMKIT-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

struct StoredArray {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;
};

struct OptimizerState {
  std::string kind;
  std::size_t steps = 0;
  std::vector<std::vector<double>> slots_a, slots_b;
};

struct Checkpoint {
  std::string config_hash;
  std::size_t step = 0;
  std::vector<StoredArray> params;
  std::optional<OptimizerState> optimizer;
};

Checkpoint capture(const ad::ParameterSet& params, optim::Optimizer* opt, std::size_t step,
                   const std::string& config_hash);
// Names, shapes and optimizer kind must match exactly.
void restore(const Checkpoint& ck, ad::ParameterSet& params, optim::Optimizer* opt);

// Layout: magic line, 8-byte little-endian header length, JSON header
// (version, hash, step, names and shapes, optimizer kind, steps and slot
// sizes), then little-endian float64 payload: parameters, slots a, slots b.
std::string serialize(const Checkpoint& ck);
Checkpoint deserialize(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
// IoError on a missing or corrupt file; VersionError on a format version or
// config hash mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_hash = std::nullopt);

}  // namespace memkit::harness
