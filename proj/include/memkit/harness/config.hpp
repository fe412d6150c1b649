#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "memkit/optim/optimizer.hpp"

namespace memkit::harness {

// Reads the TOML subset used by run configs: [table] and [a.b] headers,
// key = value with bare or dotted keys, basic strings, integers, floats,
// booleans, single-line arrays and # comments. Errors name the line.
nlohmann::json parse_toml(const std::string& text);
// Canonical form: scalars first, then sub-tables, keys sorted.
std::string to_toml(const nlohmann::json& doc);

struct RunConfig {
  std::string name;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  std::size_t batch = 1;
  std::size_t eval_every = 100;
  std::size_t eval_samples = 1000;
  std::string out_dir;
  std::vector<std::string> metrics;  // empty: the task family's defaults
  nlohmann::json model = nlohmann::json::object();  // kind + hyperparameters
  nlohmann::json task = nlohmann::json::object();   // kind + generator fields
  optim::OptimizerSpec optimizer;
};

// Applies the [desk_scale] overlay as a merge patch when asked; the overlay
// itself never reaches the RunConfig. Missing run.seed is an error.
RunConfig config_from_json(const nlohmann::json& doc, bool desk_scale = false);
nlohmann::json config_to_json(const RunConfig& cfg);
std::string config_text(const RunConfig& cfg);

// Throws IoError "file not found: <path>" when absent.
RunConfig load_config(const std::filesystem::path& path, bool desk_scale = false);

std::uint64_t fnv1a64(const std::string& bytes);
// Hex FNV-1a of the canonical text with run.out_dir removed, so a moved run
// still matches its checkpoints.
std::string config_hash(const RunConfig& cfg);

}  // namespace memkit::harness
