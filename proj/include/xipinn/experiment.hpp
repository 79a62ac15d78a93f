#pragma once

// Experiment configuration (JSON), model checkpoints and the end-to-end
// training driver shared by the command-line tool and the acceptance suite.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "xipinn/flowmap.hpp"
#include "xipinn/metrics.hpp"
#include "xipinn/ntk.hpp"

namespace xipinn {

/// Invalid configuration. what() lists one "path: problem" per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::vector<std::string>& problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class LevelSetMode { analytic, neural };

struct ExperimentConfig {
  std::string benchmark = "ex1";
  std::uint64_t seed = 0;
  std::vector<int> hidden{32, 32, 32};
  std::string extension = "auto";  // auto | indicator | abs_level_set
  SamplePlan samples;
  lm::LmConfig lm;
  BlockWeights weights;
  LevelSetMode level_set_mode = LevelSetMode::analytic;
  std::string level_set_checkpoint;  // neural mode: load instead of fitting
  LevelSetLearnConfig level_set;
  int test_resolution = 0;  // 0: 101 in 2D, 41 in 3D
  int test_times = 11;
  int export_resolution = 41;
  int export_times = 3;
  int ntk_width = 512;
  NtkCounts ntk_counts;
  double ntk_eps = 1e-6;
  bool ntk_full_spectrum = true;
  std::string out = "run";

  int effective_test_resolution(int dim) const;
};

/// Parses and validates. Relative checkpoint paths resolve against base_dir.
/// Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
/// Range checks only (parse_config calls it). Throws ConfigError.
void validate_config(const ExperimentConfig& cfg);
/// Complete canonical form; parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& cfg);
/// 64-bit FNV-1a of the canonical JSON text.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::uint64_t fnv1a(std::string_view bytes);

ExtensionKind resolve_extension(const ExperimentConfig& cfg, const Benchmark& bench);
/// Solver network with inputs (x, t, z) for the benchmark.
net::Mlp make_solver_net(const ExperimentConfig& cfg, const Benchmark& bench);

struct PreparedLevelSet {
  LevelSetField field;
  std::optional<LevelSetLearnResult> learned;  // set when fitted here
};
/// Closed form, a loaded checkpoint, or a fresh neural fit.
PreparedLevelSet prepare_level_set(const ExperimentConfig& cfg, const Benchmark& bench);

struct TrainOutcome {
  net::Mlp net;
  ExtensionKind kind = ExtensionKind::indicator;
  lm::LmTrace trace;
  ErrorReport report;
  Eigen::Index rows = 0;
  int excluded_interior = 0;
};

/// Samples, builds the residual system, runs LM and evaluates on the test grid.
TrainOutcome train_experiment(const ExperimentConfig& cfg, const Benchmark& bench, const LevelSetField& ls);

/// Error report of a network on the configured test grid.
ErrorReport evaluate_network(const ExperimentConfig& cfg, const Benchmark& bench, const LevelSetField& ls,
                             ExtensionKind kind, const net::Mlp& net);

struct ModelCheckpoint {
  std::string benchmark;
  ExtensionKind kind = ExtensionKind::indicator;
  LevelSetMode level_set_mode = LevelSetMode::analytic;
  net::Mlp net;
};

/// "xipinn-model 1" header followed by the network block.
void save_model(std::ostream& os, const ModelCheckpoint& m);
/// Throws std::runtime_error on a malformed file.
ModelCheckpoint load_model(std::istream& is);

}  // namespace xipinn
