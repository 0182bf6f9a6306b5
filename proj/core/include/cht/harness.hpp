#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cht/dataset.hpp"
#include "cht/trainer.hpp"

namespace cht {

/// Generator, removal, regrowth and schedule of a training method.
struct MethodQuadruple {
  TopologySpec generator;
  RemovalRule removal;
  RegrowthRule regrowth;
  DensitySchedule schedule;
  bool percolate = true;
  bool evolve = true;
};

/// Preset names: chts, chtss, set, rigl, gmp, fc. `epochs` fixes the schedule
/// windows (time unit: epochs). Throws InvalidArgument for unknown names.
MethodQuadruple expand_preset(std::string_view name, double sparsity, std::size_t epochs);
std::vector<std::string> preset_names();

/// Human-readable description of an expanded preset.
std::string explain_preset(std::string_view name, double sparsity, std::size_t epochs);

struct DatasetSpec {
  std::string kind = "idx";  // idx | blobs | moons
  std::string path;          // directory for idx
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  // Synthetic generators.
  std::size_t train_samples = 600;
  std::size_t test_samples = 200;
  std::size_t features = 16;
  int classes = 4;
  double spread = 0.5;
  double noise = 0.1;
  std::uint64_t seed = 0;
};

DatasetSplit load_dataset(const DatasetSpec& spec);

struct ExperimentConfig {
  std::string preset = "chts";
  double sparsity = 0.95;
  MethodQuadruple method;
  TrainConfig train;  // method fields are filled per seed by resolve_train_config()
  double update_interval_epochs = 1.0;
  DatasetSpec dataset;
  std::filesystem::path out = "runs";
  std::vector<std::uint64_t> seeds{0};
};

/// Reads a JSON config. The preset is expanded first; explicit sections then
/// override individual fields.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Config with every field spelled out; parse_config() of it reproduces `config`.
std::string resolved_config_json(const ExperimentConfig& config);

/// Replaces the method by the expansion of `preset` (at the config's sparsity
/// and epoch count).
void apply_preset(ExperimentConfig& config, std::string_view preset);

/// TrainConfig for one seed, with the method and update interval filled in.
TrainConfig resolve_train_config(const ExperimentConfig& config, std::size_t train_samples,
                                 std::uint64_t seed);

struct SummaryStat {
  std::string metric;
  double mean = 0.0;
  double stderr_ = 0.0;  // standard error of the mean over seeds
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<SummaryStat> summary;
};

/// Trains once per seed. Writes into config.out:
///   resolved_config.json, summary.csv, summary.json and per seed
///   seed_<s>/{run.json, epochs.csv, metrics.csv, mask_trace.csv, layer<k>.bpmk}.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::vector<SummaryStat> summarize(const std::vector<RunRecord>& runs);

void write_epochs_csv(std::ostream& out, const RunRecord& run);
void write_metrics_csv(std::ostream& out, const RunRecord& run);
void write_mask_trace_csv(std::ostream& out, const RunRecord& run);

}  // namespace cht
