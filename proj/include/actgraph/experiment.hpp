#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "actgraph/graph.hpp"
#include "actgraph/inference.hpp"
#include "actgraph/metrics.hpp"
#include "actgraph/ranker.hpp"
#include "actgraph/ranking.hpp"
#include "actgraph/trainer.hpp"

namespace actgraph {

struct DatasetPaths {
  std::filesystem::path inputs;
  std::filesystem::path labels;
};

struct DnnTrainingConfig {
  std::filesystem::path spec;
  TrainOptions options;  // options.seed is derived from the experiment seed
};

/// Mixes naturally corrupted cases into the validation and test sets.
struct CorruptionConfig {
  std::vector<std::string> ops;
  std::size_t test_clean = 800;
  std::size_t test_corrupted = 200;
  /// Defaults to the validation set size.
  std::optional<std::size_t> validation_corrupted;
};

struct ExperimentConfig {
  std::optional<std::filesystem::path> model;
  std::optional<DnnTrainingConfig> train_dnn;
  std::optional<DatasetPaths> train;  // required by train_dnn and dsa
  DatasetPaths validation;
  DatasetPaths test;
  Method method = Method::kActGraph;
  FeatureOptions features;
  BoosterParams ranker;
  std::size_t balance_per_class = 200;
  std::optional<CorruptionConfig> corruption;
  std::vector<Cutoff> cutoffs{Cutoff{100}, Cutoff{500}, Cutoff{1000}, Cutoff::all()};
  std::uint64_t seed = 42;
  std::size_t threads = 1;

  /// Relative paths are resolved against `base_dir`.
  static ExperimentConfig from_json(const std::string& text, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_json() const;
};

struct StageRecord {
  std::string name;
  double millis = 0.0;
  std::size_t forward_calls = 0;
};

struct ExperimentReport {
  Method method = Method::kActGraph;
  std::uint64_t seed = 0;
  std::vector<std::pair<Cutoff, double>> rauc;
  std::vector<StageRecord> stages;
  RankedList ranking;  // over the assembled test set, with fault flags
  std::size_t validation_cases = 0;
  std::size_t validation_faults = 0;
  std::size_t test_cases = 0;
  std::size_t test_faults = 0;
  std::string config_json;

  const StageRecord* stage(std::string_view name) const;
  double rauc_at(Cutoff cutoff) const;

  /// Timings live under "timings_ms" only, so dropping that key leaves a
  /// seed-deterministic document.
  std::string to_json(bool include_timings = true) const;
  std::string rauc_csv() const;
  std::string ranking_csv() const;
};

/// Normalise weights once, extract per-case features and fault labels on
/// the validation set, balance, fit the ranker, then score and rank the
/// test set and compute RAUC at every cutoff.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// report.json, rauc.csv, scores.csv and ranking.csv.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Independent seed stream for one pipeline stage.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace actgraph
