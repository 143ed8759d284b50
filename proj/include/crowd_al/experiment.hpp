#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "crowd_al/bandit.hpp"
#include "crowd_al/crowd.hpp"
#include "crowd_al/dataset_io.hpp"
#include "crowd_al/features.hpp"
#include "crowd_al/mechanism.hpp"
#include "crowd_al/records.hpp"

namespace crowd_al {

enum class Strategy {
  robust_ucb,     // score-maximizing instance, Robust-UCB annotator
  random,         // uniform instance, uniform annotator
  instance_only,  // score-maximizing instance, uniform annotator
  single_source,  // score-maximizing instance, one near-noiseless annotator
};

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s);

struct AnnotatorSpec {
  std::size_t m = 50;
  std::size_t good = 40;
  Interval interval_good{0.1, 1.0};
  Interval interval_bad{1.0, 2.0};
};

struct StrategicSpec {
  bool enabled = false;
  CostKind cost_kind = CostKind::quadratic;
  double a = 0.01;
  double b = 0.0;
  double knee = 0.0;
  std::size_t grid = 1000;
};

struct ExperimentConfig {
  /// Empty path selects the built-in synthetic dataset.
  std::string dataset_path;
  TransformKind transform_kind = TransformKind::sigmoid;
  std::vector<double> s_grid{1.0};
  double test_fraction = 0.3;
  std::size_t seed_pool_size = 10;
  AnnotatorSpec annotators;
  std::size_t budget = 100;
  Strategy strategy = Strategy::robust_ucb;
  std::optional<double> u;
  std::optional<double> sigma_max;  // defaults to interval_bad.hi
  DeltaPolicy delta_policy = DeltaPolicy::fixed_horizon;
  PaymentScheme scheme{1.0, 0.25, 4.0};
  StrategicSpec strategic;
  std::size_t repetitions = 1;
  std::uint64_t base_seed = 1;
  std::string output_path;
  RecordFormat format = RecordFormat::csv;
  std::optional<double> target_rmse;
  double single_source_sigma = 0.01;
  std::size_t initial_sweeps = 200;
  std::size_t round_sweeps = 50;
  double tolerance = 1e-6;
  bool uncorrected_gamma_update = false;

  /// Throws InvalidInput on out-of-range fields.
  void validate() const;
};

/// Reads a JSON object whose keys mirror the ExperimentConfig field names.
/// Unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// √(mean squared error). Throws InvalidInput on empty or mismatched input.
double rmse(const Vector& predicted, const Vector& truth);

/// One train/test split after normalization and the feature transform.
struct PreparedSplit {
  Matrix train;
  Vector train_targets;
  std::vector<std::size_t> train_ids;  // row ids in the raw dataset
  Matrix test;
  Vector test_targets;
  std::vector<std::size_t> test_ids;
  TransformSpec spec;
};

/// Seeded split, normalization fitted on the training rows, sigmoid centers
/// from k-means on the normalized training rows (k = input dimension), and
/// the scale picked from `s_grid` by validation RMSE when it has >1 entry.
PreparedSplit prepare_split(const RawDataset& raw, const ExperimentConfig& config,
                            std::uint64_t seed);

struct RepetitionSummary {
  std::size_t rep = 0;
  std::size_t rounds = 0;
  double initial_rmse = 0.0;
  double final_rmse = 0.0;
  double regret = 0.0;
  std::size_t discarded = 0;
  double paid = 0.0;
  bool truncated = false;
  std::size_t participants = 0;
  std::vector<std::size_t> pulls;  // per participating annotator, active rounds only
};

struct ExperimentResult {
  std::vector<RoundRecord> records;
  std::vector<RepetitionSummary> summaries;
};

/// Seed pool labeled by every participant, then `budget` rounds of instance
/// and annotator selection, each followed by a warm-started refit.
ExperimentResult run_experiment(const ExperimentConfig& config, const RawDataset& raw);
/// Loads `config.dataset_path` or falls back to the synthetic dataset.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct FitSummary {
  std::size_t rep = 0;
  double rmse = 0.0;
  double scale = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
};

/// Whole training pool labeled by every participant, no active learning.
std::vector<FitSummary> run_fit(const ExperimentConfig& config, const RawDataset& raw);

RawDataset load_dataset(const ExperimentConfig& config);

}  // namespace crowd_al
