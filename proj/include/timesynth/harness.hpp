#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "timesynth/metrics.hpp"
#include "timesynth/metrics_table.hpp"
#include "timesynth/models.hpp"
#include "timesynth/perturb.hpp"
#include "timesynth/signal_gen.hpp"
#include "timesynth/trainer.hpp"
#include "timesynth/windows.hpp"

namespace timesynth {

// One evaluation condition. Labels: "clean", "noise:<dB>", "shift:<id>".
struct Occasion {
  enum class Kind { Clean, Noise, Shift };

  Kind kind = Kind::Clean;
  double snr_db = 0.0;
  ShiftId shift = ShiftId::None;

  static Occasion clean() { return {}; }
  static Occasion noise(double snr_db) { return {Kind::Noise, snr_db, ShiftId::None}; }
  static Occasion shifted(ShiftId id) { return {Kind::Shift, 0.0, id}; }
  static Occasion parse(std::string_view label);

  std::string label() const;
  bool operator==(const Occasion& o) const { return label() == o.label(); }
};

// clean, noise at 40/30/20 dB, and the four shifted bands.
std::vector<Occasion> default_occasions();
std::vector<Occasion> parse_occasions(std::string_view comma_list);

struct ModelSpec {
  std::string name;  // unique within a plan; used in file names and tables
  models::ModelConfig model;
  TrainConfig train;

  // Default architecture and training settings for `kind`.
  static ModelSpec defaults(models::ModelKind kind, std::size_t history = 50, std::size_t horizon = 100);
};

struct ExperimentPlan {
  std::vector<Family> families{kAllFamilies.begin(), kAllFamilies.end()};
  std::vector<ModelSpec> models;
  std::vector<Occasion> occasions{Occasion::clean()};
  std::map<Family, FamilyRanges> ranges;  // missing families use their defaults
  SamplingGrid grid;
  SplitSizes sizes;
  std::size_t shift_series = 20;  // test series per shifted set
  WindowingPolicy windows;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;  // concurrent training tasks

  FamilyRanges ranges_for(Family family) const;
  void validate() const;
};

std::uint64_t dataset_seed(std::uint64_t plan_seed, Family family);
std::uint64_t shift_seed(std::uint64_t plan_seed, Family family, ShiftId id);

// Clean and shifted datasets for a plan, generated in memory or read from
// <root>/<family>/{clean,shift1,...}.
class DatasetCatalog {
 public:
  static DatasetCatalog generate(const ExperimentPlan& plan);

  // Reads what is on disk; a missing or mismatching dataset raises ConfigError
  // unless `generate_missing`, in which case it is built and written.
  static DatasetCatalog load(const ExperimentPlan& plan, const std::filesystem::path& root,
                             bool generate_missing);

  // Writes every dataset; datasets already on disk with the same manifest are
  // left untouched. Returns the directories that were written.
  std::vector<std::filesystem::path> write(const std::filesystem::path& root) const;

  const Dataset& clean(Family family) const;
  const Dataset& shifted(Family family, ShiftId id) const;
  bool has_shifted(Family family, ShiftId id) const;

  static std::filesystem::path clean_dir(const std::filesystem::path& root, Family family);
  static std::filesystem::path shift_dir(const std::filesystem::path& root, Family family, ShiftId id);

 private:
  std::map<Family, Dataset> clean_;
  std::map<std::pair<Family, ShiftId>, Dataset> shifted_;
};

// Expected datasets for a plan (manifests only matter for idempotence checks).
Dataset expected_clean(const ExperimentPlan& plan, Family family);
Dataset expected_shifted(const ExperimentPlan& plan, Family family, ShiftId id);

struct SeriesResult {
  std::string series_id;
  metrics::SeriesScore score;
};

struct TrainSummary {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_mse = 0.0;
  bool early_stopped = false;
  std::size_t train_windows = 0;
  std::size_t val_windows = 0;
  std::uint64_t init_seed = 0;
  std::uint64_t shuffle_seed = 0;
};

struct ForecastReport {
  Family family = Family::Drift;
  std::string model;
  Occasion occasion;
  bool ok = false;
  std::string error;
  std::vector<SeriesResult> series;
  metrics::AggregateScore aggregate;
  std::vector<double> horizon_mse;  // index h-1 for h = 1..F
  TrainSummary training;
  std::uint64_t noise_seed = 0;

  std::string cell_id() const;
};

struct TrainedModel {
  std::unique_ptr<models::Forecaster> model;
  TrainSummary summary;
  std::vector<std::string> train_ids;  // series seen in training (train + validation)
};

// Trains on the clean train split (windows pooled over series, train stride)
// and early-stops on the clean validation split (eval stride).
TrainedModel train_for_family(const ExperimentPlan& plan, const DatasetCatalog& data, Family family,
                              const ModelSpec& spec);

// Evaluation series for an occasion: the clean test split, its noisy copy,
// or a shifted test set.
std::vector<SeriesRecord> evaluation_series(const ExperimentPlan& plan, const DatasetCatalog& data,
                                            Family family, const Occasion& occasion);

ForecastReport evaluate_cell(const ExperimentPlan& plan, const DatasetCatalog& data, Family family,
                             const ModelSpec& spec, const TrainedModel& trained, const Occasion& occasion);

// Trains and evaluates a single cell.
ForecastReport run_cell(const ExperimentPlan& plan, const DatasetCatalog& data, Family family,
                        const ModelSpec& spec, const Occasion& occasion);

struct PlanResult {
  std::vector<ForecastReport> cells;  // family-major, then model, then occasion
  std::map<std::pair<Family, std::string>, TrainedModel> trained;

  bool complete() const;
  std::vector<MetricsRow> metrics_rows() const;
};

// Trains once per (family, model) and evaluates every occasion. Training
// tasks run concurrently up to plan.jobs; failures are recorded per cell.
PlanResult run_plan(const ExperimentPlan& plan, const DatasetCatalog& data);

nlohmann::json plan_to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const ForecastReport& report);

// Writes metrics.csv, cells/<id>.json, models/<family>/model_<name>.json,
// plan.json and bundle.json under `dir`, each file atomically.
void write_bundle(const PlanResult& result, const ExperimentPlan& plan, const std::filesystem::path& dir);

// Mean/median table, one row per cell.
std::string format_summary(const PlanResult& result);

std::string cell_file_name(Family family, std::string_view model, const Occasion& occasion);

}  // namespace timesynth
