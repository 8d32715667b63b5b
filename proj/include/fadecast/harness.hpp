#pragma once

#include "fadecast/eval.hpp"
#include "fadecast/features.hpp"
#include "fadecast/gpr.hpp"
#include "fadecast/ingest.hpp"
#include "fadecast/selection.hpp"
#include "fadecast/synthgen.hpp"
#include "fadecast/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fadecast {

// Knobs shared by every stage of the pipeline.
struct PipelineConfig {
    double dt_hours = 12.0;
    int smoothing_window = 5;
    std::vector<double> percentiles = {0.01, 0.33, 0.67, 0.99};
    double eol_fraction = 0.8;
    KneeOptions knee;

    double dt_seconds() const { return dt_hours * 3600.0; }
};

struct GpConfig {
    int restarts = 5;
    int max_iter = 100;
    std::size_t max_fit_rows = 1000;
};

struct TrialConfig {
    enum class Mode { large_scale, limited_data, feature_sweep };
    Mode mode = Mode::large_scale;
    int n_repeats = 20;
    int n_train = 100;
    int n_test = 30;
    std::size_t k_features = 5;
    double redundancy_threshold = 0.85;
    std::vector<int> limited_full_life_counts = {3, 10, 20, 30};
    std::vector<std::size_t> feature_counts = {1, 2, 3, 4, 5, 10}; // sweep adds a time-only baseline
    std::uint64_t seed = 1;
    int workers = 1;
    PipelineConfig pipeline;
    GpConfig gp;
};

struct RepeatResult {
    std::string setting; // "", "c=3", "k=5", "time"
    int repeat = 0;
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::vector<std::string> selected_features; // in pick order, forced time last
    bool time_forced = false;
    std::vector<CellScore> scores;
    // Heavier artifacts kept for the first repeat of each setting only.
    std::vector<TrajectoryForecast> forecasts;
    std::optional<SimilarityMatrix> similarity;
    std::optional<FeatureCatalog> catalog;
    bool failed = false;
    std::string failure;
};

struct SettingSummary {
    std::string label;
    TrialSummary summary;
};

struct TrialRun {
    TrialConfig config;
    std::vector<RepeatResult> repeats;
    TrialSummary summary;                 // pooled over every scored cell
    std::vector<SettingSummary> settings; // per c (limited) or per k (sweep)
};

// Resamples + smooths the capacity series of every cell in place.
void prepare_population(std::vector<CellRecord>& cells, const PipelineConfig& pipeline,
                        int workers = 1);

// Forecast one cell's full trajectory from its known starting capacity,
// feeding its own recorded usage features through the model.
TrajectoryForecast forecast_cell(const CellRecord& cell, const FeatureCatalog& catalog,
                                 std::span<const std::size_t> selected, const GpModel& model,
                                 const PipelineConfig& pipeline);

// Observed end of life and knee from the cell's smoothed capacity series,
// by the same procedure used on predictions.
ObservedReference observe_reference(const CellRecord& cell, const PipelineConfig& pipeline);

TrialRun run_large_scale(const TrialConfig& config, std::span<const CellRecord> population);
TrialRun run_limited_data(const TrialConfig& config, std::span<const CellRecord> population);
TrialRun run_feature_sweep(const TrialConfig& config, std::span<const CellRecord> population);

void write_trial_outputs(const TrialRun& run, const std::filesystem::path& out_dir);

// Everything forecasting needs in one file: the fitted GP, the feature
// catalog, the selected feature indices, and the pipeline knobs.
struct PipelineModel {
    GpModel gp;
    FeatureCatalog catalog;
    std::vector<std::size_t> selected;
    PipelineConfig pipeline;
};

void save_pipeline_model(const PipelineModel& model, const std::filesystem::path& path);
PipelineModel load_pipeline_model(const std::filesystem::path& path);

// features.csv written by write_feature_csv, parsed back (catalog absent).
FeatureTable read_feature_csv(const std::filesystem::path& path);

} // namespace fadecast
