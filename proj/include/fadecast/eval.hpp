#pragma once

#include "fadecast/trajectory.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fadecast {

// Per-cell accuracy and calibration numbers. Percentage errors keep their
// sign here; summaries take absolute values.
struct CellScore {
    std::string cell_id;
    double rmse_q = 0.0;  // % of nominal capacity
    double rmse_dq = 0.0; // % of nominal capacity
    std::optional<double> pe_eol;  // percent, signed
    std::optional<double> pe_knee; // percent, signed
    std::optional<double> abs_err_eol_days;
    std::optional<double> abs_err_knee_days;
    std::size_t calibration_hits = 0;
    std::size_t calibration_total = 0;
    std::optional<double> eol_pred, eol_obs;   // seconds
    std::optional<double> knee_pred, knee_obs; // seconds
};

struct ObservedReference {
    std::optional<double> eol_time;  // seconds
    std::optional<double> knee_time; // seconds
};

// The forecast must carry q_observed aligned on its time grid.
CellScore score_cell(const TrajectoryForecast& traj, const ObservedReference& observed,
                     double nominal_capacity);

struct MetricSummary {
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;
    std::size_t n = 0;
};

struct TrialSummary {
    MetricSummary rmse_q;
    MetricSummary rmse_dq;
    MetricSummary abs_pe_eol;  // |PE|, percent
    MetricSummary abs_pe_knee; // |PE|, percent
    MetricSummary abs_err_eol_days;
    MetricSummary abs_err_knee_days;
    double calibration = 0.0;
    std::size_t n_cells = 0;
    std::size_t n_trials = 0;
};

TrialSummary summarize(std::span<const CellScore> scores);

// Pooled fraction of observations inside the ±2σ band.
double calibration_score(std::span<const CellScore> scores);

} // namespace fadecast
