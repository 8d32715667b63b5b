#pragma once

#include "fadecast/gpr.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fadecast {

// Cumulative capacity forecast; index 0 is the known starting capacity.
struct TrajectoryForecast {
    std::string cell_id;
    std::vector<double> times;  // seconds, strictly increasing
    std::vector<double> q_pred; // Ah
    std::vector<double> q_sd;   // Ah, zero at index 0
    std::vector<double> q_observed; // empty when unavailable
    std::optional<double> eol_pred;  // seconds
    std::optional<double> knee_pred; // seconds
};

// Sums transition predictions onto the known initial capacity; step
// variances accumulate under an independence assumption (intervals are
// known to be overconfident; reports flag this).
TrajectoryForecast integrate(double initial_q, double t0, std::span<const double> step_times,
                             std::span<const Prediction> predictions);

// First interpolated crossing below the threshold, or nullopt.
std::optional<double> eol_crossing(std::span<const double> times, std::span<const double> q,
                                   double threshold);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Geometry of the knee construction, all in coordinates normalized to
// [0,1] x [0,1] over the input trajectory.
struct KneeGeometry {
    LineFit early_fit;
    LineFit late_fit;
    LineFit bisector;
    double knee_time = 0.0;       // seconds, de-normalized
    double knee_normalized = 0.0; // position in [0,1]
    // A battery knee accelerates: |late slope| > |early slope|.
    bool is_acceleration() const;
};

struct KneeOptions {
    double early_frac = 0.3;
    double late_frac = 0.1;
    double min_angle_deg = 1.0; // below this the fits count as parallel
};

// Fits early/late linear regimes in normalized coordinates, finds their
// interior angle bisector, and snaps the bisector's crossing of the curve
// to the nearest trajectory point. Returns nullopt for near-parallel fits
// (no knee); throws KneeError when a fit window has fewer than 3 points.
// The input should already be truncated at its end-of-life crossing.
std::optional<KneeGeometry> knee_point(std::span<const double> times, std::span<const double> q,
                                       const KneeOptions& options = {});

// Keeps points with t <= t_cut and appends the interpolated boundary point.
void truncate_series(std::vector<double>& times, std::vector<double>& values, double t_cut);

void write_trajectory_csv(const TrajectoryForecast& traj, const std::filesystem::path& path);

} // namespace fadecast
