#pragma once

#include "fadecast/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace fadecast {

// Cycling template: charge ramp to v_max, optional hold at v_max, discharge
// ramp back to v_min. Hold fraction is jittered per cell so that usage
// genuinely varies across a population.
struct UsageTemplate {
    std::string name = "default";
    double charge_rate_c = 6.0;
    double discharge_rate_c = 4.0;
    double v_min = 2.0;
    double v_max = 3.6;
    double hold_fraction = 0.25; // fraction of the cycle held at v_max
    double hold_jitter = 0.20;   // uniform +- jitter applied per cell
};

struct SynthSpec {
    int n_cells = 40;
    double dt_s = 43200.0;
    std::array<double, 2> life_range_days = {15.0, 40.0};
    std::array<double, 2> knee_fraction_range = {0.4, 0.8};
    std::array<double, 2> early_slope_range = {0.003, 0.006}; // Ah/day fade magnitude
    std::array<double, 2> late_slope_range = {0.014, 0.024};
    std::vector<UsageTemplate> usage_profiles; // empty = built-in pair
    double noise_sd = 0.002; // Ah, on measured capacity
    std::uint64_t seed = 1;
    double sample_period_s = 120.0;
    double nominal_capacity = 1.1;
    double eol_fraction = 0.8;
    double horizon_days = 60.0; // hard simulation limit
};

struct SynthTruth {
    std::string cell_id;
    double true_knee_time = 0.0; // seconds
    double true_eol_time = 0.0;  // seconds
    std::vector<double> times;   // Δt grid, seconds
    std::vector<double> true_capacity;
    double early_slope = 0.0; // Ah/day
    double late_slope = 0.0;
    double usage_fraction = 0.0; // time fraction above the mid-voltage threshold
};

struct SynthPopulation {
    std::vector<CellRecord> cells;
    std::vector<SynthTruth> truths;
};

// Deterministic given spec.seed; per-cell RNG streams make the result
// independent of worker count.
SynthPopulation generate_population(const SynthSpec& spec, int workers = 1);

// Writes the CSV + manifest layout that `load_population` reads, plus
// truth.csv / truth_capacity.csv for reference.
void write_population(const SynthPopulation& pop, const std::filesystem::path& dir);

} // namespace fadecast
