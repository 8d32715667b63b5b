#pragma once

#include "fadecast/types.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fadecast {

// Column mapping for per-cell cycling CSVs.
struct CsvSchema {
    std::string time = "time_s";
    std::string current = "current_a";
    std::string voltage = "voltage_v";
    std::string temperature = "temperature_c";
};

// Reads one cell's cycling CSV and computes the derived streams.
// Throws SchemaError for missing columns, DataError for non-monotonic time
// (naming the first offending row) or non-finite values.
CellRecord parse_cycling_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

// Attaches the per-cycle discharge capacity series
// (columns: cycle_index, discharge_capacity_ah, end_time_s).
void load_capacity_csv(CellRecord& cell, const std::filesystem::path& path);

struct ManifestEntry {
    std::string cell_id;
    std::filesystem::path cycling_csv;
    std::filesystem::path capacity_csv;
    double nominal_capacity = 0.0;
    std::string batch;
};

// Manifest CSV: cell_id, cycling_csv, capacity_csv, nominal_capacity_ah,
// batch. Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

std::vector<CellRecord> load_population(const std::filesystem::path& manifest,
                                        const CsvSchema& schema = {}, int workers = 1);

// First time the capacity series crosses below threshold_ah, linearly
// interpolated; uses the resampled smoothed series when present, otherwise
// the per-cycle measurements.
std::optional<double> eol_time(const CellRecord& cell, double threshold_ah);

struct CleanOptions {
    double min_life_days = 15.0;
    double max_life_days = 40.0;
    double eol_fraction = 0.8; // of nominal capacity
    std::vector<std::string> excluded_ids;
};

struct CleanReport {
    std::size_t input = 0;
    std::size_t retained = 0;
    std::size_t dropped_excluded = 0;
    std::size_t dropped_lifetime = 0;
};

// Drops excluded cells and cells whose end of life falls outside the
// lifetime window. Throws PopulationError when nothing survives.
std::vector<CellRecord> clean_population(std::vector<CellRecord> cells, const CleanOptions& opts,
                                         CleanReport* report = nullptr);

// Resamples the per-cycle capacity onto a Δt grid over the cell's data span
// (nearest cycle end per boundary) and applies a centered moving average of
// odd width `window`, shrinking symmetrically at the boundaries. A trailing
// partial interval of at least Δt/2 gets its own boundary; shorter tails are
// discarded.
void compute_capacity_series(CellRecord& cell, double dt_s, int window);

// One chunk per consecutive capacity-point pair.
std::vector<Chunk> chunk_cell(const CellRecord& cell, double dt_s);

// Copy of the cell keeping only data at or before t_cut (limited-data
// trials).
CellRecord truncate_cell(const CellRecord& cell, double t_cut);

} // namespace fadecast
