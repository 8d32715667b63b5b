#pragma once

#include "fadecast/types.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fadecast {

// One entry of the enumerated feature scheme: either the proportion of
// chunk time a stream spends inside a percentile range, or one of the two
// time features.
struct FeatureType {
    enum class Kind { range, time, sqrt_time };
    Kind kind = Kind::range;
    StreamKind stream = StreamKind::voltage;
    int lo = 0; // percentile indices, valid for range features
    int hi = 0;
    std::string label;
};

// Population-derived percentile thresholds plus the enumerated feature
// types. Immutable once built.
struct FeatureCatalog {
    std::vector<double> percentiles; // fractions, strictly increasing, in (0,1)
    std::array<std::vector<double>, kStreamCount> thresholds;
    std::vector<FeatureType> feature_types;
    std::vector<StreamKind> degenerate_streams; // zero-variance warning

    std::size_t feature_count() const { return feature_types.size(); }
    std::vector<std::string> feature_names() const;
    // Index of the calendar-time feature.
    std::size_t time_feature_index() const;

    // Fills feature_types from the percentile list: all index pairs i<j per
    // stream, then time and sqrt_time.
    void enumerate_feature_types();
};

// Pools every sample of the training cells per stream and takes exact
// order-statistic percentiles (linear interpolation between ranks).
FeatureCatalog build_catalog(std::span<const CellRecord* const> training_cells,
                             std::vector<double> percentiles = {0.01, 0.33, 0.67, 0.99});
FeatureCatalog build_catalog(std::span<const CellRecord> training_cells,
                             std::vector<double> percentiles = {0.01, 0.33, 0.67, 0.99});

struct FeatureRow {
    std::string cell_id;
    std::size_t chunk_index = 0;
    double t_end = 0.0; // seconds
    std::vector<double> values;
    double target = 0.0; // delta_q, Ah
};

// Per-chunk feature values: time-in-range by trapezoidal crossing
// interpolation with half-open [lo, hi) ranges, divided by the chunk
// duration; time features taken at the chunk end, in days.
std::vector<FeatureRow> compute_features(const CellRecord& cell, std::span<const Chunk> chunks,
                                         const FeatureCatalog& catalog);

struct ReductionSummary {
    std::size_t n_time_points = 0;
    std::size_t m_streams = kStreamCount;
    std::size_t p_rows = 0;
    std::size_t q_features = 0;
};

struct FeatureTable {
    FeatureCatalog catalog;
    std::vector<std::string> feature_names;
    std::vector<FeatureRow> rows;

    // Dense views for selection / regression.
    Eigen::MatrixXd feature_matrix(std::span<const std::size_t> columns) const;
    Eigen::MatrixXd feature_matrix() const;
    Eigen::VectorXd targets() const;
    std::vector<double> column(std::size_t j) const;
};

// Chunks and featurizes every cell, concatenating rows in cell order.
FeatureTable assemble_table(std::span<const CellRecord* const> cells, const FeatureCatalog& catalog,
                            double dt_s, ReductionSummary* summary = nullptr, int workers = 1);
FeatureTable assemble_table(std::span<const CellRecord> cells, const FeatureCatalog& catalog,
                            double dt_s, ReductionSummary* summary = nullptr, int workers = 1);

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
void write_catalog_csv(const FeatureCatalog& catalog, const std::filesystem::path& path);

} // namespace fadecast
