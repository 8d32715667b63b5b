#include "fadecast/features.hpp"

#include "fadecast/csv.hpp"
#include "fadecast/errors.hpp"
#include "fadecast/ingest.hpp"
#include "fadecast/parallel.hpp"
#include "fadecast/stats.hpp"

#include <algorithm>
#include <cmath>

namespace fadecast {

std::vector<std::string> FeatureCatalog::feature_names() const {
    std::vector<std::string> names;
    names.reserve(feature_types.size());
    for (const auto& f : feature_types) names.push_back(f.label);
    return names;
}

std::size_t FeatureCatalog::time_feature_index() const {
    for (std::size_t i = 0; i < feature_types.size(); ++i)
        if (feature_types[i].kind == FeatureType::Kind::time) return i;
    throw FeatureError("catalog has no time feature");
}

FeatureCatalog build_catalog(std::span<const CellRecord> training_cells,
                             std::vector<double> percentiles) {
    std::vector<const CellRecord*> ptrs;
    ptrs.reserve(training_cells.size());
    for (const auto& c : training_cells) ptrs.push_back(&c);
    return build_catalog(std::span<const CellRecord* const>(ptrs), std::move(percentiles));
}

FeatureCatalog build_catalog(std::span<const CellRecord* const> training_cells,
                             std::vector<double> percentiles) {
    if (training_cells.empty()) throw PopulationError("build_catalog: no training cells");
    if (percentiles.size() < 2) throw ConfigError("build_catalog: need at least 2 percentiles");
    for (std::size_t i = 0; i < percentiles.size(); ++i) {
        if (percentiles[i] <= 0.0 || percentiles[i] >= 1.0)
            throw ConfigError("build_catalog: percentiles must lie in (0,1)");
        if (i > 0 && percentiles[i] <= percentiles[i - 1])
            throw ConfigError("build_catalog: percentiles must be strictly increasing");
    }

    FeatureCatalog catalog;
    catalog.percentiles = std::move(percentiles);

    std::size_t total = 0;
    for (const auto* cell : training_cells) total += cell->samples.size();
    if (total == 0) throw PopulationError("build_catalog: training cells have no samples");

    // One pooled pass per stream keeps peak memory at a single stream copy.
    std::vector<double> pool;
    pool.reserve(total);
    for (StreamKind kind : kAllStreams) {
        pool.clear();
        for (const auto* cell : training_cells)
            for (const auto& s : cell->samples) pool.push_back(s.stream(kind));
        auto [mn, mx] = std::minmax_element(pool.begin(), pool.end());
        if (*mn == *mx) catalog.degenerate_streams.push_back(kind);
        auto& th = catalog.thresholds[static_cast<std::size_t>(kind)];
        th.reserve(catalog.percentiles.size());
        for (double p : catalog.percentiles) th.push_back(quantile_inplace(pool, p));
    }

    catalog.enumerate_feature_types();
    return catalog;
}

void FeatureCatalog::enumerate_feature_types() {
    feature_types.clear();
    const int np = static_cast<int>(percentiles.size());
    for (StreamKind kind : kAllStreams) {
        for (int i = 0; i < np; ++i) {
            for (int j = i + 1; j < np; ++j) {
                FeatureType f;
                f.kind = FeatureType::Kind::range;
                f.stream = kind;
                f.lo = i;
                f.hi = j;
                f.label = std::string(stream_label(kind)) + "_" + std::to_string(i + 1) + "," +
                          std::to_string(j + 1);
                feature_types.push_back(std::move(f));
            }
        }
    }
    FeatureType time_f;
    time_f.kind = FeatureType::Kind::time;
    time_f.label = "time";
    feature_types.push_back(time_f);
    FeatureType sqrt_f;
    sqrt_f.kind = FeatureType::Kind::sqrt_time;
    sqrt_f.label = "sqrt_time";
    feature_types.push_back(sqrt_f);
}

namespace {

// Time a linear segment of duration dt spends strictly below the threshold.
double segment_time_below(double v0, double v1, double dt, double threshold) {
    if (v0 == v1) return v0 < threshold ? dt : 0.0;
    double frac = (threshold - v0) / (v1 - v0);
    if (v1 > v0) return dt * std::clamp(frac, 0.0, 1.0);
    return dt * (1.0 - std::clamp(frac, 0.0, 1.0));
}

} // namespace

std::vector<FeatureRow> compute_features(const CellRecord& cell, std::span<const Chunk> chunks,
                                         const FeatureCatalog& catalog) {
    const std::size_t np = catalog.percentiles.size();
    std::vector<FeatureRow> rows;
    rows.reserve(chunks.size());

    for (const auto& chunk : chunks) {
        if (chunk.cell_id != cell.cell_id)
            throw FeatureError("chunk does not belong to cell " + cell.cell_id);

        // Accumulated time each stream spends below each threshold, built
        // from linear segments clipped to the chunk window. Range values are
        // then differences of these, which makes nested ranges additive by
        // construction.
        std::array<std::vector<double>, kStreamCount> below;
        for (auto& b : below) b.assign(np, 0.0);

        double covered = 0.0;
        std::size_t begin = chunk.first_sample > 0 ? chunk.first_sample - 1 : 0;
        for (std::size_t s = begin; s + 1 < cell.samples.size(); ++s) {
            const Sample& s0 = cell.samples[s];
            const Sample& s1 = cell.samples[s + 1];
            if (s0.t >= chunk.t_end) break;
            double a = std::max(s0.t, chunk.t_start);
            double b = std::min(s1.t, chunk.t_end);
            if (b <= a) continue;
            double seg = s1.t - s0.t;
            double fa = (a - s0.t) / seg;
            double fb = (b - s0.t) / seg;
            double dt = b - a;
            covered += dt;
            for (StreamKind kind : kAllStreams) {
                auto k = static_cast<std::size_t>(kind);
                double v0 = s0.stream(kind);
                double v1 = s1.stream(kind);
                double va = v0 + (v1 - v0) * fa;
                double vb = v0 + (v1 - v0) * fb;
                const auto& th = catalog.thresholds[k];
                for (std::size_t p = 0; p < np; ++p)
                    below[k][p] += segment_time_below(va, vb, dt, th[p]);
            }
        }
        if (covered <= 0.0)
            throw FeatureError("chunk " + std::to_string(chunk.index) + " of cell " + cell.cell_id +
                               " has no samples");

        FeatureRow row;
        row.cell_id = cell.cell_id;
        row.chunk_index = chunk.index;
        row.t_end = chunk.t_end;
        row.target = chunk.delta_q;
        row.values.reserve(catalog.feature_types.size());
        const double duration = chunk.duration();
        const double t_days = chunk.t_end / kSecondsPerDay;
        for (const auto& f : catalog.feature_types) {
            switch (f.kind) {
                case FeatureType::Kind::range: {
                    auto k = static_cast<std::size_t>(f.stream);
                    double v = (below[k][static_cast<std::size_t>(f.hi)] -
                                below[k][static_cast<std::size_t>(f.lo)]) /
                               duration;
                    row.values.push_back(v);
                    break;
                }
                case FeatureType::Kind::time:
                    row.values.push_back(t_days);
                    break;
                case FeatureType::Kind::sqrt_time:
                    row.values.push_back(std::sqrt(t_days));
                    break;
            }
        }
        for (double v : row.values)
            if (!std::isfinite(v))
                throw FeatureError("non-finite feature value in chunk " +
                                   std::to_string(chunk.index) + " of cell " + cell.cell_id);
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd FeatureTable::feature_matrix(std::span<const std::size_t> columns) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < columns.size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r].values[columns[c]];
    return m;
}

Eigen::MatrixXd FeatureTable::feature_matrix() const {
    std::vector<std::size_t> all(feature_names.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return feature_matrix(all);
}

Eigen::VectorXd FeatureTable::targets() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) y(static_cast<Eigen::Index>(r)) = rows[r].target;
    return y;
}

std::vector<double> FeatureTable::column(std::size_t j) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.values[j]);
    return out;
}

FeatureTable assemble_table(std::span<const CellRecord> cells, const FeatureCatalog& catalog,
                            double dt_s, ReductionSummary* summary, int workers) {
    std::vector<const CellRecord*> ptrs;
    ptrs.reserve(cells.size());
    for (const auto& c : cells) ptrs.push_back(&c);
    return assemble_table(std::span<const CellRecord* const>(ptrs), catalog, dt_s, summary, workers);
}

FeatureTable assemble_table(std::span<const CellRecord* const> cells, const FeatureCatalog& catalog,
                            double dt_s, ReductionSummary* summary, int workers) {
    if (cells.empty()) throw PopulationError("assemble_table: empty cell list");
    FeatureTable table;
    table.catalog = catalog;
    table.feature_names = catalog.feature_names();

    std::vector<std::vector<FeatureRow>> per_cell(cells.size());
    parallel_for(cells.size(), workers, [&](std::size_t i) {
        auto chunks = chunk_cell(*cells[i], dt_s);
        per_cell[i] = compute_features(*cells[i], chunks, catalog);
    });

    std::size_t n_points = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        n_points += cells[i]->samples.size();
        for (auto& row : per_cell[i]) {
            if (row.values.size() != table.feature_names.size())
                throw Error("assemble_table: row width mismatch");
            table.rows.push_back(std::move(row));
        }
    }
    if (summary) {
        summary->n_time_points = n_points;
        summary->m_streams = kStreamCount;
        summary->p_rows = table.rows.size();
        summary->q_features = table.feature_names.size();
    }
    return table;
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
    csv::Writer w(path);
    std::vector<std::string> header{"cell_id", "chunk_index", "t_end_s"};
    header.insert(header.end(), table.feature_names.begin(), table.feature_names.end());
    header.push_back("delta_q_ah");
    w.row(header);
    for (const auto& row : table.rows) {
        std::vector<std::string> fields{row.cell_id, std::to_string(row.chunk_index),
                                        csv::format_double(row.t_end)};
        for (double v : row.values) fields.push_back(csv::format_double(v));
        fields.push_back(csv::format_double(row.target));
        w.row(fields);
    }
}

void write_catalog_csv(const FeatureCatalog& catalog, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"stream", "percentile", "threshold"});
    for (StreamKind kind : kAllStreams) {
        const auto& th = catalog.thresholds[static_cast<std::size_t>(kind)];
        for (std::size_t p = 0; p < catalog.percentiles.size(); ++p) {
            w.row({std::string(stream_label(kind)), csv::format_double(catalog.percentiles[p]),
                   csv::format_double(th[p])});
        }
    }
}

} // namespace fadecast
