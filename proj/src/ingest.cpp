#include "fadecast/ingest.hpp"

#include "fadecast/csv.hpp"
#include "fadecast/errors.hpp"
#include "fadecast/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace fadecast {

std::string_view stream_label(StreamKind kind) {
    switch (kind) {
        case StreamKind::current: return "I";
        case StreamKind::voltage: return "V";
        case StreamKind::temperature: return "T";
        case StreamKind::abs_current: return "|I|";
        case StreamKind::power: return "P";
        case StreamKind::abs_power: return "|P|";
    }
    return "?";
}

CellRecord parse_cycling_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    csv::Table table = csv::read_file(path);

    auto require = [&](const std::string& name) {
        auto idx = table.column(name);
        if (!idx) throw SchemaError("column '" + name + "' missing in " + path.string());
        return *idx;
    };
    std::size_t c_time = require(schema.time);
    std::size_t c_current = require(schema.current);
    std::size_t c_voltage = require(schema.voltage);
    std::size_t c_temperature = require(schema.temperature);

    CellRecord cell;
    cell.cell_id = path.stem().string();
    cell.samples.reserve(table.rows.size());

    double prev_t = -1.0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        auto field = [&](std::size_t col) {
            if (col >= row.size())
                throw DataError("short row " + std::to_string(i) + " in " + path.string());
            return csv::parse_double(row[col], path.string() + " row " + std::to_string(i));
        };
        RawSample raw;
        raw.t = field(c_time);
        raw.current = field(c_current);
        raw.voltage = field(c_voltage);
        raw.temperature = field(c_temperature);
        if (!std::isfinite(raw.t) || !std::isfinite(raw.current) || !std::isfinite(raw.voltage) ||
            !std::isfinite(raw.temperature)) {
            throw DataError("non-finite value at row " + std::to_string(i) + " in " + path.string());
        }
        if (raw.t <= prev_t) {
            throw DataError("time not strictly increasing at row " + std::to_string(i) + " in " +
                            path.string());
        }
        prev_t = raw.t;
        cell.samples.push_back(Sample::from_raw(raw));
    }
    return cell;
}

void load_capacity_csv(CellRecord& cell, const std::filesystem::path& path) {
    csv::Table table = csv::read_file(path);
    auto c_idx = table.column("cycle_index");
    auto c_cap = table.column("discharge_capacity_ah");
    auto c_end = table.column("end_time_s");
    if (!c_idx || !c_cap || !c_end)
        throw SchemaError("capacity file " + path.string() +
                          " needs columns cycle_index, discharge_capacity_ah, end_time_s");
    cell.cycles.clear();
    cell.cycles.reserve(table.rows.size());
    double prev_end = -1.0;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        CyclePoint p;
        p.cycle_index = static_cast<long>(csv::parse_double(row[*c_idx], path.string()));
        p.discharge_capacity_ah = csv::parse_double(row[*c_cap], path.string());
        p.end_time_s = csv::parse_double(row[*c_end], path.string());
        if (!std::isfinite(p.discharge_capacity_ah) || !std::isfinite(p.end_time_s))
            throw DataError("non-finite capacity row " + std::to_string(i) + " in " + path.string());
        if (p.end_time_s <= prev_end)
            throw DataError("cycle end times not increasing at row " + std::to_string(i) + " in " +
                            path.string());
        prev_end = p.end_time_s;
        cell.cycles.push_back(p);
    }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    csv::Table table = csv::read_file(path);
    auto c_id = table.column("cell_id");
    auto c_cyc = table.column("cycling_csv");
    auto c_cap = table.column("capacity_csv");
    auto c_nom = table.column("nominal_capacity_ah");
    auto c_batch = table.column("batch");
    if (!c_id || !c_cyc || !c_cap || !c_nom)
        throw SchemaError("manifest " + path.string() +
                          " needs columns cell_id, cycling_csv, capacity_csv, nominal_capacity_ah");
    auto base = path.parent_path();
    std::vector<ManifestEntry> entries;
    for (const auto& row : table.rows) {
        ManifestEntry e;
        e.cell_id = row[*c_id];
        e.cycling_csv = base / row[*c_cyc];
        if (!row[*c_cap].empty()) e.capacity_csv = base / row[*c_cap]; // capacity file is optional
        e.nominal_capacity = csv::parse_double(row[*c_nom], path.string());
        if (c_batch && *c_batch < row.size()) e.batch = row[*c_batch];
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<CellRecord> load_population(const std::filesystem::path& manifest,
                                        const CsvSchema& schema, int workers) {
    auto entries = read_manifest(manifest);
    std::vector<CellRecord> cells(entries.size());
    parallel_for(entries.size(), workers, [&](std::size_t i) {
        const auto& e = entries[i];
        CellRecord cell = parse_cycling_csv(e.cycling_csv, schema);
        if (!e.capacity_csv.empty()) load_capacity_csv(cell, e.capacity_csv);
        cell.cell_id = e.cell_id;
        cell.batch = e.batch;
        cell.nominal_capacity = e.nominal_capacity;
        cells[i] = std::move(cell);
    });
    return cells;
}

namespace {

// First interpolated crossing of a piecewise-linear series below threshold.
std::optional<double> first_crossing(std::span<const double> times, std::span<const double> values,
                                     double threshold) {
    if (times.empty()) return std::nullopt;
    if (values.front() < threshold) return times.front();
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (values[i] < threshold) {
            double q0 = values[i - 1];
            double q1 = values[i];
            double frac = (q0 - threshold) / (q0 - q1);
            return times[i - 1] + frac * (times[i] - times[i - 1]);
        }
    }
    return std::nullopt;
}

} // namespace

std::optional<double> eol_time(const CellRecord& cell, double threshold_ah) {
    if (!cell.capacity.empty()) {
        std::vector<double> t, q;
        t.reserve(cell.capacity.size());
        q.reserve(cell.capacity.size());
        for (const auto& p : cell.capacity) {
            t.push_back(p.t);
            q.push_back(p.q_smoothed);
        }
        return first_crossing(t, q, threshold_ah);
    }
    std::vector<double> t, q;
    t.reserve(cell.cycles.size());
    q.reserve(cell.cycles.size());
    for (const auto& p : cell.cycles) {
        t.push_back(p.end_time_s);
        q.push_back(p.discharge_capacity_ah);
    }
    return first_crossing(t, q, threshold_ah);
}

std::vector<CellRecord> clean_population(std::vector<CellRecord> cells, const CleanOptions& opts,
                                         CleanReport* report) {
    if (opts.min_life_days >= opts.max_life_days)
        throw ConfigError("clean_population: min_life_days must be < max_life_days");
    CleanReport local;
    local.input = cells.size();
    std::vector<CellRecord> kept;
    kept.reserve(cells.size());
    for (auto& cell : cells) {
        if (std::find(opts.excluded_ids.begin(), opts.excluded_ids.end(), cell.cell_id) !=
            opts.excluded_ids.end()) {
            ++local.dropped_excluded;
            continue;
        }
        auto eol = eol_time(cell, opts.eol_fraction * cell.nominal_capacity);
        double life_days = eol ? *eol / kSecondsPerDay : -1.0;
        if (!eol || life_days < opts.min_life_days || life_days > opts.max_life_days) {
            ++local.dropped_lifetime;
            continue;
        }
        kept.push_back(std::move(cell));
    }
    local.retained = kept.size();
    if (report) *report = local;
    if (kept.empty()) throw PopulationError("clean_population: no cells retained");
    return kept;
}

void compute_capacity_series(CellRecord& cell, double dt_s, int window) {
    if (cell.cycles.empty())
        throw DataError("cell " + cell.cell_id + ": no per-cycle discharge capacity data");
    if (window < 1 || window % 2 == 0)
        throw ConfigError("smoothing window must be odd and >= 1");
    if (dt_s <= 0) throw ConfigError("dt must be positive");

    const double t0 = cell.data_start();
    const double t_end = cell.data_end();

    std::vector<double> boundaries;
    const double eps = 1e-9 * std::max(1.0, std::abs(t_end));
    for (std::size_t k = 0;; ++k) {
        double tb = t0 + static_cast<double>(k) * dt_s;
        if (tb > t_end + eps) break;
        boundaries.push_back(tb);
    }
    // Trailing partial interval: keep when at least half a chunk remains.
    double tail = t_end - boundaries.back();
    if (tail >= dt_s / 2.0) boundaries.push_back(t_end);
    if (boundaries.size() < 2)
        throw DataError("cell " + cell.cell_id + ": fewer than 2 resampled capacity points");

    // Nearest cycle end per boundary; cycles are sorted by end time.
    std::vector<double> ends(cell.cycles.size());
    for (std::size_t i = 0; i < cell.cycles.size(); ++i) ends[i] = cell.cycles[i].end_time_s;
    auto nearest_capacity = [&](double tb) {
        auto it = std::lower_bound(ends.begin(), ends.end(), tb);
        std::size_t hi = static_cast<std::size_t>(it - ends.begin());
        if (hi == 0) return cell.cycles.front().discharge_capacity_ah;
        if (hi >= ends.size()) return cell.cycles.back().discharge_capacity_ah;
        double d_lo = tb - ends[hi - 1];
        double d_hi = ends[hi] - tb;
        return d_lo <= d_hi ? cell.cycles[hi - 1].discharge_capacity_ah
                            : cell.cycles[hi].discharge_capacity_ah;
    };

    const std::size_t n = boundaries.size();
    cell.capacity.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        cell.capacity[i].t = boundaries[i];
        cell.capacity[i].q = nearest_capacity(boundaries[i]);
        // sanity bound: a measured capacity far above nominal is bad data
        if (cell.capacity[i].q <= 0 || cell.capacity[i].q > 1.2 * cell.nominal_capacity)
            throw DataError("cell " + cell.cell_id + ": capacity " +
                            std::to_string(cell.capacity[i].q) + " Ah outside (0, 1.2 x nominal]");
    }

    // Centered moving average, half-width shrinking near the ends.
    const int half = (window - 1) / 2;
    for (std::size_t i = 0; i < n; ++i) {
        int h = std::min<int>({half, static_cast<int>(i), static_cast<int>(n - 1 - i)});
        double sum = 0.0;
        for (int j = -h; j <= h; ++j) sum += cell.capacity[i + static_cast<std::size_t>(j)].q;
        cell.capacity[i].q_smoothed = sum / static_cast<double>(2 * h + 1);
    }
}

std::vector<Chunk> chunk_cell(const CellRecord& cell, double dt_s) {
    if (cell.capacity.size() < 2)
        throw DataError("cell " + cell.cell_id + ": capacity series not resampled");
    std::vector<Chunk> chunks;
    chunks.reserve(cell.capacity.size() - 1);
    for (std::size_t i = 0; i + 1 < cell.capacity.size(); ++i) {
        Chunk c;
        c.cell_id = cell.cell_id;
        c.index = i;
        c.t_start = cell.capacity[i].t;
        c.t_end = cell.capacity[i + 1].t;
        c.delta_q = cell.capacity[i + 1].q_smoothed - cell.capacity[i].q_smoothed;
        auto lo = std::lower_bound(cell.samples.begin(), cell.samples.end(), c.t_start,
                                   [](const Sample& s, double v) { return s.t < v; });
        auto hi = std::upper_bound(cell.samples.begin(), cell.samples.end(), c.t_end,
                                   [](double v, const Sample& s) { return v < s.t; });
        c.first_sample = static_cast<std::size_t>(lo - cell.samples.begin());
        c.last_sample = static_cast<std::size_t>(hi - cell.samples.begin());
        (void)dt_s; // grid spacing is already baked into the capacity series
        chunks.push_back(std::move(c));
    }
    return chunks;
}

CellRecord truncate_cell(const CellRecord& cell, double t_cut) {
    CellRecord out;
    out.cell_id = cell.cell_id;
    out.batch = cell.batch;
    out.nominal_capacity = cell.nominal_capacity;
    for (const auto& s : cell.samples)
        if (s.t <= t_cut) out.samples.push_back(s);
    for (const auto& c : cell.cycles)
        if (c.end_time_s <= t_cut) out.cycles.push_back(c);
    for (const auto& p : cell.capacity)
        if (p.t <= t_cut) out.capacity.push_back(p);
    return out;
}

} // namespace fadecast
