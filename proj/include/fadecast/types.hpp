#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace fadecast {

inline constexpr double kSecondsPerDay = 86400.0;

// The six basic data streams, in data-matrix order.
enum class StreamKind : int {
    current = 0,
    voltage,
    temperature,
    abs_current,
    power,
    abs_power,
};

inline constexpr int kStreamCount = 6;

inline constexpr std::array<StreamKind, kStreamCount> kAllStreams = {
    StreamKind::current,   StreamKind::voltage, StreamKind::temperature,
    StreamKind::abs_current, StreamKind::power, StreamKind::abs_power,
};

std::string_view stream_label(StreamKind kind);

// One measured time point. Discharge current is negative by dataset
// convention.
struct RawSample {
    double t = 0.0; // seconds since cell test start
    double current = 0.0;
    double voltage = 0.0;
    double temperature = 0.0;
};

// Raw sample plus the derived instantaneous streams.
struct Sample {
    double t = 0.0;
    double current = 0.0;
    double voltage = 0.0;
    double temperature = 0.0;
    double abs_current = 0.0;
    double power = 0.0;
    double abs_power = 0.0;

    static Sample from_raw(const RawSample& raw) {
        Sample s;
        s.t = raw.t;
        s.current = raw.current;
        s.voltage = raw.voltage;
        s.temperature = raw.temperature;
        s.abs_current = std::abs(raw.current);
        s.power = raw.voltage * raw.current;
        s.abs_power = std::abs(s.power);
        return s;
    }

    double stream(StreamKind kind) const {
        switch (kind) {
            case StreamKind::current: return current;
            case StreamKind::voltage: return voltage;
            case StreamKind::temperature: return temperature;
            case StreamKind::abs_current: return abs_current;
            case StreamKind::power: return power;
            case StreamKind::abs_power: return abs_power;
        }
        return 0.0;
    }
};

// Per-cycle discharge capacity measurement.
struct CyclePoint {
    long cycle_index = 0;
    double discharge_capacity_ah = 0.0;
    double end_time_s = 0.0;
};

// Capacity resampled onto the chunk grid.
struct CapacityPoint {
    double t = 0.0;
    double q = 0.0;          // ampere-hours
    double q_smoothed = 0.0; // moving-average of q
};

struct CellRecord {
    std::string cell_id;
    std::string batch;
    double nominal_capacity = 0.0; // ampere-hours
    std::vector<Sample> samples;
    std::vector<CyclePoint> cycles;
    std::vector<CapacityPoint> capacity; // filled by compute_capacity_series

    bool has_samples() const { return !samples.empty(); }

    // Span of available raw data; falls back to cycle end times.
    double data_start() const {
        return has_samples() ? samples.front().t : (cycles.empty() ? 0.0 : cycles.front().end_time_s);
    }
    double data_end() const {
        return has_samples() ? samples.back().t : (cycles.empty() ? 0.0 : cycles.back().end_time_s);
    }
};

// One Δt section of a cell's data paired with its capacity transition.
struct Chunk {
    std::string cell_id;
    std::size_t index = 0;      // position within the cell
    double t_start = 0.0;
    double t_end = 0.0;
    std::size_t first_sample = 0; // half-open [first_sample, last_sample)
    std::size_t last_sample = 0;
    double delta_q = 0.0;       // q_smoothed(t_end) - q_smoothed(t_start)

    double duration() const { return t_end - t_start; }
};

} // namespace fadecast
