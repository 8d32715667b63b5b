#include "fadecast/synthgen.hpp"

#include "fadecast/csv.hpp"
#include "fadecast/errors.hpp"
#include "fadecast/parallel.hpp"
#include "fadecast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fadecast {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<UsageTemplate> default_profiles() {
    UsageTemplate fast;
    fast.name = "fast-charge";
    fast.charge_rate_c = 6.0;
    fast.discharge_rate_c = 4.0;
    fast.hold_fraction = 0.32;
    fast.hold_jitter = 0.25;
    UsageTemplate gentle;
    gentle.name = "gentle-charge";
    gentle.charge_rate_c = 4.0;
    gentle.discharge_rate_c = 4.0;
    gentle.hold_fraction = 0.12;
    gentle.hold_jitter = 0.10;
    return {fast, gentle};
}

struct CycleShape {
    double t_charge;
    double t_hold;
    double t_discharge;
    double period;
    double v_min, v_max;
    double i_charge, i_discharge;

    // Voltage / current at cycle-relative time tau.
    void at(double tau, double& v, double& i) const {
        if (tau < t_charge) {
            v = v_min + (v_max - v_min) * tau / t_charge;
            i = i_charge;
        } else if (tau < t_charge + t_hold) {
            double f = (tau - t_charge) / t_hold;
            v = v_max;
            i = i_charge * (1.0 - 0.9 * f); // CV taper
        } else {
            double f = (tau - t_charge - t_hold) / t_discharge;
            v = v_max - (v_max - v_min) * f;
            i = -i_discharge;
        }
    }

    // Exact fraction of cycle time spent above the threshold voltage.
    double fraction_above(double v_th) const {
        if (v_th <= v_min) return 1.0;
        if (v_th >= v_max) return 0.0;
        double ramp_frac = (v_max - v_th) / (v_max - v_min);
        return ((t_charge + t_discharge) * ramp_frac + t_hold) / period;
    }
};

CycleShape make_shape(const UsageTemplate& tmpl, double hold, double nominal) {
    CycleShape s{};
    s.t_charge = 3600.0 / tmpl.charge_rate_c;
    s.t_discharge = 3600.0 / tmpl.discharge_rate_c;
    double active = s.t_charge + s.t_discharge;
    s.t_hold = hold * active / (1.0 - hold);
    s.period = active + s.t_hold;
    s.v_min = tmpl.v_min;
    s.v_max = tmpl.v_max;
    s.i_charge = tmpl.charge_rate_c * nominal;
    s.i_discharge = tmpl.discharge_rate_c * nominal;
    return s;
}

// Bilinear fade with a quadratic blend of total width `blend` centered on
// the knee. Outside the blend the curve coincides with the bilinear one, so
// the end of life implied by the slopes is preserved exactly.
struct FadeCurve {
    double q0;
    double s_early, s_late; // Ah/day, positive magnitudes
    double knee_days;
    double blend_days;

    double at_days(double t) const {
        double a = knee_days - blend_days / 2.0;
        double b = knee_days + blend_days / 2.0;
        if (t <= a) return q0 - s_early * t;
        double qa = q0 - s_early * a;
        if (t >= b) {
            double qb = qa - 0.5 * (s_early + s_late) * (b - a);
            return qb - s_late * (t - b);
        }
        double u = t - a;
        return qa - s_early * u - (s_late - s_early) * u * u / (2.0 * (b - a));
    }
};

void validate(const SynthSpec& spec) {
    if (spec.n_cells < 1) throw ConfigError("synth: n_cells must be >= 1");
    if (spec.dt_s <= 0 || spec.sample_period_s <= 0) throw ConfigError("synth: dt and sample period must be positive");
    if (!(spec.life_range_days[0] > 0 && spec.life_range_days[0] <= spec.life_range_days[1]))
        throw ConfigError("synth: bad life range");
    if (!(spec.knee_fraction_range[0] > 0 && spec.knee_fraction_range[1] < 1 &&
          spec.knee_fraction_range[0] <= spec.knee_fraction_range[1]))
        throw ConfigError("synth: knee fraction range must lie strictly inside (0,1)");
    if (spec.late_slope_range[0] <= spec.early_slope_range[1])
        throw ConfigError("synth: late slope range must exceed the early slope range");
    if (spec.noise_sd < 0) throw ConfigError("synth: negative noise");
    if (spec.nominal_capacity <= 0) throw ConfigError("synth: nominal capacity must be positive");
}

double lerp(const std::array<double, 2>& range, double f) {
    return range[0] + (range[1] - range[0]) * f;
}

} // namespace

SynthPopulation generate_population(const SynthSpec& spec, int workers) {
    validate(spec);
    const auto profiles = spec.usage_profiles.empty() ? default_profiles() : spec.usage_profiles;
    const std::size_t n = static_cast<std::size_t>(spec.n_cells);

    double v_lo = profiles[0].v_min, v_hi = profiles[0].v_max;
    for (const auto& p : profiles) {
        v_lo = std::min(v_lo, p.v_min);
        v_hi = std::max(v_hi, p.v_max);
    }
    const double v_threshold = 0.5 * (v_lo + v_hi);

    // First pass: per-cell hold fraction and usage fraction. The per-cell
    // RNG is recreated in the second pass and replays the same draws, so the
    // normalization below cannot perturb the streams.
    std::vector<double> holds(n), usage(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tmpl = profiles[i % profiles.size()];
        Rng rng(spec.seed, i);
        holds[i] = std::clamp(tmpl.hold_fraction + rng.uniform(-tmpl.hold_jitter, tmpl.hold_jitter),
                              0.02, 0.60);
        usage[i] = make_shape(tmpl, holds[i], spec.nominal_capacity).fraction_above(v_threshold);
    }
    double u_min = *std::min_element(usage.begin(), usage.end());
    double u_max = *std::max_element(usage.begin(), usage.end());

    SynthPopulation pop;
    pop.cells.resize(n);
    pop.truths.resize(n);

    parallel_for(n, workers, [&](std::size_t i) {
        const auto& tmpl = profiles[i % profiles.size()];
        Rng rng(spec.seed, i);
        double hold = std::clamp(tmpl.hold_fraction + rng.uniform(-tmpl.hold_jitter, tmpl.hold_jitter),
                                 0.02, 0.60);
        CycleShape shape = make_shape(tmpl, hold, spec.nominal_capacity);

        double u_norm = (u_max > u_min) ? (usage[i] - u_min) / (u_max - u_min) : 0.5;

        // Heavier usage -> steeper fade and an earlier knee. Keeping the knee
        // fraction (mostly) a function of usage keeps the population
        // learnable from observable features.
        double s_early = lerp(spec.early_slope_range, u_norm);
        double s_late = lerp(spec.late_slope_range, u_norm);
        const auto& kr = spec.knee_fraction_range;
        double phi = lerp(kr, 1.0 - u_norm) + 0.05 * (kr[1] - kr[0]) * rng.normal();
        phi = std::clamp(phi, kr[0], kr[1]);

        // Life implied by slopes + knee; clamped into the requested range by
        // rescaling both slopes (ratio preserved).
        const double drop = (1.0 - spec.eol_fraction) * spec.nominal_capacity;
        double life = drop / (s_early * phi + s_late * (1.0 - phi));
        double life_target = std::clamp(life, spec.life_range_days[0], spec.life_range_days[1]);
        double rescale = life / life_target;
        s_early *= rescale;
        s_late *= rescale;

        FadeCurve curve{spec.nominal_capacity, s_early, s_late, phi * life_target,
                        0.05 * life_target};

        double eol_days = life_target;
        if (eol_days > spec.horizon_days)
            throw ConfigError("synth: cell " + std::to_string(i) + " end of life " +
                              std::to_string(eol_days) + " d exceeds horizon");
        double stop_days = std::min(spec.horizon_days,
                                    eol_days + std::max(3.0 * spec.dt_s / kSecondsPerDay, 0.05 * eol_days));
        double stop_s = stop_days * kSecondsPerDay;

        CellRecord cell;
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "synth%03zu", i);
        cell.cell_id = idbuf;
        cell.batch = tmpl.name;
        cell.nominal_capacity = spec.nominal_capacity;

        const double i_peak = std::max(shape.i_charge, shape.i_discharge);
        std::size_t n_samples = static_cast<std::size_t>(stop_s / spec.sample_period_s) + 1;
        cell.samples.reserve(n_samples);
        for (std::size_t k = 0; k < n_samples; ++k) {
            double t = static_cast<double>(k) * spec.sample_period_s;
            double tau = std::fmod(t, shape.period);
            RawSample raw;
            raw.t = t;
            shape.at(tau, raw.voltage, raw.current);
            raw.temperature = 30.0 + 1.5 * std::abs(raw.current) / i_peak +
                              0.5 * std::sin(2.0 * kPi * t / kSecondsPerDay);
            cell.samples.push_back(Sample::from_raw(raw));
        }

        long n_cycles = static_cast<long>(stop_s / shape.period);
        cell.cycles.reserve(static_cast<std::size_t>(n_cycles));
        for (long k = 0; k < n_cycles; ++k) {
            CyclePoint p;
            p.cycle_index = k;
            p.end_time_s = static_cast<double>(k + 1) * shape.period;
            p.discharge_capacity_ah =
                curve.at_days(p.end_time_s / kSecondsPerDay) + spec.noise_sd * rng.normal();
            cell.cycles.push_back(p);
        }
        if (cell.cycles.size() < 2)
            throw ConfigError("synth: cell " + cell.cell_id + " has fewer than 2 cycles");

        SynthTruth truth;
        truth.cell_id = cell.cell_id;
        truth.true_knee_time = curve.knee_days * kSecondsPerDay;
        truth.true_eol_time = eol_days * kSecondsPerDay;
        truth.early_slope = s_early;
        truth.late_slope = s_late;
        truth.usage_fraction = usage[i];
        for (std::size_t k = 0; static_cast<double>(k) * spec.dt_s <= stop_s; ++k) {
            double t = static_cast<double>(k) * spec.dt_s;
            truth.times.push_back(t);
            truth.true_capacity.push_back(curve.at_days(t / kSecondsPerDay));
        }

        pop.cells[i] = std::move(cell);
        pop.truths[i] = std::move(truth);
    });
    return pop;
}

void write_population(const SynthPopulation& pop, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    csv::Writer manifest(dir / "manifest.csv");
    manifest.row({"cell_id", "cycling_csv", "capacity_csv", "nominal_capacity_ah", "batch"});
    for (const auto& cell : pop.cells) {
        std::string cyc = cell.cell_id + ".csv";
        std::string cap = cell.cell_id + "_capacity.csv";
        manifest.row({cell.cell_id, cyc, cap, csv::format_double(cell.nominal_capacity), cell.batch});

        csv::Writer w(dir / cyc);
        w.row({"time_s", "current_a", "voltage_v", "temperature_c"});
        for (const auto& s : cell.samples) {
            w.row({csv::format_double(s.t), csv::format_double(s.current),
                   csv::format_double(s.voltage), csv::format_double(s.temperature)});
        }
        csv::Writer wc(dir / cap);
        wc.row({"cycle_index", "discharge_capacity_ah", "end_time_s"});
        for (const auto& c : cell.cycles) {
            wc.row({std::to_string(c.cycle_index), csv::format_double(c.discharge_capacity_ah),
                    csv::format_double(c.end_time_s)});
        }
    }

    csv::Writer truth(dir / "truth.csv");
    truth.row({"cell_id", "true_knee_time_s", "true_eol_time_s", "early_slope_ah_per_day",
               "late_slope_ah_per_day", "usage_fraction"});
    for (const auto& t : pop.truths) {
        truth.row({t.cell_id, csv::format_double(t.true_knee_time),
                   csv::format_double(t.true_eol_time), csv::format_double(t.early_slope),
                   csv::format_double(t.late_slope), csv::format_double(t.usage_fraction)});
    }
    csv::Writer tc(dir / "truth_capacity.csv");
    tc.row({"cell_id", "t_s", "q_true_ah"});
    for (const auto& t : pop.truths) {
        for (std::size_t k = 0; k < t.times.size(); ++k) {
            tc.row({t.cell_id, csv::format_double(t.times[k]), csv::format_double(t.true_capacity[k])});
        }
    }
}

} // namespace fadecast
