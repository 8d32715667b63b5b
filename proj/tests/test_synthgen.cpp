#include <doctest.h>

#include "fadecast/errors.hpp"
#include "fadecast/ingest.hpp"
#include "fadecast/synthgen.hpp"
#include "fadecast/trajectory.hpp"

#include <cmath>
#include <filesystem>

using namespace fadecast;

namespace {

// Interpolated crossing of the true capacity grid below a threshold.
double scan_eol_days(const SynthTruth& truth, double threshold) {
    for (std::size_t i = 1; i < truth.times.size(); ++i) {
        if (truth.true_capacity[i] < threshold) {
            double q0 = truth.true_capacity[i - 1];
            double q1 = truth.true_capacity[i];
            double f = (q0 - threshold) / (q0 - q1);
            return (truth.times[i - 1] + f * (truth.times[i] - truth.times[i - 1])) / kSecondsPerDay;
        }
    }
    return -1.0;
}

} // namespace

TEST_CASE("zero noise with pinned knee fraction and life") {
    SynthSpec spec;
    spec.n_cells = 3;
    spec.noise_sd = 0.0;
    spec.life_range_days = {20.0, 20.0};
    spec.knee_fraction_range = {0.6, 0.6};
    spec.seed = 7;
    auto pop = generate_population(spec);
    REQUIRE(pop.cells.size() == 3);
    for (std::size_t i = 0; i < pop.cells.size(); ++i) {
        const auto& truth = pop.truths[i];
        CHECK(truth.true_eol_time == doctest::Approx(20.0 * kSecondsPerDay));
        CHECK(truth.true_knee_time == doctest::Approx(12.0 * kSecondsPerDay)); // 0.6 * 20 d

        // With zero noise the measured capacity lies on the true curve: the
        // curve is monotone decreasing, so each measurement must sit between
        // the bracketing truth-grid values.
        const auto& cell = pop.cells[i];
        for (std::size_t c = 0; c < cell.cycles.size(); c += 97) {
            double q_measured = cell.cycles[c].discharge_capacity_ah;
            std::size_t k = 1;
            while (k < truth.times.size() && truth.times[k] < cell.cycles[c].end_time_s) ++k;
            if (k >= truth.times.size()) break;
            CHECK(q_measured <= truth.true_capacity[k - 1] + 1e-12);
            CHECK(q_measured >= truth.true_capacity[k] - 1e-12);
        }
    }
}

TEST_CASE("same seed twice is bit-identical, regardless of workers") {
    SynthSpec spec;
    spec.n_cells = 6;
    spec.seed = 42;
    auto a = generate_population(spec, 1);
    auto b = generate_population(spec, 2);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        REQUIRE(a.cells[i].samples.size() == b.cells[i].samples.size());
        REQUIRE(a.cells[i].cycles.size() == b.cells[i].cycles.size());
        for (std::size_t s = 0; s < a.cells[i].samples.size(); s += 53) {
            CHECK(a.cells[i].samples[s].voltage == b.cells[i].samples[s].voltage);
            CHECK(a.cells[i].samples[s].current == b.cells[i].samples[s].current);
        }
        for (std::size_t c = 0; c < a.cells[i].cycles.size(); c += 29)
            CHECK(a.cells[i].cycles[c].discharge_capacity_ah ==
                  b.cells[i].cycles[c].discharge_capacity_ah);
        CHECK(a.truths[i].true_knee_time == b.truths[i].true_knee_time);
        CHECK(a.truths[i].true_eol_time == b.truths[i].true_eol_time);
    }
}

TEST_CASE("all generated end-of-life times stay inside the life range") {
    SynthSpec spec;
    spec.n_cells = 40;
    spec.life_range_days = {15.0, 40.0};
    spec.seed = 3;
    auto pop = generate_population(spec);
    const double threshold = spec.eol_fraction * spec.nominal_capacity;
    for (const auto& truth : pop.truths) {
        double eol_days = scan_eol_days(truth, threshold);
        CHECK(eol_days >= 15.0 - 0.05);
        CHECK(eol_days <= 40.0 + 0.05);
        CHECK(eol_days == doctest::Approx(truth.true_eol_time / kSecondsPerDay).epsilon(5e-3));
        CHECK(truth.true_knee_time < truth.true_eol_time);
    }
}

TEST_CASE("waveforms respect the template voltage limits") {
    SynthSpec spec;
    spec.n_cells = 4;
    spec.seed = 11;
    UsageTemplate tmpl;
    tmpl.v_min = 2.1;
    tmpl.v_max = 3.55;
    spec.usage_profiles = {tmpl};
    auto pop = generate_population(spec);
    for (const auto& cell : pop.cells) {
        for (const auto& s : cell.samples) {
            CHECK(s.voltage >= 2.1);
            CHECK(s.voltage <= 3.55);
        }
    }
}

TEST_CASE("knee detector recovers the true knee from the noiseless curve") {
    SynthSpec spec;
    spec.n_cells = 10;
    spec.noise_sd = 0.0;
    spec.seed = 19;
    auto pop = generate_population(spec);
    for (const auto& truth : pop.truths) {
        std::vector<double> t = truth.times, q = truth.true_capacity;
        truncate_series(t, q, truth.true_eol_time);
        auto geom = knee_point(t, q);
        REQUIRE(geom.has_value());
        CHECK(geom->is_acceleration());
        CHECK(std::abs(geom->knee_time - truth.true_knee_time) <= spec.dt_s * 1.0001);
    }
}

TEST_CASE("infeasible horizon raises a config error") {
    SynthSpec spec;
    spec.n_cells = 2;
    spec.horizon_days = 10.0; // lives are 15+ days
    CHECK_THROWS_AS(generate_population(spec), ConfigError);
}

TEST_CASE("written population round-trips through the ingest loader") {
    SynthSpec spec;
    spec.n_cells = 2;
    spec.life_range_days = {15.0, 16.0};
    spec.sample_period_s = 900.0;
    spec.seed = 5;
    auto pop = generate_population(spec);

    auto dir = std::filesystem::temp_directory_path() / "fadecast_synth_roundtrip";
    std::filesystem::remove_all(dir);
    write_population(pop, dir);
    auto cells = load_population(dir / "manifest.csv");
    REQUIRE(cells.size() == pop.cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        CHECK(cells[i].cell_id == pop.cells[i].cell_id);
        CHECK(cells[i].nominal_capacity == pop.cells[i].nominal_capacity);
        REQUIRE(cells[i].samples.size() == pop.cells[i].samples.size());
        REQUIRE(cells[i].cycles.size() == pop.cells[i].cycles.size());
        for (std::size_t s = 0; s < cells[i].samples.size(); s += 31) {
            CHECK(cells[i].samples[s].t == pop.cells[i].samples[s].t);
            CHECK(cells[i].samples[s].voltage == pop.cells[i].samples[s].voltage);
            CHECK(cells[i].samples[s].power == pop.cells[i].samples[s].power);
        }
        for (std::size_t c = 0; c < cells[i].cycles.size(); c += 17)
            CHECK(cells[i].cycles[c].discharge_capacity_ah ==
                  pop.cells[i].cycles[c].discharge_capacity_ah);
    }
    std::filesystem::remove_all(dir);
}
