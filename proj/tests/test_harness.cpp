#include <doctest.h>

#include "fadecast/harness.hpp"
#include "fadecast/report.hpp"

#include <filesystem>
#include <fstream>
#include <set>

using namespace fadecast;

namespace {

// Small, fast population + config used across the harness tests.
SynthSpec small_spec(std::uint64_t seed = 2) {
    SynthSpec spec;
    spec.n_cells = 14;
    spec.seed = seed;
    spec.sample_period_s = 600.0;
    spec.life_range_days = {15.0, 24.0};
    return spec;
}

TrialConfig small_config() {
    TrialConfig config;
    config.n_repeats = 2;
    config.n_train = 8;
    config.n_test = 3;
    config.k_features = 2;
    config.seed = 5;
    config.workers = 2;
    config.gp.restarts = 1;
    config.gp.max_iter = 40;
    config.gp.max_fit_rows = 150;
    return config;
}

std::vector<CellRecord> prepared_population(const SynthSpec& spec, const PipelineConfig& pipeline) {
    auto pop = generate_population(spec, 2);
    prepare_population(pop.cells, pipeline, 2);
    return std::move(pop.cells);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

} // namespace

TEST_CASE("large-scale trial bookkeeping") {
    TrialConfig config = small_config();
    auto cells = prepared_population(small_spec(), config.pipeline);
    TrialRun run = run_large_scale(config, cells);

    REQUIRE(run.repeats.size() == 2);
    std::size_t scored = 0;
    for (const auto& r : run.repeats) {
        CHECK(!r.failed);
        CHECK(r.train_ids.size() == 8);
        CHECK(r.test_ids.size() == 3);
        scored += r.scores.size();

        std::set<std::string> train(r.train_ids.begin(), r.train_ids.end());
        for (const auto& id : r.test_ids) CHECK(!train.count(id));

        // forced-time convention: time is always among the inputs
        bool has_time = false;
        for (const auto& f : r.selected_features) has_time |= f == "time";
        CHECK(has_time);
    }
    CHECK(scored == 6); // 2 repeats x 3 test cells
    CHECK(run.summary.n_cells == 6);
    CHECK(run.summary.n_trials == 2);
    CHECK(run.repeats[0].similarity.has_value());
    CHECK(run.repeats[0].catalog.has_value());
    CHECK(run.repeats[0].forecasts.size() == 3);
}

TEST_CASE("trial outputs are bit-identical for the same seed") {
    TrialConfig config = small_config();
    auto cells = prepared_population(small_spec(), config.pipeline);

    auto base = std::filesystem::temp_directory_path() / "fadecast_determinism";
    std::filesystem::remove_all(base);
    TrialConfig serial = config;
    serial.workers = 1;
    TrialRun run_a = run_large_scale(serial, cells);
    TrialRun run_b = run_large_scale(config, cells); // different worker count
    write_trial_outputs(run_a, base / "a");
    write_trial_outputs(run_b, base / "b");

    for (const char* name : {"scores.csv", "summary.csv", "selection.csv", "repeats.csv",
                             "similarity.csv", "catalog.csv"}) {
        INFO(name);
        CHECK(slurp(base / "a" / name) == slurp(base / "b" / name));
    }
    std::filesystem::remove_all(base);
}

TEST_CASE("catalog thresholds and selection ignore test-only perturbations") {
    TrialConfig config = small_config();
    config.n_repeats = 1;
    auto cells = prepared_population(small_spec(), config.pipeline);

    TrialRun before = run_large_scale(config, cells);
    REQUIRE(before.repeats[0].catalog.has_value());

    // Perturb a cell that is in the test set of repeat 0.
    const std::string victim = before.repeats[0].test_ids[0];
    for (auto& cell : cells) {
        if (cell.cell_id != victim) continue;
        for (auto& s : cell.samples) {
            RawSample raw{s.t, s.current * 3.0, s.voltage * 1.4, s.temperature + 25.0};
            s = Sample::from_raw(raw);
        }
    }
    TrialRun after = run_large_scale(config, cells);

    const auto& cat_a = *before.repeats[0].catalog;
    const auto& cat_b = *after.repeats[0].catalog;
    for (StreamKind kind : kAllStreams) {
        auto k = static_cast<std::size_t>(kind);
        REQUIRE(cat_a.thresholds[k].size() == cat_b.thresholds[k].size());
        for (std::size_t p = 0; p < cat_a.thresholds[k].size(); ++p)
            CHECK(cat_a.thresholds[k][p] == cat_b.thresholds[k][p]);
    }
    CHECK(before.repeats[0].selected_features == after.repeats[0].selected_features);
}

TEST_CASE("limited-data mode with c = n_train reduces to the large-scale run") {
    TrialConfig config = small_config();
    config.limited_full_life_counts = {config.n_train};
    auto cells = prepared_population(small_spec(3), config.pipeline);

    TrialRun large = run_large_scale(config, cells);
    TrialRun limited = run_limited_data(config, cells);
    REQUIRE(limited.settings.size() == 1);
    REQUIRE(limited.repeats.size() == large.repeats.size());
    for (std::size_t r = 0; r < large.repeats.size(); ++r) {
        REQUIRE(limited.repeats[r].scores.size() == large.repeats[r].scores.size());
        for (std::size_t s = 0; s < large.repeats[r].scores.size(); ++s) {
            CHECK(limited.repeats[r].scores[s].rmse_q == large.repeats[r].scores[s].rmse_q);
            CHECK(limited.repeats[r].scores[s].cell_id == large.repeats[r].scores[s].cell_id);
        }
    }
}

TEST_CASE("limited-data mode runs at c=3 and reports per-setting summaries") {
    TrialConfig config = small_config();
    config.n_repeats = 1;
    config.limited_full_life_counts = {3, 8};
    auto cells = prepared_population(small_spec(4), config.pipeline);
    TrialRun run = run_limited_data(config, cells);
    REQUIRE(run.settings.size() == 2);
    CHECK(run.settings[0].label == "c=3");
    CHECK(run.settings[1].label == "c=8");
    for (const auto& s : run.settings) CHECK(s.summary.n_cells == 3);
}

TEST_CASE("truncated cells produce no chunks past their knee") {
    SynthSpec spec = small_spec(6);
    PipelineConfig pipeline;
    auto cells = prepared_population(spec, pipeline);
    const auto& cell = cells[0];
    auto ref = observe_reference(cell, pipeline);
    REQUIRE(ref.knee_time.has_value());

    CellRecord cut = truncate_cell(cell, *ref.knee_time);
    cut.capacity.clear();
    compute_capacity_series(cut, pipeline.dt_seconds(), pipeline.smoothing_window);
    for (const auto& chunk : chunk_cell(cut, pipeline.dt_seconds()))
        CHECK(chunk.t_end <= *ref.knee_time + 1e-9);
}

TEST_CASE("feature sweep covers every count plus the time-only baseline") {
    TrialConfig config = small_config();
    config.n_repeats = 1;
    config.feature_counts = {1, 2};
    auto cells = prepared_population(small_spec(8), config.pipeline);
    TrialRun run = run_feature_sweep(config, cells);

    REQUIRE(run.settings.size() == 3); // k=1, k=2, time
    CHECK(run.settings[0].label == "k=1");
    CHECK(run.settings[1].label == "k=2");
    CHECK(run.settings[2].label == "time");

    for (const auto& r : run.repeats) {
        if (r.setting == "time") {
            REQUIRE(r.selected_features.size() == 1);
            CHECK(r.selected_features[0] == "time");
        } else if (r.setting == "k=1") {
            // one pick plus possibly the forced time feature
            CHECK(r.selected_features.size() <= 2);
        }
    }
}

TEST_CASE("repeat failure is contained, not fatal") {
    TrialConfig config = small_config();
    config.n_repeats = 1;
    config.n_train = 2; // far too little data for a healthy fit window
    config.n_test = 1;
    config.k_features = 1;
    auto cells = prepared_population(small_spec(9), config.pipeline);
    // Must not throw even if the repeat fails internally.
    TrialRun run = run_large_scale(config, cells);
    REQUIRE(run.repeats.size() == 1);
}

TEST_CASE("pipeline model file round-trips through forecast") {
    TrialConfig config = small_config();
    auto cells = prepared_population(small_spec(10), config.pipeline);

    std::vector<const CellRecord*> train;
    for (std::size_t i = 1; i < cells.size(); ++i) train.push_back(&cells[i]);
    FeatureCatalog catalog =
        build_catalog(std::span<const CellRecord* const>(train), config.pipeline.percentiles);
    FeatureTable table = assemble_table(std::span<const CellRecord* const>(train), catalog,
                                        config.pipeline.dt_seconds());
    SimilarityMatrix sim = build_similarity(table);
    auto sel = greedy_select(sim, 2, 0.85);
    std::vector<std::size_t> selected = sel.selected;
    std::size_t time_idx = catalog.time_feature_index();
    if (std::find(selected.begin(), selected.end(), time_idx) == selected.end())
        selected.push_back(time_idx);

    FitOptions options;
    options.restarts = 1;
    options.max_iter = 40;
    options.max_rows = 150;
    GpModel gp = fit(table.feature_matrix(selected), table.targets(),
                     default_init(static_cast<Eigen::Index>(selected.size()), table.targets()),
                     options);

    PipelineModel model{std::move(gp), catalog, selected, config.pipeline};
    auto path = std::filesystem::temp_directory_path() / "fadecast_pipeline_model.json";
    save_pipeline_model(model, path);
    PipelineModel loaded = load_pipeline_model(path);
    CHECK(loaded.selected == model.selected);
    CHECK(loaded.pipeline.dt_hours == model.pipeline.dt_hours);

    TrajectoryForecast a = forecast_cell(cells[0], model.catalog, model.selected, model.gp,
                                         model.pipeline);
    TrajectoryForecast b = forecast_cell(cells[0], loaded.catalog, loaded.selected, loaded.gp,
                                         loaded.pipeline);
    REQUIRE(a.q_pred.size() == b.q_pred.size());
    for (std::size_t i = 0; i < a.q_pred.size(); ++i)
        CHECK(a.q_pred[i] == doctest::Approx(b.q_pred[i]).epsilon(1e-10));
    CHECK(a.eol_pred.has_value() == b.eol_pred.has_value());
    std::filesystem::remove(path);
}

TEST_CASE("report renders plots from trial outputs") {
    TrialConfig config = small_config();
    config.n_repeats = 1;
    auto cells = prepared_population(small_spec(12), config.pipeline);
    TrialRun run = run_large_scale(config, cells);
    auto dir = std::filesystem::temp_directory_path() / "fadecast_report_test";
    std::filesystem::remove_all(dir);
    write_trial_outputs(run, dir);
    auto written = write_report(dir);
    CHECK(written.size() >= 3); // heatmap, histograms, scatter
    CHECK(std::filesystem::exists(dir / "histogram_bins.csv"));
    for (const auto& p : written) {
        CHECK(std::filesystem::file_size(p) > 200);
        auto contents = slurp(p);
        CHECK(contents.find("<svg") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
