#include "fadecast/errors.hpp"
#include "fadecast/harness.hpp"
#include "fadecast/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

using nlohmann::json;
using namespace fadecast;

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
    return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

PipelineConfig pipeline_from_config(const json& cfg) {
    PipelineConfig p;
    if (!cfg.contains("pipeline")) return p;
    const json& j = cfg["pipeline"];
    maybe(j, "dt_hours", p.dt_hours);
    maybe(j, "smoothing_window", p.smoothing_window);
    maybe(j, "percentiles", p.percentiles);
    maybe(j, "eol_fraction", p.eol_fraction);
    maybe(j, "knee_early_frac", p.knee.early_frac);
    maybe(j, "knee_late_frac", p.knee.late_frac);
    return p;
}

GpConfig gp_from_config(const json& cfg) {
    GpConfig g;
    if (!cfg.contains("gp")) return g;
    const json& j = cfg["gp"];
    maybe(j, "restarts", g.restarts);
    maybe(j, "max_iter", g.max_iter);
    maybe(j, "max_fit_rows", g.max_fit_rows);
    return g;
}

CleanOptions clean_from_config(const json& cfg, const PipelineConfig& pipeline) {
    CleanOptions c;
    c.eol_fraction = pipeline.eol_fraction;
    if (!cfg.contains("clean")) return c;
    const json& j = cfg["clean"];
    maybe(j, "min_life_days", c.min_life_days);
    maybe(j, "max_life_days", c.max_life_days);
    maybe(j, "excluded_ids", c.excluded_ids);
    return c;
}

SynthSpec synth_from_config(const json& cfg) {
    SynthSpec s;
    if (!cfg.contains("synth")) return s;
    const json& j = cfg["synth"];
    maybe(j, "n_cells", s.n_cells);
    if (j.contains("dt_hours")) s.dt_s = j["dt_hours"].get<double>() * 3600.0;
    maybe(j, "life_range_days", s.life_range_days);
    maybe(j, "knee_fraction_range", s.knee_fraction_range);
    maybe(j, "early_slope_range", s.early_slope_range);
    maybe(j, "late_slope_range", s.late_slope_range);
    maybe(j, "noise_sd", s.noise_sd);
    maybe(j, "seed", s.seed);
    maybe(j, "sample_period_s", s.sample_period_s);
    maybe(j, "nominal_capacity", s.nominal_capacity);
    maybe(j, "eol_fraction", s.eol_fraction);
    maybe(j, "horizon_days", s.horizon_days);
    if (j.contains("usage_profiles")) {
        for (const auto& u : j["usage_profiles"]) {
            UsageTemplate t;
            maybe(u, "name", t.name);
            maybe(u, "charge_rate_c", t.charge_rate_c);
            maybe(u, "discharge_rate_c", t.discharge_rate_c);
            maybe(u, "v_min", t.v_min);
            maybe(u, "v_max", t.v_max);
            maybe(u, "hold_fraction", t.hold_fraction);
            maybe(u, "hold_jitter", t.hold_jitter);
            s.usage_profiles.push_back(t);
        }
    }
    return s;
}

TrialConfig trial_from_config(const json& cfg) {
    TrialConfig t;
    t.pipeline = pipeline_from_config(cfg);
    t.gp = gp_from_config(cfg);
    if (cfg.contains("selection")) {
        maybe(cfg["selection"], "k", t.k_features);
        maybe(cfg["selection"], "redundancy_threshold", t.redundancy_threshold);
    }
    if (cfg.contains("trial")) {
        const json& j = cfg["trial"];
        maybe(j, "n_repeats", t.n_repeats);
        maybe(j, "n_train", t.n_train);
        maybe(j, "n_test", t.n_test);
        maybe(j, "limited_full_life_counts", t.limited_full_life_counts);
        maybe(j, "feature_counts", t.feature_counts);
        maybe(j, "seed", t.seed);
        maybe(j, "workers", t.workers);
    }
    return t;
}

// Population from either a manifest (cleaned) or the synth generator.
std::vector<CellRecord> load_trial_population(const std::string& manifest, bool use_synth,
                                              const json& cfg, const TrialConfig& trial,
                                              std::uint64_t seed) {
    if (use_synth) {
        SynthSpec spec = synth_from_config(cfg);
        spec.seed = seed;
        spec.dt_s = trial.pipeline.dt_seconds();
        spec.eol_fraction = trial.pipeline.eol_fraction;
        auto pop = generate_population(spec, trial.workers);
        return std::move(pop.cells);
    }
    if (manifest.empty()) throw ConfigError("either --manifest or --synth is required");
    auto cells = load_population(manifest, {}, trial.workers);
    CleanReport report;
    cells = clean_population(std::move(cells), clean_from_config(cfg, trial.pipeline), &report);
    std::cerr << "population: " << report.retained << "/" << report.input << " cells retained ("
              << report.dropped_excluded << " excluded, " << report.dropped_lifetime
              << " outside lifetime window)\n";
    return cells;
}

int cmd_synth(const json& cfg, const std::string& out_dir, std::uint64_t seed, int n_cells,
              int workers) {
    SynthSpec spec = synth_from_config(cfg);
    spec.seed = seed;
    if (n_cells > 0) spec.n_cells = n_cells;
    auto pop = generate_population(spec, workers);
    write_population(pop, out_dir);
    std::cout << "wrote " << pop.cells.size() << " cells to " << out_dir << "\n";
    return 0;
}

int cmd_ingest(const json& cfg, const std::string& manifest, int workers) {
    PipelineConfig pipeline = pipeline_from_config(cfg);
    auto cells = load_population(manifest, {}, workers);
    CleanReport report;
    auto kept = clean_population(std::move(cells), clean_from_config(cfg, pipeline), &report);
    prepare_population(kept, pipeline, workers);
    std::cout << "manifest ok: " << report.retained << "/" << report.input << " cells retained\n";
    for (const auto& cell : kept) {
        auto eol = eol_time(cell, pipeline.eol_fraction * cell.nominal_capacity);
        std::cout << "  " << cell.cell_id << ": " << cell.samples.size() << " samples, "
                  << cell.capacity.size() << " capacity points";
        if (eol) std::cout << ", EoL " << *eol / kSecondsPerDay << " d";
        std::cout << "\n";
    }
    return 0;
}

int cmd_features(const json& cfg, const std::string& manifest, const std::string& out_dir,
                 int workers) {
    PipelineConfig pipeline = pipeline_from_config(cfg);
    auto cells = load_population(manifest, {}, workers);
    cells = clean_population(std::move(cells), clean_from_config(cfg, pipeline));
    prepare_population(cells, pipeline, workers);
    FeatureCatalog catalog = build_catalog(std::span<const CellRecord>(cells), pipeline.percentiles);
    for (StreamKind s : catalog.degenerate_streams)
        std::cerr << "warning: stream " << stream_label(s) << " has zero variance\n";
    ReductionSummary summary;
    FeatureTable table =
        assemble_table(std::span<const CellRecord>(cells), catalog, pipeline.dt_seconds(), &summary, workers);
    std::filesystem::create_directories(out_dir);
    write_feature_csv(table, std::filesystem::path(out_dir) / "features.csv");
    write_catalog_csv(catalog, std::filesystem::path(out_dir) / "catalog.csv");
    std::cout << "reduced n=" << summary.n_time_points << " time points x m=" << summary.m_streams
              << " streams to p=" << summary.p_rows << " rows x q=" << summary.q_features
              << " features\n";
    return 0;
}

int cmd_select(const std::string& features_csv, const std::string& out_dir, std::size_t k,
               double threshold) {
    FeatureTable table = read_feature_csv(features_csv);
    SimilarityMatrix sim = build_similarity(table);
    SelectionResult result = greedy_select(sim, k, threshold);
    std::filesystem::create_directories(out_dir);
    write_similarity_csv(sim, std::filesystem::path(out_dir) / "similarity.csv");
    write_selection_csv(result, sim, std::filesystem::path(out_dir) / "selection.csv");
    std::cout << "selected:";
    for (std::size_t f : result.selected) std::cout << " " << sim.labels[f];
    if (result.shortfall) std::cout << " (shortfall: fewer than k survivors)";
    std::cout << "\n";
    return 0;
}

int cmd_fit(const json& cfg, const std::string& manifest, const std::string& model_path,
            std::uint64_t seed, int workers) {
    TrialConfig trial = trial_from_config(cfg);
    trial.workers = workers;
    auto cells = load_population(manifest, {}, workers);
    cells = clean_population(std::move(cells), clean_from_config(cfg, trial.pipeline));
    prepare_population(cells, trial.pipeline, workers);

    FeatureCatalog catalog =
        build_catalog(std::span<const CellRecord>(cells), trial.pipeline.percentiles);
    FeatureTable table = assemble_table(std::span<const CellRecord>(cells), catalog,
                                        trial.pipeline.dt_seconds(), nullptr, workers);
    SimilarityMatrix sim = build_similarity(table);
    SelectionResult sel = greedy_select(sim, trial.k_features, trial.redundancy_threshold);
    std::vector<std::size_t> selected = sel.selected;
    std::size_t time_idx = catalog.time_feature_index();
    if (std::find(selected.begin(), selected.end(), time_idx) == selected.end())
        selected.push_back(time_idx);

    Eigen::MatrixXd x = table.feature_matrix(selected);
    Eigen::VectorXd y = table.targets();
    GpConfig gp_cfg = gp_from_config(cfg);
    FitOptions options;
    options.restarts = gp_cfg.restarts;
    options.max_iter = gp_cfg.max_iter;
    options.max_rows = gp_cfg.max_fit_rows;
    options.seed = seed;
    options.workers = workers > 0 ? workers : 0;
    GpModel gp = fit(x, y, default_init(x.cols(), y), options);

    PipelineModel model{std::move(gp), std::move(catalog), std::move(selected), trial.pipeline};
    save_pipeline_model(model, model_path);
    std::cout << "model written to " << model_path << " (features:";
    for (std::size_t f : model.selected) std::cout << " " << model.catalog.feature_types[f].label;
    std::cout << ")\n";
    return 0;
}

int cmd_forecast(const std::string& model_path, const std::string& manifest,
                 const std::string& cell_id, const std::string& out_dir, int workers) {
    PipelineModel model = load_pipeline_model(model_path);
    auto cells = load_population(manifest, {}, workers);
    auto it = std::find_if(cells.begin(), cells.end(),
                           [&](const CellRecord& c) { return c.cell_id == cell_id; });
    if (it == cells.end()) throw DataError("cell '" + cell_id + "' not found in manifest");
    compute_capacity_series(*it, model.pipeline.dt_seconds(), model.pipeline.smoothing_window);
    TrajectoryForecast traj =
        forecast_cell(*it, model.catalog, model.selected, model.gp, model.pipeline);
    std::filesystem::create_directories(out_dir);
    auto path = std::filesystem::path(out_dir) / (cell_id + "_trajectory.csv");
    write_trajectory_csv(traj, path);
    std::cout << "trajectory written to " << path.string() << "\n";
    if (traj.eol_pred) std::cout << "  predicted EoL: " << *traj.eol_pred / kSecondsPerDay << " d\n";
    if (traj.knee_pred)
        std::cout << "  predicted knee: " << *traj.knee_pred / kSecondsPerDay << " d\n";
    return 0;
}

int cmd_trial(const json& cfg, const std::string& mode, const std::string& manifest, bool use_synth,
              const std::string& out_dir, std::uint64_t seed, int workers, std::size_t k_override) {
    TrialConfig trial = trial_from_config(cfg);
    trial.seed = seed;
    if (workers > 0) trial.workers = workers;
    if (k_override > 0) trial.k_features = k_override;
    if (mode == "large") trial.mode = TrialConfig::Mode::large_scale;
    else if (mode == "limited") trial.mode = TrialConfig::Mode::limited_data;
    else if (mode == "sweep") trial.mode = TrialConfig::Mode::feature_sweep;
    else throw ConfigError("unknown trial mode '" + mode + "'");

    auto cells = load_trial_population(manifest, use_synth, cfg, trial, seed);
    prepare_population(cells, trial.pipeline, trial.workers);

    TrialRun run;
    switch (trial.mode) {
        case TrialConfig::Mode::large_scale: run = run_large_scale(trial, cells); break;
        case TrialConfig::Mode::limited_data: run = run_limited_data(trial, cells); break;
        case TrialConfig::Mode::feature_sweep: run = run_feature_sweep(trial, cells); break;
    }
    write_trial_outputs(run, out_dir);

    std::size_t failed = 0;
    for (const auto& r : run.repeats)
        if (r.failed) ++failed;
    std::cout << "trial complete: " << run.repeats.size() - failed << "/" << run.repeats.size()
              << " repeats ok, " << run.summary.n_cells << " scored cells\n";
    std::cout << "  median RMSE_Q " << run.summary.rmse_q.median << "% | median |PE(EoL)| "
              << run.summary.abs_pe_eol.median << "% | median |PE(knee)| "
              << run.summary.abs_pe_knee.median << "% | calibration " << run.summary.calibration
              << "\n";
    std::cout << "outputs in " << out_dir << "\n";
    return failed == run.repeats.size() ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"battery capacity fade forecasting pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", manifest, mode = "large", features_csv, model_path,
                cell_id;
    std::uint64_t seed = 1;
    int workers = 0, n_cells = 0;
    std::size_t k = 0;
    double threshold = 0.85;
    bool use_synth = false;

    app.add_option("--config", config_path, "JSON config file")->capture_default_str();

    auto* synth = app.add_subcommand("synth", "generate a synthetic cell population");
    synth->add_option("--out-dir", out_dir)->required();
    synth->add_option("--seed", seed);
    synth->add_option("--cells", n_cells, "override cell count");
    synth->add_option("--workers", workers);

    auto* ingest = app.add_subcommand("ingest", "validate a population manifest");
    ingest->add_option("--manifest", manifest)->required();
    ingest->add_option("--workers", workers);

    auto* features = app.add_subcommand("features", "build catalog and feature table");
    features->add_option("--manifest", manifest)->required();
    features->add_option("--out-dir", out_dir)->required();
    features->add_option("--workers", workers);

    auto* select = app.add_subcommand("select", "rank and down-select features");
    select->add_option("--features", features_csv, "features.csv from the features command")
        ->required();
    select->add_option("--out-dir", out_dir)->required();
    select->add_option("--k", k, "number of features")->required();
    select->add_option("--threshold", threshold, "redundancy threshold");

    auto* fit_cmd = app.add_subcommand("fit", "select features and fit the capacity model");
    fit_cmd->add_option("--manifest", manifest)->required();
    fit_cmd->add_option("--model", model_path, "output model file")->required();
    fit_cmd->add_option("--seed", seed);
    fit_cmd->add_option("--workers", workers);

    auto* forecast = app.add_subcommand("forecast", "forecast one cell's trajectory");
    forecast->add_option("--model", model_path)->required();
    forecast->add_option("--manifest", manifest)->required();
    forecast->add_option("--cell", cell_id)->required();
    forecast->add_option("--out-dir", out_dir)->required();
    forecast->add_option("--workers", workers);

    auto* trial = app.add_subcommand("trial", "run a repeated train/test experiment");
    trial->add_option("--mode", mode, "large | limited | sweep");
    trial->add_option("--manifest", manifest, "population manifest (real data)");
    trial->add_flag("--synth", use_synth, "generate the population instead");
    trial->add_option("--out-dir", out_dir)->required();
    trial->add_option("--seed", seed);
    trial->add_option("--workers", workers);
    trial->add_option("--k", k, "features to select");

    auto* report = app.add_subcommand("report", "render SVG plots from a trial directory");
    report->add_option("--out-dir", out_dir, "trial output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        json cfg = load_config_file(config_path);
        if (synth->parsed()) return cmd_synth(cfg, out_dir, seed, n_cells, workers);
        if (ingest->parsed()) return cmd_ingest(cfg, manifest, workers);
        if (features->parsed()) return cmd_features(cfg, manifest, out_dir, workers);
        if (select->parsed()) return cmd_select(features_csv, out_dir, k, threshold);
        if (fit_cmd->parsed()) return cmd_fit(cfg, manifest, model_path, seed, workers);
        if (forecast->parsed()) return cmd_forecast(model_path, manifest, cell_id, out_dir, workers);
        if (trial->parsed()) return cmd_trial(cfg, mode, manifest, use_synth, out_dir, seed, workers, k);
        if (report->parsed()) {
            auto written = fadecast::write_report(out_dir);
            for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
            return 0;
        }
    } catch (const fadecast::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
