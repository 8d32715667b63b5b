#include "fadecast/harness.hpp"

#include "fadecast/csv.hpp"
#include "fadecast/errors.hpp"
#include "fadecast/parallel.hpp"
#include "fadecast/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>

namespace fadecast {

void prepare_population(std::vector<CellRecord>& cells, const PipelineConfig& pipeline,
                        int workers) {
    parallel_for(cells.size(), workers, [&](std::size_t i) {
        compute_capacity_series(cells[i], pipeline.dt_seconds(), pipeline.smoothing_window);
    });
}

TrajectoryForecast forecast_cell(const CellRecord& cell, const FeatureCatalog& catalog,
                                 std::span<const std::size_t> selected, const GpModel& model,
                                 const PipelineConfig& pipeline) {
    auto chunks = chunk_cell(cell, pipeline.dt_seconds());
    auto rows = compute_features(cell, chunks, catalog);

    std::vector<Prediction> preds;
    std::vector<double> step_times;
    preds.reserve(rows.size());
    step_times.reserve(rows.size());
    Eigen::VectorXd x(static_cast<Eigen::Index>(selected.size()));
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < selected.size(); ++k)
            x(static_cast<Eigen::Index>(k)) = row.values[selected[k]];
        preds.push_back(model.predict(x));
        step_times.push_back(row.t_end);
    }

    TrajectoryForecast traj =
        integrate(cell.capacity.front().q_smoothed, cell.capacity.front().t, step_times, preds);
    traj.cell_id = cell.cell_id;
    traj.q_observed.reserve(cell.capacity.size());
    for (const auto& p : cell.capacity) traj.q_observed.push_back(p.q_smoothed);

    const double threshold = pipeline.eol_fraction * cell.nominal_capacity;
    traj.eol_pred = eol_crossing(traj.times, traj.q_pred, threshold);
    std::vector<double> t = traj.times, q = traj.q_pred;
    if (traj.eol_pred) truncate_series(t, q, *traj.eol_pred);
    try {
        if (auto geom = knee_point(t, q, pipeline.knee)) traj.knee_pred = geom->knee_time;
    } catch (const KneeError&) {
        // short or degenerate trajectory; leave the knee absent
    }
    return traj;
}

ObservedReference observe_reference(const CellRecord& cell, const PipelineConfig& pipeline) {
    ObservedReference ref;
    std::vector<double> t, q;
    t.reserve(cell.capacity.size());
    q.reserve(cell.capacity.size());
    for (const auto& p : cell.capacity) {
        t.push_back(p.t);
        q.push_back(p.q_smoothed);
    }
    const double threshold = pipeline.eol_fraction * cell.nominal_capacity;
    ref.eol_time = eol_crossing(t, q, threshold);
    if (ref.eol_time) truncate_series(t, q, *ref.eol_time);
    try {
        if (auto geom = knee_point(t, q, pipeline.knee)) ref.knee_time = geom->knee_time;
    } catch (const KneeError&) {
    }
    return ref;
}

namespace {

struct RepeatSpec {
    std::string setting;
    int repeat = 0;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    // Train cells truncated for the limited-data mode: index -> cut time.
    std::vector<std::pair<std::size_t, double>> truncations;
    std::size_t k_features = 5; // 0 = time-only baseline
    bool keep_artifacts = false;
};

std::uint64_t fit_seed(const TrialConfig& config, int setting_index, int repeat) {
    return config.seed * 1000003ULL + static_cast<std::uint64_t>(setting_index) * 1009ULL +
           static_cast<std::uint64_t>(repeat);
}

RepeatResult run_repeat(const TrialConfig& config, std::span<const CellRecord> population,
                        const RepeatSpec& spec, int setting_index) {
    const auto& pipeline = config.pipeline;
    RepeatResult result;
    result.setting = spec.setting;
    result.repeat = spec.repeat;

    // Train/test disjointness is a hard invariant of every trial.
    std::set<std::size_t> train_set(spec.train_idx.begin(), spec.train_idx.end());
    for (std::size_t t : spec.test_idx)
        if (train_set.count(t)) throw Error("trial repeat: train and test sets overlap");

    for (std::size_t i : spec.train_idx) result.train_ids.push_back(population[i].cell_id);
    for (std::size_t i : spec.test_idx) result.test_ids.push_back(population[i].cell_id);

    try {
        // Materialize truncated training cells; untouched cells are used in
        // place.
        std::vector<CellRecord> truncated;
        truncated.reserve(spec.truncations.size());
        std::vector<const CellRecord*> train_cells;
        train_cells.reserve(spec.train_idx.size());
        for (std::size_t i : spec.train_idx) {
            auto it = std::find_if(spec.truncations.begin(), spec.truncations.end(),
                                   [&](const auto& p) { return p.first == i; });
            if (it == spec.truncations.end()) {
                train_cells.push_back(&population[i]);
            } else {
                CellRecord cut = truncate_cell(population[i], it->second);
                cut.capacity.clear();
                compute_capacity_series(cut, pipeline.dt_seconds(), pipeline.smoothing_window);
                truncated.push_back(std::move(cut));
                train_cells.push_back(&truncated.back());
            }
        }

        FeatureCatalog catalog = build_catalog(std::span<const CellRecord* const>(train_cells),
                                               pipeline.percentiles);
        FeatureTable table = assemble_table(std::span<const CellRecord* const>(train_cells),
                                            catalog, pipeline.dt_seconds());

        std::vector<std::size_t> selected;
        const std::size_t time_idx = catalog.time_feature_index();
        std::optional<SimilarityMatrix> sim;
        if (spec.k_features == 0) {
            // Baseline: calendar time is the only input, selection skipped.
            selected = {time_idx};
        } else {
            sim = build_similarity(table);
            SelectionResult sel = greedy_select(*sim, spec.k_features, config.redundancy_threshold);
            selected = sel.selected;
            // Table-IV convention: time always rides along with the k picks.
            if (std::find(selected.begin(), selected.end(), time_idx) == selected.end()) {
                selected.push_back(time_idx);
                result.time_forced = true;
            }
        }
        for (std::size_t f : selected) result.selected_features.push_back(table.feature_names[f]);

        Eigen::MatrixXd x = table.feature_matrix(selected);
        Eigen::VectorXd y = table.targets();
        FitOptions fit_options;
        fit_options.restarts = config.gp.restarts;
        fit_options.max_iter = config.gp.max_iter;
        fit_options.max_rows = config.gp.max_fit_rows;
        fit_options.seed = fit_seed(config, setting_index, spec.repeat);
        GpModel model = fit(x, y, default_init(x.cols(), y), fit_options);

        for (std::size_t i : spec.test_idx) {
            const CellRecord& cell = population[i];
            TrajectoryForecast traj = forecast_cell(cell, catalog, selected, model, pipeline);
            ObservedReference ref = observe_reference(cell, pipeline);
            result.scores.push_back(score_cell(traj, ref, cell.nominal_capacity));
            if (spec.keep_artifacts) result.forecasts.push_back(std::move(traj));
        }
        if (spec.keep_artifacts) {
            result.catalog = catalog;
            if (sim) result.similarity = std::move(sim);
        }
    } catch (const std::exception& e) {
        result.failed = true;
        result.failure = e.what();
        result.scores.clear();
        result.forecasts.clear();
    }
    return result;
}

std::vector<std::size_t> permuted_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx);
    return idx;
}

void check_population(const TrialConfig& config, std::span<const CellRecord> population) {
    if (population.size() < static_cast<std::size_t>(config.n_train + config.n_test))
        throw ConfigError("trial: population of " + std::to_string(population.size()) +
                          " cells is smaller than n_train + n_test");
    for (const auto& cell : population)
        if (cell.capacity.size() < 2)
            throw ConfigError("trial: cell " + cell.cell_id +
                              " has no resampled capacity series; run prepare_population");
}

TrialSummary pooled_summary(const std::vector<RepeatResult>& repeats) {
    std::vector<CellScore> all;
    for (const auto& r : repeats)
        for (const auto& s : r.scores) all.push_back(s);
    TrialSummary summary{};
    if (!all.empty()) {
        summary = summarize(all);
        std::set<std::string> unique_trials;
        for (const auto& r : repeats)
            if (!r.failed) unique_trials.insert(r.setting + "#" + std::to_string(r.repeat));
        summary.n_trials = unique_trials.size();
    }
    return summary;
}

TrialSummary setting_summary(const std::vector<RepeatResult>& repeats, const std::string& label) {
    std::vector<CellScore> scores;
    std::size_t n_trials = 0;
    for (const auto& r : repeats) {
        if (r.setting != label) continue;
        if (!r.failed) ++n_trials;
        for (const auto& s : r.scores) scores.push_back(s);
    }
    TrialSummary summary{};
    if (!scores.empty()) {
        summary = summarize(scores);
        summary.n_trials = n_trials;
    }
    return summary;
}

} // namespace

TrialRun run_large_scale(const TrialConfig& config, std::span<const CellRecord> population) {
    check_population(config, population);
    TrialRun run;
    run.config = config;
    run.repeats.resize(static_cast<std::size_t>(config.n_repeats));

    parallel_for(static_cast<std::size_t>(config.n_repeats), config.workers, [&](std::size_t r) {
        Rng rng(config.seed, r);
        auto idx = permuted_indices(population.size(), rng);
        RepeatSpec spec;
        spec.repeat = static_cast<int>(r);
        spec.test_idx.assign(idx.begin(), idx.begin() + config.n_test);
        spec.train_idx.assign(idx.begin() + config.n_test,
                              idx.begin() + config.n_test + config.n_train);
        spec.k_features = config.k_features;
        spec.keep_artifacts = r == 0;
        run.repeats[r] = run_repeat(config, population, spec, 0);
    });
    run.summary = pooled_summary(run.repeats);
    return run;
}

TrialRun run_limited_data(const TrialConfig& config, std::span<const CellRecord> population) {
    check_population(config, population);
    if (config.limited_full_life_counts.empty())
        throw ConfigError("trial: limited_full_life_counts is empty");

    TrialRun run;
    run.config = config;

    // Observed knees of the full data set the truncation points.
    std::vector<std::optional<double>> knees(population.size());
    parallel_for(population.size(), config.workers, [&](std::size_t i) {
        knees[i] = observe_reference(population[i], config.pipeline).knee_time;
    });

    const auto n_settings = config.limited_full_life_counts.size();
    const auto per_setting = static_cast<std::size_t>(config.n_repeats);
    run.repeats.resize(n_settings * per_setting);

    for (std::size_t s = 0; s < n_settings; ++s) {
        int c = config.limited_full_life_counts[s];
        if (c < 0 || c > config.n_train)
            throw ConfigError("trial: limited count " + std::to_string(c) +
                              " outside [0, n_train]");
        parallel_for(per_setting, config.workers, [&](std::size_t r) {
            // Splits derive from (seed, repeat) only, so settings share them
            // and the c sweep is a paired comparison with nested truncation.
            Rng rng(config.seed, r);
            auto idx = permuted_indices(population.size(), rng);
            RepeatSpec spec;
            spec.setting = "c=" + std::to_string(c);
            spec.repeat = static_cast<int>(r);
            spec.test_idx.assign(idx.begin(), idx.begin() + config.n_test);
            spec.train_idx.assign(idx.begin() + config.n_test,
                                  idx.begin() + config.n_test + config.n_train);
            for (std::size_t j = static_cast<std::size_t>(c); j < spec.train_idx.size(); ++j) {
                std::size_t cell_idx = spec.train_idx[j];
                if (knees[cell_idx]) spec.truncations.emplace_back(cell_idx, *knees[cell_idx]);
            }
            spec.k_features = config.k_features;
            spec.keep_artifacts = r == 0 && s == 0;
            run.repeats[s * per_setting + r] =
                run_repeat(config, population, spec, static_cast<int>(s));
        });
        run.settings.push_back(
            {"c=" + std::to_string(c), setting_summary(run.repeats, "c=" + std::to_string(c))});
    }
    run.summary = pooled_summary(run.repeats);
    return run;
}

TrialRun run_feature_sweep(const TrialConfig& config, std::span<const CellRecord> population) {
    check_population(config, population);
    if (config.feature_counts.empty()) throw ConfigError("trial: feature_counts is empty");

    TrialRun run;
    run.config = config;

    std::vector<std::pair<std::string, std::size_t>> settings;
    for (std::size_t k : config.feature_counts) settings.emplace_back("k=" + std::to_string(k), k);
    settings.emplace_back("time", 0); // time-only baseline

    const auto per_setting = static_cast<std::size_t>(config.n_repeats);
    run.repeats.resize(settings.size() * per_setting);
    for (std::size_t s = 0; s < settings.size(); ++s) {
        parallel_for(per_setting, config.workers, [&](std::size_t r) {
            Rng rng(config.seed, r);
            auto idx = permuted_indices(population.size(), rng);
            RepeatSpec spec;
            spec.setting = settings[s].first;
            spec.repeat = static_cast<int>(r);
            spec.test_idx.assign(idx.begin(), idx.begin() + config.n_test);
            spec.train_idx.assign(idx.begin() + config.n_test,
                                  idx.begin() + config.n_test + config.n_train);
            spec.k_features = settings[s].second;
            spec.keep_artifacts = r == 0 && s == 0;
            run.repeats[s * per_setting + r] =
                run_repeat(config, population, spec, static_cast<int>(s));
        });
        run.settings.push_back({settings[s].first, setting_summary(run.repeats, settings[s].first)});
    }
    run.summary = pooled_summary(run.repeats);

    // Soft trend check: more features should not hurt the median capacity
    // error. Logged, never fatal.
    std::size_t k_lo = *std::min_element(config.feature_counts.begin(), config.feature_counts.end());
    std::size_t k_hi = *std::max_element(config.feature_counts.begin(), config.feature_counts.end());
    double rmse_lo = -1.0, rmse_hi = -1.0;
    for (const auto& s : run.settings) {
        if (s.label == "k=" + std::to_string(k_lo)) rmse_lo = s.summary.rmse_q.median;
        if (s.label == "k=" + std::to_string(k_hi)) rmse_hi = s.summary.rmse_q.median;
    }
    if (rmse_lo >= 0 && rmse_hi >= 0 && rmse_hi > rmse_lo) {
        std::cerr << "note: median RMSE_Q at k=" << k_hi << " (" << rmse_hi
                  << "%) exceeds k=" << k_lo << " (" << rmse_lo
                  << "%); feature-count trend inverted on this population\n";
    }
    return run;
}

namespace {

std::string opt_str(const std::optional<double>& v) {
    return v ? csv::format_double(*v) : "";
}

void summary_row(csv::Writer& w, const std::string& label, const TrialSummary& s) {
    auto m = [](const MetricSummary& ms) {
        return std::vector<std::string>{csv::format_double(ms.mean), csv::format_double(ms.median),
                                        csv::format_double(ms.p95), std::to_string(ms.n)};
    };
    std::vector<std::string> row{label};
    for (const auto& metric :
         {s.rmse_dq, s.rmse_q, s.abs_pe_eol, s.abs_pe_knee, s.abs_err_eol_days, s.abs_err_knee_days}) {
        auto cols = m(metric);
        row.insert(row.end(), cols.begin(), cols.end());
    }
    row.push_back(csv::format_double(s.calibration));
    row.push_back(std::to_string(s.n_cells));
    row.push_back(std::to_string(s.n_trials));
    w.row(row);
}

} // namespace

void write_trial_outputs(const TrialRun& run, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        nlohmann::json j;
        const auto& c = run.config;
        j["mode"] = c.mode == TrialConfig::Mode::large_scale    ? "large"
                    : c.mode == TrialConfig::Mode::limited_data ? "limited"
                                                                : "sweep";
        j["n_repeats"] = c.n_repeats;
        j["n_train"] = c.n_train;
        j["n_test"] = c.n_test;
        j["k_features"] = c.k_features;
        j["redundancy_threshold"] = c.redundancy_threshold;
        j["limited_full_life_counts"] = c.limited_full_life_counts;
        j["feature_counts"] = c.feature_counts;
        j["seed"] = c.seed;
        j["dt_hours"] = c.pipeline.dt_hours;
        j["smoothing_window"] = c.pipeline.smoothing_window;
        j["percentiles"] = c.pipeline.percentiles;
        j["eol_fraction"] = c.pipeline.eol_fraction;
        j["knee_early_frac"] = c.pipeline.knee.early_frac;
        j["knee_late_frac"] = c.pipeline.knee.late_frac;
        j["gp_restarts"] = c.gp.restarts;
        j["gp_max_iter"] = c.gp.max_iter;
        j["gp_max_fit_rows"] = c.gp.max_fit_rows;
        std::ofstream out(out_dir / "run_config.json");
        out << j.dump(2) << '\n';
    }

    {
        csv::Writer w(out_dir / "scores.csv");
        w.row({"setting", "repeat", "cell_id", "rmse_q_pct", "rmse_dq_pct", "pe_eol_pct",
               "pe_knee_pct", "abs_err_eol_days", "abs_err_knee_days", "cal_hits", "cal_total",
               "eol_pred_days", "eol_obs_days", "knee_pred_days", "knee_obs_days"});
        for (const auto& r : run.repeats) {
            for (const auto& s : r.scores) {
                auto days = [](const std::optional<double>& v) {
                    return v ? csv::format_double(*v / kSecondsPerDay) : std::string{};
                };
                w.row({r.setting, std::to_string(r.repeat), s.cell_id,
                       csv::format_double(s.rmse_q), csv::format_double(s.rmse_dq),
                       opt_str(s.pe_eol), opt_str(s.pe_knee), opt_str(s.abs_err_eol_days),
                       opt_str(s.abs_err_knee_days), std::to_string(s.calibration_hits),
                       std::to_string(s.calibration_total), days(s.eol_pred), days(s.eol_obs),
                       days(s.knee_pred), days(s.knee_obs)});
            }
        }
    }

    {
        csv::Writer w(out_dir / "summary.csv");
        std::vector<std::string> header{"setting"};
        for (const char* metric : {"rmse_dq_pct", "rmse_q_pct", "abs_pe_eol_pct", "abs_pe_knee_pct",
                                   "abs_err_eol_days", "abs_err_knee_days"}) {
            header.push_back(std::string(metric) + "_mean");
            header.push_back(std::string(metric) + "_median");
            header.push_back(std::string(metric) + "_p95");
            header.push_back(std::string(metric) + "_n");
        }
        header.push_back("calibration");
        header.push_back("n_cells");
        header.push_back("n_trials");
        w.row(header);
        for (const auto& s : run.settings) summary_row(w, s.label, s.summary);
        summary_row(w, "all", run.summary);
    }

    {
        csv::Writer w(out_dir / "selection.csv");
        w.row({"setting", "repeat", "order", "feature", "forced_time"});
        for (const auto& r : run.repeats) {
            for (std::size_t i = 0; i < r.selected_features.size(); ++i) {
                bool forced = r.time_forced && i + 1 == r.selected_features.size();
                w.row({r.setting, std::to_string(r.repeat), std::to_string(i),
                       r.selected_features[i], forced ? "1" : "0"});
            }
        }
    }

    {
        csv::Writer w(out_dir / "repeats.csv");
        w.row({"setting", "repeat", "failed", "failure", "n_scores", "train_ids", "test_ids"});
        for (const auto& r : run.repeats) {
            auto join = [](const std::vector<std::string>& v) {
                std::string out;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out.push_back(';');
                    out += v[i];
                }
                return out;
            };
            w.row({r.setting, std::to_string(r.repeat), r.failed ? "1" : "0", r.failure,
                   std::to_string(r.scores.size()), join(r.train_ids), join(r.test_ids)});
        }
    }

    for (const auto& r : run.repeats) {
        if (r.similarity) write_similarity_csv(*r.similarity, out_dir / "similarity.csv");
        if (r.catalog) write_catalog_csv(*r.catalog, out_dir / "catalog.csv");
        if (!r.forecasts.empty()) {
            auto dir = out_dir / "trajectories";
            for (const auto& traj : r.forecasts) {
                std::string setting = r.setting.empty() ? "large" : r.setting;
                std::replace(setting.begin(), setting.end(), '=', '_');
                write_trajectory_csv(traj, dir / (setting + "_r" + std::to_string(r.repeat) + "_" +
                                                  traj.cell_id + ".csv"));
            }
        }
    }
}

namespace {

nlohmann::json catalog_to_json(const FeatureCatalog& catalog) {
    nlohmann::json j;
    j["percentiles"] = catalog.percentiles;
    for (StreamKind kind : kAllStreams)
        j["thresholds"][std::string(stream_label(kind))] =
            catalog.thresholds[static_cast<std::size_t>(kind)];
    return j;
}

FeatureCatalog catalog_from_json(const nlohmann::json& j) {
    FeatureCatalog catalog;
    catalog.percentiles = j["percentiles"].get<std::vector<double>>();
    for (StreamKind kind : kAllStreams)
        catalog.thresholds[static_cast<std::size_t>(kind)] =
            j["thresholds"][std::string(stream_label(kind))].get<std::vector<double>>();
    catalog.enumerate_feature_types();
    return catalog;
}

} // namespace

void save_pipeline_model(const PipelineModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["format"] = "fadecast-pipeline-model";
    j["version"] = 1;
    j["catalog"] = catalog_to_json(model.catalog);
    j["selected"] = model.selected;
    std::vector<std::string> names;
    for (std::size_t f : model.selected) names.push_back(model.catalog.feature_types[f].label);
    j["gp"] = nlohmann::json::parse(model_to_json_string(model.gp, names));
    j["pipeline"]["dt_hours"] = model.pipeline.dt_hours;
    j["pipeline"]["smoothing_window"] = model.pipeline.smoothing_window;
    j["pipeline"]["eol_fraction"] = model.pipeline.eol_fraction;
    j["pipeline"]["knee_early_frac"] = model.pipeline.knee.early_frac;
    j["pipeline"]["knee_late_frac"] = model.pipeline.knee.late_frac;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

PipelineModel load_pipeline_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    nlohmann::json j;
    in >> j;
    if (j.value("format", "") != "fadecast-pipeline-model")
        throw DataError("not a pipeline model file: " + path.string());
    PipelineModel model;
    model.catalog = catalog_from_json(j["catalog"]);
    model.selected = j["selected"].get<std::vector<std::size_t>>();
    model.gp = model_from_json_string(j["gp"].dump());
    model.pipeline.dt_hours = j["pipeline"]["dt_hours"].get<double>();
    model.pipeline.smoothing_window = j["pipeline"]["smoothing_window"].get<int>();
    model.pipeline.eol_fraction = j["pipeline"]["eol_fraction"].get<double>();
    model.pipeline.knee.early_frac = j["pipeline"]["knee_early_frac"].get<double>();
    model.pipeline.knee.late_frac = j["pipeline"]["knee_late_frac"].get<double>();
    model.pipeline.percentiles = model.catalog.percentiles;
    return model;
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
    csv::Table t = csv::read_file(path);
    auto c_id = t.column("cell_id");
    auto c_chunk = t.column("chunk_index");
    auto c_tend = t.column("t_end_s");
    auto c_target = t.column("delta_q_ah");
    if (!c_id || !c_chunk || !c_tend || !c_target)
        throw SchemaError("feature file " + path.string() + " missing standard columns");

    FeatureTable table;
    std::vector<std::size_t> feature_cols;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i == *c_id || i == *c_chunk || i == *c_tend || i == *c_target) continue;
        feature_cols.push_back(i);
        table.feature_names.push_back(t.header[i]);
    }
    for (const auto& row : t.rows) {
        FeatureRow fr;
        fr.cell_id = row[*c_id];
        fr.chunk_index = static_cast<std::size_t>(csv::parse_double(row[*c_chunk], path.string()));
        fr.t_end = csv::parse_double(row[*c_tend], path.string());
        fr.target = csv::parse_double(row[*c_target], path.string());
        for (std::size_t c : feature_cols)
            fr.values.push_back(csv::parse_double(row[c], path.string()));
        table.rows.push_back(std::move(fr));
    }
    return table;
}

} // namespace fadecast
