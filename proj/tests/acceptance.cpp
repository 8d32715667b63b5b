// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any required criterion fails. Criterion 10 runs only when a
// converted real-data manifest is supplied via FADECAST_REAL_MANIFEST.

#include "fadecast/harness.hpp"
#include "fadecast/report.hpp"
#include "fadecast/rng.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

using namespace fadecast;

namespace {

struct Criterion {
    int number;
    std::string title;
    std::function<bool(std::string&)> run;
    bool optional = false;
};

double now_seconds() {
    using clk = std::chrono::steady_clock;
    static const auto start = clk::now();
    return std::chrono::duration<double>(clk::now() - start).count();
}

// Shared desk-scale population for criteria 5, 7, 8: 40 cells, lives 15-40
// days, knees at 40-80% of life, 0.002 Ah measurement noise.
SynthSpec desk_spec() {
    SynthSpec spec;
    spec.n_cells = 40;
    spec.life_range_days = {15.0, 40.0};
    spec.knee_fraction_range = {0.4, 0.8};
    spec.noise_sd = 0.002;
    spec.seed = 20260801;
    spec.sample_period_s = 240.0;
    return spec;
}

TrialConfig desk_config() {
    TrialConfig config;
    config.n_repeats = 5;
    config.n_train = 30;
    config.n_test = 10;
    config.k_features = 5;
    config.seed = 11;
    config.workers = 0; // all cores
    config.gp.restarts = 2;
    config.gp.max_iter = 80;
    config.gp.max_fit_rows = 650;
    return config;
}

std::vector<CellRecord>& desk_population() {
    static std::vector<CellRecord> cells = [] {
        auto pop = generate_population(desk_spec(), 0);
        PipelineConfig pipeline;
        prepare_population(pop.cells, pipeline, 0);
        return std::move(pop.cells);
    }();
    return cells;
}

double test_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double sf,
                   const Eigen::VectorXd& ls) {
    double r2 = 0.0;
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        double d = (a(k) - b(k)) / ls(k);
        r2 += d * d;
    }
    double r = std::sqrt(r2);
    return sf * sf * (1.0 + std::sqrt(5.0) * r + 5.0 / 3.0 * r2) * std::exp(-std::sqrt(5.0) * r);
}

bool criterion_kernel(std::string& detail) {
    Hyperparams h;
    h.sigma_f = 1.37;
    h.length_scales = Eigen::VectorXd::Ones(4) * 0.8;
    h.sigma_n = 0.1;
    Eigen::VectorXd x(4);
    x << 1.0, -2.0, 0.5, 3.0;
    bool at_zero = matern52(x, x, h) == 1.37 * 1.37;

    Hyperparams unit;
    unit.sigma_f = 1.0;
    unit.length_scales = Eigen::VectorXd::Ones(1);
    unit.sigma_n = 0.1;
    Eigen::VectorXd a(1), b(1);
    a << 0.0;
    b << 1.0;
    // (1 + sqrt(5) + 5/3) exp(-sqrt(5)), computed independently to 30 digits
    const double reference = 0.523994108831820310592713250761;
    double err = std::abs(matern52(a, b, unit) - reference);
    std::ostringstream os;
    os << "r=0 exact: " << (at_zero ? "yes" : "NO") << ", |err@r=1| = " << err;
    detail = os.str();
    return at_zero && err < 1e-12;
}

bool criterion_gp_oracle(std::string& detail) {
    double t0 = now_seconds();
    Rng rng(424242);
    double worst_pred = 0.0, worst_grad = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.uniform() * 9.0);
        const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.uniform() * 3.0);
        Eigen::MatrixXd x(n, d);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.uniform(-3.0, 3.0);
            y(i) = 0.02 * rng.normal();
        }
        Hyperparams h;
        h.sigma_f = rng.uniform(0.5, 2.0);
        h.length_scales = Eigen::VectorXd::Ones(d);
        for (Eigen::Index k = 0; k < d; ++k) h.length_scales(k) = rng.uniform(0.4, 2.5);
        h.sigma_n = rng.uniform(0.05, 0.5);

        GpModel model = build_model(x, y, h);
        // Direct-formula oracle in the model's standardized space, via an
        // explicit matrix inverse.
        Eigen::MatrixXd kmat(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                kmat(i, j) =
                    test_kernel(model.x_train.row(i), model.x_train.row(j), h.sigma_f,
                                h.length_scales);
        kmat.diagonal().array() += h.sigma_n * h.sigma_n;
        Eigen::MatrixXd kinv = kmat.inverse();

        for (int probe = 0; probe < 4; ++probe) {
            Eigen::VectorXd xq(d);
            for (Eigen::Index j = 0; j < d; ++j) xq(j) = rng.uniform(-4.0, 4.0);
            Prediction got = model.predict(xq);
            Eigen::VectorXd z =
                (xq - model.standardization.mean).cwiseQuotient(model.standardization.scale);
            Eigen::VectorXd kstar(n);
            for (Eigen::Index i = 0; i < n; ++i)
                kstar(i) = test_kernel(z, model.x_train.row(i), h.sigma_f, h.length_scales);
            double mean = kstar.dot(kinv * model.y_train) + model.standardization.target_mean;
            double var = h.sigma_f * h.sigma_f + h.sigma_n * h.sigma_n - kstar.dot(kinv * kstar);
            double sd = std::sqrt(std::max(0.0, var));
            worst_pred = std::max({worst_pred, std::abs(got.mean - mean), std::abs(got.sd - sd)});
        }

        // Analytic gradient vs central finite differences in log-space.
        auto res = log_marginal_likelihood(x, y, h);
        const double step = 1e-5;
        double gnorm = res.grad.lpNorm<Eigen::Infinity>();
        for (Eigen::Index p = 0; p < res.grad.size(); ++p) {
            auto value_at = [&](double eps) {
                Hyperparams hp = h;
                if (p == 0) hp.sigma_f *= std::exp(eps);
                else if (p <= d) hp.length_scales(p - 1) *= std::exp(eps);
                else hp.sigma_n *= std::exp(eps);
                return log_marginal_likelihood(x, y, hp).value;
            };
            double fd = (value_at(step) - value_at(-step)) / (2.0 * step);
            double denom =
                std::max({std::abs(res.grad(p)), std::abs(fd), 1e-6 * std::max(1.0, gnorm)});
            worst_grad = std::max(worst_grad, std::abs(res.grad(p) - fd) / denom);
        }
    }
    double elapsed = now_seconds() - t0;
    std::ostringstream os;
    os << "max posterior deviation " << worst_pred << " (tol 1e-8), max grad rel err " << worst_grad
       << " (tol 1e-4), " << elapsed << " s";
    detail = os.str();
    return worst_pred < 1e-8 && worst_grad < 1e-4 && elapsed < 10.0;
}

bool criterion_interpolation(std::string& detail) {
    Rng rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 8;
        Eigen::MatrixXd x(n, 2);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            x(i, 0) = static_cast<double>(i) + 0.2 * rng.uniform();
            x(i, 1) = rng.uniform(-1.0, 1.0);
            y(i) = 0.01 * rng.normal();
        }
        Hyperparams h;
        h.sigma_f = 0.02;
        h.length_scales = Eigen::VectorXd::Ones(2);
        h.sigma_n = 1e-8;
        GpModel model = build_model(x, y, h);
        for (Eigen::Index i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(model.predict(x.row(i)).mean - y(i)));
    }
    std::ostringstream os;
    os << "max |prediction - target| at training inputs = " << worst << " Ah (tol 1e-6)";
    detail = os.str();
    return worst < 1e-6;
}

bool criterion_selection(std::string& detail) {
    // Constructed six-feature table: a dominant feature, its redundant twin
    // above 0.85, moderately informative time, three weak distractors.
    Rng rng(2121);
    const std::size_t n = 500;
    FeatureTable table;
    table.feature_names = {"V_1,2", "V_2,3", "time", "T_1,4", "I_2,3", "P_2,4"};
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / static_cast<double>(n);
        FeatureRow row;
        row.cell_id = "fig4";
        row.chunk_index = i;
        row.target = -0.01 - 0.01 * t + 0.001 * rng.normal();
        double v23 = row.target * 50.0 + 0.02 * rng.normal();
        double v12 = v23 + 0.03 * rng.normal();
        row.values = {v12, v23, t + 0.25 * rng.normal(), rng.normal(), rng.normal(),
                      rng.uniform()};
        table.rows.push_back(std::move(row));
    }
    SimilarityMatrix sim = build_similarity(table);
    SelectionResult result = greedy_select(sim, 2, 0.85);

    bool order_ok = result.selected.size() == 2 && sim.labels[result.selected[0]] == "V_2,3" &&
                    sim.labels[result.selected[1]] == "time";
    bool twin_rejected = false;
    for (const auto& rej : result.rejected) {
        if (sim.labels[rej.feature] == "V_1,2" && rej.cause == RejectCause::redundancy &&
            rej.partner && sim.labels[*rej.partner] == "V_2,3")
            twin_rejected = true;
    }
    std::ostringstream os;
    os << "picked [";
    for (std::size_t i = 0; i < result.selected.size(); ++i)
        os << (i ? ", " : "") << sim.labels[result.selected[i]];
    os << "], twin rejection recorded: " << (twin_rejected ? "yes" : "NO");
    detail = os.str();
    return order_ok && twin_rejected;
}

bool criterion_feature_algebra(std::string& detail) {
    auto& cells = desk_population();
    PipelineConfig pipeline;
    FeatureCatalog catalog =
        build_catalog(std::span<const CellRecord>(cells.data(), cells.size()));
    auto index_of = [&](const std::string& label) {
        auto names = catalog.feature_names();
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == label) return i;
        return static_cast<std::size_t>(-1);
    };
    std::size_t i12 = index_of("V_1,2"), i23 = index_of("V_2,3"), i13 = index_of("V_1,3");

    double worst_add = 0.0, worst_tel = 0.0;
    for (const auto& cell : cells) {
        auto chunks = chunk_cell(cell, pipeline.dt_seconds());
        auto rows = compute_features(cell, chunks, catalog);
        for (const auto& row : rows)
            worst_add = std::max(
                worst_add, std::abs(row.values[i13] - (row.values[i12] + row.values[i23])));

        // Integrating the observed transitions must reproduce the observed
        // capacity series.
        std::vector<Prediction> steps;
        std::vector<double> times;
        for (const auto& chunk : chunks) {
            steps.push_back({chunk.delta_q, 0.0});
            times.push_back(chunk.t_end);
        }
        auto traj = integrate(cell.capacity.front().q_smoothed, cell.capacity.front().t, times,
                              steps);
        for (std::size_t k = 0; k < cell.capacity.size(); ++k)
            worst_tel = std::max(worst_tel,
                                 std::abs(traj.q_pred[k] - cell.capacity[k].q_smoothed));
    }
    std::ostringstream os;
    os << "nested-range residual " << worst_add << " (tol 1e-9), telescoping residual " << worst_tel
       << " (tol 1e-12)";
    detail = os.str();
    return worst_add < 1e-9 && worst_tel < 1e-12;
}

bool criterion_knee_geometry(std::string& detail) {
    Rng rng(314);
    double worst_steps = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        double frac = rng.uniform(0.40, 0.80);
        double s_early = rng.uniform(0.5, 1.5);
        double s_late = s_early * rng.uniform(3.0, 8.0);
        const std::size_t n = 50 + static_cast<std::size_t>(rng.uniform() * 40.0);
        double t_total = rng.uniform(20.0, 60.0);
        double knee_time = frac * t_total;
        std::vector<double> t(n), q(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = t_total * static_cast<double>(i) / static_cast<double>(n - 1);
            q[i] = t[i] <= knee_time ? 1.1 - s_early * t[i]
                                     : 1.1 - s_early * knee_time - s_late * (t[i] - knee_time);
        }
        auto geom = knee_point(t, q);
        if (!geom) {
            detail = "missing knee on a bilinear curve";
            return false;
        }
        double step = t[1] - t[0];
        worst_steps = std::max(worst_steps, std::abs(geom->knee_time - knee_time) / step);
    }
    std::vector<double> t(50), q(50);
    for (std::size_t i = 0; i < 50; ++i) {
        t[i] = static_cast<double>(i);
        q[i] = 1.1 - 0.004 * static_cast<double>(i);
    }
    bool straight_none = !knee_point(t, q).has_value();
    std::ostringstream os;
    os << "worst knee error " << worst_steps << " steps (tol 1), straight line -> "
       << (straight_none ? "no knee" : "KNEE?");
    detail = os.str();
    return worst_steps <= 1.0 + 1e-9 && straight_none;
}

TrialRun desk_large_run() {
    static TrialRun run = run_large_scale(desk_config(), desk_population());
    return run;
}

bool criterion_desk_trial(std::string& detail) {
    double t0 = now_seconds();
    TrialRun run = desk_large_run();
    double elapsed = now_seconds() - t0;
    std::size_t failed = 0;
    for (const auto& r : run.repeats)
        if (r.failed) ++failed;
    std::ostringstream os;
    os << "median RMSE_Q " << run.summary.rmse_q.median << "% (tol 2), median |PE(EoL)| "
       << run.summary.abs_pe_eol.median << "% (tol 5), median |PE(knee)| "
       << run.summary.abs_pe_knee.median << "% (tol 10), " << run.summary.n_cells << " cells, "
       << failed << " failed repeats, " << elapsed << " s";
    detail = os.str();
    return failed == 0 && run.summary.rmse_q.median <= 2.0 &&
           run.summary.abs_pe_eol.median <= 5.0 && run.summary.abs_pe_knee.median <= 10.0 &&
           elapsed < 300.0;
}

bool criterion_limited_trend(std::string& detail) {
    TrialConfig config = desk_config();
    config.n_repeats = 3;
    config.limited_full_life_counts = {3, 10, 20, 30};
    TrialRun run = run_limited_data(config, desk_population());
    double at3 = -1.0, at30 = -1.0;
    std::ostringstream os;
    for (const auto& s : run.settings) {
        os << s.label << ": " << s.summary.abs_pe_eol.median << "%  ";
        if (s.label == "c=3") at3 = s.summary.abs_pe_eol.median;
        if (s.label == "c=30") at30 = s.summary.abs_pe_eol.median;
    }
    detail = "median |PE(EoL)| " + os.str();
    return at3 >= 0.0 && at30 >= 0.0 && at30 <= at3;
}

bool criterion_determinism_leakage(std::string& detail) {
    TrialConfig config = desk_config();
    config.n_repeats = 2;
    config.n_train = 15;
    config.n_test = 5;
    config.k_features = 3;
    config.gp.max_fit_rows = 300;

    auto cells = desk_population(); // copy; perturbed below
    auto base = std::filesystem::temp_directory_path() / "fadecast_acceptance_det";
    std::filesystem::remove_all(base);

    TrialConfig serial = config;
    serial.workers = 1;
    TrialRun a = run_large_scale(serial, cells);
    TrialRun b = run_large_scale(config, cells);
    write_trial_outputs(a, base / "a");
    write_trial_outputs(b, base / "b");
    bool identical = true;
    for (const char* name :
         {"scores.csv", "summary.csv", "selection.csv", "similarity.csv", "catalog.csv"}) {
        std::ifstream fa(base / "a" / name, std::ios::binary);
        std::ifstream fb(base / "b" / name, std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
        identical = identical && !sa.empty() && sa == sb;
    }

    // Leakage: perturb a repeat-0 test cell; thresholds and selection of
    // repeat 0 must not move.
    const std::string victim = a.repeats[0].test_ids[0];
    for (auto& cell : cells) {
        if (cell.cell_id != victim) continue;
        for (auto& s : cell.samples) {
            RawSample raw{s.t, s.current * 2.5, s.voltage * 1.3, s.temperature + 40.0};
            s = Sample::from_raw(raw);
        }
    }
    TrialRun c = run_large_scale(serial, cells);
    bool thresholds_equal = true;
    for (StreamKind kind : kAllStreams) {
        auto k = static_cast<std::size_t>(kind);
        const auto& ta = a.repeats[0].catalog->thresholds[k];
        const auto& tc = c.repeats[0].catalog->thresholds[k];
        for (std::size_t p = 0; p < ta.size(); ++p) thresholds_equal &= ta[p] == tc[p];
    }
    bool selection_equal = a.repeats[0].selected_features == c.repeats[0].selected_features;
    std::filesystem::remove_all(base);

    std::ostringstream os;
    os << "seed-identical CSV bytes: " << (identical ? "yes" : "NO")
       << ", thresholds unmoved: " << (thresholds_equal ? "yes" : "NO")
       << ", selection unmoved: " << (selection_equal ? "yes" : "NO");
    detail = os.str();
    return identical && thresholds_equal && selection_equal;
}

bool criterion_real_data(std::string& detail) {
    const char* manifest = std::getenv("FADECAST_REAL_MANIFEST");
    if (!manifest || std::string(manifest).empty()) {
        detail = "skipped: set FADECAST_REAL_MANIFEST to a converted-dataset manifest to enable";
        return true;
    }
    auto cells = load_population(manifest);
    CleanOptions clean;
    cells = clean_population(std::move(cells), clean);
    TrialConfig config;
    config.n_repeats = 20;
    config.n_train = 100;
    config.n_test = 30;
    config.k_features = 5;
    config.seed = 11;
    config.workers = 0;
    prepare_population(cells, config.pipeline, 0);
    TrialRun run = run_large_scale(config, cells);
    std::ostringstream os;
    os << "median RMSE_Q " << run.summary.rmse_q.median << "% (ref 0.83), |PE(EoL)| "
       << run.summary.abs_pe_eol.median << "% (ref 1.3), |PE(knee)| "
       << run.summary.abs_pe_knee.median << "% (ref 2.6), calibration " << run.summary.calibration
       << " (ref 0.42, reported not asserted)";
    detail = os.str();
    return run.summary.rmse_q.median <= 2.0 * 0.83 && run.summary.abs_pe_eol.median <= 2.0 * 1.3 &&
           run.summary.abs_pe_knee.median <= 2.0 * 2.6;
}

} // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "Matern 5/2 kernel point values", criterion_kernel},
        {2, "GP posterior and gradient oracle equivalence", criterion_gp_oracle},
        {3, "noiseless interpolation at training inputs", criterion_interpolation},
        {4, "greedy selection reproduces the worked scenario", criterion_selection},
        {5, "feature algebra and transition telescoping", criterion_feature_algebra},
        {6, "knee geometry on bilinear curves", criterion_knee_geometry},
        {7, "desk-scale synthetic large trial accuracy", criterion_desk_trial},
        {8, "limited-data trend c=30 vs c=3", criterion_limited_trend},
        {9, "determinism and train/test leakage", criterion_determinism_leakage},
        {10, "real-data reproduction (optional)", criterion_real_data, true},
    };

    int failures = 0;
    for (auto& criterion : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = criterion.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::cout << (ok ? "PASS" : "FAIL") << ": criterion " << criterion.number << " - "
                  << criterion.title << " [" << detail << "]" << std::endl;
        if (!ok && !criterion.optional) ++failures;
    }
    if (failures) std::cout << failures << " criteria failed" << std::endl;
    return failures == 0 ? 0 : 1;
}
