#include "fadecast/eval.hpp"

#include "fadecast/errors.hpp"
#include "fadecast/stats.hpp"
#include "fadecast/types.hpp"

#include <cmath>

namespace fadecast {

CellScore score_cell(const TrajectoryForecast& traj, const ObservedReference& observed,
                     double nominal_capacity) {
    if (traj.q_observed.size() != traj.times.size())
        throw std::invalid_argument("score_cell: observed series not aligned with forecast");
    if (nominal_capacity <= 0)
        throw std::invalid_argument("score_cell: nominal capacity must be positive");

    CellScore score;
    score.cell_id = traj.cell_id;

    // Index 0 is the shared known starting capacity; errors are measured
    // over the predicted steps.
    double se_q = 0.0, se_dq = 0.0;
    std::size_t n_steps = traj.times.size() - 1;
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        double err = traj.q_pred[i] - traj.q_observed[i];
        se_q += err * err;
        double dq_pred = traj.q_pred[i] - traj.q_pred[i - 1];
        double dq_obs = traj.q_observed[i] - traj.q_observed[i - 1];
        se_dq += (dq_pred - dq_obs) * (dq_pred - dq_obs);
        if (traj.q_observed[i] >= traj.q_pred[i] - 2.0 * traj.q_sd[i] &&
            traj.q_observed[i] <= traj.q_pred[i] + 2.0 * traj.q_sd[i])
            ++score.calibration_hits;
        ++score.calibration_total;
    }
    if (n_steps == 0) throw std::invalid_argument("score_cell: forecast has no steps");
    score.rmse_q = 100.0 * std::sqrt(se_q / static_cast<double>(n_steps)) / nominal_capacity;
    score.rmse_dq = 100.0 * std::sqrt(se_dq / static_cast<double>(n_steps)) / nominal_capacity;

    score.eol_pred = traj.eol_pred;
    score.eol_obs = observed.eol_time;
    score.knee_pred = traj.knee_pred;
    score.knee_obs = observed.knee_time;
    // PE(t) = 100 (t̂ − t) / t
    if (traj.eol_pred && observed.eol_time) {
        score.pe_eol = 100.0 * (*traj.eol_pred - *observed.eol_time) / *observed.eol_time;
        score.abs_err_eol_days = std::abs(*traj.eol_pred - *observed.eol_time) / kSecondsPerDay;
    }
    if (traj.knee_pred && observed.knee_time) {
        score.pe_knee = 100.0 * (*traj.knee_pred - *observed.knee_time) / *observed.knee_time;
        score.abs_err_knee_days = std::abs(*traj.knee_pred - *observed.knee_time) / kSecondsPerDay;
    }
    return score;
}

namespace {

MetricSummary summarize_values(std::vector<double>& values) {
    MetricSummary s;
    s.n = values.size();
    if (values.empty()) return s;
    s.mean = mean(values);
    s.median = quantile(values, 0.5);
    s.p95 = quantile(values, 0.95);
    return s;
}

} // namespace

TrialSummary summarize(std::span<const CellScore> scores) {
    if (scores.empty()) throw std::invalid_argument("summarize: no scores");
    TrialSummary summary;
    summary.n_cells = scores.size();

    std::vector<double> rmse_q, rmse_dq, pe_eol, pe_knee, err_eol, err_knee;
    for (const auto& s : scores) {
        rmse_q.push_back(s.rmse_q);
        rmse_dq.push_back(s.rmse_dq);
        if (s.pe_eol) pe_eol.push_back(std::abs(*s.pe_eol));
        if (s.pe_knee) pe_knee.push_back(std::abs(*s.pe_knee));
        if (s.abs_err_eol_days) err_eol.push_back(*s.abs_err_eol_days);
        if (s.abs_err_knee_days) err_knee.push_back(*s.abs_err_knee_days);
    }
    summary.rmse_q = summarize_values(rmse_q);
    summary.rmse_dq = summarize_values(rmse_dq);
    summary.abs_pe_eol = summarize_values(pe_eol);
    summary.abs_pe_knee = summarize_values(pe_knee);
    summary.abs_err_eol_days = summarize_values(err_eol);
    summary.abs_err_knee_days = summarize_values(err_knee);
    summary.calibration = calibration_score(scores);
    return summary;
}

double calibration_score(std::span<const CellScore> scores) {
    std::size_t hits = 0, total = 0;
    for (const auto& s : scores) {
        hits += s.calibration_hits;
        total += s.calibration_total;
    }
    if (total == 0) throw std::invalid_argument("calibration_score: no observations");
    return static_cast<double>(hits) / static_cast<double>(total);
}

} // namespace fadecast
