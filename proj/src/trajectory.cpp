#include "fadecast/trajectory.hpp"

#include "fadecast/csv.hpp"
#include "fadecast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace fadecast {

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}

TrajectoryForecast integrate(double initial_q, double t0, std::span<const double> step_times,
                             std::span<const Prediction> predictions) {
    if (initial_q <= 0) throw std::invalid_argument("integrate: initial capacity must be positive");
    if (step_times.size() != predictions.size())
        throw std::invalid_argument("integrate: times and predictions differ in length");

    TrajectoryForecast traj;
    traj.times.reserve(predictions.size() + 1);
    traj.q_pred.reserve(predictions.size() + 1);
    traj.q_sd.reserve(predictions.size() + 1);
    traj.times.push_back(t0);
    traj.q_pred.push_back(initial_q);
    traj.q_sd.push_back(0.0);

    double q = initial_q;
    double var = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        q += predictions[i].mean;
        var += predictions[i].sd * predictions[i].sd;
        traj.times.push_back(step_times[i]);
        traj.q_pred.push_back(q);
        traj.q_sd.push_back(std::sqrt(var));
    }
    return traj;
}

std::optional<double> eol_crossing(std::span<const double> times, std::span<const double> q,
                                   double threshold) {
    if (threshold <= 0) throw std::invalid_argument("eol_crossing: threshold must be positive");
    if (times.size() != q.size() || times.empty()) return std::nullopt;
    if (q[0] < threshold) return times[0];
    for (std::size_t i = 1; i < q.size(); ++i) {
        if (q[i] < threshold) {
            double frac = (q[i - 1] - threshold) / (q[i - 1] - q[i]);
            return times[i - 1] + frac * (times[i] - times[i - 1]);
        }
    }
    return std::nullopt;
}

bool KneeGeometry::is_acceleration() const {
    return std::abs(late_fit.slope) > std::abs(early_fit.slope);
}

namespace {

LineFit least_squares(std::span<const double> x, std::span<const double> y, std::size_t begin,
                      std::size_t count) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(count);
    for (std::size_t i = begin; i < begin + count; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    LineFit fit;
    fit.slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

} // namespace

std::optional<KneeGeometry> knee_point(std::span<const double> times, std::span<const double> q,
                                       const KneeOptions& options) {
    if (times.size() != q.size()) throw std::invalid_argument("knee_point: size mismatch");
    if (options.early_frac + options.late_frac > 1.0 + 1e-12)
        throw std::invalid_argument("knee_point: window fractions exceed the trajectory");
    const std::size_t n = times.size();
    if (n < 3) throw KneeError("knee_point: fewer than 3 trajectory points");

    // Normalize both axes to [0,1]; angles are meaningless in mixed units.
    const double t0 = times.front(), t1 = times.back();
    auto [q_min_it, q_max_it] = std::minmax_element(q.begin(), q.end());
    const double q_lo = *q_min_it, q_hi = *q_max_it;
    if (t1 <= t0 || q_hi <= q_lo) throw KneeError("knee_point: degenerate trajectory");
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = (times[i] - t0) / (t1 - t0);
        y[i] = (q[i] - q_lo) / (q_hi - q_lo);
    }

    const auto n_early = static_cast<std::size_t>(std::llround(options.early_frac * static_cast<double>(n)));
    const auto n_late = static_cast<std::size_t>(std::llround(options.late_frac * static_cast<double>(n)));
    if (n_early < 3 || n_late < 3)
        throw KneeError("knee_point: fewer than 3 points in a fit window");

    KneeGeometry geom;
    geom.early_fit = least_squares(x, y, 0, n_early);
    geom.late_fit = least_squares(x, y, n - n_late, n_late);

    double angle =
        std::abs(std::atan(geom.late_fit.slope) - std::atan(geom.early_fit.slope));
    if (angle < options.min_angle_deg * kDegToRad) return std::nullopt; // no knee

    // Intersection of the two fitted lines.
    double denom = geom.early_fit.slope - geom.late_fit.slope;
    double px = (geom.late_fit.intercept - geom.early_fit.intercept) / denom;
    double py = geom.early_fit.slope * px + geom.early_fit.intercept;

    // Interior bisector: between the ray arriving along the early fit and
    // the ray leaving along the late fit.
    auto unit = [](double dx, double dy) {
        double len = std::hypot(dx, dy);
        return std::pair{dx / len, dy / len};
    };
    auto [ex, ey] = unit(-1.0, -geom.early_fit.slope);
    auto [lx, ly] = unit(1.0, geom.late_fit.slope);
    double bx = ex + lx, by = ey + ly;
    double blen = std::hypot(bx, by);
    if (blen < 1e-12) return std::nullopt;
    bx /= blen;
    by /= blen;
    if (std::abs(bx) > 1e-12) {
        geom.bisector.slope = by / bx;
        geom.bisector.intercept = py - geom.bisector.slope * px;
    } else { // vertical bisector: store as steep line through P
        geom.bisector.slope = by > 0 ? 1e12 : -1e12;
        geom.bisector.intercept = py - geom.bisector.slope * px;
    }

    // Signed distance of each trajectory point to the bisector line; sign
    // changes mark crossings. Pick the crossing nearest the fit
    // intersection, then snap to the nearest trajectory point.
    double nx = -by, ny = bx; // unit normal
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = (x[i] - px) * nx + (y[i] - py) * ny;

    std::optional<std::pair<double, double>> crossing; // (cx, cy)
    double best_to_p = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (dist[i] == 0.0 || (dist[i] < 0.0) != (dist[i + 1] < 0.0)) {
            double f = dist[i] == dist[i + 1] ? 0.0 : dist[i] / (dist[i] - dist[i + 1]);
            double cx = x[i] + f * (x[i + 1] - x[i]);
            double cy = y[i] + f * (y[i + 1] - y[i]);
            double d = std::hypot(cx - px, cy - py);
            if (d < best_to_p) {
                best_to_p = d;
                crossing = {cx, cy};
            }
        }
    }
    if (!crossing) {
        // Curve never meets the bisector (can happen for very shallow
        // geometries); fall back to the point closest to the line.
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(dist[i]) < std::abs(dist[best])) best = i;
        crossing = {x[best], y[best]};
    }

    std::size_t knee_idx = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double d = std::hypot(x[i] - crossing->first, y[i] - crossing->second);
        if (d < best_d) {
            best_d = d;
            knee_idx = i;
        }
    }
    geom.knee_normalized = x[knee_idx];
    geom.knee_time = times[knee_idx];
    return geom;
}

void truncate_series(std::vector<double>& times, std::vector<double>& values, double t_cut) {
    std::size_t keep = 0;
    while (keep < times.size() && times[keep] <= t_cut) ++keep;
    if (keep == 0) {
        times.clear();
        values.clear();
        return;
    }
    if (keep < times.size() && times[keep - 1] < t_cut) {
        double f = (t_cut - times[keep - 1]) / (times[keep] - times[keep - 1]);
        double v = values[keep - 1] + f * (values[keep] - values[keep - 1]);
        times.resize(keep);
        values.resize(keep);
        times.push_back(t_cut);
        values.push_back(v);
    } else {
        times.resize(keep);
        values.resize(keep);
    }
}

void write_trajectory_csv(const TrajectoryForecast& traj, const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"t_s", "q_pred_ah", "q_sd_ah", "q_obs_ah", "flag"});
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::string flag;
        auto near = [&](std::optional<double> mark) {
            if (!mark) return false;
            double step = i + 1 < traj.times.size() ? traj.times[i + 1] - traj.times[i]
                                                    : traj.times[i] - traj.times[i - 1];
            return std::abs(traj.times[i] - *mark) <= step / 2.0;
        };
        if (near(traj.knee_pred)) flag = "knee";
        if (near(traj.eol_pred)) flag = flag.empty() ? "eol" : flag + "+eol";
        w.row({csv::format_double(traj.times[i]), csv::format_double(traj.q_pred[i]),
               csv::format_double(traj.q_sd[i]),
               i < traj.q_observed.size() ? csv::format_double(traj.q_observed[i]) : "",
               flag});
    }
}

} // namespace fadecast
