#include "fadecast/selection.hpp"

#include "fadecast/csv.hpp"
#include "fadecast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fadecast {

std::optional<double> abs_pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("abs_pearson: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("abs_pearson: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    double r = std::abs(sxy / std::sqrt(sxx * syy));
    return std::min(r, 1.0);
}

SimilarityMatrix build_similarity(const FeatureTable& table) {
    if (table.rows.empty()) throw PopulationError("build_similarity: empty feature table");
    const std::size_t q = table.feature_names.size();
    const std::size_t n = table.rows.size();
    const Eigen::Index cols = static_cast<Eigen::Index>(q + 1);

    // Standardize columns once; |corr| is then |Z^T Z| / N.
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), cols);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < q; ++c)
            z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.rows[r].values[c];
        z(static_cast<Eigen::Index>(r), cols - 1) = table.rows[r].target;
    }
    std::vector<bool> degenerate(q + 1, false);
    for (Eigen::Index c = 0; c < cols; ++c) {
        double mean = z.col(c).mean();
        z.col(c).array() -= mean;
        double sd = std::sqrt(z.col(c).squaredNorm() / static_cast<double>(n));
        if (sd == 0.0) {
            degenerate[static_cast<std::size_t>(c)] = true;
        } else {
            z.col(c) /= sd;
        }
    }

    SimilarityMatrix sim;
    sim.labels = table.feature_names;
    sim.labels.push_back("dQ");
    sim.values = (z.transpose() * z).cwiseAbs() / static_cast<double>(n);
    sim.values = sim.values.cwiseMin(1.0);
    for (Eigen::Index i = 0; i < cols; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (degenerate[static_cast<std::size_t>(i)] || degenerate[static_cast<std::size_t>(j)])
                sim.values(i, j) = std::numeric_limits<double>::quiet_NaN();
        }
        if (!degenerate[static_cast<std::size_t>(i)]) sim.values(i, i) = 1.0;
    }
    return sim;
}

SelectionResult greedy_select(const SimilarityMatrix& sim, std::size_t k, double threshold) {
    if (k < 1) throw std::invalid_argument("greedy_select: k must be >= 1");
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw std::invalid_argument("greedy_select: threshold must lie in (0,1]");

    const Eigen::Index target = sim.target_index();
    const std::size_t q = static_cast<std::size_t>(target);

    SelectionResult result;
    result.threshold = threshold;

    // Zero-variance features are never selectable.
    std::vector<std::size_t> remaining;
    for (std::size_t f = 0; f < q; ++f) {
        if (sim.defined(static_cast<Eigen::Index>(f), target)) {
            remaining.push_back(f);
        } else {
            result.rejected.push_back({f, RejectCause::low_rank, std::nullopt});
        }
    }

    while (result.selected.size() < k && !remaining.empty()) {
        std::size_t best = remaining[0];
        double best_sim = sim.values(static_cast<Eigen::Index>(best), target);
        for (std::size_t f : remaining) {
            double s = sim.values(static_cast<Eigen::Index>(f), target);
            if (s > best_sim) { // ties keep the lower index seen first
                best = f;
                best_sim = s;
            }
        }
        result.selected.push_back(best);

        std::vector<std::size_t> survivors;
        survivors.reserve(remaining.size());
        for (std::size_t f : remaining) {
            if (f == best) continue;
            double s = sim.values(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(best));
            if (!std::isnan(s) && s > threshold) {
                result.rejected.push_back({f, RejectCause::redundancy, best});
            } else {
                survivors.push_back(f);
            }
        }
        remaining = std::move(survivors);
    }
    result.shortfall = result.selected.size() < k;
    for (std::size_t f : remaining)
        result.rejected.push_back({f, RejectCause::low_rank, std::nullopt});
    return result;
}

void write_similarity_csv(const SimilarityMatrix& sim, const std::filesystem::path& path) {
    csv::Writer w(path);
    std::vector<std::string> header{""};
    header.insert(header.end(), sim.labels.begin(), sim.labels.end());
    w.row(header);
    for (Eigen::Index i = 0; i < sim.values.rows(); ++i) {
        std::vector<std::string> row{sim.labels[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < sim.values.cols(); ++j) {
            double v = sim.values(i, j);
            row.push_back(std::isnan(v) ? "nan" : csv::format_double(v));
        }
        w.row(row);
    }
}

void write_selection_csv(const SelectionResult& result, const SimilarityMatrix& sim,
                         const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"order", "feature", "status", "similarity_to_target", "partner"});
    const Eigen::Index target = sim.target_index();
    for (std::size_t i = 0; i < result.selected.size(); ++i) {
        std::size_t f = result.selected[i];
        w.row({std::to_string(i), sim.labels[f], "selected",
               csv::format_double(sim.values(static_cast<Eigen::Index>(f), target)), ""});
    }
    for (const auto& rej : result.rejected) {
        double s = sim.values(static_cast<Eigen::Index>(rej.feature), target);
        w.row({"", sim.labels[rej.feature],
               rej.cause == RejectCause::redundancy ? "rejected_redundant" : "rejected_low_rank",
               std::isnan(s) ? "nan" : csv::format_double(s),
               rej.partner ? sim.labels[*rej.partner] : ""});
    }
}

} // namespace fadecast
