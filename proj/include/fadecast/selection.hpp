#pragma once

#include "fadecast/features.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fadecast {

// |Pearson correlation| with population (1/N) normalization; nullopt when
// either input has zero variance.
std::optional<double> abs_pearson(std::span<const double> x, std::span<const double> y);

// Symmetric matrix of |Pearson| over all features plus the target. Entries
// involving a zero-variance column are NaN and reported by defined().
struct SimilarityMatrix {
    std::vector<std::string> labels; // feature names then "dQ"
    Eigen::MatrixXd values;

    Eigen::Index target_index() const { return values.rows() - 1; }
    bool defined(Eigen::Index i, Eigen::Index j) const { return !std::isnan(values(i, j)); }
};

SimilarityMatrix build_similarity(const FeatureTable& table);

enum class RejectCause { redundancy, low_rank };

struct Rejection {
    std::size_t feature = 0;
    RejectCause cause = RejectCause::low_rank;
    std::optional<std::size_t> partner; // the already-selected near-duplicate
};

struct SelectionResult {
    std::vector<std::size_t> selected; // in pick order
    std::vector<Rejection> rejected;
    double threshold = 0.85;
    bool shortfall = false; // fewer than k survivors were available
};

// Repeatedly picks the remaining feature most similar to the target, then
// drops remaining features whose similarity to the pick exceeds the
// threshold. Ties break toward the lower feature index.
SelectionResult greedy_select(const SimilarityMatrix& sim, std::size_t k, double threshold = 0.85);

void write_similarity_csv(const SimilarityMatrix& sim, const std::filesystem::path& path);
void write_selection_csv(const SelectionResult& result, const SimilarityMatrix& sim,
                         const std::filesystem::path& path);

} // namespace fadecast
