#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fadecast {

// Matérn 5/2 ARD hyperparameters. Length scales live in standardized
// feature space; sigma_f and sigma_n are in target units (Ah).
struct Hyperparams {
    double sigma_f = 1.0;
    Eigen::VectorXd length_scales;
    double sigma_n = 0.1;
};

// Per-feature training mean/scale and the target mean removed before
// fitting; predictions are mapped back through this.
struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    double target_mean = 0.0;
};

struct Prediction {
    double mean = 0.0; // Ah
    double sd = 0.0;   // Ah, includes observation noise
};

// κ(r) = σ_f² (1 + √5 r + 5/3 r²) exp(−√5 r) with the ARD distance
// r² = Σ_k (x_i,k − x_j,k)² / σ_l,k².
double matern52(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj, const Hyperparams& hyper);

struct LmlResult {
    double value = 0.0;
    // Gradient w.r.t. [log σ_f, log σ_l,1 ... log σ_l,d, log σ_n].
    Eigen::VectorXd grad;
};

// Exact log marginal likelihood via Cholesky; X rows are (standardized)
// inputs, y the (centered) targets. Escalates diagonal jitter on
// factorization failure and throws ConditioningError when that runs out.
LmlResult log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Hyperparams& hyper);

struct RestartDiagnostics {
    int restart = 0;
    double final_value = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string failure; // empty on success
};

struct FitDiagnostics {
    std::vector<RestartDiagnostics> restarts;
    int chosen_restart = -1;
};

struct FitOptions {
    int restarts = 5;
    int max_iter = 100;
    double grad_tol = 1e-5;
    std::uint64_t seed = 0;
    std::size_t max_rows = 0; // 0 = use all rows; otherwise deterministic subsample
    int workers = 1;          // restarts run concurrently; results stay seed-deterministic
};

class GpModel {
public:
    Hyperparams hyper;
    Eigen::MatrixXd x_train; // standardized
    Eigen::VectorXd y_train; // centered
    Standardization standardization;
    Eigen::MatrixXd kernel_factor; // lower-triangular L with L L^T = K + σ_n² I (+ jitter)
    Eigen::VectorXd alpha;
    FitDiagnostics diagnostics;

    Prediction predict(const Eigen::VectorXd& x_raw) const;

    // Length scales mapped back to raw feature units for interpretation.
    Eigen::VectorXd destandardized_length_scales() const;
};

// Multi-start quasi-Newton MLE over log-hyperparameters. X and y are raw;
// standardization happens inside and is recorded on the model. `init` is
// interpreted in standardized space.
GpModel fit(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw, const Hyperparams& init,
            const FitOptions& options = {});

// Builds the factorized model at fixed hyperparameters (no MLE).
GpModel build_model(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                    const Hyperparams& hyper);

// Reasonable optimizer starting point: unit length scales, σ_f from the
// target spread.
Hyperparams default_init(Eigen::Index n_features, const Eigen::VectorXd& y_raw);

// Self-describing JSON model file; includes the training data and an
// integrity hash so forecasting can reload without refitting.
void save_model(const GpModel& model, const std::vector<std::string>& feature_names,
                const std::filesystem::path& path);
GpModel load_model(const std::filesystem::path& path, std::vector<std::string>* feature_names = nullptr);

// JSON-object forms for embedding in larger files.
std::string model_to_json_string(const GpModel& model, const std::vector<std::string>& feature_names);
GpModel model_from_json_string(const std::string& text, std::vector<std::string>* feature_names = nullptr);

} // namespace fadecast
