#include "fadecast/gpr.hpp"

#include "fadecast/errors.hpp"
#include "fadecast/parallel.hpp"
#include "fadecast/rng.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace fadecast {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_hyper(const Hyperparams& hyper) {
    if (!(hyper.sigma_f > 0) || !(hyper.sigma_n > 0))
        throw std::invalid_argument("hyperparameters must be strictly positive");
    for (Eigen::Index k = 0; k < hyper.length_scales.size(); ++k)
        if (!(hyper.length_scales(k) > 0))
            throw std::invalid_argument("length scales must be strictly positive");
}

// Scaled squared distances r² between all row pairs, reusing per-dimension
// squared differences.
struct PairwiseWorkspace {
    std::vector<Eigen::MatrixXd> sqdiff; // one n×n matrix per input dimension

    explicit PairwiseWorkspace(const Eigen::MatrixXd& X) {
        const Eigen::Index n = X.rows();
        sqdiff.reserve(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index k = 0; k < X.cols(); ++k) {
            Eigen::MatrixXd d(n, n);
            for (Eigen::Index i = 0; i < n; ++i) {
                d(i, i) = 0.0;
                for (Eigen::Index j = 0; j < i; ++j) {
                    double diff = X(i, k) - X(j, k);
                    d(i, j) = diff * diff;
                    d(j, i) = d(i, j);
                }
            }
            sqdiff.push_back(std::move(d));
        }
    }

    Eigen::MatrixXd scaled_r2(const Eigen::VectorXd& length_scales) const {
        const Eigen::Index n = sqdiff.empty() ? 0 : sqdiff[0].rows();
        Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t k = 0; k < sqdiff.size(); ++k) {
            double inv = 1.0 / (length_scales(static_cast<Eigen::Index>(k)) *
                                length_scales(static_cast<Eigen::Index>(k)));
            r2 += sqdiff[k] * inv;
        }
        return r2;
    }
};

struct Factorized {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 0.0;
};

// Adaptive jitter: 1e-10·tr(K)/n escalating ×10 up to 1e-4·tr(K)/n.
Factorized factorize(const Eigen::MatrixXd& K) {
    const Eigen::Index n = K.rows();
    Factorized f;
    f.llt.compute(K);
    if (f.llt.info() == Eigen::Success) return f;
    double scale = K.trace() / static_cast<double>(n);
    for (double jitter = 1e-10 * scale; jitter <= 1e-4 * scale; jitter *= 10.0) {
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        f.llt.compute(Kj);
        if (f.llt.info() == Eigen::Success) {
            f.jitter = jitter;
            return f;
        }
    }
    throw ConditioningError("kernel matrix is not positive definite after jitter escalation");
}

struct LmlWorkspaceResult {
    LmlResult lml;
    Factorized factor;
    Eigen::VectorXd alpha;
};

LmlWorkspaceResult lml_impl(const PairwiseWorkspace& ws, const Eigen::VectorXd& y,
                            const Hyperparams& hyper, bool want_grad) {
    const Eigen::Index n = y.size();
    const Eigen::Index d = hyper.length_scales.size();
    const double sf2 = hyper.sigma_f * hyper.sigma_f;
    const double sn2 = hyper.sigma_n * hyper.sigma_n;

    Eigen::MatrixXd r2 = ws.scaled_r2(hyper.length_scales);
    Eigen::MatrixXd r = r2.array().sqrt();
    Eigen::MatrixXd expterm = (-kSqrt5 * r.array()).exp();
    Eigen::MatrixXd kf =
        sf2 * (1.0 + kSqrt5 * r.array() + (5.0 / 3.0) * r2.array()) * expterm.array();

    Eigen::MatrixXd K = kf;
    K.diagonal().array() += sn2;

    LmlWorkspaceResult out;
    out.factor = factorize(K);
    out.alpha = out.factor.llt.solve(y);

    double log_det = 0.0;
    const auto& L = out.factor.llt.matrixLLT();
    for (Eigen::Index i = 0; i < n; ++i) log_det += std::log(L(i, i));

    out.lml.value = -0.5 * y.dot(out.alpha) - log_det - 0.5 * static_cast<double>(n) * kLog2Pi;

    if (want_grad) {
        // d LML / dθ = ½ tr((αα^T − K⁻¹) ∂K/∂θ)
        Eigen::MatrixXd kinv = out.factor.llt.solve(Eigen::MatrixXd::Identity(n, n));
        Eigen::MatrixXd w = out.alpha * out.alpha.transpose() - kinv;

        out.lml.grad.resize(d + 2);
        // ∂K/∂log σ_f = 2 K_f
        out.lml.grad(0) = w.cwiseProduct(kf).sum();
        // ∂κ/∂log σ_l,k = (5/3) σ_f² (1+√5 r) e^{−√5 r} · D_k / σ_l,k²
        Eigen::MatrixXd m =
            (5.0 / 3.0) * sf2 * (1.0 + kSqrt5 * r.array()) * expterm.array();
        Eigen::MatrixXd wm = w.cwiseProduct(m);
        for (Eigen::Index k = 0; k < d; ++k) {
            double inv = 1.0 / (hyper.length_scales(k) * hyper.length_scales(k));
            out.lml.grad(1 + k) = 0.5 * wm.cwiseProduct(ws.sqdiff[static_cast<std::size_t>(k)]).sum() * inv;
        }
        // ∂K/∂log σ_n = 2 σ_n² I
        out.lml.grad(d + 1) = sn2 * w.trace();
    }
    return out;
}

Eigen::VectorXd hyper_to_log(const Hyperparams& hyper) {
    Eigen::VectorXd theta(hyper.length_scales.size() + 2);
    theta(0) = std::log(hyper.sigma_f);
    for (Eigen::Index k = 0; k < hyper.length_scales.size(); ++k)
        theta(1 + k) = std::log(hyper.length_scales(k));
    theta(theta.size() - 1) = std::log(hyper.sigma_n);
    return theta;
}

Hyperparams log_to_hyper(const Eigen::VectorXd& theta) {
    Hyperparams hyper;
    hyper.sigma_f = std::exp(theta(0));
    hyper.length_scales.resize(theta.size() - 2);
    for (Eigen::Index k = 0; k < hyper.length_scales.size(); ++k)
        hyper.length_scales(k) = std::exp(theta(1 + k));
    hyper.sigma_n = std::exp(theta(theta.size() - 1));
    return hyper;
}

struct OptimResult {
    Eigen::VectorXd theta;
    double value = -std::numeric_limits<double>::infinity(); // LML (maximized)
    int iterations = 0;
    bool converged = false;
};

// BFGS with backtracking Armijo line search on f(θ) = −LML(θ).
OptimResult maximize_lml(const PairwiseWorkspace& ws, const Eigen::VectorXd& y,
                         Eigen::VectorXd theta, int max_iter, double grad_tol) {
    const Eigen::Index dim = theta.size();

    auto eval = [&](const Eigen::VectorXd& t, Eigen::VectorXd& grad) -> double {
        if (t.array().abs().maxCoeff() > 30.0) return std::numeric_limits<double>::infinity();
        try {
            auto res = lml_impl(ws, y, log_to_hyper(t), true);
            if (!std::isfinite(res.lml.value)) return std::numeric_limits<double>::infinity();
            grad = -res.lml.grad;
            return -res.lml.value;
        } catch (const ConditioningError&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    Eigen::VectorXd grad(dim);
    double f = eval(theta, grad);
    if (!std::isfinite(f)) return {};

    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(dim, dim);
    OptimResult result;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        if (grad.lpNorm<Eigen::Infinity>() < grad_tol * std::max(1.0, std::abs(f))) {
            result.converged = true;
            break;
        }
        Eigen::VectorXd direction = -(h * grad);
        double slope = grad.dot(direction);
        if (slope >= 0.0) {
            direction = -grad;
            slope = grad.dot(direction);
        }

        double step = 1.0;
        Eigen::VectorXd theta_new, grad_new(dim);
        double f_new = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < 40; ++ls) {
            theta_new = theta + step * direction;
            f_new = eval(theta_new, grad_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        Eigen::VectorXd s = theta_new - theta;
        Eigen::VectorXd yv = grad_new - grad;
        double sy = s.dot(yv);
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            double rho = 1.0 / sy;
            Eigen::MatrixXd left = Eigen::MatrixXd::Identity(dim, dim) - rho * s * yv.transpose();
            h = left * h * left.transpose() + rho * s * s.transpose();
        }
        double df = std::abs(f - f_new);
        theta = std::move(theta_new);
        grad = std::move(grad_new);
        f = f_new;
        if (df < 1e-10 * (1.0 + std::abs(f))) {
            result.converged = true;
            ++iter;
            break;
        }
    }
    result.theta = std::move(theta);
    result.value = -f;
    result.iterations = iter;
    return result;
}

Standardization standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Standardization s;
    const auto n = static_cast<double>(X.rows());
    s.mean = X.colwise().mean();
    s.scale.resize(X.cols());
    for (Eigen::Index k = 0; k < X.cols(); ++k) {
        double var = (X.col(k).array() - s.mean(k)).square().sum() / n;
        double sd = std::sqrt(var);
        s.scale(k) = sd > 0.0 ? sd : 1.0;
    }
    s.target_mean = y.mean();
    return s;
}

Eigen::MatrixXd apply_standardization(const Eigen::MatrixXd& X, const Standardization& s) {
    Eigen::MatrixXd z = X;
    for (Eigen::Index k = 0; k < X.cols(); ++k)
        z.col(k) = (X.col(k).array() - s.mean(k)) / s.scale(k);
    return z;
}

GpModel finalize_model(Eigen::MatrixXd xs, Eigen::VectorXd yc, Standardization std_info,
                       const Hyperparams& hyper) {
    PairwiseWorkspace ws(xs);
    auto res = lml_impl(ws, yc, hyper, false);

    GpModel model;
    model.hyper = hyper;
    model.x_train = std::move(xs);
    model.y_train = std::move(yc);
    model.standardization = std::move(std_info);
    model.kernel_factor = res.factor.llt.matrixL();
    model.alpha = std::move(res.alpha);

    // (K + σ_n² I) α must reproduce y.
    Eigen::VectorXd reconstructed =
        model.kernel_factor * (model.kernel_factor.transpose() * model.alpha);
    double rel = (reconstructed - model.y_train).norm() /
                 std::max(model.y_train.norm(), std::numeric_limits<double>::min());
    if (model.y_train.norm() > 0 && rel > 1e-8)
        throw ConditioningError("kernel solve residual " + std::to_string(rel) + " exceeds 1e-8");
    return model;
}

} // namespace

double matern52(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj, const Hyperparams& hyper) {
    if (xi.size() != xj.size() || xi.size() != hyper.length_scales.size())
        throw std::invalid_argument("matern52: dimension mismatch");
    double r2 = 0.0;
    for (Eigen::Index k = 0; k < xi.size(); ++k) {
        double diff = (xi(k) - xj(k)) / hyper.length_scales(k);
        r2 += diff * diff;
    }
    double r = std::sqrt(r2);
    return hyper.sigma_f * hyper.sigma_f * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) *
           std::exp(-kSqrt5 * r);
}

LmlResult log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                  const Hyperparams& hyper) {
    if (X.rows() != y.size() || y.size() < 1)
        throw std::invalid_argument("log_marginal_likelihood: shape mismatch");
    check_hyper(hyper);
    PairwiseWorkspace ws(X);
    return lml_impl(ws, y, hyper, true).lml;
}

Prediction GpModel::predict(const Eigen::VectorXd& x_raw) const {
    if (x_raw.size() != x_train.cols())
        throw std::invalid_argument("predict: feature width mismatch");
    Eigen::VectorXd z = (x_raw - standardization.mean).cwiseQuotient(standardization.scale);

    const Eigen::Index n = x_train.rows();
    Eigen::VectorXd kstar(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double r2 = 0.0;
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            double diff = (z(k) - x_train(i, k)) / hyper.length_scales(k);
            r2 += diff * diff;
        }
        double r = std::sqrt(r2);
        kstar(i) = hyper.sigma_f * hyper.sigma_f * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) *
                   std::exp(-kSqrt5 * r);
    }

    Prediction pred;
    pred.mean = kstar.dot(alpha) + standardization.target_mean;
    Eigen::VectorXd v = kernel_factor.triangularView<Eigen::Lower>().solve(kstar);
    double var = hyper.sigma_f * hyper.sigma_f + hyper.sigma_n * hyper.sigma_n - v.squaredNorm();
    pred.sd = std::sqrt(std::max(var, 0.0));
    return pred;
}

Eigen::VectorXd GpModel::destandardized_length_scales() const {
    return hyper.length_scales.cwiseProduct(standardization.scale);
}

Hyperparams default_init(Eigen::Index n_features, const Eigen::VectorXd& y_raw) {
    Hyperparams init;
    double sd = 0.0;
    if (y_raw.size() > 0) {
        double m = y_raw.mean();
        sd = std::sqrt((y_raw.array() - m).square().sum() / static_cast<double>(y_raw.size()));
    }
    if (sd <= 0.0) sd = 1.0;
    init.sigma_f = sd;
    init.length_scales = Eigen::VectorXd::Ones(n_features);
    init.sigma_n = 0.3 * sd;
    return init;
}

GpModel fit(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw, const Hyperparams& init,
            const FitOptions& options) {
    if (X_raw.rows() != y_raw.size() || X_raw.rows() < 2)
        throw std::invalid_argument("fit: need at least 2 training rows");
    if (init.length_scales.size() != X_raw.cols())
        throw std::invalid_argument("fit: init length-scale width mismatch");
    if (options.restarts < 1) throw std::invalid_argument("fit: restarts must be >= 1");
    check_hyper(init);

    Standardization std_info = standardize(X_raw, y_raw);
    Eigen::MatrixXd xs = apply_standardization(X_raw, std_info);
    Eigen::VectorXd yc = y_raw.array() - std_info.target_mean;

    // Deterministic subsample keeps exact inference tractable on large
    // tables; mirrors the subset-of-data fallback of standard GP tooling.
    if (options.max_rows > 0 && static_cast<std::size_t>(xs.rows()) > options.max_rows) {
        std::vector<std::size_t> idx(static_cast<std::size_t>(xs.rows()));
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng rng(options.seed, 0x5ab5e7);
        rng.shuffle(idx);
        idx.resize(options.max_rows);
        std::sort(idx.begin(), idx.end());
        Eigen::MatrixXd xsub(static_cast<Eigen::Index>(options.max_rows), xs.cols());
        Eigen::VectorXd ysub(static_cast<Eigen::Index>(options.max_rows));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            xsub.row(static_cast<Eigen::Index>(i)) = xs.row(static_cast<Eigen::Index>(idx[i]));
            ysub(static_cast<Eigen::Index>(i)) = yc(static_cast<Eigen::Index>(idx[i]));
        }
        xs = std::move(xsub);
        yc = std::move(ysub);
    }

    PairwiseWorkspace ws(xs);
    Eigen::VectorXd theta0 = hyper_to_log(init);

    // Restarts are independent and share only read-only state; per-index
    // result slots keep the outcome independent of scheduling.
    std::vector<OptimResult> results(static_cast<std::size_t>(options.restarts));
    parallel_for(static_cast<std::size_t>(options.restarts), options.workers, [&](std::size_t r) {
        Eigen::VectorXd theta = theta0;
        if (r > 0) {
            // Multiplicative perturbations in [1/3, 3].
            Rng rng(options.seed, 1000 + static_cast<std::uint64_t>(r));
            for (Eigen::Index k = 0; k < theta.size(); ++k)
                theta(k) += rng.uniform(-std::log(3.0), std::log(3.0));
        }
        results[r] = maximize_lml(ws, yc, theta, options.max_iter, options.grad_tol);
    });

    FitDiagnostics diagnostics;
    Eigen::VectorXd best_theta;
    double best_value = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < options.restarts; ++r) {
        const OptimResult& res = results[static_cast<std::size_t>(r)];
        RestartDiagnostics diag;
        diag.restart = r;
        diag.final_value = res.value;
        diag.iterations = res.iterations;
        diag.converged = res.converged;
        if (res.theta.size() == 0) diag.failure = "initial point not evaluable";
        diagnostics.restarts.push_back(diag);
        if (res.theta.size() > 0 && res.value > best_value) {
            best_value = res.value;
            best_theta = res.theta;
            diagnostics.chosen_restart = r;
        }
    }
    if (best_theta.size() == 0) throw FitError("fit: every restart failed to produce a usable model");

    GpModel model = finalize_model(std::move(xs), std::move(yc), std::move(std_info),
                                   log_to_hyper(best_theta));
    model.diagnostics = std::move(diagnostics);
    return model;
}

GpModel build_model(const Eigen::MatrixXd& X_raw, const Eigen::VectorXd& y_raw,
                    const Hyperparams& hyper) {
    if (X_raw.rows() != y_raw.size() || X_raw.rows() < 1)
        throw std::invalid_argument("build_model: shape mismatch");
    if (hyper.length_scales.size() != X_raw.cols())
        throw std::invalid_argument("build_model: length-scale width mismatch");
    check_hyper(hyper);
    Standardization std_info = standardize(X_raw, y_raw);
    Eigen::MatrixXd xs = apply_standardization(X_raw, std_info);
    Eigen::VectorXd yc = y_raw.array() - std_info.target_mean;
    return finalize_model(std::move(xs), std::move(yc), std::move(std_info), hyper);
}

namespace {

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t training_hash(const GpModel& model) {
    std::uint64_t h = fnv1a(model.x_train.data(),
                            sizeof(double) * static_cast<std::size_t>(model.x_train.size()));
    h = fnv1a(model.y_train.data(), sizeof(double) * static_cast<std::size_t>(model.y_train.size()),
              h);
    return h;
}

} // namespace

namespace {

nlohmann::json model_to_json(const GpModel& model, const std::vector<std::string>& feature_names) {
    nlohmann::json j;
    j["format"] = "fadecast-gp-model";
    j["version"] = 1;
    j["feature_names"] = feature_names;
    j["hyper"]["sigma_f"] = model.hyper.sigma_f;
    j["hyper"]["sigma_n"] = model.hyper.sigma_n;
    j["hyper"]["length_scales"] =
        std::vector<double>(model.hyper.length_scales.begin(), model.hyper.length_scales.end());
    j["standardization"]["mean"] =
        std::vector<double>(model.standardization.mean.begin(), model.standardization.mean.end());
    j["standardization"]["scale"] =
        std::vector<double>(model.standardization.scale.begin(), model.standardization.scale.end());
    j["standardization"]["target_mean"] = model.standardization.target_mean;
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < model.x_train.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(model.x_train.cols()));
        for (Eigen::Index k = 0; k < model.x_train.cols(); ++k)
            row[static_cast<std::size_t>(k)] = model.x_train(i, k);
        rows.push_back(std::move(row));
    }
    j["x_train"] = rows;
    j["y_train"] = std::vector<double>(model.y_train.begin(), model.y_train.end());
    j["train_hash"] = training_hash(model);
    return j;
}

GpModel model_from_json(const nlohmann::json& j, std::vector<std::string>* feature_names,
                        const std::string& origin) {
    if (j.value("format", "") != "fadecast-gp-model")
        throw DataError("not a model file: " + origin);

    GpModel model;
    model.hyper.sigma_f = j["hyper"]["sigma_f"].get<double>();
    model.hyper.sigma_n = j["hyper"]["sigma_n"].get<double>();
    auto scales = j["hyper"]["length_scales"].get<std::vector<double>>();
    model.hyper.length_scales =
        Eigen::Map<Eigen::VectorXd>(scales.data(), static_cast<Eigen::Index>(scales.size()));
    auto mean = j["standardization"]["mean"].get<std::vector<double>>();
    auto scale = j["standardization"]["scale"].get<std::vector<double>>();
    model.standardization.mean =
        Eigen::Map<Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    model.standardization.scale =
        Eigen::Map<Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
    model.standardization.target_mean = j["standardization"]["target_mean"].get<double>();
    auto rows = j["x_train"].get<std::vector<std::vector<double>>>();
    auto y = j["y_train"].get<std::vector<double>>();
    model.x_train.resize(static_cast<Eigen::Index>(rows.size()),
                         model.hyper.length_scales.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            model.x_train(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    model.y_train = Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));

    if (j.contains("train_hash") && j["train_hash"].get<std::uint64_t>() != training_hash(model))
        throw DataError("model file training data hash mismatch: " + origin);

    // Refactorize; cheap next to fitting.
    PairwiseWorkspace ws(model.x_train);
    auto res = lml_impl(ws, model.y_train, model.hyper, false);
    model.kernel_factor = res.factor.llt.matrixL();
    model.alpha = std::move(res.alpha);
    if (feature_names) *feature_names = j.value("feature_names", std::vector<std::string>{});
    return model;
}

} // namespace

void save_model(const GpModel& model, const std::vector<std::string>& feature_names,
                const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file " + path.string());
    out << model_to_json(model, feature_names).dump(2) << '\n';
}

GpModel load_model(const std::filesystem::path& path, std::vector<std::string>* feature_names) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file " + path.string());
    nlohmann::json j;
    in >> j;
    return model_from_json(j, feature_names, path.string());
}

std::string model_to_json_string(const GpModel& model,
                                 const std::vector<std::string>& feature_names) {
    return model_to_json(model, feature_names).dump();
}

GpModel model_from_json_string(const std::string& text, std::vector<std::string>* feature_names) {
    return model_from_json(nlohmann::json::parse(text), feature_names, "<embedded>");
}

} // namespace fadecast
