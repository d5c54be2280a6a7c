#pragma once

// One-dimensional Gaussian-process regression with a squared-exponential
// kernel, Cholesky-based posterior and ML-II hyperparameter search.

#include <bopinn/error.hpp>
#include <bopinn/lbfgs.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace bopinn {

inline constexpr double kGpJitter = 1e-10;
inline constexpr double kGpMaxJitter = 1e-4;

struct GprHyper {
    double signal_variance = 1.0;  // sigma_f^2
    double length_scale = 0.2;     // l
    double noise_variance = kGpJitter;  // sigma_n^2
};

enum class HyperSearch { fixed, ml2 };

struct GprFitOptions {
    HyperSearch search = HyperSearch::ml2;
    /// Used as-is for `fixed`; ignored by `ml2`.
    GprHyper hyper{};
    /// Centre targets (and scale by their std when n >= 2) before fitting.
    bool standardize = true;
    int restarts = 5;
    std::uint64_t seed = 0;
};

struct GprModel {
    std::vector<double> train_x;
    std::vector<double> train_y;  // as supplied, not standardised
    GprHyper hyper;
    /// Diagonal actually added to the kernel matrix: max(sigma_n^2, jitter).
    double diag = kGpJitter;
    double y_mean = 0.0;
    double y_scale = 1.0;
    Eigen::MatrixXd chol;   // lower factor of K + diag * I
    Eigen::VectorXd alpha;  // (K + diag * I)^-1 y_std

    Eigen::VectorXd standardized_y() const {
        Eigen::VectorXd y(static_cast<Eigen::Index>(train_y.size()));
        for (std::size_t i = 0; i < train_y.size(); ++i)
            y(static_cast<Eigen::Index>(i)) = (train_y[i] - y_mean) / y_scale;
        return y;
    }
};

inline double rbf_kernel(double c1, double c2, const GprHyper& h) {
    const double d = c1 - c2;
    return h.signal_variance * std::exp(-d * d / (2.0 * h.length_scale * h.length_scale));
}

namespace detail {

inline Eigen::MatrixXd kernel_matrix(std::span<const double> xs, const GprHyper& h) {
    const auto n = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) k(i, j) = k(j, i) = rbf_kernel(xs[i], xs[j], h);
    return k;
}

/// Factorises K + diag I, escalating the jitter by x10 up to kGpMaxJitter on failure.
inline void factorize(GprModel& m) {
    const Eigen::MatrixXd k = kernel_matrix(m.train_x, m.hyper);
    double jitter = kGpJitter;
    while (true) {
        m.diag = std::max(m.hyper.noise_variance, jitter);
        Eigen::MatrixXd a = k;
        a.diagonal().array() += m.diag;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0) {
            m.chol = llt.matrixL();
            m.alpha = llt.solve(m.standardized_y());
            return;
        }
        if (jitter >= kGpMaxJitter) throw SingularModelError("GP covariance not positive definite");
        jitter *= 10.0;
    }
}

inline GprModel make_model(std::span<const double> xs, std::span<const double> ys, bool standardize) {
    if (xs.size() != ys.size() || xs.empty()) throw InvalidInput("GP fit needs matching, non-empty data");
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw InvalidInput("GP fit needs finite data");
    GprModel m;
    m.train_x.assign(xs.begin(), xs.end());
    m.train_y.assign(ys.begin(), ys.end());
    if (standardize) {
        const double n = static_cast<double>(ys.size());
        double mean = 0.0;
        for (double y : ys) mean += y;
        mean /= n;
        m.y_mean = mean;
        if (ys.size() >= 2) {
            double var = 0.0;
            for (double y : ys) var += (y - mean) * (y - mean);
            const double sd = std::sqrt(var / n);
            if (sd > 0.0) m.y_scale = sd;
        }
    }
    return m;
}

// log(sigma_f^2), log(l), log(sigma_n^2) search box for ML-II.
struct LogBox {
    double lo[3] = {std::log(1e-3), std::log(1e-2), std::log(kGpJitter)};
    double hi[3] = {std::log(1e3), std::log(1e1), std::log(1.0)};
};

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

/// -0.5 y^T alpha - sum log diag(L) - n/2 log(2 pi), on the (standardised) targets.
inline double log_marginal_likelihood(const GprModel& m) {
    const Eigen::VectorXd y = m.standardized_y();
    const double n = static_cast<double>(y.size());
    return -0.5 * y.dot(m.alpha) - m.chol.diagonal().array().log().sum() -
           0.5 * n * std::log(2.0 * std::numbers::pi);
}

namespace detail {

// Negative LML and its gradient w.r.t. (log sf2, log l, log sn2).
inline double neg_lml_and_grad(GprModel& m, Eigen::Vector3d& grad) {
    factorize(m);
    const auto n = static_cast<Eigen::Index>(m.train_x.size());
    const Eigen::MatrixXd kf = kernel_matrix(m.train_x, m.hyper);
    Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(n, n);
    m.chol.triangularView<Eigen::Lower>().solveInPlace(kinv);
    m.chol.transpose().triangularView<Eigen::Upper>().solveInPlace(kinv);
    const Eigen::MatrixXd w = m.alpha * m.alpha.transpose() - kinv;

    Eigen::MatrixXd dl(n, n);
    const double l2 = m.hyper.length_scale * m.hyper.length_scale;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = m.train_x[i] - m.train_x[j];
            dl(i, j) = kf(i, j) * d * d / l2;
        }
    grad(0) = -0.5 * (w.cwiseProduct(kf)).sum();
    grad(1) = -0.5 * (w.cwiseProduct(dl)).sum();
    // The noise derivative only exists while sigma_n^2 itself sets the diagonal.
    grad(2) = m.diag == m.hyper.noise_variance ? -0.5 * w.trace() * m.hyper.noise_variance : 0.0;
    return -log_marginal_likelihood(m);
}

}  // namespace detail

inline GprModel fit(std::span<const double> xs, std::span<const double> ys, const GprFitOptions& opts = {}) {
    GprModel m = detail::make_model(xs, ys, opts.standardize);
    if (opts.search == HyperSearch::fixed) {
        const auto& h = opts.hyper;
        if (!(h.signal_variance > 0.0 && h.length_scale > 0.0 && h.noise_variance >= 0.0))
            throw ConfigError("GP hyperparameters must be positive");
        m.hyper = h;
        detail::factorize(m);
        return m;
    }

    const detail::LogBox box;
    auto to_hyper = [&](const Eigen::Vector3d& z) {
        GprHyper h;
        double v[3];
        for (int k = 0; k < 3; ++k) v[k] = std::exp(box.lo[k] + (box.hi[k] - box.lo[k]) * detail::sigmoid(z(k)));
        h.signal_variance = v[0];
        h.length_scale = v[1];
        h.noise_variance = v[2];
        return h;
    };

    LbfgsOptions lopts;
    lopts.max_iters = 100;
    lopts.grad_tol = 1e-6;

    double best = std::numeric_limits<double>::infinity();
    GprHyper best_h{};
    for (int r = 0; r < std::max(1, opts.restarts); ++r) {
        std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(r) * 0x9e3779b97f4a7c15ULL);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        Eigen::VectorXd z0(3);
        for (int k = 0; k < 3; ++k) z0(k) = u(rng);
        GprModel work = m;
        auto fg = [&](const Eigen::VectorXd& z, Eigen::VectorXd& g) {
            work.hyper = to_hyper(z);
            Eigen::Vector3d gh;
            const double f = detail::neg_lml_and_grad(work, gh);
            g.resize(3);
            for (int k = 0; k < 3; ++k) {
                const double s = detail::sigmoid(z(k));
                g(k) = gh(k) * (box.hi[k] - box.lo[k]) * s * (1.0 - s);
            }
            return f;
        };
        try {
            const auto res = minimize(fg, z0, lopts);
            if (res.f < best) {
                best = res.f;
                best_h = to_hyper(res.x);
            }
        } catch (const Error&) {
            // this restart hit a singular or non-finite region; the others decide
        }
    }
    if (!std::isfinite(best)) throw SingularModelError("ML-II search failed on every restart");
    m.hyper = best_h;
    detail::factorize(m);
    return m;
}

struct GpPrediction {
    double mean = 0.0;
    double std = 0.0;
};

inline GpPrediction predict(const GprModel& m, double c) {
    const auto n = static_cast<Eigen::Index>(m.train_x.size());
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks(i) = rbf_kernel(c, m.train_x[static_cast<std::size_t>(i)], m.hyper);
    const double mu = ks.dot(m.alpha);
    const Eigen::VectorXd v = m.chol.triangularView<Eigen::Lower>().solve(ks);
    const double var = std::max(0.0, m.hyper.signal_variance - v.squaredNorm());
    return {m.y_mean + m.y_scale * mu, m.y_scale * std::sqrt(var)};
}

inline std::vector<GpPrediction> predict(const GprModel& m, std::span<const double> cs) {
    std::vector<GpPrediction> out;
    out.reserve(cs.size());
    for (double c : cs) out.push_back(predict(m, c));
    return out;
}

}  // namespace bopinn
