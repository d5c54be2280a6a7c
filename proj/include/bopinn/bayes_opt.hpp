#pragma once

// Sequential UCB Bayesian optimisation over a 1D interval, and the snapshot
// misfit target it maximises.

#include <bopinn/error.hpp>
#include <bopinn/gp_regression.hpp>
#include <bopinn/pinn_solver.hpp>
#include <bopinn/wave_oracle.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace bopinn {

struct BoConfig {
    double c_lo = 0.1;
    double c_hi = 1.0;
    int n_init = 5;
    int n_iters = 50;
    double kappa = 2.45;
    int acq_grid = 1001;
    std::uint64_t seed = 0;
    GprFitOptions gp{};

    void validate() const {
        if (!(c_lo < c_hi)) throw ConfigError("bo: need c_lo < c_hi");
        if (n_init < 1) throw ConfigError("bo: n_init must be >= 1");
        if (n_iters < 0) throw ConfigError("bo: n_iters must be >= 0");
        if (!(kappa >= 0.0)) throw ConfigError("bo: kappa must be >= 0");
        if (acq_grid < 2) throw ConfigError("bo: acquisition grid needs >= 2 points");
    }
};

struct BoTrace {
    std::vector<double> queried_c;
    std::vector<double> queried_g;
    std::vector<double> incumbent_c;
    std::vector<double> incumbent_g;
    std::vector<bool> failed;  // target threw; g recorded as -inf
    std::vector<bool> cached;  // reused a memoised value
    int evaluations = 0;       // actual target calls

    std::size_t size() const noexcept { return queried_c.size(); }
    double best_c() const { return incumbent_c.empty() ? std::numeric_limits<double>::quiet_NaN() : incumbent_c.back(); }
    double best_g() const { return incumbent_g.empty() ? -std::numeric_limits<double>::infinity() : incumbent_g.back(); }
};

/// mu + kappa * sigma
inline double ucb(double mean, double std, double kappa) { return mean + kappa * std; }

inline std::vector<double> acquisition_grid(const BoConfig& cfg) {
    std::vector<double> g(static_cast<std::size_t>(cfg.acq_grid));
    const double h = (cfg.c_hi - cfg.c_lo) / static_cast<double>(cfg.acq_grid - 1);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = cfg.c_lo + static_cast<double>(i) * h;
    g.back() = cfg.c_hi;
    return g;
}

/// Grid maximiser of UCB. Ties go to the lowest c; grid points within 1e-6 of
/// an already queried point are skipped in favour of the next best.
inline double argmax_acquisition(const GprModel& model, const BoConfig& cfg, std::span<const double> queried) {
    const auto grid = acquisition_grid(cfg);
    std::vector<double> score(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto p = predict(model, grid[i]);
        score[i] = ucb(p.mean, p.std, cfg.kappa);
    }
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    for (std::size_t i : order) {
        const bool dup = std::any_of(queried.begin(), queried.end(),
                                     [&](double q) { return std::abs(q - grid[i]) <= 1e-6; });
        if (!dup) return grid[i];
    }
    return grid[order.front()];
}

inline double argmax_acquisition(const GprModel& model, const BoConfig& cfg) {
    return argmax_acquisition(model, cfg, model.train_x);
}

using Target = std::function<double(double)>;

inline BoTrace run_bo(const Target& target, const BoConfig& cfg) {
    cfg.validate();
    BoTrace tr;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uc(cfg.c_lo, cfg.c_hi);

    auto record = [&](double c) {
        double g = 0.0;
        bool failed = false, cached = false;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            if (std::abs(tr.queried_c[i] - c) <= 1e-9) {
                g = tr.queried_g[i];
                failed = tr.failed[i];
                cached = true;
                break;
            }
        }
        if (!cached) {
            ++tr.evaluations;
            try {
                g = target(c);
                if (std::isnan(g)) throw NumericError("target", "NaN target value");
            } catch (const std::exception&) {
                g = -std::numeric_limits<double>::infinity();
                failed = true;
            }
        }
        tr.queried_c.push_back(c);
        tr.queried_g.push_back(g);
        tr.failed.push_back(failed);
        tr.cached.push_back(cached);
        if (tr.incumbent_g.empty() || g > tr.incumbent_g.back()) {
            tr.incumbent_c.push_back(c);
            tr.incumbent_g.push_back(g);
        } else {
            tr.incumbent_c.push_back(tr.incumbent_c.back());
            tr.incumbent_g.push_back(tr.incumbent_g.back());
        }
    };

    for (int i = 0; i < cfg.n_init; ++i) record(uc(rng));

    for (int it = 0; it < cfg.n_iters; ++it) {
        // Failed queries enter the surrogate at the worst finite value seen so
        // far, so the acquisition stops revisiting their neighbourhood.
        double worst = std::numeric_limits<double>::infinity();
        for (double g : tr.queried_g)
            if (std::isfinite(g)) worst = std::min(worst, g);
        std::vector<double> xs, ys;
        if (std::isfinite(worst)) {
            for (std::size_t i = 0; i < tr.size(); ++i) {
                xs.push_back(tr.queried_c[i]);
                ys.push_back(std::isfinite(tr.queried_g[i]) ? tr.queried_g[i] : worst);
            }
        }
        double next;
        if (xs.empty()) {
            next = uc(rng);  // nothing to model yet
        } else {
            GprFitOptions gopts = cfg.gp;
            gopts.seed = cfg.seed + static_cast<std::uint64_t>(it);
            const GprModel model = fit(xs, ys, gopts);
            next = argmax_acquisition(model, cfg, tr.queried_c);
        }
        record(next);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Snapshot misfit target.

struct AnalyticForward {};

struct PinnForward {
    TrainOptions train{};
    std::size_t n_f = 2000;
    std::size_t n_0 = 200;
    std::size_t n_b = 200;
    std::uint64_t collocation_seed = 0;
    std::uint64_t init_seed = 0;
};

using ForwardModel = std::variant<AnalyticForward, PinnForward>;

/// Model snapshot at (obs.xs, obs.t_obs) for wave speed c.
inline std::vector<double> model_snapshot(WaveSpeed c, const Snapshot& obs, const ForwardModel& fwd) {
    if (std::holds_alternative<AnalyticForward>(fwd)) {
        std::vector<double> u(obs.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = analytic_u(obs.xs[i], obs.t_obs, c, obs.domain);
        return u;
    }
    const auto& p = std::get<PinnForward>(fwd);
    const auto colloc = sample_collocation(obs.domain, p.n_f, p.n_0, p.n_b, p.collocation_seed);
    const auto field = train_pinn(c, colloc, p.train, p.init_seed);
    return eval_field(field, obs.xs, obs.t_obs);
}

/// g(c) = -(1/n) sum_i (u_model(x_i, t_obs; c) - u_obs(x_i))^2
inline double target_function(WaveSpeed c, const Snapshot& obs, const ForwardModel& fwd) {
    obs.validate();
    std::vector<double> u;
    try {
        u = model_snapshot(c, obs, fwd);
    } catch (const Error& e) {
        throw NumericError("target(c=" + std::to_string(c.scaled()) + ")", e.what());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += (u[i] - obs.us[i]) * (u[i] - obs.us[i]);
    return -acc / static_cast<double>(u.size());
}

}  // namespace bopinn
