#pragma once

#include <bopinn/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace bopinn {

struct LbfgsOptions {
    /// Number of curvature pairs (s, y) kept for the two-loop recursion.
    int memory = 10;
    int max_iters = 500;
    /// Stop once ||grad||_inf <= grad_tol.
    double grad_tol = 1e-6;
    /// Strong Wolfe constants, 0 < c1 < c2 < 1.
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    /// Function evaluations allowed per line search.
    int max_line_search_steps = 40;
    /// Re-check both Wolfe inequalities on every accepted step and throw
    /// std::logic_error on violation.
    bool check_wolfe = false;

    void validate() const {
        if (memory < 1) throw ConfigError("lbfgs: memory must be >= 1");
        if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
            throw ConfigError("lbfgs: need 0 < c1 < c2 < 1");
        if (max_iters < 0 || max_line_search_steps < 1) throw ConfigError("lbfgs: bad iteration caps");
    }
};

enum class Termination { converged, max_iters, line_search_failure };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::converged: return "converged";
        case Termination::max_iters: return "max_iters";
        case Termination::line_search_failure: return "line_search_failure";
    }
    return "?";
}

struct OptimTrace {
    int iterations = 0;
    int evaluations = 0;
    /// f(x0) followed by the loss after each accepted iteration.
    std::vector<double> loss_history;
    double terminal_grad_norm = 0.0;
    Termination termination_reason = Termination::max_iters;
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = 0.0;
    OptimTrace trace;
};

namespace detail {

// Minimiser of the cubic matching (a, fa, ga) and (b, fb, gb), clamped into
// the safeguarded interior of [a, b]; bisection if the cubic is degenerate.
inline double cubic_step(double a, double fa, double ga, double b, double fb, double gb) {
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    const double d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - ga * gb;
    double t = 0.5 * (a + b);
    if (disc >= 0.0) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = gb - ga + 2.0 * d2;
        if (denom != 0.0) {
            const double cand = b - (b - a) * (gb + d2 - d1) / denom;
            if (std::isfinite(cand)) t = cand;
        }
    }
    return std::clamp(t, lo + margin, hi - margin);
}

template <class F>
struct LineSearch {
    F& fg;
    const Eigen::VectorXd& x;
    const Eigen::VectorXd& dir;
    double f0;
    double g0;  // directional derivative at 0, < 0
    const LbfgsOptions& opts;
    int evals = 0;

    Eigen::VectorXd xt{}, gt{};
    double ft = 0.0;

    double phi(double alpha, double& dphi) {
        xt = x + alpha * dir;
        ft = fg(xt, gt);
        ++evals;
        if (!std::isfinite(ft) || !gt.allFinite())
            throw NumericError("objective", "non-finite value during line search");
        dphi = gt.dot(dir);
        return ft;
    }

    bool budget() const { return evals < opts.max_line_search_steps; }

    // Nocedal & Wright, Algorithm 3.6.
    bool zoom(double lo, double f_lo, double g_lo, double hi, double f_hi, double g_hi, double& alpha) {
        while (budget()) {
            const double a = cubic_step(lo, f_lo, g_lo, hi, f_hi, g_hi);
            double ga = 0.0;
            const double fa = phi(a, ga);
            if (fa > f0 + opts.wolfe_c1 * a * g0 || fa >= f_lo) {
                hi = a;
                f_hi = fa;
                g_hi = ga;
            } else {
                if (std::abs(ga) <= -opts.wolfe_c2 * g0) {
                    alpha = a;
                    return true;
                }
                if (ga * (hi - lo) >= 0.0) {
                    hi = lo;
                    f_hi = f_lo;
                    g_hi = g_lo;
                }
                lo = a;
                f_lo = fa;
                g_lo = ga;
            }
            if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) return false;
        }
        return false;
    }

    // Nocedal & Wright, Algorithm 3.5. On success xt/ft/gt hold the accepted point.
    bool run(double alpha_init, double& alpha) {
        double prev = 0.0, f_prev = f0, g_prev = g0;
        double a = alpha_init;
        for (int i = 0; budget(); ++i) {
            double ga = 0.0;
            const double fa = phi(a, ga);
            if (fa > f0 + opts.wolfe_c1 * a * g0 || (i > 0 && fa >= f_prev))
                return zoom(prev, f_prev, g_prev, a, fa, ga, alpha);
            if (std::abs(ga) <= -opts.wolfe_c2 * g0) {
                alpha = a;
                return true;
            }
            if (ga >= 0.0) return zoom(a, fa, ga, prev, f_prev, g_prev, alpha);
            prev = a;
            f_prev = fa;
            g_prev = ga;
            a *= 2.0;
        }
        return false;
    }
};

}  // namespace detail

/// Minimises f with L-BFGS and a strong-Wolfe line search.
///
/// `fg(x, grad)` returns f(x) and writes the gradient into `grad`
/// (resized by the callee if needed). Deterministic given deterministic fg.
template <class F>
LbfgsResult minimize(F&& fg, Eigen::VectorXd x0, const LbfgsOptions& opts = {}) {
    opts.validate();
    LbfgsResult res;
    res.x = std::move(x0);
    if (!res.x.allFinite()) throw NumericError("x0", "non-finite starting point");

    Eigen::VectorXd g(res.x.size());
    res.f = fg(res.x, g);
    res.trace.evaluations = 1;
    if (!std::isfinite(res.f) || !g.allFinite()) throw NumericError("objective", "non-finite value at x0");
    res.trace.loss_history.push_back(res.f);

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    Eigen::VectorXd dir(res.x.size());
    std::vector<double> alpha_buf;

    auto& tr = res.trace;
    tr.termination_reason = Termination::max_iters;
    while (true) {
        tr.terminal_grad_norm = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
        if (tr.terminal_grad_norm <= opts.grad_tol) {
            tr.termination_reason = Termination::converged;
            break;
        }
        if (tr.iterations >= opts.max_iters) break;

        // Two-loop recursion.
        dir = -g;
        const auto m = s_hist.size();
        alpha_buf.assign(m, 0.0);
        for (std::size_t i = m; i-- > 0;) {
            alpha_buf[i] = rho_hist[i] * s_hist[i].dot(dir);
            dir -= alpha_buf[i] * y_hist[i];
        }
        if (m > 0) dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        for (std::size_t i = 0; i < m; ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(dir);
            dir += (alpha_buf[i] - beta) * s_hist[i];
        }

        double g0 = g.dot(dir);
        if (!(g0 < 0.0)) {
            // Not a descent direction: drop the history and fall back to steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -g;
            g0 = g.dot(dir);
        }
        const double alpha0 = s_hist.empty() ? std::min(1.0, 1.0 / dir.norm()) : 1.0;

        detail::LineSearch<std::remove_reference_t<F>> ls{fg, res.x, dir, res.f, g0, opts};
        double alpha = 0.0;
        const bool ok = ls.run(alpha0, alpha);
        tr.evaluations += ls.evals;
        if (!ok) {
            tr.termination_reason = Termination::line_search_failure;
            break;
        }
        if (opts.check_wolfe) {
            const double gnew = ls.gt.dot(dir);
            if (ls.ft > res.f + opts.wolfe_c1 * alpha * g0 || std::abs(gnew) > -opts.wolfe_c2 * g0)
                throw std::logic_error("lbfgs: accepted step violates the strong Wolfe conditions");
        }

        Eigen::VectorXd s = alpha * dir;
        Eigen::VectorXd y = ls.gt - g;
        res.x = ls.xt;
        res.f = ls.ft;
        g = ls.gt;
        ++tr.iterations;
        tr.loss_history.push_back(res.f);

        const double sy = s.dot(y);
        if (sy > 0.0) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
    }
    return res;
}

}  // namespace bopinn
