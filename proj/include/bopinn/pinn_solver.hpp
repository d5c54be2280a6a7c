#pragma once

// Physics-informed training of the neural field at a fixed wave speed.
//
//   J_f = mean_i (c^2 u_xx - u_tt)^2                over interior points
//   J_0 = mean_i (u(x_i,0) - u0(x_i))^2 + u_t(x_i,0)^2, u0(x) = -sin(pi x)
//   J_b = mean_i u(0,t_i)^2 + u(L,t_i)^2
//   J   = J_f + J_0 + J_b
//
// Points are processed in fixed-size chunks and the per-chunk partial sums
// are reduced in chunk order, so results are bitwise reproducible.

#include <bopinn/csv.hpp>
#include <bopinn/error.hpp>
#include <bopinn/lbfgs.hpp>
#include <bopinn/neural_field.hpp>
#include <bopinn/wave_oracle.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bopinn {

struct CollocationSet {
    WaveDomain domain{};
    std::vector<Point> interior;   // N_f residual points
    std::vector<double> initial;   // N_0 positions at t = 0
    std::vector<double> boundary;  // N_b times, applied at x = 0 and x = L
    std::uint64_t seed = 0;
};

inline CollocationSet sample_collocation(const WaveDomain& domain, std::size_t n_f, std::size_t n_0,
                                         std::size_t n_b, std::uint64_t seed) {
    if (n_f == 0 || n_0 == 0 || n_b == 0) throw InvalidInput("collocation counts must be positive");
    CollocationSet s;
    s.domain = domain;
    s.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(0.0, domain.length);
    std::uniform_real_distribution<double> ut(0.0, domain.horizon);
    s.interior.resize(n_f);
    for (auto& p : s.interior) {
        p.x = ux(rng);
        p.t = ut(rng);
    }
    s.initial.resize(n_0);
    for (auto& x : s.initial) x = ux(rng);
    s.boundary.resize(n_b);
    for (auto& t : s.boundary) t = ut(rng);
    return s;
}

struct LossBreakdown {
    double j_f = 0.0;
    double j_0 = 0.0;
    double j_b = 0.0;
    double j_total = 0.0;
};

namespace detail {

inline constexpr std::size_t kChunk = 512;

/// Loss components and (optionally) their parameter gradient, accumulated chunk by chunk.
class PinnLossEvaluator {
public:
    PinnLossEvaluator(const CollocationSet& colloc, double c) : colloc_(colloc), c2_(c * c) {
        for (std::size_t i = 0; i < colloc.initial.size(); ++i) initial_pts_.push_back({colloc.initial[i], 0.0});
        for (double t : colloc.boundary) boundary_pts_.push_back({0.0, t});
        for (double t : colloc.boundary) boundary_pts_.push_back({colloc.domain.length, t});
    }

    /// Fixes one dropout mask per point and hidden unit for the lifetime of the evaluator.
    void enable_dropout(const MlpParams& shape, std::uint64_t seed) {
        if (shape.dropout_rate <= 0.0) return;
        std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
        auto make = [&](std::size_t n, std::vector<DropoutMasks>& out) {
            for (std::size_t b = 0; b < n; b += kChunk)
                out.push_back(sample_dropout_masks(shape, std::min(kChunk, n - b), rng));
        };
        make(colloc_.interior.size(), interior_masks_);
        make(initial_pts_.size(), initial_masks_);
        make(boundary_pts_.size(), boundary_masks_);
    }

    LossBreakdown evaluate(const MlpParams& params, Eigen::VectorXd* grad) {
        if (grad) *grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.parameter_count()));
        LossBreakdown lb;
        const double nf = static_cast<double>(colloc_.interior.size());
        const double n0 = static_cast<double>(initial_pts_.size());
        const double nb = static_cast<double>(colloc_.boundary.size());

        // Residual term.
        for (std::size_t b = 0, chunk = 0; b < colloc_.interior.size(); b += kChunk, ++chunk) {
            const auto pts = std::span(colloc_.interior).subspan(b, std::min(kChunk, colloc_.interior.size() - b));
            auto& tape = tape_for(0, pts.size());
            tape.run(params, pts, JetOrder::full, mask(interior_masks_, chunk));
            const auto B = tape.batch();
            const auto& out = tape.output();
            Eigen::RowVectorXd seed;
            if (grad) seed = Eigen::RowVectorXd::Zero(5 * B);
            double part = 0.0;
            for (Eigen::Index i = 0; i < B; ++i) {
                const double r = c2_ * out(3 * B + i) - out(4 * B + i);
                part += r * r;
                if (grad) {
                    seed(3 * B + i) = 2.0 * r * c2_ / nf;
                    seed(4 * B + i) = -2.0 * r / nf;
                }
            }
            lb.j_f += part;
            if (grad) tape.backward(seed, *grad);
        }
        lb.j_f /= nf;

        // Initial displacement and velocity.
        for (std::size_t b = 0, chunk = 0; b < initial_pts_.size(); b += kChunk, ++chunk) {
            const auto pts = std::span(initial_pts_).subspan(b, std::min(kChunk, initial_pts_.size() - b));
            auto& tape = tape_for(1, pts.size());
            tape.run(params, pts, JetOrder::full, mask(initial_masks_, chunk));
            const auto B = tape.batch();
            const auto& out = tape.output();
            Eigen::RowVectorXd seed;
            if (grad) seed = Eigen::RowVectorXd::Zero(5 * B);
            double part = 0.0;
            for (Eigen::Index i = 0; i < B; ++i) {
                const double e = out(i) - initial_displacement(pts[static_cast<std::size_t>(i)].x);
                const double v = out(2 * B + i);
                part += e * e + v * v;
                if (grad) {
                    seed(i) = 2.0 * e / n0;
                    seed(2 * B + i) = 2.0 * v / n0;
                }
            }
            lb.j_0 += part;
            if (grad) tape.backward(seed, *grad);
        }
        lb.j_0 /= n0;

        // Dirichlet boundaries; both walls share the 1/N_b weight.
        for (std::size_t b = 0, chunk = 0; b < boundary_pts_.size(); b += kChunk, ++chunk) {
            const auto pts = std::span(boundary_pts_).subspan(b, std::min(kChunk, boundary_pts_.size() - b));
            auto& tape = tape_for(2, pts.size());
            tape.run(params, pts, JetOrder::value, mask(boundary_masks_, chunk));
            const auto B = tape.batch();
            const auto& out = tape.output();
            double part = 0.0;
            for (Eigen::Index i = 0; i < B; ++i) part += out(i) * out(i);
            lb.j_b += part;
            if (grad) tape.backward((2.0 / nb) * out, *grad);
        }
        lb.j_b /= nb;

        if (!std::isfinite(lb.j_f)) throw NumericError("j_f", "non-finite residual loss");
        if (!std::isfinite(lb.j_0)) throw NumericError("j_0", "non-finite initial-condition loss");
        if (!std::isfinite(lb.j_b)) throw NumericError("j_b", "non-finite boundary loss");
        lb.j_total = lb.j_f + lb.j_0 + lb.j_b;
        return lb;
    }

private:
    // Full chunks and the trailing partial chunk keep separate tapes so buffers are never reshaped.
    JetTape& tape_for(int set, std::size_t n) { return tapes_[set][n == kChunk ? 0 : 1]; }

    static const DropoutMasks* mask(const std::vector<DropoutMasks>& m, std::size_t chunk) {
        return m.empty() ? nullptr : &m[chunk];
    }

    const CollocationSet& colloc_;
    double c2_;
    std::vector<Point> initial_pts_;
    std::vector<Point> boundary_pts_;
    std::vector<DropoutMasks> interior_masks_, initial_masks_, boundary_masks_;
    JetTape tapes_[3][2];
};

}  // namespace detail

/// Deterministic loss (dropout inactive).
inline LossBreakdown pinn_loss(const MlpParams& params, const CollocationSet& colloc, WaveSpeed c) {
    return detail::PinnLossEvaluator(colloc, c.scaled()).evaluate(params, nullptr);
}

/// Loss with its gradient w.r.t. the flat parameter vector.
inline LossBreakdown pinn_loss_grad(const MlpParams& params, const CollocationSet& colloc, WaveSpeed c,
                                    Eigen::VectorXd& grad) {
    return detail::PinnLossEvaluator(colloc, c.scaled()).evaluate(params, &grad);
}

struct TrainOptions {
    std::vector<int> arch{2, 32, 32, 32, 1};
    LbfgsOptions lbfgs{};
    Activation activation = Activation::tanh;
    double dropout_rate = 0.0;
    /// Start from these parameters instead of a fresh initialisation.
    std::optional<MlpParams> warm_start;
};

struct TrainedField {
    MlpParams params;
    double c = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t collocation_seed = 0;
    LossBreakdown final_loss;
    OptimTrace trace;
};

inline TrainedField train_pinn(WaveSpeed c, const CollocationSet& colloc, const TrainOptions& opts,
                               std::uint64_t seed) {
    validate_layer_sizes(opts.arch);
    MlpParams init = opts.warm_start ? *opts.warm_start
                                     : init_params(opts.arch, opts.activation, opts.dropout_rate, seed);
    if (init.layer_sizes != opts.arch) throw ConfigError("warm-start parameters do not match architecture");

    detail::PinnLossEvaluator eval(colloc, c.scaled());
    eval.enable_dropout(init, seed);
    MlpParams work = init;
    auto fg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        work.assign(x);
        return eval.evaluate(work, &g).j_total;
    };
    auto res = minimize(fg, init.flatten(), opts.lbfgs);

    TrainedField field;
    field.params = std::move(init);
    field.params.assign(res.x);
    field.c = c.scaled();
    field.seed = seed;
    field.collocation_seed = colloc.seed;
    field.trace = std::move(res.trace);
    field.final_loss = pinn_loss(field.params, colloc, c);
    return field;
}

inline std::vector<double> eval_field(const TrainedField& field, std::span<const double> xs, double t_obs) {
    std::vector<Point> pts;
    pts.reserve(xs.size());
    for (double x : xs) pts.push_back({x, t_obs});
    return forward(field.params, pts);
}

/// Relative L2 error of the field against the analytic solution on an n x n grid.
inline double relative_l2_error(const MlpParams& params, WaveSpeed c, const WaveDomain& domain, std::size_t n = 101) {
    std::vector<Point> pts;
    pts.reserve(n * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            pts.push_back({domain.length * static_cast<double>(i) / static_cast<double>(n - 1),
                           domain.horizon * static_cast<double>(j) / static_cast<double>(n - 1)});
    const auto u = forward(params, pts);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double ref = analytic_u(pts[k].x, pts[k].t, c, domain);
        num += (u[k] - ref) * (u[k] - ref);
        den += ref * ref;
    }
    return std::sqrt(num / den);
}

/// Parameter file preceded by `# key=value` metadata lines.
inline void save_trained_field(const std::filesystem::path& path, const TrainedField& f) {
    ensure_directory(path.parent_path());
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << "# c=" << csv::format_double(f.c) << '\n'
       << "# seed=" << f.seed << '\n'
       << "# collocation_seed=" << f.collocation_seed << '\n'
       << "# j_f=" << csv::format_double(f.final_loss.j_f) << '\n'
       << "# j_0=" << csv::format_double(f.final_loss.j_0) << '\n'
       << "# j_b=" << csv::format_double(f.final_loss.j_b) << '\n'
       << "# j_total=" << csv::format_double(f.final_loss.j_total) << '\n'
       << "# iterations=" << f.trace.iterations << '\n'
       << "# termination=" << to_string(f.trace.termination_reason) << '\n';
    write_params(os, f.params);
}

inline TrainedField load_trained_field(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path.string() + "'");
    TrainedField f;
    std::string line;
    while (is.peek() == '#') {
        std::getline(is, line);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const auto key = line.substr(2, eq - 2);
        const auto val = line.substr(eq + 1);
        if (key == "c") f.c = csv::parse_double(val);
        else if (key == "seed") f.seed = std::stoull(val);
        else if (key == "collocation_seed") f.collocation_seed = std::stoull(val);
        else if (key == "j_f") f.final_loss.j_f = csv::parse_double(val);
        else if (key == "j_0") f.final_loss.j_0 = csv::parse_double(val);
        else if (key == "j_b") f.final_loss.j_b = csv::parse_double(val);
        else if (key == "j_total") f.final_loss.j_total = csv::parse_double(val);
        else if (key == "iterations") f.trace.iterations = std::stoi(val);
    }
    f.params = read_params(is);
    return f;
}

}  // namespace bopinn
