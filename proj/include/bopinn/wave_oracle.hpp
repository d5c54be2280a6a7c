#pragma once

// Closed-form standing-wave solution of the 1D wave problem
//
//   c^2 u_xx = u_tt,  x in [0, L], t in [0, T]
//   u(x, 0) = -sin(pi x),  u_t(x, 0) = 0,  u(0, t) = u(L, t) = 0
//
// plus synthetic snapshot generation with calibrated white noise.

#include <bopinn/csv.hpp>
#include <bopinn/error.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace bopinn {

struct WaveDomain {
    double length = 1.0;   // L
    double horizon = 1.0;  // T

    WaveDomain() = default;
    WaveDomain(double l, double t) : length(l), horizon(t) {
        if (!(l > 0.0) || !(t > 0.0) || !std::isfinite(l) || !std::isfinite(t))
            throw DomainError("wave domain needs L > 0 and T > 0");
    }

    bool contains(double x, double t) const {
        return x >= 0.0 && x <= length && t >= 0.0 && t <= horizon;
    }
};

/// Dimensionless wave speed. Physical speeds map linearly: c_phys = 10000 * c.
class WaveSpeed {
public:
    static constexpr double kMin = 0.1;
    static constexpr double kMax = 1.0;
    static constexpr double kPhysicalScale = 10000.0;  // m/s per unit

    explicit WaveSpeed(double scaled) : scaled_(scaled) {
        if (!(scaled >= kMin && scaled <= kMax))
            throw DomainError("wave speed " + std::to_string(scaled) + " outside [0.1, 1]");
    }

    static WaveSpeed from_physical(double metres_per_second) {
        return WaveSpeed(metres_per_second / kPhysicalScale);
    }

    double scaled() const noexcept { return scaled_; }
    double physical() const noexcept { return scaled_ * kPhysicalScale; }

private:
    double scaled_;
};

struct Snapshot {
    double t_obs = 0.0;
    std::vector<double> xs;
    std::vector<double> us;
    double snr_db = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    std::optional<double> c_true;
    WaveDomain domain{};

    std::size_t size() const noexcept { return xs.size(); }

    /// Throws InvalidInput unless the sensor layout invariants hold.
    void validate() const {
        if (xs.size() != us.size() || xs.size() < 2)
            throw InvalidInput("snapshot needs >= 2 sensors with matching values");
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!(xs[i] >= 0.0 && xs[i] <= domain.length))
                throw InvalidInput("snapshot sensor outside [0, L]");
            if (i > 0 && !(xs[i] > xs[i - 1]))
                throw InvalidInput("snapshot sensors must be strictly increasing");
        }
        if (!(t_obs >= 0.0 && t_obs <= domain.horizon))
            throw InvalidInput("snapshot time outside [0, T]");
    }
};

namespace detail {

/// sin(pi x), exactly zero at integer x.
inline double sin_pi(double x) {
    const double r = std::remainder(x, 2.0);  // exact, in [-1, 1]
    if (r == 0.0 || std::abs(r) == 1.0) return 0.0;
    return std::sin(std::numbers::pi * r);
}

inline double cos_pi(double x) {
    const double r = std::remainder(x, 2.0);
    if (std::abs(r) == 0.5) return 0.0;
    return std::cos(std::numbers::pi * r);
}

}  // namespace detail

/// Initial displacement u0(x) = -sin(pi x).
inline double initial_displacement(double x) { return -detail::sin_pi(x); }

/// u(x, t) = -sin(pi x) cos(pi c t).
inline double analytic_u(double x, double t, WaveSpeed c, const WaveDomain& domain) {
    if (!domain.contains(x, t))
        throw DomainError("analytic_u: (x=" + std::to_string(x) + ", t=" + std::to_string(t) +
                          ") outside domain");
    // sin_pi is exactly zero at integer x, so the Dirichlet data holds exactly for integer L.
    return -detail::sin_pi(x) * detail::cos_pi(c.scaled() * t);
}

/// Mean square of a signal.
inline double signal_power(std::span<const double> s) {
    double acc = 0.0;
    for (double v : s) acc += v * v;
    return s.empty() ? 0.0 : acc / static_cast<double>(s.size());
}

/// Empirical SNR in dB of `noisy` relative to `clean`.
inline double empirical_snr_db(std::span<const double> clean, std::span<const double> noisy) {
    if (clean.size() != noisy.size()) throw InvalidInput("empirical_snr_db: length mismatch");
    double noise = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) noise += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
    noise /= static_cast<double>(clean.size());
    return 10.0 * std::log10(signal_power(clean) / noise);
}

/// signal + N(0, P_signal / 10^(snr/10)) i.i.d. noise. `snr_db = +inf` adds nothing.
inline std::vector<double> add_noise(std::span<const double> signal, double snr_db, std::uint64_t seed) {
    if (signal.empty()) throw InvalidInput("add_noise: empty signal");
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
        throw InvalidInput("add_noise: snr_db must be finite or +inf");
    std::vector<double> out(signal.begin(), signal.end());
    if (std::isinf(snr_db)) return out;

    const double power = signal_power(signal);
    if (!(power > 0.0)) throw InvalidInput("add_noise: zero-power signal has undefined noise level");
    const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : out) v += noise(rng);
    return out;
}

/// Uniform inclusive grid of `n` sensors over [0, L].
inline std::vector<double> sensor_grid(std::size_t n, const WaveDomain& domain) {
    if (n < 2) throw InvalidInput("need at least 2 sensors");
    std::vector<double> xs(n);
    const double h = domain.length / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) xs[i] = static_cast<double>(i) * h;
    xs.back() = domain.length;
    return xs;
}

inline Snapshot make_snapshot(WaveSpeed c, double t_obs, std::size_t n_sensors, double snr_db,
                              std::uint64_t seed, const WaveDomain& domain = {}) {
    Snapshot s;
    s.domain = domain;
    s.t_obs = t_obs;
    s.snr_db = snr_db;
    s.seed = seed;
    s.c_true = c.scaled();
    s.xs = sensor_grid(n_sensors, domain);
    std::vector<double> clean(n_sensors);
    for (std::size_t i = 0; i < n_sensors; ++i) clean[i] = analytic_u(s.xs[i], t_obs, c, domain);
    s.us = add_noise(clean, snr_db, seed);
    return s;
}

inline void write_snapshot(const std::filesystem::path& path, const Snapshot& s) {
    csv::Table t;
    if (s.c_true) t.meta.emplace_back("c_true", csv::format_double(*s.c_true));
    t.meta.emplace_back("t_obs", csv::format_double(s.t_obs));
    t.meta.emplace_back("snr_db", csv::format_double(s.snr_db));
    t.meta.emplace_back("seed", std::to_string(s.seed));
    t.meta.emplace_back("length", csv::format_double(s.domain.length));
    t.meta.emplace_back("horizon", csv::format_double(s.domain.horizon));
    t.header = {"x", "u"};
    for (std::size_t i = 0; i < s.size(); ++i) t.rows.push_back({s.xs[i], s.us[i]});
    csv::write(path, t);
}

inline Snapshot read_snapshot(const std::filesystem::path& path) {
    const auto t = csv::read(path);
    Snapshot s;
    auto meta_or = [&](const char* key, double fallback) {
        const auto* v = t.find_meta(key);
        return v ? csv::parse_double(*v) : fallback;
    };
    if (const auto* v = t.find_meta("c_true")) s.c_true = csv::parse_double(*v);
    s.t_obs = meta_or("t_obs", 0.0);
    s.snr_db = meta_or("snr_db", std::numeric_limits<double>::infinity());
    if (const auto* v = t.find_meta("seed")) s.seed = std::stoull(*v);
    s.domain = WaveDomain(meta_or("length", 1.0), meta_or("horizon", 1.0));
    const auto ix = t.column("x");
    const auto iu = t.column("u");
    for (const auto& row : t.rows) {
        s.xs.push_back(row[ix]);
        s.us.push_back(row[iu]);
    }
    s.validate();
    return s;
}

}  // namespace bopinn
