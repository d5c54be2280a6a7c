#include "oracles.hpp"

#include <bopinn/wave_oracle.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace bopinn;

namespace {

const WaveDomain kUnit{};

std::vector<double> sinusoid(std::size_t n) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = std::sin(2.0 * std::numbers::pi * 5.0 * static_cast<double>(i) / n);
    return s;
}

}  // namespace

TEST(WaveSpeed, ValidatesRangeAndScaling) {
    EXPECT_THROW(WaveSpeed(0.05), DomainError);
    EXPECT_THROW(WaveSpeed(1.01), DomainError);
    EXPECT_NO_THROW(WaveSpeed(0.1));
    EXPECT_NO_THROW(WaveSpeed(1.0));
    EXPECT_DOUBLE_EQ(WaveSpeed::from_physical(5500.0).scaled(), 0.55);
    EXPECT_DOUBLE_EQ(WaveSpeed(0.85).physical(), 8500.0);
}

TEST(WaveDomain, RejectsNonPositiveExtent) {
    EXPECT_THROW(WaveDomain(0.0, 1.0), DomainError);
    EXPECT_THROW(WaveDomain(1.0, -1.0), DomainError);
}

TEST(AnalyticU, Examples) {
    EXPECT_EQ(analytic_u(0.0, 0.7, WaveSpeed(0.55), kUnit), 0.0);
    EXPECT_NEAR(analytic_u(0.5, 0.0, WaveSpeed(0.3), kUnit), -1.0, 1e-15);
    EXPECT_NEAR(analytic_u(0.5, 0.25, WaveSpeed(0.85), kUnit), -std::cos(0.2125 * std::numbers::pi), 1e-14);
    EXPECT_NEAR(analytic_u(0.5, 0.25, WaveSpeed(0.85), kUnit), -0.78531, 1e-5);
}

TEST(AnalyticU, OutOfDomainThrows) {
    EXPECT_THROW(analytic_u(-0.01, 0.5, WaveSpeed(0.5), kUnit), DomainError);
    EXPECT_THROW(analytic_u(0.5, 1.5, WaveSpeed(0.5), kUnit), DomainError);
    EXPECT_THROW(analytic_u(10.5, 0.5, WaveSpeed(0.5), WaveDomain(10.0, 1.0)), DomainError);
}

TEST(AnalyticU, SatisfiesPdeByFiniteDifferences) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(0.05, 0.95), ut(0.05, 0.95), uc(0.1, 1.0);
    const double h = 1e-4;
    for (int k = 0; k < 200; ++k) {
        const double x = ux(rng), t = ut(rng);
        const WaveSpeed c(uc(rng));
        const double uxx = oracle::second_diff([&](double s) { return analytic_u(s, t, c, kUnit); }, x, h);
        const double utt = oracle::second_diff([&](double s) { return analytic_u(x, s, c, kUnit); }, t, h);
        EXPECT_NEAR(c.scaled() * c.scaled() * uxx - utt, 0.0, 1e-5);
    }
}

TEST(AnalyticU, MatchesExplicitFiniteDifferenceSolve) {
    for (double c : {0.2, 0.55, 0.85, 1.0}) {
        const std::size_t nx = 401;
        const auto u = oracle::leapfrog_wave(c, 1.0, 0.25, nx, [](double x) { return initial_displacement(x); });
        double worst = 0.0;
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = static_cast<double>(i) / static_cast<double>(nx - 1);
            worst = std::max(worst, std::abs(u[i] - analytic_u(x, 0.25, WaveSpeed(c), kUnit)));
        }
        EXPECT_LT(worst, 1e-3) << "c=" << c;
    }
}

TEST(AnalyticU, BoundaryIdentityAtIntegerLength) {
    for (double len : {1.0, 2.0, 10.0}) {
        const WaveDomain d(len, 1.0);
        for (double t = 0.0; t <= 1.0; t += 0.0625)
            for (double c : {0.1, 0.37, 0.85, 1.0}) {
                EXPECT_EQ(analytic_u(0.0, t, WaveSpeed(c), d), 0.0);
                EXPECT_EQ(std::abs(analytic_u(len, t, WaveSpeed(c), d)), 0.0);
            }
    }
}

TEST(AnalyticU, InitialVelocityVanishes) {
    const double h = 1e-5;
    for (double x = 0.0; x <= 1.0; x += 0.05)
        for (double c : {0.2, 0.55, 1.0}) {
            // One-sided in the domain; the cosine is even in t so the forward difference is O(h).
            const double fwd = (analytic_u(x, h, WaveSpeed(c), kUnit) - analytic_u(x, 0.0, WaveSpeed(c), kUnit)) / h;
            EXPECT_LT(std::abs(fwd), 1e-4);
            // Symmetric extension across t = 0.
            const double central = (-std::sin(std::numbers::pi * x) * std::cos(std::numbers::pi * c * h) -
                                    -std::sin(std::numbers::pi * x) * std::cos(-std::numbers::pi * c * h)) /
                                   (2.0 * h);
            EXPECT_LT(std::abs(central), 1e-6);
        }
}

TEST(AnalyticU, TemporalPeriodicityWithinHorizon) {
    const WaveDomain d(1.0, 30.0);
    for (double c : {0.2, 0.5, 1.0}) {
        const double period = 2.0 / c;
        for (double t = 0.0; t + period <= d.horizon; t += 0.7)
            for (double x : {0.1, 0.33, 0.5, 0.9})
                EXPECT_NEAR(analytic_u(x, t, WaveSpeed(c), d), analytic_u(x, t + period, WaveSpeed(c), d), 1e-12);
    }
}

TEST(AnalyticU, BoundedByOne) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0), uc(0.1, 1.0);
    for (int k = 0; k < 5000; ++k) EXPECT_LE(std::abs(analytic_u(u01(rng), u01(rng), WaveSpeed(uc(rng)), kUnit)), 1.0);
}

TEST(AddNoise, InfiniteSnrIsIdentity) {
    const auto s = sinusoid(100);
    EXPECT_EQ(add_noise(s, std::numeric_limits<double>::infinity(), 5), s);
}

TEST(AddNoise, CalibratedSnrSingleSeed) {
    const auto s = sinusoid(1000);
    const auto n = add_noise(s, 36.34, 7);
    EXPECT_NEAR(empirical_snr_db(s, n), 36.34, 0.5);
}

TEST(AddNoise, CalibratedSnrAcrossSeeds) {
    const auto s = sinusoid(1000);
    double acc = 0.0;
    const int seeds = 20;
    for (int k = 0; k < seeds; ++k) acc += empirical_snr_db(s, add_noise(s, 36.34, 100 + k));
    EXPECT_NEAR(acc / seeds, 36.34, 0.3);
}

TEST(AddNoise, SeededDeterminism) {
    const auto s = sinusoid(300);
    EXPECT_EQ(add_noise(s, 20.0, 42), add_noise(s, 20.0, 42));
    EXPECT_NE(add_noise(s, 20.0, 42), add_noise(s, 20.0, 43));
}

TEST(AddNoise, RejectsDegenerateInput) {
    const std::vector<double> zeros(10, 0.0);
    EXPECT_THROW(add_noise(zeros, 30.0, 1), InvalidInput);
    EXPECT_EQ(add_noise(zeros, std::numeric_limits<double>::infinity(), 1), zeros);
    EXPECT_THROW(add_noise(std::vector<double>{}, 30.0, 1), InvalidInput);
    EXPECT_THROW(add_noise(sinusoid(10), std::nan(""), 1), InvalidInput);
}

TEST(MakeSnapshot, HighSpeedCaseShape) {
    const auto s = make_snapshot(WaveSpeed(0.85), 0.25, 256, 36.34, 1);
    ASSERT_EQ(s.size(), 256u);
    EXPECT_EQ(s.xs.front(), 0.0);
    EXPECT_EQ(s.xs.back(), 1.0);
    EXPECT_EQ(analytic_u(s.xs.front(), 0.25, WaveSpeed(0.85), kUnit), 0.0);
    EXPECT_EQ(analytic_u(s.xs.back(), 0.25, WaveSpeed(0.85), kUnit), 0.0);
    EXPECT_NO_THROW(s.validate());
    for (std::size_t i = 1; i < s.size(); ++i) EXPECT_LT(s.xs[i - 1], s.xs[i]);
}

TEST(MakeSnapshot, InitialConditionThreeSensors) {
    const auto s = make_snapshot(WaveSpeed(0.2), 0.0, 3, std::numeric_limits<double>::infinity(), 0);
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.xs, (std::vector<double>{0.0, 0.5, 1.0}));
    EXPECT_EQ(s.us[0], 0.0);
    EXPECT_NEAR(s.us[1], -1.0, 1e-15);
    EXPECT_EQ(std::abs(s.us[2]), 0.0);
}

TEST(MakeSnapshot, NoiseFreeMatchesAnalytic) {
    const auto s = make_snapshot(WaveSpeed(0.55), 0.25, 256, std::numeric_limits<double>::infinity(), 9);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.us[i], analytic_u(s.xs[i], 0.25, WaveSpeed(0.55), kUnit));
}

TEST(Snapshot, ValidateRejectsBadLayouts) {
    Snapshot s;
    s.xs = {0.0};
    s.us = {0.0};
    EXPECT_THROW(s.validate(), InvalidInput);
    s.xs = {0.0, 0.5, 0.4};
    s.us = {0.0, 0.0, 0.0};
    EXPECT_THROW(s.validate(), InvalidInput);
    s.xs = {0.0, 0.5, 1.5};
    EXPECT_THROW(s.validate(), InvalidInput);
    s.xs = {0.0, 0.5};
    EXPECT_THROW(s.validate(), InvalidInput);
}

TEST(Snapshot, CsvRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "bopinn_wave_oracle_test";
    const auto s = make_snapshot(WaveSpeed(0.55), 0.25, 64, 36.34, 4, WaveDomain(2.0, 1.0));
    write_snapshot(dir / "snap.csv", s);
    const auto r = read_snapshot(dir / "snap.csv");
    EXPECT_EQ(r.xs, s.xs);
    EXPECT_EQ(r.us, s.us);
    EXPECT_EQ(r.t_obs, s.t_obs);
    EXPECT_EQ(r.snr_db, s.snr_db);
    EXPECT_EQ(r.seed, s.seed);
    EXPECT_EQ(r.c_true, s.c_true);
    EXPECT_EQ(r.domain.length, 2.0);
    std::filesystem::remove_all(dir);
}
