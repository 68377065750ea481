#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rotorkick/ensemble.hpp"
#include "rotorkick/fit.hpp"
#include "rotorkick/observables.hpp"
#include "rotorkick/propagator.hpp"

using namespace rotorkick;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("per-pulse strength draws") {
    NoiseModel quiet{3.0, 0.0, 50, 7, false};
    for (double v : draw_train(quiet, 5)) REQUIRE(v == 3.0);

    NoiseModel m{3.0, 1.5, 50, 7, false};
    REQUIRE(draw_train(m, 32, 4) == draw_train(m, 32, 4));
    REQUIRE(draw_train(m, 32, 4) != draw_train(m, 32, 5));

    double sum = 0.0;
    int negatives = 0;
    for (int r = 0; r < 50; ++r) {
        for (double v : draw_train(m, 32, r)) {
            sum += v;
            if (v < 0.0) ++negatives;
        }
    }
    const double se = 1.5 / std::sqrt(1600.0);
    REQUIRE_THAT(sum / 1600.0, WithinAbs(3.0, 3.0 * se));
    // P(draw < 0) = Phi(-2) ~ 0.023, so ~36 of 1600, give or take 3 sigma
    REQUIRE(negatives >= 10);
    REQUIRE(negatives <= 80);

    NoiseModel clipped = m;
    clipped.clip_negative = true;
    int zeros = 0;
    for (int r = 0; r < 50; ++r) {
        const auto raw = draw_train(m, 32, r);
        const auto cut = draw_train(clipped, 32, r);
        for (std::size_t i = 0; i < raw.size(); ++i) {
            REQUIRE(cut[i] >= 0.0);
            if (raw[i] >= 0.0) REQUIRE(cut[i] == raw[i]);
            if (cut[i] == 0.0 && raw[i] < 0.0) ++zeros;
        }
    }
    REQUIRE(zeros == negatives);

    REQUIRE_THROWS_AS(draw_train(NoiseModel{1.0, -0.1, 5, 0, false}, 4), DomainError);
    REQUIRE_THROWS_AS(draw_train(m, 0), DomainError);
}

TEST_CASE("thermal state tables") {
    SECTION("zero temperature is the single ground state") {
        auto ens = thermal_states(0.0, 1e-3);
        REQUIRE(ens.members.size() == 1);
        REQUIRE(ens.members[0].J0 == 0);
        REQUIRE(ens.members[0].M0 == 0);
        REQUIRE(ens.members[0].weight == 1.0);
        REQUIRE(ens.truncation == 0.0);
    }
    SECTION("rigid-rotor Boltzmann ratios") {
        auto ens = thermal_states(1.0, 1e-9);
        double w00 = 0.0, w10 = 0.0, w11 = 0.0, total = 0.0;
        for (const auto& mem : ens.members) {
            total += mem.weight;
            REQUIRE(mem.weight > 0.0);
            REQUIRE(mem.M0 >= 0);
            REQUIRE(mem.M0 <= mem.J0);
            REQUIRE(mem.parity == ((mem.J0 % 2 == 0) ? Parity::even : Parity::odd));
            if (mem.J0 == 0 && mem.M0 == 0) w00 = mem.weight;
            if (mem.J0 == 1 && mem.M0 == 0) w10 = mem.weight;
            if (mem.J0 == 1 && mem.M0 == 1) w11 = mem.weight;
        }
        REQUIRE_THAT(total, WithinAbs(1.0, 1e-12));
        // E_1 - E_0 = 1 in units of 2B, temperature J_T^2 = 1
        REQUIRE_THAT(w00 / w10, WithinRel(std::exp(1.0), 1e-12));
        REQUIRE_THAT(w11, WithinRel(2.0 * w10, 1e-12)); // +-M fold
        REQUIRE(ens.truncation >= 0.0);
        REQUIRE(ens.truncation <= 1e-9);
    }
    SECTION("spin statistics scale whole parity classes") {
        auto ens = thermal_states(1.0, 1e-9, 0.0, 2.0, 1.0);
        double w00 = 0.0, w10 = 0.0;
        for (const auto& mem : ens.members) {
            if (mem.J0 == 0 && mem.M0 == 0) w00 = mem.weight;
            if (mem.J0 == 1 && mem.M0 == 0) w10 = mem.weight;
        }
        REQUIRE_THAT(w00 / w10, WithinRel(2.0 * std::exp(1.0), 1e-12));
    }
    SECTION("coverage grows with temperature") {
        REQUIRE(thermal_states(1.0, 1e-3).members.size() <
                thermal_states(5.0, 1e-3).members.size());
        REQUIRE_THROWS_AS(thermal_states(-1.0, 1e-3), DomainError);
        REQUIRE_THROWS_AS(thermal_states(1.0, 0.0), DomainError);
    }
}

TEST_CASE("ensemble of one reproduces a single run") {
    EnsembleConfig cfg;
    cfg.train.P = 3.0;
    cfg.train.tau = 1.0;
    cfg.train.N = 8;
    cfg.train.realisations = 1;
    auto res = run_ensemble(cfg);
    REQUIRE(res.valid);
    REQUIRE(res.realisations == 1);

    BasisWindow w = make_window(0, Parity::even, cfg.window_headroom);
    const WaveFunction psi0 = basis_state(w, 0);
    const auto traj = propagate_train(psi0, 1.0, 0.0, std::vector<double>(8, 3.0));
    const auto s = survival_probability(traj, psi0);
    const auto a = alignment_series(traj, 1.0);
    for (std::size_t n = 0; n <= 8; ++n) {
        REQUIRE(res.energy.mean[n] ==
                rotational_energy(traj[n], window_levels(traj[n].window, 0.0)));
        REQUIRE(res.survival.mean[n] == s[n]);
        REQUIRE(res.energy.se[n] == 0.0);
        auto prof = populations(traj[n], static_cast<int>(n));
        for (std::size_t k = 0; k < prof.J.size(); ++k)
            REQUIRE(res.populations[n][static_cast<std::size_t>(prof.J[k])] == prof.p[k]);
        // the other parity stays empty
        REQUIRE(res.populations[n][1] == 0.0);
    }
    for (std::size_t n = 0; n < 8; ++n) REQUIRE(res.alignment.mean[n] == a[n]);
}

TEST_CASE("noiseless thermal runs ignore the realisation count") {
    EnsembleConfig cfg;
    cfg.train.P = 2.0;
    cfg.train.tau = 1.0;
    cfg.train.N = 4;
    cfg.thermal.J_T = 1.0;
    cfg.thermal.eps = 1e-3;
    cfg.train.realisations = 1;
    auto one = run_ensemble(cfg);
    cfg.train.realisations = 9;
    auto nine = run_ensemble(cfg);
    REQUIRE(one.energy.mean == nine.energy.mean);
    REQUIRE(one.survival.mean == nine.survival.mean);
    REQUIRE(one.alignment.mean == nine.alignment.mean);
    REQUIRE(one.populations == nine.populations);
    for (double v : nine.energy.se) REQUIRE(v == 0.0);

    // the n = 0 energy is the Boltzmann average of the level energies
    double baseline = 0.0;
    for (const auto& mem : one.thermal.members)
        baseline += mem.weight * 0.5 * mem.J0 * (mem.J0 + 1);
    REQUIRE_THAT(one.energy.mean[0], WithinAbs(baseline, 1e-12));
    // weighted survival starts at 1 and populations start on the members
    REQUIRE_THAT(one.survival.mean[0], WithinAbs(1.0, 1e-12));
}

TEST_CASE("strength noise restores diffusive growth") {
    EnsembleConfig cfg;
    cfg.train.P = 3.0;
    cfg.train.tau = 1.0;
    cfg.train.N = 32;
    auto quiet = run_ensemble(cfg);

    cfg.train.sigma_P = 1.5;
    cfg.train.realisations = 50;
    cfg.train.seed = 0;
    auto noisy = run_ensemble(cfg);
    REQUIRE(noisy.valid);
    REQUIRE(noisy.energy.mean[32] > 8.0 * quiet.energy.mean[32]);
    REQUIRE(noisy.energy.se[32] > 0.0);

    std::vector<double> xs, ys;
    for (int n = 4; n <= 32; ++n) {
        xs.push_back(static_cast<double>(n));
        ys.push_back(noisy.energy.mean[static_cast<std::size_t>(n)]);
    }
    const LinearTrend trend = linear_trend(xs, ys);
    REQUIRE(trend.slope > 1.0);
    REQUIRE(trend.t_stat > 20.0);

    // survival keeps decaying under noise instead of saturating
    REQUIRE(noisy.survival.mean[32] < 0.6 * noisy.survival.mean[8]);
    REQUIRE(quiet.survival.mean[32] > 0.4);
}

TEST_CASE("worker failures are flagged, not thrown") {
    EnsembleConfig cfg;
    cfg.train.P = 5.0;
    cfg.train.tau = 1.0;
    cfg.train.N = 6;
    cfg.window_headroom = 4;
    cfg.prop.j_max_limit = 8;
    auto res = run_ensemble(cfg);
    REQUIRE_FALSE(res.valid);
    REQUIRE_FALSE(res.error.empty());
    REQUIRE(res.energy.mean.empty());
}

TEST_CASE("thread schedule does not change results") {
    EnsembleConfig cfg;
    cfg.train.P = 2.0;
    cfg.train.tau = 1.0;
    cfg.train.N = 4;
    cfg.train.sigma_P = 1.0;
    cfg.train.realisations = 3;
    cfg.thermal.J_T = 1.0;
    cfg.thermal.eps = 1e-2;
    cfg.threads = 1;
    auto serial = run_ensemble(cfg);
    cfg.threads = 4;
    auto pooled = run_ensemble(cfg);
    REQUIRE(serial.energy.mean == pooled.energy.mean);
    REQUIRE(serial.energy.se == pooled.energy.se);
    REQUIRE(serial.survival.mean == pooled.survival.mean);
    REQUIRE(serial.alignment.mean == pooled.alignment.mean);
    REQUIRE(serial.populations == pooled.populations);
}
