#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rotorkick/basis.hpp"
#include "rotorkick/observables.hpp"
#include "rotorkick/parallel.hpp"
#include "rotorkick/propagator.hpp"
#include "rotorkick/rng.hpp"
#include "rotorkick/units.hpp"

namespace rotorkick {

struct NoiseModel {
    double P = 0.0;
    double sigma_P = 0.0;
    int realisations = 50;
    std::uint64_t seed = 0;
    // Negative draws are kept by default: clipping would bias the mean, and
    // the kick operator is well defined for negative strengths (the pulse
    // phase flips).  The flag reproduces clipped behaviour on request.
    bool clip_negative = false;

    void validate() const {
        if (!(sigma_P >= 0.0)) throw DomainError("NoiseModel: sigma_P must be non-negative");
        if (realisations < 1) throw DomainError("NoiseModel: realisations must be at least 1");
    }
};

// Per-pulse strengths for one noise realisation: N independent Gaussian
// draws with mean P and std sigma_P.  The stream depends only on (seed,
// realisation), so every thermal member of a realisation sees the same
// train, as molecules sharing one laser shot do.
inline std::vector<double> draw_train(const NoiseModel& model, int N, int realisation = 0) {
    model.validate();
    if (N < 1) throw DomainError("draw_train: need at least one pulse");
    std::vector<double> P(static_cast<std::size_t>(N), model.P);
    if (model.sigma_P == 0.0) return P;
    Rng rng(derive_seed(model.seed, static_cast<std::uint64_t>(realisation)));
    for (double& v : P) {
        v = model.P + model.sigma_P * rng.normal();
        if (model.clip_negative && v < 0.0) v = 0.0;
    }
    return P;
}

struct ThermalMember {
    int J0;
    int M0; // |M|; entries with M0 > 0 carry the +-M degeneracy factor 2
    Parity parity;
    double weight;
};

struct ThermalEnsemble {
    std::vector<ThermalMember> members;
    double J_T = 0.0;
    double eps = 0.0;
    double truncation = 0.0; // Boltzmann mass dropped before renormalising
};

// Boltzmann-weighted initial states: weight(J0, M0) proportional to
// g_parity(J0) exp(-E_J0 / J_T^2), enumerated with M0 = 0..J0 (dynamics
// depend on |M| only).  States are included in increasing-J0 order until the
// kept mass reaches (1 - eps) of the full partition sum, then renormalised.
inline ThermalEnsemble thermal_states(double J_T, double eps, double d_e = 0.0,
                                      double g_even = 1.0, double g_odd = 1.0) {
    if (!(J_T >= 0.0)) throw DomainError("thermal_states: J_T must be non-negative");
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("thermal_states: eps must be in (0,1)");
    if (!(g_even > 0.0) || !(g_odd > 0.0))
        throw DomainError("thermal_states: spin weights must be positive");

    ThermalEnsemble ens;
    ens.J_T = J_T;
    ens.eps = eps;
    if (J_T == 0.0) {
        ens.members.push_back({0, 0, Parity::even, 1.0});
        return ens;
    }

    const double beta = 1.0 / (J_T * J_T);
    auto boltzmann = [&](int J) {
        const double E = 0.5 * J * (J + 1) - d_e * std::pow(static_cast<double>(J) * (J + 1), 2);
        return ((J % 2 == 0) ? g_even : g_odd) * std::exp(-beta * E);
    };

    // full partition sum; the ladder check in energy_levels guards the same
    // turnover region, here the loop just stops once terms are negligible
    double Z = 0.0;
    int j_top = 0;
    for (int J = 0; J < 100000; ++J) {
        const double term = (2 * J + 1) * boltzmann(J);
        Z += term;
        j_top = J;
        if (J > 3 * J_T * J_T + 10 && term < Z * 1e-16) break;
    }

    const double target = (1.0 - eps) * Z;
    double kept = 0.0;
    for (int J = 0; J <= j_top && kept < target; ++J) {
        const double w = boltzmann(J);
        const Parity par = (J % 2 == 0) ? Parity::even : Parity::odd;
        for (int M = 0; M <= J && kept < target; ++M) {
            const double entry = (M > 0 ? 2.0 : 1.0) * w;
            ens.members.push_back({J, M, par, entry});
            kept += entry;
        }
    }
    ens.truncation = 1.0 - kept / Z;
    for (auto& m : ens.members) m.weight /= kept;
    return ens;
}

inline ThermalEnsemble thermal_states(const ThermalSpec& spec, const MoleculeSpec& mol) {
    return thermal_states(spec.J_T, spec.eps, mol.d_e(), mol.g_even, mol.g_odd);
}

struct EnsembleConfig {
    TrainSpec train;
    ThermalSpec thermal;
    double d_e = 0.0;
    double g_even = 1.0;
    double g_odd = 1.0;
    bool clip_negative = false;
    int alignment_samples = 64;
    int window_headroom = 40; // initial j_max = J0 + headroom; growth adapts
    int threads = 0;          // 0: ROTORKICK_THREADS or hardware concurrency
    bool keep_members = false;
    PropagationOptions prop{};

    void validate() const {
        train.validate();
        thermal.validate();
        if (alignment_samples < 1)
            throw DomainError("EnsembleConfig: alignment_samples must be at least 1");
        if (window_headroom < 4)
            throw DomainError("EnsembleConfig: window_headroom must be at least 4");
    }
};

struct SeriesStat {
    std::vector<double> mean;
    std::vector<double> se; // realisation-level standard error; zero for R = 1
};

struct MemberRecord {
    int realisation = 0;
    int member = 0;
    std::vector<double> energy;
    std::vector<double> survival;
    std::vector<double> alignment;
};

struct EnsembleResult {
    SeriesStat energy;    // n = 0..N
    SeriesStat survival;  // n = 0..N
    SeriesStat alignment; // per cycle, n = 0..N-1
    std::vector<int> J;   // common grid 0..J_max over both parities
    std::vector<std::vector<double>> populations;    // [n][J] thermal+noise mean
    std::vector<std::vector<double>> populations_se; // [n][J]
    ThermalEnsemble thermal;
    int realisations = 1;
    bool valid = true;
    std::string error;
};

namespace detail {

struct Kahan {
    double s = 0.0, c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
};

struct TaskResult {
    std::vector<double> energy;
    std::vector<double> survival;
    std::vector<double> alignment;
    std::vector<std::vector<double>> prof; // [n] populations, profile J grid
    std::vector<int> prof_J;               // ascending, one parity, step 2
};

} // namespace detail

// Mean over (realisation x thermal member) for every observable, with the
// standard error taken across realisations after the thermal average.  Task
// results land in indexed slots and are reduced in fixed order, so the
// output is bit-identical under any thread schedule.
inline EnsembleResult run_ensemble(const EnsembleConfig& cfg) {
    cfg.validate();
    EnsembleResult out;
    out.thermal = thermal_states(cfg.thermal.J_T, cfg.thermal.eps, cfg.d_e, cfg.g_even, cfg.g_odd);

    const int N = cfg.train.N;
    const int M = static_cast<int>(out.thermal.members.size());
    // a noiseless train is the same in every realisation: run it once
    const int R = (cfg.train.sigma_P == 0.0) ? 1 : cfg.train.realisations;
    out.realisations = R;

    const NoiseModel noise{cfg.train.P, cfg.train.sigma_P, cfg.train.realisations,
                           cfg.train.seed, cfg.clip_negative};

    std::vector<detail::TaskResult> slots(static_cast<std::size_t>(R) * M);
    auto run_task = [&](int t) {
        const int r = t / M;
        const ThermalMember& mem = out.thermal.members[static_cast<std::size_t>(t % M)];
        const std::vector<double> P = draw_train(noise, N, r);

        BasisWindow w = make_window(mem.M0, mem.parity, mem.J0 + cfg.window_headroom);
        const WaveFunction psi0 = basis_state(w, mem.J0);
        const auto traj =
            propagate_train(psi0, cfg.train.tau, cfg.train.sigma, P, cfg.d_e, cfg.prop);

        detail::TaskResult& res = slots[static_cast<std::size_t>(t)];
        res.energy.reserve(traj.size());
        for (const auto& s : traj)
            res.energy.push_back(rotational_energy(s, window_levels(s.window, cfg.d_e)));
        res.survival = survival_probability(traj, psi0);
        res.alignment = alignment_series(traj, cfg.train.tau, cfg.d_e, cfg.alignment_samples);
        res.prof.reserve(traj.size());
        for (std::size_t n = 0; n < traj.size(); ++n) {
            auto prof = populations(traj[n], static_cast<int>(n));
            if (res.prof_J.size() < prof.J.size()) res.prof_J = prof.J;
            res.prof.push_back(std::move(prof.p));
        }
    };

    try {
        parallel_for(R * M, worker_count(cfg.threads), run_task);
    } catch (const std::exception& e) {
        out.valid = false;
        out.error = e.what();
        return out;
    }

    // common integer J grid across all tasks
    int j_max = 0;
    for (const auto& s : slots)
        if (!s.prof_J.empty()) j_max = std::max(j_max, s.prof_J.back());
    out.J.resize(static_cast<std::size_t>(j_max) + 1);
    for (int j = 0; j <= j_max; ++j) out.J[static_cast<std::size_t>(j)] = j;
    const std::size_t G = out.J.size();

    // per-realisation thermal averages, fixed member order
    std::vector<std::vector<double>> rE, rS, rA;
    std::vector<std::vector<std::vector<double>>> rP;
    rE.reserve(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) {
        std::vector<detail::Kahan> accE(static_cast<std::size_t>(N) + 1);
        std::vector<detail::Kahan> accS(static_cast<std::size_t>(N) + 1);
        std::vector<detail::Kahan> accA(static_cast<std::size_t>(N));
        std::vector<std::vector<detail::Kahan>> accP(
            static_cast<std::size_t>(N) + 1, std::vector<detail::Kahan>(G));
        for (int m = 0; m < M; ++m) {
            const double wgt = out.thermal.members[static_cast<std::size_t>(m)].weight;
            const auto& res = slots[static_cast<std::size_t>(r) * M + m];
            for (std::size_t n = 0; n <= static_cast<std::size_t>(N); ++n) {
                accE[n].add(wgt * res.energy[n]);
                accS[n].add(wgt * res.survival[n]);
                for (std::size_t k = 0; k < res.prof[n].size(); ++k)
                    accP[n][static_cast<std::size_t>(res.prof_J[k])].add(wgt * res.prof[n][k]);
            }
            for (std::size_t n = 0; n < static_cast<std::size_t>(N); ++n)
                accA[n].add(wgt * res.alignment[n]);
        }
        auto strip = [](const std::vector<detail::Kahan>& a) {
            std::vector<double> v(a.size());
            for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].s;
            return v;
        };
        rE.push_back(strip(accE));
        rS.push_back(strip(accS));
        rA.push_back(strip(accA));
        std::vector<std::vector<double>> profs;
        profs.reserve(accP.size());
        for (const auto& row : accP) profs.push_back(strip(row));
        rP.push_back(std::move(profs));
    }

    auto reduce = [&](const std::vector<std::vector<double>>& rows) {
        SeriesStat st;
        if (rows.empty()) return st;
        const std::size_t L = rows[0].size();
        st.mean.assign(L, 0.0);
        st.se.assign(L, 0.0);
        for (std::size_t i = 0; i < L; ++i) {
            detail::Kahan mu;
            for (const auto& row : rows) mu.add(row[i]);
            st.mean[i] = mu.s / static_cast<double>(rows.size());
            if (rows.size() > 1) {
                detail::Kahan var;
                for (const auto& row : rows) {
                    const double d = row[i] - st.mean[i];
                    var.add(d * d);
                }
                st.se[i] = std::sqrt(var.s / (static_cast<double>(rows.size()) *
                                              static_cast<double>(rows.size() - 1)));
            }
        }
        return st;
    };
    out.energy = reduce(rE);
    out.survival = reduce(rS);
    out.alignment = reduce(rA);

    out.populations.assign(static_cast<std::size_t>(N) + 1, std::vector<double>(G, 0.0));
    out.populations_se.assign(static_cast<std::size_t>(N) + 1, std::vector<double>(G, 0.0));
    for (std::size_t n = 0; n <= static_cast<std::size_t>(N); ++n) {
        std::vector<std::vector<double>> rows;
        rows.reserve(static_cast<std::size_t>(R));
        for (int r = 0; r < R; ++r) rows.push_back(rP[static_cast<std::size_t>(r)][n]);
        SeriesStat st = reduce(rows);
        out.populations[n] = std::move(st.mean);
        out.populations_se[n] = std::move(st.se);
    }
    return out;
}

// Optional per-member persistence: reruns the member tasks and returns the
// raw series.  Separated from run_ensemble so the aggregation path stays
// lean; callers wanting both pay one extra pass.
inline std::vector<MemberRecord> ensemble_members(const EnsembleConfig& cfg) {
    cfg.validate();
    const ThermalEnsemble ens =
        thermal_states(cfg.thermal.J_T, cfg.thermal.eps, cfg.d_e, cfg.g_even, cfg.g_odd);
    const int N = cfg.train.N;
    const int M = static_cast<int>(ens.members.size());
    const int R = (cfg.train.sigma_P == 0.0) ? 1 : cfg.train.realisations;
    const NoiseModel noise{cfg.train.P, cfg.train.sigma_P, cfg.train.realisations,
                           cfg.train.seed, cfg.clip_negative};
    std::vector<MemberRecord> records(static_cast<std::size_t>(R) * M);
    parallel_for(R * M, worker_count(cfg.threads), [&](int t) {
        const int r = t / M;
        const int m = t % M;
        const ThermalMember& mem = ens.members[static_cast<std::size_t>(m)];
        const std::vector<double> P = draw_train(noise, N, r);
        BasisWindow w = make_window(mem.M0, mem.parity, mem.J0 + cfg.window_headroom);
        const WaveFunction psi0 = basis_state(w, mem.J0);
        const auto traj =
            propagate_train(psi0, cfg.train.tau, cfg.train.sigma, P, cfg.d_e, cfg.prop);
        MemberRecord& rec = records[static_cast<std::size_t>(t)];
        rec.realisation = r;
        rec.member = m;
        for (const auto& s : traj)
            rec.energy.push_back(rotational_energy(s, window_levels(s.window, cfg.d_e)));
        rec.survival = survival_probability(traj, psi0);
        rec.alignment = alignment_series(traj, cfg.train.tau, cfg.d_e, cfg.alignment_samples);
    });
    return records;
}

} // namespace rotorkick
