#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "rotorkick/basis.hpp"
#include "rotorkick/common.hpp"
#include "rotorkick/fit.hpp"
#include "rotorkick/propagator.hpp"
#include "rotorkick/units.hpp"

namespace rotorkick {

// Angular momentum distribution at one strobe point (or an ensemble-weighted
// aggregate of them, built in the ensemble module).
struct PopulationProfile {
    std::vector<int> J;
    std::vector<double> p;
    Parity parity = Parity::even;
    int pulse_index = 0;

    double total() const {
        double s = 0.0;
        for (double v : p) s += v;
        return s;
    }
};

inline PopulationProfile populations(const WaveFunction& psi, int pulse_index = 0) {
    PopulationProfile prof;
    prof.parity = psi.window.parity;
    prof.pulse_index = pulse_index;
    prof.J.reserve(psi.window.size());
    prof.p.reserve(psi.window.size());
    for (int k = 0; k < psi.window.size(); ++k) {
        prof.J.push_back(psi.window.j_of(k));
        prof.p.push_back(std::norm(psi.c[k]));
    }
    if (prof.total() > 1.0 + 1e-10)
        throw NumericError("populations: profile exceeds unit norm");
    return prof;
}

inline double rotational_energy(const WaveFunction& psi, const Eigen::VectorXd& levels) {
    if (levels.size() != psi.c.size())
        throw DomainError("rotational_energy: levels/state size mismatch");
    double e = 0.0;
    for (int k = 0; k < psi.c.size(); ++k) e += std::norm(psi.c[k]) * levels[k];
    return e;
}

inline double rotational_energy(const PopulationProfile& prof, double d_e = 0.0) {
    int j_top = 0;
    for (int j : prof.J) j_top = std::max(j_top, j);
    const auto E = energy_levels(d_e, j_top);
    double e = 0.0;
    for (std::size_t i = 0; i < prof.J.size(); ++i)
        e += prof.p[i] * E[static_cast<std::size_t>(prof.J[i])];
    return e;
}

// Overlap with the initial state at every strobe point.  Windows may have
// grown during the train; the initial window is always a prefix of the later
// ones because growth only appends sites at the top.
inline std::vector<double> survival_probability(const std::vector<WaveFunction>& traj,
                                                const WaveFunction& psi0) {
    std::vector<double> s;
    s.reserve(traj.size());
    for (const auto& psi : traj) {
        if (psi.window.M != psi0.window.M || psi.window.parity != psi0.window.parity ||
            psi.window.j_min != psi0.window.j_min)
            throw DomainError("survival_probability: incompatible windows");
        const int n0 = std::min(psi0.c.size(), psi.c.size());
        const dcmplx ov = psi0.c.head(n0).dot(psi.c.head(n0));
        s.push_back(std::clamp(std::norm(ov), 0.0, 1.0));
    }
    return s;
}

inline double alignment_factor(const WaveFunction& psi, const AngularMatrix& cos2) {
    if (cos2.window.size() != psi.window.size())
        throw DomainError("alignment_factor: matrix/state window mismatch");
    const int n = psi.window.size();
    double a = 0.0;
    for (int k = 0; k < n; ++k) a += cos2.diag(k) * std::norm(psi.c[k]);
    for (int k = 0; k + 1 < n; ++k)
        a += 2.0 * cos2.off(k) * std::real(std::conj(psi.c[k]) * psi.c[k + 1]);
    return a;
}

inline double alignment_factor(const WaveFunction& psi) {
    return alignment_factor(psi, build_cos2_matrix(psi.window));
}

// Per-cycle time-averaged alignment.  Between strobe points the evolution is
// free, so intra-cycle states are reconstructed analytically: the first half
// of cycle n forward from strobe n, the second half backward from strobe n+1.
// Exact for delta kicks; for finite pulses only the few samples inside the
// pulse window are approximate.  Entry n covers cycle n (n = 0..N-1).
inline std::vector<double> alignment_series(const std::vector<WaveFunction>& traj,
                                            double tau, double d_e = 0.0,
                                            int samples = 64) {
    if (traj.size() < 2)
        throw DomainError("alignment_series: need at least 1 cycle");
    if (samples < 1) throw DomainError("alignment_series: need samples >= 1");

    struct WindowGear {
        AngularMatrix cos2;
        Eigen::VectorXd E;
    };
    std::map<int, WindowGear> gear; // keyed by window size
    auto gear_for = [&](const BasisWindow& w) -> const WindowGear& {
        auto it = gear.find(w.size());
        if (it == gear.end())
            it = gear.emplace(w.size(),
                              WindowGear{build_cos2_matrix(w), window_levels(w, d_e)}).first;
        return it->second;
    };

    const std::size_t ncycles = traj.size() - 1;
    std::vector<double> out(ncycles, 0.0);
    WaveFunction scratch = traj[0];
    for (std::size_t n = 0; n < ncycles; ++n) {
        double acc = 0.0;
        for (int i = 0; i < samples; ++i) {
            const double t = (i + 0.5) / samples * tau;
            const WaveFunction& base = (t < 0.5 * tau) ? traj[n] : traj[n + 1];
            const double dt = (t < 0.5 * tau) ? t : t - tau;
            const WindowGear& g = gear_for(base.window);
            scratch.window = base.window;
            scratch.c = free_phases(g.E, dt).asDiagonal() * base.c;
            acc += alignment_factor(scratch, g.cos2);
        }
        out[n] = acc / samples;
    }
    return out;
}

// Time-averaged alignment over the last half of the train.
inline double population_alignment(const std::vector<WaveFunction>& traj, double tau,
                                   double d_e = 0.0, int samples = 64) {
    if (traj.size() < 3)
        throw DomainError("population_alignment: need at least 2 cycles");
    const std::vector<double> a = alignment_series(traj, tau, d_e, samples);
    const std::size_t first = a.size() / 2;
    double acc = 0.0;
    for (std::size_t n = first; n < a.size(); ++n) acc += a[n];
    return acc / static_cast<double>(a.size() - first);
}

// Exponential tail fit of a population profile: window runs from the first
// level past the initial-state peak (opts.peak_J, or the profile argmax when
// unset) down to the fit floor, on one parity class.  Populations fall as
// exp(-2J/xi), so xi = -2/slope.
inline LocalisationFit fit_localisation_length(const PopulationProfile& prof,
                                               const FitOptions& opts = {}) {
    if (prof.J.size() != prof.p.size())
        throw DomainError("fit_localisation_length: malformed profile");
    std::size_t peak = 0;
    if (opts.peak_J >= 0) {
        while (peak + 1 < prof.J.size() && prof.J[peak] < opts.peak_J) ++peak;
    } else {
        for (std::size_t i = 1; i < prof.p.size(); ++i)
            if (prof.p[i] > prof.p[peak]) peak = i;
    }
    std::vector<double> J, p;
    for (std::size_t i = peak + 1; i < prof.p.size(); ++i) {
        if (!(prof.p[i] >= opts.floor)) break;
        J.push_back(static_cast<double>(prof.J[i]));
        p.push_back(prof.p[i]);
    }
    return fit_exponential_flank(J, p, opts);
}

} // namespace rotorkick
