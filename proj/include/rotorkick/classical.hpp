#pragma once

#include <boost/numeric/odeint.hpp>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rotorkick/common.hpp"
#include "rotorkick/ensemble.hpp"
#include "rotorkick/parallel.hpp"
#include "rotorkick/rng.hpp"
#include "rotorkick/units.hpp"

namespace rotorkick {

// Spherical-coordinate view of a classical linear rotor.  p_phi is conserved
// by any theta-only potential; theta = 0, pi is a coordinate singularity,
// reachable only along p_phi = 0 trajectories.
struct ClassicalState {
    double theta = 0.5 * pi;
    double p_theta = 0.0;
    double p_phi = 0.0;

    double energy() const {
        const double s = std::sin(theta);
        const double centrifugal = (p_phi == 0.0) ? 0.0 : p_phi * p_phi / (s * s);
        return 0.5 * (p_theta * p_theta + centrifugal);
    }

    void validate() const {
        if (!(theta >= 0.0 && theta <= pi))
            throw DomainError("ClassicalState: theta must lie in [0, pi]");
        if (p_phi != 0.0 && std::sin(theta) == 0.0)
            throw DomainError("ClassicalState: p_phi != 0 at the pole has infinite energy");
    }
};

struct ClassicalOptions {
    double ode_abs_tol = 1e-12;
    double ode_rel_tol = 1e-12;
    double window_sigmas = 6.0; // same pulse window as the quantum propagator
};

namespace detail {

// Regularised representation: unit orientation n and angular momentum L with
// n.L = 0.  Free motion is the exact great circle ndot = L x n, so the poles
// need no special casing.
struct Cart {
    std::array<double, 3> n{0.0, 0.0, 1.0};
    std::array<double, 3> L{0.0, 0.0, 0.0};
};

inline std::array<double, 3> cross(const std::array<double, 3>& a,
                                   const std::array<double, 3>& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline Cart to_cart(const ClassicalState& st) {
    st.validate();
    const double s = std::sin(st.theta), c = std::cos(st.theta);
    Cart x;
    x.n = {s, 0.0, c};
    // ndot = p_theta e_theta + (p_phi / s) e_phi; L = n x ndot
    const double azimuthal = (st.p_phi == 0.0) ? 0.0 : st.p_phi / s;
    x.L = {-c * azimuthal, st.p_theta, st.p_phi};
    return x;
}

inline ClassicalState from_cart(const Cart& x) {
    ClassicalState st;
    const double nz = std::clamp(x.n[2], -1.0, 1.0);
    st.theta = std::acos(nz);
    st.p_phi = x.L[2];
    const double s = std::sqrt(std::max(0.0, 1.0 - nz * nz));
    if (s > 1e-9) {
        const std::array<double, 3> ndot = cross(x.L, x.n);
        st.p_theta = -ndot[2] / s;
    } else {
        // exactly at the pole (p_phi = 0 there): the sign of p_theta is a
        // relabeling of phi; keep the magnitude so the energy is exact
        st.p_theta = std::sqrt(dot(x.L, x.L));
        st.p_phi = 0.0;
    }
    return st;
}

inline void rotate_free(Cart& x, double dt) {
    const double w2 = dot(x.L, x.L);
    if (w2 == 0.0 || dt == 0.0) return;
    const double w = std::sqrt(w2);
    const std::array<double, 3> u = cross(x.L, x.n);
    const double cwt = std::cos(w * dt), swt = std::sin(w * dt) / w;
    for (int i = 0; i < 3; ++i) x.n[i] = x.n[i] * cwt + u[i] * swt;
}

inline void kick_cart(Cart& x, double P) {
    // impulse of V = -P cos^2(theta) delta(t): L += 2 P n_z (n x z)
    const double f = 2.0 * P * x.n[2];
    x.L[0] += f * x.n[1];
    x.L[1] += -f * x.n[0];
}

// re-impose |n| = 1 and n.L = 0 after a numerical pulse
inline void project(Cart& x) {
    const double norm = std::sqrt(dot(x.n, x.n));
    for (double& v : x.n) v /= norm;
    const double along = dot(x.n, x.L);
    for (int i = 0; i < 3; ++i) x.L[i] -= along * x.n[i];
}

inline void integrate_pulse_cart(Cart& x, double P, double sigma, double ta, double tb,
                                 const ClassicalOptions& opts) {
    namespace odeint = boost::numeric::odeint;
    using State = std::array<double, 6>;
    State y{x.n[0], x.n[1], x.n[2], x.L[0], x.L[1], x.L[2]};
    auto rhs = [P, sigma](const State& q, State& dq, double t) {
        const double u = t / sigma;
        const double g = P / (std::sqrt(pi) * sigma) * std::exp(-u * u);
        // ndot = L x n
        dq[0] = q[4] * q[2] - q[5] * q[1];
        dq[1] = q[5] * q[0] - q[3] * q[2];
        dq[2] = q[3] * q[1] - q[4] * q[0];
        // Ldot = 2 g(t) n_z (n x z)
        const double f = 2.0 * g * q[2];
        dq[3] = f * q[1];
        dq[4] = -f * q[0];
        dq[5] = 0.0;
    };
    auto stepper = odeint::make_controlled(opts.ode_abs_tol, opts.ode_rel_tol,
                                           odeint::runge_kutta_fehlberg78<State>());
    odeint::integrate_adaptive(stepper, rhs, y, ta, tb, 0.1 * sigma);
    x.n = {y[0], y[1], y[2]};
    x.L = {y[3], y[4], y[5]};
    project(x);
}

} // namespace detail

// Impulsive limit of the kick: theta is frozen, p_theta jumps by the
// potential gradient.  The sign is pinned by the quantum Ehrenfest test: a
// narrow packet kicked by exp(i P cos^2 theta) gains <p> = -P sin(2 theta).
inline ClassicalState delta_kick_map(const ClassicalState& st, double P) {
    st.validate();
    ClassicalState out = st;
    out.p_theta -= P * std::sin(2.0 * st.theta);
    return out;
}

inline ClassicalState evolve_free(const ClassicalState& st, double dt) {
    detail::Cart x = detail::to_cart(st);
    detail::rotate_free(x, dt);
    return detail::from_cart(x);
}

// One finite pulse of integrated strength P centered at t = 0, integrated
// over [-W sigma, +W sigma] with the same Gaussian envelope the quantum
// propagator uses.  Free evolution outside the window is the caller's job.
inline ClassicalState evolve_pulse(const ClassicalState& st, double P, double sigma,
                                   const ClassicalOptions& opts = {}) {
    if (!(sigma > 0.0)) throw DomainError("evolve_pulse: sigma must be positive");
    detail::Cart x = detail::to_cart(st);
    const double W = opts.window_sigmas * sigma;
    detail::integrate_pulse_cart(x, P, sigma, -W, W, opts);
    return detail::from_cart(x);
}

// Strobe states after each of N cycles with mid-cycle pulses, the classical
// mirror of propagate_train.  sigma = 0 runs the exact map chain.
inline std::vector<ClassicalState> classical_train(const ClassicalState& st0, double tau,
                                                   double sigma,
                                                   const std::vector<double>& per_pulse_P,
                                                   const ClassicalOptions& opts = {}) {
    if (!(tau > 0.0)) throw DomainError("classical_train: tau must be positive");
    if (!(sigma >= 0.0)) throw DomainError("classical_train: sigma must be non-negative");
    detail::Cart x = detail::to_cart(st0);
    std::vector<ClassicalState> out;
    out.reserve(per_pulse_P.size() + 1);
    out.push_back(st0);
    for (double P : per_pulse_P) {
        if (sigma == 0.0) {
            detail::rotate_free(x, 0.5 * tau);
            detail::kick_cart(x, P);
            detail::rotate_free(x, 0.5 * tau);
        } else {
            const double tc = 0.5 * tau;
            const double ta = std::max(0.0, tc - opts.window_sigmas * sigma);
            const double tb = std::min(tau, tc + opts.window_sigmas * sigma);
            detail::rotate_free(x, ta);
            detail::integrate_pulse_cart(x, P, sigma, ta - tc, tb - tc, opts);
            detail::rotate_free(x, tau - tb);
        }
        out.push_back(detail::from_cart(x));
    }
    return out;
}

// Monte Carlo mean kinetic energy after each pulse.  T = 0 analog: zero
// momenta, orientations isotropic (cos theta uniform); thermal: the two
// tangent components of L drawn as N(0, J_T), matching the classical
// Boltzmann weight exp(-E / J_T^2).
inline SeriesStat classical_ensemble_energy(int n_samples, const TrainSpec& spec,
                                            double J_T = 0.0,
                                            const ClassicalOptions& opts = {},
                                            int threads = 0) {
    spec.validate();
    if (n_samples < 1000)
        throw DomainError("classical_ensemble_energy: need at least 1000 samples");
    if (!(J_T >= 0.0))
        throw DomainError("classical_ensemble_energy: J_T must be non-negative");

    const NoiseModel noise{spec.P, spec.sigma_P, std::max(spec.realisations, 1), spec.seed,
                           false};
    const std::size_t L = static_cast<std::size_t>(spec.N) + 1;
    std::vector<std::vector<double>> E(static_cast<std::size_t>(n_samples));
    parallel_for(n_samples, worker_count(threads), [&](int i) {
        // stream 1: initial conditions; draw_train uses stream 0 of (seed, i)
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i), 1));
        detail::Cart x;
        const double c = 1.0 - 2.0 * rng.uniform();
        const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
        const double phi = 2.0 * pi * rng.uniform();
        x.n = {s * std::cos(phi), s * std::sin(phi), c};
        if (J_T > 0.0) {
            // orthonormal tangent frame at n
            std::array<double, 3> e1 =
                (std::abs(x.n[2]) < 0.9) ? detail::cross(x.n, {0.0, 0.0, 1.0})
                                         : detail::cross(x.n, {1.0, 0.0, 0.0});
            const double n1 = std::sqrt(detail::dot(e1, e1));
            for (double& v : e1) v /= n1;
            const std::array<double, 3> e2 = detail::cross(x.n, e1);
            const double a = J_T * rng.normal(), b = J_T * rng.normal();
            for (int k = 0; k < 3; ++k) x.L[k] = a * e1[k] + b * e2[k];
        }
        const std::vector<double> P =
            (spec.sigma_P > 0.0) ? draw_train(noise, spec.N, i) : std::vector<double>(
                                                                      static_cast<std::size_t>(spec.N), spec.P);
        auto& Ei = E[static_cast<std::size_t>(i)];
        Ei.reserve(L);
        Ei.push_back(0.5 * detail::dot(x.L, x.L));
        for (double p : P) {
            if (spec.sigma == 0.0) {
                detail::rotate_free(x, 0.5 * spec.tau);
                detail::kick_cart(x, p);
                detail::rotate_free(x, 0.5 * spec.tau);
            } else {
                const double tc = 0.5 * spec.tau;
                const double ta = std::max(0.0, tc - opts.window_sigmas * spec.sigma);
                const double tb = std::min(spec.tau, tc + opts.window_sigmas * spec.sigma);
                detail::rotate_free(x, ta);
                detail::integrate_pulse_cart(x, p, spec.sigma, ta - tc, tb - tc, opts);
                detail::rotate_free(x, spec.tau - tb);
            }
            Ei.push_back(0.5 * detail::dot(x.L, x.L));
        }
    });

    SeriesStat st;
    st.mean.assign(L, 0.0);
    st.se.assign(L, 0.0);
    for (std::size_t n = 0; n < L; ++n) {
        detail::Kahan mu;
        for (const auto& row : E) mu.add(row[n]);
        st.mean[n] = mu.s / static_cast<double>(n_samples);
        detail::Kahan var;
        for (const auto& row : E) {
            const double d = row[n] - st.mean[n];
            var.add(d * d);
        }
        st.se[n] = std::sqrt(var.s / (static_cast<double>(n_samples) *
                                      static_cast<double>(n_samples - 1)));
    }
    return st;
}

} // namespace rotorkick
