#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <boost/numeric/odeint.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "rotorkick/basis.hpp"
#include "rotorkick/common.hpp"
#include "rotorkick/units.hpp"

namespace rotorkick {

struct PropagationOptions {
    double ode_abs_tol = 1e-12;
    double ode_rel_tol = 1e-12;
    double unitarity_fix = 1e-12;  // polar-project the propagator above this drift
    double unitarity_fail = 1e-10; // refuse to continue at this drift
    double tail_tol = 1e-12;       // tail population that triggers window growth
    int j_max_limit = 4096;        // growth stops here; beyond is an error
    bool pulse_at_cycle_start = false; // default: pulses in the middle of each cycle
    double window_sigmas = 6.0;    // integrate the pulse over +-6 sigma
};

// E_J at the window sites, in units of 2B.
inline Eigen::VectorXd window_levels(const BasisWindow& w, double d_e) {
    const auto all = energy_levels(d_e, w.j_max);
    Eigen::VectorXd E(w.size());
    for (int k = 0; k < w.size(); ++k) E(k) = all[static_cast<std::size_t>(w.j_of(k))];
    return E;
}

// Truncation policy: room for resonant growth up to ~N|P| plus a buffer.
inline int default_j_max(int M, int N, double P) {
    const int by_growth = static_cast<int>(std::ceil(2.0 * N * std::abs(P))) + 30;
    return std::max(4 * std::abs(M) + 20, by_growth);
}

inline Eigen::VectorXcd free_phases(const Eigen::VectorXd& E, double dt) {
    Eigen::VectorXcd f(E.size());
    for (Eigen::Index k = 0; k < E.size(); ++k) f(k) = std::polar(1.0, -E(k) * dt);
    return f;
}

struct KickOperator {
    BasisWindow window;
    Eigen::MatrixXcd U;
};

struct CyclePropagator {
    BasisWindow window;
    Eigen::MatrixXcd U;
    double tau = 0.0;
    double kick = 0.0;
    double sigma = 0.0;
};

inline double unitarity_drift(const Eigen::MatrixXcd& U) {
    const Eigen::MatrixXcd G = U.adjoint() * U;
    return (G - Eigen::MatrixXcd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

// Nearest unitary matrix in Frobenius norm.
inline Eigen::MatrixXcd polar_project(const Eigen::MatrixXcd& U) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(U, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

// Shared eigendecomposition of the cos^2 coupling; exp(iP cos^2) for any P
// comes out of one factorisation.
class KickFactory {
public:
    explicit KickFactory(const BasisWindow& w) : A_(build_cos2_matrix(w)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A_.dense());
        if (es.info() != Eigen::Success)
            throw NumericError("KickFactory: symmetric eigensolver failed");
        Q_ = es.eigenvectors();
        lam_ = es.eigenvalues();
    }

    const BasisWindow& window() const { return A_.window; }
    const AngularMatrix& coupling() const { return A_; }

    Eigen::MatrixXcd matrix(double P) const {
        const int n = A_.window.size();
        if (P == 0.0) return Eigen::MatrixXcd::Identity(n, n);
        Eigen::VectorXcd ph(n);
        for (int k = 0; k < n; ++k) ph(k) = std::polar(1.0, P * lam_(k));
        return (Q_ * ph.asDiagonal() * Q_.transpose()).eval();
    }

    Eigen::VectorXcd apply(double P, const Eigen::VectorXcd& psi) const {
        if (P == 0.0) return psi;
        Eigen::VectorXcd y = Q_.transpose() * psi;
        for (Eigen::Index k = 0; k < y.size(); ++k) y(k) *= std::polar(1.0, P * lam_(k));
        return Q_ * y;
    }

private:
    AngularMatrix A_;
    Eigen::MatrixXd Q_;
    Eigen::VectorXd lam_;
};

inline KickOperator delta_kick(const BasisWindow& w, double P) {
    return KickOperator{w, KickFactory(w).matrix(P)};
}

namespace detail {

// Interaction-picture coefficient equations across one Gaussian pulse:
//   dC_k/dt = i g(t) [d_k C_k + b_{k-1} e^{+i w_{k-1} t} C_{k-1}
//                              + b_k e^{-i w_k t} C_{k+1}]
// with w_k = E_{k+1} - E_k and g the pulse envelope.  C has one column per
// propagated state; t is measured from the cycle start.
class PulseRhs {
public:
    PulseRhs(const AngularMatrix& A, const Eigen::VectorXd& E, double P, double sigma,
             double tc, int cols)
        : d_(A.diag), b_(A.off), cols_(cols), P_(P), sigma_(sigma), tc_(tc) {
        const Eigen::Index n = d_.size();
        w_.resize(n - 1);
        for (Eigen::Index k = 0; k + 1 < n; ++k) w_(k) = E(k + 1) - E(k);
        ph_.resize(n - 1);
    }

    void operator()(const std::vector<double>& y, std::vector<double>& dydt, double t) const {
        const Eigen::Index n = d_.size();
        const double u = (t - tc_) / sigma_;
        const double g = P_ / (std::sqrt(pi) * sigma_) * std::exp(-u * u);
        const auto* C = reinterpret_cast<const dcmplx*>(y.data());
        auto* dC = reinterpret_cast<dcmplx*>(dydt.data());
        for (Eigen::Index k = 0; k + 1 < n; ++k) ph_[static_cast<std::size_t>(k)] = std::polar(1.0, w_(k) * t);
        const dcmplx ig(0.0, g);
        for (int j = 0; j < cols_; ++j) {
            const dcmplx* c = C + static_cast<std::ptrdiff_t>(j) * n;
            dcmplx* dc = dC + static_cast<std::ptrdiff_t>(j) * n;
            for (Eigen::Index k = 0; k < n; ++k) {
                dcmplx acc = d_(k) * c[k];
                if (k > 0) acc += b_(k - 1) * ph_[static_cast<std::size_t>(k - 1)] * c[k - 1];
                if (k + 1 < n) acc += b_(k) * std::conj(ph_[static_cast<std::size_t>(k)]) * c[k + 1];
                dc[k] = ig * acc;
            }
        }
    }

private:
    Eigen::VectorXd d_, b_;
    Eigen::VectorXd w_;
    mutable std::vector<dcmplx> ph_;
    int cols_;
    double P_, sigma_, tc_;
};

// Advance the interaction-picture coefficients C through the pulse window
// [ta, tb] of a Gaussian centred at tc.  C is n x cols, column-major.
inline void integrate_pulse(const AngularMatrix& A, const Eigen::VectorXd& E, double P,
                            double sigma, double tc, double ta, double tb,
                            Eigen::MatrixXcd& C, const PropagationOptions& opts) {
    namespace ode = boost::numeric::odeint;
    if (!(tb > ta)) return;
    const Eigen::Index n = C.rows();
    std::vector<double> y(static_cast<std::size_t>(2 * n * C.cols()));
    Eigen::Map<Eigen::MatrixXcd>(reinterpret_cast<dcmplx*>(y.data()), n, C.cols()) = C;
    PulseRhs rhs(A, E, P, sigma, tc, static_cast<int>(C.cols()));
    auto stepper = ode::make_controlled(opts.ode_abs_tol, opts.ode_rel_tol,
                                        ode::runge_kutta_fehlberg78<std::vector<double>>());
    ode::integrate_adaptive(stepper, rhs, y, ta, tb, (tb - ta) / 64.0);
    C = Eigen::Map<Eigen::MatrixXcd>(reinterpret_cast<dcmplx*>(y.data()), n, C.cols());
}

// Pulse window clipped to the cycle; at least +-3 sigma survives because
// sigma < tau/6 is enforced upstream.
struct PulseWindow {
    double ta, tb, tc;
};

inline PulseWindow pulse_window(double tau, double sigma, double sigmas) {
    const double tc = 0.5 * tau;
    return {std::max(0.0, tc - sigmas * sigma), std::min(tau, tc + sigmas * sigma), tc};
}

} // namespace detail

// One train period with the pulse in the middle of the cycle.  The
// cycle-start convention is the exact half-period free-phase similarity
// F(tau/2) U_mid F(tau/2)^dagger, so it is applied as a basis change here and
// in propagate_train rather than re-integrated.
inline CyclePropagator one_cycle(const BasisWindow& w, double tau, double P, double sigma,
                                 const Eigen::VectorXd& E,
                                 const PropagationOptions& opts = {}) {
    if (!(tau > 0.0)) throw DomainError("one_cycle: tau must be positive");
    if (sigma < 0.0 || (sigma > 0.0 && !(sigma < tau / 6.0)))
        throw DomainError("one_cycle: need sigma = 0 or sigma < tau/6");
    if (E.size() != w.size()) throw DomainError("one_cycle: levels/window size mismatch");

    const int n = w.size();
    Eigen::MatrixXcd U;
    if (sigma == 0.0) {
        const Eigen::VectorXcd fh = free_phases(E, tau / 2.0);
        U = KickFactory(w).matrix(P);
        U = fh.asDiagonal() * U * fh.asDiagonal();
    } else {
        const AngularMatrix A = build_cos2_matrix(w);
        Eigen::MatrixXcd C = Eigen::MatrixXcd::Identity(n, n);
        const auto win = detail::pulse_window(tau, sigma, opts.window_sigmas);
        detail::integrate_pulse(A, E, P, sigma, win.tc, win.ta, win.tb, C, opts);
        U = free_phases(E, tau).asDiagonal() * C;
    }

    char driftbuf[32];
    double drift = unitarity_drift(U);
    std::snprintf(driftbuf, sizeof driftbuf, "%.3e", drift);
    if (drift >= opts.unitarity_fail)
        throw NumericError("one_cycle: unitarity drift " + std::string(driftbuf) +
                           " exceeds tolerance; tighten the ODE tolerance");
    if (drift > opts.unitarity_fix) {
        U = polar_project(U);
        drift = unitarity_drift(U);
        if (drift >= opts.unitarity_fail)
            throw NumericError("one_cycle: unitarity not restored by polar projection");
    }

    if (opts.pulse_at_cycle_start) {
        const Eigen::VectorXcd fh = free_phases(E, tau / 2.0);
        U = fh.asDiagonal() * U * fh.conjugate().asDiagonal();
    }
    return CyclePropagator{w, std::move(U), tau, P, sigma};
}

namespace detail {

// Mutable per-window machinery for a running train.
struct TrainEngine {
    BasisWindow w;
    Eigen::VectorXd E;
    AngularMatrix A;
    std::unique_ptr<KickFactory> kick; // delta trains only
    Eigen::VectorXcd fh;               // half-cycle free phases

    TrainEngine(const BasisWindow& win, double d_e, double tau, bool want_kick)
        : w(win), E(window_levels(win, d_e)), A(build_cos2_matrix(win)),
          kick(want_kick ? std::make_unique<KickFactory>(win) : nullptr),
          fh(free_phases(E, tau / 2.0)) {}
};

} // namespace detail

// Run an N-pulse train from psi0 and return all N+1 strobe states.  The
// window grows (and the cycle replays) whenever population reaches the upper
// decile of sites; per-pulse strengths come from the caller so noise
// realisations and plain trains share one path.
inline std::vector<WaveFunction> propagate_train(const WaveFunction& psi0, double tau,
                                                 double sigma,
                                                 const std::vector<double>& per_pulse_P,
                                                 double d_e = 0.0,
                                                 const PropagationOptions& opts = {}) {
    if (!(tau > 0.0)) throw DomainError("propagate_train: tau must be positive");
    if (sigma < 0.0 || (sigma > 0.0 && !(sigma < tau / 6.0)))
        throw DomainError("propagate_train: need sigma = 0 or sigma < tau/6");
    const int N = static_cast<int>(per_pulse_P.size());

    const bool delta = (sigma == 0.0);
    detail::TrainEngine eng(psi0.window, d_e, tau, delta);

    // Cycle-start convention: conjugate by half-period phases once outside
    // the loop; the per-cycle factors telescope.
    const bool start = opts.pulse_at_cycle_start;

    Eigen::VectorXcd c = psi0.c;
    if (start) c = eng.fh.conjugate().asDiagonal() * c;

    const bool uniform = !delta && N > 1 &&
        std::all_of(per_pulse_P.begin(), per_pulse_P.end(),
                    [&](double p) { return p == per_pulse_P.front(); });
    Eigen::MatrixXcd U_shared;
    int shared_for = -1; // window size U_shared was built for

    std::vector<WaveFunction> traj;
    traj.reserve(static_cast<std::size_t>(N) + 1);
    auto snapshot = [&](int n, const Eigen::VectorXcd& v) {
        Eigen::VectorXcd out = start ? (eng.fh.asDiagonal() * v).eval() : v;
        traj.push_back(WaveFunction{eng.w, std::move(out), n * tau});
    };
    snapshot(0, c);

    PropagationOptions cycle_opts = opts;
    cycle_opts.pulse_at_cycle_start = false; // handled by the outer conjugation

    for (int n = 0; n < N; ++n) {
        for (;;) {
            Eigen::VectorXcd next;
            if (delta) {
                next = eng.fh.asDiagonal() * eng.kick->apply(per_pulse_P[static_cast<std::size_t>(n)],
                                                             eng.fh.asDiagonal() * c);
            } else if (uniform) {
                if (shared_for != eng.w.size()) {
                    U_shared = one_cycle(eng.w, tau, per_pulse_P.front(), sigma, eng.E, cycle_opts).U;
                    shared_for = eng.w.size();
                }
                next = U_shared * c;
            } else {
                Eigen::MatrixXcd C = c;
                const auto win = detail::pulse_window(tau, sigma, opts.window_sigmas);
                detail::integrate_pulse(eng.A, eng.E, per_pulse_P[static_cast<std::size_t>(n)],
                                        sigma, win.tc, win.ta, win.tb, C, opts);
                next = free_phases(eng.E, tau).asDiagonal() * Eigen::VectorXcd(C.col(0));
                // the exact pulse map is norm-preserving; divide out the
                // integrator's spurious factor so drift cannot accumulate
                // across a long train (the matrix paths are exactly unitary)
                const double before = c.norm();
                if (before > 0.0) {
                    const double drift = std::abs(next.norm() / before - 1.0);
                    if (drift > opts.unitarity_fail) {
                        char buf[48];
                        std::snprintf(buf, sizeof buf, "%.2e", drift);
                        throw NumericError(std::string("propagate_train: pulse norm drift ") +
                                           buf);
                    }
                    next *= before / next.norm();
                }
            }

            const int ntail = std::max(1, (eng.w.size() + 9) / 10);
            if (next.tail(ntail).squaredNorm() <= opts.tail_tol) {
                c = std::move(next);
                break;
            }
            const int new_j_max = eng.w.j_min + 2 * (2 * eng.w.size() - 1);
            if (new_j_max > opts.j_max_limit)
                throw NumericError("propagate_train: window growth exceeded J="
                                   + std::to_string(opts.j_max_limit));
            eng = detail::TrainEngine(make_window(eng.w.M, eng.w.parity, new_j_max),
                                      d_e, tau, delta);
            Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(eng.w.size());
            padded.head(c.size()) = c;
            c = std::move(padded);
        }
        snapshot(n + 1, c);
    }

    const double norm_err = std::abs(traj.back().c.norm() - psi0.c.norm());
    if (psi0.c.norm() > 0.5 && norm_err > 1e-10) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.2e", norm_err);
        throw NumericError(std::string("propagate_train: norm drift ") + buf);
    }
    return traj;
}

// Direct integration of the whole train as one initial-value problem in the
// interaction picture (phases referenced to t = 0).  Cross-checks the
// cycle-matrix route; finite pulses only.
inline std::vector<WaveFunction> propagate_train_ode(const WaveFunction& psi0, double tau,
                                                     double sigma,
                                                     const std::vector<double>& per_pulse_P,
                                                     double d_e = 0.0,
                                                     const PropagationOptions& opts = {}) {
    if (!(sigma > 0.0))
        throw DomainError("propagate_train_ode: finite sigma required");
    if (!(sigma < tau / 6.0)) throw DomainError("propagate_train_ode: need sigma < tau/6");
    if (opts.pulse_at_cycle_start)
        throw DomainError("propagate_train_ode: mid-cycle convention only");
    const int N = static_cast<int>(per_pulse_P.size());

    detail::TrainEngine eng(psi0.window, d_e, tau, false);
    Eigen::VectorXcd c = psi0.c; // interaction-picture coefficients at t = n tau

    std::vector<WaveFunction> traj;
    traj.reserve(static_cast<std::size_t>(N) + 1);
    traj.push_back(psi0);

    for (int n = 0; n < N; ++n) {
        for (;;) {
            const double t0 = n * tau;
            const auto win = detail::pulse_window(tau, sigma, opts.window_sigmas);
            Eigen::MatrixXcd C = c;
            detail::integrate_pulse(eng.A, eng.E, per_pulse_P[static_cast<std::size_t>(n)],
                                    sigma, t0 + win.tc, t0 + win.ta, t0 + win.tb, C, opts);
            Eigen::VectorXcd next = C.col(0);

            const int ntail = std::max(1, (eng.w.size() + 9) / 10);
            if (next.tail(ntail).squaredNorm() <= opts.tail_tol) {
                c = std::move(next);
                break;
            }
            const int new_j_max = eng.w.j_min + 2 * (2 * eng.w.size() - 1);
            if (new_j_max > opts.j_max_limit)
                throw NumericError("propagate_train_ode: window growth exceeded J="
                                   + std::to_string(opts.j_max_limit));
            eng = detail::TrainEngine(make_window(eng.w.M, eng.w.parity, new_j_max),
                                      d_e, tau, false);
            Eigen::VectorXcd padded = Eigen::VectorXcd::Zero(eng.w.size());
            padded.head(c.size()) = c;
            c = std::move(padded);
        }
        const double t_now = (n + 1) * tau;
        Eigen::VectorXcd out = free_phases(eng.E, t_now).asDiagonal() * c;
        traj.push_back(WaveFunction{eng.w, std::move(out), t_now});
    }
    return traj;
}

} // namespace rotorkick
