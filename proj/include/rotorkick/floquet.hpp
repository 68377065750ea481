#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <vector>

#include "rotorkick/basis.hpp"
#include "rotorkick/common.hpp"
#include "rotorkick/fit.hpp"
#include "rotorkick/propagator.hpp"
#include "rotorkick/quadrature.hpp"

namespace rotorkick {

// Eigen-decomposition of a one-cycle propagator.  Quasi-energies live on the
// branch [0, 2pi/tau); states are the columns of `states`, sorted by omega.
struct FloquetSet {
    BasisWindow window;
    double tau = 0.0;
    Eigen::VectorXcd eigenvalues;
    Eigen::VectorXd omega;
    Eigen::MatrixXcd states;
    Eigen::VectorXd residuals; // ||U u - lambda u||_2 per state
};

namespace detail {

// Union-find clustering of eigenvalues closer than `gap` in the complex
// plane, followed by a QR re-orthogonalisation of each cluster.  Degenerate
// subspaces come out of the solver with arbitrary overlaps; the QR restores
// an orthonormal basis without leaving the subspace.
inline void reorthogonalise_clusters(const Eigen::VectorXcd& lam,
                                     Eigen::MatrixXcd& vecs, double gap) {
    const int n = static_cast<int>(lam.size());
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::abs(lam[i] - lam[j]) < gap) {
                const int ri = find(i), rj = find(j);
                if (ri != rj) parent[ri] = rj;
            }
    std::vector<std::vector<int>> groups(n);
    for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
    for (const auto& g : groups) {
        if (g.size() < 2) continue;
        Eigen::MatrixXcd block(vecs.rows(), g.size());
        for (std::size_t c = 0; c < g.size(); ++c) block.col(c) = vecs.col(g[c]);
        Eigen::HouseholderQR<Eigen::MatrixXcd> qr(block);
        Eigen::MatrixXcd thin =
            qr.householderQ() * Eigen::MatrixXcd::Identity(vecs.rows(), g.size());
        for (std::size_t c = 0; c < g.size(); ++c) vecs.col(g[c]) = thin.col(c);
    }
}

} // namespace detail

inline FloquetSet diagonalise(const CyclePropagator& cp) {
    const int n = static_cast<int>(cp.U.rows());
    if (n == 0) throw DomainError("diagonalise: empty propagator");
    const double drift = unitarity_drift(cp.U);
    if (drift > 1e-8) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "diagonalise: propagator unitarity drift %.3e exceeds 1e-8", drift);
        throw NumericError(buf);
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(cp.U, true);
    if (es.info() != Eigen::Success)
        throw NumericError("diagonalise: eigen-decomposition failed to converge");

    Eigen::VectorXcd lam = es.eigenvalues();
    Eigen::MatrixXcd vecs = es.eigenvectors();

    for (int i = 0; i < n; ++i) {
        if (std::abs(std::abs(lam[i]) - 1.0) > 1e-8) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "diagonalise: eigenvalue modulus deviates from 1 by %.3e",
                          std::abs(std::abs(lam[i]) - 1.0));
            throw NumericError(buf);
        }
    }

    detail::reorthogonalise_clusters(lam, vecs, 1e-10);

    // Branch: omega = -arg(lambda)/tau wrapped into [0, 2pi/tau).
    const double span = 2.0 * pi / cp.tau;
    Eigen::VectorXd omega(n);
    for (int i = 0; i < n; ++i) {
        double w = -std::arg(lam[i]) / cp.tau;
        if (w < 0.0) w += span;
        if (w >= span) w -= span;
        omega[i] = w;
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return omega[a] < omega[b]; });

    FloquetSet fs;
    fs.window = cp.window;
    fs.tau = cp.tau;
    fs.eigenvalues.resize(n);
    fs.omega.resize(n);
    fs.states.resize(n, n);
    fs.residuals.resize(n);
    for (int i = 0; i < n; ++i) {
        const int k = order[i];
        fs.eigenvalues[i] = lam[k];
        fs.omega[i] = omega[k];
        fs.states.col(i) = vecs.col(k) / vecs.col(k).norm();
        fs.residuals[i] = (cp.U * fs.states.col(i) - lam[k] * fs.states.col(i)).norm();
        if (fs.residuals[i] > 1e-8) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "diagonalise: eigenpair residual %.3e exceeds 1e-8",
                          fs.residuals[i]);
            throw NumericError(buf);
        }
    }
    return fs;
}

// Shape diagnostics of one Floquet state: centroid and participation ratio in
// units of sites, plus an exponential-flank fit of |u_J|^2 when one exists.
struct StateLocalisation {
    double centroid = 0.0;           // mean J
    double participation_ratio = 0.0; // 1 / sum p^2, in sites
    LocalisationFit fit;              // fit.usable marks a resolved length
};

inline std::vector<StateLocalisation> state_localisation(const FloquetSet& fs,
                                                         const FitOptions& opts = {}) {
    const int n = static_cast<int>(fs.states.rows());
    std::vector<StateLocalisation> out;
    out.reserve(fs.states.cols());
    for (int a = 0; a < fs.states.cols(); ++a) {
        std::vector<double> p(n);
        double sp2 = 0.0, cj = 0.0;
        int peak = 0;
        for (int k = 0; k < n; ++k) {
            p[k] = std::norm(fs.states(k, a));
            sp2 += p[k] * p[k];
            cj += p[k] * static_cast<double>(fs.window.j_of(k));
            if (p[k] > p[peak]) peak = k;
        }
        StateLocalisation sl;
        sl.centroid = cj;
        sl.participation_ratio = 1.0 / sp2;

        // Fit whichever flank offers more points above the floor; the
        // abscissa is the J-distance from the peak so both flanks decay.
        auto flank = [&](int dir) {
            std::vector<double> J, q;
            for (int k = peak + dir; k >= 0 && k < n; k += dir) {
                if (!(p[k] >= opts.floor)) break;
                J.push_back(std::abs(static_cast<double>(
                    fs.window.j_of(k) - fs.window.j_of(peak))));
                q.push_back(p[k]);
            }
            return std::make_pair(J, q);
        };
        auto [Jr, qr] = flank(+1);
        auto [Jl, ql] = flank(-1);
        if (Jl.size() > Jr.size())
            sl.fit = fit_exponential_flank(Jl, ql, opts);
        else
            sl.fit = fit_exponential_flank(Jr, qr, opts);
        out.push_back(sl);
    }
    return out;
}

// Tight-binding picture of a delta-kicked cycle.  The cycle operator in its
// kick-first form F(tau) K factorises through the Cayley transform
// K = (1 + iW)(1 - iW)^{-1} with W = tan(P cos^2(theta) / 2), which turns the
// eigenproblem into  T_J u_J + sum_J' W_{J,J'} u_J' = 0  with on-site
// energies T_J = tan(tau (omega - E_J) / 2) and u = (1 - iW)^{-1} chi.
struct TightBindingView {
    Eigen::MatrixXd W;        // kick hopping matrix (sites x sites)
    Eigen::MatrixXd T;        // on-site energies (states x sites)
    Eigen::MatrixXcd u;       // transformed amplitudes (sites x states)
    Eigen::VectorXd residual; // per state: max |T u + W u| over usable sites
    std::vector<std::vector<int>> singular_sites; // per state, site indices
    int interior_sites = 0;   // residual ignores sites at or above this index
};

inline Eigen::MatrixXd kick_hopping_matrix(const BasisWindow& w, double P) {
    if (!(std::abs(P) < pi))
        throw DomainError("kick_hopping_matrix: |P| must be below pi for the Cayley "
                          "mapping; split the kick into sub-critical factors instead");
    const int n = w.size();
    // tan(P x^2 / 2) is analytic on [-1,1] but its pole at x^2 = pi/P closes
    // in as P grows, so the node count ramps up near the critical phase.
    const int nodes = w.j_max + 64 +
                      static_cast<int>(192.0 / std::max(0.35, pi - std::abs(P)));
    QuadratureRule rule = gauss_legendre(nodes);
    Eigen::MatrixXd B(nodes, n); // B(q, k) = Theta_{J_k}^{M}(x_q)
    for (int q = 0; q < nodes; ++q) {
        std::vector<double> th = normalised_legendre(w.j_max, w.M, rule.x[q]);
        for (int k = 0; k < n; ++k) B(q, k) = th[w.j_of(k) - std::abs(w.M)];
    }
    Eigen::VectorXd f(nodes);
    for (int q = 0; q < nodes; ++q)
        f[q] = rule.w[q] * std::tan(0.5 * P * rule.x[q] * rule.x[q]);
    return B.transpose() * f.asDiagonal() * B;
}

inline TightBindingView tight_binding_view(const FloquetSet& fs, double P, double tau,
                                           const Eigen::VectorXd& levels,
                                           bool states_are_cycle_start = false) {
    const int n = fs.window.size();
    if (static_cast<int>(levels.size()) != n)
        throw DomainError("tight_binding_view: levels must match the window");
    if (std::abs(tau - fs.tau) > 1e-12)
        throw DomainError("tight_binding_view: tau disagrees with the Floquet set");

    TightBindingView tb;
    tb.W = kick_hopping_matrix(fs.window, P);

    // The mapping is written for the kick-first cycle F(tau) K.  States of
    // the mid-cycle operator F(tau/2) K F(tau/2) differ by the half-period
    // free phases, so rotate them unless the caller already did.
    Eigen::MatrixXcd chi = fs.states;
    if (!states_are_cycle_start) {
        for (int k = 0; k < n; ++k) {
            const dcmplx ph = std::polar(1.0, -levels[k] * tau / 2.0);
            chi.row(k) *= ph;
        }
    }

    const int ns = static_cast<int>(fs.states.cols());
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(n, n) -
                         dcmplx(0.0, 1.0) * tb.W.cast<dcmplx>();
    tb.u = A.partialPivLu().solve(chi);

    tb.T.resize(ns, n);
    tb.residual.resize(ns);
    tb.singular_sites.assign(ns, {});
    tb.interior_sites = n - (n + 9) / 10; // keep clear of the truncation edge
    for (int a = 0; a < ns; ++a) {
        double worst = 0.0;
        for (int k = 0; k < n; ++k) {
            const double x = 0.5 * tau * (fs.omega[a] - levels[k]);
            tb.T(a, k) = std::tan(x);
            const bool singular =
                std::abs(std::remainder(x - pi / 2.0, pi)) < 1e-6;
            if (singular) tb.singular_sites[a].push_back(k);
            if (singular || k >= tb.interior_sites) continue;
            const dcmplx r = tb.T(a, k) * tb.u(k, a) +
                             (tb.W.row(k).cast<dcmplx>() * tb.u.col(a))(0);
            worst = std::max(worst, std::abs(r));
        }
        tb.residual[a] = worst;
    }
    return tb;
}

} // namespace rotorkick
