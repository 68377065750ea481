#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "rotorkick/common.hpp"

namespace rotorkick {

enum class Parity { even, odd };

inline Parity parity_of(int J) { return (J % 2 == 0) ? Parity::even : Parity::odd; }

inline const char* to_string(Parity p) { return p == Parity::even ? "even" : "odd"; }

// One conserved-sector basis |J,M> with fixed M and fixed parity of J.
// Sites are J = j_min, j_min+2, ..., j_max (cos^2 theta couples only
// same-parity J, and M never changes).
struct BasisWindow {
    int M = 0;
    Parity parity = Parity::even;
    int j_min = 0;
    int j_max = 0;

    int size() const { return (j_max - j_min) / 2 + 1; }
    int j_of(int k) const { return j_min + 2 * k; }

    // Site index of J, or -1 if J is outside the window or off-parity.
    int index_of(int J) const {
        if (J < j_min || J > j_max || (J - j_min) % 2 != 0) return -1;
        return (J - j_min) / 2;
    }

    bool operator==(const BasisWindow&) const = default;
};

inline BasisWindow make_window(int M, Parity parity, int j_max) {
    const int aM = std::abs(M);
    int j_min = aM;
    if (parity_of(j_min) != parity) ++j_min;
    // Snap j_max down onto the parity grid.
    int j_top = j_min + 2 * ((j_max - j_min) / 2);
    if (j_max < j_min || j_top - j_min < 4)
        throw DomainError("make_window: window must span at least 3 sites (j_max=" +
                          std::to_string(j_max) + ", j_min=" + std::to_string(j_min) + ")");
    return BasisWindow{M, parity, j_min, j_top};
}

// <J',M|cos^2 theta|J,M>.  Nonzero only for J' - J in {0, +-2}; built from
// the cos theta ladder a_J = <J+1,M|cos theta|J,M>.
inline double cos2_element(int J, int Jp, int M) {
    const int aM = std::abs(M);
    if (J < aM || Jp < aM)
        throw DomainError("cos2_element: need J >= |M| (J=" + std::to_string(J) +
                          ", J'=" + std::to_string(Jp) + ", M=" + std::to_string(M) + ")");
    if (Jp < J) std::swap(J, Jp);
    const auto a2 = [M](int j) {
        // <j+1,M|cos theta|j,M>^2; zero automatically when j+1 dips to |M|.
        const double num = (j + 1.0) * (j + 1.0) - static_cast<double>(M) * M;
        return num / ((2.0 * j + 1.0) * (2.0 * j + 3.0));
    };
    if (Jp == J) return a2(J - 1) + a2(J);
    if (Jp == J + 2) return std::sqrt(a2(J) * a2(J + 1));
    return 0.0;
}

// Tridiagonal cos^2 theta in a parity window: diag[k] = <J_k|..|J_k>,
// off[k] = <J_k+2|..|J_k>.
struct AngularMatrix {
    BasisWindow window;
    Eigen::VectorXd diag;
    Eigen::VectorXd off;

    Eigen::MatrixXd dense() const {
        const int n = window.size();
        Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
        for (int k = 0; k < n; ++k) {
            A(k, k) = diag(k);
            if (k + 1 < n) {
                A(k, k + 1) = off(k);
                A(k + 1, k) = off(k);
            }
        }
        return A;
    }
};

inline AngularMatrix build_cos2_matrix(const BasisWindow& w) {
    const int n = w.size();
    AngularMatrix A{w, Eigen::VectorXd(n), Eigen::VectorXd(n - 1)};
    for (int k = 0; k < n; ++k) {
        const int J = w.j_of(k);
        A.diag(k) = cos2_element(J, J, w.M);
        if (k + 1 < n) A.off(k) = cos2_element(J, J + 2, w.M);
    }
    return A;
}

// State in one parity window; c(k) multiplies |J_k, M>.
struct WaveFunction {
    BasisWindow window;
    Eigen::VectorXcd c;
    double time = 0.0;

    double norm() const { return c.norm(); }

    // Population in the top 10% of sites; the truncation guard.
    double tail_fraction() const {
        const int n = window.size();
        const int tail = std::max(1, (n + 9) / 10);
        return c.tail(tail).squaredNorm();
    }
};

inline WaveFunction basis_state(const BasisWindow& w, int J0) {
    const int k = w.index_of(J0);
    if (k < 0)
        throw DomainError("basis_state: J0=" + std::to_string(J0) + " not in window");
    WaveFunction psi{w, Eigen::VectorXcd::Zero(w.size()), 0.0};
    psi.c(k) = 1.0;
    return psi;
}

// Embed psi in a window grown past j_max; amplitudes are zero-padded,
// so every observable is unchanged.
inline WaveFunction grow_window(const WaveFunction& psi, int new_j_max) {
    if (new_j_max <= psi.window.j_max) return psi;
    BasisWindow w = psi.window;
    w.j_max = w.j_min + 2 * ((new_j_max - w.j_min) / 2);
    WaveFunction out{w, Eigen::VectorXcd::Zero(w.size()), psi.time};
    out.c.head(psi.window.size()) = psi.c;
    return out;
}

} // namespace rotorkick
