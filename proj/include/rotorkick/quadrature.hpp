#pragma once

#include <cmath>
#include <vector>

#include "rotorkick/common.hpp"

namespace rotorkick {

struct QuadratureRule {
    std::vector<double> x; // nodes in (-1, 1)
    std::vector<double> w;
};

// Gauss-Legendre rule, exact for polynomials up to degree 2n-1.
// Nodes by Newton iteration from the Chebyshev estimate.
inline QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw DomainError("gauss_legendre: n must be positive");
    QuadratureRule q;
    q.x.resize(static_cast<std::size_t>(n));
    q.w.resize(static_cast<std::size_t>(n));
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        q.x[static_cast<std::size_t>(i)] = -x;
        q.x[static_cast<std::size_t>(n - 1 - i)] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        q.w[static_cast<std::size_t>(i)] = w;
        q.w[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    return q;
}

// Normalised associated Legendre functions Theta_{J,M}(x), x = cos theta,
// with int_{-1}^{1} Theta_{J,M} Theta_{J',M} dx = delta_{JJ'}; all J from
// |M| to J_max at one point, by the stable upward recurrence.
inline std::vector<double> normalised_legendre(int J_max, int M, double x) {
    const int aM = std::abs(M);
    if (J_max < aM) throw DomainError("normalised_legendre: J_max must be >= |M|");
    std::vector<double> th(static_cast<std::size_t>(J_max - aM) + 1);
    double pmm = std::sqrt(0.5);
    const double s = std::sqrt((1.0 - x) * (1.0 + x));
    for (int m = 1; m <= aM; ++m)
        pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
    th[0] = pmm;
    if (J_max == aM) return th;
    th[1] = x * std::sqrt(2.0 * aM + 3.0) * pmm;
    for (int J = aM + 2; J <= J_max; ++J) {
        const double Jd = J;
        const double a = std::sqrt((4.0 * Jd * Jd - 1.0) / (Jd * Jd - aM * aM));
        const double b = std::sqrt(((Jd - 1.0) * (Jd - 1.0) - aM * aM) /
                                   (4.0 * (Jd - 1.0) * (Jd - 1.0) - 1.0));
        th[static_cast<std::size_t>(J - aM)] =
            a * (x * th[static_cast<std::size_t>(J - 1 - aM)] -
                 b * th[static_cast<std::size_t>(J - 2 - aM)]);
    }
    return th;
}

} // namespace rotorkick
