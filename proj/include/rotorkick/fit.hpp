#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "rotorkick/common.hpp"

namespace rotorkick {

struct FitOptions {
    double floor = 1e-10; // populations below this are never fitted
    int min_points = 3;
    int peak_J = -1; // fit starts just past this level; -1 = profile argmax
};

// Weighted least squares of ln p against J; xi = -2/slope because the
// profiles decay as exp(-2J/xi) in amplitude-squared convention.
struct LocalisationFit {
    double xi = 0.0;
    double slope = 0.0;
    double intercept = 0.0; // ln p extrapolated to J = 0
    double rms_log10 = 0.0; // fit residual in decades
    int j_lo = 0;
    int j_hi = 0;
    int points = 0;
    bool usable = false;
};

// Fit a decaying flank: (J_i, p_i) pairs in increasing J, already cut to
// start just past the profile peak.  Stops at the first point below floor.
inline LocalisationFit fit_exponential_flank(const std::vector<double>& J,
                                             const std::vector<double>& p,
                                             const FitOptions& opts = {}) {
    if (J.size() != p.size()) throw DomainError("fit_exponential_flank: size mismatch");
    LocalisationFit out;
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < J.size(); ++i) {
        if (!(p[i] >= opts.floor)) break;
        xs.push_back(J[i]);
        ys.push_back(std::log(p[i]));
    }
    out.points = static_cast<int>(xs.size());
    if (out.points < opts.min_points) return out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += 1.0;
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double det = sw * sxx - sx * sx;
    if (det == 0.0) return out;
    out.slope = (sw * sxy - sx * sy) / det;
    out.intercept = (sxx * sy - sx * sxy) / det;
    out.j_lo = static_cast<int>(xs.front());
    out.j_hi = static_cast<int>(xs.back());
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (out.intercept + out.slope * xs[i]);
        ss += r * r;
    }
    out.rms_log10 = std::sqrt(ss / static_cast<double>(xs.size())) / std::log(10.0);
    if (out.slope < 0.0) {
        out.xi = -2.0 / out.slope;
        out.usable = true;
    }
    return out;
}

struct LinearTrend {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0; // OLS standard error from the residual variance
    double t_stat = 0.0;   // slope / slope_se
};

// Plain least-squares line with the textbook slope uncertainty, for
// detecting growth trends in noisy series.
inline LinearTrend linear_trend(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw DomainError("linear_trend: need at least 3 matched points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("linear_trend: abscissa values are all equal");
    LinearTrend t;
    t.slope = sxy / sxx;
    t.intercept = my - t.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (t.intercept + t.slope * x[i]);
        ssr += r * r;
    }
    t.slope_se = std::sqrt(ssr / (n - 2.0) / sxx);
    t.t_stat = (t.slope_se > 0.0) ? t.slope / t.slope_se
                                  : std::numeric_limits<double>::infinity();
    return t;
}

} // namespace rotorkick
