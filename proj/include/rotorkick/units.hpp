#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rotorkick/common.hpp"
#include "rotorkick/physics.hpp"

namespace rotorkick {

// Spectroscopic description of a linear rotor plus its laser coupling.
// Rotational constants are stored in joules; dalpha is the polarisability
// anisotropy as a volume (SI, m^3); g_even/g_odd are nuclear spin weights.
struct MoleculeSpec {
    std::string name;
    double Be = 0.0;       // J
    double alpha_e = 0.0;  // J, signed: B_v = B_e + alpha_e (v + 1/2)
    double De = 0.0;       // J
    int v = 0;
    double dalpha = 0.0;   // m^3
    double g_even = 1.0;
    double g_odd = 1.0;

    double Bv() const {
        double b = Be + alpha_e * (v + 0.5);
        if (b <= 0.0)
            throw DomainError("MoleculeSpec: B_v must be positive (got " +
                              std::to_string(b) + " J)");
        return b;
    }

    // Centrifugal constant in the 2B energy unit.
    double d_e() const { return De / (2.0 * Bv()); }

    double energy_unit_J() const { return 2.0 * Bv(); }
    double time_unit_s() const { return si::hbar / (2.0 * Bv()); }
    double t_rev_s() const { return pi * si::hbar / Bv(); }

    void validate() const {
        if (Be <= 0.0) throw DomainError("MoleculeSpec: B_e must be positive");
        if (De < 0.0) throw DomainError("MoleculeSpec: D_e must be non-negative");
        if (v < 0) throw DomainError("MoleculeSpec: v must be non-negative");
        if (dalpha <= 0.0) throw DomainError("MoleculeSpec: dalpha must be positive");
        if (g_even < 0.0 || g_odd < 0.0 || (g_even == 0.0 && g_odd == 0.0))
            throw DomainError("MoleculeSpec: spin weights must be non-negative, not both zero");
        (void)Bv();
    }
};

// Pulse-train parameters in dimensionless units (energies in 2B, times in
// hbar/2B, so t_rev = 2 pi).
struct TrainSpec {
    double P = 0.0;        // kick strength
    double tau = 2.0 * pi; // train period
    double sigma = 0.0;    // Gaussian pulse width; 0 means delta pulses
    int N = 1;             // pulse count
    double sigma_P = 0.0;  // std dev of per-pulse strength noise
    std::uint64_t seed = 0;
    int realisations = 1;

    void validate() const {
        if (!(P >= 0.0)) throw DomainError("TrainSpec: P must be non-negative");
        if (!(tau > 0.0)) throw DomainError("TrainSpec: tau must be positive");
        if (!(sigma >= 0.0)) throw DomainError("TrainSpec: sigma must be non-negative");
        if (N < 1) throw DomainError("TrainSpec: N must be at least 1");
        if (!(sigma_P >= 0.0)) throw DomainError("TrainSpec: sigma_P must be non-negative");
        if (realisations < 1) throw DomainError("TrainSpec: realisations must be at least 1");
    }
};

// Thermal initial ensemble: J_T = sqrt(k_B T / 2B) in dimensionless units,
// eps is the tolerated truncation of total Boltzmann weight.
struct ThermalSpec {
    double J_T = 0.0;
    double eps = 1e-3;

    void validate() const {
        if (!(J_T >= 0.0)) throw DomainError("ThermalSpec: J_T must be non-negative");
        if (!(eps > 0.0 && eps < 1.0)) throw DomainError("ThermalSpec: eps must be in (0,1)");
    }
};

// Laser peak intensity (W/m^2) and pulse duration (s) -> dimensionless
// (P, sigma).  The field amplitude comes from I = eps0 c E0^2 / 2 and
// P = (dalpha_SI / 4 hbar) E0^2 sqrt(pi) sigma with dalpha_SI = 4 pi eps0 dalpha.
struct PulseStrength {
    double P;
    double sigma;
};

inline PulseStrength to_dimensionless(const MoleculeSpec& m, double intensity_W_m2,
                                      double sigma_s) {
    if (!(intensity_W_m2 >= 0.0))
        throw DomainError("to_dimensionless: intensity must be non-negative");
    if (!(sigma_s > 0.0))
        throw DomainError("to_dimensionless: pulse duration must be positive");
    const double e0sq = 2.0 * intensity_W_m2 / (si::eps0 * si::c_light);
    const double dalpha_si = 4.0 * pi * si::eps0 * m.dalpha;
    const double P = dalpha_si * e0sq * std::sqrt(pi) * sigma_s / (4.0 * si::hbar);
    return {P, sigma_s / m.time_unit_s()};
}

inline double intensity_for_P(const MoleculeSpec& m, double P, double sigma_s) {
    if (!(P >= 0.0)) throw DomainError("intensity_for_P: P must be non-negative");
    if (!(sigma_s > 0.0)) throw DomainError("intensity_for_P: sigma must be positive");
    const double dalpha_si = 4.0 * pi * si::eps0 * m.dalpha;
    const double e0sq = 4.0 * si::hbar * P / (dalpha_si * std::sqrt(pi) * sigma_s);
    return e0sq * si::eps0 * si::c_light / 2.0;
}

// E_J = J(J+1)/2 - d_e J^2 (J+1)^2 in units of 2B.  Valid only while the
// centrifugal term stays a perturbation: the ladder must remain strictly
// increasing and positive over the whole window, checked at construction.
inline std::vector<double> energy_levels(double d_e, int J_max) {
    if (J_max < 0) throw DomainError("energy_levels: J_max must be non-negative");
    if (d_e < 0.0) throw DomainError("energy_levels: d_e must be non-negative");
    std::vector<double> E(static_cast<std::size_t>(J_max) + 1);
    for (int J = 0; J <= J_max; ++J) {
        const double x = static_cast<double>(J) * (J + 1.0);
        E[static_cast<std::size_t>(J)] = 0.5 * x - d_e * x * x;
        if (J > 0 && !(E[static_cast<std::size_t>(J)] > E[static_cast<std::size_t>(J) - 1]))
            throw DomainError("energy_levels: centrifugal term bends the ladder at J=" +
                              std::to_string(J) + "; shrink the window or d_e");
    }
    return E;
}

inline double thermal_to_JT(const MoleculeSpec& m, double T_K) {
    if (T_K < 0.0) throw DomainError("thermal_to_JT: temperature must be non-negative");
    return std::sqrt(si::k_B * T_K / m.energy_unit_J());
}

inline double JT_to_temperature(const MoleculeSpec& m, double J_T) {
    if (J_T < 0.0) throw DomainError("JT_to_temperature: J_T must be non-negative");
    return J_T * J_T * m.energy_unit_J() / si::k_B;
}

} // namespace rotorkick
