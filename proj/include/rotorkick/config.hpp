#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "rotorkick/basis.hpp"
#include "rotorkick/common.hpp"
#include "rotorkick/ensemble.hpp"
#include "rotorkick/physics.hpp"
#include "rotorkick/units.hpp"

namespace rotorkick {

// One configuration value plus where it came from ("pulses.cfg:12",
// "--tau", "preset fig4a"), so diagnostics can point at the source.
struct ConfigEntry {
    std::string value;
    std::string origin;
};

using RawConfig = std::map<std::string, ConfigEntry>;

inline const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        // molecule selection and inline constants
        "molecule", "Be_cm", "alpha_e_cm", "De_cm", "v", "dalpha_A3", "g_even", "g_odd",
        "d_e",
        // pulse train
        "P", "intensity", "tau", "sigma", "sigma_trev", "sigma_fs", "N", "sigma_P",
        "sigma_P_rel", "seed", "realisations", "clip_negative",
        // initial ensemble
        "J_T", "temperature_K", "eps",
        // floquet window
        "M", "parity", "j_max",
        // classical ensemble
        "samples",
        // sweep
        "axis", "values",
        // output and execution
        "observables", "outdir", "format", "threads", "alignment_samples", "headroom",
    };
    return keys;
}

inline void set_key(RawConfig& cfg, const std::string& key, const std::string& value,
                    const std::string& origin) {
    if (known_keys().count(key) == 0)
        throw ConfigError(origin + ": unknown key '" + key + "'");
    cfg[key] = ConfigEntry{value, origin};
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double to_double(const ConfigEntry& e, const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (end == e.value.c_str() || *end != '\0')
        throw ConfigError(e.origin + ": " + key + " expects a number, got '" + e.value + "'");
    return v;
}

inline long long to_int(const ConfigEntry& e, const std::string& key) {
    char* end = nullptr;
    const long long v = std::strtoll(e.value.c_str(), &end, 10);
    if (end == e.value.c_str() || *end != '\0')
        throw ConfigError(e.origin + ": " + key + " expects an integer, got '" + e.value +
                          "'");
    return v;
}

inline bool to_bool(const ConfigEntry& e, const std::string& key) {
    if (e.value == "true" || e.value == "1") return true;
    if (e.value == "false" || e.value == "0") return false;
    throw ConfigError(e.origin + ": " + key + " expects true or false, got '" + e.value +
                      "'");
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t comma = s.find(',', pos);
        const std::string item =
            trim(comma == std::string::npos ? s.substr(pos) : s.substr(pos, comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

inline std::string num_str(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

// Parse `key = value` lines on top of `base`.  `#` starts a comment, blank
// lines are skipped, later assignments win.  Errors carry file:line.
inline RawConfig parse_config_text(const std::string& text, const std::string& filename,
                                   RawConfig base = {}) {
    RawConfig cfg = std::move(base);
    std::size_t pos = 0;
    int line = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string raw =
            (nl == std::string::npos) ? text.substr(pos) : text.substr(pos, nl - pos);
        ++line;
        const std::string at = filename + ":" + std::to_string(line);
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        raw = detail::trim(raw);
        if (!raw.empty()) {
            const std::size_t eq = raw.find('=');
            if (eq == std::string::npos)
                throw ConfigError(at + ": expected 'key = value', got '" + raw + "'");
            const std::string key = detail::trim(raw.substr(0, eq));
            const std::string value = detail::trim(raw.substr(eq + 1));
            if (key.empty()) throw ConfigError(at + ": missing key before '='");
            if (value.empty()) throw ConfigError(at + ": missing value for '" + key + "'");
            set_key(cfg, key, value, at);
        }
        if (nl == std::string::npos) break;
        pos = nl + 1;
    }
    return cfg;
}

// Spectroscopic constants for the bundled molecules.  14N2: Huber/Herzberg
// rotational constants, polarisability anisotropy 0.67 A^3, bosonic nuclear
// spin I = 1 giving even:odd statistical weights 2:1.
inline MoleculeSpec molecule_preset(const std::string& name) {
    if (name == "N2") {
        MoleculeSpec m;
        m.name = "N2";
        m.Be = 1.99824 * si::wavenumber_J;
        m.alpha_e = -0.017318 * si::wavenumber_J;
        m.De = 5.76e-6 * si::wavenumber_J;
        m.v = 0;
        m.dalpha = 6.7e-31;
        m.g_even = 2.0;
        m.g_odd = 1.0;
        return m;
    }
    throw ConfigError("unknown molecule preset '" + name + "' (available: rigid, N2)");
}

// Fully resolved run description: everything the command handlers need, plus
// the flat key/value listing reproduced in manifests and file headers.
struct RunConfig {
    std::string molecule = "rigid";
    bool molecular = false; // true: a MoleculeSpec fixes the unit scales
    MoleculeSpec mol;
    EnsembleConfig ens;

    int M = 0;
    Parity parity = Parity::even;
    int j_max = 120;

    int samples = 4000;

    std::string axis;
    std::vector<double> values;

    std::vector<std::string> observables = {"energy", "survival", "alignment",
                                            "populations"};
    std::string outdir = "out";
    std::string format = "csv";

    std::vector<std::pair<std::string, std::string>> resolved;
};

// Turn raw key/value pairs into a validated RunConfig.  Dimensionful inputs
// (intensity, pulse duration in seconds, temperature) are translated through
// the molecule's unit scales; exclusive alternatives are rejected when both
// are given.
inline RunConfig resolve_config(const RawConfig& raw) {
    RunConfig rc;
    auto get = [&](const char* key) -> const ConfigEntry* {
        const auto it = raw.find(key);
        return (it == raw.end()) ? nullptr : &it->second;
    };
    auto exclusive = [&](const char* a, const char* b) {
        if (get(a) && get(b))
            throw ConfigError(get(b)->origin + ": '" + b + "' conflicts with '" + a +
                              "' set at " + get(a)->origin);
    };

    if (const auto* e = get("molecule")) rc.molecule = e->value;
    rc.molecular = (rc.molecule != "rigid");
    if (rc.molecular) rc.mol = molecule_preset(rc.molecule);

    static const char* inline_keys[] = {"Be_cm", "alpha_e_cm", "De_cm", "v", "dalpha_A3"};
    for (const char* k : inline_keys)
        if (const auto* e = get(k)) {
            if (!rc.molecular)
                throw ConfigError(e->origin + ": '" + std::string(k) +
                                  "' needs a molecule preset to override (set molecule)");
            if (std::string(k) == "Be_cm")
                rc.mol.Be = detail::to_double(*e, k) * si::wavenumber_J;
            else if (std::string(k) == "alpha_e_cm")
                rc.mol.alpha_e = detail::to_double(*e, k) * si::wavenumber_J;
            else if (std::string(k) == "De_cm")
                rc.mol.De = detail::to_double(*e, k) * si::wavenumber_J;
            else if (std::string(k) == "v")
                rc.mol.v = static_cast<int>(detail::to_int(*e, k));
            else
                rc.mol.dalpha = detail::to_double(*e, k) * 1e-30;
        }
    if (rc.molecular) {
        try {
            rc.mol.validate();
        } catch (const DomainError& err) {
            throw ConfigError(std::string("molecule constants invalid: ") + err.what());
        }
        rc.ens.d_e = rc.mol.d_e();
        rc.ens.g_even = rc.mol.g_even;
        rc.ens.g_odd = rc.mol.g_odd;
    }
    if (const auto* e = get("d_e")) {
        if (rc.molecular)
            throw ConfigError(e->origin +
                              ": 'd_e' is derived from the molecule; override De_cm instead");
        rc.ens.d_e = detail::to_double(*e, "d_e");
    }
    if (const auto* e = get("g_even")) rc.ens.g_even = detail::to_double(*e, "g_even");
    if (const auto* e = get("g_odd")) rc.ens.g_odd = detail::to_double(*e, "g_odd");

    // pulse duration: dimensionless, as a fraction of t_rev, or in fs
    exclusive("sigma", "sigma_trev");
    exclusive("sigma", "sigma_fs");
    exclusive("sigma_trev", "sigma_fs");
    double sigma_s = 0.0; // laboratory duration, only meaningful when molecular
    if (const auto* e = get("sigma")) rc.ens.train.sigma = detail::to_double(*e, "sigma");
    if (const auto* e = get("sigma_trev"))
        rc.ens.train.sigma = detail::to_double(*e, "sigma_trev") * 2.0 * pi;
    if (const auto* e = get("sigma_fs")) {
        if (!rc.molecular)
            throw ConfigError(e->origin + ": 'sigma_fs' needs a molecule for the time scale");
        sigma_s = detail::to_double(*e, "sigma_fs") * 1e-15;
        rc.ens.train.sigma = sigma_s / rc.mol.time_unit_s();
    }
    if (rc.molecular && sigma_s == 0.0) sigma_s = rc.ens.train.sigma * rc.mol.time_unit_s();

    // kick strength: direct, or from the laser peak intensity in W/cm^2
    exclusive("P", "intensity");
    double intensity_W_cm2 = 0.0;
    if (const auto* e = get("P")) rc.ens.train.P = detail::to_double(*e, "P");
    if (const auto* e = get("intensity")) {
        if (!rc.molecular)
            throw ConfigError(e->origin + ": 'intensity' needs a molecule (set molecule)");
        if (!(rc.ens.train.sigma > 0.0))
            throw ConfigError(e->origin + ": 'intensity' needs a finite pulse duration");
        intensity_W_cm2 = detail::to_double(*e, "intensity");
        rc.ens.train.P = to_dimensionless(rc.mol, intensity_W_cm2 * 1e4, sigma_s).P;
    }

    if (const auto* e = get("tau")) rc.ens.train.tau = detail::to_double(*e, "tau");
    if (const auto* e = get("N"))
        rc.ens.train.N = static_cast<int>(detail::to_int(*e, "N"));

    exclusive("sigma_P", "sigma_P_rel");
    if (const auto* e = get("sigma_P")) rc.ens.train.sigma_P = detail::to_double(*e, "sigma_P");
    if (const auto* e = get("sigma_P_rel"))
        rc.ens.train.sigma_P = detail::to_double(*e, "sigma_P_rel") * rc.ens.train.P;

    if (const auto* e = get("seed"))
        rc.ens.train.seed = static_cast<std::uint64_t>(detail::to_int(*e, "seed"));
    if (const auto* e = get("realisations"))
        rc.ens.train.realisations = static_cast<int>(detail::to_int(*e, "realisations"));
    if (const auto* e = get("clip_negative"))
        rc.ens.clip_negative = detail::to_bool(*e, "clip_negative");

    exclusive("J_T", "temperature_K");
    double temperature_K = -1.0;
    if (const auto* e = get("J_T")) rc.ens.thermal.J_T = detail::to_double(*e, "J_T");
    if (const auto* e = get("temperature_K")) {
        if (!rc.molecular)
            throw ConfigError(e->origin + ": 'temperature_K' needs a molecule (set molecule)");
        temperature_K = detail::to_double(*e, "temperature_K");
        rc.ens.thermal.J_T = thermal_to_JT(rc.mol, temperature_K);
    }
    if (const auto* e = get("eps")) rc.ens.thermal.eps = detail::to_double(*e, "eps");

    if (const auto* e = get("M")) rc.M = static_cast<int>(detail::to_int(*e, "M"));
    if (const auto* e = get("parity")) {
        if (e->value == "even")
            rc.parity = Parity::even;
        else if (e->value == "odd")
            rc.parity = Parity::odd;
        else
            throw ConfigError(e->origin + ": parity must be even or odd, got '" + e->value +
                              "'");
    }
    if (const auto* e = get("j_max")) rc.j_max = static_cast<int>(detail::to_int(*e, "j_max"));
    if (const auto* e = get("samples"))
        rc.samples = static_cast<int>(detail::to_int(*e, "samples"));

    if (const auto* e = get("axis")) {
        static const std::set<std::string> axes = {"tau", "P", "sigma", "sigma_P", "J_T"};
        if (axes.count(e->value) == 0)
            throw ConfigError(e->origin + ": axis must be one of tau, P, sigma, sigma_P, J_T");
        rc.axis = e->value;
    }
    if (const auto* e = get("values")) {
        for (const std::string& item : detail::split_list(e->value))
            rc.values.push_back(detail::to_double(ConfigEntry{item, e->origin}, "values"));
        if (rc.values.empty())
            throw ConfigError(e->origin + ": 'values' must list at least one number");
    }

    if (const auto* e = get("observables")) {
        rc.observables = detail::split_list(e->value);
        static const std::set<std::string> obs = {"energy", "survival", "alignment",
                                                  "populations"};
        if (rc.observables.empty())
            throw ConfigError(e->origin + ": observable list is empty");
        for (const std::string& o : rc.observables)
            if (obs.count(o) == 0)
                throw ConfigError(e->origin + ": unknown observable '" + o +
                                  "' (energy, survival, alignment, populations)");
    }
    if (const auto* e = get("outdir")) rc.outdir = e->value;
    if (const auto* e = get("format")) {
        if (e->value != "csv" && e->value != "json")
            throw ConfigError(e->origin + ": format must be csv or json, got '" + e->value +
                              "'");
        rc.format = e->value;
    }
    if (const auto* e = get("threads"))
        rc.ens.threads = static_cast<int>(detail::to_int(*e, "threads"));
    if (const auto* e = get("alignment_samples"))
        rc.ens.alignment_samples = static_cast<int>(detail::to_int(*e, "alignment_samples"));
    if (const auto* e = get("headroom"))
        rc.ens.window_headroom = static_cast<int>(detail::to_int(*e, "headroom"));

    try {
        rc.ens.validate();
        if (rc.j_max < 2) throw DomainError("j_max must be at least 2");
        if (rc.samples < 1000) throw DomainError("samples must be at least 1000");
        if (std::abs(rc.M) > rc.j_max) throw DomainError("|M| must not exceed j_max");
    } catch (const DomainError& err) {
        throw ConfigError(std::string("invalid parameters: ") + err.what());
    }

    // flat listing of every resolved dimensionless parameter for manifests
    auto put = [&](const std::string& k, const std::string& v) {
        rc.resolved.emplace_back(k, v);
    };
    using detail::num_str;
    put("molecule", rc.molecule);
    put("P", num_str(rc.ens.train.P));
    put("tau", num_str(rc.ens.train.tau));
    put("sigma", num_str(rc.ens.train.sigma));
    put("N", std::to_string(rc.ens.train.N));
    put("sigma_P", num_str(rc.ens.train.sigma_P));
    put("seed", std::to_string(rc.ens.train.seed));
    put("realisations", std::to_string(rc.ens.train.realisations));
    put("clip_negative", rc.ens.clip_negative ? "true" : "false");
    put("J_T", num_str(rc.ens.thermal.J_T));
    put("eps", num_str(rc.ens.thermal.eps));
    put("d_e", num_str(rc.ens.d_e));
    put("g_even", num_str(rc.ens.g_even));
    put("g_odd", num_str(rc.ens.g_odd));
    if (rc.molecular) {
        put("Be_cm", num_str(rc.mol.Be / si::wavenumber_J));
        put("alpha_e_cm", num_str(rc.mol.alpha_e / si::wavenumber_J));
        put("De_cm", num_str(rc.mol.De / si::wavenumber_J));
        put("v", std::to_string(rc.mol.v));
        put("dalpha_A3", num_str(rc.mol.dalpha * 1e30));
        put("t_rev_s", num_str(rc.mol.t_rev_s()));
        put("sigma_s", num_str(sigma_s));
        if (intensity_W_cm2 > 0.0) put("intensity_W_cm2", num_str(intensity_W_cm2));
        if (temperature_K >= 0.0) put("temperature_K", num_str(temperature_K));
    }
    if (get("M") || get("parity") || get("j_max")) {
        put("M", std::to_string(rc.M));
        put("parity", to_string(rc.parity));
        put("j_max", std::to_string(rc.j_max));
    }
    if (get("samples")) put("samples", std::to_string(rc.samples));
    if (!rc.axis.empty()) {
        put("axis", rc.axis);
        std::string vs;
        for (std::size_t i = 0; i < rc.values.size(); ++i) {
            if (i) vs += ",";
            vs += num_str(rc.values[i]);
        }
        put("values", vs);
    }
    {
        std::string os;
        for (std::size_t i = 0; i < rc.observables.size(); ++i) {
            if (i) os += ",";
            os += rc.observables[i];
        }
        put("observables", os);
    }
    put("format", rc.format);
    put("threads", std::to_string(rc.ens.threads));
    return rc;
}

} // namespace rotorkick
