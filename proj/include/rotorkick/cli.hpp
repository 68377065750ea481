#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "rotorkick/classical.hpp"
#include "rotorkick/config.hpp"
#include "rotorkick/ensemble.hpp"
#include "rotorkick/floquet.hpp"
#include "rotorkick/io.hpp"
#include "rotorkick/observables.hpp"

namespace rotorkick {

// A preset is a named, possibly multi-job configuration bound to one
// command.  Jobs share the base keys and differ in the panel parameter, so
// one invocation reproduces a whole figure.
struct PresetJob {
    std::string label;
    std::vector<std::pair<std::string, std::string>> keys;
};

struct Preset {
    std::string command;
    std::vector<std::pair<std::string, std::string>> base;
    std::vector<PresetJob> jobs;
};

inline const std::map<std::string, Preset>& preset_table() {
    static const std::map<std::string, Preset> table = [] {
        using detail::num_str;
        std::map<std::string, Preset> t;
        const std::string two_pi = num_str(2.0 * pi);

        // one-cycle eigenproblem in the four period regimes
        auto floq = [&](const std::string& tau) {
            return Preset{"floquet",
                          {{"P", "3"}, {"tau", tau}, {"M", "0"}, {"parity", "even"},
                           {"j_max", "120"}},
                          {{"floquet", {}}}};
        };
        t["fig2a"] = floq(two_pi);                  // full resonance
        t["fig2b"] = floq(num_str(pi / 3.0));       // fractional resonance
        t["fig2c"] = floq(num_str(2.0 * pi + 0.01)); // slight detuning
        t["fig2d"] = floq("1");                     // far off-resonant
        t["free"] = Preset{"floquet",
                           {{"P", "0"}, {"tau", "1"}, {"M", "0"}, {"parity", "even"},
                            {"j_max", "60"}},
                           {{"floquet", {}}}};

        // period scan: plateau at resonance decaying into localisation
        t["fig3"] = Preset{
            "sweep",
            {{"P", "3"},
             {"N", "8"},
             {"axis", "tau"},
             {"values", two_pi + "," + num_str(2.0 * pi + 0.05) + "," +
                            num_str(2.0 * pi + 0.2) + ",1"}},
            {{"sweep", {}}}};

        // localised profiles, one parameter varied per panel
        t["fig4a"] = Preset{"run",
                            {{"tau", "1"}, {"N", "32"}, {"observables", "populations"}},
                            {{"P1", {{"P", "1"}}},
                             {"P2", {{"P", "2"}}},
                             {"P3", {{"P", "3"}}}}};
        t["fig4b"] = Preset{"run",
                            {{"tau", "1"}, {"P", "3"}, {"observables", "populations"}},
                            {{"N8", {{"N", "8"}}},
                             {"N16", {{"N", "16"}}},
                             {"N32", {{"N", "32"}}}}};
        t["fig4c"] = Preset{"run",
                            {{"P", "3"}, {"N", "32"}, {"observables", "populations"}},
                            {{"tau1", {{"tau", "1"}}},
                             {"tau1p3", {{"tau", "1.3"}}},
                             {"tau2p2", {{"tau", "2.2"}}}}};
        std::vector<PresetJob> noise_jobs = {{"noise00", {{"sigma_P_rel", "0"}}},
                                             {"noise02", {{"sigma_P_rel", "0.2"}}},
                                             {"noise05", {{"sigma_P_rel", "0.5"}}}};
        t["fig4d"] = Preset{"run",
                            {{"tau", "1"}, {"P", "3"}, {"N", "32"}, {"realisations", "50"},
                             {"observables", "populations"}},
                            noise_jobs};

        // energy suppression and survival under strength noise
        t["fig5"] = Preset{"run",
                           {{"tau", "1"}, {"P", "3"}, {"N", "32"}, {"realisations", "50"},
                            {"observables", "energy"}},
                           noise_jobs};
        t["fig6"] = Preset{"run",
                           {{"tau", "1"}, {"P", "3"}, {"N", "32"}, {"realisations", "50"},
                            {"observables", "survival"}},
                           noise_jobs};

        // classical overlay for three pulse durations
        auto overlay = [&](double trev_frac) {
            return Preset{"classical",
                          {{"tau", "1"}, {"P", "3"}, {"N", "32"}, {"realisations", "50"},
                           {"sigma_trev", num_str(trev_frac)}, {"samples", "4000"}},
                          noise_jobs};
        };
        t["fig7a"] = overlay(0.005);
        t["fig7b"] = overlay(0.01);
        t["fig7c"] = overlay(0.02);

        // thermal baselines
        t["fig8"] = Preset{"run",
                           {{"tau", "1"}, {"P", "3"}, {"N", "32"},
                            {"observables", "energy,survival,populations"}},
                           {{"JT0", {{"J_T", "0"}}},
                            {"JT1", {{"J_T", "1"}}},
                            {"JT5", {{"J_T", "5"}}}}};

        // nitrogen showcase: laboratory units in, weak and strong noise
        const Preset nitrogen{
            "run",
            {{"molecule", "N2"},
             {"intensity", "3e13"},
             {"sigma_trev", "0.005"},
             {"temperature_K", "8"},
             {"tau", "1"},
             {"N", "32"},
             {"realisations", "50"},
             {"seed", "0"},
             {"observables", "energy,survival,alignment,populations"}},
            {{"noise02", {{"sigma_P_rel", "0.2"}}},
             {"noise05", {{"sigma_P_rel", "0.5"}}}}};
        t["fig9"] = nitrogen;
        t["fig10"] = nitrogen; // population profiles come from the same runs
        return t;
    }();
    return table;
}

// Expand a preset into its labelled, fully resolved jobs with no file or
// flag overrides.  The CLI and the acceptance scorecard share this path.
inline std::vector<std::pair<std::string, RunConfig>> resolve_preset(const std::string& name) {
    const auto it = preset_table().find(name);
    if (it == preset_table().end()) throw ConfigError("unknown preset '" + name + "'");
    std::vector<std::pair<std::string, RunConfig>> out;
    for (const PresetJob& job : it->second.jobs) {
        RawConfig raw;
        const std::string origin = "preset " + name;
        for (const auto& [k, v] : it->second.base) set_key(raw, k, v, origin);
        for (const auto& [k, v] : job.keys)
            set_key(raw, k, v, origin + " job " + job.label);
        out.emplace_back(job.label, resolve_config(raw));
    }
    return out;
}

namespace climpl {

inline std::vector<std::pair<std::string, std::string>> table_meta(
    const RunConfig& rc, const std::string& command, const std::string& label) {
    std::vector<std::pair<std::string, std::string>> meta;
    meta.emplace_back("rotorkick", version_string());
    meta.emplace_back("command", command);
    meta.emplace_back("job", label);
    for (const auto& kv : rc.resolved) meta.push_back(kv);
    return meta;
}

inline void emit_series(const std::filesystem::path& dir, const RunConfig& rc,
                        const std::string& label, const std::string& name,
                        const SeriesStat& s, int first_index,
                        const std::vector<std::pair<std::string, std::string>>& meta) {
    OutputTable t;
    t.meta = meta;
    t.columns = {"n", name, "se"};
    for (std::size_t i = 0; i < s.mean.size(); ++i)
        t.rows.push_back({static_cast<double>(first_index + static_cast<int>(i)), s.mean[i],
                          s.se[i]});
    write_table(dir, label + "_" + name, rc.format, t);
}

inline EnsembleResult run_checked(const EnsembleConfig& cfg) {
    EnsembleResult res = run_ensemble(cfg);
    if (!res.valid) throw NumericError(res.error);
    return res;
}

inline void cmd_run(const RunConfig& rc, const std::string& label) {
    const EnsembleResult res = run_checked(rc.ens);
    const auto meta = table_meta(rc, "run", label);
    const std::filesystem::path dir = rc.outdir;
    for (const std::string& obs : rc.observables) {
        if (obs == "energy") emit_series(dir, rc, label, "energy", res.energy, 0, meta);
        if (obs == "survival") emit_series(dir, rc, label, "survival", res.survival, 0, meta);
        if (obs == "alignment")
            emit_series(dir, rc, label, "alignment", res.alignment, 0, meta);
        if (obs == "populations") {
            OutputTable t;
            t.meta = meta;
            t.columns = {"n", "J", "p", "se"};
            for (std::size_t n = 0; n < res.populations.size(); ++n)
                for (std::size_t j = 0; j < res.populations[n].size(); ++j)
                    t.rows.push_back({static_cast<double>(n), static_cast<double>(res.J[j]),
                                      res.populations[n][j], res.populations_se[n][j]});
            write_table(dir, label + "_populations", rc.format, t);
        }
    }
}

inline void cmd_floquet(const RunConfig& rc, const std::string& label) {
    const BasisWindow w = make_window(rc.M, rc.parity, rc.j_max);
    const Eigen::VectorXd E = window_levels(w, rc.ens.d_e);
    const CyclePropagator cp =
        one_cycle(w, rc.ens.train.tau, rc.ens.train.P, rc.ens.train.sigma, E, rc.ens.prop);
    const FloquetSet fs = diagonalise(cp);
    const auto loc = state_localisation(fs);
    const auto meta = table_meta(rc, "floquet", label);
    const std::filesystem::path dir = rc.outdir;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    OutputTable spectrum;
    spectrum.meta = meta;
    spectrum.columns = {"state", "omega", "participation_ratio",
                        "centroid_J", "xi", "fit_points", "fit_rms_log10"};
    for (std::size_t a = 0; a < loc.size(); ++a)
        spectrum.rows.push_back({static_cast<double>(a), fs.omega[static_cast<int>(a)],
                                 loc[a].participation_ratio, loc[a].centroid,
                                 loc[a].fit.usable ? loc[a].fit.xi : nan,
                                 static_cast<double>(loc[a].fit.points),
                                 loc[a].fit.usable ? loc[a].fit.rms_log10 : nan});
    write_table(dir, label + "_spectrum", rc.format, spectrum);

    OutputTable states;
    states.meta = meta;
    states.columns = {"state", "J", "p"};
    for (int a = 0; a < fs.states.cols(); ++a)
        for (int k = 0; k < fs.states.rows(); ++k)
            states.rows.push_back({static_cast<double>(a),
                                   static_cast<double>(fs.window.j_of(k)),
                                   std::norm(fs.states(k, a))});
    write_table(dir, label + "_states", rc.format, states);
}

inline double even_profile_xi(const EnsembleResult& res) {
    PopulationProfile prof;
    const std::size_t last = res.populations.size() - 1;
    for (std::size_t j = 0; j < res.populations[last].size(); ++j) {
        if (res.J[j] % 2 != 0) continue;
        prof.J.push_back(res.J[j]);
        prof.p.push_back(res.populations[last][j]);
    }
    const LocalisationFit fit = fit_localisation_length(prof);
    return fit.usable ? fit.xi : std::numeric_limits<double>::quiet_NaN();
}

inline void cmd_sweep(const RunConfig& rc, const std::string& label) {
    if (rc.axis.empty())
        throw ConfigError("sweep needs 'axis' (tau, P, sigma, sigma_P, J_T)");
    if (rc.values.size() < 2)
        throw ConfigError("sweep needs at least two entries in 'values'");

    OutputTable t;
    t.meta = table_meta(rc, "sweep", label);
    t.columns = {rc.axis, "energy", "energy_se", "survival", "survival_se", "xi_even"};
    for (const double v : rc.values) {
        EnsembleConfig cfg = rc.ens;
        if (rc.axis == "tau") cfg.train.tau = v;
        if (rc.axis == "P") cfg.train.P = v;
        if (rc.axis == "sigma") cfg.train.sigma = v;
        if (rc.axis == "sigma_P") cfg.train.sigma_P = v;
        if (rc.axis == "J_T") cfg.thermal.J_T = v;
        const EnsembleResult res = run_checked(cfg);
        const std::size_t last = res.energy.mean.size() - 1;
        t.rows.push_back({v, res.energy.mean[last], res.energy.se[last],
                          res.survival.mean[last], res.survival.se[last],
                          even_profile_xi(res)});
    }
    write_table(rc.outdir, label + "_summary", rc.format, t);
}

inline void cmd_classical(const RunConfig& rc, const std::string& label) {
    const EnsembleResult quantum = run_checked(rc.ens);
    const SeriesStat classical = classical_ensemble_energy(
        rc.samples, rc.ens.train, rc.ens.thermal.J_T, ClassicalOptions{}, rc.ens.threads);

    OutputTable t;
    t.meta = table_meta(rc, "classical", label);
    t.columns = {"n", "energy_quantum", "energy_quantum_se", "energy_classical",
                 "energy_classical_se"};
    for (std::size_t n = 0; n < quantum.energy.mean.size(); ++n)
        t.rows.push_back({static_cast<double>(n), quantum.energy.mean[n],
                          quantum.energy.se[n], classical.mean[n], classical.se[n]});
    write_table(rc.outdir, label + "_overlay", rc.format, t);
}

} // namespace climpl

inline int cli_main(int argc, char** argv) {
    using namespace climpl;
    try {
        CLI::App app{"quantum and classical kicked-rotor pulse trains", "rotorkick"};
        app.require_subcommand(1);
        app.footer("Any config-file key doubles as a --key flag; flags override config\n"
                   "files, which override preset keys.\n"
                   "presets:\n"
                   "  floquet:   fig2a fig2b fig2c fig2d free\n"
                   "  sweep:     fig3\n"
                   "  run:       fig4a fig4b fig4c fig4d fig5 fig6 fig8 fig9 fig10\n"
                   "  classical: fig7a fig7b fig7c\n"
                   "ROTORKICK_THREADS caps the worker pool when threads = 0.\n"
                   "exit codes: 0 ok, 2 configuration error, 3 numeric failure");

        std::vector<std::string> config_files;
        std::string preset_name;
        std::map<std::string, std::string> flag_vals;
        const std::pair<const char*, const char*> commands[] = {
            {"run", "pulse-train ensemble: energy, survival, alignment, populations"},
            {"floquet", "one-cycle eigenproblem: quasi-energies and state localisation"},
            {"sweep", "repeat a run over one axis (tau, P, sigma, sigma_P, J_T)"},
            {"classical", "classical ensemble energy beside the matching quantum run"}};
        for (const auto& [name, desc] : commands) {
            CLI::App* sub = app.add_subcommand(name, desc);
            sub->add_option(
                   "--config",
                   [&config_files](const CLI::results_t& r) {
                       config_files.insert(config_files.end(), r.begin(), r.end());
                       return true;
                   },
                   "key = value file, may repeat")
                ->take_all();
            sub->add_option("--preset", preset_name, "expand a named multi-job preset");
            for (const std::string& key : known_keys())
                sub->add_option("--" + key,
                                [&flag_vals, key](const CLI::results_t& r) {
                                    flag_vals[key] = r.back();
                                    return true;
                                })
                    ->take_last()
                    ->group("Configuration keys");
        }

        try {
            app.parse(argc, argv);
        } catch (const CLI::Success& e) {
            return app.exit(e); // --help and friends
        } catch (const CLI::ParseError& e) {
            app.exit(e);
            return 2;
        }
        const std::string command = app.get_subcommands().front()->get_name();

        RawConfig file_keys;
        for (const std::string& f : config_files) {
            std::ifstream in(f);
            if (!in) throw ConfigError("cannot read config file '" + f + "'");
            std::ostringstream text;
            text << in.rdbuf();
            file_keys = parse_config_text(text.str(), f, std::move(file_keys));
        }

        std::vector<PresetJob> jobs = {{command, {}}};
        RawConfig preset_base;
        if (!preset_name.empty()) {
            const auto it = preset_table().find(preset_name);
            if (it == preset_table().end())
                throw ConfigError("unknown preset '" + preset_name + "'");
            if (it->second.command != command)
                throw ConfigError("preset '" + preset_name + "' belongs to command '" +
                                  it->second.command + "'");
            const std::string origin = "preset " + preset_name;
            for (const auto& [k, v] : it->second.base) set_key(preset_base, k, v, origin);
            jobs = it->second.jobs;
        }

        std::vector<ManifestJob> manifest;
        std::vector<std::pair<RunConfig, std::string>> resolved_jobs;
        std::filesystem::path outdir;
        for (const PresetJob& job : jobs) {
            RawConfig raw = preset_base;
            if (!preset_name.empty())
                for (const auto& [k, v] : job.keys)
                    set_key(raw, k, v, "preset " + preset_name + " job " + job.label);
            for (const auto& [k, e] : file_keys) raw[k] = e;
            for (const auto& [k, v] : flag_vals) set_key(raw, k, v, "--" + k);
            RunConfig rc = resolve_config(raw);
            outdir = rc.outdir;
            manifest.push_back({job.label, rc.resolved});
            resolved_jobs.emplace_back(std::move(rc), job.label);
        }
        write_manifest(outdir / "manifest.txt", command, preset_name, manifest);

        for (const auto& [rc, label] : resolved_jobs) {
            if (command == "run") cmd_run(rc, label);
            if (command == "floquet") cmd_floquet(rc, label);
            if (command == "sweep") cmd_sweep(rc, label);
            if (command == "classical") cmd_classical(rc, label);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "rotorkick: config error: %s\n", e.what());
        return 2;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "rotorkick: config error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "rotorkick: numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rotorkick: %s\n", e.what());
        return 3;
    }
}

} // namespace rotorkick
