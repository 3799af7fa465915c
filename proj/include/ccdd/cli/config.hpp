#pragma once

/**
 * @file  config.hpp
 * @brief JSON experiment configuration: schema, defaults, hashing, presets.
 *
 * Unknown keys and wrong types are schema errors (config_error). Every
 * section is optional except the ones the chosen kind needs; missing fields
 * take the library defaults. The hash covers the fully resolved config
 * (defaults filled in), minus the output directory.
 */

#include "ccdd/error.hpp"
#include "ccdd/noise.hpp"
#include "ccdd/readout.hpp"
#include "ccdd/sequences.hpp"
#include "ccdd/spin_core.hpp"
#include "ccdd/wavegen.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace ccdd::cli {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k{"rabi",           "amp-sweep",  "phase-sweep", "sensitivity", "phase-sensitivity",
                                            "heterodyne",     "resonances", "bloch",       "snr-scaling"};
    return k;
}

/** Kind-specific knobs; each kind reads the subset it needs. */
struct experiment_params {
    double pulsewidth_end = 4e-6;    // rabi
    double pulsewidth_step = 1e-9;   // rabi
    std::uint64_t shots = 0;         // rabi; 0 = expectation values
    std::vector<double> values;      // amp-sweep (Hz) / phase-sweep (rad)
    std::vector<double> amplitudes;  // phase-sensitivity (Hz)
    std::size_t n_phases = 16;
    std::size_t n_repeats = 10;
    std::uint64_t averages = 100000;
    double t_m = 10.0;                // heterodyne, s
    std::vector<double> t_m_list;     // snr-scaling, s
    double phi0 = 0.0;
    std::size_t n_grid = 64;
    std::size_t pad = 1;
    bool autocorrelation = true;
    bool write_photons = true;
    double duration = 2e-6;           // bloch
    double sample_dt = 1e-9;          // bloch
    std::string frame = "double_rotating";
    std::string branch = "x";
    bool find_antinode = true;
};

struct experiment_config {
    std::string kind;
    std::uint64_t seed = 1;
    std::string output_dir = "ccdd-out";
    drive_config drive;
    signal_config signal;
    noise_config noise;
    readout_config readout;
    sequence_timing timing;
    simulation_config simulation;
    waveform_spec wavegen;
    bool wavegen_check = true;
    spin_system_constants constants;
    experiment_params experiment;
    std::set<std::string> sections;  // present in the source document
};

// ---------------------------------------------------------------------------
// Field readers
// ---------------------------------------------------------------------------

namespace detail {
inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw config_error(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) throw config_error("unknown key '" + it.key() + "' in " + where);
    }
}

inline double num(const json& obj, const char* key, double def, const std::string& where) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw config_error(where + "." + key + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw config_error(where + "." + key + " must be finite");
    return d;
}

inline std::uint64_t count(const json& obj, const char* key, std::uint64_t def, const std::string& where) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw config_error(where + "." + key + " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

inline bool flag(const json& obj, const char* key, bool def, const std::string& where) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_boolean()) throw config_error(where + "." + key + " must be a boolean");
    return obj.at(key).get<bool>();
}

inline std::string text(const json& obj, const char* key, const std::string& def, const std::string& where) {
    if (!obj.contains(key)) return def;
    if (!obj.at(key).is_string()) throw config_error(where + "." + key + " must be a string");
    return obj.at(key).get<std::string>();
}

inline std::vector<double> nums(const json& obj, const char* key, const std::vector<double>& def,
                                const std::string& where) {
    if (!obj.contains(key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_array()) throw config_error(where + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw config_error(where + "." + key + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Parse / serialize
// ---------------------------------------------------------------------------

inline experiment_config from_json(const json& j) {
    using namespace detail;
    reject_unknown(j, "config",
                   {"schema_version", "kind", "seed", "output_dir", "drive", "signal", "noise", "readout", "timing",
                    "simulation", "wavegen", "constants", "experiment", "description"});
    if (!j.contains("schema_version") || !j.at("schema_version").is_number_integer() ||
        j.at("schema_version").get<int>() != schema_version) {
        throw config_error("schema_version must be " + std::to_string(schema_version));
    }
    experiment_config c;
    c.kind = text(j, "kind", "", "config");
    c.seed = count(j, "seed", 1, "config");
    c.output_dir = text(j, "output_dir", c.output_dir, "config");
    for (const char* s : {"drive", "signal", "noise", "readout", "timing", "simulation", "wavegen", "constants", "experiment"}) {
        if (j.contains(s)) c.sections.insert(s);
    }

    if (j.contains("drive")) {
        const auto& d = j.at("drive");
        reject_unknown(d, "drive", {"omega0_hz", "Omega_hz", "epsilon_m_hz", "omega_m_hz", "theta_m_rad", "phase_offset_rad"});
        c.drive.omega0 = frequency(num(d, "omega0_hz", c.drive.omega0.hz(), "drive"));
        c.drive.Omega = frequency(num(d, "Omega_hz", c.drive.Omega.hz(), "drive"));
        c.drive.epsilon_m = frequency(num(d, "epsilon_m_hz", c.drive.epsilon_m.hz(), "drive"));
        c.drive.omega_m = frequency(num(d, "omega_m_hz", c.drive.Omega.hz(), "drive"));
        c.drive.theta_m = num(d, "theta_m_rad", c.drive.theta_m, "drive");
        c.drive.phase_offset = num(d, "phase_offset_rad", c.drive.phase_offset, "drive");
    }
    if (j.contains("signal")) {
        const auto& s = j.at("signal");
        reject_unknown(s, "signal", {"g_hz", "omega_s_hz", "phi_s_rad"});
        const auto g = nums(s, "g_hz", {0.0, 0.0, 0.0}, "signal");
        if (g.size() != 3) throw config_error("signal.g_hz must have three components");
        c.signal.g = {g[0], g[1], g[2]};
        c.signal.omega_s = frequency(num(s, "omega_s_hz", c.signal.omega_s.hz(), "signal"));
        c.signal.phi_s = wrap_phase(num(s, "phi_s_rad", 0.0, "signal"));
    }
    if (j.contains("noise")) {
        const auto& n = j.at("noise");
        reject_unknown(n, "noise", {"T2star_s", "drive_frac_sigma", "T1_s", "antithetic", "enabled"});
        if (!flag(n, "enabled", true, "noise")) {
            c.noise = noise_config::noiseless();
        } else {
            c.noise.T2star = num(n, "T2star_s", c.noise.T2star, "noise");
            c.noise.drive_frac_sigma = num(n, "drive_frac_sigma", c.noise.drive_frac_sigma, "noise");
        }
        c.noise.T1 = num(n, "T1_s", c.noise.T1, "noise");
        c.noise.antithetic = flag(n, "antithetic", c.noise.antithetic, "noise");
    }
    if (j.contains("readout")) {
        const auto& r = j.at("readout");
        reject_unknown(r, "readout", {"mean_photons", "contrast_kappa", "gate_s", "laser_init_s"});
        c.readout.mean_photons = num(r, "mean_photons", c.readout.mean_photons, "readout");
        c.readout.contrast_kappa = num(r, "contrast_kappa", c.readout.contrast_kappa, "readout");
        c.readout.gate = num(r, "gate_s", c.readout.gate, "readout");
        c.readout.laser_init = num(r, "laser_init_s", c.readout.laser_init, "readout");
    }
    if (j.contains("timing")) {
        const auto& t = j.at("timing");
        reject_unknown(t, "timing", {"T_MW_s", "delta_T_s", "T_rep_s", "t1_cancellation"});
        c.timing.T_MW = num(t, "T_MW_s", c.timing.T_MW, "timing");
        c.timing.delta_T = num(t, "delta_T_s", c.timing.delta_T, "timing");
        c.timing.T_rep = num(t, "T_rep_s", c.timing.T_rep, "timing");
        c.timing.t1_cancellation = flag(t, "t1_cancellation", c.timing.t1_cancellation, "timing");
    }
    if (j.contains("simulation")) {
        const auto& s = j.at("simulation");
        reject_unknown(s, "simulation", {"model", "n_realizations", "max_step_s"});
        c.simulation.model = parse_sequence_model(text(s, "model", std::string(to_string(c.simulation.model)), "simulation"));
        c.simulation.n_realizations = count(s, "n_realizations", c.simulation.n_realizations, "simulation");
        c.simulation.max_step = num(s, "max_step_s", c.simulation.max_step, "simulation");
    }
    if (j.contains("wavegen")) {
        const auto& w = j.at("wavegen");
        reject_unknown(w, "wavegen", {"enabled", "sample_rate_hz", "memory_length_s", "freq_grid_hz"});
        c.wavegen_check = flag(w, "enabled", c.wavegen_check, "wavegen");
        c.wavegen.sample_rate = num(w, "sample_rate_hz", c.wavegen.sample_rate, "wavegen");
        c.wavegen.memory_length = num(w, "memory_length_s", c.wavegen.memory_length, "wavegen");
        c.wavegen.freq_grid = num(w, "freq_grid_hz", c.wavegen.freq_grid, "wavegen");
    }
    if (j.contains("constants")) {
        const auto& k = j.at("constants");
        reject_unknown(k, "constants", {"D_hz", "E_hz", "gamma_e_hz_per_t", "Bz_t"});
        c.constants.D = frequency(num(k, "D_hz", c.constants.D.hz(), "constants"));
        c.constants.E = frequency(num(k, "E_hz", c.constants.E.hz(), "constants"));
        c.constants.gamma_e = num(k, "gamma_e_hz_per_t", c.constants.gamma_e, "constants");
        c.constants.Bz = num(k, "Bz_t", c.constants.Bz, "constants");
    }
    if (j.contains("experiment")) {
        const auto& e = j.at("experiment");
        reject_unknown(e, "experiment",
                       {"pulsewidth_end_s", "pulsewidth_step_s", "shots", "values", "amplitudes_hz", "n_phases",
                        "n_repeats", "averages", "t_m_s", "t_m_list_s", "phi0_rad", "n_grid", "pad",
                        "autocorrelation", "write_photons", "duration_s", "sample_dt_s", "frame", "branch",
                        "find_antinode"});
        auto& x = c.experiment;
        x.pulsewidth_end = num(e, "pulsewidth_end_s", x.pulsewidth_end, "experiment");
        x.pulsewidth_step = num(e, "pulsewidth_step_s", x.pulsewidth_step, "experiment");
        x.shots = count(e, "shots", x.shots, "experiment");
        x.values = nums(e, "values", x.values, "experiment");
        x.amplitudes = nums(e, "amplitudes_hz", x.amplitudes, "experiment");
        x.n_phases = count(e, "n_phases", x.n_phases, "experiment");
        x.n_repeats = count(e, "n_repeats", x.n_repeats, "experiment");
        x.averages = count(e, "averages", x.averages, "experiment");
        x.t_m = num(e, "t_m_s", x.t_m, "experiment");
        x.t_m_list = nums(e, "t_m_list_s", x.t_m_list, "experiment");
        x.phi0 = num(e, "phi0_rad", x.phi0, "experiment");
        x.n_grid = count(e, "n_grid", x.n_grid, "experiment");
        x.pad = count(e, "pad", x.pad, "experiment");
        x.autocorrelation = flag(e, "autocorrelation", x.autocorrelation, "experiment");
        x.write_photons = flag(e, "write_photons", x.write_photons, "experiment");
        x.duration = num(e, "duration_s", x.duration, "experiment");
        x.sample_dt = num(e, "sample_dt_s", x.sample_dt, "experiment");
        x.frame = text(e, "frame", x.frame, "experiment");
        x.branch = text(e, "branch", x.branch, "experiment");
        x.find_antinode = flag(e, "find_antinode", x.find_antinode, "experiment");
    }
    return c;
}

inline json to_json(const experiment_config& c) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = c.kind;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["drive"] = {{"omega0_hz", c.drive.omega0.hz()},       {"Omega_hz", c.drive.Omega.hz()},
                  {"epsilon_m_hz", c.drive.epsilon_m.hz()}, {"omega_m_hz", c.drive.omega_m.hz()},
                  {"theta_m_rad", c.drive.theta_m},         {"phase_offset_rad", c.drive.phase_offset}};
    j["signal"] = {{"g_hz", {c.signal.g.x, c.signal.g.y, c.signal.g.z}},
                   {"omega_s_hz", c.signal.omega_s.hz()},
                   {"phi_s_rad", c.signal.phi_s}};
    json noise = {{"T1_s", c.noise.T1}, {"antithetic", c.noise.antithetic}};
    if (c.noise.is_noiseless()) {
        noise["enabled"] = false;
    } else {
        noise["T2star_s"] = c.noise.T2star;
        noise["drive_frac_sigma"] = c.noise.drive_frac_sigma;
    }
    j["noise"] = noise;
    j["readout"] = {{"mean_photons", c.readout.mean_photons},
                    {"contrast_kappa", c.readout.contrast_kappa},
                    {"gate_s", c.readout.gate},
                    {"laser_init_s", c.readout.laser_init}};
    j["timing"] = {{"T_MW_s", c.timing.T_MW},
                   {"delta_T_s", c.timing.delta_T},
                   {"T_rep_s", c.timing.T_rep},
                   {"t1_cancellation", c.timing.t1_cancellation}};
    j["simulation"] = {{"model", std::string(to_string(c.simulation.model))},
                       {"n_realizations", c.simulation.n_realizations},
                       {"max_step_s", c.simulation.max_step}};
    j["wavegen"] = {{"enabled", c.wavegen_check},
                    {"sample_rate_hz", c.wavegen.sample_rate},
                    {"memory_length_s", c.wavegen.memory_length},
                    {"freq_grid_hz", c.wavegen.freq_grid}};
    j["constants"] = {{"D_hz", c.constants.D.hz()},
                      {"E_hz", c.constants.E.hz()},
                      {"gamma_e_hz_per_t", c.constants.gamma_e},
                      {"Bz_t", c.constants.Bz}};
    const auto& x = c.experiment;
    j["experiment"] = {{"pulsewidth_end_s", x.pulsewidth_end},
                       {"pulsewidth_step_s", x.pulsewidth_step},
                       {"shots", x.shots},
                       {"values", x.values},
                       {"amplitudes_hz", x.amplitudes},
                       {"n_phases", x.n_phases},
                       {"n_repeats", x.n_repeats},
                       {"averages", x.averages},
                       {"t_m_s", x.t_m},
                       {"t_m_list_s", x.t_m_list},
                       {"phi0_rad", x.phi0},
                       {"n_grid", x.n_grid},
                       {"pad", x.pad},
                       {"autocorrelation", x.autocorrelation},
                       {"write_photons", x.write_photons},
                       {"duration_s", x.duration},
                       {"sample_dt_s", x.sample_dt},
                       {"frame", x.frame},
                       {"branch", x.branch},
                       {"find_antinode", x.find_antinode}};
    return j;
}

// ---------------------------------------------------------------------------
// Validation and hashing
// ---------------------------------------------------------------------------

inline std::vector<std::string> required_sections(const std::string& kind) {
    if (kind == "resonances") return {"drive"};
    if (kind == "rabi" || kind == "bloch") return {"drive"};
    return {"drive", "signal"};
}

/** Schema-level checks (exit 2). Physical checks happen when the run starts (exit 3). */
inline void validate_schema(const experiment_config& c) {
    bool known = false;
    for (const auto& k : experiment_kinds()) known = known || k == c.kind;
    if (!known) throw config_error("unknown experiment kind '" + c.kind + "'");
    for (const auto& s : required_sections(c.kind)) {
        if (!c.sections.count(s)) throw config_error("kind '" + c.kind + "' needs a '" + s + "' section");
    }
    c.signal.validate();
    c.noise.validate();
    c.readout.validate();
    c.constants.validate();
    if (c.simulation.n_realizations == 0) throw config_error("simulation.n_realizations must be positive");
    const auto& x = c.experiment;
    if (c.kind == "amp-sweep" || c.kind == "phase-sweep" || c.kind == "sensitivity") {
        if (x.values.size() < 3) throw config_error("experiment.values needs at least three entries");
    }
    if (c.kind == "phase-sensitivity" && x.amplitudes.empty()) throw config_error("experiment.amplitudes_hz is empty");
    if (c.kind == "snr-scaling" && x.t_m_list.size() < 4) throw config_error("experiment.t_m_list_s needs four entries");
    if (c.kind == "rabi" && !(x.pulsewidth_step > 0.0 && x.pulsewidth_end > 0.0)) {
        throw config_error("rabi pulsewidth grid must be positive");
    }
    if (c.kind == "bloch") {
        parse_branch(x.branch);
        if (x.frame != "double_rotating" && x.frame != "single_rotating" && x.frame != "lab") {
            throw config_error("experiment.frame must be lab, single_rotating or double_rotating");
        }
    }
}

/** 64-bit FNV-1a. */
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash(const experiment_config& c) {
    json j = to_json(c);
    j.erase("output_dir");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

inline experiment_config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot read config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw config_error(std::string("malformed JSON: ") + e.what());
    }
    return from_json(j);
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace detail {
inline json base(const std::string& kind, const std::string& description) {
    return json{{"schema_version", schema_version}, {"kind", kind}, {"seed", 1}, {"description", description}};
}
inline json ccdd_drive(double theta) {
    return json{{"omega0_hz", 2.32e9}, {"Omega_hz", 100e6}, {"epsilon_m_hz", 10e6}, {"omega_m_hz", 100e6},
                {"theta_m_rad", theta}, {"phase_offset_rad", 0.07 * std::numbers::pi}};
}
inline json resonant_signal(double gx, double phi = 0.0, double f = 2.31e9) {
    return json{{"g_hz", {gx, 0.0, 0.0}}, {"omega_s_hz", f}, {"phi_s_rad", phi}};
}
}  // namespace detail

/** Ready-made configs, keyed by name. */
inline std::map<std::string, json> presets() {
    using detail::base;
    using detail::ccdd_drive;
    using detail::resonant_signal;
    const double pi = std::numbers::pi;
    std::map<std::string, json> p;

    {
        json j = base("rabi", "CCDD Rabi trace, theta_m = pi/2, resonant 2 MHz signal at phi_s = 0");
        j["drive"] = ccdd_drive(pi / 2);
        j["signal"] = resonant_signal(2e6);
        j["experiment"] = {{"pulsewidth_end_s", 3e-6}, {"pulsewidth_step_s", 1e-9}};
        j["timing"] = {{"T_rep_s", 10e-6}};  // a 3 us pulse plus the laser does not fit 5 us
        j["output_dir"] = "ccdd-out/fig2a";
        p["fig2a"] = j;
    }
    {
        json j = base("rabi", "Phase-insensitive CCDD Rabi trace, theta_m = 0, resonant 2 MHz signal");
        j["drive"] = ccdd_drive(0.0);
        j["signal"] = resonant_signal(2e6);
        j["experiment"] = {{"pulsewidth_end_s", 3e-6}, {"pulsewidth_step_s", 1e-9}};
        j["timing"] = {{"T_rep_s", 10e-6}};  // a 3 us pulse plus the laser does not fit 5 us
        j["output_dir"] = "ccdd-out/fig2e";
        p["fig2e"] = j;
    }
    {
        json j = base("sensitivity", "Contrast vs signal amplitude at T_MW = 950 ns, theta_m = pi/2, phi_s = 0");
        j["drive"] = ccdd_drive(pi / 2);
        j["signal"] = resonant_signal(0.0);
        std::vector<double> v;
        for (int i = 0; i <= 20; ++i) v.push_back(i * 0.1e6);
        j["experiment"] = {{"values", v}, {"n_repeats", 10}, {"averages", 100000}};
        j["output_dir"] = "ccdd-out/fig3a";
        p["fig3a"] = j;
    }
    {
        json j = base("phase-sensitivity", "Phase sensitivity vs signal amplitude around 35 uT, theta_m = pi/2");
        j["drive"] = ccdd_drive(pi / 2);
        j["signal"] = resonant_signal(0.0);
        std::vector<double> a;
        for (int i = 1; i <= 12; ++i) a.push_back(i * 0.2e6);
        j["experiment"] = {{"amplitudes_hz", a}, {"n_phases", 16}, {"n_repeats", 10}, {"averages", 100000}};
        j["output_dir"] = "ccdd-out/fig3d";
        p["fig3d"] = j;
    }
    {
        json j = base("heterodyne", "Quantum heterodyne: 2310.008 MHz signal against the 2310 MHz clock, 10 s");
        j["drive"] = ccdd_drive(pi / 2);
        j["signal"] = resonant_signal(1e6, 0.0, 2310.008e6);
        j["experiment"] = {{"t_m_s", 10.0}, {"phi0_rad", 0.0}, {"n_grid", 64}, {"autocorrelation", true}};
        j["output_dir"] = "ccdd-out/fig4c";
        p["fig4c"] = j;
    }
    {
        json j = base("snr-scaling", "Heterodyne SNR against measurement time, with and without autocorrelation");
        j["drive"] = ccdd_drive(pi / 2);
        j["signal"] = resonant_signal(1e6, 0.0, 2310.008e6);
        j["experiment"] = {{"t_m_list_s", {0.5, 1.0, 2.0, 5.0, 10.0}}, {"n_grid", 64}, {"write_photons", false}};
        j["output_dir"] = "ccdd-out/fig4d";
        p["fig4d"] = j;
    }
    {
        json j = base("rabi", "Alternative resonance: signal at omega0 - Omega + epsilon_m = 2.23 GHz, theta_m = pi/2");
        j["drive"] = ccdd_drive(pi / 2);
        j["signal"] = resonant_signal(2e6, 0.0, 2.23e9);
        j["experiment"] = {{"pulsewidth_end_s", 3e-6}, {"pulsewidth_step_s", 1e-9}};
        j["timing"] = {{"T_rep_s", 10e-6}};  // a 3 us pulse plus the laser does not fit 5 us
        j["output_dir"] = "ccdd-out/si-fig3";
        p["si-fig3"] = j;
    }
    {
        json j = base("phase-sweep", "Short-pulse mode: T_MW = 1/(epsilon_m - g_x) with a 2.5 us repetition");
        j["drive"] = ccdd_drive(pi / 2);
        j["signal"] = resonant_signal(2e6);
        j["timing"] = {{"T_MW_s", 125e-9}, {"delta_T_s", 5e-9}, {"T_rep_s", 2.5e-6}};
        std::vector<double> v;
        for (int i = 0; i < 32; ++i) v.push_back(2 * pi * i / 32.0);
        j["experiment"] = {{"values", v}, {"n_repeats", 10}, {"averages", 100000}, {"find_antinode", false}};
        j["output_dir"] = "ccdd-out/si-fig6";
        p["si-fig6"] = j;
    }
    return p;
}

}  // namespace ccdd::cli
