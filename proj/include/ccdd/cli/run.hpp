#pragma once

/**
 * @file  run.hpp
 * @brief Experiment runner behind ccdd-sense.
 *
 * run_experiment computes everything in memory and returns the files to
 * write; nothing touches the disk until the run has succeeded. Every file
 * carries the config hash: CSVs in a leading "# config_hash=" line, JSON in
 * a "config_hash" field, SVGs in an XML comment.
 */

#include "ccdd/cli/config.hpp"
#include "ccdd/cli/svg.hpp"
#include "ccdd/dsp.hpp"
#include "ccdd/dynamics.hpp"
#include "ccdd/sequences.hpp"
#include "ccdd/wavegen.hpp"

#include <fftw3.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace ccdd::cli {

inline constexpr const char* library_version = "0.1.0";

struct run_output {
    std::map<std::string, std::string> files;  // relative name -> content
    json summary;                              // echoed in the manifest
};

namespace detail {
inline std::string hash_line(const std::string& hash) { return "# config_hash=" + hash + "\n"; }

template <class Writer>
std::string csv(const std::string& hash, Writer&& w) {
    std::ostringstream os;
    os << hash_line(hash);
    w(os);
    return os.str();
}

inline std::string dump(json j, const std::string& hash) {
    j["config_hash"] = hash;
    return j.dump(2) + "\n";
}

inline json peak_json(const spectrum_result& s) {
    return json{{"f0_hz", s.peak.f0},          {"fwhm_hz", s.peak.fwhm},     {"snr", s.peak.snr},
                {"baseline_std", s.peak.baseline_std}, {"threshold", s.peak.threshold}, {"method", s.peak.method}, {"detected", s.peak.detected},
                {"bin_width_hz", s.bin_width()}};
}

inline json report_json(const sensitivity_report& r) {
    json j{{"slope", r.slope}, {"S", r.S}, {"t_m", r.t_m}, {"fit_points", r.fit_points}};
    if (r.phase) {
        j["eta"] = nullptr;
        j["eta_phi"] = r.eta;
    } else {
        j["eta"] = r.eta;
        j["eta_phi"] = nullptr;
        j["slope_per_hz"] = r.slope_per_hz;
    }
    return j;
}

inline std::vector<double> sub_mean(std::vector<double> v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double& x : v) x -= m;
    return v;
}
}  // namespace detail

/** Physical and hardware checks that must pass before any computation (physics_error, exit 3). */
inline void validate_physics(const experiment_config& c) {
    c.drive.validate();
    if (c.kind == "resonances" || c.kind == "bloch") return;
    c.timing.validate(c.readout, c.drive);
    if (c.wavegen_check) {
        c.wavegen.validate();
        std::vector<double> tones = drive_tones(c.drive);
        if (!c.signal.is_zero()) tones.push_back(c.signal.omega_s.hz());
        require_on_grid(tones, c.wavegen);
        if (c.drive.omega0.hz() + c.drive.omega_m.hz() > 0.5 * c.wavegen.sample_rate ||
            c.signal.omega_s.hz() > 0.5 * c.wavegen.sample_rate) {
            throw nyquist_error("a drive or signal component exceeds the AWG Nyquist frequency");
        }
    }
    if (c.kind == "heterodyne" || c.kind == "snr-scaling") {
        check_heterodyne_nyquist(heterodyne_detuning(c.drive, c.signal), c.timing.T_rep);
    }
}

namespace detail {

inline noise_config seeded_noise(const experiment_config& c) {
    noise_config n = c.noise;
    n.seed = c.seed;
    return n;
}

inline sequence_timing resolved_timing(const experiment_config& c) {
    sequence_timing t = c.timing;
    if (c.experiment.find_antinode) t.T_MW = find_rabi_antinode(c.drive, t.T_MW, c.simulation);
    return t;
}

inline void run_rabi_kind(const experiment_config& c, const std::string& h, bool plots, run_output& out) {
    const auto& x = c.experiment;
    const auto grid = pulsewidth_grid(x.pulsewidth_end, x.pulsewidth_step);
    const auto r = run_rabi(c.drive, c.signal, seeded_noise(c), c.readout, c.timing, grid, c.simulation, x.shots,
                            x.n_repeats);
    auto spec = spectrum(sub_mean(r.mean), x.pulsewidth_step);
    out.files["rabi.csv"] = csv(h, [&](std::ostream& os) { write_csv(os, r); });
    out.files["rabi_fft.csv"] = csv(h, [&](std::ostream& os) { write_spectrum_csv(os, spec); });
    // strongest line above 5 MHz, for the manifest
    std::size_t best = 0;
    for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
        if (spec.freqs[k] > 5e6 && spec.magnitude[k] > spec.magnitude[best]) best = k;
    }
    out.summary["dominant_line_hz"] = spec.freqs.empty() ? 0.0 : spec.freqs[best];
    if (plots) {
        std::vector<double> us, mhz;
        for (double t : r.values) us.push_back(t * 1e6);
        for (double f : spec.freqs) mhz.push_back(f * 1e-6);
        out.files["rabi.svg"] = render_svg({"CCDD Rabi trace", "T_MW (us)", "C_dT", {{us, r.mean}}}, "config_hash=" + h);
        out.files["rabi_fft.svg"] =
            render_svg({"Rabi spectrum", "frequency (MHz)", "|FFT|", {{mhz, spec.magnitude}}}, "config_hash=" + h);
    }
}

inline sweep_result fixed_sweep(const experiment_config& c, const sequence_timing& t, sweep_axis axis) {
    fixed_point_options opt;
    opt.averages = c.experiment.averages;
    opt.seed = splitmix64(c.seed ^ 0x5EE9ULL);
    return run_fixed_point_sweep(c.drive, c.signal, seeded_noise(c), c.readout, t, axis, c.experiment.values,
                                 c.experiment.n_repeats, c.simulation, opt);
}

inline void sweep_files(const sweep_result& r, const std::string& name, const std::string& h, bool plots,
                        run_output& out) {
    out.files[name + ".csv"] = csv(h, [&](std::ostream& os) { write_csv(os, r); });
    if (plots) {
        const auto& y = r.delta_mean.empty() ? r.mean : r.delta_mean;
        const std::string xl = r.axis == sweep_axis::amplitude ? "g_x (Hz)" : "phi_s (rad)";
        out.files[name + ".svg"] =
            render_svg({name, xl, r.delta_mean.empty() ? "C_0" : "Delta C_0", {{r.values, y, "#1f77b4", true}}},
                       "config_hash=" + h);
    }
}

inline void run_sweep_kind(const experiment_config& c, const std::string& h, bool plots, run_output& out) {
    const auto t = resolved_timing(c);
    out.summary["T_MW_s"] = t.T_MW;
    if (c.kind == "phase-sweep") {
        const auto r = fixed_sweep(c, t, sweep_axis::phase);
        sweep_files(r, "phase_sweep", h, plots, out);
        return;
    }
    const auto r = fixed_sweep(c, t, sweep_axis::amplitude);
    sweep_files(r, c.kind == "sensitivity" ? "sensitivity_sweep" : "amp_sweep", h, plots, out);
    if (c.kind == "sensitivity") {
        const auto rep = compute_sensitivity(r, r.t_m, c.constants);
        json j = report_json(rep);
        j["T_MW_s"] = t.T_MW;
        j["eta_uT_per_rtHz"] = rep.eta * 1e6;
        out.files["sensitivity.json"] = dump(j, h);
        out.summary["eta_T_per_rtHz"] = rep.eta;
    }
}

inline void run_phase_sensitivity_kind(const experiment_config& c, const std::string& h, bool plots, run_output& out) {
    const auto t = resolved_timing(c);
    const auto& x = c.experiment;
    fixed_point_options opt;
    opt.averages = x.averages;
    opt.seed = splitmix64(c.seed ^ 0x9A5EULL);
    const double t_m = 2.0 * static_cast<double>(x.averages) * t.T_rep;
    const auto curve = compute_phase_sensitivity_curve(c.drive, c.signal, seeded_noise(c), c.readout, t, x.amplitudes,
                                                       t_m, x.n_phases, x.n_repeats, c.simulation, opt);
    out.files["phase_sensitivity.csv"] = csv(h, [&](std::ostream& os) {
        os << "g_hz,field_t,eta_phi\n";
        os.precision(12);
        for (std::size_t i = 0; i < curve.amplitudes.size(); ++i) {
            os << curve.amplitudes[i] << ',' << rabi_to_field(frequency(curve.amplitudes[i]), c.constants).value << ','
               << curve.eta_phi[i] << '\n';
        }
    });
    const double best_b = rabi_to_field(frequency(curve.best_amplitude()), c.constants).value;
    json j{{"eta", nullptr},
           {"eta_phi", curve.best_eta()},
           {"best_g_hz", curve.best_amplitude()},
           {"best_field_t", best_b},
           {"t_m", t_m},
           {"T_MW_s", t.T_MW}};
    out.files["phase_sensitivity.json"] = dump(j, h);
    out.summary["eta_phi_min"] = curve.best_eta();
    out.summary["best_field_t"] = best_b;
    if (plots) {
        std::vector<double> ut;
        for (double g : curve.amplitudes) ut.push_back(rabi_to_field(frequency(g), c.constants).value * 1e6);
        out.files["phase_sensitivity.svg"] = render_svg(
            {"Phase sensitivity", "B_s (uT)", "eta_phi (rad/rtHz)", {{ut, curve.eta_phi, "#d62728", true}}},
            "config_hash=" + h);
    }
}

inline void spectrum_files(const spectrum_result& s, const std::string& name, const std::string& h, bool plots,
                           run_output& out) {
    out.files[name + ".csv"] = csv(h, [&](std::ostream& os) { write_spectrum_csv(os, s); });
    if (plots) {
        // window around the peak, with the fitted Gaussian on top
        std::vector<double> f, m, fit;
        const double half = std::max(20.0 * s.peak.fwhm, 50.0 * s.bin_width());
        const double sig = s.peak.fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
        for (std::size_t k = 0; k < s.freqs.size(); ++k) {
            if (std::abs(s.freqs[k] - s.peak.f0) > half) continue;
            f.push_back(s.freqs[k]);
            m.push_back(s.magnitude[k]);
            const double u = sig > 0.0 ? (s.freqs[k] - s.peak.f0) / sig : 0.0;
            fit.push_back(s.peak.offset + s.peak.height * std::exp(-0.5 * u * u));
        }
        out.files[name + ".svg"] =
            render_svg({"Spectrum near the tone", "frequency (Hz)", "magnitude", {{f, m}, {f, fit, "#d62728"}}},
                       "config_hash=" + h);
    }
}

inline void run_heterodyne_kind(const experiment_config& c, const std::string& h, bool plots, run_output& out) {
    const auto t = resolved_timing(c);
    const auto& x = c.experiment;
    heterodyne_options opt;
    opt.phi0 = x.phi0;
    opt.n_grid = x.n_grid;
    opt.seed = splitmix64(c.seed ^ 0x4E7E0ULL);
    const auto run = run_heterodyne(c.drive, c.signal, seeded_noise(c), c.readout, t, x.t_m, opt, c.simulation);
    const auto spec = analyze_heterodyne(run.trace, {x.autocorrelation, x.pad, 0.0});
    json peak = peak_json(spec);
    peak["detuning_hz"] = run.detuning;
    peak["expected_f0_hz"] = 2.0 * std::abs(run.detuning);
    peak["readouts"] = run.trace.counts.size();
    peak["response_peak_to_peak"] = run.response.peak_to_peak();
    out.files["peak.json"] = dump(peak, h);
    spectrum_files(spec, "spectrum", h, plots, out);
    out.files["phase_response.csv"] = csv(h, [&](std::ostream& os) {
        os << "phi_rad,sz\n";
        os.precision(12);
        for (std::size_t i = 0; i < run.response.phis.size(); ++i) os << run.response.phis[i] << ',' << run.response.sz[i] << '\n';
    });
    if (x.write_photons) {
        out.files["photons.csv"] =
            csv(h, [&](std::ostream& os) { write_photon_csv(os, run.trace.counts, run.trace.dt, run.trace.t0); });
    }
    out.summary["f0_hz"] = spec.peak.f0;
    out.summary["fwhm_hz"] = spec.peak.fwhm;
    out.summary["snr"] = spec.peak.snr;
}

inline void run_snr_kind(const experiment_config& c, const std::string& h, bool plots, run_output& out) {
    const auto t = resolved_timing(c);
    const auto& x = c.experiment;
    const auto noise = seeded_noise(c);
    const double delta = heterodyne_detuning(c.drive, c.signal);
    signal_config on_res = c.signal;
    on_res.omega_s = c.drive.omega0 - c.drive.epsilon_m;
    const auto R = phase_response_curve(c.drive, on_res, noise, t.T_MW, x.n_grid, c.simulation);
    std::vector<scaling_point> with_acf, without;
    for (std::size_t i = 0; i < x.t_m_list.size(); ++i) {
        const double reps = x.t_m_list[i] / t.T_rep;
        if (!(reps >= 2.0) || std::abs(reps - std::round(reps)) > 1e-6) {
            throw timing_error("every t_m must be a multiple of T_rep");
        }
        const auto tr = heterodyne_photons(R, delta, c.readout, noise, t, static_cast<std::size_t>(std::llround(reps)),
                                           x.phi0, splitmix64(c.seed ^ (0x5C41ULL + i)));
        with_acf.push_back({x.t_m_list[i], analyze_heterodyne(tr, {true, x.pad, 0.0}).peak.snr});
        without.push_back({x.t_m_list[i], analyze_heterodyne(tr, {false, x.pad, 0.0}).peak.snr});
    }
    out.files["snr.csv"] = csv(h, [&](std::ostream& os) {
        os << "t_m_s,snr_autocorrelation,snr_direct\n";
        os.precision(12);
        for (std::size_t i = 0; i < with_acf.size(); ++i) {
            os << with_acf[i].t_m << ',' << with_acf[i].snr << ',' << without[i].snr << '\n';
        }
    });
    json j{{"exponent_autocorrelation", snr_scaling_fit(with_acf)}, {"exponent_direct", snr_scaling_fit(without)}};
    out.files["snr_scaling.json"] = dump(j, h);
    out.summary["exponent_autocorrelation"] = j["exponent_autocorrelation"];
    out.summary["exponent_direct"] = j["exponent_direct"];
    if (plots) {
        std::vector<double> lt, la, ld;
        for (std::size_t i = 0; i < with_acf.size(); ++i) {
            lt.push_back(std::log10(with_acf[i].t_m));
            la.push_back(std::log10(with_acf[i].snr));
            ld.push_back(std::log10(without[i].snr));
        }
        out.files["snr.svg"] = render_svg({"SNR scaling", "log10 t_m (s)", "log10 SNR",
                                           {{lt, la, "#1f77b4", true}, {lt, ld, "#d62728", true}}},
                                          "config_hash=" + h);
    }
}

inline void run_resonances_kind(const experiment_config& c, const std::string& h, run_output& out) {
    const auto m = compute_resonance_map(c.drive);
    json xy = json::array(), z = json::array();
    for (const auto& f : m.xy_resonances) xy.push_back(f.hz());
    for (const auto& f : m.z_resonances) z.push_back(f.hz());
    out.files["resonances.json"] = dump(json{{"xy_hz", xy}, {"z_hz", z}}, h);
    out.summary["xy_hz"] = xy;
}

inline void run_bloch_kind(const experiment_config& c, const std::string& h, bool plots, run_output& out) {
    const auto& x = c.experiment;
    const bloch_vector up{{0.0, 0.0, 1.0}, frame::double_rotating};
    bloch_trajectory tr;
    if (x.frame == "double_rotating") {
        const auto branch = parse_branch(x.branch);
        const double dt = c.simulation.max_step > 0.0 ? c.simulation.max_step : default_rotating_step(c.drive);
        tr = propagate_rotation([&](double t) { return double_rot_field(c.drive, c.signal, t, branch).h; }, up,
                                grid_for(x.duration, dt, x.sample_dt));
    } else if (x.frame == "single_rotating") {
        const double dt = c.simulation.max_step > 0.0 ? c.simulation.max_step : default_rotating_step(c.drive);
        tr = propagate_rotation([&](double t) { return single_rot_field(c.drive, c.signal, t).h; },
                                bloch_vector{{0.0, 0.0, 1.0}, frame::single_rotating}, grid_for(x.duration, dt, x.sample_dt));
    } else {
        tr = propagate_rotation([&](double t) { return lab_field(c.drive, c.signal, t).h; },
                                bloch_vector{{0.0, 0.0, 1.0}, frame::lab},
                                grid_for(x.duration, default_lab_step(c.drive, c.signal), x.sample_dt));
    }
    out.files["trajectory.csv"] = csv(h, [&](std::ostream& os) { write_csv(os, tr); });
    if (plots) {
        std::vector<double> xs, ys, zs;
        for (const auto& v : tr.vectors) {
            xs.push_back(v.x);
            ys.push_back(v.y);
            zs.push_back(v.z);
        }
        out.files["bloch_xy.svg"] = render_svg({"Bloch projection", "x", "y", {{xs, ys}}}, "config_hash=" + h);
        out.files["bloch_yz.svg"] = render_svg({"Bloch projection", "y", "z", {{ys, zs}}}, "config_hash=" + h);
        out.files["bloch_xz.svg"] = render_svg({"Bloch projection", "x", "z", {{xs, zs}}}, "config_hash=" + h);
    }
}

}  // namespace detail

/** Runs the experiment; throws config_error / physics_error / other on failure. */
inline run_output run_experiment(const experiment_config& c, bool plots) {
    validate_schema(c);
    validate_physics(c);
    const std::string h = config_hash(c);
    run_output out;
    if (c.kind == "rabi") detail::run_rabi_kind(c, h, plots, out);
    else if (c.kind == "amp-sweep" || c.kind == "phase-sweep" || c.kind == "sensitivity") detail::run_sweep_kind(c, h, plots, out);
    else if (c.kind == "phase-sensitivity") detail::run_phase_sensitivity_kind(c, h, plots, out);
    else if (c.kind == "heterodyne") detail::run_heterodyne_kind(c, h, plots, out);
    else if (c.kind == "snr-scaling") detail::run_snr_kind(c, h, plots, out);
    else if (c.kind == "resonances") detail::run_resonances_kind(c, h, out);
    else if (c.kind == "bloch") detail::run_bloch_kind(c, h, plots, out);

    json manifest{{"config_hash", h},
                  {"seed", c.seed},
                  {"kind", c.kind},
                  {"library_version", library_version},
                  {"fftw_version", std::string(fftw_version)},
                  {"compiler", __VERSION__},
                  {"config", to_json(c)},
                  {"results", out.summary}};
    json files = json::array();
    for (const auto& [name, _] : out.files) files.push_back(name);
    files.push_back("manifest.json");
    manifest["files"] = files;
    manifest["config"].erase("output_dir");
    out.files["manifest.json"] = manifest.dump(2) + "\n";
    out.summary = manifest;
    return out;
}

/** Writes every file into dir (created if needed). */
inline void write_outputs(const run_output& out, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : out.files) {
        std::ofstream f(dir / name, std::ios::binary);
        f << content;
        if (!f) throw std::runtime_error("failed to write " + (dir / name).string());
    }
}

/** Config hash embedded in an output file, or "" when none is found. */
inline std::string embedded_hash(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string key = "config_hash";
    const auto pos = text.find(key);
    if (pos == std::string::npos) return "";
    std::size_t i = pos + key.size();
    while (i < text.size() && (text[i] == '=' || text[i] == '"' || text[i] == ':' || text[i] == ' ')) ++i;
    std::size_t j = i;
    while (j < text.size() && std::isxdigit(static_cast<unsigned char>(text[j]))) ++j;
    return text.substr(i, j - i);
}

/** Files under dir whose embedded hash differs from `hash` (or is missing). */
inline std::vector<std::string> mismatched_outputs(const std::filesystem::path& dir, const std::string& hash) {
    std::vector<std::string> bad;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        if (embedded_hash(e.path()) != hash) bad.push_back(e.path().filename().string());
    }
    std::sort(bad.begin(), bad.end());
    return bad;
}

}  // namespace ccdd::cli
