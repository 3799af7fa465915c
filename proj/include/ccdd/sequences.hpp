#pragma once

/**
 * @file  sequences.hpp
 * @brief Pulse sequences: Rabi sweeps, fixed-pulsewidth sweeps, sensitivity
 *        estimates and the heterodyne photon-trace generator.
 *
 * Every sequence starts from sz = +1 (optical re-initialization) with the
 * drive and signal switched on together at t = 0; the readout takes the
 * lab-frame z projection at the end of the microwave pulse.
 */

#include "ccdd/dsp.hpp"
#include "ccdd/dynamics.hpp"
#include "ccdd/noise.hpp"
#include "ccdd/parallel.hpp"
#include "ccdd/readout.hpp"
#include "ccdd/spin_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

namespace ccdd {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/**
 * single_rotating keeps the phase-modulated drive exactly (only the 2 omega0
 * terms are dropped); double_rotating uses the static-field model with one
 * signal branch.
 */
enum class sequence_model { single_rotating, double_rotating };

inline std::string_view to_string(sequence_model m) {
    return m == sequence_model::single_rotating ? "single_rotating" : "double_rotating";
}

inline sequence_model parse_sequence_model(std::string_view s) {
    if (s == "single_rotating") return sequence_model::single_rotating;
    if (s == "double_rotating") return sequence_model::double_rotating;
    throw config_error("unknown sequence model '" + std::string(s) + "'");
}

struct simulation_config {
    sequence_model model = sequence_model::single_rotating;
    std::size_t n_realizations = 200;
    double max_step = 0.0;  // s; 0 = default_rotating_step
};

struct sequence_timing {
    double T_MW = 950e-9;
    double delta_T = 5e-9;
    double T_rep = 5e-6;
    bool t1_cancellation = true;  // requires delta_T = pi / omega_m

    double idle(const readout_config& r) const { return T_rep - T_MW - delta_T - r.laser_init; }

    void validate(const readout_config& r, const drive_config& d) const {
        if (!(T_MW >= 0.0) || !(delta_T >= 0.0) || !(T_rep > 0.0)) throw timing_error("timings must be non-negative");
        if (idle(r) < -1e-15) throw timing_error("T_MW + delta_T + laser_init exceeds T_rep");
        if (t1_cancellation) {
            const double half = std::numbers::pi / d.omega_m.angular();
            if (std::abs(delta_T - half) > 1e-9 * half) {
                throw timing_error("delta_T must equal pi/omega_m when T1 cancellation is on");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Lab-frame z sampling
// ---------------------------------------------------------------------------

namespace detail {
inline resonance_branch branch_for(const signal_config& s) {
    const int n = (s.g.x > 0.0) + (s.g.y > 0.0) + (s.g.z > 0.0);
    if (n == 0) return resonance_branch::none;
    if (n > 1) throw config_error("the double rotating model takes one signal axis at a time");
    return s.g.x > 0.0 ? resonance_branch::x : s.g.y > 0.0 ? resonance_branch::y : resonance_branch::z;
}

template <class FieldFn>
vec3 advance(FieldFn&& field, vec3 s, double t0, double t1, double max_dt) {
    if (t1 <= t0) return s;
    const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / max_dt - 1e-9));
    const double dt = (t1 - t0) / static_cast<double>(std::max<std::size_t>(steps, 1));
    for (std::size_t n = 0; n < std::max<std::size_t>(steps, 1); ++n) {
        const double tm = t0 + (static_cast<double>(n) + 0.5) * dt;
        const vec3 h = field(tm);
        const double w = norm(h);
        check_angle(w * dt, tm);
        if (w > 0.0) s = rotate(s, h * (1.0 / w), w * dt);
    }
    return s;
}
}  // namespace detail

/**
 * Lab-frame sz at each of the sorted times, starting from +z at t = 0 for a
 * single disorder realization.
 */
inline std::vector<double> lab_sz_at(const drive_config& d, const signal_config& s, const disorder_realization& dis,
                                     const std::vector<double>& times, const simulation_config& sim) {
    if (!std::is_sorted(times.begin(), times.end())) throw config_error("sample times must be sorted");
    if (!times.empty() && times.front() < 0.0) throw config_error("sample times must be non-negative");
    const double max_dt = sim.max_step > 0.0 ? sim.max_step : default_rotating_step(d);
    std::vector<double> out(times.size());
    vec3 v{0.0, 0.0, 1.0};
    double t = 0.0;
    if (sim.model == sequence_model::single_rotating) {
        auto field = [&](double tm) { return single_rot_field(d, s, tm, dis).h; };
        for (std::size_t i = 0; i < times.size(); ++i) {
            v = detail::advance(field, v, t, times[i], max_dt);
            t = std::max(t, times[i]);
            out[i] = v.z;
        }
    } else {
        const resonance_branch b = detail::branch_for(s);
        auto field = [&](double tm) { return double_rot_field(d, s, tm, b, dis).h; };
        for (std::size_t i = 0; i < times.size(); ++i) {
            v = detail::advance(field, v, t, times[i], max_dt);
            t = std::max(t, times[i]);
            out[i] = lab_z_from_double(v, times[i], d);
        }
    }
    return out;
}

/** Ensemble mean of lab_sz_at. */
inline ensemble_trace ensemble_sz(const drive_config& d, const signal_config& s, const noise_config& noise,
                                  const std::vector<double>& times, const simulation_config& sim) {
    return ensemble_average([&](const disorder_realization& r) { return lab_sz_at(d, s, r, times, sim); }, noise,
                            sim.n_realizations);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

enum class sweep_axis { pulsewidth, amplitude, phase };

inline std::string_view to_string(sweep_axis a) {
    switch (a) {
        case sweep_axis::pulsewidth: return "pulsewidth";
        case sweep_axis::amplitude: return "amplitude";
        case sweep_axis::phase: return "phase";
    }
    return "pulsewidth";
}

struct sweep_result {
    sweep_axis axis = sweep_axis::pulsewidth;
    std::vector<double> values;      // s | Hz | rad
    std::vector<double> sz;          // ensemble-mean lab sz at the readout
    std::vector<double> mean;        // contrast (C_dT for Rabi, C_0 otherwise)
    std::vector<double> std;         // per-point std over repeats
    std::vector<double> delta_mean;  // amplitude sweeps: C_0(g) - C_0(0)
    std::vector<double> delta_std;
    std::size_t n_repeats = 1;
    double t_m = 0.0;  // measurement time behind one repeat of one point, s

    std::size_t size() const { return values.size(); }
};

inline void write_csv(std::ostream& os, const sweep_result& r) {
    const bool delta = !r.delta_mean.empty();
    os << to_string(r.axis) << ",sz,contrast,contrast_std";
    if (delta) os << ",delta_contrast,delta_std";
    os << '\n';
    os.precision(12);
    for (std::size_t i = 0; i < r.size(); ++i) {
        os << r.values[i] << ',' << r.sz[i] << ',' << r.mean[i] << ',' << r.std[i];
        if (delta) os << ',' << r.delta_mean[i] << ',' << r.delta_std[i];
        os << '\n';
    }
}

/**
 * Rabi sweep with the dT-referenced contrast. shots = 0 returns the
 * expectation values; otherwise each point is estimated from `shots`
 * readout pairs with Poisson statistics over n_repeats repeats.
 */
inline sweep_result run_rabi(const drive_config& d, const signal_config& s, const noise_config& noise,
                             const readout_config& ro, const sequence_timing& timing,
                             const std::vector<double>& pulsewidths, const simulation_config& sim = {},
                             std::uint64_t shots = 0, std::size_t n_repeats = 1) {
    sweep_result res;
    res.axis = sweep_axis::pulsewidth;
    if (pulsewidths.empty()) return res;
    if (!std::is_sorted(pulsewidths.begin(), pulsewidths.end()) || pulsewidths.front() < 0.0) {
        throw config_error("pulsewidths must be sorted and non-negative");
    }
    sequence_timing check = timing;
    check.T_MW = pulsewidths.back();
    check.validate(ro, d);

    std::vector<double> times;
    times.reserve(2 * pulsewidths.size());
    for (double T : pulsewidths) {
        times.push_back(T);
        times.push_back(T + timing.delta_T);
    }
    std::sort(times.begin(), times.end());
    const auto avg = ensemble_sz(d, s, noise, times, sim).mean;
    auto sz_at = [&](double t) {
        const auto it = std::lower_bound(times.begin(), times.end(), t);
        return avg[static_cast<std::size_t>(it - times.begin())];
    };

    res.values = pulsewidths;
    res.n_repeats = shots == 0 ? 1 : n_repeats;
    res.t_m = 2.0 * static_cast<double>(shots) * timing.T_rep;
    for (std::size_t i = 0; i < pulsewidths.size(); ++i) {
        const double T = pulsewidths[i];
        const double a = std::clamp(sz_at(T), -1.0, 1.0);
        const double b = std::clamp(sz_at(T + timing.delta_T), -1.0, 1.0);
        const double la = decayed_rate(a, T, noise.T1, ro);
        const double lb = decayed_rate(b, T + timing.delta_T, noise.T1, ro);
        res.sz.push_back(a);
        if (shots == 0) {
            res.mean.push_back(contrast_delta_t(la, lb));
            res.std.push_back(0.0);
            continue;
        }
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t r = 0; r < n_repeats; ++r) {
            photon_stream ps(make_stream(noise.seed ^ 0xA5A5u, i * n_repeats + r));
            const double pa = static_cast<double>(ps.sample_sum(la, shots));
            const double pb = static_cast<double>(ps.sample_sum(lb, shots));
            const double c = contrast_delta_t(pa, pb);
            sum += c;
            sum2 += c * c;
        }
        const auto n = static_cast<double>(n_repeats);
        const double m = sum / n;
        res.mean.push_back(m);
        res.std.push_back(n > 1 ? std::sqrt(std::max(0.0, (sum2 - n * m * m) / (n - 1.0))) : 0.0);
    }
    return res;
}

/** Uniform pulsewidth grid [0, t_end] with spacing dt. */
inline std::vector<double> pulsewidth_grid(double t_end, double dt) {
    std::vector<double> v;
    const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t i = 0; i <= n; ++i) v.push_back(static_cast<double>(i) * dt);
    return v;
}

/**
 * Local extremum of the noiseless, signal-free lab sz trace nearest to
 * `target`: the fixed readout point of the sensing sequences.
 */
inline double find_rabi_antinode(const drive_config& d, double target = 950e-9, const simulation_config& sim = {},
                                 double window = 4e-9, double resolution = 0.05e-9) {
    std::vector<double> times;
    for (double t = std::max(0.0, target - window); t <= target + window + 1e-15; t += resolution) times.push_back(t);
    simulation_config one = sim;
    one.n_realizations = 1;
    const auto z = lab_sz_at(d, signal_config{}, disorder_realization{}, times, one);
    double best = target;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < z.size(); ++i) {
        const bool peak = (z[i] >= z[i - 1] && z[i] >= z[i + 1]) || (z[i] <= z[i - 1] && z[i] <= z[i + 1]);
        if (peak && std::abs(times[i] - target) < best_dist) {
            best = times[i];
            best_dist = std::abs(times[i] - target);
        }
    }
    return best;
}

struct fixed_point_options {
    std::uint64_t averages = 100000;  // readout pairs per repeat
    std::uint64_t seed = 7;
};

/**
 * C_0 at fixed T_MW across signal amplitudes (Hz, g_x) or phases (rad).
 * Each repeat draws P_T and P_0 from `averages` readouts; amplitude sweeps
 * also draw a fresh g = 0 reference per repeat for Delta C_0.
 */
inline sweep_result run_fixed_point_sweep(const drive_config& d, const signal_config& signal_template,
                                          const noise_config& noise, const readout_config& ro,
                                          const sequence_timing& timing, sweep_axis axis,
                                          const std::vector<double>& values, std::size_t n_repeats,
                                          const simulation_config& sim = {}, const fixed_point_options& opt = {}) {
    if (axis == sweep_axis::pulsewidth) throw config_error("fixed-point sweeps take amplitude or phase axes");
    if (n_repeats == 0) throw config_error("n_repeats must be positive");
    timing.validate(ro, d);

    auto sig_for = [&](double v) {
        signal_config s = signal_template;
        if (axis == sweep_axis::amplitude) s.g.x = v;
        else s = s.with_phase(v);
        return s;
    };
    const std::vector<double> at{timing.T_MW};
    std::vector<double> sz(values.size());
    // One ensemble per value; the inner ensemble parallelizes over realizations.
    for (std::size_t i = 0; i < values.size(); ++i) {
        sz[i] = std::clamp(ensemble_sz(d, sig_for(values[i]), noise, at, sim).mean[0], -1.0, 1.0);
    }
    const bool delta = axis == sweep_axis::amplitude;
    double sz0 = 0.0;
    if (delta) {
        signal_config zero = signal_template;
        zero.g = {};
        sz0 = std::clamp(ensemble_sz(d, zero, noise, at, sim).mean[0], -1.0, 1.0);
    }

    const double lam0 = decayed_rate(1.0, timing.T_MW, noise.T1, ro);
    const double lam_ref = decayed_rate(sz0, timing.T_MW, noise.T1, ro);
    sweep_result res;
    res.axis = axis;
    res.values = values;
    res.sz = sz;
    res.n_repeats = n_repeats;
    res.t_m = 2.0 * static_cast<double>(opt.averages) * timing.T_rep;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double lam = decayed_rate(sz[i], timing.T_MW, noise.T1, ro);
        double s1 = 0.0, s2 = 0.0, d1 = 0.0, d2 = 0.0;
        for (std::size_t r = 0; r < n_repeats; ++r) {
            photon_stream ps(make_stream(opt.seed, i * n_repeats + r));
            const double c = contrast_zero(static_cast<double>(ps.sample_sum(lam, opt.averages)),
                                           static_cast<double>(ps.sample_sum(lam0, opt.averages)));
            s1 += c;
            s2 += c * c;
            if (delta) {
                const double c0 = contrast_zero(static_cast<double>(ps.sample_sum(lam_ref, opt.averages)),
                                                static_cast<double>(ps.sample_sum(lam0, opt.averages)));
                d1 += c - c0;
                d2 += (c - c0) * (c - c0);
            }
        }
        const auto n = static_cast<double>(n_repeats);
        auto sd = [n](double a, double b) {
            const double m = a / n;
            return n > 1 ? std::sqrt(std::max(0.0, (b - n * m * m) / (n - 1.0))) : 0.0;
        };
        res.mean.push_back(s1 / n);
        res.std.push_back(sd(s1, s2));
        if (delta) {
            res.delta_mean.push_back(d1 / n);
            res.delta_std.push_back(sd(d1, d2));
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Sensitivity
// ---------------------------------------------------------------------------

struct sensitivity_report {
    double eta = 0.0;           // T/sqrt(Hz) (amplitude) or rad/sqrt(Hz) (phase)
    double slope = 0.0;         // contrast per T, or per rad
    double slope_per_hz = 0.0;  // amplitude only
    double S = 0.0;             // std of the estimator at one point
    double t_m = 0.0;
    std::size_t fit_points = 0;
    bool phase = false;
};

namespace detail {
struct line_fit {
    double slope = 0.0;
    double intercept = 0.0;
};
inline line_fit fit_line(const std::vector<double>& x, const std::vector<double>& y, std::size_t n) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const auto m = static_cast<double>(n);
    const double den = m * sxx - sx * sx;
    if (!(den > 0.0)) throw unmeasurable_error("degenerate abscissa in linear fit");
    line_fit f;
    f.slope = (m * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / m;
    return f;
}

/** Index of the first extremum: the last point before the discrete derivative reverses beyond noise. */
inline std::size_t first_extremum(const std::vector<double>& y, const std::vector<double>& sd, std::size_t n_rep) {
    const std::size_t n = y.size();
    if (n < 3) return n - 1;
    const double rn = std::sqrt(static_cast<double>(std::max<std::size_t>(n_rep, 1)));
    auto tol = [&](std::size_t i) {
        const double a = i < sd.size() ? sd[i] : 0.0;
        const double b = i + 1 < sd.size() ? sd[i + 1] : 0.0;
        return 2.0 * std::sqrt(a * a + b * b) / rn;
    };
    int trend = 0;
    std::size_t best = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dy = y[i + 1] - y[i];
        if (std::abs(dy) <= tol(i)) continue;
        const int sgn = dy > 0.0 ? 1 : -1;
        if (trend == 0) trend = sgn;
        if (sgn != trend) return best;
        best = i + 1;
    }
    return n - 1;
}
}  // namespace detail

/**
 * Amplitude sensitivity eta = S / |dC/dB| * sqrt(t_m) from the linear
 * region of an amplitude sweep (values in Rabi Hz). S is the mean per-point
 * std of Delta C_0 across that region.
 */
inline sensitivity_report compute_sensitivity(const sweep_result& sweep, double t_m,
                                              const spin_system_constants& c = {}) {
    if (sweep.axis != sweep_axis::amplitude) throw config_error("compute_sensitivity needs an amplitude sweep");
    if (sweep.size() < 3) throw config_error("sensitivity needs at least three points");
    const auto& y = sweep.delta_mean.empty() ? sweep.mean : sweep.delta_mean;
    const auto& sd = sweep.delta_std.empty() ? sweep.std : sweep.delta_std;
    for (double v : sd) {
        if (!std::isfinite(v)) throw config_error("non-finite std in sweep");
    }
    const std::size_t ext = detail::first_extremum(y, sd, sweep.n_repeats);
    const std::size_t n = std::max<std::size_t>(ext + 1, 3);
    const auto fit = detail::fit_line(sweep.values, y, n);
    if (fit.slope == 0.0 || !std::isfinite(fit.slope)) throw unmeasurable_error("zero contrast slope");

    sensitivity_report rep;
    rep.fit_points = n;
    rep.slope_per_hz = fit.slope;
    rep.slope = fit.slope * c.gamma_e;  // dC/dB = dC/dg * gamma_e
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += sd[i];
    rep.S = s / static_cast<double>(n);
    rep.t_m = t_m;
    rep.eta = rep.S / std::abs(rep.slope) * std::sqrt(t_m);
    return rep;
}

/** Least-squares c0 + sum_{k=2,4} (a_k cos k phi + b_k sin k phi); returns {c0, a2, b2, a4, b4}. */
inline std::array<double, 5> fit_pi_periodic(const std::vector<double>& phi, const std::vector<double>& y) {
    if (phi.size() < 5) throw config_error("phase fit needs at least five points");
    std::array<std::array<double, 5>, 5> A{};
    std::array<double, 5> b{};
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const std::array<double, 5> f{1.0, std::cos(2 * phi[i]), std::sin(2 * phi[i]), std::cos(4 * phi[i]),
                                      std::sin(4 * phi[i])};
        for (int r = 0; r < 5; ++r) {
            b[r] += f[r] * y[i];
            for (int k = 0; k < 5; ++k) A[r][k] += f[r] * f[k];
        }
    }
    // Gaussian elimination with partial pivoting.
    for (int col = 0; col < 5; ++col) {
        int p = col;
        for (int r = col + 1; r < 5; ++r) {
            if (std::abs(A[r][col]) > std::abs(A[p][col])) p = r;
        }
        if (std::abs(A[p][col]) < 1e-12) throw unmeasurable_error("phase grid does not resolve the fit harmonics");
        std::swap(A[p], A[col]);
        std::swap(b[p], b[col]);
        for (int r = col + 1; r < 5; ++r) {
            const double f = A[r][col] / A[col][col];
            for (int k = col; k < 5; ++k) A[r][k] -= f * A[col][k];
            b[r] -= f * b[col];
        }
    }
    std::array<double, 5> x{};
    for (int r = 4; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < 5; ++k) s -= A[r][k] * x[k];
        x[r] = s / A[r][r];
    }
    return x;
}

/** max |dC/dphi| of the fitted period-pi response, over a dense grid. */
inline double max_phase_slope(const std::array<double, 5>& c) {
    double best = 0.0;
    for (int i = 0; i < 3600; ++i) {
        const double p = std::numbers::pi * i / 3600.0;
        const double d = -2 * c[1] * std::sin(2 * p) + 2 * c[2] * std::cos(2 * p) - 4 * c[3] * std::sin(4 * p) +
                         4 * c[4] * std::cos(4 * p);
        best = std::max(best, std::abs(d));
    }
    return best;
}

/** Phase sensitivity eta_phi = S / max|dC_0/dphi| * sqrt(t_m) from a phase sweep. */
inline sensitivity_report compute_phase_sensitivity(const sweep_result& sweep, double t_m) {
    if (sweep.axis != sweep_axis::phase) throw config_error("phase sensitivity needs a phase sweep");
    const auto coef = fit_pi_periodic(sweep.values, sweep.mean);
    const double slope = max_phase_slope(coef);
    if (!(slope > 0.0)) throw unmeasurable_error("no phase dependence in the sweep");
    sensitivity_report rep;
    rep.phase = true;
    rep.slope = slope;
    double s = 0.0;
    for (double v : sweep.std) s += v;
    rep.S = s / static_cast<double>(sweep.std.size());
    rep.t_m = t_m;
    rep.fit_points = sweep.size();
    rep.eta = rep.S / slope * std::sqrt(t_m);
    return rep;
}

struct phase_sensitivity_curve {
    std::vector<double> amplitudes;  // Hz
    std::vector<double> eta_phi;     // rad/sqrt(Hz); inf where unmeasurable
    std::size_t best_index = 0;

    double best_amplitude() const { return amplitudes.at(best_index); }
    double best_eta() const { return eta_phi.at(best_index); }
};

/** Uniform phase grid of n points over [0, 2 pi). */
inline std::vector<double> phase_grid(std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = two_pi * static_cast<double>(i) / static_cast<double>(n);
    return v;
}

inline phase_sensitivity_curve compute_phase_sensitivity_curve(const drive_config& d, const signal_config& signal_template,
                                                               const noise_config& noise, const readout_config& ro,
                                                               const sequence_timing& timing,
                                                               const std::vector<double>& amplitudes, double t_m,
                                                               std::size_t n_phases = 16, std::size_t n_repeats = 10,
                                                               const simulation_config& sim = {},
                                                               const fixed_point_options& opt = {}) {
    phase_sensitivity_curve curve;
    curve.amplitudes = amplitudes;
    const auto phis = phase_grid(n_phases);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        double eta = std::numeric_limits<double>::infinity();
        if (amplitudes[i] > 0.0) {
            signal_config s = signal_template;
            s.g.x = amplitudes[i];
            fixed_point_options o = opt;
            o.seed = splitmix64(opt.seed + i);
            const auto sweep = run_fixed_point_sweep(d, s, noise, ro, timing, sweep_axis::phase, phis, n_repeats, sim, o);
            try {
                eta = compute_phase_sensitivity(sweep, t_m).eta;
            } catch (const unmeasurable_error&) {
            }
        }
        curve.eta_phi.push_back(eta);
        if (eta < best) {
            best = eta;
            curve.best_index = i;
        }
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Coherence
// ---------------------------------------------------------------------------

/**
 * Exponential coherence time from a damped-model fit:
 * noisy(t) ~ A clean(t) exp(-t / tau), least squares in (A, tau), with
 * t_i = t0 + i dt. A is solved in closed form; tau by a log-grid scan
 * refined by golden section.
 */
inline double fit_damped_envelope(const std::vector<double>& noisy, const std::vector<double>& clean, double dt,
                                  double t0 = 0.0) {
    if (noisy.size() != clean.size() || noisy.size() < 3) throw config_error("envelope fit needs matching traces");
    auto cost = [&](double log_tau) {
        const double tau = std::exp(log_tau);
        double cc = 0.0, cy = 0.0, yy = 0.0;
        for (std::size_t i = 0; i < noisy.size(); ++i) {
            const double m = clean[i] * std::exp(-(t0 + dt * static_cast<double>(i)) / tau);
            cc += m * m;
            cy += m * noisy[i];
            yy += noisy[i] * noisy[i];
        }
        return cc > 0.0 ? yy - cy * cy / cc : yy;
    };
    const double span = dt * static_cast<double>(noisy.size());
    const double lo = std::log(dt);
    const double hi = std::log(1e3 * span);
    double best = lo;
    double best_c = cost(lo);
    for (double x = lo; x <= hi; x += 0.02) {
        const double c = cost(x);
        if (c < best_c) {
            best_c = c;
            best = x;
        }
    }
    double a = best - 0.02, b = best + 0.02;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
        const double c1 = b - g * (b - a);
        const double c2 = a + g * (b - a);
        if (cost(c1) < cost(c2)) b = c2;
        else a = c1;
    }
    return std::exp(0.5 * (a + b));
}

struct coherence_result {
    double tau = 0.0;  // s
    std::vector<double> times;
    std::vector<double> noisy;
    std::vector<double> clean;
};

/** Ensemble Rabi trace against its noiseless twin on a uniform grid, fitted by fit_damped_envelope. */
inline coherence_result measure_coherence(const drive_config& d, const signal_config& s, const noise_config& noise,
                                          double duration, double sample_dt = 1e-9, const simulation_config& sim = {}) {
    coherence_result r;
    r.times = pulsewidth_grid(duration, sample_dt);
    r.noisy = ensemble_sz(d, s, noise, r.times, sim).mean;
    r.clean = lab_sz_at(d, s, disorder_realization{}, r.times, sim);
    r.tau = fit_damped_envelope(r.noisy, r.clean, sample_dt);
    return r;
}

// ---------------------------------------------------------------------------
// Heterodyne
// ---------------------------------------------------------------------------

/** Ensemble sz at T_MW as a function of signal phase on a uniform periodic grid. */
struct phase_response {
    std::vector<double> phis;
    std::vector<double> sz;

    /** Linear interpolation, periodic in 2 pi. */
    double operator()(double phi) const {
        const std::size_t n = phis.size();
        const double u = wrap_phase(phi) / two_pi * static_cast<double>(n);
        const auto i = static_cast<std::size_t>(std::floor(u)) % n;
        const double f = u - std::floor(u);
        return sz[i] * (1.0 - f) + sz[(i + 1) % n] * f;
    }

    double peak_to_peak() const {
        const auto [lo, hi] = std::minmax_element(sz.begin(), sz.end());
        return *hi - *lo;
    }

    /** Expected C_0 at each grid phase. */
    std::vector<double> contrast(const readout_config& ro) const {
        std::vector<double> c;
        for (double z : sz) c.push_back(contrast_zero(pl_rate(z, ro), pl_rate(1.0, ro)));
        return c;
    }
};

inline phase_response phase_response_curve(const drive_config& d, const signal_config& s, const noise_config& noise,
                                           double T_MW, std::size_t n_grid = 64, const simulation_config& sim = {}) {
    if (n_grid < 4) throw config_error("phase grid needs at least four points");
    phase_response r;
    r.phis = phase_grid(n_grid);
    r.sz.resize(n_grid);
    const std::vector<double> at{T_MW};
    for (std::size_t i = 0; i < n_grid; ++i) {
        r.sz[i] = std::clamp(ensemble_sz(d, s.with_phase(r.phis[i]), noise, at, sim).mean[0], -1.0, 1.0);
    }
    return r;
}

struct heterodyne_options {
    double phi0 = 0.0;  // signal phase at the first readout
    std::size_t n_grid = 64;
    std::uint64_t seed = 11;
};

struct heterodyne_run {
    photon_trace trace;
    double detuning = 0.0;  // Hz, omega_s - (omega0 - epsilon_m)
    phase_response response;
};

/** omega_s - (omega0 - epsilon_m) in Hz. */
inline double heterodyne_detuning(const drive_config& d, const signal_config& s) {
    return s.omega_s.hz() - (d.omega0.hz() - d.epsilon_m.hz());
}

/**
 * Throws nyquist_error unless the response tone 2|delta| lies within the
 * unaliased band 1/(2 T_rep).
 */
inline void check_heterodyne_nyquist(double delta, double T_rep) {
    const double nyq = 1.0 / (2.0 * T_rep);
    if (!(2.0 * std::abs(delta) <= nyq * (1.0 + 1e-12))) {
        throw nyquist_error("detuning " + std::to_string(delta) + " Hz puts the 2*delta tone above the " +
                            std::to_string(nyq) + " Hz readout Nyquist frequency");
    }
}

/** Photon count per readout from a precomputed response curve. */
inline photon_trace heterodyne_photons(const phase_response& R, double delta, const readout_config& ro,
                                       const noise_config& noise, const sequence_timing& timing, std::size_t n,
                                       double phi0, std::uint64_t seed) {
    photon_trace tr;
    tr.dt = timing.T_rep;
    tr.counts.resize(n);
    const double dim = std::exp(-timing.T_MW / noise.T1);
    photon_stream ps(make_stream(seed, 0x4E7));
    const double step = delta * timing.T_rep;  // cycles per readout
    for (std::size_t k = 0; k < n; ++k) {
        double cyc = step * static_cast<double>(k);
        cyc -= std::floor(cyc);
        const double z = std::clamp(R(phi0 + two_pi * cyc), -1.0, 1.0);
        tr.counts[k] = ps.sample(pl_rate(z, ro) * dim);
    }
    return tr;
}

inline heterodyne_run run_heterodyne(const drive_config& d, const signal_config& s, const noise_config& noise,
                                     const readout_config& ro, const sequence_timing& timing, double t_m,
                                     const heterodyne_options& opt = {}, const simulation_config& sim = {}) {
    timing.validate(ro, d);
    heterodyne_run run;
    run.detuning = heterodyne_detuning(d, s);
    check_heterodyne_nyquist(run.detuning, timing.T_rep);
    const double reps = t_m / timing.T_rep;
    if (!(t_m > 0.0) || std::abs(reps - std::round(reps)) > 1e-6) {
        throw timing_error("t_m must be a positive multiple of T_rep");
    }
    signal_config on_res = s;
    on_res.omega_s = d.omega0 - d.epsilon_m;
    run.response = phase_response_curve(d, on_res, noise, timing.T_MW, opt.n_grid, sim);
    run.trace = heterodyne_photons(run.response, run.detuning, ro, noise, timing,
                                   static_cast<std::size_t>(std::llround(reps)), opt.phi0, opt.seed);
    return run;
}

struct heterodyne_analysis_options {
    bool autocorrelation = true;
    std::size_t pad = 1;
    double fmin = 0.0;  // Hz; 0 = five bins
};

/** Spectrum (optionally of the autocorrelation) with the tone fitted over (fmin, Nyquist]. */
inline spectrum_result analyze_heterodyne(const photon_trace& tr, const heterodyne_analysis_options& opt = {}) {
    tr.validate();
    std::vector<double> x = tr.as_double();
    spectrum_result spec;
    if (opt.autocorrelation) {
        spec = spectrum(autocorrelate(x), tr.dt, opt.pad);
    } else {
        double m = 0.0;
        for (double v : x) m += v;
        m /= static_cast<double>(x.size());
        for (double& v : x) v -= m;
        spec = spectrum(x, tr.dt, opt.pad);
    }
    const double fmin = opt.fmin > 0.0 ? opt.fmin : 5.0 * spec.bin_width();
    return fit_peak(std::move(spec), {fmin, 1.0 / (2.0 * tr.dt)});
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/**
 * Short-pulse timing: T_MW = 1/(epsilon_m - g_x) and the shortest T_rep
 * that still fits the readout and divides 1 ms into whole repetitions.
 */
inline sequence_timing fast_mode_timing(const drive_config& d, double g_x, const readout_config& ro) {
    if (!(d.epsilon_m.hz() > g_x)) throw config_error("fast mode needs epsilon_m > g_x");
    sequence_timing t;
    t.T_MW = 1.0 / (d.epsilon_m.hz() - g_x);
    t.delta_T = std::numbers::pi / d.omega_m.angular();
    const double need = t.T_MW + t.delta_T + ro.laser_init;
    for (int k = 1; k <= 2000; ++k) {
        if (2000 % k != 0) continue;
        const double rep = 0.5e-6 * k;
        if (rep >= need) {
            t.T_rep = rep;
            return t;
        }
    }
    throw timing_error("no repetition time fits the fast-mode sequence");
}

}  // namespace ccdd
