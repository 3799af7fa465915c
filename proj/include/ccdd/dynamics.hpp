#pragma once

/**
 * @file  dynamics.hpp
 * @brief Bloch-vector propagation under the CCDD drive and a signal field.
 *
 * Every field here is a precession vector h in rad/s, i.e. the Hamiltonian
 * is H = 1/2 h . sigma and the Bloch vector obeys ds/dt = h x s. Three
 * frames are supported:
 *
 *  - lab:              exact, carrier at omega0 still present.
 *  - single_rotating:  rotated about z at omega0, counter-rotating 2*omega0
 *                      terms dropped; the phase modulation is kept exactly.
 *  - double_rotating:  additionally rotated about x' at omega_m; the drive
 *                      collapses to the static field eps_m (0, sin t_m, cos t_m)
 *                      and the signal is reduced to one resonance branch.
 *
 * Frame changes are explicit rotations: s' = Rz(-omega0 t) s_lab and
 * s'' = Rx(-omega_m t) s'.
 */

#include "ccdd/disorder.hpp"
#include "ccdd/error.hpp"
#include "ccdd/spin_core.hpp"
#include "ccdd/vec3.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace ccdd {

struct field_vector {
    vec3 h{};  // rad/s
    double t = 0.0;
};

/** Uniform grid: `steps` steps of `dt` from t0, recording every `stride` steps. */
struct time_grid {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;
    std::size_t stride = 1;

    double end() const { return t0 + dt * static_cast<double>(steps); }
};

/** Grid covering [0, duration] whose recorded samples fall exactly every `sample_every` seconds. */
inline time_grid grid_for(double duration, double max_dt, double sample_every) {
    const auto per_sample = static_cast<std::size_t>(std::ceil(sample_every / max_dt - 1e-9));
    const std::size_t sub = std::max<std::size_t>(per_sample, 1);
    const auto samples = static_cast<std::size_t>(std::llround(duration / sample_every));
    return time_grid{0.0, sample_every / static_cast<double>(sub), samples * sub, sub};
}

struct bloch_trajectory {
    std::vector<double> times;
    std::vector<vec3> vectors;
    frame tag = frame::double_rotating;

    std::size_t size() const { return times.size(); }
};

inline void write_csv(std::ostream& os, const bloch_trajectory& tr) {
    os << "t_s,x,y,z,frame\n";
    os.precision(12);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << tr.times[i] << ',' << tr.vectors[i].x << ',' << tr.vectors[i].y << ',' << tr.vectors[i].z << ','
           << to_string(tr.tag) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Fields
// ---------------------------------------------------------------------------

namespace detail {
/** Instantaneous PM phase of the carrier. Omega is scaled, epsilon_m is not. */
inline double pm_phase(const drive_config& d, double t, double drive_scale) {
    const double omega = d.Omega.hz() * drive_scale;
    if (omega <= 0.0) return 0.0;
    const double beta = 2.0 * d.epsilon_m.hz() / omega;
    return beta * std::sin(d.omega_m.angular() * t - d.theta_m);
}
}  // namespace detail

/** Exact lab-frame field of H0 + H_C + H_s. */
inline field_vector lab_field(const drive_config& d, const signal_config& s, double t,
                              const disorder_realization& dis = {}) {
    const double omega = d.Omega.angular() * dis.drive_scale;
    const double carrier = std::cos(d.omega0.angular() * t - detail::pm_phase(d, t, dis.drive_scale));
    const double sig = std::cos(s.omega_s.angular() * t + s.phi_s);
    field_vector f;
    f.t = t;
    f.h.x = 2.0 * omega * carrier + 2.0 * two_pi * s.g.x * sig;
    f.h.y = 2.0 * two_pi * s.g.y * sig;
    f.h.z = d.omega0.angular() + two_pi * dis.detuning + 2.0 * two_pi * s.g.z * sig;
    return f;
}

/** Field after the omega0 rotation, co-rotating terms only. */
inline field_vector single_rot_field(const drive_config& d, const signal_config& s, double t,
                                     const disorder_realization& dis = {}) {
    const double omega = d.Omega.angular() * dis.drive_scale;
    const double psi = detail::pm_phase(d, t, dis.drive_scale);
    const double beat = (s.omega_s.angular() - d.omega0.angular()) * t + s.phi_s;
    const double cb = std::cos(beat);
    const double sb = std::sin(beat);
    const double gx = two_pi * s.g.x;
    const double gy = two_pi * s.g.y;
    field_vector f;
    f.t = t;
    f.h.x = omega * std::cos(psi) + gx * cb - gy * sb;
    f.h.y = -omega * std::sin(psi) + gx * sb + gy * cb;
    f.h.z = two_pi * dis.detuning + 2.0 * two_pi * s.g.z * std::cos(s.omega_s.angular() * t + s.phi_s);
    return f;
}

enum class resonance_branch { none, x, y, z };

inline resonance_branch parse_branch(std::string_view tag) {
    if (tag == "none") return resonance_branch::none;
    if (tag == "x") return resonance_branch::x;
    if (tag == "y") return resonance_branch::y;
    if (tag == "z") return resonance_branch::z;
    throw config_error("unsupported resonance branch '" + std::string(tag) + "'");
}

inline std::string_view to_string(resonance_branch b) {
    switch (b) {
        case resonance_branch::none: return "none";
        case resonance_branch::x: return "x";
        case resonance_branch::y: return "y";
        case resonance_branch::z: return "z";
    }
    return "none";
}

/**
 * Doubly rotating frame field for one signal resonance branch.
 *
 * Drive: eps_m (0, sin theta_m, cos theta_m). Disorder enters as the residual
 * carrier (s - 1) Omega along x'' and the detuning, which the omega_m frame
 * turns into a field rotating in the y''z'' plane.
 */
inline field_vector double_rot_field(const drive_config& d, const signal_config& s, double t,
                                     resonance_branch branch, const disorder_realization& dis = {}) {
    const double eps = d.epsilon_m.angular();
    field_vector f;
    f.t = t;
    f.h = {0.0, eps * std::sin(d.theta_m), eps * std::cos(d.theta_m)};

    if (dis.drive_scale != 1.0) f.h.x += (dis.drive_scale - 1.0) * d.Omega.angular();
    if (dis.detuning != 0.0) {
        const double a = d.omega_m.angular() * t;
        const double det = two_pi * dis.detuning;
        f.h.y += det * std::sin(a);
        f.h.z += det * std::cos(a);
    }

    switch (branch) {
        case resonance_branch::none: break;
        case resonance_branch::x: {
            const double beat = (s.omega_s.angular() - d.omega0.angular()) * t + s.phi_s;
            f.h.x += two_pi * s.g.x * std::cos(beat);
            break;
        }
        case resonance_branch::y: {
            const double beat = (s.omega_s.angular() - d.omega0.angular()) * t + s.phi_s;
            f.h.y -= two_pi * s.g.y * std::sin(beat);
            break;
        }
        case resonance_branch::z: {
            const double beat = (s.omega_s.angular() - d.omega_m.angular()) * t + s.phi_s;
            f.h.z += two_pi * s.g.z * (std::cos(beat) - std::sin(beat));
            break;
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Frame transforms
// ---------------------------------------------------------------------------

inline vec3 lab_to_single(const vec3& s, double t, const drive_config& d) {
    return rotate_z(s, -d.omega0.angular() * t);
}
inline vec3 single_to_lab(const vec3& s, double t, const drive_config& d) {
    return rotate_z(s, d.omega0.angular() * t);
}
inline vec3 single_to_double(const vec3& s, double t, const drive_config& d) {
    return rotate_x(s, -d.omega_m.angular() * t);
}
inline vec3 double_to_single(const vec3& s, double t, const drive_config& d) {
    return rotate_x(s, d.omega_m.angular() * t);
}

/** z of the lab frame (what the optical readout sees) from a doubly rotating vector. */
inline double lab_z_from_double(const vec3& s, double t, const drive_config& d) {
    const double a = d.omega_m.angular() * t;
    return s.y * std::sin(a) + s.z * std::cos(a);
}

inline bloch_trajectory transform(const bloch_trajectory& tr, frame to, const drive_config& d) {
    bloch_trajectory out;
    out.tag = to;
    out.times = tr.times;
    out.vectors.reserve(tr.size());
    auto level = [](frame f) { return f == frame::lab ? 0 : f == frame::single_rotating ? 1 : 2; };
    for (std::size_t i = 0; i < tr.size(); ++i) {
        vec3 v = tr.vectors[i];
        const double t = tr.times[i];
        int from = level(tr.tag);
        const int target = level(to);
        while (from < target) {
            v = from == 0 ? lab_to_single(v, t, d) : single_to_double(v, t, d);
            ++from;
        }
        while (from > target) {
            v = from == 2 ? double_to_single(v, t, d) : single_to_lab(v, t, d);
            --from;
        }
        out.vectors.push_back(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Propagators
// ---------------------------------------------------------------------------

/** Largest rotation angle allowed per step. */
inline constexpr double max_step_angle = 0.1;

/** Rotating-frame default: 1/(200 Omega). */
inline double default_rotating_step(const drive_config& d) {
    const double omega = std::max(d.Omega.hz(), d.epsilon_m.hz());
    return omega > 0.0 ? 1.0 / (200.0 * omega) : 1e-10;
}

/** Lab-frame default step keeping the worst-case angle per step at 0.09 rad. */
inline double default_lab_step(const drive_config& d, const signal_config& s, double max_drive_scale = 1.0,
                               double max_detuning_hz = 0.0) {
    const double bound = d.omega0.angular() + two_pi * std::abs(max_detuning_hz) +
                         2.0 * d.Omega.angular() * max_drive_scale +
                         2.0 * two_pi * (s.g.x + s.g.y + s.g.z);
    return 0.09 / bound;
}

/** One exact rotation of s about h by |h| dt. */
inline vec3 rotation_step(const vec3& s, const vec3& h, double dt) {
    const double w = norm(h);
    if (w == 0.0) return s;
    return rotate(s, h * (1.0 / w), w * dt);
}

namespace detail {
inline void check_angle(double angle, double t) {
    if (!(angle <= max_step_angle)) {
        throw step_size_error("rotation per step " + std::to_string(angle) + " rad exceeds " +
                                  std::to_string(max_step_angle) + " rad at t=" + std::to_string(t),
                              angle);
    }
}
}  // namespace detail

/**
 * Geometric integrator: each step rotates the Bloch vector about the field
 * evaluated at the step midpoint. Norm is preserved to rounding.
 *
 * FieldFn is any callable double -> vec3 (rad/s).
 */
template <class FieldFn>
bloch_trajectory propagate_rotation(FieldFn&& field, const bloch_vector& sigma0, const time_grid& grid) {
    bloch_trajectory tr;
    tr.tag = sigma0.tag;
    const std::size_t stride = std::max<std::size_t>(grid.stride, 1);
    tr.times.reserve(grid.steps / stride + 1);
    tr.vectors.reserve(grid.steps / stride + 1);
    tr.times.push_back(grid.t0);
    tr.vectors.push_back(sigma0.s);

    vec3 s = sigma0.s;
    for (std::size_t n = 0; n < grid.steps; ++n) {
        const double tm = grid.t0 + (static_cast<double>(n) + 0.5) * grid.dt;
        const vec3 h = field(tm);
        const double w = norm(h);
        detail::check_angle(w * grid.dt, tm);
        if (w > 0.0) s = rotate(s, h * (1.0 / w), w * grid.dt);
        if ((n + 1) % stride == 0) {
            tr.times.push_back(grid.t0 + static_cast<double>(n + 1) * grid.dt);
            tr.vectors.push_back(s);
        }
    }
    return tr;
}

namespace detail {
using c2 = std::complex<double>;
using mat2 = std::array<c2, 4>;  // row-major

inline mat2 mul(const mat2& a, const mat2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3]};
}
inline mat2 adjoint(const mat2& a) { return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])}; }

/** General 2x2 matrix exponential by scaling and squaring of a Taylor series. */
inline mat2 expm(const mat2& a) {
    double nrm = 0.0;
    for (const auto& v : a) nrm = std::max(nrm, std::abs(v));
    int squarings = 0;
    double scale = 1.0;
    while (nrm * scale > 0.05) {
        scale *= 0.5;
        ++squarings;
    }
    mat2 x{a[0] * scale, a[1] * scale, a[2] * scale, a[3] * scale};
    mat2 result{1.0, 0.0, 0.0, 1.0};
    mat2 term{1.0, 0.0, 0.0, 1.0};
    for (int k = 1; k <= 14; ++k) {
        term = mul(term, x);
        for (auto& v : term) v /= static_cast<double>(k);
        for (int i = 0; i < 4; ++i) result[i] += term[i];
    }
    for (int i = 0; i < squarings; ++i) result = mul(result, result);
    return result;
}
}  // namespace detail

/**
 * Independent check on propagate_rotation: evolves the density matrix
 * 1/2 (I + s . sigma) with U = exp(-i H dt) per step, H = 1/2 h . sigma
 * frozen at the step midpoint.
 */
template <class FieldFn>
bloch_trajectory propagate_unitary_oracle(FieldFn&& field, const bloch_vector& sigma0, const time_grid& grid) {
    using detail::c2;
    using detail::mat2;
    const c2 I{0.0, 1.0};
    auto rho_of = [&](const vec3& s) {
        return mat2{0.5 * (1.0 + s.z), 0.5 * c2(s.x, -s.y), 0.5 * c2(s.x, s.y), 0.5 * (1.0 - s.z)};
    };
    auto bloch_of = [](const mat2& r) {
        // Tr(rho sigma_x) = 2 Re rho01, Tr(rho sigma_y) = -2 Im rho01, Tr(rho sigma_z) = rho00 - rho11
        return vec3{2.0 * r[1].real(), -2.0 * r[1].imag(), (r[0] - r[3]).real()};
    };

    bloch_trajectory tr;
    tr.tag = sigma0.tag;
    const std::size_t stride = std::max<std::size_t>(grid.stride, 1);
    tr.times.push_back(grid.t0);
    tr.vectors.push_back(sigma0.s);

    mat2 rho = rho_of(sigma0.s);
    for (std::size_t n = 0; n < grid.steps; ++n) {
        const double tm = grid.t0 + (static_cast<double>(n) + 0.5) * grid.dt;
        const vec3 h = field(tm);
        detail::check_angle(norm(h) * grid.dt, tm);
        // -i H dt with H = 1/2 [[hz, hx - i hy], [hx + i hy, -hz]]
        const double f = 0.5 * grid.dt;
        const mat2 gen{-I * f * h.z, -I * f * c2(h.x, -h.y), -I * f * c2(h.x, h.y), I * f * h.z};
        const mat2 u = detail::expm(gen);
        rho = detail::mul(detail::mul(u, rho), detail::adjoint(u));
        if ((n + 1) % stride == 0) {
            tr.times.push_back(grid.t0 + static_cast<double>(n + 1) * grid.dt);
            tr.vectors.push_back(bloch_of(rho));
        }
    }
    return tr;
}

// ---------------------------------------------------------------------------
// RWA validation
// ---------------------------------------------------------------------------

struct rwa_check_result {
    double max_deviation = 0.0;
    double at_time = 0.0;
    bloch_trajectory lab_in_double;  // lab run transformed into the doubly rotating frame
    bloch_trajectory rotating;       // doubly rotating model run
};

/**
 * Propagates the exact lab field from +z, transforms every sample into the
 * doubly rotating frame and compares with the doubly rotating model (x
 * branch when a signal is present). Returns max |s_lab->rot - s_rot|.
 */
inline rwa_check_result lab_vs_rotating_check(const drive_config& d, const signal_config& s, double duration,
                                              double sample_every = 1e-9) {
    const double lab_dt = default_lab_step(d, s);
    const double rot_dt = std::min(default_rotating_step(d), 1e-10);
    const time_grid lab_grid = grid_for(duration, lab_dt, sample_every);
    const time_grid rot_grid = grid_for(duration, rot_dt, sample_every);

    const bloch_vector up{{0.0, 0.0, 1.0}, frame::lab};
    auto lab = propagate_rotation([&](double t) { return lab_field(d, s, t).h; }, up, lab_grid);

    const resonance_branch branch = s.is_zero() ? resonance_branch::none : resonance_branch::x;
    auto rot = propagate_rotation([&](double t) { return double_rot_field(d, s, t, branch).h; },
                                  bloch_vector{{0.0, 0.0, 1.0}, frame::double_rotating}, rot_grid);

    rwa_check_result r;
    r.lab_in_double = transform(lab, frame::double_rotating, d);
    r.rotating = std::move(rot);
    const std::size_t n = std::min(r.lab_in_double.size(), r.rotating.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = norm(r.lab_in_double.vectors[i] - r.rotating.vectors[i]);
        if (dev > r.max_deviation) {
            r.max_deviation = dev;
            r.at_time = r.rotating.times[i];
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Resonances
// ---------------------------------------------------------------------------

struct resonance_map {
    std::array<frequency, 6> xy_resonances{};  // ascending
    std::array<frequency, 2> z_resonances{};   // ascending

    /** xy set with coincident lines (e.g. eps_m = 0) merged. */
    std::vector<frequency> distinct_xy(double tol_hz = 1e-3) const {
        std::vector<frequency> out;
        for (const auto& f : xy_resonances) {
            if (out.empty() || std::abs(f.hz() - out.back().hz()) > tol_hz) out.push_back(f);
        }
        return out;
    }
};

/** omega0 +- eps_m, omega0 +- (Omega - eps_m), omega0 +- (Omega + eps_m); z lines at Omega +- eps_m. */
inline resonance_map compute_resonance_map(const drive_config& d) {
    const double w0 = d.omega0.hz();
    const double om = d.Omega.hz();
    const double e = d.epsilon_m.hz();
    resonance_map m;
    std::array<double, 6> xy{w0 - e, w0 + e, w0 - (om - e), w0 + (om - e), w0 - (om + e), w0 + (om + e)};
    std::sort(xy.begin(), xy.end());
    for (std::size_t i = 0; i < 6; ++i) m.xy_resonances[i] = frequency(xy[i]);
    m.z_resonances = {frequency(om - e), frequency(om + e)};
    return m;
}

}  // namespace ccdd
