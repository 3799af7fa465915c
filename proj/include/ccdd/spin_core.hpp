#pragma once

/**
 * @file  spin_core.hpp
 * @brief Value types and unit conventions shared by every ccdd module.
 *
 * Frequencies are stored in ordinary Hz (what configs and the CLI speak) and
 * converted to rad/s through angular() wherever dynamics need them. Field
 * amplitudes g and drive amplitudes are Rabi frequencies, not Tesla; the
 * gyromagnetic ratio bridges the two.
 */

#include "ccdd/error.hpp"
#include "ccdd/vec3.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

namespace ccdd {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/** An ordinary frequency in Hz with an exact 2*pi bridge to rad/s. */
class frequency {
public:
    constexpr frequency() = default;
    constexpr explicit frequency(double hz) : hz_(hz) {}

    static constexpr frequency from_angular(double rad_per_s) { return frequency(rad_per_s / two_pi); }

    constexpr double hz() const { return hz_; }
    constexpr double angular() const { return two_pi * hz_; }

    friend constexpr bool operator==(frequency, frequency) = default;
    friend constexpr auto operator<=>(frequency, frequency) = default;
    friend constexpr frequency operator+(frequency a, frequency b) { return frequency(a.hz_ + b.hz_); }
    friend constexpr frequency operator-(frequency a, frequency b) { return frequency(a.hz_ - b.hz_); }
    friend constexpr frequency operator*(double s, frequency a) { return frequency(s * a.hz_); }

private:
    double hz_ = 0.0;
};

namespace literals {
constexpr frequency operator""_Hz(long double v) { return frequency(static_cast<double>(v)); }
constexpr frequency operator""_kHz(long double v) { return frequency(static_cast<double>(v) * 1e3); }
constexpr frequency operator""_MHz(long double v) { return frequency(static_cast<double>(v) * 1e6); }
constexpr frequency operator""_GHz(long double v) { return frequency(static_cast<double>(v) * 1e9); }
constexpr frequency operator""_Hz(unsigned long long v) { return frequency(static_cast<double>(v)); }
constexpr frequency operator""_kHz(unsigned long long v) { return frequency(static_cast<double>(v) * 1e3); }
constexpr frequency operator""_MHz(unsigned long long v) { return frequency(static_cast<double>(v) * 1e6); }
constexpr frequency operator""_GHz(unsigned long long v) { return frequency(static_cast<double>(v) * 1e9); }
}  // namespace literals

/** Magnetic flux density in Tesla. */
struct tesla {
    double value = 0.0;
};

/** Reduce an angle to [0, 2pi). */
inline double wrap_phase(double phi) {
    double r = std::fmod(phi, two_pi);
    if (r < 0.0) r += two_pi;
    return r;
}

/**
 * Phase-modulated CCDD drive.
 *
 * The carrier at omega0 has Rabi amplitude Omega; its phase is modulated at
 * omega_m with index 2*epsilon_m/Omega, which produces a second, weaker
 * dressing field of amplitude epsilon_m. theta_m is the protocol's drive
 * phase; phase_offset is an instrument calibration that only the waveform
 * compiler adds on top.
 */
struct drive_config {
    frequency omega0{2.32e9};
    frequency Omega{100e6};
    frequency epsilon_m{10e6};
    frequency omega_m{100e6};
    double theta_m = 0.0;
    double phase_offset = 0.07 * std::numbers::pi;

    /** Phase modulation index 2*epsilon_m/Omega. */
    double modulation_index() const { return Omega.hz() > 0.0 ? 2.0 * epsilon_m.hz() / Omega.hz() : 0.0; }

    /**
     * Throws drive_amplitude_error unless 0 <= epsilon_m < Omega and
     * drive_resonance_error unless omega_m == Omega (relative 1e-12).
     */
    void validate() const {
        auto finite_nonneg = [](frequency f) { return std::isfinite(f.hz()) && f.hz() >= 0.0; };
        if (!finite_nonneg(omega0) || !finite_nonneg(Omega) || !finite_nonneg(epsilon_m) ||
            !finite_nonneg(omega_m) || omega0.hz() == 0.0 || Omega.hz() == 0.0) {
            throw drive_amplitude_error("drive frequencies must be finite and positive");
        }
        if (!std::isfinite(theta_m) || !std::isfinite(phase_offset)) {
            throw drive_amplitude_error("drive phases must be finite");
        }
        if (epsilon_m.hz() >= Omega.hz()) {
            throw drive_amplitude_error("epsilon_m must be smaller than Omega");
        }
        if (std::abs(omega_m.hz() - Omega.hz()) > 1e-12 * Omega.hz()) {
            throw drive_resonance_error("CCDD requires omega_m == Omega");
        }
    }

    /** True when epsilon_m/Omega is large enough that the doubly rotating model is suspect. */
    bool rwa_strained() const { return Omega.hz() > 0.0 && epsilon_m.hz() / Omega.hz() > 0.3; }
};

/** Signal field (g . sigma) cos(omega_s t + phi_s); g components are Rabi amplitudes. */
struct signal_config {
    vec3 g{};  // Hz
    frequency omega_s{2.31e9};
    double phi_s = 0.0;

    void validate() const {
        if (!(g.x >= 0.0 && g.y >= 0.0 && g.z >= 0.0) || !std::isfinite(g.x) || !std::isfinite(g.y) ||
            !std::isfinite(g.z)) {
            throw config_error("signal amplitudes must be finite and non-negative");
        }
        if (!std::isfinite(omega_s.hz()) || omega_s.hz() < 0.0 || !std::isfinite(phi_s)) {
            throw config_error("signal frequency and phase must be finite");
        }
    }

    signal_config with_phase(double phi) const {
        signal_config s = *this;
        s.phi_s = wrap_phase(phi);
        return s;
    }
    signal_config with_gx(double gx_hz) const {
        signal_config s = *this;
        s.g.x = gx_hz;
        return s;
    }
    bool is_zero() const { return g.x == 0.0 && g.y == 0.0 && g.z == 0.0; }
};

enum class frame { lab, single_rotating, double_rotating };

inline std::string_view to_string(frame f) {
    switch (f) {
        case frame::lab: return "lab";
        case frame::single_rotating: return "single_rotating";
        case frame::double_rotating: return "double_rotating";
    }
    return "unknown";
}

struct bloch_vector {
    vec3 s{0.0, 0.0, 1.0};
    frame tag = frame::double_rotating;

    double length() const { return norm(s); }
};

struct spin_system_constants {
    frequency D{3.5e9};
    frequency E{59e6};
    double gamma_e = 28.025e9;  // Hz/T
    double Bz = 0.207;          // T

    void validate() const {
        if (!(gamma_e > 0.0)) throw config_error("gamma_e must be positive");
        if (!(D.hz() > E.hz())) throw config_error("zero-field splitting D must exceed E");
    }
};

/** m_s = 0 <-> -1 gap: |D - E - gamma_e Bz|. */
inline frequency transition_frequency(const spin_system_constants& c) {
    return frequency(std::abs(c.D.hz() - c.E.hz() - c.gamma_e * c.Bz));
}

inline frequency field_to_rabi(tesla b, const spin_system_constants& c) { return frequency(c.gamma_e * b.value); }

inline tesla rabi_to_field(frequency g, const spin_system_constants& c) { return tesla{g.hz() / c.gamma_e}; }

}  // namespace ccdd
