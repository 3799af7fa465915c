#pragma once

/**
 * @file  wavegen.hpp
 * @brief AWG emulation: frequency-grid validation and sample-buffer synthesis.
 *
 * Phases are reduced with integer arithmetic whenever the frequency and the
 * sample rate are whole numbers of Hz, so a 1 ms buffer at 25 GS/s keeps
 * full double precision at its last sample.
 */

#include "ccdd/dsp.hpp"
#include "ccdd/error.hpp"
#include "ccdd/spin_core.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <ostream>
#include <string>
#include <vector>

namespace ccdd {

struct waveform_spec {
    double sample_rate = 25e9;    // S/s
    double memory_length = 1e-3;  // s
    double freq_grid = 1e3;       // Hz
    double full_scale = 0.0;      // Hz of Rabi amplitude mapped to |s| = 1; 0 = the buffer's own peak

    std::uint64_t length() const {
        const double n = sample_rate * memory_length;
        return static_cast<std::uint64_t>(std::llround(n));
    }

    void validate() const {
        if (!(sample_rate > 0.0) || !(memory_length > 0.0) || !(freq_grid > 0.0)) {
            throw config_error("waveform sample rate, memory length and grid must be positive");
        }
        const double n = sample_rate * memory_length;
        if (std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n)) {
            throw config_error("memory_length * sample_rate must be an integer");
        }
    }
};

struct sample_buffer {
    std::vector<double> samples;
    std::string channel;
    double sample_rate = 0.0;
};

// ---------------------------------------------------------------------------
// Grid check
// ---------------------------------------------------------------------------

namespace detail {
/** Writes a finite non-zero double as odd * 2^exp exactly. */
inline void odd_decompose(double v, std::uint64_t& odd, int& exp) {
    int e = 0;
    const double m = std::frexp(std::abs(v), &e);  // v = m 2^e, m in [0.5, 1)
    auto mant = static_cast<std::uint64_t>(std::ldexp(m, 53));
    e -= 53;
    while ((mant & 1u) == 0u) {
        mant >>= 1;
        ++e;
    }
    odd = mant;
    exp = e;
}
}  // namespace detail

/** Exact test that the double f is an integer multiple of the double grid. */
inline bool on_grid(double f, double grid) {
    if (!std::isfinite(f) || !std::isfinite(grid) || grid <= 0.0) return false;
    if (f == 0.0) return true;
    std::uint64_t mf = 0, mg = 0;
    int ef = 0, eg = 0;
    detail::odd_decompose(f, mf, ef);
    detail::odd_decompose(grid, mg, eg);
    // f / grid = (mf / mg) 2^(ef - eg) with mf, mg odd
    return ef >= eg && mf % mg == 0;
}

/** Frequencies not on spec.freq_grid; empty means every tone loops cleanly. */
inline std::vector<double> validate_grid(const std::vector<double>& freqs, const waveform_spec& spec) {
    std::vector<double> bad;
    for (double f : freqs) {
        if (!(f > 0.0) || !on_grid(f, spec.freq_grid)) bad.push_back(f);
    }
    return bad;
}

inline void require_on_grid(const std::vector<double>& freqs, const waveform_spec& spec) {
    auto bad = validate_grid(freqs, spec);
    if (!bad.empty()) {
        std::string msg = "frequencies off the " + std::to_string(spec.freq_grid) + " Hz grid:";
        for (double f : bad) msg += " " + std::to_string(f);
        throw grid_error(msg, std::move(bad));
    }
}

/** Drive tones that must sit on the grid: carrier, modulation and the resulting sidebands. */
inline std::vector<double> drive_tones(const drive_config& d) { return {d.omega0.hz(), d.omega_m.hz()}; }

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

namespace detail {
/** 2 pi frac(f n / fs) with exact integer reduction when possible. */
inline double cycle_phase(double f, std::uint64_t n, double fs) {
    const bool integral = f == std::floor(f) && fs == std::floor(fs) && f < 9e15 && fs < 9e15 && f >= 0.0;
    if (integral) {
        const auto fi = static_cast<unsigned __int128>(static_cast<std::uint64_t>(f));
        const auto si = static_cast<std::uint64_t>(fs);
        const auto r = static_cast<std::uint64_t>((fi * n) % si);
        return two_pi * static_cast<double>(r) / fs;
    }
    const double cyc = f * static_cast<double>(n) / fs;
    return two_pi * (cyc - std::floor(cyc));
}
}  // namespace detail

/** Timing of the gated drive inside each repetition. */
struct gate_timing {
    double T_MW = 950e-9;
    double T_rep = 5e-6;
};

/**
 * Gated phase-modulated carrier, in Rabi Hz before normalization:
 * Omega cos(omega0 t - beta sin(omega_m t - theta_m - phase_offset)) while
 * (t mod T_rep) < T_MW, zero otherwise.
 */
class ccdd_source {
public:
    ccdd_source(const drive_config& d, const gate_timing& g, const waveform_spec& spec) : d_(d), spec_(spec) {
        rep_samples_ = static_cast<std::uint64_t>(std::llround(g.T_rep * spec.sample_rate));
        on_samples_ = static_cast<std::uint64_t>(std::llround(g.T_MW * spec.sample_rate));
        beta_ = d.modulation_index();
        theta_ = d.theta_m + d.phase_offset;
    }

    double operator()(std::uint64_t n) const {
        if (rep_samples_ > 0 && n % rep_samples_ >= on_samples_) return 0.0;
        const double fs = spec_.sample_rate;
        const double mod = detail::cycle_phase(d_.omega_m.hz(), n, fs) - theta_;
        return d_.Omega.hz() * std::cos(detail::cycle_phase(d_.omega0.hz(), n, fs) - beta_ * std::sin(mod));
    }

    double amplitude() const { return d_.Omega.hz(); }

private:
    drive_config d_;
    waveform_spec spec_;
    std::uint64_t rep_samples_ = 0;
    std::uint64_t on_samples_ = 0;
    double beta_ = 0.0;
    double theta_ = 0.0;
};

/** Continuous signal tone (g_x + g_y + g_z) cos(omega_s t + phi_s) on the single drive line. */
class signal_source {
public:
    signal_source(const signal_config& s, const waveform_spec& spec) : s_(s), spec_(spec) {}

    double operator()(std::uint64_t n) const {
        const double a = amplitude();
        if (a == 0.0) return 0.0;
        return a * std::cos(detail::cycle_phase(s_.omega_s.hz(), n, spec_.sample_rate) + s_.phi_s);
    }

    double amplitude() const { return s_.g.x + s_.g.y + s_.g.z; }

private:
    signal_config s_;
    waveform_spec spec_;
};

namespace detail {
template <class Source>
sample_buffer render(const Source& src, const waveform_spec& spec, std::string channel, std::uint64_t count) {
    sample_buffer buf;
    buf.channel = std::move(channel);
    buf.sample_rate = spec.sample_rate;
    buf.samples.resize(count);
    const double fs_amp = spec.full_scale > 0.0 ? spec.full_scale : src.amplitude();
    const double scale = fs_amp > 0.0 ? 1.0 / fs_amp : 0.0;
    for (std::uint64_t n = 0; n < count; ++n) buf.samples[n] = src(n) * scale;
    return buf;
}

inline void check_nyquist(double f, const waveform_spec& spec) {
    if (f > 0.5 * spec.sample_rate) {
        throw nyquist_error("component at " + std::to_string(f) + " Hz exceeds sample_rate/2");
    }
}
}  // namespace detail

/**
 * Compiles the CCDD drive into one memory window. `count` limits the
 * number of rendered samples (0 = the whole window); validation always
 * covers the whole window.
 */
inline sample_buffer compile_ccdd(const drive_config& d, const gate_timing& timing, const waveform_spec& spec,
                                  std::uint64_t count = 0) {
    spec.validate();
    require_on_grid(drive_tones(d), spec);
    detail::check_nyquist(d.omega0.hz() + d.omega_m.hz(), spec);
    const double reps = spec.memory_length / timing.T_rep;
    if (!(timing.T_rep > 0.0) || std::abs(reps - std::round(reps)) > 1e-9 * reps) {
        throw timing_error("memory window must hold an integer number of repetitions");
    }
    const double rep_samples = timing.T_rep * spec.sample_rate;
    if (std::abs(rep_samples - std::round(rep_samples)) > 1e-6) {
        throw timing_error("T_rep is not a whole number of samples");
    }
    if (timing.T_MW > timing.T_rep) throw timing_error("T_MW exceeds T_rep");
    const std::uint64_t n = count == 0 ? spec.length() : std::min(count, spec.length());
    return detail::render(ccdd_source(d, timing, spec), spec, "ccdd", n);
}

inline sample_buffer compile_signal(const signal_config& s, const waveform_spec& spec, std::uint64_t count = 0) {
    spec.validate();
    if (!s.is_zero()) {
        require_on_grid({s.omega_s.hz()}, spec);
        detail::check_nyquist(s.omega_s.hz(), spec);
    }
    const std::uint64_t n = count == 0 ? spec.length() : std::min(count, spec.length());
    return detail::render(signal_source(s, spec), spec, "signal", n);
}

/** |s(T+) - s(T-)| across the loop point, using the source's value one window later. */
template <class Source>
double loop_discontinuity(const Source& src, const waveform_spec& spec) {
    const std::uint64_t n = spec.length();
    return std::abs(src(n) - src(0));
}

// ---------------------------------------------------------------------------
// Spectral check
// ---------------------------------------------------------------------------

/** Power within +-halfwidth of f in the magnitude spectrum of samples [first, first + count). */
inline double line_power(const spectrum_result& spec, double f, double halfwidth) {
    double p = 0.0;
    for (std::size_t k = 0; k < spec.freqs.size(); ++k) {
        if (std::abs(spec.freqs[k] - f) <= halfwidth) p += spec.magnitude[k] * spec.magnitude[k];
    }
    return p;
}

inline spectrum_result buffer_spectrum(const sample_buffer& buf, std::size_t first, std::size_t count) {
    if (first + count > buf.samples.size()) throw std::out_of_range("segment beyond buffer");
    std::vector<double> seg(buf.samples.begin() + static_cast<long>(first),
                            buf.samples.begin() + static_cast<long>(first + count));
    return spectrum(seg, 1.0 / buf.sample_rate);
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/** UTF-8 JSON header line, then little-endian float32 samples. */
inline void write_binary(std::ostream& os, const sample_buffer& buf) {
    os << "{\"sample_rate_hz\":" << std::to_string(buf.sample_rate) << ",\"length\":" << buf.samples.size()
       << ",\"channel\":\"" << buf.channel << "\"}\n";
    std::vector<char> bytes(buf.samples.size() * 4);
    for (std::size_t i = 0; i < buf.samples.size(); ++i) {
        const auto f = static_cast<float>(buf.samples[i]);
        std::uint32_t u = 0;
        std::memcpy(&u, &f, 4);
        for (int b = 0; b < 4; ++b) bytes[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((u >> (8 * b)) & 0xFFu);
    }
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline void write_csv(std::ostream& os, const sample_buffer& buf, std::size_t max_rows = 100000) {
    if (buf.samples.size() > max_rows) throw config_error("buffer too large for CSV export; use binary");
    os << "index,t_s,sample\n";
    os.precision(12);
    for (std::size_t i = 0; i < buf.samples.size(); ++i) {
        os << i << ',' << static_cast<double>(i) / buf.sample_rate << ',' << buf.samples[i] << '\n';
    }
}

}  // namespace ccdd
