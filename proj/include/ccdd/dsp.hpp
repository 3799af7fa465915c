#pragma once

/**
 * @file  dsp.hpp
 * @brief Heterodyne analysis chain: gating/binning, autocorrelation,
 *        magnitude spectrum, Gaussian peak fit, SNR scaling fit.
 *
 * Transforms go through FFTW (double precision, FFTW_ESTIMATE plans).
 */

#include "ccdd/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccdd {

struct photon_trace {
    std::vector<std::uint64_t> counts;
    double dt = 5e-6;  // s per bin (= T_rep)
    double t0 = 0.0;

    void validate() const {
        if (!(dt > 0.0)) throw config_error("photon trace bin width must be positive");
        if (counts.size() < 2) throw config_error("photon trace needs at least two bins");
    }
    std::vector<double> as_double() const { return {counts.begin(), counts.end()}; }
    double duration() const { return dt * static_cast<double>(counts.size()); }
};

struct peak_fit {
    bool detected = false;
    double f0 = 0.0;    // Hz
    double fwhm = 0.0;  // Hz
    double height = 0.0;
    double offset = 0.0;
    double snr = 0.0;
    double baseline_std = 0.0;
    double threshold = 0.0;  // snr needed for detected
    std::string method = "gaussian-lm; baseline = band minus +-10 fwhm";
};

struct spectrum_result {
    std::vector<double> freqs;      // Hz, uniform from 0
    std::vector<double> magnitude;  // |X_k|, unnormalized DFT
    std::size_t transform_length = 0;
    peak_fit peak;

    double bin_width() const { return freqs.size() > 1 ? freqs[1] - freqs[0] : 0.0; }
};

// ---------------------------------------------------------------------------
// FFT primitives
// ---------------------------------------------------------------------------

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/** Forward real DFT of x zero-padded to length m; returns m/2 + 1 bins. */
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x, std::size_t m) {
    if (m < x.size()) throw std::invalid_argument("transform length shorter than input");
    double* in = fftw_alloc_real(m);
    fftw_complex* out = fftw_alloc_complex(m / 2 + 1);
    if (in == nullptr || out == nullptr) {
        fftw_free(in);
        fftw_free(out);
        throw std::bad_alloc();
    }
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(m), in, out, FFTW_ESTIMATE);
    }
    std::copy(x.begin(), x.end(), in);
    std::fill(in + x.size(), in + m, 0.0);
    fftw_execute(plan);
    std::vector<std::complex<double>> res(m / 2 + 1);
    for (std::size_t k = 0; k < res.size(); ++k) res[k] = {out[k][0], out[k][1]};
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return res;
}

/** Inverse of rfft (unnormalized): m real outputs from m/2 + 1 bins. */
inline std::vector<double> irfft(const std::vector<std::complex<double>>& X, std::size_t m) {
    fftw_complex* in = fftw_alloc_complex(m / 2 + 1);
    double* out = fftw_alloc_real(m);
    if (in == nullptr || out == nullptr) {
        fftw_free(in);
        fftw_free(out);
        throw std::bad_alloc();
    }
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(m), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t k = 0; k < m / 2 + 1; ++k) {
        in[k][0] = X[k].real();
        in[k][1] = X[k].imag();
    }
    fftw_execute(plan);
    std::vector<double> res(out, out + m);
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return res;
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Gating
// ---------------------------------------------------------------------------

/**
 * Keeps photons whose offset into their repetition is within the gate and
 * counts them per repetition. n_bins = 0 sizes the trace to the last tag.
 */
inline photon_trace gate_and_bin(const std::vector<double>& tags, double gate, double rep_rate = 400e3,
                                 std::size_t n_bins = 0) {
    if (!(rep_rate > 0.0) || !(gate >= 0.0)) throw config_error("gate and repetition rate must be positive");
    if (!std::is_sorted(tags.begin(), tags.end())) throw std::invalid_argument("photon tags must be sorted");
    const double period = 1.0 / rep_rate;
    photon_trace tr;
    tr.dt = period;
    if (n_bins == 0 && !tags.empty()) n_bins = static_cast<std::size_t>(std::floor(tags.back() / period)) + 1;
    tr.counts.assign(n_bins, 0);
    for (double t : tags) {
        if (t < 0.0) throw std::invalid_argument("photon tags must be non-negative");
        const auto bin = static_cast<std::size_t>(std::floor(t / period));
        const double offset = t - static_cast<double>(bin) * period;
        if (bin < n_bins && offset <= gate) ++tr.counts[bin];
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Autocorrelation and spectra
// ---------------------------------------------------------------------------

/** Biased, mean-subtracted autocorrelation a[k] = (1/N) sum_n (x_n - m)(x_{n+k} - m), k < N. */
inline std::vector<double> autocorrelate(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n < 2) throw config_error("autocorrelation needs at least two samples");
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - mean;

    std::vector<double> a(n, 0.0);
    if (n <= 64) {
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i + k < n; ++i) s += d[i] * d[i + k];
            a[k] = s / static_cast<double>(n);
        }
        return a;
    }
    const std::size_t m = detail::next_pow2(2 * n);
    auto X = detail::rfft(d, m);
    for (auto& v : X) v = std::norm(v);
    auto r = detail::irfft(X, m);
    const double scale = 1.0 / (static_cast<double>(m) * static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) a[k] = r[k] * scale;
    return a;
}

inline std::vector<double> autocorrelate(const photon_trace& tr) { return autocorrelate(tr.as_double()); }

/**
 * One-sided magnitude spectrum |X_k|, k = 0..M/2, of x zero-padded to
 * M = pad * N. Bin spacing 1/(M dt). With the unnormalized DFT, Parseval
 * reads sum x^2 = (1/M) sum_{all k} |X_k|^2.
 */
inline spectrum_result spectrum(const std::vector<double>& x, double dt, std::size_t pad = 1) {
    if (x.empty()) throw config_error("spectrum of an empty sequence");
    if (!(dt > 0.0)) throw config_error("sample spacing must be positive");
    const std::size_t m = x.size() * std::max<std::size_t>(pad, 1);
    auto X = detail::rfft(x, m);
    spectrum_result s;
    s.transform_length = m;
    s.freqs.resize(X.size());
    s.magnitude.resize(X.size());
    for (std::size_t k = 0; k < X.size(); ++k) {
        s.freqs[k] = static_cast<double>(k) / (static_cast<double>(m) * dt);
        s.magnitude[k] = std::abs(X[k]);
    }
    return s;
}

/** Parseval partner of spectrum(): (1/M) sum over the full two-sided DFT of |X|^2. */
inline double spectral_energy(const spectrum_result& s) {
    const std::size_t m = s.transform_length;
    double e = 0.0;
    for (std::size_t k = 0; k < s.magnitude.size(); ++k) {
        const bool unpaired = k == 0 || (m % 2 == 0 && k == m / 2);
        e += (unpaired ? 1.0 : 2.0) * s.magnitude[k] * s.magnitude[k];
    }
    return e / static_cast<double>(m);
}

// ---------------------------------------------------------------------------
// Peak fitting
// ---------------------------------------------------------------------------

struct search_band {
    double fmin = 0.0;
    double fmax = std::numeric_limits<double>::infinity();
};

namespace detail {
/** Solve a 4x4 linear system by partial-pivot elimination; false if singular. */
inline bool solve4(std::array<std::array<double, 4>, 4> a, std::array<double, 4> b, std::array<double, 4>& x) {
    for (int c = 0; c < 4; ++c) {
        int p = c;
        for (int r = c + 1; r < 4; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        }
        if (std::abs(a[p][c]) < 1e-300) return false;
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (int r = c + 1; r < 4; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < 4; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (int r = 3; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < 4; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return true;
}

/** Levenberg-Marquardt fit of y = A exp(-(x-mu)^2 / (2 s^2)) + c; p = {A, mu, s, c}. */
inline std::array<double, 4> fit_gaussian(const std::vector<double>& xs, const std::vector<double>& ys,
                                          std::array<double, 4> p) {
    auto residual = [&](const std::array<double, 4>& q) {
        double r = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double u = (xs[i] - q[1]) / q[2];
            const double e = ys[i] - (q[0] * std::exp(-0.5 * u * u) + q[3]);
            r += e * e;
        }
        return r;
    };
    double lambda = 1e-3;
    double cost = residual(p);
    for (int it = 0; it < 200; ++it) {
        std::array<std::array<double, 4>, 4> jtj{};
        std::array<double, 4> jtr{};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double u = (xs[i] - p[1]) / p[2];
            const double g = std::exp(-0.5 * u * u);
            const std::array<double, 4> j{g, p[0] * g * u / p[2], p[0] * g * u * u / p[2], 1.0};
            const double e = ys[i] - (p[0] * g + p[3]);
            for (int a = 0; a < 4; ++a) {
                jtr[a] += j[a] * e;
                for (int b = 0; b < 4; ++b) jtj[a][b] += j[a] * j[b];
            }
        }
        bool improved = false;
        for (int tries = 0; tries < 20 && !improved; ++tries) {
            auto m = jtj;
            for (int a = 0; a < 4; ++a) m[a][a] *= 1.0 + lambda;
            std::array<double, 4> step{};
            if (!solve4(m, jtr, step)) {
                lambda *= 10.0;
                continue;
            }
            std::array<double, 4> q{p[0] + step[0], p[1] + step[1], std::abs(p[2] + step[2]), p[3] + step[3]};
            if (q[2] == 0.0) {
                lambda *= 10.0;
                continue;
            }
            const double c = residual(q);
            if (c < cost) {
                const double rel = (cost - c) / std::max(cost, 1e-300);
                p = q;
                cost = c;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
                if (rel < 1e-12) return p;
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) break;
    }
    return p;
}
}  // namespace detail

/**
 * Gaussian least-squares fit around the largest bin in the band. The fit
 * window spans the half-maximum region (at least +-3 bins, doubled once).
 * SNR = fitted height / std of the band's magnitude outside +-10 fwhm.
 */
// SNR a lone bin must beat to count as a line. The largest of n noise
// magnitudes sits near sqrt(2 ln n) in Rayleigh units; 0.655 converts to
// magnitude standard deviations.
inline double detection_threshold(std::size_t n_bins) {
    const double n = static_cast<double>(std::max<std::size_t>(n_bins, 2));
    return std::max(3.0, std::sqrt(2.0 * std::log(n)) / 0.655);
}

inline spectrum_result fit_peak(spectrum_result spec, search_band band = {}) {
    const std::size_t n = spec.freqs.size();
    if (n < 8) throw config_error("spectrum too short for a peak fit");
    std::size_t lo = 0;
    std::size_t hi = n - 1;
    while (lo < n && spec.freqs[lo] < band.fmin) ++lo;
    while (hi > lo && spec.freqs[hi] > band.fmax) --hi;
    if (lo >= hi) throw config_error("search band lies outside the spectrum");

    std::size_t kmax = lo;
    for (std::size_t k = lo; k <= hi; ++k) {
        if (spec.magnitude[k] > spec.magnitude[kmax]) kmax = k;
    }
    const double peak_val = spec.magnitude[kmax];
    const double df = spec.bin_width();

    // Half-maximum extent, measured against the band median as floor.
    std::vector<double> band_vals(spec.magnitude.begin() + static_cast<long>(lo),
                                  spec.magnitude.begin() + static_cast<long>(hi) + 1);
    std::nth_element(band_vals.begin(), band_vals.begin() + static_cast<long>(band_vals.size() / 2), band_vals.end());
    const double floor_est = band_vals[band_vals.size() / 2];
    const double half = floor_est + 0.5 * (peak_val - floor_est);
    std::size_t a = kmax;
    std::size_t b = kmax;
    while (a > lo && spec.magnitude[a - 1] > half) --a;
    while (b < hi && spec.magnitude[b + 1] > half) ++b;
    const std::size_t half_width = std::max<std::size_t>(3, 2 * std::max(kmax - a, b - kmax) + 1);
    const std::size_t w0 = kmax > lo + half_width ? kmax - half_width : lo;
    const std::size_t w1 = std::min(hi, kmax + half_width);

    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t k = w0; k <= w1; ++k) {
        xs.push_back(spec.freqs[k]);
        ys.push_back(spec.magnitude[k]);
    }
    const double sigma0 = std::max(0.5 * df, static_cast<double>(b - a + 1) * df / 2.3548);
    auto p = detail::fit_gaussian(xs, ys, {peak_val - floor_est, spec.freqs[kmax], sigma0, floor_est});

    peak_fit& pk = spec.peak;
    pk.f0 = p[1];
    pk.fwhm = 2.0 * std::sqrt(2.0 * std::log(2.0)) * std::abs(p[2]);
    pk.height = p[0];
    pk.offset = p[3];
    if (!(pk.f0 >= spec.freqs[w0] - df && pk.f0 <= spec.freqs[w1] + df) || !std::isfinite(pk.fwhm)) {
        // fit wandered off; fall back to the bin maximum
        pk.f0 = spec.freqs[kmax];
        pk.height = peak_val - floor_est;
        pk.fwhm = static_cast<double>(b - a + 1) * df;
        pk.offset = floor_est;
    }

    const double excl = 10.0 * std::max(pk.fwhm, df);
    double s = 0.0;
    double s2 = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = lo; k <= hi; ++k) {
        if (std::abs(spec.freqs[k] - pk.f0) <= excl) continue;
        s += spec.magnitude[k];
        s2 += spec.magnitude[k] * spec.magnitude[k];
        ++cnt;
    }
    if (cnt >= 2) {
        const double m = s / static_cast<double>(cnt);
        pk.baseline_std = std::sqrt(std::max(0.0, (s2 - static_cast<double>(cnt) * m * m) / static_cast<double>(cnt - 1)));
    }
    // significance from the observed bin, a sub-bin fit can overshoot on noise
    const double excess = peak_val - floor_est;
    pk.snr = pk.baseline_std > 0.0 ? excess / pk.baseline_std : std::numeric_limits<double>::infinity();
    pk.threshold = detection_threshold(hi - lo + 1);
    pk.detected = pk.height > 0.0 && excess > 0.0 && pk.snr > pk.threshold;
    return spec;
}

// ---------------------------------------------------------------------------
// Scaling law
// ---------------------------------------------------------------------------

struct scaling_point {
    double t_m = 0.0;
    double snr = 0.0;
};

/** Least-squares slope of log(snr) against log(t_m). */
inline double snr_scaling_fit(const std::vector<scaling_point>& pts) {
    if (pts.size() < 4) throw config_error("scaling fit needs at least four points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    double tmin = std::numeric_limits<double>::infinity();
    double tmax = 0.0;
    for (const auto& p : pts) {
        if (!(p.snr > 0.0) || !(p.t_m > 0.0)) throw config_error("scaling fit needs positive snr and t_m");
        const double x = std::log(p.t_m);
        const double y = std::log(p.snr);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        tmin = std::min(tmin, p.t_m);
        tmax = std::max(tmax, p.t_m);
    }
    if (tmax < 10.0 * tmin) throw config_error("scaling fit needs t_m spanning a decade");
    const auto n = static_cast<double>(pts.size());
    const double den = n * sxx - sx * sx;
    if (!(den > 0.0)) throw config_error("scaling fit needs distinct t_m values");
    return (n * sxy - sx * sy) / den;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline void write_spectrum_csv(std::ostream& os, const spectrum_result& s) {
    os << "f_hz,magnitude\n";
    os.precision(12);
    for (std::size_t k = 0; k < s.freqs.size(); ++k) os << s.freqs[k] << ',' << s.magnitude[k] << '\n';
}

}  // namespace ccdd
