#include "ccdd/dsp.hpp"
#include "ccdd/noise.hpp"
#include "ccdd/readout.hpp"

#include <catch_amalgamated.hpp>

#include <complex>
#include <random>
#include <sstream>

using namespace ccdd;
using Catch::Approx;

namespace {
std::vector<double> naive_dft_magnitude(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> out(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += x[i] * std::polar(1.0, -two_pi * static_cast<double>(k * i % n) / static_cast<double>(n));
        }
        out[k] = std::abs(s);
    }
    return out;
}

std::vector<double> naive_acf(const std::vector<double>& x) {
    const std::size_t n = x.size();
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(n);
    std::vector<double> a(n);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i + k < n; ++i) s += (x[i] - m) * (x[i + k] - m);
        a[k] = s / static_cast<double>(n);
    }
    return a;
}

std::vector<double> gaussian_line(std::size_t n, double df, double A, double mu, double sig, double c) {
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = (static_cast<double>(k) * df - mu) / sig;
        y[k] = c + A * std::exp(-0.5 * u * u);
    }
    return y;
}

spectrum_result as_spectrum(const std::vector<double>& mag, double df) {
    spectrum_result s;
    s.magnitude = mag;
    for (std::size_t k = 0; k < mag.size(); ++k) s.freqs.push_back(static_cast<double>(k) * df);
    s.transform_length = 2 * (mag.size() - 1);
    return s;
}
}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("gate_and_bin keeps in-gate photons") {
    const double period = 1.0 / 400e3;
    std::vector<double> tags{0.1e-6, 0.2e-6, period + 0.05e-6, 3 * period + 0.3e-6};
    const auto tr = gate_and_bin(tags, 350e-9);
    REQUIRE(tr.counts == std::vector<std::uint64_t>{2, 1, 0, 1});
    REQUIRE(tr.dt == Approx(period));

    std::vector<double> late{0.5e-6, period + 1e-6, 2 * period + 2e-6};
    const auto z = gate_and_bin(late, 350e-9);
    for (auto c : z.counts) REQUIRE(c == 0);
    REQUIRE(z.counts.size() == 3);
}

TEST_CASE("gate_and_bin inverts a per-bin Poisson draw") {
    photon_stream ps(21);
    const double period = 1.0 / 400e3;
    std::vector<std::uint64_t> draw(5000);
    std::vector<double> tags;
    std::mt19937_64 eng(4);
    std::uniform_real_distribution<double> in_gate(0.0, 350e-9);
    std::uniform_real_distribution<double> out_gate(400e-9, period * 0.99);
    for (std::size_t b = 0; b < draw.size(); ++b) {
        draw[b] = ps.sample(1.8);
        std::vector<double> local;
        for (std::uint64_t i = 0; i < draw[b]; ++i) local.push_back(static_cast<double>(b) * period + in_gate(eng));
        local.push_back(static_cast<double>(b) * period + out_gate(eng));  // background outside the gate
        std::sort(local.begin(), local.end());
        tags.insert(tags.end(), local.begin(), local.end());
    }
    const auto tr = gate_and_bin(tags, 350e-9, 400e3, draw.size());
    REQUIRE(tr.counts == draw);
}

TEST_CASE("gate_and_bin rejects unsorted tags") {
    REQUIRE_THROWS_AS(gate_and_bin({2e-6, 1e-6}, 350e-9), std::invalid_argument);
}

// ---------------------------------------------------------------------------

TEST_CASE("autocorrelation basics") {
    REQUIRE(autocorrelate(std::vector<double>(100, 3.0)) == std::vector<double>(100, 0.0));
    std::mt19937_64 eng(1);
    std::normal_distribution<double> n;
    std::vector<double> x(500);
    for (auto& v : x) v = n(eng) + 2.0;
    const auto a = autocorrelate(x);
    double m = 0, var = 0;
    for (double v : x) m += v;
    m /= 500.0;
    for (double v : x) var += (v - m) * (v - m);
    REQUIRE(a[0] == Approx(var / 500.0).epsilon(1e-12));
    REQUIRE_THROWS_AS(autocorrelate(std::vector<double>{1.0}), config_error);
}

TEST_CASE("FFT autocorrelation matches the direct sum") {
    std::mt19937_64 eng(2);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    for (std::size_t n : {10u, 64u, 65u, 1000u, 1537u}) {
        std::vector<double> x(n);
        for (auto& v : x) v = u(eng);
        const auto a = autocorrelate(x);
        const auto b = naive_acf(x);
        for (std::size_t k = 0; k < n; ++k) REQUIRE(a[k] == Approx(b[k]).margin(1e-10));
    }
}

TEST_CASE("biased ACF of a cosine has the closed form") {
    const std::size_t N = 4000;
    const double w = two_pi * 37.0 / static_cast<double>(N);  // integer cycles: zero mean
    std::vector<double> x(N);
    for (std::size_t i = 0; i < N; ++i) x[i] = std::cos(w * static_cast<double>(i));
    const auto a = autocorrelate(x);
    for (std::size_t k : {0u, 1u, 17u, 500u, 2000u, 3999u}) {
        const double M = static_cast<double>(N - k);
        const double tail = std::sin(M * w) * std::cos(w * static_cast<double>(N - 1)) / std::sin(w);
        const double expect = (M * std::cos(w * static_cast<double>(k)) + tail) / (2.0 * static_cast<double>(N));
        REQUIRE(a[k] == Approx(expect).margin(1e-9));
    }
}

TEST_CASE("ACF estimates match the ensemble ACF of an AR(1) process") {
    const double rho = 0.6;
    const std::size_t N = 2000;
    const int seeds = 100;
    std::vector<double> mean(6, 0.0), sq(6, 0.0);
    for (int s = 0; s < seeds; ++s) {
        auto eng = make_stream(77, static_cast<std::uint64_t>(s));
        std::normal_distribution<double> n;
        std::vector<double> x(N);
        double prev = n(eng) / std::sqrt(1.0 - rho * rho);
        for (auto& v : x) {
            prev = rho * prev + n(eng);
            v = prev;
        }
        const auto a = autocorrelate(x);
        for (std::size_t k = 0; k < 6; ++k) {
            mean[k] += a[k] / seeds;
            sq[k] += a[k] * a[k] / seeds;
        }
    }
    for (std::size_t k = 0; k < 6; ++k) {
        const double gamma = std::pow(rho, static_cast<double>(k)) / (1.0 - rho * rho);
        const double expect = (1.0 - static_cast<double>(k) / N) * gamma;
        const double se = std::sqrt((sq[k] - mean[k] * mean[k]) / seeds);
        // mean subtraction biases by O(1/N) of the summed ACF
        REQUIRE(std::abs(mean[k] - expect) < 4.0 * se + 4.0 * gamma / N * (1 + rho) / (1 - rho));
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("spectrum of an impulse is flat") {
    std::vector<double> x(256, 0.0);
    x[0] = 1.0;
    const auto s = spectrum(x, 1e-3);
    for (double m : s.magnitude) REQUIRE(m == Approx(1.0));
    REQUIRE(s.bin_width() == Approx(1.0 / 0.256));
}

TEST_CASE("spectrum matches a naive DFT") {
    std::mt19937_64 eng(8);
    std::normal_distribution<double> n;
    for (std::size_t len : {37u, 64u, 100u}) {
        std::vector<double> x(len);
        for (auto& v : x) v = n(eng);
        const auto s = spectrum(x, 1.0);
        const auto o = naive_dft_magnitude(x);
        REQUIRE(s.magnitude.size() == o.size());
        for (std::size_t k = 0; k < o.size(); ++k) REQUIRE(s.magnitude[k] == Approx(o[k]).margin(1e-9));
    }
}

TEST_CASE("Parseval holds to 1e-9") {
    std::mt19937_64 eng(9);
    std::normal_distribution<double> n;
    for (std::size_t len : {1000u, 1001u}) {
        for (std::size_t pad : {1u, 3u}) {
            std::vector<double> x(len);
            double e = 0.0;
            for (auto& v : x) {
                v = n(eng);
                e += v * v;
            }
            REQUIRE(spectral_energy(spectrum(x, 1.0, pad)) == Approx(e).epsilon(1e-9));
        }
    }
}

TEST_CASE("16 kHz tone at 400 kHz for 10 s lands in its bin") {
    const std::size_t N = 4000000;
    const double dt = 1.0 / 400e3;
    std::vector<double> x(N);
    for (std::size_t i = 0; i < N; ++i) x[i] = std::cos(two_pi * 16e3 * static_cast<double>(i) * dt);
    const auto s = spectrum(x, dt);
    std::size_t best = 0;
    for (std::size_t k = 0; k < s.magnitude.size(); ++k) {
        if (s.magnitude[k] > s.magnitude[best]) best = k;
    }
    REQUIRE(s.freqs[best] == Approx(16e3));
    REQUIRE(best == 160000);
    REQUIRE(s.magnitude[best] == Approx(N / 2.0).epsilon(1e-9));
}

TEST_CASE("on-grid tones land exactly in their bins; spectrum is linear") {
    const std::size_t N = 512;
    for (std::size_t k : {1u, 2u, 100u, 255u}) {
        std::vector<double> x(N);
        for (std::size_t i = 0; i < N; ++i) x[i] = std::sin(two_pi * static_cast<double>(k * i) / N);
        const auto s = spectrum(x, 1.0);
        const auto it = std::max_element(s.magnitude.begin(), s.magnitude.end());
        REQUIRE(static_cast<std::size_t>(it - s.magnitude.begin()) == k);
        std::vector<double> y = x;
        for (auto& v : y) v *= 2.5;
        const auto t = spectrum(y, 1.0);
        for (std::size_t j = 0; j < s.magnitude.size(); ++j) REQUIRE(t.magnitude[j] == Approx(2.5 * s.magnitude[j]).margin(1e-9));
    }
}

// ---------------------------------------------------------------------------

TEST_CASE("fit_peak recovers a clean Gaussian") {
    const double df = 0.1;
    const auto y = gaussian_line(2001, df, 5.0, 61.23, 0.37, 1.0);
    const auto s = fit_peak(as_spectrum(y, df), {10.0, 190.0});
    REQUIRE(s.peak.detected);
    REQUIRE(s.peak.f0 == Approx(61.23).margin(1e-6));
    REQUIRE(s.peak.fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))) == Approx(0.37).epsilon(0.02));
    REQUIRE(s.peak.height == Approx(5.0).epsilon(1e-6));
}

TEST_CASE("fit_peak reports flat noise as not detected") {
    std::mt19937_64 eng(13);
    std::normal_distribution<double> n(10.0, 1.0);
    std::vector<double> y(4000);
    for (auto& v : y) v = std::abs(n(eng));
    const auto s = fit_peak(as_spectrum(y, 1.0), {5.0, 3990.0});
    REQUIRE_FALSE(s.peak.detected);
}

TEST_CASE("fit_peak is unbiased on noisy peaks") {
    const double df = 1.0;
    std::normal_distribution<double> n(0.0, 0.2);
    double bias = 0.0;
    int hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto eng = make_stream(99, static_cast<std::uint64_t>(trial));
        const double mu = 500.0 + 0.01 * trial;
        auto y = gaussian_line(1000, df, 10.0, mu, 2.0, 1.0);
        for (auto& v : y) v += n(eng);
        const auto s = fit_peak(as_spectrum(y, df), {50.0, 950.0});
        REQUIRE(s.peak.detected);
        REQUIRE(s.peak.snr > 20.0);
        bias += (s.peak.f0 - mu) / df;
        ++hits;
    }
    REQUIRE(std::abs(bias / hits) < 0.1);
}

TEST_CASE("fit_peak rejects a band outside the spectrum") {
    const auto y = gaussian_line(100, 1.0, 1.0, 50.0, 2.0, 0.0);
    REQUIRE_THROWS_AS(fit_peak(as_spectrum(y, 1.0), {500.0, 600.0}), config_error);
}

// ---------------------------------------------------------------------------

TEST_CASE("SNR scaling exponent") {
    std::vector<scaling_point> p;
    for (double t : {0.5, 1.0, 2.0, 5.0, 10.0}) p.push_back({t, 7.3 * t});
    REQUIRE(snr_scaling_fit(p) == Approx(1.0).margin(1e-6));
    for (auto& q : p) q.snr = 3.0 * std::sqrt(q.t_m);
    REQUIRE(snr_scaling_fit(p) == Approx(0.5).margin(1e-6));
    p[2].snr = 0.0;
    REQUIRE_THROWS_AS(snr_scaling_fit(p), config_error);
    REQUIRE_THROWS_AS(snr_scaling_fit({{1, 1}, {2, 2}, {3, 3}}), config_error);
    REQUIRE_THROWS_AS(snr_scaling_fit({{1, 1}, {2, 2}, {3, 3}, {4, 4}}), config_error);
}

TEST_CASE("spectrum CSV export") {
    std::ostringstream os;
    write_spectrum_csv(os, as_spectrum({1.0, 2.0}, 0.5));
    REQUIRE(os.str() == "f_hz,magnitude\n0,1\n0.5,2\n");
}

TEST_CASE("photon trace validation") {
    photon_trace t;
    t.counts = {1};
    REQUIRE_THROWS_AS(t.validate(), config_error);
    t.counts = {1, 2, 3};
    t.dt = 2.5e-6;
    REQUIRE(t.duration() == Approx(7.5e-6));
}
