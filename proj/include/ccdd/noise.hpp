#pragma once

/**
 * @file  noise.hpp
 * @brief Quasi-static ensemble disorder, parallel ensemble averaging and T1 decay.
 */

#include "ccdd/disorder.hpp"
#include "ccdd/error.hpp"
#include "ccdd/parallel.hpp"
#include "ccdd/spin_core.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace ccdd {

struct noise_config {
    double T2star = 60e-9;            // s
    double drive_frac_sigma = 0.045;  // fractional std of Omega, see tools/calibrate_noise
    double T1 = 10e-6;                // s
    std::uint64_t seed = 1;
    bool antithetic = true;  // realization 2k+1 mirrors 2k about the mean

    void validate() const {
        if (!(T2star > 0.0) || !(T1 > 0.0)) throw config_error("T2star and T1 must be positive");
        if (!(drive_frac_sigma >= 0.0 && drive_frac_sigma < 0.1)) {
            throw config_error("drive_frac_sigma must lie in [0, 0.1)");
        }
    }

    /** Detuning std sqrt(2)/(2 pi T2star) in Hz; zero when T2star is infinite. */
    double detuning_sigma() const { return std::isinf(T2star) ? 0.0 : std::sqrt(2.0) / (two_pi * T2star); }

    bool is_noiseless() const { return detuning_sigma() == 0.0 && drive_frac_sigma == 0.0; }

    static noise_config noiseless() {
        noise_config c;
        c.T2star = std::numeric_limits<double>::infinity();
        c.drive_frac_sigma = 0.0;
        return c;
    }
};

/** SplitMix64 finalizer; turns (seed, index) into well-separated engine seeds. */
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/** Independent engine for stream `index` under `seed`. */
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
}

/**
 * Realization `index` of the ensemble. Pure in (cfg, index). With
 * cfg.antithetic, odd indices reuse the draws of index-1 mirrored about the
 * mean, which cancels odd-order disorder terms in small ensembles.
 */
inline disorder_realization sample_realization(const noise_config& cfg, std::uint64_t index) {
    if (cfg.is_noiseless()) return {};
    const bool mirror = cfg.antithetic && (index % 2 == 1);
    const std::uint64_t base = cfg.antithetic ? index / 2 : index;
    auto eng = make_stream(cfg.seed, base);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double a = n01(eng);
    const double b = n01(eng);
    const double sign = mirror ? -1.0 : 1.0;
    disorder_realization r;
    r.detuning = sign * a * cfg.detuning_sigma();
    r.drive_scale = 1.0 + sign * b * cfg.drive_frac_sigma;
    return r;
}

struct ensemble_trace {
    std::vector<double> mean;
    std::vector<double> std_error;  // sample std / sqrt(n); zero for n = 1
    std::size_t n_realizations = 0;
};

/**
 * Mean of trace_fn over realizations 0..n-1. Per-realization traces are
 * accumulated in index order, so the result is bit-identical for any
 * thread count. trace_fn: disorder_realization -> std::vector<double>.
 */
template <class TraceFn>
ensemble_trace ensemble_average(TraceFn&& trace_fn, const noise_config& cfg, std::size_t n_realizations) {
    if (n_realizations == 0) throw config_error("ensemble needs at least one realization");
    ensemble_trace out;
    out.n_realizations = n_realizations;

    if (cfg.is_noiseless()) {
        out.mean = trace_fn(disorder_realization{});
        out.std_error.assign(out.mean.size(), 0.0);
        return out;
    }

    constexpr std::size_t batch = 64;
    std::vector<double> sum;
    std::vector<double> sum_sq;
    std::vector<std::vector<double>> slots(std::min(batch, n_realizations));
    for (std::size_t start = 0; start < n_realizations; start += batch) {
        const std::size_t count = std::min(batch, n_realizations - start);
        parallel_for(count, [&](std::size_t i) { slots[i] = trace_fn(sample_realization(cfg, start + i)); });
        for (std::size_t i = 0; i < count; ++i) {
            const auto& tr = slots[i];
            if (sum.empty()) {
                sum.assign(tr.size(), 0.0);
                sum_sq.assign(tr.size(), 0.0);
            }
            if (tr.size() != sum.size()) throw std::runtime_error("ensemble traces differ in length");
            for (std::size_t k = 0; k < tr.size(); ++k) {
                sum[k] += tr[k];
                sum_sq[k] += tr[k] * tr[k];
            }
        }
    }
    const auto n = static_cast<double>(n_realizations);
    out.mean.resize(sum.size());
    out.std_error.resize(sum.size());
    for (std::size_t k = 0; k < sum.size(); ++k) {
        out.mean[k] = sum[k] / n;
        const double var = n > 1.0 ? std::max(0.0, (sum_sq[k] - n * out.mean[k] * out.mean[k]) / (n - 1.0)) : 0.0;
        out.std_error[k] = std::sqrt(var / n);
    }
    return out;
}

/** contrast * exp(-elapsed / T1). */
inline double apply_t1_decay(double contrast, double elapsed, const noise_config& cfg) {
    if (elapsed < 0.0) throw config_error("elapsed time must be non-negative");
    return contrast * std::exp(-elapsed / cfg.T1);
}

}  // namespace ccdd
