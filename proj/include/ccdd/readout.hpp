#pragma once

/**
 * @file  readout.hpp
 * @brief Spin-dependent photoluminescence, Poisson photon counts and contrast estimators.
 *
 * PL rate for one gated readout: lambda = mean_photons (1 + kappa sz), with
 * sz = +1 (m_s = 0) bright. Longitudinal decay dims the whole readout by
 * exp(-elapsed / T1), which the ratio estimators cancel to first order.
 */

#include "ccdd/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

namespace ccdd {

struct readout_config {
    double mean_photons = 1.8;
    double contrast_kappa = 0.08;  // calibrated, see tools/calibrate.cpp
    double gate = 350e-9;        // s
    double laser_init = 2e-6;    // s

    void validate() const {
        if (!(mean_photons > 0.0) || !std::isfinite(mean_photons)) throw config_error("mean_photons must be positive");
        if (!(contrast_kappa > 0.0 && contrast_kappa < 1.0)) throw config_error("contrast_kappa must lie in (0, 1)");
        if (!(gate > 0.0) || !(gate <= laser_init)) throw config_error("gate must be positive and within laser_init");
    }
};

struct readout_outcome {
    std::uint64_t photons = 0;
    double timestamp = 0.0;  // s from run start
};

/** Expected photons for one readout at spin projection sz. */
inline double pl_rate(double sz, const readout_config& cfg) {
    if (!(std::abs(sz) <= 1.0 + 1e-6)) throw std::out_of_range("sz outside [-1, 1]");
    return std::max(0.0, cfg.mean_photons * (1.0 + cfg.contrast_kappa * sz));
}

/** Deterministic Poisson photon source. */
class photon_stream {
public:
    explicit photon_stream(std::uint64_t seed) : eng_(seed) {}
    explicit photon_stream(std::mt19937_64 eng) : eng_(std::move(eng)) {}

    std::uint64_t sample(double lambda) {
        if (!(lambda > 0.0)) return 0;
        std::poisson_distribution<std::uint64_t> d(lambda);
        return d(eng_);
    }

    /** Total count of n independent readouts at rate lambda (Poisson additivity). */
    std::uint64_t sample_sum(double lambda, std::uint64_t n) { return sample(lambda * static_cast<double>(n)); }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

inline std::uint64_t sample_photons(double lambda, photon_stream& stream) { return stream.sample(lambda); }

/** (P_T - P_{T+dT}) / P_{T+dT}. */
inline double contrast_delta_t(double p_t, double p_tdt) {
    if (!(p_tdt > 0.0)) throw estimator_undefined("reference readout P_{T+dT} is zero");
    return (p_t - p_tdt) / p_tdt;
}

/** (P_T - P_0) / P_0, P_0 taken with drive and signal off. */
inline double contrast_zero(double p_t, double p_0) {
    if (!(p_0 > 0.0)) throw estimator_undefined("reference readout P_0 is zero");
    return (p_t - p_0) / p_0;
}

/** Readout rate after `elapsed` seconds of sequence, including T1 dimming. */
inline double decayed_rate(double sz, double elapsed, double T1, const readout_config& cfg) {
    return pl_rate(sz, cfg) * std::exp(-elapsed / T1);
}

inline void write_photon_csv(std::ostream& os, const std::vector<std::uint64_t>& counts, double dt, double t0 = 0.0) {
    os << "index,t_s,photons\n";
    os.precision(12);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        os << i << ',' << t0 + dt * static_cast<double>(i) << ',' << counts[i] << '\n';
    }
}

}  // namespace ccdd
