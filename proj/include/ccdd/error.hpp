#pragma once

/**
 * @file  error.hpp
 * @brief Exception types shared by the ccdd library.
 *
 * Three families map onto the CLI exit codes: malformed input
 * (config_error, exit 2), physically invalid setups (physics_error,
 * exit 3) and everything else (std::runtime_error, exit 1).
 */

#include <stdexcept>
#include <string>
#include <vector>

namespace ccdd {

/** Schema or parse failure in user-supplied configuration. */
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** A setup that is well-formed but violates a physical or hardware constraint. */
class physics_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class drive_amplitude_error : public physics_error {
public:
    using physics_error::physics_error;
};

class drive_resonance_error : public physics_error {
public:
    using physics_error::physics_error;
};

/** Integrator step too coarse for the local field strength. */
class step_size_error : public physics_error {
public:
    step_size_error(const std::string& what, double angle)
        : physics_error(what), angle_(angle) {}
    double angle() const noexcept { return angle_; }

private:
    double angle_;
};

class timing_error : public physics_error {
public:
    using physics_error::physics_error;
};

/** Beat frequency outside the unaliased band of the readout sampling. */
class nyquist_error : public physics_error {
public:
    using physics_error::physics_error;
};

/** One or more tones off the waveform memory frequency grid. */
class grid_error : public physics_error {
public:
    grid_error(const std::string& what, std::vector<double> offending)
        : physics_error(what), offending_(std::move(offending)) {}
    const std::vector<double>& offending() const noexcept { return offending_; }

private:
    std::vector<double> offending_;
};

/** Ratio estimator with an empty (zero) reference; accumulate more shots. */
class estimator_undefined : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/** Fit or derivative that carries no information (flat data, zero slope). */
class unmeasurable_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ccdd
