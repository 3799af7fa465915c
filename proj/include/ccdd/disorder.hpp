#pragma once

namespace ccdd {

/**
 * One quasi-static member of the ensemble: a fixed detuning of the spin
 * transition and a fixed scale on the carrier Rabi amplitude. The default
 * value is the noiseless spin.
 */
struct disorder_realization {
    double detuning = 0.0;     // Hz, added to the z field
    double drive_scale = 1.0;  // multiplies Omega wherever it appears in the drive
};

}  // namespace ccdd
