#pragma once

#include "proscan/rng.hpp"

namespace proscan {

/// Lateral piezo axis: voltage-to-step gain with crosstalk, on-axis step
/// spread, perpendicular jitter, optional reversal deadband and an optional
/// linear gain ramp versus accumulated voltage.
struct PiezoAxisModel {
    double gain_nm_per_v = 7.3;
    double crosstalk_slope = -0.023;   // orthogonal displacement per unit on-axis step
    double step_sigma_nm = 0.0;        // on-axis spread of realized steps
    double jitter_sigma_nm = 0.0;      // perpendicular wobble, resampled per step
    double backlash_deadband_nm = 0.0; // lost travel after a direction reversal
    double gain_ramp_per_v = 0.0;      // relative gain increase per accumulated volt

    void validate() const;
};

/// Axial transfer: stiff-handle displacement is demagnified onto the gap.
/// Far from contact the substrate follows at coarse_ratio of the piezo travel;
/// below fine_regime_threshold the lever reduction brings it to fine_gain.
struct AxialTransferModel {
    double unloaded_gain_nm_per_v = 380.0;
    double fine_gain_nm_per_v = 2.0;
    double coarse_ratio = 1.9 / 13.0;
    double fine_regime_threshold_nm = 500.0;

    void validate() const;
    double coarse_gain_nm_per_v() const { return coarse_ratio * unloaded_gain_nm_per_v; }
};

enum class Axis { x, y };

/// Instantaneous geometry of the two substrates. A plain value: copy freely,
/// evolve through the apply_* transition functions.
struct ScanState {
    double gap_nm = 0.0;
    double lateral_x_nm = 0.0;  // systematic position (steps + crosstalk)
    double lateral_y_nm = 0.0;
    double wobble_x_nm = 0.0;   // perpendicular wobble from the most recent step
    double wobble_y_nm = 0.0;
    int last_direction_x = 0;   // -1, 0, +1
    int last_direction_y = 0;
    double pending_backlash_x_nm = 0.0;
    double pending_backlash_y_nm = 0.0;
    double applied_lateral_v_x = 0.0;
    double applied_lateral_v_y = 0.0;
    bool contact = false;

    double observed_x_nm() const { return lateral_x_nm + wobble_x_nm; }
    double observed_y_nm() const { return lateral_y_nm + wobble_y_nm; }

    void validate(const PiezoAxisModel& model) const;
};

/// Closes (positive volts) or opens the gap. The step integrates across the
/// coarse/fine regime boundary and clamps at contact.
ScanState apply_axial_voltage(ScanState state, double delta_v, const AxialTransferModel& model);

/// Advances one lateral axis by one voltage step. Draw order per step is
/// fixed (on-axis spread, then perpendicular wobble) so sequences are
/// reproducible for a given stream.
ScanState apply_lateral_voltage(ScanState state, double delta_v, Axis axis,
                                const PiezoAxisModel& model, Rng& rng);

/// Plate rolling on spheres: the plate advances twice the sphere centers.
double bead_roll_translation(double bead_center_shift_nm);

}  // namespace proscan
