#include "proscan/mechanics.hpp"

#include <cmath>
#include <stdexcept>

namespace proscan {

void PiezoAxisModel::validate() const {
    if (!(gain_nm_per_v > 0.0)) throw std::invalid_argument("piezo gain must be positive");
    if (step_sigma_nm < 0.0 || jitter_sigma_nm < 0.0)
        throw std::invalid_argument("noise sigmas must be non-negative");
    if (backlash_deadband_nm < 0.0)
        throw std::invalid_argument("backlash deadband must be non-negative");
    if (!(std::fabs(crosstalk_slope) < 0.1))
        throw std::invalid_argument("crosstalk slope outside the small-tilt regime (|m| < 0.1)");
}

void AxialTransferModel::validate() const {
    if (!(coarse_ratio > 0.0 && coarse_ratio < 1.0))
        throw std::invalid_argument("coarse ratio must lie in (0, 1)");
    if (!(fine_gain_nm_per_v > 0.0 && fine_gain_nm_per_v < coarse_gain_nm_per_v() &&
          coarse_gain_nm_per_v() < unloaded_gain_nm_per_v))
        throw std::invalid_argument(
            "axial gains must satisfy 0 < fine < coarse_ratio*unloaded < unloaded");
    if (!(fine_regime_threshold_nm >= 0.0))
        throw std::invalid_argument("fine regime threshold must be non-negative");
}

void ScanState::validate(const PiezoAxisModel& model) const {
    if (gap_nm < 0.0) throw std::invalid_argument("gap must be non-negative");
    if (contact != (gap_nm == 0.0))
        throw std::invalid_argument("contact flag inconsistent with gap");
    auto in_band = [&](double pending) {
        return pending >= 0.0 && pending <= model.backlash_deadband_nm;
    };
    if (!in_band(pending_backlash_x_nm) || !in_band(pending_backlash_y_nm))
        throw std::invalid_argument("pending backlash outside [0, deadband]");
}

ScanState apply_axial_voltage(ScanState state, double delta_v, const AxialTransferModel& model) {
    model.validate();
    if (delta_v == 0.0) return state;

    if (delta_v > 0.0) {
        // Approach: walk piecewise through the coarse and fine regimes.
        double volts_left = delta_v;
        if (state.gap_nm > model.fine_regime_threshold_nm) {
            const double coarse_gain = model.coarse_gain_nm_per_v();
            const double volts_to_threshold =
                (state.gap_nm - model.fine_regime_threshold_nm) / coarse_gain;
            const double used = std::min(volts_left, volts_to_threshold);
            state.gap_nm -= used * coarse_gain;
            volts_left -= used;
        }
        if (volts_left > 0.0) {
            state.gap_nm -= volts_left * model.fine_gain_nm_per_v;
        }
        if (state.gap_nm <= 0.0) state.gap_nm = 0.0;
    } else {
        // Retract: mirror image of the approach path.
        double volts_left = -delta_v;
        if (state.gap_nm < model.fine_regime_threshold_nm) {
            const double volts_to_threshold =
                (model.fine_regime_threshold_nm - state.gap_nm) / model.fine_gain_nm_per_v;
            const double used = std::min(volts_left, volts_to_threshold);
            state.gap_nm += used * model.fine_gain_nm_per_v;
            volts_left -= used;
        }
        if (volts_left > 0.0) {
            state.gap_nm += volts_left * model.coarse_gain_nm_per_v();
        }
    }
    state.contact = (state.gap_nm == 0.0);
    return state;
}

ScanState apply_lateral_voltage(ScanState state, double delta_v, Axis axis,
                                const PiezoAxisModel& model, Rng& rng) {
    model.validate();
    if (delta_v == 0.0) return state;

    double& applied_v = (axis == Axis::x) ? state.applied_lateral_v_x : state.applied_lateral_v_y;
    int& last_dir = (axis == Axis::x) ? state.last_direction_x : state.last_direction_y;
    double& pending = (axis == Axis::x) ? state.pending_backlash_x_nm : state.pending_backlash_y_nm;

    const double ramp = 1.0 + model.gain_ramp_per_v * std::fabs(applied_v);
    double nominal = model.gain_nm_per_v * ramp * delta_v;
    applied_v += delta_v;

    const int direction = (nominal > 0.0) ? 1 : -1;
    if (last_dir != 0 && direction != last_dir) pending = model.backlash_deadband_nm;
    last_dir = direction;

    // The deadband eats the first stretch of travel after a reversal.
    double magnitude = std::fabs(nominal);
    const double absorbed = std::min(magnitude, pending);
    pending -= absorbed;
    magnitude -= absorbed;

    double realized = direction * magnitude;
    const bool stochastic = model.step_sigma_nm > 0.0 || model.jitter_sigma_nm > 0.0;
    double wobble = 0.0;
    if (stochastic) {
        realized += rng.normal(0.0, model.step_sigma_nm);
        wobble = rng.normal(0.0, model.jitter_sigma_nm);
    }

    if (axis == Axis::x) {
        state.lateral_x_nm += realized;
        state.lateral_y_nm += model.crosstalk_slope * realized;
        state.wobble_y_nm = wobble;
    } else {
        state.lateral_y_nm += realized;
        state.lateral_x_nm += model.crosstalk_slope * realized;
        state.wobble_x_nm = wobble;
    }
    return state;
}

double bead_roll_translation(double bead_center_shift_nm) {
    if (!std::isfinite(bead_center_shift_nm))
        throw std::invalid_argument("bead_roll_translation: non-finite input");
    return 2.0 * bead_center_shift_nm;
}

}  // namespace proscan
