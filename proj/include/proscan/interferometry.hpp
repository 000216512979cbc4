#pragma once

#include <functional>

#include "proscan/rng.hpp"
#include "proscan/spectrum.hpp"

namespace proscan {

/// Smooth multiplicative source profile for white-light spectra.
struct SourceEnvelope {
    std::function<double(double)> value;  // wavelength_nm -> relative intensity

    static SourceEnvelope flat();
    /// Broadband-lamp-like bump: Gaussian in wavelength, peak 1 at center.
    static SourceEnvelope lamp(double center_nm = 580.0, double sigma_nm = 160.0);
};

/// Exact three-layer glass/air/glass reflectance at normal incidence.
double cavity_reflectance(double gap_nm, double wavelength_nm, double glass_index = 1.52);

/// Samples the cavity on a wavelength grid, applies the source envelope and
/// multiplicative Gaussian noise of fractional sigma.
Spectrum white_light_spectrum(double gap_nm, const std::vector<double>& grid_nm,
                              double noise_sigma, Rng& rng,
                              const SourceEnvelope& envelope = SourceEnvelope::flat(),
                              double glass_index = 1.52);

/// Cavity thickness from two neighboring intensity maxima:
/// d = lambda1*lambda2 / (2*(lambda2 - lambda1)).
double gap_from_fsr(double lambda1_nm, double lambda2_nm);

/// Prominence-filtered interior maxima, refined by 3-point parabolic
/// interpolation. `sufficient` is false when fewer than two maxima survive —
/// the coarse method's breakdown at small gaps, not an error.
struct FringeExtrema {
    std::vector<double> maxima_nm;
    bool sufficient = false;
};

FringeExtrema find_fringe_extrema(const Spectrum& spectrum, double min_prominence = 0.1);

/// Gap estimate averaged over consecutive maxima pairs. Requires at least
/// three maxima (two full fringe periods) to confirm periodicity.
struct GapEstimate {
    bool sufficient = false;
    double gap_nm = 0.0;
    int maxima_count = 0;
};

GapEstimate estimate_gap_fsr(const Spectrum& spectrum, double min_prominence = 0.1);

/// Displacement from a monochromatic reflection trace: full oscillations count
/// lambda/2 each, plus a fractional tail from the phase past the last extremum.
struct DisplacementEstimate {
    bool sufficient = false;
    double displacement_nm = 0.0;
    int full_oscillations = 0;
};

DisplacementEstimate displacement_from_fringes(const std::vector<double>& trace,
                                               double wavelength_nm);

}  // namespace proscan
