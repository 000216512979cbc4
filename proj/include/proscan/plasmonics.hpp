#pragma once

#include <complex>
#include <vector>

#include "proscan/materials.hpp"
#include "proscan/rng.hpp"
#include "proscan/spectrum.hpp"

namespace proscan {

/// Gold nanosphere antenna in the air gap, resting on the lower glass.
///
/// The supporting substrate is constant during an approach, so its effect is
/// folded into the unperturbed response through a half-space embedding: the
/// quasi-static contrast is evaluated against
///   eps_host = eps_medium + support_embedding_weight * (eps_substrate - eps_medium).
/// Only the image in the approaching upper substrate varies with the gap.
struct NanoAntennaModel {
    double radius_nm = 40.0;
    double medium_permittivity = 1.0;           // air gap
    double substrate_permittivity = 1.52 * 1.52;  // glass, both sides
    double support_embedding_weight = 0.5;
    bool dynamic_depolarization = true;  // finite-size k^2 correction

    void validate() const;
    double host_permittivity() const {
        return medium_permittivity +
               support_embedding_weight * (substrate_permittivity - medium_permittivity);
    }
    /// Perpendicular image strength of the approaching interface.
    double image_strength() const {
        return (substrate_permittivity - medium_permittivity) /
               (substrate_permittivity + medium_permittivity);
    }
};

/// Quasi-static volume polarizability 4*pi*a^3 (eps - eps_host)/(eps + 2 eps_host), in nm^3.
std::complex<double> polarizability_quasistatic(double wavelength_nm,
                                                const NanoAntennaModel& model,
                                                const Materials& materials);

/// Radiative-reaction correction alpha0 / (1 - i k^3 alpha0 / 6 pi); passing a
/// positive radius adds the dynamic-depolarization term (k^2 / 4 pi a) alpha0.
std::complex<double> polarizability_radiative(std::complex<double> alpha0, double wavelength_nm,
                                              double medium_eps,
                                              double depolarization_radius_nm = 0.0);

/// Image coupling of a perpendicular dipole at height h above an interface of
/// strength beta: alpha / (1 - beta * alpha / (16 pi h^3)).
std::complex<double> effective_polarizability_interface(std::complex<double> alpha, double h_nm,
                                                        double beta, double radius_nm);

/// Full antenna response at the given gap. Pass gap_nm = infinity for the
/// isolated (upper substrate far away) case.
std::complex<double> antenna_effective_polarizability(double wavelength_nm, double gap_nm,
                                                      const NanoAntennaModel& model,
                                                      const Materials& materials);

/// Scattering spectrum k^4 |alpha_eff|^2 sampled on the grid, normalized to
/// unit maximum, with optional multiplicative Gaussian noise.
Spectrum scattering_spectrum(double gap_nm, const std::vector<double>& grid_nm,
                             const NanoAntennaModel& model, const Materials& materials,
                             double noise_sigma = 0.0, Rng* rng = nullptr);

/// Centered moving mean with truncated windows at the edges; output length
/// equals input length. Window must be odd and no longer than the input.
std::vector<double> moving_average(const std::vector<double>& series, int window);

struct ResonanceFit {
    bool converged = false;
    double lambda_res_nm = 0.0;
    double residual_norm = 0.0;
    double image_term = 0.0;  // fitted gap-independent image contribution
    double amplitude = 0.0;
    double background = 0.0;
    int iterations = 0;
};

/// Fits the normalized spectrum to the model lineshape with a free effective
/// resonance (image) parameter, amplitude and background; data above
/// fit_max_wavelength_nm are excluded. Deterministic initialization: the
/// resonance parameter starts at the value whose model peak matches the
/// observed spectrum maximum, amplitude at the maximum intensity, background
/// at the minimum.
ResonanceFit fit_resonance(const Spectrum& spectrum, const NanoAntennaModel& model,
                           const Materials& materials, double fit_max_wavelength_nm = 590.0);

/// Resonance red shift lambda_res(gap) - lambda_res(infinity) for each gap,
/// via noiseless spectra and fit_resonance. Gaps must be sorted descending.
std::vector<std::pair<double, double>> approach_shift_curve(const std::vector<double>& gaps_nm,
                                                            const NanoAntennaModel& model,
                                                            const Materials& materials,
                                                            const std::vector<double>& grid_nm);

}  // namespace proscan
