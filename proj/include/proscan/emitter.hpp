#pragma once

#include <cstdint>
#include <vector>

#include "proscan/materials.hpp"
#include "proscan/plasmonics.hpp"
#include "proscan/rng.hpp"

namespace proscan {

/// Colloidal quantum dot: bi-exponential decay (biexciton + exciton), fixed
/// dipole orientation relative to the sphere-emitter axis.
struct QuantumEmitterModel {
    double dipole_polar_angle_rad = 0.0;  // 0 = along the sphere-emitter axis
    double intrinsic_quantum_yield = 0.9;
    double exciton_lifetime_ns = 29.4;
    double biexciton_lifetime_ns = 2.1;
    double biexciton_fraction = 0.3;  // photon fraction in the fast component
    double emission_wavelength_nm = 652.0;
    double excitation_wavelength_nm = 532.0;
    double repetition_rate_mhz = 4.0;

    double period_ns() const { return 1e3 / repetition_rate_mhz; }
    void validate() const;
};

/// Rate bookkeeping relative to the free emitter. Factors are normalized to
/// the free-space radiative rate; quantum_yield folds in the intrinsic yield.
struct RateModification {
    double excitation_factor = 1.0;   // K
    double radiative_factor = 1.0;    // Gamma_r / Gamma_r0
    double nonradiative_added = 0.0;  // Gamma_nr,antenna / Gamma_r0
    double quantum_yield = 1.0;

    /// Total decay-rate modification Gamma_tot / Gamma_tot0.
    double total_rate_factor(double eta0) const {
        return eta0 * (radiative_factor + nonradiative_added) + (1.0 - eta0);
    }
};

/// Excitation enhancement K = |E_local . d|^2 / |E_0 . d|^2 for an emitter on
/// the sphere axis, separation (surface to emitter) delta_nm, incident field
/// along the axis. On axis the dipole projection cancels for any tilt.
double field_enhancement(double delta_nm, double theta_rad, double wavelength_exc_nm,
                         const NanoAntennaModel& antenna, const Materials& materials);

struct DecayRateFactors {
    double radiative_factor = 1.0;
    double nonradiative_added = 0.0;
    int terms_used = 0;
};

/// Radiative and nonradiative modification for a dipole at separation delta_nm
/// from the sphere surface, orientation-resolved (cos^2/sin^2 weights).
///
/// The nonradiative part is the quasi-static multipole sum over sphere modes;
/// it stops when the relative increment drops below rel_increment or n_max
/// terms are used. Hitting n_max with the increment still above 1e-6 raises
/// ConvergenceError carrying the partial sum; pass rel_increment = 0 to force
/// exactly n_max terms (used by the self-convergence oracle).
DecayRateFactors decay_rates_near_sphere(double delta_nm, double theta_rad,
                                         double wavelength_em_nm,
                                         const NanoAntennaModel& antenna,
                                         const Materials& materials, int n_max = 500,
                                         double rel_increment = 1e-9);

/// Composes excitation, decay factors and the quantum-yield formula for an
/// on-axis emitter at the given separation.
RateModification rate_modification(double delta_nm, const QuantumEmitterModel& emitter,
                                   const NanoAntennaModel& antenna, const Materials& materials);

/// F = K * eta / eta0 (collection efficiency fixed at 1).
double fluorescence_enhancement(double excitation_factor, const RateModification& rates,
                                double eta0);

/// Optional localized protrusion on the sphere surface: a secondary small
/// sphere whose response is added independently (no cross coupling).
struct HotSpotModel {
    bool enabled = false;
    double radius_nm = 4.0;
    double surface_offset_nm = 15.0;  // lateral position of the protrusion center
};

struct LinescanPoint {
    double offset_nm = 0.0;
    double enhancement = 1.0;
    double total_rate_ns_inv = 0.0;  // exciton channel
    double excitation_factor = 1.0;
    double radiative_factor = 1.0;
    double nonradiative_added = 0.0;
    double quantum_yield = 1.0;
};

/// Lateral scan of the emitter plane at constant vertical gap above the
/// sphere top. A tilted dipole produces an asymmetric profile.
std::vector<LinescanPoint> linescan_enhancement(const std::vector<double>& offsets_nm,
                                                double gap_nm,
                                                const QuantumEmitterModel& emitter,
                                                const NanoAntennaModel& antenna,
                                                const Materials& materials,
                                                const HotSpotModel& hot_spot = {});

/// Time-binned photon counts from a simulated pulsed-excitation measurement.
struct DecayHistogram {
    double bin_width_ns = 0.0;
    std::vector<std::uint64_t> counts;
    double irf_sigma_ns = 0.0;
    std::uint64_t total_photons = 0;
    double period_ns = 0.0;  // whole number of bins

    double bin_center_ns(std::size_t i) const { return (static_cast<double>(i) + 0.5) * bin_width_ns; }
};

/// Draws each photon from the rate mixture, adds Gaussian timing jitter,
/// wraps into one repetition period and bins. Deterministic per stream.
DecayHistogram simulate_decay_histogram(double rate_fast_ns_inv, double rate_slow_ns_inv,
                                        double fast_fraction, std::uint64_t n_photons,
                                        double irf_sigma_ns, double bin_width_ns,
                                        double period_ns, Rng& rng);

struct BiexpFit {
    bool converged = false;
    bool irf_limited = false;             // tau_fast below twice the IRF width
    bool single_exponential_fallback = false;
    double tau_fast_ns = 0.0;
    double tau_slow_ns = 0.0;
    double amplitude_fast = 0.0;
    double amplitude_slow = 0.0;
    double background = 0.0;
    double tau_fast_err_ns = 0.0;
    double tau_slow_err_ns = 0.0;
    double deviance = 0.0;
    int iterations = 0;
};

/// Poisson maximum-likelihood bi-exponential fit over [t_min, t_max].
BiexpFit fit_biexponential(const DecayHistogram& hist, double t_min_ns, double t_max_ns);

/// Slow multiplicative drift applied to the emission rate of a trace.
struct DriftModel {
    enum class Kind { none, linear, sinusoidal };
    Kind kind = Kind::none;
    double relative_per_s = 0.0;  // linear: fractional change per second
    double amplitude = 0.0;       // sinusoidal: fractional amplitude
    double period_s = 600.0;

    double value(double t_s) const;
};

/// Poisson counts per bin at rate enhancement * base_rate (counts/s).
std::vector<std::uint64_t> intensity_trace(double enhancement, double base_rate_cps,
                                           double duration_s, double bin_s,
                                           const DriftModel& drift, Rng& rng);

struct PoissonTestResult {
    double mean = 0.0;
    double fano = 0.0;
    double chi2 = 0.0;
    double p_value = 0.0;
    int dof = 0;
};

/// Chi-squared goodness of fit of the binned counts against Poisson(mean),
/// merging tail bins so every expected count is at least 5.
PoissonTestResult poisson_goodness(const std::vector<std::uint64_t>& trace);

}  // namespace proscan
