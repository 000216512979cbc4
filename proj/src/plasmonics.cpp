#include "proscan/plasmonics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "proscan/errors.hpp"
#include "proscan/fit.hpp"

namespace proscan {

void NanoAntennaModel::validate() const {
    if (!(radius_nm > 0.0)) throw std::invalid_argument("antenna radius must be positive");
    if (!(medium_permittivity > 0.0))
        throw std::invalid_argument("medium permittivity must be positive");
    if (!(substrate_permittivity > 1.0))
        throw std::invalid_argument("substrate permittivity must exceed 1 (dielectric)");
    if (support_embedding_weight < 0.0 || support_embedding_weight > 1.0)
        throw std::invalid_argument("support embedding weight must lie in [0, 1]");
}

std::complex<double> polarizability_quasistatic(double wavelength_nm,
                                                const NanoAntennaModel& model,
                                                const Materials& materials) {
    model.validate();
    const std::complex<double> eps = materials.permittivity_gold(wavelength_nm);
    const double eps_host = model.host_permittivity();
    const double a = model.radius_nm;
    return 4.0 * M_PI * a * a * a * (eps - eps_host) / (eps + 2.0 * eps_host);
}

std::complex<double> polarizability_radiative(std::complex<double> alpha0, double wavelength_nm,
                                              double medium_eps,
                                              double depolarization_radius_nm) {
    if (!(wavelength_nm > 0.0))
        throw std::invalid_argument("polarizability_radiative: wavelength must be positive");
    const double k = 2.0 * M_PI * std::sqrt(medium_eps) / wavelength_nm;
    std::complex<double> denom = 1.0 - std::complex<double>(0.0, 1.0) * k * k * k * alpha0 /
                                           (6.0 * M_PI);
    if (depolarization_radius_nm > 0.0)
        denom -= k * k / (4.0 * M_PI * depolarization_radius_nm) * alpha0;
    return alpha0 / denom;
}

std::complex<double> effective_polarizability_interface(std::complex<double> alpha, double h_nm,
                                                        double beta, double radius_nm) {
    if (h_nm < radius_nm)
        throw GeometryError("image height " + std::to_string(h_nm) +
                            " nm is below the sphere radius " + std::to_string(radius_nm) + " nm");
    if (beta == 0.0 || std::isinf(h_nm)) return alpha;
    const std::complex<double> coupling = beta * alpha / (16.0 * M_PI * h_nm * h_nm * h_nm);
    return alpha / (1.0 - coupling);
}

std::complex<double> antenna_effective_polarizability(double wavelength_nm, double gap_nm,
                                                      const NanoAntennaModel& model,
                                                      const Materials& materials) {
    if (gap_nm < 0.0) throw GeometryError("gap must be non-negative");
    const std::complex<double> alpha0 =
        polarizability_quasistatic(wavelength_nm, model, materials);
    const double depol_radius = model.dynamic_depolarization ? model.radius_nm : 0.0;
    std::complex<double> alpha = polarizability_radiative(alpha0, wavelength_nm,
                                                          model.host_permittivity(), depol_radius);
    if (std::isfinite(gap_nm)) {
        const double h = gap_nm + model.radius_nm;
        alpha = effective_polarizability_interface(alpha, h, model.image_strength(),
                                                   model.radius_nm);
    }
    return alpha;
}

namespace {

// Raw lineshape k^4 |alpha_eff|^2 with an explicit gap-independent image term
// gamma multiplying the quasi-static contrast in the denominator. The forward
// model at height h corresponds exactly to gamma = beta a^3 / (4 h^3), so the
// fit's model class contains the generator.
double lineshape_response(double wavelength_nm, double gamma, const NanoAntennaModel& model,
                          const Materials& materials) {
    const std::complex<double> alpha0 =
        polarizability_quasistatic(wavelength_nm, model, materials);
    const double depol_radius = model.dynamic_depolarization ? model.radius_nm : 0.0;
    std::complex<double> alpha = polarizability_radiative(alpha0, wavelength_nm,
                                                          model.host_permittivity(), depol_radius);
    if (gamma != 0.0) {
        const double a3 = model.radius_nm * model.radius_nm * model.radius_nm;
        alpha = alpha / (1.0 - gamma * alpha / (4.0 * M_PI * a3));
    }
    const double k = 2.0 * M_PI * std::sqrt(model.medium_permittivity) / wavelength_nm;
    return k * k * k * k * std::norm(alpha);
}

double gamma_for_gap(double gap_nm, const NanoAntennaModel& model) {
    if (std::isinf(gap_nm)) return 0.0;
    const double h = gap_nm + model.radius_nm;
    const double a3 = model.radius_nm * model.radius_nm * model.radius_nm;
    return model.image_strength() * a3 / (4.0 * h * h * h);
}

double peak_wavelength(double gamma, const NanoAntennaModel& model, const Materials& materials,
                       double lo_nm, double hi_nm) {
    return golden_section_minimize(
        [&](double wl) { return -lineshape_response(wl, gamma, model, materials); }, lo_nm, hi_nm,
        1e-7);
}

}  // namespace

Spectrum scattering_spectrum(double gap_nm, const std::vector<double>& grid_nm,
                             const NanoAntennaModel& model, const Materials& materials,
                             double noise_sigma, Rng* rng) {
    if (gap_nm < 0.0) throw GeometryError("gap must be non-negative");
    model.validate();
    const double gamma = gamma_for_gap(gap_nm, model);
    Spectrum s;
    s.wavelengths_nm = grid_nm;
    s.intensities.reserve(grid_nm.size());
    double peak = 0.0;
    for (double wl : grid_nm) {
        const double v = lineshape_response(wl, gamma, model, materials);
        peak = std::max(peak, v);
        s.intensities.push_back(v);
    }
    if (peak > 0.0)
        for (double& v : s.intensities) v /= peak;
    if (noise_sigma > 0.0) {
        if (rng == nullptr)
            throw std::invalid_argument("scattering_spectrum: noise requested without rng");
        for (double& v : s.intensities) v = std::max(0.0, v * (1.0 + rng->normal(0.0, noise_sigma)));
    }
    s.validate();
    return s;
}

std::vector<double> moving_average(const std::vector<double>& series, int window) {
    if (window <= 0 || window % 2 == 0)
        throw std::invalid_argument("moving_average: window must be a positive odd integer");
    if (static_cast<std::size_t>(window) > series.size())
        throw std::invalid_argument("moving_average: window exceeds series length");
    const int half = window / 2;
    const int n = static_cast<int>(series.size());
    std::vector<double> out(series.size());
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) sum += series[j];
        out[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

ResonanceFit fit_resonance(const Spectrum& spectrum, const NanoAntennaModel& model,
                           const Materials& materials, double fit_max_wavelength_nm) {
    spectrum.validate();
    model.validate();

    std::vector<double> wl, y;
    for (std::size_t i = 0; i < spectrum.wavelengths_nm.size(); ++i) {
        if (spectrum.wavelengths_nm[i] <= fit_max_wavelength_nm) {
            wl.push_back(spectrum.wavelengths_nm[i]);
            y.push_back(spectrum.intensities[i]);
        }
    }
    if (wl.size() < 8)
        throw std::invalid_argument("fit_resonance: need >= 8 samples below the fit cutoff");

    const double search_lo = spectrum.wavelengths_nm.front();
    const double search_hi = spectrum.wavelengths_nm.back();

    // Deterministic initialization: image term chosen so the model peak sits at
    // the observed maximum; amplitude at the max intensity; background at the min.
    std::size_t arg_max = 0;
    double y_max = y[0], y_min = y[0];
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] > y_max) {
            y_max = y[i];
            arg_max = i;
        }
        y_min = std::min(y_min, y[i]);
    }
    const double observed_peak = wl[arg_max];
    double gamma_lo = 0.0, gamma_hi = 0.6;
    double gamma0 = 0.0;
    if (peak_wavelength(0.0, model, materials, search_lo, search_hi) < observed_peak) {
        for (int i = 0; i < 40; ++i) {
            const double mid = 0.5 * (gamma_lo + gamma_hi);
            if (peak_wavelength(mid, model, materials, search_lo, search_hi) < observed_peak)
                gamma_lo = mid;
            else
                gamma_hi = mid;
        }
        gamma0 = 0.5 * (gamma_lo + gamma_hi);
    }

    // Scale the raw lineshape so the amplitude parameter starts near one.
    double response_scale = 0.0;
    for (double w : wl)
        response_scale = std::max(response_scale, lineshape_response(w, gamma0, model, materials));
    if (response_scale <= 0.0) response_scale = 1.0;

    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        r.resize(static_cast<Eigen::Index>(wl.size()));
        const double gamma = p[0];
        for (std::size_t i = 0; i < wl.size(); ++i) {
            const double m =
                p[1] * lineshape_response(wl[i], gamma, model, materials) / response_scale + p[2];
            r[static_cast<Eigen::Index>(i)] = m - y[i];
        }
    };

    Eigen::VectorXd p0(3);
    p0 << gamma0, std::max(y_max - y_min, 1e-12), y_min;
    LmOptions options;
    options.max_iterations = 120;
    const LmResult lm = lm_fit(residuals, p0, options);

    ResonanceFit fit;
    fit.converged = lm.converged;
    fit.iterations = lm.iterations;
    fit.residual_norm = std::sqrt(2.0 * lm.cost);
    fit.image_term = lm.params[0];
    fit.amplitude = lm.params[1];
    fit.background = lm.params[2];
    if (fit.converged)
        fit.lambda_res_nm = peak_wavelength(fit.image_term, model, materials, search_lo, search_hi);
    return fit;
}

std::vector<std::pair<double, double>> approach_shift_curve(const std::vector<double>& gaps_nm,
                                                            const NanoAntennaModel& model,
                                                            const Materials& materials,
                                                            const std::vector<double>& grid_nm) {
    for (std::size_t i = 0; i < gaps_nm.size(); ++i) {
        if (gaps_nm[i] < 0.0) throw GeometryError("approach_shift_curve: negative gap");
        if (i > 0 && !(gaps_nm[i] < gaps_nm[i - 1]))
            throw std::invalid_argument("approach_shift_curve: gaps must be sorted descending");
    }

    const double inf = std::numeric_limits<double>::infinity();
    const Spectrum far = scattering_spectrum(inf, grid_nm, model, materials);
    const ResonanceFit far_fit = fit_resonance(far, model, materials);
    if (!far_fit.converged)
        throw FitError("approach_shift_curve: baseline fit failed", far_fit.residual_norm);

    std::vector<std::pair<double, double>> curve;
    curve.reserve(gaps_nm.size());
    for (double gap : gaps_nm) {
        const Spectrum s = scattering_spectrum(gap, grid_nm, model, materials);
        const ResonanceFit fit = fit_resonance(s, model, materials);
        if (!fit.converged)
            throw FitError("approach_shift_curve: fit failed at gap " + std::to_string(gap),
                           fit.residual_norm);
        curve.emplace_back(gap, fit.lambda_res_nm - far_fit.lambda_res_nm);
    }
    return curve;
}

}  // namespace proscan
