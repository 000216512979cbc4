#include "proscan/emitter.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "proscan/errors.hpp"
#include "proscan/fit.hpp"
#include "proscan/stats.hpp"

namespace proscan {

void QuantumEmitterModel::validate() const {
    if (!(exciton_lifetime_ns > biexciton_lifetime_ns && biexciton_lifetime_ns > 0.0))
        throw std::invalid_argument("need exciton lifetime > biexciton lifetime > 0");
    if (!(intrinsic_quantum_yield > 0.0 && intrinsic_quantum_yield <= 1.0))
        throw std::invalid_argument("intrinsic quantum yield must lie in (0, 1]");
    if (biexciton_fraction < 0.0 || biexciton_fraction > 1.0)
        throw std::invalid_argument("biexciton fraction must lie in [0, 1]");
    if (!(emission_wavelength_nm > 0.0 && excitation_wavelength_nm > 0.0))
        throw std::invalid_argument("wavelengths must be positive");
    if (!(repetition_rate_mhz > 0.0))
        throw std::invalid_argument("repetition rate must be positive");
    if (!(period_ns() > 8.0 * exciton_lifetime_ns))
        throw std::invalid_argument("repetition period must exceed 8 exciton lifetimes");
    if (dipole_polar_angle_rad < 0.0 || dipole_polar_angle_rad > 1.4)
        throw std::invalid_argument("dipole polar angle must lie in [0, 1.4] rad");
}

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::complex<double> sphere_alpha(double wavelength_nm, const NanoAntennaModel& antenna,
                                  const Materials& materials) {
    // No upper-substrate image in the emitter-coupling path: the emitter sits
    // where the image would be.
    return antenna_effective_polarizability(wavelength_nm, kInf, antenna, materials);
}

}  // namespace

double field_enhancement(double delta_nm, double theta_rad, double wavelength_exc_nm,
                         const NanoAntennaModel& antenna, const Materials& materials) {
    if (!(delta_nm > 0.0)) throw GeometryError("field_enhancement: separation must be positive");
    (void)theta_rad;  // cancels on axis for a z-polarized incident field
    const std::complex<double> alpha = sphere_alpha(wavelength_exc_nm, antenna, materials);
    const double d = antenna.radius_nm + delta_nm;
    const std::complex<double> g = alpha / (4.0 * M_PI * d * d * d);
    return std::norm(1.0 + 2.0 * g);
}

DecayRateFactors decay_rates_near_sphere(double delta_nm, double theta_rad,
                                         double wavelength_em_nm,
                                         const NanoAntennaModel& antenna,
                                         const Materials& materials, int n_max,
                                         double rel_increment) {
    if (!(delta_nm > 0.0))
        throw GeometryError("decay_rates_near_sphere: separation must be positive");
    antenna.validate();

    const double d = antenna.radius_nm + delta_nm;
    const std::complex<double> alpha = sphere_alpha(wavelength_em_nm, antenna, materials);
    const std::complex<double> g = alpha / (4.0 * M_PI * d * d * d);

    const double w_perp = std::cos(theta_rad) * std::cos(theta_rad);
    const double w_par = 1.0 - w_perp;

    DecayRateFactors out;
    out.radiative_factor = w_perp * std::norm(1.0 + 2.0 * g) + w_par * std::norm(1.0 - g);

    // Quasi-static multipole quenching sum. Sphere modes are evaluated with the
    // host-embedded contrast; the prefactor uses the gap-medium wave number.
    const std::complex<double> eps = materials.permittivity_gold(wavelength_em_nm);
    const double eps_h = antenna.host_permittivity();
    const double k = 2.0 * M_PI * std::sqrt(antenna.medium_permittivity) / wavelength_em_nm;
    const double k3 = k * k * k;
    const double ratio2 = (antenna.radius_nm / d) * (antenna.radius_nm / d);

    double sum_perp = 0.0;
    double sum_par = 0.0;
    // a^(2n+1) / d^(2n+4) = (a/d)^(2n) * a / d^4
    double geom = antenna.radius_nm / (d * d * d * d);
    double increment = 0.0;
    int n = 0;
    for (n = 1; n <= n_max; ++n) {
        geom *= ratio2;
        const double nd = static_cast<double>(n);
        const std::complex<double> mode = nd * (eps - eps_h) / (nd * eps + (nd + 1.0) * eps_h);
        const double im = mode.imag() * geom;
        const double t_perp = (nd + 1.0) * (nd + 1.0) * im;
        const double t_par = 0.5 * nd * (nd + 1.0) * im;
        sum_perp += t_perp;
        sum_par += t_par;
        increment = (sum_perp > 0.0) ? t_perp / sum_perp : 0.0;
        if (rel_increment > 0.0 && n >= 2 && increment < rel_increment) break;
    }
    out.terms_used = std::min(n, n_max);
    if (rel_increment > 0.0 && n > n_max && increment > 1e-6)
        throw ConvergenceError("multipole quenching sum unconverged after " +
                                   std::to_string(n_max) + " terms",
                               (3.0 / (2.0 * k3)) * sum_perp);

    const double s_perp = (3.0 / (2.0 * k3)) * sum_perp;
    const double s_par = (3.0 / (2.0 * k3)) * sum_par;
    out.nonradiative_added = w_perp * s_perp + w_par * s_par;
    return out;
}

RateModification rate_modification(double delta_nm, const QuantumEmitterModel& emitter,
                                   const NanoAntennaModel& antenna, const Materials& materials) {
    emitter.validate();
    const double theta = emitter.dipole_polar_angle_rad;
    RateModification rm;
    rm.excitation_factor =
        field_enhancement(delta_nm, theta, emitter.excitation_wavelength_nm, antenna, materials);
    const DecayRateFactors decay = decay_rates_near_sphere(
        delta_nm, theta, emitter.emission_wavelength_nm, antenna, materials);
    rm.radiative_factor = decay.radiative_factor;
    rm.nonradiative_added = decay.nonradiative_added;
    const double eta0 = emitter.intrinsic_quantum_yield;
    rm.quantum_yield = rm.radiative_factor * eta0 /
                       (rm.radiative_factor * eta0 + rm.nonradiative_added * eta0 + (1.0 - eta0));
    return rm;
}

double fluorescence_enhancement(double excitation_factor, const RateModification& rates,
                                double eta0) {
    if (!(eta0 > 0.0 && eta0 <= 1.0))
        throw std::invalid_argument("fluorescence_enhancement: eta0 must lie in (0, 1]");
    return excitation_factor * rates.quantum_yield / eta0;
}

std::vector<LinescanPoint> linescan_enhancement(const std::vector<double>& offsets_nm,
                                                double gap_nm,
                                                const QuantumEmitterModel& emitter,
                                                const NanoAntennaModel& antenna,
                                                const Materials& materials,
                                                const HotSpotModel& hot_spot) {
    if (!(gap_nm > 0.0)) throw GeometryError("linescan_enhancement: gap must be positive");
    emitter.validate();
    antenna.validate();

    const double a = antenna.radius_nm;
    const double z = a + gap_nm;  // emitter plane height above the sphere center
    const double theta = emitter.dipole_polar_angle_rad;
    const double dx = std::sin(theta);  // dipole direction, tilted within the scan plane
    const double dz = std::cos(theta);
    const double eta0 = emitter.intrinsic_quantum_yield;

    const std::complex<double> alpha_exc =
        sphere_alpha(emitter.excitation_wavelength_nm, antenna, materials);

    NanoAntennaModel spot_antenna = antenna;
    spot_antenna.radius_nm = hot_spot.radius_nm;
    std::complex<double> spot_alpha_exc;
    double spot_z = 0.0;
    if (hot_spot.enabled) {
        const double rc = a + hot_spot.radius_nm;
        if (std::fabs(hot_spot.surface_offset_nm) >= rc)
            throw GeometryError("hot spot offset places it off the sphere surface");
        spot_z = std::sqrt(rc * rc - hot_spot.surface_offset_nm * hot_spot.surface_offset_nm);
        spot_alpha_exc = sphere_alpha(emitter.excitation_wavelength_nm, spot_antenna, materials);
    }

    std::vector<LinescanPoint> points;
    points.reserve(offsets_nm.size());
    for (double offset : offsets_nm) {
        const double r = std::hypot(offset, z);
        const double nx = offset / r;
        const double nz = z / r;

        // Scattered near field at the emitter for incident polarization along z.
        const std::complex<double> gv = alpha_exc / (4.0 * M_PI * r * r * r);
        std::complex<double> ex = gv * 3.0 * nx * nz;
        std::complex<double> ez = 1.0 + gv * (3.0 * nz * nz - 1.0);
        if (hot_spot.enabled) {
            const double sx = offset - hot_spot.surface_offset_nm;
            const double sz = z - spot_z;
            const double sr = std::hypot(sx, sz);
            const double snx = sx / sr;
            const double snz = sz / sr;
            const std::complex<double> gs = spot_alpha_exc / (4.0 * M_PI * sr * sr * sr);
            ex += gs * 3.0 * snx * snz;
            ez += gs * (3.0 * snz * snz - 1.0);
        }
        const double k_factor = std::norm(ex * dx + ez * dz) / (dz * dz);

        // Orientation relative to the local sphere-emitter axis.
        const double cos_eff = std::min(1.0, std::fabs(nx * dx + nz * dz));
        const double theta_eff = std::acos(cos_eff);
        const DecayRateFactors decay =
            decay_rates_near_sphere(r - a, theta_eff, emitter.emission_wavelength_nm, antenna,
                                    materials);
        double radiative = decay.radiative_factor;
        double nonradiative = decay.nonradiative_added;
        if (hot_spot.enabled) {
            const double sx = offset - hot_spot.surface_offset_nm;
            const double sz = z - spot_z;
            const double sr = std::hypot(sx, sz);
            const double s_cos = std::min(1.0, std::fabs((sx * dx + sz * dz) / sr));
            const DecayRateFactors spot_decay = decay_rates_near_sphere(
                sr - hot_spot.radius_nm, std::acos(s_cos), emitter.emission_wavelength_nm,
                spot_antenna, materials);
            nonradiative += spot_decay.nonradiative_added;
        }

        LinescanPoint p;
        p.offset_nm = offset;
        p.excitation_factor = k_factor;
        p.radiative_factor = radiative;
        p.nonradiative_added = nonradiative;
        p.quantum_yield =
            radiative * eta0 / (radiative * eta0 + nonradiative * eta0 + (1.0 - eta0));
        p.enhancement = k_factor * p.quantum_yield / eta0;
        p.total_rate_ns_inv = (eta0 * (radiative + nonradiative) + (1.0 - eta0)) /
                              emitter.exciton_lifetime_ns;
        points.push_back(p);
    }
    return points;
}

DecayHistogram simulate_decay_histogram(double rate_fast_ns_inv, double rate_slow_ns_inv,
                                        double fast_fraction, std::uint64_t n_photons,
                                        double irf_sigma_ns, double bin_width_ns,
                                        double period_ns, Rng& rng) {
    if (!(rate_fast_ns_inv > 0.0 && rate_slow_ns_inv > 0.0))
        throw std::invalid_argument("decay rates must be positive");
    if (!(rate_fast_ns_inv > rate_slow_ns_inv))
        throw std::invalid_argument("fast component must have the larger rate");
    if (fast_fraction < 0.0 || fast_fraction > 1.0)
        throw std::invalid_argument("fast fraction must lie in [0, 1]");
    if (n_photons < 1) throw std::invalid_argument("need at least one photon");
    if (irf_sigma_ns < 0.0) throw std::invalid_argument("irf sigma must be non-negative");
    if (!(bin_width_ns > 0.0 && bin_width_ns < period_ns))
        throw std::invalid_argument("bin width must be positive and below the period");

    DecayHistogram hist;
    hist.bin_width_ns = bin_width_ns;
    hist.irf_sigma_ns = irf_sigma_ns;
    hist.total_photons = n_photons;
    const std::size_t n_bins = static_cast<std::size_t>(std::floor(period_ns / bin_width_ns));
    hist.period_ns = static_cast<double>(n_bins) * bin_width_ns;
    hist.counts.assign(n_bins, 0);

    for (std::uint64_t i = 0; i < n_photons; ++i) {
        const bool fast = rng.uniform() < fast_fraction;
        double t = rng.exponential(fast ? rate_fast_ns_inv : rate_slow_ns_inv);
        if (irf_sigma_ns > 0.0) t += rng.normal(0.0, irf_sigma_ns);
        t = std::fmod(t, hist.period_ns);
        if (t < 0.0) t += hist.period_ns;
        std::size_t bin = static_cast<std::size_t>(t / bin_width_ns);
        if (bin >= n_bins) bin = n_bins - 1;
        ++hist.counts[bin];
    }
    return hist;
}

namespace {

struct WindowData {
    std::vector<double> t;
    std::vector<double> c;
};

// Poisson deviance residual: minimizing its sum of squares is the MLE.
inline double deviance_residual(double counts, double mu) {
    mu = std::max(mu, 1e-12);
    double dev;
    if (counts > 0.0)
        dev = 2.0 * (mu - counts + counts * std::log(counts / mu));
    else
        dev = 2.0 * mu;
    dev = std::max(dev, 0.0);
    return (counts >= mu) ? std::sqrt(dev) : -std::sqrt(dev);
}

// Scaled complementary error function exp(q^2) erfc(q) for q >= 0.
inline double erfcx_pos(double q) {
    if (q > 26.0) {
        // Asymptotic series; exp(q^2) would overflow past ~26.6.
        const double q2 = q * q;
        return (1.0 - 0.5 / q2 + 0.75 / (q2 * q2)) / (q * std::sqrt(M_PI));
    }
    return std::exp(q * q) * std::erfc(q);
}

// Exponential decay of lifetime tau convolved with a Gaussian IRF of width
// sigma, pulse at t = 0, normalized so sigma -> 0 gives exp(-t/tau) for t > 0.
inline double irf_exp_shape(double t, double tau, double sigma) {
    if (sigma <= 0.0) return t >= 0.0 ? std::exp(-t / tau) : 0.0;
    const double q = (sigma / tau - t / sigma) / std::sqrt(2.0);
    if (q > 0.0) return 0.5 * erfcx_pos(q) * std::exp(-0.5 * t * t / (sigma * sigma));
    return 0.5 * std::erfc(q) * std::exp(0.5 * sigma * sigma / (tau * tau) - t / tau);
}

struct ExpFitResult {
    Eigen::VectorXd params;  // log-parametrized
    double deviance;
    bool converged;
    int iterations;
    Eigen::MatrixXd covariance;
};

// Parameter layout: two components (ln tau1, ln tau2, ln A1, ln A2, ln bg),
// single component (ln tau, ln A, ln bg). With irf_sigma = 0 the model is the
// plain multi-exponential; otherwise each component is IRF-convolved.
ExpFitResult fit_exponentials(const WindowData& data, double irf_sigma,
                              const Eigen::VectorXd& p0, bool two) {
    auto model = [two, irf_sigma](const Eigen::VectorXd& p, double t) {
        if (two)
            return std::exp(p[2]) * irf_exp_shape(t, std::exp(p[0]), irf_sigma) +
                   std::exp(p[3]) * irf_exp_shape(t, std::exp(p[1]), irf_sigma) + std::exp(p[4]);
        return std::exp(p[1]) * irf_exp_shape(t, std::exp(p[0]), irf_sigma) + std::exp(p[2]);
    };
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        r.resize(static_cast<Eigen::Index>(data.t.size()));
        for (std::size_t i = 0; i < data.t.size(); ++i)
            r[static_cast<Eigen::Index>(i)] = deviance_residual(data.c[i], model(p, data.t[i]));
    };
    LmOptions options;
    options.max_iterations = 300;
    const LmResult lm = lm_fit(residuals, p0, options);
    return {lm.params, 2.0 * lm.cost, lm.converged, lm.iterations, lm.covariance};
}

}  // namespace

BiexpFit fit_biexponential(const DecayHistogram& hist, double t_min_ns, double t_max_ns) {
    if (!(t_min_ns < t_max_ns) || t_min_ns < 0.0 || t_max_ns > hist.period_ns)
        throw std::invalid_argument("fit window must lie inside the histogram support");

    WindowData data;
    std::size_t bins_with_counts = 0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        const double t = hist.bin_center_ns(i);
        if (t < t_min_ns || t > t_max_ns) continue;
        data.t.push_back(t);
        data.c.push_back(static_cast<double>(hist.counts[i]));
        if (hist.counts[i] > 0) ++bins_with_counts;
    }
    if (bins_with_counts < 20)
        throw std::invalid_argument("fit window must contain at least 20 bins with counts");

    // Deterministic initialization. The decay extent is read off the
    // cumulative excess-over-background distribution so the starting lifetimes
    // adapt to short decays inside long windows.
    const std::size_t n = data.t.size();
    double bg0 = 0.0;
    {
        const std::size_t tail = std::max<std::size_t>(3, n / 20);
        for (std::size_t i = n - tail; i < n; ++i) bg0 += data.c[i];
        bg0 = std::max(bg0 / static_cast<double>(tail), 1e-3);
    }
    std::size_t peak_idx = 0;
    double peak = data.c[0];
    for (std::size_t i = 0; i < n; ++i) {
        if (data.c[i] > peak) {
            peak = data.c[i];
            peak_idx = i;
        }
    }
    double total_excess = 0.0;
    for (std::size_t i = peak_idx; i < n; ++i) total_excess += std::max(data.c[i] - bg0, 0.0);
    std::size_t i50 = peak_idx, i90 = peak_idx;
    {
        double cum = 0.0;
        for (std::size_t i = peak_idx; i < n; ++i) {
            cum += std::max(data.c[i] - bg0, 0.0);
            if (cum < 0.5 * total_excess) i50 = i;
            if (cum < 0.9 * total_excess) i90 = i;
        }
        i50 = std::min(i50 + 1, n - 1);
        i90 = std::min(std::max(i90 + 1, i50 + 1), n - 1);
    }

    const double bin_w = hist.bin_width_ns;
    double tau_slow0 = 0.0, a_slow0 = 0.0;
    {
        std::vector<double> ts, ln_c;
        for (std::size_t i = i50; i <= i90; ++i) {
            const double excess = data.c[i] - bg0;
            if (excess > 0.5) {
                ts.push_back(data.t[i]);
                ln_c.push_back(std::log(excess));
            }
        }
        if (ts.size() >= 3) {
            const LineFit lf = fit_line(ts, ln_c);
            if (lf.slope < -1e-9) {
                tau_slow0 = std::min(-1.0 / lf.slope, 1e5);
                a_slow0 = std::exp(lf.intercept);
            }
        }
        if (tau_slow0 <= 0.0) {
            tau_slow0 = std::max((data.t[i90] - data.t[peak_idx]) / 2.3, bin_w);
            a_slow0 = std::max(0.5 * peak, 1.0);
        }
    }
    double tau_fast0 = 0.0, a_fast0 = 0.0;
    {
        std::vector<double> ts, ln_c;
        for (std::size_t i = peak_idx; i <= i50; ++i) {
            const double excess = data.c[i] - a_slow0 * std::exp(-data.t[i] / tau_slow0) - bg0;
            if (excess > 0.5) {
                ts.push_back(data.t[i]);
                ln_c.push_back(std::log(excess));
            }
        }
        if (ts.size() >= 3) {
            const LineFit lf = fit_line(ts, ln_c);
            if (lf.slope < -1e-9) {
                tau_fast0 = std::min(-1.0 / lf.slope, tau_slow0 * 0.9);
                a_fast0 = std::exp(lf.intercept);
            }
        }
        if (tau_fast0 <= 0.0) tau_fast0 = std::max(tau_slow0 / 8.0, 0.5 * bin_w);
        if (a_fast0 <= 0.0) a_fast0 = std::max(peak - a_slow0, 1.0);
    }

    Eigen::VectorXd p0(5);
    p0 << std::log(tau_fast0), std::log(tau_slow0), std::log(std::max(a_fast0, 1e-3)),
        std::log(std::max(a_slow0, 1e-3)), std::log(bg0);
    ExpFitResult two = fit_exponentials(data, hist.irf_sigma_ns, p0, true);

    BiexpFit fit;
    fit.converged = two.converged;
    fit.iterations = two.iterations;
    fit.deviance = two.deviance;

    double tau1 = std::exp(two.params[0]), tau2 = std::exp(two.params[1]);
    double a1 = std::exp(two.params[2]), a2 = std::exp(two.params[3]);
    double e1 = tau1 * std::sqrt(std::max(two.covariance(0, 0), 0.0));
    double e2 = tau2 * std::sqrt(std::max(two.covariance(1, 1), 0.0));
    if (tau1 > tau2) {
        std::swap(tau1, tau2);
        std::swap(a1, a2);
        std::swap(e1, e2);
    }
    fit.tau_fast_ns = tau1;
    fit.tau_slow_ns = tau2;
    fit.amplitude_fast = a1;
    fit.amplitude_slow = a2;
    fit.background = std::exp(two.params[4]);
    fit.tau_fast_err_ns = e1;
    fit.tau_slow_err_ns = e2;

    // Degenerate two-component solutions: nearly equal lifetimes, a vanishing
    // component, or a fast lifetime below the bin resolution. Fall back to a
    // single exponential and flag it.
    const double photons1 = a1 * tau1;
    const double photons2 = a2 * tau2;
    const double share1 = photons1 / std::max(photons1 + photons2, 1e-300);
    const bool degenerate = std::fabs(tau2 - tau1) < 0.15 * tau2 || share1 < 0.02 ||
                            share1 > 0.98 || tau1 < 0.25 * hist.bin_width_ns;
    if (degenerate) {
        Eigen::VectorXd p_single(3);
        p_single << std::log(tau_slow0), std::log(std::max(a_slow0, 1e-3)), std::log(bg0);
        ExpFitResult one = fit_exponentials(data, hist.irf_sigma_ns, p_single, false);
        const double tau = std::exp(one.params[0]);
        fit.single_exponential_fallback = true;
        fit.tau_fast_ns = tau;
        fit.tau_slow_ns = tau;
        fit.amplitude_fast = 0.0;
        fit.amplitude_slow = std::exp(one.params[1]);
        fit.background = std::exp(one.params[2]);
        fit.deviance = one.deviance;
        fit.converged = one.converged;
        const double err = tau * std::sqrt(std::max(one.covariance(0, 0), 0.0));
        fit.tau_fast_err_ns = err;
        fit.tau_slow_err_ns = err;
    }

    fit.irf_limited = fit.tau_fast_ns < 2.0 * hist.irf_sigma_ns;
    return fit;
}

double DriftModel::value(double t_s) const {
    switch (kind) {
        case Kind::none:
            return 1.0;
        case Kind::linear:
            return std::max(0.0, 1.0 + relative_per_s * t_s);
        case Kind::sinusoidal:
            return std::max(0.0, 1.0 + amplitude * std::sin(2.0 * M_PI * t_s / period_s));
    }
    return 1.0;
}

std::vector<std::uint64_t> intensity_trace(double enhancement, double base_rate_cps,
                                           double duration_s, double bin_s,
                                           const DriftModel& drift, Rng& rng) {
    if (!(enhancement >= 0.0)) throw std::invalid_argument("enhancement must be non-negative");
    if (!(base_rate_cps > 0.0 && duration_s > 0.0 && bin_s > 0.0))
        throw std::invalid_argument("rate, duration and bin must be positive");
    const std::size_t n_bins = static_cast<std::size_t>(std::llround(duration_s / bin_s));
    std::vector<std::uint64_t> counts(n_bins);
    const double base_mean = enhancement * base_rate_cps * bin_s;
    for (std::size_t i = 0; i < n_bins; ++i) {
        const double t = (static_cast<double>(i) + 0.5) * bin_s;
        counts[i] = rng.poisson(base_mean * drift.value(t));
    }
    return counts;
}

PoissonTestResult poisson_goodness(const std::vector<std::uint64_t>& trace) {
    if (trace.size() < 100)
        throw std::invalid_argument("poisson_goodness: need at least 100 bins");
    std::uint64_t max_count = 0;
    double sum = 0.0;
    for (std::uint64_t c : trace) {
        max_count = std::max(max_count, c);
        sum += static_cast<double>(c);
    }
    if (sum == 0.0) throw DegenerateInputError("poisson_goodness: all-zero trace");

    PoissonTestResult result;
    const double n = static_cast<double>(trace.size());
    result.mean = sum / n;
    std::vector<double> as_double(trace.begin(), trace.end());
    result.fano = variance(as_double) / result.mean;

    // Observed histogram of counts.
    std::vector<double> observed(max_count + 2, 0.0);
    for (std::uint64_t c : trace) observed[c] += 1.0;
    std::vector<double> expected(max_count + 2, 0.0);
    double cumulative = 0.0;
    for (std::uint64_t k = 0; k <= max_count; ++k) {
        const double p = poisson_pmf(k, result.mean);
        expected[k] = n * p;
        cumulative += p;
    }
    expected[max_count + 1] = n * std::max(0.0, 1.0 - cumulative);  // upper tail

    // Merge adjacent cells until every expected count is at least 5.
    std::vector<double> obs_m, exp_m;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t k = 0; k < expected.size(); ++k) {
        o_acc += observed[k];
        e_acc += expected[k];
        if (e_acc >= 5.0) {
            obs_m.push_back(o_acc);
            exp_m.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0) {
        if (!exp_m.empty()) {
            obs_m.back() += o_acc;
            exp_m.back() += e_acc;
        } else {
            obs_m.push_back(o_acc);
            exp_m.push_back(e_acc);
        }
    }

    double chi2 = 0.0;
    for (std::size_t i = 0; i < exp_m.size(); ++i) {
        const double diff = obs_m[i] - exp_m[i];
        chi2 += diff * diff / exp_m[i];
    }
    result.chi2 = chi2;
    result.dof = static_cast<int>(exp_m.size()) - 2;  // mean estimated from the data
    result.p_value = (result.dof >= 1) ? chi_squared_pvalue(chi2, result.dof)
                                       : (chi2 <= 0.0 ? 1.0 : 0.0);
    return result;
}

}  // namespace proscan
