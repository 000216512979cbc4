#include "proscan/interferometry.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "proscan/csv.hpp"
#include "proscan/errors.hpp"

namespace proscan {

void Spectrum::validate() const {
    if (wavelengths_nm.size() != intensities.size() || wavelengths_nm.size() < 2)
        throw std::invalid_argument("spectrum needs >= 2 matched samples");
    for (std::size_t i = 0; i < wavelengths_nm.size(); ++i) {
        if (!(wavelengths_nm[i] > 0.0))
            throw std::invalid_argument("spectrum wavelengths must be positive");
        if (i > 0 && !(wavelengths_nm[i] > wavelengths_nm[i - 1]))
            throw std::invalid_argument("spectrum wavelengths must strictly increase");
        if (intensities[i] < 0.0)
            throw std::invalid_argument("spectrum intensities must be non-negative");
    }
}

void Spectrum::write_csv(const std::filesystem::path& path) const {
    CsvWriter writer(path, {"wavelength_nm", "intensity"});
    for (std::size_t i = 0; i < wavelengths_nm.size(); ++i)
        writer.row({wavelengths_nm[i], intensities[i]});
    writer.close();
}

Spectrum Spectrum::read_csv(const std::filesystem::path& path) {
    const CsvTable table = CsvTable::read(path);
    Spectrum s;
    s.wavelengths_nm = table.column("wavelength_nm");
    s.intensities = table.column("intensity");
    s.validate();
    return s;
}

std::vector<double> wavelength_grid(double min_nm, double max_nm, std::size_t points) {
    if (!(max_nm > min_nm) || points < 2) throw std::invalid_argument("bad wavelength grid");
    std::vector<double> grid(points);
    for (std::size_t i = 0; i < points; ++i)
        grid[i] = min_nm + (max_nm - min_nm) * static_cast<double>(i) /
                               static_cast<double>(points - 1);
    return grid;
}

SourceEnvelope SourceEnvelope::flat() {
    return {[](double) { return 1.0; }};
}

SourceEnvelope SourceEnvelope::lamp(double center_nm, double sigma_nm) {
    return {[center_nm, sigma_nm](double wl) {
        const double z = (wl - center_nm) / sigma_nm;
        return std::exp(-0.5 * z * z);
    }};
}

double cavity_reflectance(double gap_nm, double wavelength_nm, double glass_index) {
    if (gap_nm < 0.0) throw std::invalid_argument("cavity_reflectance: negative gap");
    if (!(wavelength_nm > 0.0))
        throw std::invalid_argument("cavity_reflectance: wavelength must be positive");
    const double n_glass = glass_index;
    const double r12 = (n_glass - 1.0) / (n_glass + 1.0);
    const double r23 = -r12;
    const double phase = 4.0 * M_PI * gap_nm / wavelength_nm;  // round trip in air
    const std::complex<double> ph(std::cos(phase), std::sin(phase));
    const std::complex<double> r = (r12 + r23 * ph) / (1.0 + r12 * r23 * ph);
    return std::norm(r);
}

Spectrum white_light_spectrum(double gap_nm, const std::vector<double>& grid_nm,
                              double noise_sigma, Rng& rng, const SourceEnvelope& envelope,
                              double glass_index) {
    Spectrum s;
    s.wavelengths_nm = grid_nm;
    s.intensities.reserve(grid_nm.size());
    for (double wl : grid_nm) {
        double v = cavity_reflectance(gap_nm, wl, glass_index) * envelope.value(wl);
        if (noise_sigma > 0.0) v *= 1.0 + rng.normal(0.0, noise_sigma);
        s.intensities.push_back(std::max(0.0, v));
    }
    s.validate();
    return s;
}

double gap_from_fsr(double lambda1_nm, double lambda2_nm) {
    if (!(lambda1_nm > 0.0)) throw std::invalid_argument("gap_from_fsr: lambda1 must be positive");
    if (!(lambda2_nm > lambda1_nm))
        throw std::invalid_argument("gap_from_fsr: need lambda2 > lambda1 (degenerate FSR)");
    return lambda1_nm * lambda2_nm / (2.0 * (lambda2_nm - lambda1_nm));
}

namespace {

struct PeakIndex {
    std::size_t index;
    double prominence;
};

// Interior local maxima with the classic prominence definition: height above
// the higher of the two key cols toward the nearest higher terrain (or edge).
std::vector<PeakIndex> local_maxima(const std::vector<double>& y) {
    std::vector<PeakIndex> peaks;
    const std::size_t n = y.size();
    std::size_t i = 1;
    while (i + 1 < n) {
        if (y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            // Plateau handling: advance to the end of any flat top.
            std::size_t j = i;
            while (j + 1 < n && y[j + 1] == y[i]) ++j;
            if (j + 1 < n && y[j + 1] < y[i]) {
                const std::size_t peak = (i + j) / 2;
                double left_min = y[peak];
                for (std::size_t k = peak; k-- > 0;) {
                    if (y[k] > y[peak]) break;
                    left_min = std::min(left_min, y[k]);
                }
                double right_min = y[peak];
                for (std::size_t k = peak + 1; k < n; ++k) {
                    if (y[k] > y[peak]) break;
                    right_min = std::min(right_min, y[k]);
                }
                peaks.push_back({peak, y[peak] - std::max(left_min, right_min)});
                i = j + 1;
                continue;
            }
            i = j + 1;
            continue;
        }
        ++i;
    }
    return peaks;
}

double parabolic_refine(const std::vector<double>& x, const std::vector<double>& y,
                        std::size_t i) {
    if (i == 0 || i + 1 >= x.size()) return x[i];
    const double x0 = x[i - 1], x1 = x[i], x2 = x[i + 1];
    const double y0 = y[i - 1], y1 = y[i], y2 = y[i + 1];
    const double d1 = (y1 - y0) / (x1 - x0);
    const double d2 = (y2 - y1) / (x2 - x1);
    const double curv = (d2 - d1) / (0.5 * (x2 - x0));
    if (curv >= 0.0) return x1;
    // Vertex of the interpolating quadratic.
    const double slope_mid = 0.5 * (d1 + d2);
    const double x_mid = (x0 + 2.0 * x1 + x2) / 4.0;
    return x_mid - slope_mid / curv;
}

}  // namespace

FringeExtrema find_fringe_extrema(const Spectrum& spectrum, double min_prominence) {
    spectrum.validate();
    FringeExtrema out;
    const auto& y = spectrum.intensities;
    double lo = y[0], hi = y[0];
    for (double v : y) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    if (span <= 0.0) return out;

    for (const auto& peak : local_maxima(y)) {
        if (peak.prominence >= min_prominence * span)
            out.maxima_nm.push_back(parabolic_refine(spectrum.wavelengths_nm, y, peak.index));
    }
    out.sufficient = out.maxima_nm.size() >= 2;
    return out;
}

GapEstimate estimate_gap_fsr(const Spectrum& spectrum, double min_prominence) {
    const FringeExtrema extrema = find_fringe_extrema(spectrum, min_prominence);
    GapEstimate est;
    est.maxima_count = static_cast<int>(extrema.maxima_nm.size());
    // Two full fringe periods (three maxima) confirm real cavity oscillations.
    if (extrema.maxima_nm.size() < 3) return est;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < extrema.maxima_nm.size(); ++i)
        sum += gap_from_fsr(extrema.maxima_nm[i], extrema.maxima_nm[i + 1]);
    est.gap_nm = sum / static_cast<double>(extrema.maxima_nm.size() - 1);
    est.sufficient = true;
    return est;
}

DisplacementEstimate displacement_from_fringes(const std::vector<double>& trace,
                                               double wavelength_nm) {
    if (trace.size() < 3)
        throw std::invalid_argument("displacement_from_fringes: trace too short");
    if (!(wavelength_nm > 0.0))
        throw std::invalid_argument("displacement_from_fringes: wavelength must be positive");

    DisplacementEstimate est;
    double lo = trace[0], hi = trace[0];
    for (double v : trace) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    if (span <= 0.0) return est;  // flat trace
    const double prominence_floor = 0.1 * span;

    std::vector<std::size_t> maxima;
    for (const auto& peak : local_maxima(trace))
        if (peak.prominence >= prominence_floor) maxima.push_back(peak.index);

    std::vector<double> negated(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) negated[i] = -trace[i];
    std::vector<std::size_t> minima;
    for (const auto& valley : local_maxima(negated))
        if (valley.prominence >= prominence_floor) minima.push_back(valley.index);

    if (maxima.size() < 2) return est;  // no full max-to-max oscillation

    est.full_oscillations = static_cast<int>(maxima.size()) - 1;
    double displacement = est.full_oscillations * wavelength_nm / 2.0;

    // Fractional tail: phase accumulated past the final maximum, read from the
    // levels of the final extremum pair. One reflectance period is lambda/2.
    const std::size_t last_max = maxima.back();
    std::size_t last_min_before = 0;
    bool have_min_before = false;
    std::size_t min_after = 0;
    bool have_min_after = false;
    for (std::size_t m : minima) {
        if (m < last_max) {
            last_min_before = m;
            have_min_before = true;
        } else if (!have_min_after) {
            min_after = m;
            have_min_after = true;
        }
    }
    const double level_hi = trace[last_max];
    const double level_lo = have_min_after  ? trace[min_after]
                            : have_min_before ? trace[last_min_before]
                                              : lo;
    const double amplitude = level_hi - level_lo;
    if (amplitude > 0.0 && last_max + 1 < trace.size()) {
        auto phase_from_max = [&](double value) {
            double c = 2.0 * (value - level_lo) / amplitude - 1.0;
            c = std::min(1.0, std::max(-1.0, c));
            return std::acos(c);  // 0 at the maximum, pi at the minimum
        };
        double tail_phase;
        if (have_min_after) {
            // Passed a minimum after the last maximum: pi plus the climb back up.
            tail_phase = M_PI + (M_PI - phase_from_max(trace.back()));
        } else {
            tail_phase = phase_from_max(trace.back());
        }
        displacement += tail_phase / (2.0 * M_PI) * wavelength_nm / 2.0;
    }

    est.displacement_nm = displacement;
    est.sufficient = true;
    return est;
}

}  // namespace proscan
