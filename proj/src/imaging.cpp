#include "proscan/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "proscan/errors.hpp"
#include "proscan/fit.hpp"
#include "proscan/stats.hpp"

namespace proscan {

void CameraModel::validate() const {
    if (!(pixel_size_nm > 0.0)) throw std::invalid_argument("pixel size must be positive");
    if (!(psf_sigma_nm > 0.0)) throw std::invalid_argument("psf sigma must be positive");
    if (read_noise_counts < 0.0) throw std::invalid_argument("read noise must be non-negative");
    if (background_per_pixel < 0.0)
        throw std::invalid_argument("background rate must be non-negative");
}

double CameraModel::background_noise_rms() const {
    return std::sqrt(background_per_pixel + read_noise_counts * read_noise_counts);
}

namespace {

inline double gauss_cdf(double x) { return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)); }

// Integral of a unit-area 1-D Gaussian centered at c over [lo, hi].
inline double pixel_mass(double lo, double hi, double c, double sigma) {
    return gauss_cdf((hi - c) / sigma) - gauss_cdf((lo - c) / sigma);
}

}  // namespace

Frame render_frame(const std::vector<SourceSpot>& sources, const CameraModel& camera, int width,
                   int height, Rng& rng) {
    camera.validate();
    if (width < 1 || height < 1) throw std::invalid_argument("frame must be at least 1x1");

    Frame frame;
    frame.width = width;
    frame.height = height;
    frame.camera = camera;
    frame.pixels.assign(static_cast<std::size_t>(width) * height, 0);

    const double px = camera.pixel_size_nm;
    const double margin = 3.0 * camera.psf_sigma_nm;
    for (const auto& s : sources) {
        if (s.photons < 0.0) throw std::invalid_argument("source photons must be non-negative");
        if (s.x_nm < frame.origin_x_nm + margin || s.x_nm > frame.origin_x_nm + width * px - margin ||
            s.y_nm < frame.origin_y_nm + margin || s.y_nm > frame.origin_y_nm + height * px - margin)
            throw PlacementError("source at (" + std::to_string(s.x_nm) + ", " +
                                 std::to_string(s.y_nm) + ") nm is within 3 sigma of the frame edge");
    }

    std::vector<double> accum(frame.pixels.size(), 0.0);
    for (const auto& s : sources) {
        // 8-sigma bounding box; the truncated mass is far below one count.
        const double reach = 8.0 * camera.psf_sigma_nm;
        const int ix0 = std::max(0, static_cast<int>(std::floor((s.x_nm - reach - frame.origin_x_nm) / px)));
        const int ix1 = std::min(width - 1, static_cast<int>(std::ceil((s.x_nm + reach - frame.origin_x_nm) / px)));
        const int iy0 = std::max(0, static_cast<int>(std::floor((s.y_nm - reach - frame.origin_y_nm) / px)));
        const int iy1 = std::min(height - 1, static_cast<int>(std::ceil((s.y_nm + reach - frame.origin_y_nm) / px)));
        for (int iy = iy0; iy <= iy1; ++iy) {
            const double y_lo = frame.origin_y_nm + iy * px;
            const double my = pixel_mass(y_lo, y_lo + px, s.y_nm, camera.psf_sigma_nm);
            for (int ix = ix0; ix <= ix1; ++ix) {
                const double x_lo = frame.origin_x_nm + ix * px;
                const double mx = pixel_mass(x_lo, x_lo + px, s.x_nm, camera.psf_sigma_nm);
                accum[static_cast<std::size_t>(iy) * width + ix] += s.photons * mx * my;
            }
        }
    }

    for (std::size_t i = 0; i < accum.size(); ++i) {
        double v;
        if (camera.shot_noise) {
            const double flux = accum[i] + camera.background_per_pixel;
            v = flux > 0.0 ? static_cast<double>(rng.poisson(flux)) : 0.0;
        } else {
            v = accum[i];
            if (camera.background_per_pixel > 0.0)
                v += static_cast<double>(rng.poisson(camera.background_per_pixel));
        }
        if (camera.read_noise_counts > 0.0) v += rng.normal(0.0, camera.read_noise_counts);
        const double rounded = std::round(v);
        frame.pixels[i] = rounded > 0.0 ? static_cast<std::uint32_t>(rounded) : 0u;
    }
    return frame;
}

void write_pgm16(const Frame& frame, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
    for (std::uint32_t v : frame.pixels) {
        const std::uint16_t clamped = static_cast<std::uint16_t>(std::min<std::uint32_t>(v, 65535u));
        const unsigned char bytes[2] = {static_cast<unsigned char>(clamped >> 8),
                                        static_cast<unsigned char>(clamped & 0xff)};
        out.write(reinterpret_cast<const char*>(bytes), 2);
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Frame read_pgm16(const std::filesystem::path& path, const CameraModel& camera, double origin_x_nm,
                 double origin_y_nm) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string(), 0, 0);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw ParseError("not a binary PGM (P5) file", 1, 1);
    int width = 0, height = 0, maxval = 0;
    in >> width >> height >> maxval;
    if (!in || width < 1 || height < 1) throw ParseError("bad PGM dimensions", 2, 1);
    if (maxval != 65535) throw ParseError("expected 16-bit PGM (maxval 65535)", 2, 1);
    in.get();  // single whitespace after maxval

    Frame frame;
    frame.width = width;
    frame.height = height;
    frame.camera = camera;
    frame.origin_x_nm = origin_x_nm;
    frame.origin_y_nm = origin_y_nm;
    frame.pixels.resize(static_cast<std::size_t>(width) * height);
    for (auto& v : frame.pixels) {
        unsigned char bytes[2];
        in.read(reinterpret_cast<char*>(bytes), 2);
        if (!in) throw ParseError("truncated PGM pixel data", 3, 1);
        v = (static_cast<std::uint32_t>(bytes[0]) << 8) | bytes[1];
    }
    return frame;
}

Localization localize_2d(const Frame& frame, const RoiRect& roi) {
    if (roi.x0 < 0 || roi.y0 < 0 || roi.width < 4 || roi.height < 4 ||
        roi.x0 + roi.width > frame.width || roi.y0 + roi.height > frame.height)
        throw std::invalid_argument("localize_2d: ROI outside frame or too small");

    // Work in pixel units inside the ROI.
    const int w = roi.width, h = roi.height;
    std::vector<double> counts(static_cast<std::size_t>(w) * h);
    double c_min = 1e300, c_max = -1e300;
    int bx = 0, by = 0;
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
            const double v = frame.at(roi.x0 + ix, roi.y0 + iy);
            counts[static_cast<std::size_t>(iy) * w + ix] = v;
            if (v > c_max) {
                c_max = v;
                bx = ix;
                by = iy;
            }
            c_min = std::min(c_min, v);
        }
    if (c_max <= c_min) throw DegenerateInputError("localize_2d: flat ROI");

    // Moment-based initialization around the brightest pixel.
    double m0 = 0.0, mx = 0.0, my = 0.0, mxx = 0.0, myy = 0.0;
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
            const double v = counts[static_cast<std::size_t>(iy) * w + ix] - c_min;
            if (v <= 0.0) continue;
            m0 += v;
            mx += v * (ix + 0.5);
            my += v * (iy + 0.5);
        }
    const double x0 = (m0 > 0.0) ? mx / m0 : bx + 0.5;
    const double y0 = (m0 > 0.0) ? my / m0 : by + 0.5;
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
            const double v = counts[static_cast<std::size_t>(iy) * w + ix] - c_min;
            if (v <= 0.0) continue;
            mxx += v * (ix + 0.5 - x0) * (ix + 0.5 - x0);
            myy += v * (iy + 0.5 - y0) * (iy + 0.5 - y0);
        }
    double sx0 = (m0 > 0.0) ? std::sqrt(std::max(mxx / m0, 0.25)) : 1.0;
    double sy0 = (m0 > 0.0) ? std::sqrt(std::max(myy / m0, 0.25)) : 1.0;
    sx0 = std::min(sx0, 0.5 * w);
    sy0 = std::min(sy0, 0.5 * h);

    // Poisson deviance residuals: least squares on these is the MLE, which is
    // what keeps the precision tracking the theoretical bound at this
    // background level.
    auto residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        r.resize(static_cast<Eigen::Index>(counts.size()));
        const double cx = p[0], cy = p[1];
        const double sx = std::exp(p[2]), sy = std::exp(p[3]);
        const double n_ph = std::exp(p[4]), bg = p[5];
        std::vector<double> gx(w), gy(h);
        for (int ix = 0; ix < w; ++ix) gx[ix] = pixel_mass(ix, ix + 1.0, cx, sx);
        for (int iy = 0; iy < h; ++iy) gy[iy] = pixel_mass(iy, iy + 1.0, cy, sy);
        for (int iy = 0; iy < h; ++iy)
            for (int ix = 0; ix < w; ++ix) {
                const std::size_t idx = static_cast<std::size_t>(iy) * w + ix;
                const double mu = std::max(n_ph * gx[ix] * gy[iy] + bg, 1e-9);
                const double c = counts[idx];
                const double dev = c > 0.0 ? 2.0 * (mu - c + c * std::log(c / mu)) : 2.0 * mu;
                r[static_cast<Eigen::Index>(idx)] =
                    (c >= mu ? 1.0 : -1.0) * std::sqrt(std::max(dev, 0.0));
            }
    };

    Eigen::VectorXd p0(6);
    p0 << x0, y0, std::log(sx0), std::log(sy0), std::log(std::max(m0, 1.0)), c_min;
    LmOptions options;
    options.max_iterations = 150;
    const LmResult lm = lm_fit(residuals, p0, options);

    Localization loc;
    loc.converged = lm.converged;
    loc.iterations = lm.iterations;
    loc.fit_residual = std::sqrt(2.0 * lm.cost);
    const double px = frame.camera.pixel_size_nm;
    loc.x_nm = frame.origin_x_nm + (roi.x0 + lm.params[0]) * px;
    loc.y_nm = frame.origin_y_nm + (roi.y0 + lm.params[1]) * px;
    loc.sigma_x_nm = std::exp(lm.params[2]) * px;
    loc.sigma_y_nm = std::exp(lm.params[3]) * px;
    loc.photons = std::exp(lm.params[4]);
    loc.background = lm.params[5];
    return loc;
}

double crlb_precision(double photons, double background_noise_rms_per_pixel, double psf_sigma_nm,
                      double pixel_size_nm) {
    if (!(photons > 0.0)) throw std::invalid_argument("crlb_precision: photons must be positive");
    const double a = pixel_size_nm;
    const double s2 = psf_sigma_nm * psf_sigma_nm + a * a / 12.0;
    const double b2 = background_noise_rms_per_pixel * background_noise_rms_per_pixel;
    double var = s2 / photons;
    if (a > 0.0 && b2 > 0.0) var += 8.0 * M_PI * s2 * s2 * b2 / (a * a * photons * photons);
    return std::sqrt(var);
}

TrajectoryStats analyze_trajectory(const std::vector<std::pair<double, double>>& points_nm) {
    if (points_nm.size() < 3)
        throw std::invalid_argument("analyze_trajectory: need at least 3 points");

    const PrincipalAxis axis = principal_axis(points_nm);
    TrajectoryStats stats;
    stats.tilt_deg = std::atan2(axis.dir_y, axis.dir_x) * 180.0 / M_PI;
    stats.slope = (axis.dir_x != 0.0) ? axis.dir_y / axis.dir_x
                                      : std::numeric_limits<double>::infinity();

    std::vector<double> steps;
    steps.reserve(points_nm.size() - 1);
    for (std::size_t i = 1; i < points_nm.size(); ++i) {
        const double dx = points_nm[i].first - points_nm[i - 1].first;
        const double dy = points_nm[i].second - points_nm[i - 1].second;
        steps.push_back(dx * axis.dir_x + dy * axis.dir_y);
    }
    stats.step_mean_nm = mean(steps);
    stats.step_std_nm = standard_deviation(steps);

    double ss = 0.0;
    for (const auto& [px, py] : points_nm) {
        const double r = -(px - axis.centroid_x) * axis.dir_y + (py - axis.centroid_y) * axis.dir_x;
        ss += r * r;
    }
    stats.jitter_nm = std::sqrt(ss / static_cast<double>(points_nm.size()));
    return stats;
}

std::vector<SeparationPoint> separation_series(const std::vector<Frame>& frames,
                                               const std::vector<RoiRect>& spot_a_rois,
                                               const std::vector<RoiRect>& spot_b_rois) {
    if (frames.empty()) throw std::invalid_argument("separation_series: no frames");
    if (spot_a_rois.size() != frames.size() || spot_b_rois.size() != frames.size())
        throw std::invalid_argument("separation_series: need one ROI per frame for each spot");

    const double merge_threshold = 2.0 * frames.front().camera.psf_sigma_nm;
    std::vector<double> rel_x(frames.size()), rel_y(frames.size());
    std::vector<bool> coupled(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Localization a = localize_2d(frames[i], spot_a_rois[i]);
        const Localization b = localize_2d(frames[i], spot_b_rois[i]);
        rel_x[i] = b.x_nm - a.x_nm;
        rel_y[i] = b.y_nm - a.y_nm;
        coupled[i] = std::hypot(rel_x[i], rel_y[i]) < merge_threshold;
    }

    // Scan direction from the clean frames' relative positions.
    std::vector<std::pair<double, double>> clean;
    for (std::size_t i = 0; i < frames.size(); ++i)
        if (!coupled[i]) clean.emplace_back(rel_x[i], rel_y[i]);
    if (clean.size() < 2)
        throw ExtrapolationError("separation_series: not enough uncoupled frames");
    const PrincipalAxis axis = principal_axis(clean);

    std::vector<SeparationPoint> out(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out[i].raw_separation_nm = rel_x[i] * axis.dir_x + rel_y[i] * axis.dir_y;
        out[i].separation_nm = out[i].raw_separation_nm;
        out[i].coupled = coupled[i];
    }

    const bool any_coupled = std::any_of(coupled.begin(), coupled.end(), [](bool c) { return c; });
    if (!any_coupled) return out;

    std::size_t first = 0, last = frames.size() - 1;
    while (first < frames.size() && !coupled[first]) ++first;
    while (last > 0 && !coupled[last]) --last;
    if (first < 4 || last + 4 >= frames.size())
        throw ExtrapolationError("separation_series: need >= 4 clean frames on each side of the "
                                 "coupled region");

    std::vector<double> li, ls, ri, rs;
    for (std::size_t i = 0; i < first; ++i) {
        li.push_back(static_cast<double>(i));
        ls.push_back(out[i].raw_separation_nm);
    }
    for (std::size_t i = last + 1; i < frames.size(); ++i) {
        ri.push_back(static_cast<double>(i));
        rs.push_back(out[i].raw_separation_nm);
    }
    const LineFit left = fit_line(li, ls);
    const LineFit right = fit_line(ri, rs);
    for (std::size_t i = first; i <= last; ++i) {
        const double t = static_cast<double>(i);
        const double from_left = left.slope * t + left.intercept;
        const double from_right = right.slope * t + right.intercept;
        if (coupled[i]) out[i].separation_nm = 0.5 * (from_left + from_right);
    }
    return out;
}

std::vector<SeparationPoint> separation_series(const std::vector<Frame>& frames,
                                               const RoiRect& stationary_roi,
                                               const std::vector<RoiRect>& moving_rois) {
    return separation_series(frames, std::vector<RoiRect>(frames.size(), stationary_roi),
                             moving_rois);
}

}  // namespace proscan
