#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "proscan/rng.hpp"

namespace proscan {

/// Wide-field camera: Gaussian PSF, per-pixel Poisson background, Gaussian
/// read noise. psf default is the Gaussian-Airy match 0.21*lambda/NA with
/// lambda = 650 nm and NA = 1.4.
struct CameraModel {
    double pixel_size_nm = 100.0;
    double read_noise_counts = 1.0;
    double background_per_pixel = 4.0;  // mean Poisson background counts
    double psf_sigma_nm = 0.21 * 650.0 / 1.4;
    bool shot_noise = true;  // Poisson statistics on the detected signal

    void validate() const;
    /// RMS of all non-signal noise per pixel, the background term of the
    /// localization-precision formula.
    double background_noise_rms() const;
};

struct SourceSpot {
    double x_nm = 0.0;
    double y_nm = 0.0;
    double photons = 0.0;
};

/// Pixelated image. Pixel (0,0) covers [origin, origin + pixel) in both axes.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> pixels;  // row-major
    double origin_x_nm = 0.0;
    double origin_y_nm = 0.0;
    CameraModel camera;

    std::uint32_t at(int ix, int iy) const { return pixels[static_cast<std::size_t>(iy) * width + ix]; }
    std::uint32_t& at(int ix, int iy) { return pixels[static_cast<std::size_t>(iy) * width + ix]; }
};

/// Renders sources by integrating the PSF over each pixel, then adds Poisson
/// background and Gaussian read noise and rounds to integer counts. Sources
/// must keep a 3-sigma margin from the frame edge.
Frame render_frame(const std::vector<SourceSpot>& sources, const CameraModel& camera, int width,
                   int height, Rng& rng);

/// 16-bit grayscale PGM (big-endian, maxval 65535); counts clamp at 65535.
void write_pgm16(const Frame& frame, const std::filesystem::path& path);
Frame read_pgm16(const std::filesystem::path& path, const CameraModel& camera,
                 double origin_x_nm = 0.0, double origin_y_nm = 0.0);

struct RoiRect {
    int x0 = 0;
    int y0 = 0;
    int width = 0;
    int height = 0;
};

struct Localization {
    bool converged = false;
    double x_nm = 0.0;
    double y_nm = 0.0;
    double sigma_x_nm = 0.0;
    double sigma_y_nm = 0.0;
    double photons = 0.0;
    double background = 0.0;  // counts per pixel
    double fit_residual = 0.0;
    int iterations = 0;
};

/// Elliptical-Gaussian-plus-background fit inside the ROI, solved as least
/// squares on Poisson deviance residuals (the maximum-likelihood weighting).
/// Deterministic initialization from the brightest pixel and moment widths.
Localization localize_2d(const Frame& frame, const RoiRect& roi);

/// Theoretical localization precision (nm) combining shot noise, pixelation
/// and background (Thompson-style formula).
double crlb_precision(double photons, double background_noise_rms_per_pixel, double psf_sigma_nm,
                      double pixel_size_nm);

struct TrajectoryStats {
    double slope = 0.0;     // principal-axis slope dy/dx
    double tilt_deg = 0.0;  // atan(slope) in degrees
    double step_mean_nm = 0.0;
    double step_std_nm = 0.0;
    double jitter_nm = 0.0;  // rms residual perpendicular to the line
};

/// Line fit (orthogonal regression, rigid-motion equivariant) plus step
/// statistics along the line and perpendicular jitter.
TrajectoryStats analyze_trajectory(const std::vector<std::pair<double, double>>& points_nm);

struct SeparationPoint {
    double separation_nm = 0.0;      // signed, along the scan direction
    bool coupled = false;            // spots merged; value is extrapolated
    double raw_separation_nm = 0.0;  // direct localization result
};

/// Signed separation of spot B relative to spot A per frame, projected on the
/// relative-motion axis of the unflagged frames. ROIs follow each spot's
/// nominal position (one per frame; the caller guarantees a dominant spot
/// where the spots are distinct). Frames where the two spots merge (distance
/// below 2 psf_sigma) are flagged and their separations replaced by the
/// average of the two one-sided linear extrapolations (>= 4 clean frames
/// required on each side). Swapping the two ROI sequences negates the signed
/// separations exactly.
std::vector<SeparationPoint> separation_series(const std::vector<Frame>& frames,
                                               const std::vector<RoiRect>& spot_a_rois,
                                               const std::vector<RoiRect>& spot_b_rois);

/// Convenience overload for a stationary spot A.
std::vector<SeparationPoint> separation_series(const std::vector<Frame>& frames,
                                               const RoiRect& stationary_roi,
                                               const std::vector<RoiRect>& moving_rois);

}  // namespace proscan
