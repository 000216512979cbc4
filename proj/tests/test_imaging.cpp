#include <doctest.h>

#include <stdexcept>
#include <cmath>
#include <filesystem>
#include <vector>

#include "proscan/errors.hpp"
#include "proscan/imaging.hpp"
#include "proscan/mechanics.hpp"
#include "proscan/stats.hpp"

using namespace proscan;

namespace {
CameraModel noiseless_camera() {
    CameraModel cam;
    cam.read_noise_counts = 0.0;
    cam.background_per_pixel = 0.0;
    cam.shot_noise = false;
    return cam;
}
}  // namespace

TEST_CASE("empty scene with no noise renders an all-zero frame") {
    Rng rng(1, "img");
    const Frame f = render_frame({}, noiseless_camera(), 8, 8, rng);
    for (auto v : f.pixels) CHECK(v == 0);
}

TEST_CASE("noiseless single source conserves photons within rounding") {
    Rng rng(2, "img");
    const double n = 1e6;
    const Frame f = render_frame({{1050.0, 950.0, n}}, noiseless_camera(), 21, 19, rng);
    double total = 0.0;
    for (auto v : f.pixels) total += v;
    CHECK(std::fabs(total - n) / n < 1e-3);
}

TEST_CASE("noiseless center of mass matches the true position within 0.01 px") {
    Rng rng(3, "img");
    CameraModel cam = noiseless_camera();
    const double tx = 1060.0, ty = 930.0;
    const Frame f = render_frame({{tx, ty, 200000.0}}, cam, 21, 19, rng);
    double m = 0.0, mx = 0.0, my = 0.0;
    for (int iy = 0; iy < f.height; ++iy)
        for (int ix = 0; ix < f.width; ++ix) {
            const double v = f.at(ix, iy);
            m += v;
            mx += v * (ix + 0.5) * cam.pixel_size_nm;
            my += v * (iy + 0.5) * cam.pixel_size_nm;
        }
    CHECK(std::fabs(mx / m - tx) < 0.01 * cam.pixel_size_nm);
    CHECK(std::fabs(my / m - ty) < 0.01 * cam.pixel_size_nm);
}

TEST_CASE("sources near the edge raise a placement error") {
    Rng rng(4, "img");
    CHECK_THROWS_AS(render_frame({{100.0, 800.0, 1000.0}}, noiseless_camera(), 16, 16, rng),
                    PlacementError);
}

TEST_CASE("localization of a noiseless source is exact to 0.1 nm") {
    Rng rng(5, "img");
    const double tx = 1043.0, ty = 922.0;
    const Frame f = render_frame({{tx, ty, 50000.0}}, noiseless_camera(), 21, 19, rng);
    const Localization loc = localize_2d(f, {0, 0, 21, 19});
    REQUIRE(loc.converged);
    CHECK(std::fabs(loc.x_nm - tx) < 0.1);
    CHECK(std::fabs(loc.y_nm - ty) < 0.1);
    CHECK(loc.photons == doctest::Approx(50000.0).epsilon(0.01));
}

TEST_CASE("flat ROI raises a degenerate-input error") {
    Frame f;
    f.width = f.height = 8;
    f.camera = noiseless_camera();
    f.pixels.assign(64, 100);
    CHECK_THROWS_AS(localize_2d(f, {0, 0, 8, 8}), DegenerateInputError);
}

TEST_CASE("paper preset: precision 2.4 nm within 20 percent, matching the bound within 25") {
    CameraModel cam;  // paper preset: defaults
    const double photons = 1900.0;
    std::vector<double> dx, dy;
    for (int s = 0; s < 200; ++s) {
        Rng rng(1000 + s, "img.precision");
        const double tx = 750.0 + 23.0, ty = 750.0 - 41.0;
        const Frame f = render_frame({{tx, ty, photons}}, cam, 15, 15, rng);
        const Localization loc = localize_2d(f, {0, 0, 15, 15});
        REQUIRE(loc.converged);
        dx.push_back(loc.x_nm - tx);
        dy.push_back(loc.y_nm - ty);
    }
    const double px_precision = standard_deviation(dx);
    const double py_precision = standard_deviation(dy);
    CHECK(std::fabs(px_precision - 2.4) / 2.4 < 0.20);
    CHECK(std::fabs(py_precision - 2.4) / 2.4 < 0.20);
    const double bound = crlb_precision(photons, cam.background_noise_rms(), cam.psf_sigma_nm,
                                        cam.pixel_size_nm);
    CHECK(std::fabs(px_precision - bound) / bound < 0.25);
    CHECK(std::fabs(py_precision - bound) / bound < 0.25);
}

TEST_CASE("localization estimator bias below 0.3 nm over 500 seeds") {
    CameraModel cam;
    std::vector<double> dx, dy;
    for (int s = 0; s < 500; ++s) {
        Rng rng(4000 + s, "img.bias");
        const double tx = 750.0 + 37.0, ty = 750.0 - 13.0;
        const Frame f = render_frame({{tx, ty, 1900.0}}, cam, 15, 15, rng);
        const Localization loc = localize_2d(f, {0, 0, 15, 15});
        dx.push_back(loc.x_nm - tx);
        dy.push_back(loc.y_nm - ty);
    }
    CHECK(std::fabs(mean(dx)) < 0.3);
    CHECK(std::fabs(mean(dy)) < 0.3);
}

TEST_CASE("crlb formula: shot-noise limit and photon scaling") {
    const double s = 97.5;
    CHECK(crlb_precision(1000.0, 0.0, s, 1e-6) == doctest::Approx(s / std::sqrt(1000.0)).epsilon(1e-6));
    const double p1 = crlb_precision(1000.0, 0.0, s, 1e-6);
    const double p2 = crlb_precision(2000.0, 0.0, s, 1e-6);
    CHECK(p1 / p2 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    // Preset inversion: the defaults reproduce about 2.4 nm.
    CameraModel cam;
    CHECK(crlb_precision(1900.0, cam.background_noise_rms(), cam.psf_sigma_nm, cam.pixel_size_nm) ==
          doctest::Approx(2.4).epsilon(0.02));
}

TEST_CASE("precision tracks the bound across a photon-count sweep") {
    CameraModel cam;
    for (double photons : {800.0, 1900.0, 4000.0, 10000.0}) {
        std::vector<double> dx;
        for (int s = 0; s < 120; ++s) {
            Rng rng(5000 + s, "img.sweep");
            const double tx = 750.0 + 11.0, ty = 750.0 + 7.0;
            const Frame f = render_frame({{tx, ty, photons}}, cam, 15, 15, rng);
            dx.push_back(localize_2d(f, {0, 0, 15, 15}).x_nm - tx);
        }
        const double bound = crlb_precision(photons, cam.background_noise_rms(), cam.psf_sigma_nm,
                                            cam.pixel_size_nm);
        CHECK(std::fabs(standard_deviation(dx) - bound) / bound < 0.25);
    }
}

TEST_CASE("trajectory: collinear points along x") {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 20; ++i) pts.emplace_back(7.3 * i, 0.0);
    const TrajectoryStats st = analyze_trajectory(pts);
    CHECK(st.slope == doctest::Approx(0.0));
    CHECK(st.step_mean_nm == doctest::Approx(7.3));
    CHECK(st.step_std_nm == doctest::Approx(0.0));
    CHECK(st.jitter_nm == doctest::Approx(0.0));
}

TEST_CASE("trajectory: points on y = -0.023 x give a tilt of -1.32 degrees") {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 30; ++i) pts.emplace_back(10.0 * i, -0.023 * 10.0 * i);
    const TrajectoryStats st = analyze_trajectory(pts);
    CHECK(st.tilt_deg == doctest::Approx(-1.3175).epsilon(0.01));
    CHECK(st.slope == doctest::Approx(-0.023).epsilon(1e-6));
}

TEST_CASE("trajectory statistics are invariant under rigid motion") {
    std::vector<std::pair<double, double>> pts;
    Rng rng(6, "img.traj");
    double x = 0.0;
    for (int i = 0; i < 60; ++i) {
        x += 7.3 + rng.normal(0.0, 3.5);
        pts.emplace_back(x, -0.023 * x + rng.normal(0.0, 2.74));
    }
    const TrajectoryStats base = analyze_trajectory(pts);

    const double phi = 0.35;
    std::vector<std::pair<double, double>> moved;
    for (const auto& [px, py] : pts)
        moved.emplace_back(std::cos(phi) * px - std::sin(phi) * py + 1234.5,
                           std::sin(phi) * px + std::cos(phi) * py - 777.7);
    const TrajectoryStats rotated = analyze_trajectory(moved);
    CHECK(rotated.step_mean_nm == doctest::Approx(base.step_mean_nm).epsilon(1e-9));
    CHECK(rotated.step_std_nm == doctest::Approx(base.step_std_nm).epsilon(1e-9));
    CHECK(rotated.jitter_nm == doctest::Approx(base.jitter_nm).epsilon(1e-9));
    // The slope transforms with the rotation.
    const double expected_tilt = base.tilt_deg + phi * 180.0 / M_PI;
    CHECK(rotated.tilt_deg == doctest::Approx(expected_tilt).epsilon(1e-6));
}

TEST_CASE("closed loop: mechanics scan recovered by trajectory analysis") {
    PiezoAxisModel m;
    m.gain_nm_per_v = 7.3;
    m.crosstalk_slope = -0.023;
    m.step_sigma_nm = 3.5;
    m.jitter_sigma_nm = 2.74;
    Rng rng(2026, "img.loop");
    ScanState s;
    s.gap_nm = 100.0;
    std::vector<std::pair<double, double>> pts;
    pts.emplace_back(s.observed_x_nm(), s.observed_y_nm());
    for (int i = 0; i < 100; ++i) {
        s = apply_lateral_voltage(s, 1.0, Axis::x, m, rng);
        pts.emplace_back(s.observed_x_nm(), s.observed_y_nm());
    }
    const TrajectoryStats st = analyze_trajectory(pts);
    CHECK(std::fabs(st.step_mean_nm - 7.3) < 3.0 * 3.5 / std::sqrt(100.0));
    CHECK(std::fabs(st.step_std_nm - 3.5) < 3.0 * 3.5 / std::sqrt(2.0 * 99.0));
    CHECK(std::fabs(st.jitter_nm - 2.74) < 3.0 * 2.74 / std::sqrt(2.0 * 100.0));
    CHECK(std::fabs(st.tilt_deg - (-1.32)) < 0.4);
}

TEST_CASE("pgm round trip preserves pixels") {
    Rng rng(7, "img.pgm");
    CameraModel cam;
    const Frame f = render_frame({{750.0, 750.0, 5000.0}}, cam, 15, 15, rng);
    const auto dir = std::filesystem::temp_directory_path() / "proscan_imaging_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "frame.pgm";
    write_pgm16(f, path);
    const Frame g = read_pgm16(path, cam);
    CHECK(g.width == f.width);
    CHECK(g.height == f.height);
    CHECK(g.pixels == f.pixels);
}

TEST_CASE("separation series: clean frames, coupling flags, extrapolation") {
    CameraModel cam;
    cam.background_per_pixel = 2.0;
    const double px = cam.pixel_size_nm;
    const int fw = 40, fh = 16;
    const double sx = 0.5 * fw * px, sy = 0.5 * fh * px;

    // Linear relative motion from -900 to +900 nm; the moving ROI follows the
    // nominal position.
    std::vector<Frame> frames;
    std::vector<RoiRect> moving;
    std::vector<double> truth;
    const int n = 37;
    for (int i = 0; i < n; ++i) {
        const double offset = -900.0 + 1800.0 * i / (n - 1);
        truth.push_back(offset);
        Rng rng(9000 + i, "img.sep");
        frames.push_back(render_frame({{sx, sy, 800.0}, {sx + offset, sy, 4000.0}}, cam, fw, fh, rng));
        const int cx = static_cast<int>(std::round((sx + offset) / px));
        moving.push_back({cx - 4, fh / 2 - 4, 9, 9});
    }
    const RoiRect stationary{fw / 2 - 4, fh / 2 - 4, 9, 9};
    const auto series = separation_series(frames, stationary, moving);
    REQUIRE(series.size() == frames.size());

    int flagged = 0;
    const double bound = crlb_precision(4000.0, cam.background_noise_rms(), cam.psf_sigma_nm, px);
    for (int i = 0; i < n; ++i) {
        if (series[i].coupled) {
            ++flagged;
            // Extrapolated values track the linear ground truth.
            CHECK(std::fabs(series[i].separation_nm - truth[i]) < std::max(2.0 * bound, 6.0));
        }
        if (std::fabs(truth[i]) > 2.5 * cam.psf_sigma_nm + 60.0) CHECK_FALSE(series[i].coupled);
    }
    CHECK(flagged >= 3);  // the merge region around zero separation

    // Swapping the roles of the two spots negates the signed separations.
    const std::vector<RoiRect> stationary_per_frame(frames.size(), stationary);
    const auto swapped = separation_series(frames, moving, stationary_per_frame);
    for (int i = 0; i < n; ++i) {
        CHECK(swapped[i].coupled == series[i].coupled);
        CHECK(swapped[i].separation_nm == doctest::Approx(-series[i].separation_nm).epsilon(1e-12));
    }
}

TEST_CASE("separation series without sidebands raises an extrapolation error") {
    CameraModel cam;
    const double px = cam.pixel_size_nm;
    const int fw = 24, fh = 16;
    const double sx = 0.5 * fw * px, sy = 0.5 * fh * px;
    std::vector<Frame> frames;
    std::vector<RoiRect> moving;
    for (int i = 0; i < 6; ++i) {
        const double offset = -60.0 + 24.0 * i;  // always merged
        Rng rng(9100 + i, "img.sep2");
        frames.push_back(render_frame({{sx, sy, 800.0}, {sx + offset, sy, 4000.0}}, cam, fw, fh, rng));
        moving.push_back({fw / 2 - 5, fh / 2 - 5, 11, 11});
    }
    CHECK_THROWS_AS(separation_series(frames, RoiRect{fw / 2 - 4, fh / 2 - 4, 9, 9}, moving),
                    ExtrapolationError);
}
