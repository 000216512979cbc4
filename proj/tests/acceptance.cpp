// Acceptance suite: every release-gating behavior, one pass/fail line each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "proscan/emitter.hpp"
#include "proscan/imaging.hpp"
#include "proscan/interferometry.hpp"
#include "proscan/materials.hpp"
#include "proscan/mechanics.hpp"
#include "proscan/plasmonics.hpp"
#include "proscan/scenario.hpp"
#include "proscan/stats.hpp"

using namespace proscan;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& label, bool pass, const std::string& detail) {
    std::printf("%s criterion %2d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion, label.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "proscan_acceptance" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// 1. FSR estimator recovers 50 gaps in [2, 20] um within 2 percent, under 5 s.
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = wavelength_grid(450.0, 750.0, 1201);
    double worst = 0.0;
    bool all_sufficient = true;
    for (int k = 0; k < 50; ++k) {
        const double gap = 2000.0 + 18000.0 * k / 49.0;
        Rng rng(k, "acceptance.fsr");
        const Spectrum s = white_light_spectrum(gap, grid, 0.0, rng);
        const GapEstimate est = estimate_gap_fsr(s);
        if (!est.sufficient) {
            all_sufficient = false;
            break;
        }
        worst = std::max(worst, std::fabs(est.gap_nm - gap) / gap);
    }
    const double dt = seconds_since(t0);
    std::ostringstream detail;
    detail << "worst relative error " << worst << ", " << dt << " s";
    report(1, "FSR gap estimator, 50 gaps in [2, 20] um within 2%",
           all_sufficient && worst < 0.02 && dt < 5.0, detail.str());
}

// 2. Fringe counting on a 1.9 um approach at 532 nm: 7 oscillations, 1862 +- 133 nm.
void criterion_2() {
    AxialTransferModel axial;
    ScanState state;
    state.gap_nm = 5990.0;
    std::vector<double> trace;
    trace.push_back(cavity_reflectance(state.gap_nm, 532.0));
    for (int i = 0; i < 171; ++i) {
        state = apply_axial_voltage(state, 0.2, axial);
        trace.push_back(cavity_reflectance(state.gap_nm, 532.0));
    }
    const DisplacementEstimate est = displacement_from_fringes(trace, 532.0);
    std::ostringstream detail;
    detail << est.full_oscillations << " oscillations, " << est.displacement_nm << " nm (true "
           << 5990.0 - state.gap_nm << ")";
    report(2, "fringe counting over the 13 um piezo ramp",
           est.sufficient && est.full_oscillations == 7 &&
               std::fabs(est.displacement_nm - 1862.0) <= 133.0,
           detail.str());
}

// 3. Localization precision at the CRLB-inverted preset.
void criterion_3() {
    CameraModel cam;
    const double photons = 1900.0;
    std::vector<double> dx, dy;
    for (int s = 0; s < 200; ++s) {
        Rng rng(1000 + s, "acceptance.loc");
        const double tx = 750.0 + 23.0, ty = 750.0 - 41.0;
        const Frame f = render_frame({{tx, ty, photons}}, cam, 15, 15, rng);
        const Localization loc = localize_2d(f, {0, 0, 15, 15});
        dx.push_back(loc.x_nm - tx);
        dy.push_back(loc.y_nm - ty);
    }
    const double sx = standard_deviation(dx);
    const double sy = standard_deviation(dy);
    const double bound =
        crlb_precision(photons, cam.background_noise_rms(), cam.psf_sigma_nm, cam.pixel_size_nm);
    const bool pass = std::fabs(sx - 2.4) / 2.4 < 0.20 && std::fabs(sy - 2.4) / 2.4 < 0.20 &&
                      std::fabs(sx - bound) / bound < 0.25 && std::fabs(sy - bound) / bound < 0.25;
    std::ostringstream detail;
    detail << "precision (" << sx << ", " << sy << ") nm, bound " << bound << " nm";
    report(3, "localization precision 2.4 nm +- 20%, tracking the bound within 25%", pass,
           detail.str());
}

// 4. Trajectory closed loop through the mechanics preset.
void criterion_4() {
    PiezoAxisModel m;
    m.gain_nm_per_v = 7.3;
    m.crosstalk_slope = -0.023;
    m.step_sigma_nm = 3.5;
    m.jitter_sigma_nm = 2.74;
    Rng rng(948201, "acceptance.traj");
    ScanState s;
    s.gap_nm = 100.0;
    std::vector<std::pair<double, double>> pts;
    pts.emplace_back(s.observed_x_nm(), s.observed_y_nm());
    for (int i = 0; i < 100; ++i) {
        s = apply_lateral_voltage(s, 1.0, Axis::x, m, rng);
        pts.emplace_back(s.observed_x_nm(), s.observed_y_nm());
    }
    const TrajectoryStats st = analyze_trajectory(pts);
    std::vector<double> xs;
    for (const auto& p : pts) xs.push_back(p.first);
    const double se_mean = 3.5 / std::sqrt(100.0);
    const double se_std = 3.5 / std::sqrt(2.0 * 99.0);
    const double se_jitter = 2.74 / std::sqrt(2.0 * 100.0);
    const double se_slope = 2.74 / (std::sqrt(100.0) * standard_deviation(xs));
    const bool pass = std::fabs(st.step_mean_nm - 7.3) < 3.0 * se_mean &&
                      std::fabs(st.step_std_nm - 3.5) < 3.0 * se_std &&
                      std::fabs(st.jitter_nm - 2.74) < 3.0 * se_jitter &&
                      std::fabs(st.slope - (-0.023)) < 3.0 * se_slope &&
                      std::fabs(st.tilt_deg - (-1.32)) < 0.4;
    std::ostringstream detail;
    detail << "step " << st.step_mean_nm << ", sd " << st.step_std_nm << ", jitter "
           << st.jitter_nm << ", tilt " << st.tilt_deg << " deg";
    report(4, "trajectory closed loop recovers 7.3/3.5/2.74 nm and -1.3 deg", pass, detail.str());
}

// 5. Isolated 80 nm sphere resonance inside [545, 575] nm.
void criterion_5() {
    Materials mats;
    NanoAntennaModel antenna;
    const auto grid = wavelength_grid(450.0, 750.0, 601);
    const Spectrum s = scattering_spectrum(std::numeric_limits<double>::infinity(), grid, antenna,
                                           mats);
    const ResonanceFit fit = fit_resonance(s, antenna, mats);
    std::ostringstream detail;
    detail << "resonance " << fit.lambda_res_nm << " nm";
    report(5, "isolated sphere plasmon peak in [545, 575] nm",
           fit.converged && fit.lambda_res_nm > 545.0 && fit.lambda_res_nm < 575.0, detail.str());
}

// 6. Approach red shift: monotone after smoothing, total in [5, 25] nm, 1/h^3 tail.
void criterion_6() {
    Materials mats;
    NanoAntennaModel antenna;
    const auto grid = wavelength_grid(450.0, 750.0, 601);
    std::vector<double> gaps;
    for (double g = 200.0; g >= 0.0; g -= 2.0) gaps.push_back(g);
    const auto curve = approach_shift_curve(gaps, antenna, mats, grid);
    std::vector<double> shifts;
    for (const auto& [g, s] : curve) shifts.push_back(s);
    const auto smoothed = moving_average(shifts, 3);
    bool monotone = true;
    for (std::size_t i = 1; i < smoothed.size(); ++i)
        if (!(smoothed[i] > smoothed[i - 1])) monotone = false;
    const double total = shifts.back();

    // Leading-order scaling at large height: h = 200 vs 400 nm.
    const auto tail = approach_shift_curve({360.0, 160.0}, antenna, mats, grid);
    const double ratio = tail[1].second / tail[0].second;
    const bool scaling_ok = std::fabs(ratio / 8.0 - 1.0) < 0.15;

    std::ostringstream detail;
    detail << "total " << total << " nm, monotone " << (monotone ? "yes" : "no") << ", h^-3 ratio "
           << ratio;
    report(6, "approach red shift: monotone, total in [5, 25] nm, 1/h^3 scaling",
           monotone && total >= 5.0 && total <= 25.0 && scaling_ok, detail.str());
}

// 7. Coupled-emitter operating point.
void criterion_7() {
    Materials mats;
    NanoAntennaModel antenna;
    QuantumEmitterModel emitter;
    emitter.intrinsic_quantum_yield = 0.062;  // documented preset
    const RateModification rm = rate_modification(3.0, emitter, antenna, mats);
    const double f =
        fluorescence_enhancement(rm.excitation_factor, rm, emitter.intrinsic_quantum_yield);
    const double rate_factor = rm.total_rate_factor(emitter.intrinsic_quantum_yield);
    const double uncoupled_rate = 1.0 / emitter.exciton_lifetime_ns;
    const double coupled_rate = rate_factor / emitter.exciton_lifetime_ns;
    const bool pass = f >= 8.0 && f <= 14.0 && std::fabs(uncoupled_rate - 0.034) < 0.001 &&
                      coupled_rate >= 0.9 && emitter.exciton_lifetime_ns / rate_factor <= 1.1;
    std::ostringstream detail;
    detail << "F " << f << ", exciton rate " << uncoupled_rate << " -> " << coupled_rate
           << " 1/ns (tau " << emitter.exciton_lifetime_ns / rate_factor << " ns)";
    report(7, "coupled operating point: F in [8, 14] and rate 0.034 -> >= 0.9 1/ns", pass,
           detail.str());
}

// 8. Lifetime fitting at the four synthetic lifetimes plus the IRF-floor flag.
void criterion_8() {
    bool pass = true;
    std::ostringstream detail;
    {
        Rng rng(42, "acceptance.tcspc.uncoupled");
        const DecayHistogram h =
            simulate_decay_histogram(1.0 / 2.1, 1.0 / 29.4, 0.3, 100000, 0.15, 0.25, 250.0, rng);
        const BiexpFit fit = fit_biexponential(h, 0.0, 245.0);
        pass = pass && fit.converged && std::fabs(fit.tau_fast_ns - 2.1) / 2.1 < 0.05 &&
               std::fabs(fit.tau_slow_ns - 29.4) / 29.4 < 0.05;
        detail << "uncoupled " << fit.tau_fast_ns << "/" << fit.tau_slow_ns;
    }
    {
        Rng rng(43, "acceptance.tcspc.coupled");
        const DecayHistogram h =
            simulate_decay_histogram(1.0 / 0.4, 1.0 / 1.0, 0.3, 100000, 0.15, 0.05, 250.0, rng);
        const BiexpFit fit = fit_biexponential(h, 0.0, 245.0);
        pass = pass && fit.converged && std::fabs(fit.tau_fast_ns - 0.4) / 0.4 < 0.15 &&
               std::fabs(fit.tau_slow_ns - 1.0) / 1.0 < 0.15 && !fit.irf_limited;
        detail << ", coupled " << fit.tau_fast_ns << "/" << fit.tau_slow_ns;
    }
    {
        Rng rng(44, "acceptance.tcspc.floor");
        const DecayHistogram h =
            simulate_decay_histogram(1.0 / 0.1, 1.0 / 1.0, 0.3, 100000, 0.15, 0.05, 250.0, rng);
        const BiexpFit fit = fit_biexponential(h, 0.0, 245.0);
        pass = pass && fit.irf_limited;
        detail << ", floor flag " << (fit.irf_limited ? "on" : "off");
    }
    report(8, "lifetime fits: 2.1/29.4 within 5%, 0.4/1.0 within 15%, IRF flag calibrated", pass,
           detail.str());
}

// 9. Quenching property below 10 nm.
void criterion_9() {
    Materials mats;
    NanoAntennaModel antenna;
    QuantumEmitterModel emitter;
    bool monotone = true;
    double prev_eta = 2.0, prev_rate = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double delta = 10.0 - i * (9.8 / 49.0);
        const RateModification rm = rate_modification(delta, emitter, antenna, mats);
        const double rate = rm.total_rate_factor(emitter.intrinsic_quantum_yield);
        if (i > 0 && !(rm.quantum_yield < prev_eta && rate > prev_rate)) monotone = false;
        prev_eta = rm.quantum_yield;
        prev_rate = rate;
    }
    const RateModification contact = rate_modification(0.05, emitter, antenna, mats);
    const double f_contact = fluorescence_enhancement(contact.excitation_factor, contact,
                                                      emitter.intrinsic_quantum_yield);
    std::ostringstream detail;
    detail << "monotone " << (monotone ? "yes" : "no") << ", F(0.05 nm) = " << f_contact;
    report(9, "quenching: yield falls, rate rises below 10 nm, F -> 0 at contact",
           monotone && f_contact < 0.05, detail.str());
}

// 10. Stability statistics: Fano and p-value calibration.
void criterion_10() {
    Rng rng(948206, "acceptance.stability");
    const auto trace = intensity_trace(11.5, 20000.0, 100.0, 1e-3, {}, rng);
    const PoissonTestResult r = poisson_goodness(trace);
    bool pass = r.fano > 0.95 && r.fano < 1.05;

    std::vector<double> pvalues;
    for (int seed = 0; seed < 200; ++seed) {
        Rng cal(seed, "acceptance.stability.cal");
        const auto t = intensity_trace(1.0, 22000.0, 10.0, 1e-3, {}, cal);
        pvalues.push_back(poisson_goodness(t).p_value);
    }
    const double ks = ks_distance_uniform(pvalues);
    pass = pass && ks < 0.1;
    std::ostringstream detail;
    detail << "fano " << r.fano << ", p-value KS distance " << ks;
    report(10, "stability: Fano within 1 +- 0.05 and calibrated p-values", pass, detail.str());
}

// 11. Determinism: byte-identical bundles for repeated preset runs.
void criterion_11() {
    bool pass = true;
    std::ostringstream detail;
    for (const std::string preset : {"lateral-scan", "localization-precision"}) {
        RunOptions a, b;
        a.output_dir = scratch_dir(preset + "_a").string();
        b.output_dir = scratch_dir(preset + "_b").string();
        a.no_plots = b.no_plots = true;
        const ScenarioResult ra = reproduce(preset, a);
        const ScenarioResult rb = reproduce(preset, b);
        bool same = ra.bundle_hash == rb.bundle_hash;
        for (const auto& entry : std::filesystem::directory_iterator(ra.output_dir)) {
            if (entry.path().extension() != ".csv") continue;
            same = same && read_bytes(entry.path()) ==
                               read_bytes(rb.output_dir / entry.path().filename());
        }
        pass = pass && same;
        detail << preset << " " << (same ? "identical" : "DIFFERS") << "; ";
    }
    report(11, "repeated preset runs are byte-identical with equal manifest hashes", pass,
           detail.str());
}

// 12. Oracle suites: series self-convergence, image limits, smoothing variance.
void criterion_12() {
    const auto t0 = std::chrono::steady_clock::now();
    Materials mats;
    NanoAntennaModel antenna;
    bool pass = true;
    std::ostringstream detail;

    const auto n500 = decay_rates_near_sphere(1.0, 0.0, 652.0, antenna, mats, 500, 0.0);
    const auto n1000 = decay_rates_near_sphere(1.0, 0.0, 652.0, antenna, mats, 1000, 0.0);
    const double series_rel =
        std::fabs(n1000.nonradiative_added - n500.nonradiative_added) / n1000.nonradiative_added;
    pass = pass && series_rel < 1e-6;
    detail << "series rel " << series_rel;

    const std::complex<double> alpha(2.0e5, 3.0e4);
    const auto beta_zero = effective_polarizability_interface(alpha, 50.0, 0.0, 40.0);
    const auto far = effective_polarizability_interface(alpha, 1e9, antenna.image_strength(), 40.0);
    const double image_rel =
        std::max(std::abs(beta_zero - alpha), std::abs(far - alpha)) / std::abs(alpha);
    pass = pass && image_rel < 1e-6;
    detail << ", image limits rel " << image_rel;

    Rng rng(77, "acceptance.ma");
    std::vector<double> noise(10000);
    for (auto& v : noise) v = rng.normal();
    const auto smoothed = moving_average(noise, 3);
    std::vector<double> interior(smoothed.begin() + 1, smoothed.end() - 1);
    const double reduction = variance(noise) / variance(interior);
    pass = pass && reduction > 2.6 && reduction < 3.5;
    detail << ", smoothing variance factor " << reduction;

    const double dt = seconds_since(t0);
    pass = pass && dt < 60.0;
    detail << ", " << dt << " s";
    report(12, "oracle suites: convergence, image limits, smoothing variance", pass, detail.str());
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
    if (g_failures == 0)
        std::printf("all acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures;
}
