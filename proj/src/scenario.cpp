#include "proscan/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "proscan/csv.hpp"
#include "proscan/errors.hpp"
#include "proscan/stats.hpp"
#include "proscan/svg.hpp"

namespace proscan {

namespace {

using nlohmann::json;

const json& require_section(const json& doc, const std::string& name) {
    if (!doc.contains(name))
        throw ConfigError("missing required section '" + name + "'");
    return doc.at(name);
}

double require_number(const json& obj, const std::string& section, const std::string& field) {
    if (!obj.contains(field))
        throw ConfigError("missing field '" + section + "." + field + "'");
    if (!obj.at(field).is_number())
        throw ConfigError("field '" + section + "." + field + "' must be a number");
    return obj.at(field).get<double>();
}

double number_or(const json& obj, const std::string& field, double fallback) {
    if (!obj.contains(field)) return fallback;
    return obj.at(field).get<double>();
}

bool bool_or(const json& obj, const std::string& field, bool fallback) {
    if (!obj.contains(field)) return fallback;
    return obj.at(field).get<bool>();
}

std::string string_or(const json& obj, const std::string& field, const std::string& fallback) {
    if (!obj.contains(field)) return fallback;
    return obj.at(field).get<std::string>();
}

PiezoAxisModel parse_lateral(const json& mech) {
    PiezoAxisModel m;
    if (!mech.contains("lateral")) throw ConfigError("missing field 'mechanics.lateral'");
    const json& j = mech.at("lateral");
    m.gain_nm_per_v = number_or(j, "gain_nm_per_v", m.gain_nm_per_v);
    m.crosstalk_slope = number_or(j, "crosstalk_slope", m.crosstalk_slope);
    m.step_sigma_nm = number_or(j, "step_sigma_nm", m.step_sigma_nm);
    m.jitter_sigma_nm = number_or(j, "jitter_sigma_nm", m.jitter_sigma_nm);
    m.backlash_deadband_nm = number_or(j, "backlash_deadband_nm", m.backlash_deadband_nm);
    m.gain_ramp_per_v = number_or(j, "gain_ramp_per_v", m.gain_ramp_per_v);
    m.validate();
    return m;
}

AxialTransferModel parse_axial(const json& mech) {
    AxialTransferModel m;
    if (mech.contains("axial")) {
        const json& j = mech.at("axial");
        m.unloaded_gain_nm_per_v = number_or(j, "unloaded_gain_nm_per_v", m.unloaded_gain_nm_per_v);
        m.fine_gain_nm_per_v = number_or(j, "fine_gain_nm_per_v", m.fine_gain_nm_per_v);
        m.coarse_ratio = number_or(j, "coarse_ratio", m.coarse_ratio);
        m.fine_regime_threshold_nm =
            number_or(j, "fine_regime_threshold_nm", m.fine_regime_threshold_nm);
    }
    m.validate();
    return m;
}

NanoAntennaModel parse_antenna(const json& j) {
    NanoAntennaModel m;
    m.radius_nm = number_or(j, "radius_nm", m.radius_nm);
    m.medium_permittivity = number_or(j, "medium_permittivity", m.medium_permittivity);
    m.substrate_permittivity = number_or(j, "substrate_permittivity", m.substrate_permittivity);
    m.support_embedding_weight = number_or(j, "support_embedding_weight", m.support_embedding_weight);
    m.dynamic_depolarization = bool_or(j, "dynamic_depolarization", m.dynamic_depolarization);
    m.validate();
    return m;
}

QuantumEmitterModel parse_emitter(const json& j) {
    QuantumEmitterModel m;
    m.dipole_polar_angle_rad = number_or(j, "dipole_polar_angle_rad", m.dipole_polar_angle_rad);
    m.intrinsic_quantum_yield = number_or(j, "intrinsic_quantum_yield", m.intrinsic_quantum_yield);
    m.exciton_lifetime_ns = number_or(j, "exciton_lifetime_ns", m.exciton_lifetime_ns);
    m.biexciton_lifetime_ns = number_or(j, "biexciton_lifetime_ns", m.biexciton_lifetime_ns);
    m.biexciton_fraction = number_or(j, "biexciton_fraction", m.biexciton_fraction);
    m.emission_wavelength_nm = number_or(j, "emission_wavelength_nm", m.emission_wavelength_nm);
    m.excitation_wavelength_nm =
        number_or(j, "excitation_wavelength_nm", m.excitation_wavelength_nm);
    m.repetition_rate_mhz = number_or(j, "repetition_rate_mhz", m.repetition_rate_mhz);
    m.validate();
    return m;
}

CameraModel parse_camera(const json& j) {
    CameraModel m;
    m.pixel_size_nm = number_or(j, "pixel_size_nm", m.pixel_size_nm);
    m.read_noise_counts = number_or(j, "read_noise_counts", m.read_noise_counts);
    m.background_per_pixel = number_or(j, "background_per_pixel", m.background_per_pixel);
    m.psf_sigma_nm = number_or(j, "psf_sigma_nm", m.psf_sigma_nm);
    m.shot_noise = bool_or(j, "shot_noise", m.shot_noise);
    m.validate();
    return m;
}

const std::map<std::string, std::vector<std::string>>& kind_requirements() {
    static const std::map<std::string, std::vector<std::string>> reqs = {
        {"lateral-scan", {"mechanics", "protocol"}},
        {"coarse-approach", {"mechanics", "materials", "interferometry", "coarse-approach"}},
        {"fine-approach-plasmon",
         {"mechanics", "materials", "antenna", "interferometry", "fine-approach"}},
        {"linescan-coarse", {"materials", "antenna", "emitter", "camera", "scan"}},
        {"linescan-fine", {"materials", "antenna", "emitter", "scan"}},
        {"stability", {"materials", "antenna", "emitter", "stability"}},
        {"localization-precision", {"camera", "precision"}},
    };
    return reqs;
}

}  // namespace

Materials ScenarioConfig::make_materials() const {
    if (gold_table_csv)
        return Materials(DielectricTable::from_csv(*gold_table_csv), glass_index);
    return Materials(DielectricTable::gold_johnson_christy(), glass_index);
}

std::vector<double> ScenarioConfig::make_grid() const {
    return wavelength_grid(grid_min_nm, grid_max_nm, grid_points);
}

ScenarioConfig parse_config(const json& document) {
    ScenarioConfig cfg;
    cfg.raw = document;
    if (!document.contains("scenario"))
        throw ConfigError("missing required field 'scenario'");
    cfg.scenario_kind = document.at("scenario").get<std::string>();
    const auto& reqs = kind_requirements();
    auto it = reqs.find(cfg.scenario_kind);
    if (it == reqs.end()) {
        std::string known;
        for (const auto& [k, v] : reqs) known += (known.empty() ? "" : ", ") + k;
        throw ConfigError("unknown scenario '" + cfg.scenario_kind + "' (known: " + known + ")");
    }
    if (!document.contains("seed"))
        throw ConfigError("missing required field 'seed'");
    cfg.seed = document.at("seed").get<std::uint64_t>();
    cfg.output_dir = string_or(document, "output_dir", "");

    for (const std::string& section : it->second) require_section(document, section);

    if (document.contains("mechanics")) {
        const json& mech = document.at("mechanics");
        if (mech.contains("lateral")) cfg.lateral_piezo = parse_lateral(mech);
        cfg.axial = parse_axial(mech);
    }
    if (document.contains("materials")) {
        const json& mat = document.at("materials");
        cfg.glass_index = number_or(mat, "glass_index", 1.52);
        if (mat.contains("gold_table_csv") && !mat.at("gold_table_csv").is_null())
            cfg.gold_table_csv = mat.at("gold_table_csv").get<std::string>();
    }
    if (document.contains("antenna")) cfg.antenna = parse_antenna(document.at("antenna"));
    if (document.contains("emitter")) cfg.emitter = parse_emitter(document.at("emitter"));
    if (document.contains("camera")) cfg.camera = parse_camera(document.at("camera"));
    if (document.contains("interferometry")) {
        const json& j = document.at("interferometry");
        cfg.grid_min_nm = number_or(j, "grid_min_nm", cfg.grid_min_nm);
        cfg.grid_max_nm = number_or(j, "grid_max_nm", cfg.grid_max_nm);
        cfg.grid_points = static_cast<std::size_t>(number_or(j, "grid_points", 601));
        cfg.spectrum_noise_sigma = number_or(j, "noise_sigma", 0.0);
        cfg.envelope = string_or(j, "envelope", "flat");
        if (cfg.envelope != "flat" && cfg.envelope != "lamp")
            throw ConfigError("interferometry.envelope must be 'flat' or 'lamp'");
        if (!(cfg.grid_max_nm > cfg.grid_min_nm) || cfg.grid_points < 2)
            throw ConfigError("interferometry grid is degenerate");
    }
    if (document.contains("protocol")) {
        const json& proto = document.at("protocol");
        if (!proto.is_array()) throw ConfigError("'protocol' must be an array");
        for (std::size_t i = 0; i < proto.size(); ++i) {
            const json& c = proto[i];
            ProtocolCommand cmd;
            cmd.op = string_or(c, "op", "");
            if (cmd.op != "lateral" && cmd.op != "axial")
                throw ConfigError("protocol[" + std::to_string(i) + "].op must be 'lateral' or 'axial'");
            const std::string axis = string_or(c, "axis", "x");
            if (axis != "x" && axis != "y")
                throw ConfigError("protocol[" + std::to_string(i) + "].axis must be 'x' or 'y'");
            cmd.axis = (axis == "x") ? Axis::x : Axis::y;
            cmd.volts = require_number(c, "protocol[" + std::to_string(i) + "]", "volts");
            cmd.repeat = static_cast<int>(number_or(c, "repeat", 1));
            if (cmd.repeat < 1)
                throw ConfigError("protocol[" + std::to_string(i) + "].repeat must be >= 1");
            cfg.protocol.push_back(cmd);
        }
    }
    // The scenario-specific section rides along as-is.
    const std::string kind_section = (cfg.scenario_kind == "coarse-approach")       ? "coarse-approach"
                                     : (cfg.scenario_kind == "fine-approach-plasmon") ? "fine-approach"
                                     : (cfg.scenario_kind == "linescan-coarse")       ? "scan"
                                     : (cfg.scenario_kind == "linescan-fine")         ? "scan"
                                     : (cfg.scenario_kind == "stability")             ? "stability"
                                     : (cfg.scenario_kind == "localization-precision") ? "precision"
                                                                                        : "";
    if (!kind_section.empty() && document.contains(kind_section))
        cfg.extras = document.at(kind_section);
    return cfg;
}

// ---------------------------------------------------------------------------
// Presets: one bundled configuration per figure-level experiment.

namespace {

json preset_lateral_scan() {
    return json{
        {"scenario", "lateral-scan"},
        {"seed", 948201},
        {"mechanics",
         {{"lateral",
           {{"gain_nm_per_v", 7.3},
            {"crosstalk_slope", -0.023},
            {"step_sigma_nm", 3.5},
            {"jitter_sigma_nm", 2.74},
            {"backlash_deadband_nm", 0.0}}}}},
        {"protocol", json::array({{{"op", "lateral"}, {"axis", "x"}, {"volts", 1.0}, {"repeat", 100}}})},
    };
}

json preset_coarse_approach() {
    return json{
        {"scenario", "coarse-approach"},
        {"seed", 948202},
        {"mechanics", json::object()},
        {"materials", {{"glass_index", 1.52}}},
        {"interferometry",
         {{"grid_min_nm", 450.0}, {"grid_max_nm", 750.0}, {"grid_points", 601}, {"noise_sigma", 0.0}, {"envelope", "flat"}}},
        {"coarse-approach",
         {{"whitelight_gaps_nm", {6000.0, 5250.0, 4500.0, 3750.0, 3000.0, 2400.0, 2000.0, 1600.0, 1200.0, 800.0}},
          {"monochromatic",
           {{"start_gap_nm", 5990.0}, {"piezo_step_v", 0.2}, {"steps", 171}, {"wavelength_nm", 532.0}}}}},
    };
}

json preset_fine_approach() {
    return json{
        {"scenario", "fine-approach-plasmon"},
        {"seed", 948203},
        {"mechanics", json::object()},
        {"materials", {{"glass_index", 1.52}}},
        {"antenna", json::object()},
        {"interferometry",
         {{"grid_min_nm", 450.0}, {"grid_max_nm", 750.0}, {"grid_points", 601}, {"noise_sigma", 0.0}, {"envelope", "flat"}}},
        {"fine-approach",
         {{"start_gap_nm", 200.0},
          {"piezo_step_v", 1.0},
          {"steps", 100},
          {"noise_sigma", 0.0},
          {"fit_max_wavelength_nm", 590.0},
          {"smoothing_window", 3}}},
    };
}

// Operating point reproducing the coupled-dot observables: separation 3 nm,
// axial dipole, intrinsic yield 0.062 (set by the 2-parameter sweep against
// the enhancement and rate targets).
json coupled_emitter_section() {
    return json{{"dipole_polar_angle_rad", 0.0},
                {"intrinsic_quantum_yield", 0.062},
                {"exciton_lifetime_ns", 29.4},
                {"biexciton_lifetime_ns", 2.1},
                {"biexciton_fraction", 0.3},
                {"emission_wavelength_nm", 652.0},
                {"excitation_wavelength_nm", 532.0},
                {"repetition_rate_mhz", 4.0}};
}

json preset_linescan_coarse() {
    return json{
        {"scenario", "linescan-coarse"},
        {"seed", 948204},
        {"materials", {{"glass_index", 1.52}}},
        {"antenna", json::object()},
        {"emitter", coupled_emitter_section()},
        {"camera", json::object()},
        {"scan",
         {{"gap_nm", 3.0},
          {"offset_min_nm", -800.0},
          {"offset_max_nm", 800.0},
          {"offset_step_nm", 25.0},
          {"tcspc", {{"n_photons", 20000}, {"bin_width_ns", 0.1}, {"irf_sigma_ns", 0.15}}},
          {"render",
           {{"qdot_photons", 2000.0},
            {"gnp_photons", 150.0},
            {"frame_width_px", 40},
            {"frame_height_px", 16}}}}},
    };
}

json preset_linescan_fine() {
    json emitter = coupled_emitter_section();
    emitter["dipole_polar_angle_rad"] = 0.5235987755982988;  // 30 degrees
    return json{
        {"scenario", "linescan-fine"},
        {"seed", 948205},
        {"materials", {{"glass_index", 1.52}}},
        {"antenna", json::object()},
        {"emitter", emitter},
        {"scan",
         {{"gap_nm", 3.0},
          {"offset_min_nm", -50.0},
          {"offset_max_nm", 50.0},
          {"offset_step_nm", 1.0},
          {"tcspc", {{"n_photons", 20000}, {"bin_width_ns", 0.05}, {"irf_sigma_ns", 0.15}}},
          {"hot_spot", {{"enabled", false}, {"radius_nm", 4.0}, {"surface_offset_nm", 15.0}}}}},
    };
}

json preset_stability() {
    return json{
        {"scenario", "stability"},
        {"seed", 948206},
        {"materials", {{"glass_index", 1.52}}},
        {"antenna", json::object()},
        {"emitter", coupled_emitter_section()},
        {"stability",
         {{"gap_nm", 3.0},
          {"base_rate_cps", 20000.0},
          {"duration_s", 100.0},
          {"bin_ms", 1.0},
          {"long_minutes", 70.0},
          {"long_bin_s", 1.0},
          {"drift", {{"kind", "none"}}}}},
    };
}

json preset_localization_precision() {
    return json{
        {"scenario", "localization-precision"},
        {"seed", 948207},
        {"camera", json::object()},
        {"precision",
         {{"photons", 1900.0},
          {"n_seeds", 200},
          {"frame_px", 15},
          {"offset_x_nm", 23.0},
          {"offset_y_nm", -41.0}}},
    };
}

const std::map<std::string, std::pair<json (*)(), const char*>>& preset_table() {
    static const std::map<std::string, std::pair<json (*)(), const char*>> table = {
        {"lateral-scan",
         {&preset_lateral_scan, "100-step lateral rolling scan; trajectory statistics"}},
        {"coarse-approach",
         {&preset_coarse_approach, "white-light FSR gap estimates and monochromatic fringe counting"}},
        {"fine-approach-plasmon",
         {&preset_fine_approach, "plasmon resonance red shift during the near-field approach"}},
        {"linescan-coarse",
         {&preset_linescan_coarse, "emitter scanned across the antenna with frames and lifetimes"}},
        {"linescan-fine",
         {&preset_linescan_fine, "sub-resonance-width lateral scan with a tilted dipole"}},
        {"stability",
         {&preset_stability, "photon-count stability traces and Poisson statistics"}},
        {"localization-precision",
         {&preset_localization_precision, "Monte Carlo localization precision versus the bound"}},
    };
    return table;
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, entry] : preset_table()) names.push_back(name);
    return names;
}

json preset_config(const std::string& name) {
    const auto& table = preset_table();
    auto it = table.find(name);
    if (it == table.end()) {
        std::string known;
        for (const auto& [k, v] : table) known += (known.empty() ? "" : ", ") + k;
        throw ConfigError("unknown preset '" + name + "' (available: " + known + ")");
    }
    return it->second.first();
}

std::string preset_description(const std::string& name) {
    const auto& table = preset_table();
    auto it = table.find(name);
    if (it == table.end()) return "";
    return it->second.second;
}

// ---------------------------------------------------------------------------
// Result bundle plumbing.

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("hash_file: cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << h;
    return hex.str();
}

std::filesystem::path default_output_root() {
    if (const char* env = std::getenv("PROSCAN_OUTPUT_ROOT")) return env;
    return "out";
}

namespace {

class Bundle {
public:
    Bundle(std::filesystem::path dir, bool plots_enabled)
        : dir_(std::move(dir)), plots_(plots_enabled) {
        std::filesystem::create_directories(dir_);
    }

    const std::filesystem::path& dir() const { return dir_; }
    bool plots_enabled() const { return plots_; }

    std::filesystem::path file(const std::string& rel) {
        outputs_.push_back(rel);
        const auto path = dir_ / rel;
        std::filesystem::create_directories(path.parent_path());
        return path;
    }

    /// Plots are best effort: failures never fail the scenario.
    void plot(const std::string& rel, const std::function<void(const std::filesystem::path&)>& fn) {
        if (!plots_) return;
        try {
            fn(file("plots/" + rel));
        } catch (...) {
            if (!outputs_.empty()) outputs_.pop_back();
        }
    }

    void write_summary_and_manifest(const json& config, const json& summary, std::uint64_t seed,
                                    const std::string& kind, ScenarioResult& result) {
        {
            std::ofstream out(file("summary.json"), std::ios::binary);
            out << summary.dump(2) << "\n";
        }
        const std::string config_hash = [&] {
            const std::string dumped = config.dump();
            std::ostringstream hex;
            hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(dumped);
            return hex.str();
        }();

        std::sort(outputs_.begin(), outputs_.end());
        json manifest_outputs = json::object();
        std::string concat;
        for (const std::string& rel : outputs_) {
            const std::string h = hash_file(dir_ / rel);
            manifest_outputs[rel] = h;
            concat += rel + "=" + h + "\n";
        }
        std::ostringstream bundle_hex;
        bundle_hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(concat);

        json manifest = {{"scenario", kind},
                         {"version", kVersion},
                         {"seed", seed},
                         {"config_hash", config_hash},
                         {"outputs", manifest_outputs},
                         {"bundle_hash", bundle_hex.str()}};
        std::ofstream out(dir_ / "manifest.json", std::ios::binary);
        out << manifest.dump(2) << "\n";

        result.output_dir = dir_;
        result.config_hash = config_hash;
        result.bundle_hash = bundle_hex.str();
        result.summary = summary;
    }

private:
    std::filesystem::path dir_;
    bool plots_;
    std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// Scenario executors.

json run_lateral_scan(const ScenarioConfig& cfg, Bundle& bundle) {
    Rng rng(cfg.seed, "lateral-scan.mechanics");
    ScanState state;
    state.gap_nm = 1000.0;

    std::vector<std::pair<double, double>> points;
    CsvWriter traj(bundle.file("trajectory.csv"), {"step", "x_nm", "y_nm"});
    int step = 0;
    points.emplace_back(state.observed_x_nm(), state.observed_y_nm());
    traj.row({static_cast<double>(step), state.observed_x_nm(), state.observed_y_nm()});
    for (const auto& cmd : cfg.protocol) {
        for (int i = 0; i < cmd.repeat; ++i) {
            if (cmd.op == "lateral")
                state = apply_lateral_voltage(state, cmd.volts, cmd.axis, cfg.lateral_piezo, rng);
            else
                state = apply_axial_voltage(state, cmd.volts, cfg.axial);
            ++step;
            points.emplace_back(state.observed_x_nm(), state.observed_y_nm());
            traj.row({static_cast<double>(step), state.observed_x_nm(), state.observed_y_nm()});
        }
    }
    traj.close();

    const TrajectoryStats stats = analyze_trajectory(points);
    bundle.plot("trajectory.svg", [&](const std::filesystem::path& p) {
        std::vector<double> xs, ys;
        for (const auto& [x, y] : points) {
            xs.push_back(x);
            ys.push_back(y);
        }
        SvgChart chart("qdot trajectory", "x (nm)", "y (nm)");
        chart.add_scatter(xs, ys);
        chart.write(p);
    });

    return json{{"points", points.size()},
                {"slope", stats.slope},
                {"tilt_deg", stats.tilt_deg},
                {"step_mean_nm", stats.step_mean_nm},
                {"step_std_nm", stats.step_std_nm},
                {"jitter_nm", stats.jitter_nm}};
}

json run_coarse_approach(const ScenarioConfig& cfg, Bundle& bundle) {
    const Materials mats = cfg.make_materials();
    const auto grid = cfg.make_grid();
    const SourceEnvelope envelope =
        cfg.envelope == "lamp" ? SourceEnvelope::lamp() : SourceEnvelope::flat();

    // White-light spectra over the configured gap ladder.
    const json& wl = cfg.extras.at("whitelight_gaps_nm");
    CsvWriter fsr(bundle.file("fsr_estimates.csv"),
                  {"gap_nm", "estimated_gap_nm", "maxima_count", "sufficient"});
    int insufficient = 0;
    double worst_rel_error = 0.0;
    int idx = 0;
    Spectrum first_spectrum, last_spectrum;
    for (const auto& gj : wl) {
        const double gap = gj.get<double>();
        Rng rng(cfg.seed, "coarse-approach.whitelight." + std::to_string(idx));
        const Spectrum s = white_light_spectrum(gap, grid, cfg.spectrum_noise_sigma, rng, envelope,
                                                cfg.glass_index);
        if (idx == 0) first_spectrum = s;
        last_spectrum = s;
        const GapEstimate est = estimate_gap_fsr(s);
        fsr.row({gap, est.sufficient ? est.gap_nm : 0.0, static_cast<double>(est.maxima_count),
                 est.sufficient ? 1.0 : 0.0});
        if (est.sufficient)
            worst_rel_error = std::max(worst_rel_error, std::fabs(est.gap_nm - gap) / gap);
        else
            ++insufficient;
        ++idx;
    }
    fsr.close();
    first_spectrum.write_csv(bundle.file("whitelight_largest_gap.csv"));
    last_spectrum.write_csv(bundle.file("whitelight_smallest_gap.csv"));
    bundle.plot("whitelight.svg", [&](const std::filesystem::path& p) {
        SvgChart chart("white-light interference", "wavelength (nm)", "reflectance");
        chart.add_line(first_spectrum.wavelengths_nm, first_spectrum.intensities);
        chart.add_line(last_spectrum.wavelengths_nm, last_spectrum.intensities, "#888888");
        chart.write(p);
    });

    // Monochromatic displacement trace during a slow piezo ramp.
    const json& mono = cfg.extras.at("monochromatic");
    const double wavelength = require_number(mono, "coarse-approach.monochromatic", "wavelength_nm");
    const double start_gap = require_number(mono, "coarse-approach.monochromatic", "start_gap_nm");
    const double step_v = require_number(mono, "coarse-approach.monochromatic", "piezo_step_v");
    const int steps = static_cast<int>(require_number(mono, "coarse-approach.monochromatic", "steps"));

    ScanState state;
    state.gap_nm = start_gap;
    std::vector<double> trace;
    CsvWriter trace_csv(bundle.file("monochromatic_trace.csv"), {"step", "gap_nm", "intensity"});
    trace.push_back(cavity_reflectance(state.gap_nm, wavelength, cfg.glass_index));
    trace_csv.row({0.0, state.gap_nm, trace.back()});
    for (int i = 1; i <= steps; ++i) {
        state = apply_axial_voltage(state, step_v, cfg.axial);
        trace.push_back(cavity_reflectance(state.gap_nm, wavelength, cfg.glass_index));
        trace_csv.row({static_cast<double>(i), state.gap_nm, trace.back()});
    }
    trace_csv.close();
    const double true_displacement = start_gap - state.gap_nm;
    const DisplacementEstimate disp = displacement_from_fringes(trace, wavelength);
    bundle.plot("monochromatic_trace.svg", [&](const std::filesystem::path& p) {
        std::vector<double> xs(trace.size());
        for (std::size_t i = 0; i < trace.size(); ++i) xs[i] = static_cast<double>(i);
        SvgChart chart("monochromatic reflection during approach", "piezo step", "reflectance");
        chart.add_line(xs, trace);
        chart.write(p);
    });

    return json{{"fsr",
                 {{"gaps_tested", wl.size()},
                  {"insufficient_count", insufficient},
                  {"worst_rel_error", worst_rel_error}}},
                {"displacement",
                 {{"wavelength_nm", wavelength},
                  {"full_oscillations", disp.full_oscillations},
                  {"estimated_nm", disp.displacement_nm},
                  {"true_nm", true_displacement},
                  {"sufficient", disp.sufficient}}}};
}

json run_fine_approach(const ScenarioConfig& cfg, Bundle& bundle) {
    const Materials mats = cfg.make_materials();
    const auto grid = cfg.make_grid();
    const double start_gap = require_number(cfg.extras, "fine-approach", "start_gap_nm");
    const double step_v = require_number(cfg.extras, "fine-approach", "piezo_step_v");
    const int steps = static_cast<int>(require_number(cfg.extras, "fine-approach", "steps"));
    const double noise = number_or(cfg.extras, "noise_sigma", 0.0);
    const double fit_max = number_or(cfg.extras, "fit_max_wavelength_nm", 590.0);
    const int window = static_cast<int>(number_or(cfg.extras, "smoothing_window", 3));

    const double inf = std::numeric_limits<double>::infinity();
    const Spectrum baseline = scattering_spectrum(inf, grid, cfg.antenna, mats);
    const ResonanceFit baseline_fit = fit_resonance(baseline, cfg.antenna, mats, fit_max);
    if (!baseline_fit.converged)
        throw FitError("fine-approach: baseline resonance fit failed", baseline_fit.residual_norm);
    baseline.write_csv(bundle.file("spectrum_isolated.csv"));

    ScanState state;
    state.gap_nm = start_gap;
    std::vector<double> gaps, volts, lambdas;
    gaps.push_back(state.gap_nm);
    volts.push_back(0.0);
    Spectrum mid_spectrum, contact_spectrum;
    for (int i = 0; i <= steps; ++i) {
        if (i > 0) {
            state = apply_axial_voltage(state, step_v, cfg.axial);
            gaps.push_back(state.gap_nm);
            volts.push_back(i * step_v);
        }
        Rng rng(cfg.seed, "fine-approach.spectrum." + std::to_string(i));
        const Spectrum s =
            scattering_spectrum(state.gap_nm, grid, cfg.antenna, mats, noise, &rng);
        if (i == steps / 2) mid_spectrum = s;
        if (i == steps) contact_spectrum = s;
        const ResonanceFit fit = fit_resonance(s, cfg.antenna, mats, fit_max);
        if (!fit.converged)
            throw FitError("fine-approach: resonance fit failed at step " + std::to_string(i),
                           fit.residual_norm);
        lambdas.push_back(fit.lambda_res_nm);
    }
    mid_spectrum.write_csv(bundle.file("spectrum_mid_approach.csv"));
    contact_spectrum.write_csv(bundle.file("spectrum_near_contact.csv"));

    const std::vector<double> smoothed = moving_average(lambdas, window);
    CsvWriter res(bundle.file("resonance_vs_gap.csv"),
                  {"piezo_v", "gap_nm", "lambda_res_nm", "lambda_res_smoothed_nm", "shift_nm"});
    bool monotone = true;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        res.row({volts[i], gaps[i], lambdas[i], smoothed[i],
                 smoothed[i] - baseline_fit.lambda_res_nm});
        if (i > 0 && !(smoothed[i] > smoothed[i - 1])) monotone = false;
    }
    res.close();

    // Model curve on the same gaps, noiseless.
    const auto model_curve = approach_shift_curve(gaps, cfg.antenna, mats, grid);
    CsvWriter model_csv(bundle.file("model_shift_curve.csv"), {"gap_nm", "shift_nm"});
    for (const auto& [gap, shift] : model_curve) model_csv.row({gap, shift});
    model_csv.close();

    bundle.plot("shift_vs_gap.svg", [&](const std::filesystem::path& p) {
        std::vector<double> shifts, model_shifts;
        for (std::size_t i = 0; i < gaps.size(); ++i)
            shifts.push_back(smoothed[i] - baseline_fit.lambda_res_nm);
        for (const auto& [gap, shift] : model_curve) model_shifts.push_back(shift);
        SvgChart chart("plasmon resonance shift", "gap (nm)", "red shift (nm)");
        chart.add_scatter(gaps, shifts);
        chart.add_line(gaps, model_shifts);
        chart.write(p);
    });

    return json{{"baseline_lambda_nm", baseline_fit.lambda_res_nm},
                {"total_shift_nm", smoothed.back() - smoothed.front()},
                {"shift_at_contact_nm", smoothed.back() - baseline_fit.lambda_res_nm},
                {"monotone_after_smoothing", monotone},
                {"steps", steps}};
}

json run_linescan(const ScenarioConfig& cfg, Bundle& bundle, bool coarse) {
    const Materials mats = cfg.make_materials();
    const double gap = require_number(cfg.extras, "scan", "gap_nm");
    const double off_min = require_number(cfg.extras, "scan", "offset_min_nm");
    const double off_max = require_number(cfg.extras, "scan", "offset_max_nm");
    const double off_step = require_number(cfg.extras, "scan", "offset_step_nm");
    if (!(off_step > 0.0) || !(off_max > off_min))
        throw ConfigError("scan offsets are degenerate");

    HotSpotModel hot_spot;
    if (cfg.extras.contains("hot_spot")) {
        const json& hs = cfg.extras.at("hot_spot");
        hot_spot.enabled = bool_or(hs, "enabled", false);
        hot_spot.radius_nm = number_or(hs, "radius_nm", hot_spot.radius_nm);
        hot_spot.surface_offset_nm = number_or(hs, "surface_offset_nm", hot_spot.surface_offset_nm);
    }

    std::vector<double> offsets;
    for (double o = off_min; o <= off_max + 1e-9; o += off_step) offsets.push_back(o);
    const auto curve = linescan_enhancement(offsets, gap, cfg.emitter, cfg.antenna, mats, hot_spot);

    // TCSPC at each offset: both decay channels share the antenna modification.
    const json& tc = cfg.extras.at("tcspc");
    const std::uint64_t n_photons =
        static_cast<std::uint64_t>(require_number(tc, "scan.tcspc", "n_photons"));
    const double bin_w = require_number(tc, "scan.tcspc", "bin_width_ns");
    const double irf = number_or(tc, "irf_sigma_ns", 0.15);
    const double period = cfg.emitter.period_ns();

    CsvWriter line(bundle.file("linescan.csv"),
                   {"offset_nm", "enhancement", "total_rate_ns_inv", "excitation_factor",
                    "quantum_yield", "tau_slow_fit_ns", "tau_fast_fit_ns", "irf_limited"});
    double peak_f = 0.0, min_tau = 1e9;
    int irf_limited_count = 0;
    DecayHistogram example_hist;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        const auto& pt = curve[i];
        const double rate_factor = pt.total_rate_ns_inv * cfg.emitter.exciton_lifetime_ns;
        const double slow_rate = rate_factor / cfg.emitter.exciton_lifetime_ns;
        const double fast_rate = rate_factor / cfg.emitter.biexciton_lifetime_ns;
        Rng rng(cfg.seed, "linescan.tcspc." + std::to_string(i));
        const DecayHistogram hist = simulate_decay_histogram(
            fast_rate, slow_rate, cfg.emitter.biexciton_fraction, n_photons, irf, bin_w, period, rng);
        if (i == curve.size() / 2) example_hist = hist;
        std::size_t peak_bin = 0;
        for (std::size_t b = 0; b < hist.counts.size(); ++b)
            if (hist.counts[b] > hist.counts[peak_bin]) peak_bin = b;
        const BiexpFit fit =
            fit_biexponential(hist, hist.bin_center_ns(peak_bin), hist.period_ns - 5.0);
        line.row({pt.offset_nm, pt.enhancement, pt.total_rate_ns_inv, pt.excitation_factor,
                  pt.quantum_yield, fit.tau_slow_ns, fit.tau_fast_ns,
                  fit.irf_limited ? 1.0 : 0.0});
        peak_f = std::max(peak_f, pt.enhancement);
        min_tau = std::min(min_tau, 1.0 / pt.total_rate_ns_inv);
        if (fit.irf_limited) ++irf_limited_count;
    }
    line.close();

    // Central-offset decay histogram kept for re-analysis.
    {
        CsvWriter hist_csv(bundle.file("decay_histogram_center.csv"), {"t_ns", "counts"});
        for (std::size_t b = 0; b < example_hist.counts.size(); ++b)
            hist_csv.row({example_hist.bin_center_ns(b), static_cast<double>(example_hist.counts[b])});
        hist_csv.close();
        json sidecar = {{"irf_sigma_ns", example_hist.irf_sigma_ns},
                        {"bin_width_ns", example_hist.bin_width_ns},
                        {"period_ns", example_hist.period_ns},
                        {"total_photons", example_hist.total_photons},
                        {"seed", cfg.seed}};
        std::ofstream out(bundle.file("decay_histogram_center.json"), std::ios::binary);
        out << sidecar.dump(2) << "\n";
    }

    bundle.plot("linescan.svg", [&](const std::filesystem::path& p) {
        std::vector<double> xs, fs;
        for (const auto& pt : curve) {
            xs.push_back(pt.offset_nm);
            fs.push_back(pt.enhancement);
        }
        SvgChart chart("fluorescence enhancement linescan", "offset (nm)", "enhancement");
        chart.add_line(xs, fs);
        chart.write(p);
    });

    json summary = {{"gap_nm", gap},
                    {"peak_enhancement", peak_f},
                    {"min_exciton_lifetime_ns", min_tau},
                    {"uncoupled_exciton_rate_ns_inv", 1.0 / cfg.emitter.exciton_lifetime_ns},
                    {"peak_exciton_rate_ns_inv", 1.0 / min_tau},
                    {"irf_limited_points", irf_limited_count},
                    {"points", curve.size()}};

    // Enhancement onset: outermost offset with a >10% intensity change.
    double onset = 0.0;
    for (const auto& pt : curve)
        if (std::fabs(pt.enhancement - 1.0) > 0.1) onset = std::max(onset, std::fabs(pt.offset_nm));
    summary["enhancement_onset_offset_nm"] = onset;

    if (coarse && cfg.extras.contains("render")) {
        const json& render = cfg.extras.at("render");
        const double qdot_photons = require_number(render, "scan.render", "qdot_photons");
        const double gnp_photons = require_number(render, "scan.render", "gnp_photons");
        const int fw = static_cast<int>(number_or(render, "frame_width_px", 40));
        const int fh = static_cast<int>(number_or(render, "frame_height_px", 16));
        const double px = cfg.camera.pixel_size_nm;
        const double gnp_x = 0.5 * fw * px, gnp_y = 0.5 * fh * px;

        std::vector<Frame> frames;
        frames.reserve(curve.size());
        for (std::size_t i = 0; i < curve.size(); ++i) {
            Rng rng(cfg.seed, "linescan.frame." + std::to_string(i));
            // The qdot brightness follows the modeled enhancement.
            const Frame frame = render_frame(
                {{gnp_x, gnp_y, gnp_photons},
                 {gnp_x + curve[i].offset_nm, gnp_y, qdot_photons * curve[i].enhancement}},
                cfg.camera, fw, fh, rng);
            frames.push_back(frame);
            if (i % 16 == 0 || i + 1 == curve.size()) {
                const std::string stem = "frames/frame_" + std::to_string(i);
                write_pgm16(frame, bundle.file(stem + ".pgm"));
                json sidecar = {{"origin_x_nm", frame.origin_x_nm},
                                {"origin_y_nm", frame.origin_y_nm},
                                {"pixel_size_nm", px},
                                {"psf_sigma_nm", cfg.camera.psf_sigma_nm},
                                {"offset_nm", curve[i].offset_nm},
                                {"seed", cfg.seed}};
                std::ofstream out(bundle.file(stem + ".json"), std::ios::binary);
                out << sidecar.dump(2) << "\n";
            }
        }

        const int roi_half = 5;
        const int gnp_px = fw / 2;
        const RoiRect stationary{gnp_px - roi_half, fh / 2 - roi_half, 2 * roi_half + 1,
                                 2 * roi_half + 1};
        std::vector<RoiRect> moving;
        moving.reserve(curve.size());
        for (const auto& pt : curve) {
            int cx = static_cast<int>(std::round((gnp_x + pt.offset_nm) / px));
            cx = std::clamp(cx, roi_half, fw - roi_half - 1);
            moving.push_back({cx - roi_half, fh / 2 - roi_half, 2 * roi_half + 1, 2 * roi_half + 1});
        }
        const auto separations = separation_series(frames, stationary, moving);
        CsvWriter sep(bundle.file("separation.csv"),
                      {"index", "offset_nm", "separation_nm", "raw_separation_nm", "coupled"});
        double onset_separation = 0.0;
        for (std::size_t i = 0; i < separations.size(); ++i) {
            sep.row({static_cast<double>(i), curve[i].offset_nm, separations[i].separation_nm,
                     separations[i].raw_separation_nm, separations[i].coupled ? 1.0 : 0.0});
            if (separations[i].coupled)
                onset_separation =
                    std::max(onset_separation, std::fabs(separations[i].separation_nm));
        }
        sep.close();
        summary["merge_flag_threshold_nm"] = 2.0 * cfg.camera.psf_sigma_nm;
        summary["largest_flagged_separation_nm"] = onset_separation;
    }
    return summary;
}

json run_stability(const ScenarioConfig& cfg, Bundle& bundle) {
    const Materials mats = cfg.make_materials();
    const double gap = require_number(cfg.extras, "stability", "gap_nm");
    const double base_rate = require_number(cfg.extras, "stability", "base_rate_cps");
    const double duration = require_number(cfg.extras, "stability", "duration_s");
    const double bin_s = require_number(cfg.extras, "stability", "bin_ms") * 1e-3;
    const double long_minutes = number_or(cfg.extras, "long_minutes", 70.0);
    const double long_bin_s = number_or(cfg.extras, "long_bin_s", 1.0);

    DriftModel drift;
    if (cfg.extras.contains("drift")) {
        const json& d = cfg.extras.at("drift");
        const std::string kind = string_or(d, "kind", "none");
        if (kind == "none") drift.kind = DriftModel::Kind::none;
        else if (kind == "linear") drift.kind = DriftModel::Kind::linear;
        else if (kind == "sinusoidal") drift.kind = DriftModel::Kind::sinusoidal;
        else throw ConfigError("stability.drift.kind must be none, linear or sinusoidal");
        drift.relative_per_s = number_or(d, "relative_per_s", 0.0);
        drift.amplitude = number_or(d, "amplitude", 0.0);
        drift.period_s = number_or(d, "period_s", 600.0);
    }

    const RateModification rm = rate_modification(gap, cfg.emitter, cfg.antenna, mats);
    const double enhancement =
        fluorescence_enhancement(rm.excitation_factor, rm, cfg.emitter.intrinsic_quantum_yield);

    Rng rng_coupled(cfg.seed, "stability.trace.coupled");
    Rng rng_uncoupled(cfg.seed, "stability.trace.uncoupled");
    const auto coupled = intensity_trace(enhancement, base_rate, duration, bin_s, drift, rng_coupled);
    const auto uncoupled = intensity_trace(1.0, base_rate, duration, bin_s, drift, rng_uncoupled);

    auto write_trace = [&](const std::string& name, const std::vector<std::uint64_t>& trace) {
        CsvWriter csv(bundle.file(name), {"bin_index", "counts"});
        for (std::size_t i = 0; i < trace.size(); ++i)
            csv.row({static_cast<double>(i), static_cast<double>(trace[i])});
        csv.close();
    };
    write_trace("trace_coupled.csv", coupled);
    write_trace("trace_uncoupled.csv", uncoupled);

    const PoissonTestResult p_coupled = poisson_goodness(coupled);
    const PoissonTestResult p_uncoupled = poisson_goodness(uncoupled);

    // Long-run enhancement estimate in windows.
    Rng rng_long(cfg.seed, "stability.trace.long");
    const double long_duration = long_minutes * 60.0;
    const auto long_trace =
        intensity_trace(enhancement, base_rate, long_duration, long_bin_s, drift, rng_long);
    const std::size_t window_bins = static_cast<std::size_t>(std::max(1.0, 60.0 / long_bin_s));
    std::vector<double> window_f;
    CsvWriter lcsv(bundle.file("enhancement_vs_time.csv"), {"t_s", "enhancement_estimate"});
    for (std::size_t w = 0; w + window_bins <= long_trace.size(); w += window_bins) {
        double sum = 0.0;
        for (std::size_t i = w; i < w + window_bins; ++i) sum += static_cast<double>(long_trace[i]);
        const double f_hat = sum / (static_cast<double>(window_bins) * base_rate * long_bin_s);
        window_f.push_back(f_hat);
        lcsv.row({(static_cast<double>(w) + 0.5 * window_bins) * long_bin_s, f_hat});
    }
    lcsv.close();
    const double f_min = *std::min_element(window_f.begin(), window_f.end());
    const double f_max = *std::max_element(window_f.begin(), window_f.end());

    bundle.plot("trace.svg", [&](const std::filesystem::path& p) {
        std::vector<double> xs, cs, us;
        const std::size_t show = std::min<std::size_t>(2000, coupled.size());
        for (std::size_t i = 0; i < show; ++i) {
            xs.push_back(static_cast<double>(i) * bin_s);
            cs.push_back(static_cast<double>(coupled[i]));
            us.push_back(static_cast<double>(uncoupled[i]));
        }
        SvgChart chart("emission traces (first 2 s)", "time (s)", "counts per bin");
        chart.add_line(xs, cs);
        chart.add_line(xs, us, "#2e8b57");
        chart.write(p);
    });

    return json{{"enhancement", enhancement},
                {"coupled",
                 {{"mean", p_coupled.mean},
                  {"fano", p_coupled.fano},
                  {"p_value", p_coupled.p_value}}},
                {"uncoupled",
                 {{"mean", p_uncoupled.mean},
                  {"fano", p_uncoupled.fano},
                  {"p_value", p_uncoupled.p_value}}},
                {"long_trace",
                 {{"minutes", long_minutes},
                  {"enhancement_min", f_min},
                  {"enhancement_max", f_max},
                  {"relative_spread", (f_max - f_min) / enhancement}}}};
}

json run_localization_precision(const ScenarioConfig& cfg, Bundle& bundle) {
    const double photons = require_number(cfg.extras, "precision", "photons");
    const int n_seeds = static_cast<int>(require_number(cfg.extras, "precision", "n_seeds"));
    const int frame_px = static_cast<int>(number_or(cfg.extras, "frame_px", 15));
    const double off_x = number_or(cfg.extras, "offset_x_nm", 23.0);
    const double off_y = number_or(cfg.extras, "offset_y_nm", -41.0);

    const double px = cfg.camera.pixel_size_nm;
    const double tx = 0.5 * frame_px * px + off_x;
    const double ty = 0.5 * frame_px * px + off_y;

    CsvWriter errs(bundle.file("localization_errors.csv"),
                   {"trial", "dx_nm", "dy_nm", "photons_fit", "converged"});
    std::vector<double> dx, dy;
    for (int i = 0; i < n_seeds; ++i) {
        Rng rng(cfg.seed, "precision.frame." + std::to_string(i));
        const Frame frame = render_frame({{tx, ty, photons}}, cfg.camera, frame_px, frame_px, rng);
        const Localization loc = localize_2d(frame, {0, 0, frame_px, frame_px});
        errs.row({static_cast<double>(i), loc.x_nm - tx, loc.y_nm - ty, loc.photons,
                  loc.converged ? 1.0 : 0.0});
        if (loc.converged) {
            dx.push_back(loc.x_nm - tx);
            dy.push_back(loc.y_nm - ty);
        }
    }
    errs.close();

    const double precision_x = standard_deviation(dx);
    const double precision_y = standard_deviation(dy);
    const double bound = crlb_precision(photons, cfg.camera.background_noise_rms(),
                                        cfg.camera.psf_sigma_nm, px);
    return json{{"photons", photons},
                {"trials", n_seeds},
                {"precision_x_nm", precision_x},
                {"precision_y_nm", precision_y},
                {"bias_x_nm", mean(dx)},
                {"bias_y_nm", mean(dy)},
                {"crlb_nm", bound},
                {"ratio_x", precision_x / bound},
                {"ratio_y", precision_y / bound}};
}

}  // namespace

ScenarioResult run_scenario(const json& document, const RunOptions& options) {
    json effective = document;
    if (options.seed) effective["seed"] = *options.seed;
    const ScenarioConfig cfg = parse_config(effective);

    std::filesystem::path out_dir;
    if (options.output_dir)
        out_dir = *options.output_dir;
    else if (!cfg.output_dir.empty())
        out_dir = cfg.output_dir;
    else
        out_dir = default_output_root() / cfg.scenario_kind;

    Bundle bundle(out_dir, !options.no_plots);
    json summary;
    if (cfg.scenario_kind == "lateral-scan") summary = run_lateral_scan(cfg, bundle);
    else if (cfg.scenario_kind == "coarse-approach") summary = run_coarse_approach(cfg, bundle);
    else if (cfg.scenario_kind == "fine-approach-plasmon") summary = run_fine_approach(cfg, bundle);
    else if (cfg.scenario_kind == "linescan-coarse") summary = run_linescan(cfg, bundle, true);
    else if (cfg.scenario_kind == "linescan-fine") summary = run_linescan(cfg, bundle, false);
    else if (cfg.scenario_kind == "stability") summary = run_stability(cfg, bundle);
    else summary = run_localization_precision(cfg, bundle);

    summary["scenario"] = cfg.scenario_kind;
    summary["seed"] = cfg.seed;

    ScenarioResult result;
    bundle.write_summary_and_manifest(effective, summary, cfg.seed, cfg.scenario_kind, result);
    return result;
}

ScenarioResult reproduce(const std::string& preset, const RunOptions& options) {
    return run_scenario(preset_config(preset), options);
}

// ---------------------------------------------------------------------------
// Re-analysis of saved or external files.

namespace {

json sidecar_for(const std::filesystem::path& file) {
    std::filesystem::path sidecar = file;
    sidecar.replace_extension(".json");
    if (!std::filesystem::exists(sidecar)) return json::object();
    std::ifstream in(sidecar);
    json j;
    in >> j;
    return j;
}

}  // namespace

json analyze(const std::string& kind, const std::vector<std::string>& files,
             const json& parameters, const std::optional<std::string>& out_dir) {
    if (files.empty()) throw ConfigError("analyze: no input files");
    json report = {{"analysis", kind}, {"results", json::array()}};

    for (const std::string& file : files) {
        json entry = {{"file", file}};
        if (kind == "localize") {
            const json sidecar = sidecar_for(file);
            CameraModel cam;
            cam.pixel_size_nm = number_or(parameters, "pixel_size_nm",
                                          number_or(sidecar, "pixel_size_nm", cam.pixel_size_nm));
            cam.psf_sigma_nm = number_or(parameters, "psf_sigma_nm",
                                         number_or(sidecar, "psf_sigma_nm", cam.psf_sigma_nm));
            const Frame frame = read_pgm16(file, cam, number_or(sidecar, "origin_x_nm", 0.0),
                                           number_or(sidecar, "origin_y_nm", 0.0));
            const Localization loc = localize_2d(frame, {0, 0, frame.width, frame.height});
            if (!loc.converged) throw FitError("localize: fit did not converge", loc.fit_residual);
            entry["x_nm"] = loc.x_nm;
            entry["y_nm"] = loc.y_nm;
            entry["sigma_x_nm"] = loc.sigma_x_nm;
            entry["sigma_y_nm"] = loc.sigma_y_nm;
            entry["photons"] = loc.photons;
            entry["background"] = loc.background;
        } else if (kind == "trajectory") {
            const CsvTable table = CsvTable::read(file);
            const auto xs = table.column("x_nm");
            const auto ys = table.column("y_nm");
            std::vector<std::pair<double, double>> pts;
            for (std::size_t i = 0; i < xs.size(); ++i) pts.emplace_back(xs[i], ys[i]);
            const TrajectoryStats st = analyze_trajectory(pts);
            entry["slope"] = st.slope;
            entry["tilt_deg"] = st.tilt_deg;
            entry["step_mean_nm"] = st.step_mean_nm;
            entry["step_std_nm"] = st.step_std_nm;
            entry["jitter_nm"] = st.jitter_nm;
        } else if (kind == "fsr-gap") {
            const Spectrum s = Spectrum::read_csv(file);
            const double prominence = number_or(parameters, "min_prominence", 0.1);
            const FringeExtrema extrema = find_fringe_extrema(s, prominence);
            entry["maxima_count"] = extrema.maxima_nm.size();
            entry["maxima_nm"] = extrema.maxima_nm;
            if (!extrema.sufficient) {
                entry["sufficient"] = false;
            } else {
                double sum = 0.0;
                for (std::size_t i = 0; i + 1 < extrema.maxima_nm.size(); ++i)
                    sum += gap_from_fsr(extrema.maxima_nm[i], extrema.maxima_nm[i + 1]);
                entry["sufficient"] = true;
                entry["gap_nm"] = sum / static_cast<double>(extrema.maxima_nm.size() - 1);
                entry["single_fsr_unconfirmed"] = extrema.maxima_nm.size() == 2;
            }
        } else if (kind == "fringe-count") {
            const CsvTable table = CsvTable::read(file);
            const auto trace = table.column("intensity");
            const double wavelength = number_or(parameters, "wavelength_nm", 532.0);
            const DisplacementEstimate d = displacement_from_fringes(trace, wavelength);
            entry["sufficient"] = d.sufficient;
            entry["full_oscillations"] = d.full_oscillations;
            entry["displacement_nm"] = d.displacement_nm;
        } else if (kind == "resonance-fit") {
            const Spectrum s = Spectrum::read_csv(file);
            NanoAntennaModel antenna;
            const Materials mats;
            const double fit_max = number_or(parameters, "fit_max_wavelength_nm", 590.0);
            const ResonanceFit fit = fit_resonance(s, antenna, mats, fit_max);
            if (!fit.converged)
                throw FitError("resonance-fit: did not converge", fit.residual_norm);
            entry["lambda_res_nm"] = fit.lambda_res_nm;
            entry["residual_norm"] = fit.residual_norm;
        } else if (kind == "lifetime-fit") {
            const CsvTable table = CsvTable::read(file);
            const auto t = table.column("t_ns");
            const auto c = table.column("counts");
            const json sidecar = sidecar_for(file);
            DecayHistogram hist;
            hist.bin_width_ns = number_or(parameters, "bin_width_ns",
                                          number_or(sidecar, "bin_width_ns",
                                                    t.size() > 1 ? t[1] - t[0] : 1.0));
            hist.irf_sigma_ns =
                number_or(parameters, "irf_sigma_ns", number_or(sidecar, "irf_sigma_ns", 0.0));
            hist.period_ns = number_or(parameters, "period_ns",
                                       number_or(sidecar, "period_ns",
                                                 t.empty() ? 0.0 : t.back() + 0.5 * hist.bin_width_ns));
            for (double v : c) {
                if (v < 0.0) throw ParseError("negative counts in histogram", 1, 1);
                hist.counts.push_back(static_cast<std::uint64_t>(std::llround(v)));
                hist.total_photons += hist.counts.back();
            }
            std::size_t peak_bin = 0;
            for (std::size_t b = 0; b < hist.counts.size(); ++b)
                if (hist.counts[b] > hist.counts[peak_bin]) peak_bin = b;
            const double t_min = number_or(parameters, "t_min_ns", hist.bin_center_ns(peak_bin));
            const double t_max = number_or(parameters, "t_max_ns", hist.period_ns - 5.0);
            const BiexpFit fit = fit_biexponential(hist, t_min, t_max);
            if (!fit.converged) throw FitError("lifetime-fit: did not converge", fit.deviance);
            entry["tau_fast_ns"] = fit.tau_fast_ns;
            entry["tau_slow_ns"] = fit.tau_slow_ns;
            entry["tau_fast_err_ns"] = fit.tau_fast_err_ns;
            entry["tau_slow_err_ns"] = fit.tau_slow_err_ns;
            entry["irf_limited"] = fit.irf_limited;
            entry["single_exponential_fallback"] = fit.single_exponential_fallback;
        } else if (kind == "poisson-test") {
            const CsvTable table = CsvTable::read(file);
            const auto c = table.column("counts");
            std::vector<std::uint64_t> trace;
            for (double v : c) trace.push_back(static_cast<std::uint64_t>(std::llround(v)));
            const PoissonTestResult r = poisson_goodness(trace);
            entry["mean"] = r.mean;
            entry["fano"] = r.fano;
            entry["chi2"] = r.chi2;
            entry["p_value"] = r.p_value;
        } else {
            throw ConfigError("unknown analysis kind '" + kind +
                              "' (known: localize, trajectory, fsr-gap, fringe-count, "
                              "resonance-fit, lifetime-fit, poisson-test)");
        }
        report["results"].push_back(entry);
    }

    if (out_dir) {
        std::filesystem::create_directories(*out_dir);
        const auto path = std::filesystem::path(*out_dir) / (kind + "_report.json");
        std::ofstream out(path, std::ios::binary);
        out << report.dump(2) << "\n";
    }
    return report;
}

}  // namespace proscan
