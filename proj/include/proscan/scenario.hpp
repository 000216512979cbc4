#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "proscan/emitter.hpp"
#include "proscan/imaging.hpp"
#include "proscan/interferometry.hpp"
#include "proscan/materials.hpp"
#include "proscan/mechanics.hpp"
#include "proscan/plasmonics.hpp"

namespace proscan {

inline constexpr const char* kVersion = "0.1.0";

/// One protocol step: a voltage command applied to one actuator axis.
struct ProtocolCommand {
    std::string op;  // "lateral" or "axial"
    Axis axis = Axis::x;
    double volts = 0.0;
    int repeat = 1;
};

/// Parsed and validated scenario description. `raw` keeps the exact document
/// for hashing and the manifest.
struct ScenarioConfig {
    std::string scenario_kind;
    std::uint64_t seed = 0;
    std::string output_dir;
    nlohmann::json raw;

    PiezoAxisModel lateral_piezo;
    AxialTransferModel axial;
    NanoAntennaModel antenna;
    QuantumEmitterModel emitter;
    CameraModel camera;
    double glass_index = 1.52;
    std::optional<std::string> gold_table_csv;

    double grid_min_nm = 450.0;
    double grid_max_nm = 750.0;
    std::size_t grid_points = 601;
    double spectrum_noise_sigma = 0.0;
    std::string envelope = "flat";

    std::vector<ProtocolCommand> protocol;
    nlohmann::json extras;  // scenario-specific section

    Materials make_materials() const;
    std::vector<double> make_grid() const;
};

/// Validates the JSON document against the per-kind section requirements.
/// Throws ConfigError naming the missing or malformed field.
ScenarioConfig parse_config(const nlohmann::json& document);

std::vector<std::string> preset_names();
nlohmann::json preset_config(const std::string& name);  // ConfigError if unknown
std::string preset_description(const std::string& name);

struct RunOptions {
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    bool no_plots = false;
};

struct ScenarioResult {
    nlohmann::json summary;
    std::filesystem::path output_dir;
    std::string config_hash;
    std::string bundle_hash;
};

/// Executes the scenario: protocol -> physics -> detectors -> analysis, and
/// writes CSVs, optional SVG plots, summary.json and manifest.json.
ScenarioResult run_scenario(const nlohmann::json& document, const RunOptions& options = {});

/// Loads a bundled preset and runs it.
ScenarioResult reproduce(const std::string& preset, const RunOptions& options = {});

/// Re-runs one analysis on saved or external files. Kinds: localize,
/// trajectory, fsr-gap, fringe-count, resonance-fit, lifetime-fit,
/// poisson-test. Returns the report; writes <kind>_report.csv when out_dir
/// is given.
nlohmann::json analyze(const std::string& kind, const std::vector<std::string>& files,
                       const nlohmann::json& parameters = nlohmann::json::object(),
                       const std::optional<std::string>& out_dir = std::nullopt);

/// FNV-1a 64 over a file's bytes, as fixed-width hex.
std::string hash_file(const std::filesystem::path& path);

/// Default output root: PROSCAN_OUTPUT_ROOT environment variable, else "out".
std::filesystem::path default_output_root();

}  // namespace proscan
