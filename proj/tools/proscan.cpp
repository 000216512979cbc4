#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "proscan/errors.hpp"
#include "proscan/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitFit = 4;

void print_summary(const nlohmann::json& summary) {
    std::cout << summary.dump(2) << "\n";
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const proscan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const proscan::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const proscan::FitError& e) {
        std::cerr << "fit failure: " << e.what() << " (residual " << e.residual << ")\n";
        return kExitFit;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic digital twin of a press-and-roll near-field positioning device"};
    app.require_subcommand(1);

    // run
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    bool no_plots = false;
    auto* run_cmd = app.add_subcommand("run", "run a scenario from a JSON config");
    run_cmd->add_option("--config", config_path, "scenario config file")->required();
    std::uint64_t seed_value = 0;
    auto* seed_opt = run_cmd->add_option("--seed", seed_value, "override the config seed");
    std::string out_value;
    auto* out_opt = run_cmd->add_option("--out", out_value, "output directory");
    run_cmd->add_flag("--no-plots", no_plots, "skip SVG plot generation");

    // reproduce
    std::string preset_name;
    std::string rep_out;
    bool rep_no_plots = false;
    auto* rep_cmd = app.add_subcommand("reproduce", "run a bundled preset scenario");
    rep_cmd->add_option("preset", preset_name, "preset name (see list-presets)")->required();
    auto* rep_out_opt = rep_cmd->add_option("--out", rep_out, "output directory");
    rep_cmd->add_flag("--no-plots", rep_no_plots, "skip SVG plot generation");

    // analyze
    std::string analysis_kind;
    std::vector<std::string> analysis_files;
    std::string analysis_out;
    std::vector<std::string> analysis_params;
    auto* an_cmd = app.add_subcommand("analyze", "re-run an analysis on saved or external files");
    an_cmd->add_option("kind", analysis_kind,
                       "localize | trajectory | fsr-gap | fringe-count | resonance-fit | "
                       "lifetime-fit | poisson-test")
        ->required();
    an_cmd->add_option("files", analysis_files, "input files")->required()->expected(-1);
    auto* an_out_opt = an_cmd->add_option("--out", analysis_out, "directory for the report");
    an_cmd->add_option("--param", analysis_params, "analysis parameter as name=value (repeatable)");

    // list-presets
    auto* list_cmd = app.add_subcommand("list-presets", "list bundled scenario presets");

    CLI11_PARSE(app, argc, argv);

    if (list_cmd->parsed()) {
        for (const std::string& name : proscan::preset_names())
            std::printf("%-24s %s\n", name.c_str(), proscan::preset_description(name).c_str());
        return kExitOk;
    }

    if (run_cmd->parsed()) {
        return guarded([&] {
            std::ifstream in(config_path);
            if (!in) throw proscan::ConfigError("cannot open config file '" + config_path + "'");
            nlohmann::json doc;
            in >> doc;
            proscan::RunOptions options;
            if (*seed_opt) options.seed = seed_value;
            if (*out_opt) options.output_dir = out_value;
            options.no_plots = no_plots;
            const auto result = proscan::run_scenario(doc, options);
            print_summary(result.summary);
            std::cout << "bundle: " << result.output_dir.string() << " (hash " << result.bundle_hash
                      << ")\n";
            return kExitOk;
        });
    }

    if (rep_cmd->parsed()) {
        return guarded([&] {
            proscan::RunOptions options;
            if (*rep_out_opt) options.output_dir = rep_out;
            options.no_plots = rep_no_plots;
            const auto result = proscan::reproduce(preset_name, options);
            print_summary(result.summary);
            std::cout << "bundle: " << result.output_dir.string() << " (hash " << result.bundle_hash
                      << ")\n";
            return kExitOk;
        });
    }

    return guarded([&] {
        nlohmann::json params = nlohmann::json::object();
        for (const std::string& p : analysis_params) {
            const auto eq = p.find('=');
            if (eq == std::string::npos)
                throw proscan::ConfigError("--param expects name=value, got '" + p + "'");
            params[p.substr(0, eq)] = std::stod(p.substr(eq + 1));
        }
        std::optional<std::string> out;
        if (*an_out_opt) out = analysis_out;
        const auto report = proscan::analyze(analysis_kind, analysis_files, params, out);
        print_summary(report);
        return kExitOk;
    });
}
