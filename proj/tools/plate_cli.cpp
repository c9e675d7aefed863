// plate: command-line front end for the experiment harness.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plate/experiment.hpp"

namespace {

using plate::json;

int report(const plate::RunResult& r) {
    if (!r.directory.empty()) std::cout << "output: " << r.directory.string() << "\n";
    if (r.status != plate::kExitOk) std::cerr << "error: " << r.message << "\n";
    std::cout << "status: " << r.status << "\n";
    return r.status;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudo-spectral solver and decay analysis for the dissipative plate equation"};
    app.require_subcommand(1);

    std::string config_path, out_dir, preset_name, key, values, dir_a, dir_b, model_name, params_text = "{}";
    std::vector<std::string> overrides;
    int jobs = 1, dim = 2;
    bool print_only = false;

    auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("--config", config_path, "Configuration file")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--override", overrides, "KEY=VALUE with a dotted key");

    auto* pre = app.add_subcommand("preset", "Run (or print) a named preset");
    pre->add_option("name", preset_name, "Preset name")->required();
    pre->add_option("--out", out_dir, "Output directory");
    pre->add_option("--override", overrides, "KEY=VALUE with a dotted key");
    pre->add_flag("--print", print_only, "Print the configuration instead of running it");

    auto* sw = app.add_subcommand("sweep", "Run one configuration for several values of a key");
    sw->add_option("--config", config_path, "Configuration file (or preset:NAME)")->required();
    sw->add_option("--out", out_dir, "Output directory")->required();
    sw->add_option("--override", overrides, "KEY=VALUE applied to every run");
    sw->add_option("--key", key, "Dotted key to vary")->required();
    sw->add_option("--values", values, "Comma-separated JSON values")->required();
    sw->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto* cmp = app.add_subcommand("compare", "Compare two run directories");
    cmp->add_option("dir_a", dir_a)->required();
    cmp->add_option("dir_b", dir_b)->required();

    auto* val = app.add_subcommand("validate-model", "Check the structural conditions of a material model");
    val->add_option("--model", model_name, "Model name")->required();
    val->add_option("--dim", dim, "Dimension");
    val->add_option("--params", params_text, "JSON object of model parameters");
    val->add_option("--config", config_path, "Take the model from a configuration file instead");

    CLI11_PARSE(app, argc, argv);

    auto load = [&](const std::string& path) -> json {
        if (path.rfind("preset:", 0) == 0) return plate::preset(path.substr(7)).to_json();
        return plate::load_json_file(path);
    };

    try {
        if (*run) return report(plate::run_from_json(load(config_path), overrides, out_dir));

        if (*pre) {
            json doc = plate::preset(preset_name).to_json();
            if (print_only) {
                for (const auto& o : overrides) plate::apply_override(doc, o);
                std::cout << plate::RunConfig::from_json(doc).to_json().dump(2) << "\n";
                return plate::kExitOk;
            }
            return report(plate::run_from_json(doc, overrides, out_dir.empty() ? "runs/" + preset_name : out_dir));
        }

        if (*sw) {
            auto entries = plate::sweep(load(config_path), overrides, key, split(values, ','), out_dir, jobs);
            int worst = plate::kExitOk;
            for (const auto& e : entries) {
                std::cout << key << "=" << e.value << " status " << e.result.status << " "
                          << e.result.directory.string() << "\n";
                if (e.result.status != plate::kExitOk) std::cerr << "  " << e.result.message << "\n";
                worst = std::max(worst, e.result.status);
            }
            return worst;
        }

        if (*cmp) {
            std::cout << plate::compare_runs(dir_a, dir_b).dump(2) << "\n";
            return plate::kExitOk;
        }

        if (*val) {
            json params = plate::parse_json_text(params_text, "--params");
            if (!config_path.empty()) {
                plate::RunConfig c = plate::RunConfig::from_json(load(config_path));
                model_name = c.model;
                dim = c.dim;
                params = c.model_params;
            }
            plate::MaterialModel model = plate::models::make(model_name, dim, params);
            plate::ValidationReport rep = plate::validate_structure(model);
            std::cout << rep.to_json().dump(2) << "\n";
            return rep.passed() ? plate::kExitOk : plate::kExitStructure;
        }
    } catch (const plate::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return plate::kExitConfig;
    } catch (const plate::StructureViolation& e) {
        std::cerr << "structural violation: " << e.what() << "\n";
        return plate::kExitStructure;
    } catch (const plate::InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return plate::kExitConfig;
    } catch (const plate::PlateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return plate::kExitAnalysis;
    }
    return plate::kExitOk;
}
