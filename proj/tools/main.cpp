#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "semlab/errors.hpp"
#include "semlab/experiments.hpp"
#include "semlab/serialize.hpp"
#include "semlab/version.hpp"

namespace {

void run_one(const std::string& path, std::optional<std::uint64_t> seed,
             std::optional<std::string> out, bool quiet) {
    try {
        semlab::run_config_file(path, seed, out, quiet);
    } catch (const semlab::Error& e) {
        throw semlab::Error("[" + path + "] " + e.what());
    }
}

void run_pipeline(const std::string& path, bool quiet) {
    const nlohmann::json pipe = semlab::read_json_file(path);
    if (!pipe.is_object() || !pipe.contains("steps") || !pipe.at("steps").is_array())
        throw semlab::ConfigError(path + ": expected an object with a \"steps\" array");
    const std::filesystem::path dir = std::filesystem::path(path).parent_path();
    for (const auto& step : pipe.at("steps")) {
        if (!step.is_string())
            throw semlab::ConfigError(path + ": steps must be config file names");
        run_one((dir / step.get<std::string>()).string(), std::nullopt, std::nullopt,
                quiet);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic-feature lab: sparse autoencoders, embeddings, "
                 "meaning-proximity networks"};
    app.set_version_flag("--version", std::string("semlab ") + semlab::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string pipeline_path;
    std::string preset_name;
    std::string preset_out = ".";
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    bool quiet = false;
    bool run_after = false;

    CLI::App* run_cmd = app.add_subcommand("run", "Run one experiment config");
    run_cmd->add_option("-c,--config", config_path, "JSON experiment config")
        ->required()
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", seed_override, "Override the config's seed");
    run_cmd->add_option("--out", out_override, "Override the output directory");
    run_cmd->add_flag("-q,--quiet", quiet, "Suppress per-metric output");

    CLI::App* pipe_cmd =
        app.add_subcommand("pipeline", "Run every step of a pipeline.json in order");
    pipe_cmd->add_option("-c,--config", pipeline_path, "pipeline.json path")
        ->required()
        ->check(CLI::ExistingFile);
    pipe_cmd->add_flag("-q,--quiet", quiet, "Suppress per-metric output");

    CLI::App* preset_cmd =
        app.add_subcommand("preset", "Write a bundled experiment pipeline");
    preset_cmd->add_option("name", preset_name, "Preset name")->required();
    preset_cmd->add_option("--out", preset_out, "Directory for the step configs");
    preset_cmd->add_flag("--run", run_after, "Run the steps after writing them");
    preset_cmd->add_flag("-q,--quiet", quiet, "Suppress per-metric output");

    CLI::App* list_cmd = app.add_subcommand("list", "List experiment kinds and presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) {
            run_one(config_path, seed_override, out_override, quiet);
        } else if (pipe_cmd->parsed()) {
            run_pipeline(pipeline_path, quiet);
        } else if (preset_cmd->parsed()) {
            const std::vector<std::string> paths =
                semlab::write_preset(preset_name, preset_out);
            std::printf("wrote %zu step configs under %s\n", paths.size(),
                        preset_out.c_str());
            if (run_after)
                for (const std::string& p : paths)
                    run_one(p, std::nullopt, std::nullopt, quiet);
        } else if (list_cmd->parsed()) {
            std::printf("experiment kinds:\n");
            for (const std::string& k : semlab::experiment_kinds())
                std::printf("  %s\n", k.c_str());
            std::printf("presets:\n");
            for (const std::string& p : semlab::preset_names())
                std::printf("  %s\n", p.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
