#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "flexboc/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"FlexBOC two-way time transfer simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out";
    std::int64_t seed_override = -1;
    int threads = 1;

    auto* run = app.add_subcommand("run", "Run a scenario and write artifacts");
    run->add_option("scenario", scenario_path, "Bundled scenario name or file path")
        ->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--seed", seed_override, "Override the scenario seed");
    run->add_option("--threads", threads, "Worker threads");

    auto* validate = app.add_subcommand("validate", "Check a scenario without running");
    validate->add_option("scenario", scenario_path, "Bundled scenario name or file path")
        ->required();

    app.add_subcommand("list-scenarios", "List bundled scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("list-scenarios")) {
            for (const auto& name : flexboc::bundled_scenario_names())
                std::printf("%s\n", name.c_str());
            return 0;
        }

        flexboc::Scenario s;
        try {
            s = flexboc::load_scenario(scenario_path);
        } catch (const flexboc::ConfigError& e) {
            std::fprintf(stderr, "validation error: %s\n", e.what());
            return 1;
        }

        if (app.got_subcommand("validate")) {
            const auto diags = flexboc::validate_scenario(s);
            for (const auto& d : diags) std::fprintf(stderr, "%s\n", d.c_str());
            return diags.empty() ? 0 : 1;
        }

        if (seed_override >= 0) s.seed = static_cast<std::uint64_t>(seed_override);
        const auto diags = flexboc::validate_scenario(s);
        if (!diags.empty()) {
            for (const auto& d : diags) std::fprintf(stderr, "%s\n", d.c_str());
            return 1;
        }
        const auto report = flexboc::run_scenario(s, out_dir, threads);
        std::printf("%s", report.summary.c_str());
        for (const auto& a : report.artifacts)
            std::printf("wrote %s/%s\n", out_dir.c_str(), a.c_str());
        return 0;
    } catch (const flexboc::ConfigError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
