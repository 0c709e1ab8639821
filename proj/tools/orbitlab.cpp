// orbitlab: run, validate and list experiment configs.

#include <iostream>

#include <CLI11.hpp>

#include "orbitlab/harness/run.hpp"

using namespace orbitlab;

int main(int argc, char** argv) {
    CLI::App app{"Coupling and conditioned limit theorem experiments on shift spaces"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
    run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run_cmd->add_option("--seed", seed, "Override the config seed");
    run_cmd->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);

    auto* validate_cmd = app.add_subcommand("validate", "Check a config without running it");
    validate_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();

    app.add_subcommand("catalogs", "List test functions, observables and system presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("catalogs")) {
            std::cout << harness::list_catalogs().dump(2) << "\n";
            return 0;
        }
        const auto doc = harness::read_json_file(config_path);
        if (app.got_subcommand("validate")) {
            const auto diags = harness::validate(doc);
            for (const auto& d : diags) std::cout << d << "\n";
            if (diags.empty()) std::cout << "ok\n";
            return diags.empty() ? 0 : 1;
        }
        auto config = harness::parse_config(doc);
        if (seed) config.seed = *seed;
        if (workers) config.workers = *workers;
        const auto record = harness::run(config);
        if (config.csv_path.empty()) std::cout << harness::csv_text(record.rows);
        for (const auto& c : record.checks)
            std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << " observed=" << c.observed
                      << " threshold=" << c.threshold << "\n";
        for (const auto& note : record.notes) std::cerr << "note: " << note << "\n";
        return record.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
