#include "kviff/cli.hpp"

#include <cstdio>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kviff/harness.hpp"
#include "kviff/models.hpp"

namespace kviff::cli {

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            std::optional<std::uint64_t> seed, std::optional<std::string> out_dir, std::ostream& out,
            std::ostream& err) {
    harness::ExperimentConfig config;
    try {
        std::vector<std::string> all = overrides;
        if (seed) all.push_back("base_seed=" + std::to_string(*seed));
        config = harness::load_config(config_path, all);
        if (out_dir) {
            config.output_dir = *out_dir;
            config.resolved["output_dir"] = *out_dir;
        }
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        const auto result = harness::run_experiment(config);
        const auto files = harness::write_outputs(config, result);
        out << "scenario " << config.scenario << ", N=" << config.num_particles << ", repeats=" << config.repeats
            << ", base_seed=" << config.base_seed << '\n';
        out << std::left << std::setw(16) << "method" << std::setw(18) << "median_aggregate" << std::setw(22)
            << "mean_of_median_series" << "median_wall_s" << '\n';
        for (const auto& s : result.summary) {
            char line[160];
            std::snprintf(line, sizeof line, "%-16s%-18.6g%-22.6g%.3f\n", s.method.c_str(), s.median_aggregate,
                          s.mean_of_median_series, s.median_wall_time);
            out << line;
        }
        for (const auto& f : files) out << "wrote " << f.string() << '\n';
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

int cmd_validate(std::ostream& out, std::ostream& err, const validation::ValidationOptions& options) {
    std::vector<validation::CheckResult> checks;
    try {
        checks = validation::run_validation(options);
    } catch (const std::exception& e) {
        err << "validation aborted: " << e.what() << '\n';
        return kRuntimeError;
    }
    bool all = true;
    for (const auto& c : checks) {
        out << (c.passed ? "PASS " : "FAIL ") << c.name << "  " << c.detail << '\n';
        if (!c.passed) {
            err << "check failed: " << c.name << '\n';
            all = false;
        }
    }
    return all ? kOk : kConfigError;
}

int cmd_scenarios(std::ostream& out) {
    out << "name\tdim_x\tdim_y\tK\tdt\tmismatch\n";
    for (const auto& name : models::scenario_names()) {
        const auto s = models::build_scenario(name);
        out << s.name << '\t' << s.model.dim_x << '\t' << s.model.dim_y << '\t' << s.horizon << '\t' << s.dt << '\t'
            << s.description << '\n';
    }
    return kOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"kviff: kernel variational inference flow filter laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    auto* run = app.add_subcommand("run", "run an experiment described by a JSON config");
    run->add_option("--config", config_path, "experiment config (JSON)")->required();
    run->add_option("--set", overrides, "dotted-path override key=value (repeatable)");
    run->add_option("--seed", seed, "base seed override");
    run->add_option("--out", out_dir, "output directory override");

    auto* validate = app.add_subcommand("validate", "run the oracle certification checks");
    auto* scenarios = app.add_subcommand("scenarios", "list the built-in scenarios (TSV)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return kConfigError;
    }

    if (run->parsed()) return cmd_run(config_path, overrides, seed, out_dir, out, err);
    if (validate->parsed()) return cmd_validate(out, err);
    if (scenarios->parsed()) return cmd_scenarios(out);
    return kConfigError;
}

}  // namespace kviff::cli
