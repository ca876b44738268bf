#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "infodyn/errors.hpp"
#include "infodyn/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void print_report(const infodyn::cli::ValidationReport& report) {
    for (const auto& v : report.violations) {
        std::cerr << "violation: " << v.field << ": " << v.message << "\n";
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"infodyn: signal-detection dynamics experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    unsigned threads = 0;

    CLI::App* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "path to the config file")->required();
    run->add_option("--seed", seed, "override the config's master seed");
    run->add_option("--out", out_dir, "override the output directory");
    run->add_option("--threads", threads,
                    "worker threads (0 = auto; never affects results)");

    CLI::App* validate = app.add_subcommand("validate", "check a config without running");
    validate->add_option("config", config_path, "path to the config file")->required();

    CLI::App* list = app.add_subcommand("list-kinds", "list experiment kinds");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        for (const auto& kind : infodyn::cli::experiment_kinds()) {
            std::cout << kind << "\n";
        }
        return 0;
    }

    if (validate->parsed()) {
        infodyn::cli::ValidationReport report =
            infodyn::cli::validate_config_file(config_path);
        if (!report.ok()) {
            print_report(report);
            return kExitConfig;
        }
        std::cout << "ok\n";
        return 0;
    }

    try {
        infodyn::cli::RunOptions options;
        options.seed_override = seed;
        if (out_dir) options.out_dir_override = *out_dir;
        options.threads = threads;
        infodyn::cli::RunResult result =
            infodyn::cli::run_config_file(config_path, options);
        std::cout << result.kind << " seed=" << result.seed << "\n"
                  << "csv: " << result.csv_path.string() << "\n"
                  << "summary: " << result.summary_path.string() << "\n";
        return 0;
    } catch (const infodyn::cli::ConfigError& e) {
        print_report(e.report());
        return kExitConfig;
    } catch (const infodyn::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const infodyn::Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
}
