// fedmarl: run, sweep and summarize federated spectrum-access experiments.
//
//   fedmarl check     --config cfg.txt
//   fedmarl run       --config cfg.txt --out results/ [--seed-override 7]
//   fedmarl sweep     --config cfg.txt --out results/ --key participation --values 2,4,8
//   fedmarl summarize results/metrics.csv [more.csv ...]

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedmarl/config.hpp"
#include "fedmarl/harness.hpp"

namespace {

fedmarl::ExperimentConfig load(const std::string& path, std::optional<std::uint64_t> seed) {
    auto cfg = path.empty() ? fedmarl::ExperimentConfig{} : fedmarl::ExperimentConfig::load(path);
    if (seed) cfg.seeds = {*seed};
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated multi-agent RL for dynamic spectrum access"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "results";
    std::optional<std::uint64_t> seed_override;
    std::string sweep_key;
    std::vector<std::string> sweep_values;
    std::vector<std::string> csv_paths;

    auto* check = app.add_subcommand("check", "Validate a config file");
    check->add_option("--config", config_path, "Config file (key = value lines)")->required();

    auto* run = app.add_subcommand("run", "Run every seed and regime of one config");
    run->add_option("--config", config_path, "Config file; defaults apply when omitted");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--seed-override", seed_override, "Run only this seed");

    auto* sweep = app.add_subcommand("sweep", "Vary one config key over listed values");
    sweep->add_option("--config", config_path, "Config file; defaults apply when omitted");
    sweep->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sweep->add_option("--seed-override", seed_override, "Run only this seed");
    sweep->add_option("--key", sweep_key, "Config key to vary")->required();
    sweep->add_option("--values", sweep_values, "Comma-separated values")
        ->required()
        ->delimiter(',');

    auto* summarize = app.add_subcommand("summarize", "Summarize metrics CSV files");
    summarize->add_option("csv", csv_paths, "Metrics CSV files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*check) {
            const auto cfg = load(config_path, std::nullopt);
            std::cout << cfg.to_text();
        } else if (*run) {
            const auto path = fedmarl::harness::run_experiment(load(config_path, seed_override), out_dir);
            std::cout << path.string() << '\n';
        } else if (*sweep) {
            const auto paths = fedmarl::harness::sweep(load(config_path, seed_override), sweep_key,
                                                       sweep_values, out_dir);
            for (const auto& p : paths) std::cout << p.string() << '\n';
        } else if (*summarize) {
            std::vector<std::filesystem::path> paths(csv_paths.begin(), csv_paths.end());
            fedmarl::harness::write_summary(std::cout, fedmarl::harness::summarize(paths));
        }
    } catch (const std::exception& e) {
        std::cerr << "fedmarl: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
