#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fedmarl/config.hpp"
#include "fedmarl/experiment.hpp"

namespace fedmarl::harness {

RunResult run_regime(const ExperimentConfig& config, std::uint64_t seed, Regime regime);

/// Runs every (seed, regime) pair and writes `out_dir/file_name`. The file is
/// written under a temporary name and renamed on success; nothing is left
/// behind on failure. Checkpoints of federated runs go next to it when enabled.
std::filesystem::path run_experiment(const ExperimentConfig& config,
                                     const std::filesystem::path& out_dir,
                                     const std::string& file_name = "metrics.csv");

/// One run_experiment per value of `key`, each into metrics_<key>_<value>.csv.
std::vector<std::filesystem::path> sweep(const ExperimentConfig& config, const std::string& key,
                                         const std::vector<std::string>& values,
                                         const std::filesystem::path& out_dir);

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::uint64_t seed);

struct SummaryRow {
    std::string source;
    std::string regime;
    std::size_t participation = 0;     // largest selected set seen; 0 if none
    std::size_t seeds = 0;
    double median_final_reward = 0.0;  // median over seeds of final-window means
    double iqr_final_reward = 0.0;
    double median_uplink_bytes = 0.0;  // median over seeds of total bytes
};

/// Final window: the last ceil(20%) of each seed's rounds.
std::vector<SummaryRow> summarize(const std::vector<std::filesystem::path>& csv_paths);
std::vector<SummaryRow> summarize_records(const std::string& source,
                                          const std::vector<MetricsRecord>& records);

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Linear-interpolation quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

double final_window_mean(const std::vector<MetricsRecord>& seed_records);

}  // namespace fedmarl::harness
