#include "fedmarl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include "fedmarl/baselines.hpp"

namespace fedmarl::harness {

namespace fs = std::filesystem;

RunResult run_regime(const ExperimentConfig& config, std::uint64_t seed, Regime regime) {
    switch (regime) {
        case Regime::kFederated: return fed::run_federated(config, seed);
        case Regime::kDistributed: return baselines::run_distributed(config, seed);
        case Regime::kRandom: return baselines::run_random_policy(config, seed);
    }
    throw std::logic_error("run_regime: unknown regime");
}

fs::path checkpoint_path(const fs::path& out_dir, std::uint64_t seed) {
    return out_dir / ("checkpoint_fl_seed" + std::to_string(seed) + ".bin");
}

fs::path run_experiment(const ExperimentConfig& config, const fs::path& out_dir,
                        const std::string& file_name) {
    config.validate();
    fs::create_directories(out_dir);
    const fs::path target = out_dir / file_name;
    const fs::path partial = out_dir / (file_name + ".partial");
    try {
        std::ofstream out(partial, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + partial.string());
        write_metrics_header(out);
        for (auto seed : config.seeds) {
            for (auto regime : config.regimes) {
                const auto run = run_regime(config, seed, regime);
                for (const auto& r : run.records) write_metrics_row(out, r);
                if (config.write_checkpoints && run.final_model) {
                    fed::save_checkpoint(checkpoint_path(out_dir, seed), *run.final_model);
                }
            }
        }
        out.close();
        if (!out) throw std::runtime_error("write failed for " + partial.string());
        fs::rename(partial, target);
    } catch (...) {
        std::error_code ignored;
        fs::remove(partial, ignored);
        throw;
    }
    return target;
}

std::vector<fs::path> sweep(const ExperimentConfig& config, const std::string& key,
                            const std::vector<std::string>& values, const fs::path& out_dir) {
    if (values.empty()) throw std::invalid_argument("sweep: no values given");
    std::vector<ExperimentConfig> variants;
    for (const auto& v : values) {
        ExperimentConfig c = config;
        c.set(key, v);
        c.validate();
        variants.push_back(std::move(c));
    }
    std::vector<fs::path> paths;
    for (std::size_t i = 0; i < values.size(); ++i) {
        paths.push_back(run_experiment(variants[i], out_dir,
                                       "metrics_" + key + "_" + values[i] + ".csv"));
    }
    return paths;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile: no data");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double final_window_mean(const std::vector<MetricsRecord>& seed_records) {
    if (seed_records.empty()) throw std::invalid_argument("final_window_mean: no rows");
    std::vector<const MetricsRecord*> rows;
    for (const auto& r : seed_records) rows.push_back(&r);
    std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->round < b->round; });
    const auto window = static_cast<std::size_t>(
        std::max(1.0, std::ceil(0.2 * static_cast<double>(rows.size()))));
    double sum = 0.0;
    for (std::size_t k = rows.size() - window; k < rows.size(); ++k) sum += rows[k]->joint_reward;
    return sum / static_cast<double>(window);
}

std::vector<SummaryRow> summarize_records(const std::string& source,
                                          const std::vector<MetricsRecord>& records) {
    // regime -> seed -> rows; std::map keeps the output order stable.
    std::map<std::string, std::map<std::uint64_t, std::vector<MetricsRecord>>> groups;
    for (const auto& r : records) groups[r.regime][r.seed].push_back(r);

    std::vector<SummaryRow> out;
    for (const auto& [regime, by_seed] : groups) {
        SummaryRow row;
        row.source = source;
        row.regime = regime;
        row.seeds = by_seed.size();
        std::vector<double> finals, bytes;
        for (const auto& [seed, rows] : by_seed) {
            finals.push_back(final_window_mean(rows));
            double total = 0.0;
            for (const auto& r : rows) {
                total += static_cast<double>(r.bytes_uplinked);
                row.participation = std::max(row.participation, r.selected_agent_ids.size());
            }
            bytes.push_back(total);
        }
        row.median_final_reward = quantile(finals, 0.5);
        row.iqr_final_reward = quantile(finals, 0.75) - quantile(finals, 0.25);
        row.median_uplink_bytes = quantile(bytes, 0.5);
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<SummaryRow> summarize(const std::vector<fs::path>& csv_paths) {
    if (csv_paths.empty()) throw std::invalid_argument("summarize: no csv files given");
    std::vector<SummaryRow> out;
    for (const auto& path : csv_paths) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read " + path.string());
        std::vector<MetricsRecord> records;
        try {
            records = read_metrics(in);
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ": " + e.what());
        }
        if (records.empty()) throw std::runtime_error(path.string() + ": no data rows");
        auto rows = summarize_records(path.filename().string(), records);
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << "source,regime,k,seeds,median_final_joint_reward,iqr_final_joint_reward,"
           "median_total_bytes_uplinked\n";
    for (const auto& r : rows) {
        out << r.source << ',' << r.regime << ',' << r.participation << ',' << r.seeds << ','
            << format_real(r.median_final_reward) << ',' << format_real(r.iqr_final_reward) << ','
            << format_real(r.median_uplink_bytes) << '\n';
    }
}

}  // namespace fedmarl::harness
