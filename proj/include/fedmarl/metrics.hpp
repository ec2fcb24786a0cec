#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace fedmarl {

/// One CSV row: the state of one (seed, regime) run after a round.
struct MetricsRecord {
    std::uint64_t seed = 0;
    std::string regime;
    std::size_t round = 0;
    double joint_reward = 0.0;
    double per_agent_mean_reward = 0.0;
    std::vector<std::size_t> selected_agent_ids;
    std::uint64_t bytes_uplinked = 0;
    double wall_clock_ms = 0.0;

    bool operator==(const MetricsRecord&) const = default;
};

inline constexpr const char* kMetricsHeader =
    "seed,regime,round,joint_reward,per_agent_mean_reward,selected_agent_ids,"
    "bytes_uplinked,wall_clock_ms";

/// Nine significant digits, "%.9g".
std::string format_real(double value);

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const MetricsRecord& record);

/// Parses a metrics CSV, header included. Throws std::runtime_error naming
/// the 1-based line number of the first malformed row.
std::vector<MetricsRecord> read_metrics(std::istream& in);

}  // namespace fedmarl
