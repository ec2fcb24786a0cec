#include "fedmarl/metrics.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fedmarl {

std::string format_real(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

void write_metrics_header(std::ostream& out) { out << kMetricsHeader << '\n'; }

void write_metrics_row(std::ostream& out, const MetricsRecord& r) {
    out << r.seed << ',' << r.regime << ',' << r.round << ',' << format_real(r.joint_reward)
        << ',' << format_real(r.per_agent_mean_reward) << ',';
    for (std::size_t k = 0; k < r.selected_agent_ids.size(); ++k) {
        if (k) out << ';';
        out << r.selected_agent_ids[k];
    }
    out << ',' << r.bytes_uplinked << ',' << format_real(r.wall_clock_ms) << '\n';
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

template <typename T>
T parse_uint(const std::string& s) {
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument("not an unsigned integer: '" + s + "'");
    }
    return value;
}

double parse_real(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

}  // namespace

std::vector<MetricsRecord> read_metrics(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kMetricsHeader) {
        throw std::runtime_error("metrics csv line 1: missing or unexpected header");
    }
    std::vector<MetricsRecord> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto f = split(line, ',');
            if (f.size() != 8) throw std::invalid_argument("expected 8 fields");
            MetricsRecord r;
            r.seed = parse_uint<std::uint64_t>(f[0]);
            r.regime = f[1];
            if (r.regime.empty()) throw std::invalid_argument("empty regime");
            r.round = parse_uint<std::size_t>(f[2]);
            r.joint_reward = parse_real(f[3]);
            if (!std::isfinite(r.joint_reward)) throw std::invalid_argument("joint_reward not finite");
            r.per_agent_mean_reward = parse_real(f[4]);
            if (!f[5].empty()) {
                for (const auto& id : split(f[5], ';')) {
                    r.selected_agent_ids.push_back(parse_uint<std::size_t>(id));
                }
            }
            r.bytes_uplinked = parse_uint<std::uint64_t>(f[6]);
            r.wall_clock_ms = parse_real(f[7]);
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("metrics csv line " + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    return rows;
}

}  // namespace fedmarl
