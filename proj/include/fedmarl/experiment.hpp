#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fedmarl/config.hpp"
#include "fedmarl/fed_core.hpp"
#include "fedmarl/metrics.hpp"
#include "fedmarl/rl_core.hpp"

namespace fedmarl {

/// Topology, gains and initial policy for `seed`; identical for every regime.
rl::AgentSystem make_system(const ExperimentConfig& config, std::uint64_t seed);
policy::ParamVector initial_model(const ExperimentConfig& config, std::uint64_t seed);

struct RunResult {
    std::vector<MetricsRecord> records;  // rounds 0 .. rounds-1
    std::optional<fed::GlobalModel> final_model;
};

}  // namespace fedmarl

namespace fedmarl::fed {

/// Round 0 is the initial broadcast; each later row is one federated round
/// with random or DQN client selection.
RunResult run_federated(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace fedmarl::fed
