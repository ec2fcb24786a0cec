#pragma once

#include <cstdint>

#include "fedmarl/config.hpp"
#include "fedmarl/experiment.hpp"

namespace fedmarl::baselines {

/// Same initial broadcast as the federated run, then every agent trains on
/// its own with no further communication.
RunResult run_distributed(const ExperimentConfig& config, std::uint64_t seed);

/// Uniform action sampling and no learning; the floor reference.
RunResult run_random_policy(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace fedmarl::baselines
