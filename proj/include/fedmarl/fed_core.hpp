#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fedmarl/metrics.hpp"
#include "fedmarl/policy_net.hpp"
#include "fedmarl/rl_core.hpp"
#include "fedmarl/rng.hpp"

namespace fedmarl::fed {

struct RoundConfig {
    /// K, the number of agents broadcast to and trained each round.
    std::size_t participation = 8;
    /// 0 disables quantization; otherwise 2..16.
    unsigned quantization_bits = 0;
    /// Joint-reward weights w; normalized to sum to one by validate().
    std::vector<double> agent_weights;
    /// Probability that a selected agent fails to report its update.
    double p_drop = 0.0;

    void validate(std::size_t n_agents);
};

struct GlobalModel {
    policy::ParamVector params;
    std::size_t round = 0;
};

/// Sample-count weighted coordinatewise mean. The result does not depend on
/// the order of `updates`, and every coordinate stays within the inputs' range.
policy::ParamVector aggregate(std::span<const rl::LocalUpdate> updates);

/// Unbiased stochastic rounding onto 2^bits levels spanning [min v, max v].
std::vector<double> quantize(std::span<const double> values, unsigned bits, Rng& rng);

/// Quantized values are plain reals, so dequantization is the identity.
inline std::vector<double> dequantize(std::vector<double> values) { return values; }

/// Level spacing quantize() uses for `values` at `bits`; zero for a constant vector.
double quantization_step(std::span<const double> values, unsigned bits);

/// Wire size of one uploaded parameter vector: 8 bytes per value when
/// unquantized, otherwise the packed level indices plus the (lo, hi) pair.
std::uint64_t payload_bytes(std::size_t n_params, unsigned bits);

double joint_reward(std::span<const double> rewards, std::span<const double> weights);

/// Checkpoint file: u64 round, u64 parameter count, then the parameters, all
/// little-endian.
void save_checkpoint(const std::filesystem::path& path, const GlobalModel& model);
GlobalModel load_checkpoint(const std::filesystem::path& path);

struct EvalSettings {
    std::size_t steps = 50;
    std::size_t episodes = 1;
    bool record_timing = false;
};

/// Seed of the evaluation episode(s) scored after `round`.
std::uint64_t eval_seed(std::uint64_t run_seed, std::size_t round);

/// The central server. It holds the only mutable global model and drives the
/// broadcast / local training / collect / aggregate cycle over an AgentSystem.
class FederatedServer {
public:
    FederatedServer(rl::AgentSystem& system, GlobalModel initial, RoundConfig config,
                    rl::TrainingParams training, EvalSettings eval, std::uint64_t seed);

    const GlobalModel& global() const { return global_; }
    /// Global parameters before the most recent round.
    const policy::ParamVector& previous_global() const { return previous_; }
    /// Last parameters received from each agent; the initial model for agents
    /// that never reported.
    std::span<const policy::ParamVector> last_uploads() const { return uploads_; }
    const RoundConfig& config() const { return config_; }

    /// Record for the initial broadcast (round 0).
    MetricsRecord initial_record() const;

    /// One round with the given participants (exactly K distinct ids).
    MetricsRecord run_round(std::span<const std::size_t> selected);

    rl::EvalResult evaluate_global(const policy::ParamVector& params,
                                   std::size_t round) const;

private:
    rl::AgentSystem& system_;
    GlobalModel global_;
    policy::ParamVector previous_;
    std::vector<policy::ParamVector> uploads_;
    RoundConfig config_;
    rl::TrainingParams training_;
    EvalSettings eval_;
    std::uint64_t seed_;
};

}  // namespace fedmarl::fed
