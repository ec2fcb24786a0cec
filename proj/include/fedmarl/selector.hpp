#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedmarl/policy_net.hpp"
#include "fedmarl/rng.hpp"

namespace fedmarl::selector {

/// Per-agent features built only from parameter vectors and counters:
///   [3n + 0]  ||upload_n - global||
///   [3n + 1]  cos(upload_n - global, global - previous_global), 0 if undefined
///   [3n + 2]  staleness s / (1 + s), s = rounds since agent n was last selected
/// followed by the normalized round index.
struct SelectorObservation {
    static constexpr std::size_t kFeaturesPerAgent = 3;

    std::size_t n_agents = 0;
    std::vector<double> features;
    double round_feature = 0.0;

    /// Input block the shared subnetwork sees for agent n.
    std::vector<double> block(std::size_t n) const;
};

SelectorObservation build_observation(std::span<const policy::ParamVector> uploads,
                                      const policy::ParamVector& global,
                                      const policy::ParamVector& previous_global,
                                      std::span<const std::size_t> rounds_since_selected,
                                      std::size_t round, std::size_t horizon);

/// Scores each agent with one shared two-layer ReLU subnetwork whose second
/// layer also sees the mean first-layer activation over all agents:
///   h1_n = relu(W1 x_n + b1)
///   h2_n = relu(W2 h1_n + U2 mean_m(h1_m) + b2)
///   s_n  = v . h2_n + b3
/// Permuting agents permutes the scores.
struct QNet {
    std::size_t hidden1 = 16;
    std::size_t hidden2 = 16;
    std::vector<double> params;

    static constexpr std::size_t kBlockWidth = SelectorObservation::kFeaturesPerAgent + 1;
    static std::size_t param_count(std::size_t hidden1, std::size_t hidden2);
    static QNet zeros(std::size_t hidden1, std::size_t hidden2);
    static QNet random(std::uint64_t seed, std::size_t hidden1, std::size_t hidden2);
};

std::vector<double> score_agents(const QNet& qnet, const SelectorObservation& obs);

/// With probability 1 - epsilon the K best scores (ties to the lower id),
/// otherwise a uniform random K-subset. Returned ids are ascending.
std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k,
                                      double epsilon, Rng& rng);

/// Uniform random K-subset of {0..n-1}, ascending.
std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, Rng& rng);

double selector_reward(double joint_reward_after, double joint_reward_before);

struct Transition {
    SelectorObservation obs;
    std::vector<std::size_t> selected;
    double reward = 0.0;
    SelectorObservation next_obs;
};

/// reward / K + gamma_q * mean of the K largest next-state scores.
double td_target(const QNet& qnet, const Transition& transition, double gamma_q);

/// 0.5 * sum over selected n of (s_n - target)^2, target held fixed.
double td_loss(const QNet& qnet, const SelectorObservation& obs,
               std::span<const std::size_t> selected, double target);
std::vector<double> td_loss_grad(const QNet& qnet, const SelectorObservation& obs,
                                 std::span<const std::size_t> selected, double target);

/// One semi-gradient TD step.
QNet q_update(const QNet& qnet, const Transition& transition, double learning_rate,
              double gamma_q);

struct SelectorConfig {
    std::size_t hidden = 16;
    double learning_rate = 0.01;
    double gamma = 0.9;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    std::size_t epsilon_decay_rounds = 100;

    void validate() const;
};

/// Linear decay from epsilon_start at round 1 to epsilon_end at
/// epsilon_decay_rounds, constant afterwards.
double epsilon_at(const SelectorConfig& config, std::size_t round);

class DqnSelector {
public:
    DqnSelector(std::size_t n_agents, std::size_t k, SelectorConfig config,
                std::uint64_t seed);

    std::vector<std::size_t> choose(const SelectorObservation& obs, std::size_t round);
    void learn(const Transition& transition);
    const QNet& qnet() const { return qnet_; }

private:
    std::size_t n_agents_;
    std::size_t k_;
    SelectorConfig config_;
    std::uint64_t seed_;
    QNet qnet_;
};

}  // namespace fedmarl::selector
