#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedmarl/policy_net.hpp"
#include "fedmarl/radio_env.hpp"
#include "fedmarl/rng.hpp"

namespace fedmarl::rl {

struct TrainingParams {
    std::size_t episode_len = 50;
    std::size_t local_episodes = 4;
    double learning_rate = 0.01;
    double gamma = 0.95;
    /// Global-norm clip applied to the averaged gradient; <= 0 disables it.
    double grad_clip = 5.0;

    void validate() const;
};

/// The only thing an agent ever sends out: a parameter vector and a sample
/// count. It carries no observations or rewards.
struct LocalUpdate {
    std::size_t agent_id = 0;
    policy::ParamVector params;
    std::size_t sample_count = 0;
};

/// One secondary-user pair's learner. Its trajectory buffer, hidden state and
/// action stream are private; other components can only hand it parameters
/// and ask for a LocalUpdate.
class Agent {
public:
    Agent(std::size_t id, policy::Shape shape, policy::ParamVector params, Rng stream);

    std::size_t id() const { return id_; }
    const policy::Shape& shape() const { return shape_; }
    const policy::ParamVector& params() const { return params_; }

    void receive(policy::ParamVector params);

    /// Start of a communication cycle: empties the trajectory buffer.
    void begin_cycle() { buffer_.clear(); }
    bool buffer_empty() const { return buffer_.empty(); }
    std::size_t buffered_episodes() const { return buffer_.size(); }

    /// Resets the recurrent state to zero.
    void begin_episode();
    /// Runs the policy on `obs`, advances the hidden state and samples.
    std::size_t act(std::span<const double> obs);

    void remember(Trajectory trajectory);
    /// Policy-gradient step on the buffered episodes, then clears the buffer.
    void train(const TrainingParams& params);

    LocalUpdate share(std::size_t sample_count) const;

private:
    std::size_t id_;
    policy::Shape shape_;
    policy::ParamVector params_;
    policy::HiddenState hidden_;
    Rng rng_;
    std::vector<Trajectory> buffer_;
};

struct EpisodeResult {
    std::vector<Trajectory> trajectories;  // one per agent
    std::vector<double> joint_rewards;     // one per step
    std::vector<double> reward_sums;       // one per agent
};

/// All agents act on the shared environment for `steps` timesteps. PU
/// occupancy for step t is pu(pu_seed, start_timestep + t).
EpisodeResult run_episode(std::span<Agent> agents, const radio::Environment& env,
                          std::uint64_t pu_seed, std::uint64_t start_timestep,
                          std::size_t steps, std::span<const double> weights);

/// params + lr * clip(mean_k logprob_grad(trajectories[k])).
policy::ParamVector local_update(const policy::Shape& shape,
                                 std::span<const double> params,
                                 std::span<const Trajectory> trajectories,
                                 double learning_rate, double gamma, double grad_clip);

struct LocalRoundResult {
    std::vector<LocalUpdate> updates;       // trainable agents, ascending id
    double mean_step_reward = 0.0;          // over all agents and steps
};

struct EvalResult {
    std::vector<double> per_agent;  // mean reward per step
    double joint_reward = 0.0;      // sum_n w_n per_agent[n]
    double mean_reward = 0.0;       // unweighted mean of per_agent
};

/// N agents sharing one environment and a training clock. Owns the agents.
class AgentSystem {
public:
    AgentSystem(radio::Environment env, policy::Shape shape,
                const policy::ParamVector& initial, std::uint64_t seed,
                std::vector<double> weights);

    std::size_t size() const { return agents_.size(); }
    const radio::Environment& env() const { return env_; }
    const policy::Shape& shape() const { return shape_; }
    std::span<const double> weights() const { return weights_; }
    Agent& agent(std::size_t i) { return agents_.at(i); }
    const Agent& agent(std::size_t i) const { return agents_.at(i); }
    std::uint64_t clock() const { return clock_; }

    /// E episode/update cycles. Every agent acts in every episode; only the
    /// agents flagged trainable update their parameters.
    LocalRoundResult local_round(const std::vector<bool>& trainable,
                                 const TrainingParams& params);

    /// Fresh evaluation episodes driven by the given per-agent parameters.
    /// Every random draw comes from `eval_seed`, never from training streams.
    EvalResult evaluate(std::span<const policy::ParamVector> per_agent,
                        std::uint64_t eval_seed, std::size_t steps,
                        std::size_t episodes = 1) const;
    EvalResult evaluate_shared(const policy::ParamVector& params,
                               std::uint64_t eval_seed, std::size_t steps,
                               std::size_t episodes = 1) const;

private:
    radio::Environment env_;
    policy::Shape shape_;
    std::vector<Agent> agents_;
    std::vector<double> weights_;
    std::uint64_t pu_seed_;
    std::uint64_t clock_ = 0;
};

}  // namespace fedmarl::rl
