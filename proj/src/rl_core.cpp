#include "fedmarl/rl_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fedmarl/fed_core.hpp"

namespace fedmarl::rl {

void TrainingParams::validate() const {
    if (episode_len < 1) throw std::invalid_argument("episode_len must be >= 1");
    if (local_episodes < 1) throw std::invalid_argument("local_episodes must be >= 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be >= 0");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
}

Agent::Agent(std::size_t id, policy::Shape shape, policy::ParamVector params, Rng stream)
    : id_(id),
      shape_(shape),
      params_(std::move(params)),
      hidden_(shape.hidden, 0.0),
      rng_(stream) {
    if (params_.size() != shape_.param_count()) {
        throw std::invalid_argument("Agent: parameter count does not match shape");
    }
}

void Agent::receive(policy::ParamVector params) {
    if (params.size() != params_.size()) {
        throw std::invalid_argument("Agent::receive: parameter count mismatch");
    }
    params_ = std::move(params);
}

void Agent::begin_episode() { std::fill(hidden_.begin(), hidden_.end(), 0.0); }

std::size_t Agent::act(std::span<const double> obs) {
    auto out = policy::forward(shape_, params_, obs, hidden_);
    hidden_ = std::move(out.hidden);
    return policy::sample_action(out.probs, rng_);
}

void Agent::remember(Trajectory trajectory) {
    trajectory.validate();
    buffer_.push_back(std::move(trajectory));
}

void Agent::train(const TrainingParams& p) {
    // A zero learning rate freezes the policy.
    if (!buffer_.empty() && p.learning_rate > 0.0) {
        params_ = local_update(shape_, params_, buffer_, p.learning_rate, p.gamma, p.grad_clip);
    }
    buffer_.clear();
}

LocalUpdate Agent::share(std::size_t sample_count) const {
    return LocalUpdate{id_, params_, sample_count};
}

EpisodeResult run_episode(std::span<Agent> agents, const radio::Environment& env,
                          std::uint64_t pu_seed, std::uint64_t start_timestep,
                          std::size_t steps, std::span<const double> weights) {
    if (steps < 1) throw std::invalid_argument("run_episode: steps must be >= 1");
    const std::size_t n = agents.size();
    const std::size_t m = env.m_channels();
    if (n != env.n_agents()) throw std::invalid_argument("run_episode: agent count mismatch");
    for (const auto& a : agents) {
        if (a.shape().m_channels != m || a.shape().hidden != agents[0].shape().hidden) {
            throw std::invalid_argument("run_episode: agents disagree on (M, H)");
        }
    }

    EpisodeResult out;
    out.trajectories.resize(n);
    out.reward_sums.assign(n, 0.0);
    out.joint_rewards.reserve(steps);
    std::vector<radio::Observation> obs(n, radio::initial_observation(m));
    for (auto& a : agents) a.begin_episode();

    radio::JointAction joint(n);
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t action = agents[i].act(obs[i]);
            joint[i] = radio::action_to_channel(action, m);
            out.trajectories[i].observations.push_back(obs[i]);
            out.trajectories[i].actions.push_back(action);
        }
        auto result = env.step(env.pu(pu_seed, start_timestep + t), joint);
        for (std::size_t i = 0; i < n; ++i) {
            out.trajectories[i].rewards.push_back(result.rewards[i]);
            out.reward_sums[i] += result.rewards[i];
        }
        out.joint_rewards.push_back(fed::joint_reward(result.rewards, weights));
        obs = std::move(result.observations);
    }
    return out;
}

policy::ParamVector local_update(const policy::Shape& shape,
                                 std::span<const double> params,
                                 std::span<const Trajectory> trajectories,
                                 double learning_rate, double gamma, double grad_clip) {
    if (trajectories.empty()) throw std::invalid_argument("local_update: no trajectories");
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("local_update: learning rate must be positive");
    }

    std::vector<double> grad(params.size(), 0.0);
    for (const auto& traj : trajectories) {
        const auto g = policy::logprob_grad(shape, params, traj, gamma);
        for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += g[k];
    }
    const double inv = 1.0 / static_cast<double>(trajectories.size());
    double norm_sq = 0.0;
    for (double& g : grad) {
        g *= inv;
        norm_sq += g * g;
    }
    double scale = learning_rate;
    const double norm = std::sqrt(norm_sq);
    if (grad_clip > 0.0 && norm > grad_clip) scale *= grad_clip / norm;

    policy::ParamVector next(params.begin(), params.end());
    for (std::size_t k = 0; k < next.size(); ++k) next[k] += scale * grad[k];
    return next;
}

AgentSystem::AgentSystem(radio::Environment env, policy::Shape shape,
                         const policy::ParamVector& initial, std::uint64_t seed,
                         std::vector<double> weights)
    : env_(std::move(env)),
      shape_(shape),
      weights_(std::move(weights)),
      pu_seed_(stream_seed(seed, "train-pu")) {
    if (shape_.m_channels != env_.m_channels()) {
        throw std::invalid_argument("AgentSystem: policy and environment disagree on M");
    }
    if (weights_.size() != env_.n_agents()) {
        throw std::invalid_argument("AgentSystem: one weight per agent required");
    }
    agents_.reserve(env_.n_agents());
    for (std::size_t i = 0; i < env_.n_agents(); ++i) {
        agents_.emplace_back(i, shape_, initial, make_stream(seed, "action", i));
    }
}

LocalRoundResult AgentSystem::local_round(const std::vector<bool>& trainable,
                                          const TrainingParams& p) {
    p.validate();
    if (trainable.size() != agents_.size()) {
        throw std::invalid_argument("local_round: one trainable flag per agent required");
    }
    for (auto& a : agents_) a.begin_cycle();

    LocalRoundResult out;
    double total = 0.0;
    for (std::size_t e = 0; e < p.local_episodes; ++e) {
        auto episode = run_episode(agents_, env_, pu_seed_, clock_, p.episode_len, weights_);
        clock_ += p.episode_len;
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            total += episode.reward_sums[i];
            if (!trainable[i]) continue;
            agents_[i].remember(std::move(episode.trajectories[i]));
            agents_[i].train(p);
        }
    }
    out.mean_step_reward =
        total / static_cast<double>(agents_.size() * p.local_episodes * p.episode_len);
    for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (trainable[i]) {
            out.updates.push_back(agents_[i].share(p.local_episodes * p.episode_len));
        }
    }
    return out;
}

EvalResult AgentSystem::evaluate(std::span<const policy::ParamVector> per_agent,
                                 std::uint64_t eval_seed, std::size_t steps,
                                 std::size_t episodes) const {
    if (per_agent.size() != agents_.size()) {
        throw std::invalid_argument("evaluate: one parameter vector per agent required");
    }
    if (episodes < 1) throw std::invalid_argument("evaluate: episodes must be >= 1");
    std::vector<Agent> probes;
    probes.reserve(per_agent.size());
    for (std::size_t i = 0; i < per_agent.size(); ++i) {
        probes.emplace_back(i, shape_, per_agent[i], make_stream(eval_seed, "eval-action", i));
    }
    const std::uint64_t pu_seed = stream_seed(eval_seed, "eval-pu");

    EvalResult out;
    out.per_agent.assign(agents_.size(), 0.0);
    for (std::size_t e = 0; e < episodes; ++e) {
        auto episode = run_episode(probes, env_, pu_seed, e * steps, steps, weights_);
        for (std::size_t i = 0; i < agents_.size(); ++i) out.per_agent[i] += episode.reward_sums[i];
    }
    const double denom = static_cast<double>(steps * episodes);
    double sum = 0.0;
    for (double& r : out.per_agent) {
        r /= denom;
        sum += r;
    }
    out.joint_reward = fed::joint_reward(out.per_agent, weights_);
    out.mean_reward = sum / static_cast<double>(out.per_agent.size());
    return out;
}

EvalResult AgentSystem::evaluate_shared(const policy::ParamVector& params,
                                        std::uint64_t eval_seed, std::size_t steps,
                                        std::size_t episodes) const {
    std::vector<policy::ParamVector> copies(agents_.size(), params);
    return evaluate(copies, eval_seed, steps, episodes);
}

}  // namespace fedmarl::rl
