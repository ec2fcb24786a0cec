#include "fedmarl/experiment.hpp"

#include <chrono>

#include "fedmarl/baselines.hpp"
#include "fedmarl/selector.hpp"

namespace fedmarl {

rl::AgentSystem make_system(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    radio::Environment env(config.radio, seed);
    return rl::AgentSystem(std::move(env), config.shape(), initial_model(config, seed), seed,
                           config.weights());
}

policy::ParamVector initial_model(const ExperimentConfig& config, std::uint64_t seed) {
    return policy::init_params(seed, config.shape());
}

}  // namespace fedmarl

namespace fedmarl::fed {

RunResult run_federated(const ExperimentConfig& config, std::uint64_t seed) {
    auto system = make_system(config, seed);
    FederatedServer server(system, GlobalModel{initial_model(config, seed), 0},
                           config.round_config(), config.training, config.eval_settings(), seed);
    const std::size_t n = system.size();
    const std::size_t k = config.participation;

    RunResult result;
    result.records.push_back(server.initial_record());

    std::optional<selector::DqnSelector> dqn;
    if (config.selection == SelectionMode::kDqn) dqn.emplace(n, k, config.selector, seed);
    std::vector<std::size_t> rounds_since(n, 0);
    auto observe = [&](std::size_t round) {
        return selector::build_observation(server.last_uploads(), server.global().params,
                                           server.previous_global(), rounds_since, round,
                                           config.rounds);
    };

    for (std::size_t round = 1; round < config.rounds; ++round) {
        std::vector<std::size_t> ids;
        selector::SelectorObservation obs;
        double before = 0.0;
        if (dqn) {
            obs = observe(round);
            ids = dqn->choose(obs, round);
            // Scored on the same evaluation episode as the post-round model.
            before = server.evaluate_global(server.global().params, round).joint_reward;
        } else {
            Rng rng = make_stream(seed, "selection", round);
            ids = selector::random_subset(n, k, rng);
        }

        result.records.push_back(server.run_round(ids));

        for (auto& s : rounds_since) ++s;
        for (auto id : ids) rounds_since[id] = 0;
        if (dqn) {
            selector::Transition t{std::move(obs), ids,
                                   selector::selector_reward(result.records.back().joint_reward,
                                                             before),
                                   observe(round + 1)};
            dqn->learn(t);
        }
    }
    result.final_model = server.global();
    return result;
}

}  // namespace fedmarl::fed

namespace fedmarl::baselines {

namespace {

MetricsRecord record_from(const rl::EvalResult& eval, std::uint64_t seed, Regime regime,
                          std::size_t round, std::uint64_t bytes) {
    MetricsRecord r;
    r.seed = seed;
    r.regime = to_string(regime);
    r.round = round;
    r.joint_reward = eval.joint_reward;
    r.per_agent_mean_reward = eval.mean_reward;
    r.bytes_uplinked = bytes;
    return r;
}

}  // namespace

RunResult run_distributed(const ExperimentConfig& config, std::uint64_t seed) {
    auto system = make_system(config, seed);
    const auto eval = config.eval_settings();
    const std::size_t n = system.size();
    auto local_params = [&] {
        std::vector<policy::ParamVector> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(system.agent(i).params());
        return out;
    };

    RunResult result;
    const auto p = config.shape().param_count();
    result.records.push_back(record_from(
        system.evaluate(local_params(), fed::eval_seed(seed, 0), eval.steps, eval.episodes), seed,
        Regime::kDistributed, 0, n * fed::payload_bytes(p, 0)));

    const std::vector<bool> everyone(n, true);
    for (std::size_t round = 1; round < config.rounds; ++round) {
        const auto started = std::chrono::steady_clock::now();
        system.local_round(everyone, config.training);
        auto rec = record_from(system.evaluate(local_params(), fed::eval_seed(seed, round),
                                               eval.steps, eval.episodes),
                               seed, Regime::kDistributed, round, 0);
        if (eval.record_timing) {
            rec.wall_clock_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - started)
                                    .count();
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

RunResult run_random_policy(const ExperimentConfig& config, std::uint64_t seed) {
    auto system = make_system(config, seed);
    const auto eval = config.eval_settings();
    // All-zero parameters give exactly uniform action probabilities.
    const policy::ParamVector uniform(config.shape().param_count(), 0.0);
    RunResult result;
    for (std::size_t round = 0; round < config.rounds; ++round) {
        result.records.push_back(record_from(
            system.evaluate_shared(uniform, fed::eval_seed(seed, round), eval.steps,
                                   eval.episodes),
            seed, Regime::kRandom, round, 0));
    }
    return result;
}

}  // namespace fedmarl::baselines
