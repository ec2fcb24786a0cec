#include <cmath>

#include "doctest.h"
#include "fedmarl/baselines.hpp"
#include "fedmarl/config.hpp"
#include "fedmarl/experiment.hpp"

using namespace fedmarl;

namespace {

ExperimentConfig short_config(std::size_t rounds) {
    ExperimentConfig cfg;
    cfg.rounds = rounds;
    cfg.training.episode_len = 20;
    cfg.training.local_episodes = 2;
    return cfg;
}

// Least-squares slope of y against round index and its standard error.
std::pair<double, double> slope_with_error(const std::vector<double>& y) {
    const double n = static_cast<double>(y.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        mx += static_cast<double>(i);
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sxx += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
        sxy += (static_cast<double>(i) - mx) * (y[i] - my);
    }
    const double b = sxy / sxx, a = my - b * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - a - b * static_cast<double>(i);
        sse += e * e;
    }
    return {b, std::sqrt(sse / (n - 2.0) / sxx)};
}

std::vector<double> rewards_of(const RunResult& run) {
    std::vector<double> y;
    for (const auto& r : run.records) y.push_back(r.joint_reward);
    return y;
}

}  // namespace

TEST_CASE("distributed and federated runs share round 0") {
    const auto cfg = short_config(3);
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto fl = fed::run_federated(cfg, seed);
        const auto dist = baselines::run_distributed(cfg, seed);
        REQUIRE(fl.records.size() == 3);
        REQUIRE(dist.records.size() == 3);
        CHECK(fl.records[0].joint_reward == dist.records[0].joint_reward);
        CHECK(fl.records[0].per_agent_mean_reward == dist.records[0].per_agent_mean_reward);
        CHECK(fl.records[0].bytes_uplinked == dist.records[0].bytes_uplinked);
        CHECK(dist.records[0].regime == "distributed");
        for (std::size_t r = 1; r < 3; ++r) CHECK(dist.records[r].bytes_uplinked == 0);

        auto system = make_system(cfg, seed);
        const auto initial = initial_model(cfg, seed);
        for (std::size_t i = 0; i < system.size(); ++i) CHECK(system.agent(i).params() == initial);
    }
}

TEST_CASE("distributed with zero learning rate is flat") {
    auto cfg = short_config(120);
    cfg.training.learning_rate = 0.0;
    const auto run = baselines::run_distributed(cfg, 4);
    const auto [slope, se] = slope_with_error(rewards_of(run));
    CHECK(std::abs(slope) <= 2.0 * se + 1e-12);
}

TEST_CASE("with a single agent federated and distributed curves coincide") {
    auto cfg = short_config(15);
    cfg.radio.n_pairs = 1;
    cfg.participation = 1;
    const auto fl = fed::run_federated(cfg, 6);
    const auto dist = baselines::run_distributed(cfg, 6);
    CHECK(rewards_of(fl) == rewards_of(dist));
}

TEST_CASE("random policy") {
    ExperimentConfig cfg;
    const auto a = baselines::run_random_policy(cfg, 2);
    const auto b = baselines::run_random_policy(cfg, 2);
    REQUIRE(a.records.size() == cfg.rounds);
    CHECK(a.records == b.records);
    CHECK(!a.final_model);
    for (const auto& r : a.records) {
        CHECK(r.regime == "random");
        CHECK(r.bytes_uplinked == 0);
    }
    const auto [slope, se] = slope_with_error(rewards_of(a));
    CHECK(std::abs(slope) <= 2.0 * se);

    // Uniform policies leave the idle action a 1/(M+1) share.
    auto system = make_system(cfg, 2);
    std::vector<rl::Agent> agents;
    const policy::ParamVector zeros(cfg.shape().param_count(), 0.0);
    for (std::size_t i = 0; i < 8; ++i) agents.emplace_back(i, cfg.shape(), zeros, make_stream(2, "probe", i));
    std::size_t idle = 0, total = 0;
    for (std::uint64_t e = 0; e < 50; ++e) {
        const auto ep = rl::run_episode(agents, system.env(), 1, e * 50, 50, system.weights());
        for (const auto& t : ep.trajectories) {
            for (auto act : t.actions) idle += act == cfg.radio.m_channels;
            total += t.actions.size();
        }
    }
    CHECK(std::abs(static_cast<double>(idle) / static_cast<double>(total) - 0.2) <= 0.01);
}
