#include <cmath>
#include <set>
#include <type_traits>

#include "doctest.h"
#include "fedmarl/selector.hpp"
#include "oracles.hpp"

using namespace fedmarl;
using namespace fedmarl::selector;

namespace {

SelectorObservation random_obs(Rng& rng, std::size_t n) {
    SelectorObservation obs;
    obs.n_agents = n;
    obs.features = oracle::random_vector(rng, 3 * n, -1.0, 2.0);
    obs.round_feature = uniform01(rng);
    return obs;
}

QNet random_qnet(Rng& rng, std::size_t h1, std::size_t h2) {
    QNet q = QNet::zeros(h1, h2);
    q.params = oracle::random_vector(rng, q.params.size(), -1.0, 1.0);
    return q;
}

}  // namespace

// The selector sees parameter vectors and counters, nothing an agent observed.
static_assert(std::is_same_v<decltype(&build_observation),
                             SelectorObservation (*)(std::span<const policy::ParamVector>,
                                                     const policy::ParamVector&,
                                                     const policy::ParamVector&,
                                                     std::span<const std::size_t>, std::size_t,
                                                     std::size_t)>);

TEST_CASE("build_observation features") {
    const std::vector<policy::ParamVector> uploads{{3.0, 4.0}, {1.0, 0.0}, {1.0, 1.0}};
    const policy::ParamVector global{0.0, 0.0}, previous{-1.0, 0.0};
    const std::vector<std::size_t> since{0, 1, 3};
    const auto obs = build_observation(uploads, global, previous, since, 30, 300);
    REQUIRE(obs.n_agents == 3);
    REQUIRE(obs.features.size() == 9);
    CHECK(obs.features[0] == 5.0);
    CHECK(obs.features[1] == doctest::Approx(0.6));
    CHECK(obs.features[2] == 0.0);
    CHECK(obs.features[3] == 1.0);
    CHECK(obs.features[4] == doctest::Approx(1.0));
    CHECK(obs.features[5] == 0.5);
    CHECK(obs.features[8] == 0.75);
    CHECK(obs.round_feature == doctest::Approx(0.1));
    CHECK(obs.block(1) == std::vector<double>{1.0, obs.features[4], 0.5, obs.round_feature});

    // No previous step: cosine is defined as 0.
    const auto first = build_observation(uploads, global, global, since, 0, 300);
    CHECK(first.features[1] == 0.0);
    CHECK(first.round_feature == 0.0);

    CHECK_THROWS_AS(build_observation(uploads, global, previous, std::vector<std::size_t>{0, 1}, 1, 10),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_observation(uploads, {0.0}, previous, since, 1, 10), std::invalid_argument);
}

TEST_CASE("score_agents") {
    Rng rng(4);
    const auto obs = random_obs(rng, 5);
    for (double s : score_agents(QNet::zeros(8, 8), obs)) CHECK(s == 0.0);

    const auto q = QNet::random(3, 8, 8);
    CHECK(q.params == QNet::random(3, 8, 8).params);
    CHECK(score_agents(q, obs) == score_agents(q, obs));

    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 6);
        const auto o = random_obs(rng, n);
        const auto net = random_qnet(rng, 6, 5);
        const std::size_t a = uniform_index(rng, n), b = uniform_index(rng, n);
        auto swapped = o;
        for (std::size_t f = 0; f < 3; ++f) std::swap(swapped.features[3 * a + f], swapped.features[3 * b + f]);
        const auto s = score_agents(net, o), t = score_agents(net, swapped);
        CHECK(t[a] == doctest::Approx(s[b]).epsilon(1e-12));
        CHECK(t[b] == doctest::Approx(s[a]).epsilon(1e-12));
    }

    auto bad = obs;
    bad.features.pop_back();
    CHECK_THROWS_AS(score_agents(q, bad), std::invalid_argument);
    QNet wrong = q;
    wrong.params.pop_back();
    CHECK_THROWS_AS(score_agents(wrong, obs), std::invalid_argument);
}

TEST_CASE("select_top_k examples") {
    Rng rng(1);
    const std::vector<double> s{3, 1, 2};
    CHECK(select_top_k(s, 2, 0.0, rng) == std::vector<std::size_t>{0, 2});
    CHECK(select_top_k(s, 3, 0.7, rng) == std::vector<std::size_t>{0, 1, 2});
    CHECK(select_top_k(std::vector<double>{1, 1}, 1, 0.0, rng) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(select_top_k(s, 0, 0.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(select_top_k(s, 4, 0.0, rng), std::invalid_argument);
}

TEST_CASE("select_top_k always yields K distinct ids") {
    Rng rng(9);
    std::set<std::vector<std::size_t>> seen;
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 10), k = 1 + uniform_index(rng, n);
        const auto scores = oracle::random_vector(rng, n, -1.0, 1.0);
        const double eps = uniform01(rng);
        const auto ids = select_top_k(scores, k, eps, rng);
        CHECK(ids.size() == k);
        CHECK(std::set<std::size_t>(ids.begin(), ids.end()).size() == k);
        for (auto id : ids) CHECK(id < n);

        Rng a(trial), b(trial);
        CHECK(select_top_k(scores, k, 0.0, a) == select_top_k(scores, k, 0.0, b));
    }
    // Pure exploration reaches every 2-subset of 4.
    for (int k = 0; k < 500; ++k) seen.insert(select_top_k(std::vector<double>{4, 3, 2, 1}, 2, 1.0, rng));
    CHECK(seen.size() == 6);
}

TEST_CASE("selector_reward is the signed improvement") {
    CHECK(selector_reward(1.5, 1.5) == 0.0);
    CHECK(selector_reward(2.0, 1.5) == 0.5);
    CHECK(selector_reward(1.0, 1.5) == -0.5);
}

TEST_CASE("q_update") {
    Rng rng(5);
    SUBCASE("zero net, zero reward, no bootstrap: nothing moves") {
        const auto q = QNet::zeros(4, 4);
        Transition t{random_obs(rng, 3), {0, 2}, 0.0, random_obs(rng, 3)};
        CHECK(q_update(q, t, 0.1, 0.0).params == q.params);
    }
    SUBCASE("selected scores move toward reward / K") {
        for (int trial = 0; trial < 50; ++trial) {
            const auto q = random_qnet(rng, 4, 4);
            Transition t{random_obs(rng, 4), {1, 3}, uniform(rng, -2.0, 2.0), random_obs(rng, 4)};
            const double target = t.reward / 2.0;
            CHECK(td_target(q, t, 0.0) == target);
            const auto before = score_agents(q, t.obs);
            const auto after = score_agents(q_update(q, t, 1e-3, 0.0), t.obs);
            double err_before = 0.0, err_after = 0.0;
            for (auto id : t.selected) {
                err_before += (before[id] - target) * (before[id] - target);
                err_after += (after[id] - target) * (after[id] - target);
            }
            CHECK(err_after < err_before);
        }
    }
    SUBCASE("bootstrap uses the mean of the top-K next scores") {
        const auto q = random_qnet(rng, 4, 4);
        Transition t{random_obs(rng, 4), {0, 1}, 1.0, random_obs(rng, 4)};
        auto next = score_agents(q, t.next_obs);
        std::sort(next.begin(), next.end(), std::greater<>());
        CHECK(td_target(q, t, 0.9) == doctest::Approx(0.5 + 0.9 * (next[0] + next[1]) / 2.0));
    }
}

TEST_CASE("td_loss_grad matches central differences") {
    Rng rng(31);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + uniform_index(rng, 3), h1 = 1 + uniform_index(rng, 4),
                          h2 = 1 + uniform_index(rng, 4);
        const auto q = random_qnet(rng, h1, h2);
        const auto obs = random_obs(rng, n);
        const auto selected = random_subset(n, 1 + uniform_index(rng, n), rng);
        const double target = uniform(rng, -1.0, 1.0);
        CHECK(td_loss(q, obs, selected, target) ==
              doctest::Approx(oracle::qnet_loss(h1, h2, q.params, obs, selected, target)).epsilon(1e-12));
        const auto analytic = td_loss_grad(q, obs, selected, target);
        const auto numeric = oracle::central_differences(
            [&](std::span<const double> p) { return oracle::qnet_loss(h1, h2, p, obs, selected, target); },
            q.params);
        CHECK(oracle::gradient_mismatch(analytic, numeric) <= 0.0);
    }
}

TEST_CASE("epsilon schedule") {
    SelectorConfig c;
    CHECK(epsilon_at(c, 1) == 1.0);
    CHECK(epsilon_at(c, 100) == 0.05);
    CHECK(epsilon_at(c, 250) == 0.05);
    for (std::size_t r = 1; r < 120; ++r) CHECK(epsilon_at(c, r + 1) <= epsilon_at(c, r));
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("DqnSelector") {
    DqnSelector dqn(6, 3, SelectorConfig{}, 2);
    Rng rng(2);
    const auto obs = random_obs(rng, 6);
    for (std::size_t round = 1; round < 150; ++round) {
        const auto ids = dqn.choose(obs, round);
        CHECK(ids.size() == 3);
        CHECK(std::set<std::size_t>(ids.begin(), ids.end()).size() == 3);
    }
    // Past the decay, choices are mostly greedy, hence repeatable across identical selectors.
    DqnSelector twin(6, 3, SelectorConfig{}, 2);
    CHECK(dqn.choose(obs, 140) == twin.choose(obs, 140));
    const auto before = dqn.qnet().params;
    dqn.learn({obs, {0, 1, 2}, 1.0, obs});
    CHECK(dqn.qnet().params != before);
    CHECK_THROWS_AS(dqn.choose(random_obs(rng, 5), 1), std::invalid_argument);
    CHECK_THROWS_AS(DqnSelector(4, 5, SelectorConfig{}, 1), std::invalid_argument);
}
