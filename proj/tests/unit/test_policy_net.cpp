#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "fedmarl/policy_net.hpp"
#include "fedmarl/rng.hpp"
#include "oracles.hpp"

using namespace fedmarl;
using namespace fedmarl::policy;

TEST_CASE("init_params layout and determinism") {
    const Shape shape{4, 16};
    CHECK(shape.param_count() == 581);
    const auto a = init_params(1, shape), b = init_params(1, shape), c = init_params(2, shape);
    REQUIRE(a.size() == 581);
    CHECK(a == b);
    CHECK(a != c);
    const Layout layout(shape);
    for (std::size_t k = layout.b_h; k < layout.w_out; ++k) CHECK(a[k] == 0.0);
    for (std::size_t k = layout.b_out; k < layout.end; ++k) CHECK(a[k] == 0.0);
    for (std::size_t k = 0; k < layout.b_h; ++k) {
        CHECK(a[k] >= -0.1);
        CHECK(a[k] <= 0.1);
    }
    CHECK_THROWS_AS(init_params(1, Shape{4, 0}), std::invalid_argument);
}

TEST_CASE("flatten and unflatten round-trip exactly") {
    Rng rng(8);
    for (int k = 0; k < 50; ++k) {
        const Shape shape{1 + uniform_index(rng, 5), 1 + uniform_index(rng, 8)};
        const auto v = oracle::random_vector(rng, shape.param_count(), -3.0, 3.0);
        CHECK(flatten(unflatten(shape, v)) == v);
    }
    CHECK_THROWS_AS(unflatten(Shape{4, 16}, std::vector<double>(580)), std::invalid_argument);
}

TEST_CASE("forward with zero params is uniform") {
    const Shape shape{4, 16};
    const std::vector<double> zeros(shape.param_count(), 0.0), h(16, 0.0);
    Rng rng(2);
    const auto obs = oracle::random_vector(rng, shape.inputs(), -5.0, 5.0);
    const auto out = forward(shape, zeros, obs, h);
    REQUIRE(out.probs.size() == 5);
    for (double p : out.probs) CHECK(p == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("forward outputs a simplex point and a bounded hidden state") {
    const Shape shape{4, 16};
    Rng rng(12);
    for (int k = 0; k < 1000; ++k) {
        const auto params = oracle::random_vector(rng, shape.param_count(), -2.0, 2.0);
        const auto obs = oracle::random_vector(rng, shape.inputs(), -10.0, 10.0);
        const auto h = oracle::random_vector(rng, shape.hidden, -1.0, 1.0);
        const auto out = forward(shape, params, obs, h);
        double sum = 0.0;
        for (double p : out.probs) {
            CHECK(p >= 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (double v : out.hidden) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("forward rejects mismatched dimensions") {
    const Shape shape{4, 16};
    const std::vector<double> params(shape.param_count(), 0.0), h(16, 0.0);
    CHECK_THROWS_AS(forward(shape, params, std::vector<double>(13), h), std::invalid_argument);
    CHECK_THROWS_AS(forward(shape, params, std::vector<double>(14), std::vector<double>(15)),
                    std::invalid_argument);
    CHECK_THROWS_AS(forward(shape, std::vector<double>(10), std::vector<double>(14), h),
                    std::invalid_argument);
}

TEST_CASE("softmax is shift invariant and survives huge logits") {
    Rng rng(6);
    for (int k = 0; k < 200; ++k) {
        const auto logits = oracle::random_vector(rng, 5, -20.0, 20.0);
        auto shifted = logits;
        const double c = uniform(rng, -100.0, 100.0);
        for (auto& l : shifted) l += c;
        const auto a = softmax(logits), b = softmax(shifted);
        for (std::size_t i = 0; i < 5; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
    }
    const auto big = softmax(std::vector<double>{1e300, 0.0, -1e300});
    CHECK(big[0] == 1.0);
    CHECK(big[1] == 0.0);
}

TEST_CASE("sample_action") {
    Rng rng(1);
    const std::vector<double> point{1, 0, 0, 0, 0};
    for (int k = 0; k < 1000; ++k) CHECK(sample_action(point, rng) == 0);

    const std::vector<double> uniform5(5, 0.2);
    std::vector<int> counts(5, 0);
    for (int k = 0; k < 100000; ++k) ++counts[sample_action(uniform5, rng)];
    for (int c : counts) CHECK(std::abs(c / 100000.0 - 0.2) <= 0.005);

    Rng a(77), b(77);
    for (int k = 0; k < 100; ++k) CHECK(sample_action(uniform5, a) == sample_action(uniform5, b));

    // A trailing zero entry is never chosen even when rounding leaves a gap.
    const std::vector<double> gap{0.3, 0.3, 0.3999999999, 0.0};
    for (int k = 0; k < 10000; ++k) CHECK(sample_action(gap, rng) != 3);
}

TEST_CASE("discounted_returns") {
    const auto g = discounted_returns(std::vector<double>{1.0, 0.0, 2.0}, 0.5);
    REQUIRE(g.size() == 3);
    CHECK(g[2] == 2.0);
    CHECK(g[1] == 1.0);
    CHECK(g[0] == 1.5);
}

TEST_CASE("logprob_grad hand examples") {
    const Shape shape{4, 16};
    const std::vector<double> zeros(shape.param_count(), 0.0);

    SUBCASE("zero rewards give a zero gradient") {
        Rng rng(3);
        auto traj = oracle::random_trajectory(rng, 4, 7);
        for (auto& r : traj.rewards) r = 0.0;
        const auto params = init_params(5, shape);
        for (double g : logprob_grad(shape, params, traj, 0.95)) CHECK(g == 0.0);
    }
    SUBCASE("single step, action 0 rewarded") {
        Trajectory traj;
        traj.observations.push_back(std::vector<double>(shape.inputs(), 0.5));
        traj.actions.push_back(0);
        traj.rewards.push_back(1.0);
        for (double gamma : {0.0, 0.95}) {
            const auto g = logprob_grad(shape, zeros, traj, gamma);
            const Layout layout(shape);
            CHECK(g[layout.b_out] == doctest::Approx(0.8).epsilon(1e-14));
            for (std::size_t k = 1; k < 5; ++k) {
                CHECK(g[layout.b_out + k] == doctest::Approx(-0.2).epsilon(1e-14));
            }
        }
    }
}

TEST_CASE("logprob_grad matches central differences") {
    Rng rng(99);
    for (int instance = 0; instance < 40; ++instance) {
        const Shape shape{1 + uniform_index(rng, 4), 1 + uniform_index(rng, 4)};
        const auto params = oracle::random_vector(rng, shape.param_count(), -0.8, 0.8);
        const auto traj = oracle::random_trajectory(rng, shape.m_channels, 1 + uniform_index(rng, 5));
        const double gamma = uniform(rng, 0.0, 1.0);
        const auto analytic = logprob_grad(shape, params, traj, gamma);
        const auto numeric = oracle::central_differences(
            [&](std::span<const double> p) {
                return oracle::rnn_objective(shape.m_channels, shape.hidden, p, traj, gamma);
            },
            params);
        CHECK(oracle::gradient_mismatch(analytic, numeric) <= 0.0);
    }
}

TEST_CASE("logprob_grad rejects malformed trajectories") {
    const Shape shape{4, 4};
    const std::vector<double> params(shape.param_count(), 0.0);
    Trajectory empty;
    CHECK_THROWS_AS(logprob_grad(shape, params, empty, 0.9), std::invalid_argument);

    Rng rng(1);
    auto traj = oracle::random_trajectory(rng, 3, 4);  // M=3 observations vs M=4 shape
    CHECK_THROWS_AS(logprob_grad(shape, params, traj, 0.9), std::invalid_argument);

    auto bad_action = oracle::random_trajectory(rng, 4, 2);
    bad_action.actions[1] = 5;
    CHECK_THROWS_AS(logprob_grad(shape, params, bad_action, 0.9), std::invalid_argument);

    auto negative = oracle::random_trajectory(rng, 4, 2);
    negative.rewards[0] = -1.0;
    CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
}

TEST_CASE("params serialize as little-endian doubles") {
    const std::vector<double> v{1.0, -2.5, 0.1};
    std::stringstream buf;
    write_params(buf, v);
    const std::string bytes = buf.str();
    REQUIRE(bytes.size() == 24);
    // 1.0 = 0x3FF0000000000000
    CHECK(static_cast<unsigned char>(bytes[7]) == 0x3F);
    CHECK(static_cast<unsigned char>(bytes[6]) == 0xF0);
    CHECK(static_cast<unsigned char>(bytes[0]) == 0x00);
    std::stringstream in(bytes);
    CHECK(read_params(in, 3) == v);
    std::stringstream short_in(bytes.substr(0, 20));
    CHECK_THROWS(read_params(short_in, 3));
}
