#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fedmarl/rng.hpp"

namespace fedmarl {

/// One local episode of a single agent. rewards[t] is the reward that
/// followed actions[t] taken on observations[t].
struct Trajectory {
    std::vector<std::vector<double>> observations;
    std::vector<std::size_t> actions;
    std::vector<double> rewards;

    std::size_t length() const { return actions.size(); }
    void validate() const;
};

}  // namespace fedmarl

namespace fedmarl::policy {

using ParamVector = std::vector<double>;
using HiddenState = std::vector<double>;

/// Dimensions of the recurrent policy for M channels and hidden width H.
struct Shape {
    std::size_t m_channels = 4;
    std::size_t hidden = 16;

    std::size_t inputs() const { return 3 * m_channels + 2; }
    std::size_t outputs() const { return m_channels + 1; }
    std::size_t param_count() const;
};

/// Offsets of each block inside the flat parameter vector. Matrices are
/// row-major with one row per destination unit:
///   w_in  [H x (3M+2)], w_rec [H x H], b_h [H], w_out [(M+1) x H], b_out [M+1]
struct Layout {
    std::size_t w_in, w_rec, b_h, w_out, b_out, end;
    explicit Layout(const Shape& shape);
};

/// The unflattened parameter blocks.
struct PolicyWeights {
    std::vector<double> w_in;
    std::vector<double> w_rec;
    std::vector<double> b_h;
    std::vector<double> w_out;
    std::vector<double> b_out;
};

PolicyWeights unflatten(const Shape& shape, std::span<const double> params);
ParamVector flatten(const PolicyWeights& weights);

/// Weights uniform in [-0.1, 0.1], biases zero.
ParamVector init_params(std::uint64_t seed, const Shape& shape);

struct ForwardResult {
    std::vector<double> probs;
    HiddenState hidden;
};

ForwardResult forward(const Shape& shape, std::span<const double> params,
                      std::span<const double> obs, std::span<const double> hidden);

std::vector<double> softmax(std::span<const double> logits);

/// Categorical draw: one uniform variate per call.
std::size_t sample_action(std::span<const double> probs, Rng& rng);

/// G_t = sum_{k >= t} gamma^(k-t) r_k.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

/// Gradient of sum_t G_t log pi(a_t | o_1..o_t) by backpropagation through
/// time, with the hidden state starting at zero.
ParamVector logprob_grad(const Shape& shape, std::span<const double> params,
                         const Trajectory& trajectory, double gamma);

/// Little-endian IEEE-754 binary64 in layout order.
void write_params(std::ostream& out, std::span<const double> params);
ParamVector read_params(std::istream& in, std::size_t count);

}  // namespace fedmarl::policy
