#include "fedmarl/policy_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace fedmarl {

void Trajectory::validate() const {
    if (actions.empty()) throw std::invalid_argument("trajectory is empty");
    if (observations.size() != actions.size() || rewards.size() != actions.size()) {
        throw std::invalid_argument("trajectory fields have different lengths");
    }
    for (const auto& o : observations) {
        if (o.size() != observations.front().size()) {
            throw std::invalid_argument("trajectory observations differ in dimension");
        }
    }
    for (double r : rewards) {
        if (!(std::isfinite(r) && r >= 0.0)) {
            throw std::invalid_argument("trajectory rewards must be finite and >= 0");
        }
    }
}

}  // namespace fedmarl

namespace fedmarl::policy {

std::size_t Shape::param_count() const { return Layout(*this).end; }

Layout::Layout(const Shape& s) {
    const std::size_t h = s.hidden;
    w_in = 0;
    w_rec = w_in + h * s.inputs();
    b_h = w_rec + h * h;
    w_out = b_h + h;
    b_out = w_out + s.outputs() * h;
    end = b_out + s.outputs();
}

PolicyWeights unflatten(const Shape& shape, std::span<const double> params) {
    const Layout L(shape);
    if (params.size() != L.end) {
        throw std::invalid_argument("unflatten: parameter count does not match shape");
    }
    auto slice = [&](std::size_t from, std::size_t to) {
        return std::vector<double>(params.begin() + from, params.begin() + to);
    };
    return {slice(L.w_in, L.w_rec), slice(L.w_rec, L.b_h), slice(L.b_h, L.w_out),
            slice(L.w_out, L.b_out), slice(L.b_out, L.end)};
}

ParamVector flatten(const PolicyWeights& w) {
    ParamVector out;
    out.reserve(w.w_in.size() + w.w_rec.size() + w.b_h.size() + w.w_out.size() +
                w.b_out.size());
    for (const auto* block : {&w.w_in, &w.w_rec, &w.b_h, &w.w_out, &w.b_out}) {
        out.insert(out.end(), block->begin(), block->end());
    }
    return out;
}

ParamVector init_params(std::uint64_t seed, const Shape& shape) {
    if (shape.hidden < 1) throw std::invalid_argument("init_params: hidden width must be >= 1");
    const Layout L(shape);
    ParamVector p(L.end, 0.0);
    Rng rng = make_stream(seed, "policy-init");
    auto fill = [&](std::size_t from, std::size_t to) {
        for (std::size_t k = from; k < to; ++k) p[k] = uniform(rng, -0.1, 0.1);
    };
    fill(L.w_in, L.b_h);
    fill(L.w_out, L.b_out);
    return p;
}

std::vector<double> softmax(std::span<const double> logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        p[k] = std::exp(logits[k] - top);
        total += p[k];
    }
    for (double& v : p) v /= total;
    return p;
}

namespace {

void check_dims(const Shape& shape, std::span<const double> params,
                std::span<const double> obs) {
    if (params.size() != shape.param_count()) {
        throw std::invalid_argument("policy: parameter count does not match shape");
    }
    if (obs.size() != shape.inputs()) {
        throw std::invalid_argument("policy: observation has wrong dimension");
    }
}

// Hidden update and output logits for one step.
void step_cell(const Shape& shape, const Layout& L, std::span<const double> p,
               std::span<const double> obs, std::span<const double> h_prev,
               std::span<double> h_next, std::span<double> logits) {
    const std::size_t H = shape.hidden;
    const std::size_t D = shape.inputs();
    for (std::size_t r = 0; r < H; ++r) {
        double z = p[L.b_h + r];
        const double* wi = &p[L.w_in + r * D];
        for (std::size_t c = 0; c < D; ++c) z += wi[c] * obs[c];
        const double* wr = &p[L.w_rec + r * H];
        for (std::size_t c = 0; c < H; ++c) z += wr[c] * h_prev[c];
        h_next[r] = std::tanh(z);
    }
    for (std::size_t k = 0; k < shape.outputs(); ++k) {
        double z = p[L.b_out + k];
        const double* wo = &p[L.w_out + k * H];
        for (std::size_t c = 0; c < H; ++c) z += wo[c] * h_next[c];
        logits[k] = z;
    }
}

}  // namespace

ForwardResult forward(const Shape& shape, std::span<const double> params,
                      std::span<const double> obs, std::span<const double> hidden) {
    check_dims(shape, params, obs);
    if (hidden.size() != shape.hidden) {
        throw std::invalid_argument("forward: hidden state has wrong dimension");
    }
    const Layout L(shape);
    ForwardResult out;
    out.hidden.assign(shape.hidden, 0.0);
    std::vector<double> logits(shape.outputs());
    step_cell(shape, L, params, obs, hidden, out.hidden, logits);
    out.probs = softmax(logits);
    return out;
}

std::size_t sample_action(std::span<const double> probs, Rng& rng) {
    const double u = uniform01(rng);
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        cumulative += probs[k];
        last_positive = k;
        if (u < cumulative) return k;
    }
    // Only reachable when the probabilities sum to slightly less than one.
    return last_positive;
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
    std::vector<double> g(rewards.size());
    double running = 0.0;
    for (std::size_t t = rewards.size(); t-- > 0;) {
        running = rewards[t] + gamma * running;
        g[t] = running;
    }
    return g;
}

ParamVector logprob_grad(const Shape& shape, std::span<const double> params,
                         const Trajectory& traj, double gamma) {
    traj.validate();
    const std::size_t T = traj.length();
    const std::size_t H = shape.hidden;
    const std::size_t D = shape.inputs();
    const std::size_t K = shape.outputs();
    const Layout L(shape);
    for (std::size_t t = 0; t < T; ++t) {
        check_dims(shape, params, traj.observations[t]);
        if (traj.actions[t] >= K) throw std::invalid_argument("logprob_grad: action out of range");
    }

    // hs[t+1] is the hidden state after step t; hs[0] is zero.
    std::vector<std::vector<double>> hs(T + 1, std::vector<double>(H, 0.0));
    std::vector<std::vector<double>> probs(T);
    std::vector<double> logits(K);
    for (std::size_t t = 0; t < T; ++t) {
        step_cell(shape, L, params, traj.observations[t], hs[t], hs[t + 1], logits);
        probs[t] = softmax(logits);
    }

    const auto returns = discounted_returns(traj.rewards, gamma);
    ParamVector grad(L.end, 0.0);
    std::vector<double> dlogit(K), dh(H), dpre(H), dh_carry(H, 0.0);
    for (std::size_t t = T; t-- > 0;) {
        const auto& h = hs[t + 1];
        const auto& h_prev = hs[t];
        for (std::size_t k = 0; k < K; ++k) {
            dlogit[k] = returns[t] * ((k == traj.actions[t] ? 1.0 : 0.0) - probs[t][k]);
        }
        for (std::size_t c = 0; c < H; ++c) dh[c] = dh_carry[c];
        for (std::size_t k = 0; k < K; ++k) {
            grad[L.b_out + k] += dlogit[k];
            for (std::size_t c = 0; c < H; ++c) {
                grad[L.w_out + k * H + c] += dlogit[k] * h[c];
                dh[c] += params[L.w_out + k * H + c] * dlogit[k];
            }
        }
        for (std::size_t r = 0; r < H; ++r) dpre[r] = dh[r] * (1.0 - h[r] * h[r]);
        std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
        const auto& obs = traj.observations[t];
        for (std::size_t r = 0; r < H; ++r) {
            grad[L.b_h + r] += dpre[r];
            for (std::size_t c = 0; c < D; ++c) grad[L.w_in + r * D + c] += dpre[r] * obs[c];
            for (std::size_t c = 0; c < H; ++c) {
                grad[L.w_rec + r * H + c] += dpre[r] * h_prev[c];
                dh_carry[c] += params[L.w_rec + r * H + c] * dpre[r];
            }
        }
    }
    return grad;
}

void write_params(std::ostream& out, std::span<const double> params) {
    for (double v : params) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        unsigned char bytes[8];
        for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(bits >> (8 * b));
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
}

ParamVector read_params(std::istream& in, std::size_t count) {
    ParamVector params(count);
    for (auto& v : params) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
            throw std::runtime_error("read_params: truncated parameter stream");
        }
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
        v = std::bit_cast<double>(bits);
    }
    return params;
}

}  // namespace fedmarl::policy
