#include "fedmarl/fed_core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace fedmarl::fed {

void RoundConfig::validate(std::size_t n_agents) {
    if (participation < 1 || participation > n_agents) {
        throw std::invalid_argument("participation must satisfy 1 <= K <= N");
    }
    if (quantization_bits == 1 || quantization_bits > 16) {
        throw std::invalid_argument("quantization_bits must be 0 or in [2, 16]");
    }
    if (!(p_drop >= 0.0 && p_drop <= 1.0)) throw std::invalid_argument("p_drop must lie in [0, 1]");
    if (agent_weights.empty()) agent_weights.assign(n_agents, 1.0);
    if (agent_weights.size() != n_agents) {
        throw std::invalid_argument("agent_weights needs one entry per agent");
    }
    double total = 0.0;
    for (double w : agent_weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::invalid_argument("agent_weights must be nonnegative and finite");
        }
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("agent_weights must not all be zero");
    for (double& w : agent_weights) w /= total;
}

policy::ParamVector aggregate(std::span<const rl::LocalUpdate> updates) {
    if (updates.empty()) throw std::invalid_argument("aggregate: no updates");
    const std::size_t dim = updates.front().params.size();
    for (const auto& u : updates) {
        if (u.params.size() != dim) throw std::invalid_argument("aggregate: length mismatch");
        if (u.sample_count < 1) throw std::invalid_argument("aggregate: sample_count must be >= 1");
    }

    // Reduce in a canonical order so the rounding is independent of input order.
    std::vector<const rl::LocalUpdate*> order;
    for (const auto& u : updates) order.push_back(&u);
    std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
        if (a->sample_count != b->sample_count) return a->sample_count < b->sample_count;
        if (a->params != b->params) return a->params < b->params;
        return a->agent_id < b->agent_id;
    });

    // Running weighted mean: m += (c_k / C_k) (v_k - m). Identical inputs give
    // zero increments, so the mean of equal vectors is exact.
    policy::ParamVector mean = order.front()->params;
    double seen = static_cast<double>(order.front()->sample_count);
    for (std::size_t k = 1; k < order.size(); ++k) {
        const double c = static_cast<double>(order[k]->sample_count);
        seen += c;
        const double w = c / seen;
        const auto& v = order[k]->params;
        for (std::size_t i = 0; i < dim; ++i) mean[i] += w * (v[i] - mean[i]);
    }
    for (std::size_t i = 0; i < dim; ++i) {
        double lo = mean[i], hi = mean[i];
        for (const auto* u : order) {
            lo = std::min(lo, u->params[i]);
            hi = std::max(hi, u->params[i]);
        }
        mean[i] = std::clamp(mean[i], lo, hi);
    }
    return mean;
}

double quantization_step(std::span<const double> values, unsigned bits) {
    if (bits < 2 || bits > 16) throw std::invalid_argument("quantize: bits must lie in [2, 16]");
    if (values.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double levels = static_cast<double>((1u << bits) - 1u);
    return (*hi - *lo) / levels;
}

std::vector<double> quantize(std::span<const double> values, unsigned bits, Rng& rng) {
    const double step = quantization_step(values, bits);
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("quantize: values must be finite");
    }
    std::vector<double> out(values.begin(), values.end());
    if (!(step > 0.0)) return out;

    const double lo = *std::min_element(values.begin(), values.end());
    const double hi = *std::max_element(values.begin(), values.end());
    const auto top = static_cast<long long>((1u << bits) - 1u);
    auto level = [&](long long k) { return k == top ? hi : lo + static_cast<double>(k) * step; };
    for (double& x : out) {
        const double pos = (x - lo) / step;
        const long long below = std::clamp(static_cast<long long>(std::floor(pos)), 0LL, top - 1);
        const double lower = level(below);
        const double upper = level(below + 1);
        // P(upper) = (x - lower) / (upper - lower) keeps E[q(x)] = x.
        const double frac = std::clamp((x - lower) / (upper - lower), 0.0, 1.0);
        x = uniform01(rng) < frac ? upper : lower;
    }
    return out;
}

std::uint64_t payload_bytes(std::size_t n_params, unsigned bits) {
    if (bits == 0) return 8ULL * n_params;
    return 16ULL + (static_cast<std::uint64_t>(n_params) * bits + 7) / 8;
}

double joint_reward(std::span<const double> rewards, std::span<const double> weights) {
    if (rewards.size() != weights.size()) {
        throw std::invalid_argument("joint_reward: rewards and weights differ in length");
    }
    double total = 0.0;
    for (std::size_t n = 0; n < rewards.size(); ++n) total += weights[n] * rewards[n];
    return total;
}

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) bytes[b] = static_cast<unsigned char>(v >> (8 * b));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
        throw std::runtime_error("checkpoint: truncated header");
    }
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const GlobalModel& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
    write_u64(out, model.round);
    write_u64(out, model.params.size());
    policy::write_params(out, model.params);
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

GlobalModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
    GlobalModel model;
    model.round = read_u64(in);
    const auto count = read_u64(in);
    model.params = policy::read_params(in, count);
    if (in.peek() != std::char_traits<char>::eof()) {
        throw std::runtime_error("checkpoint: trailing bytes in " + path.string());
    }
    return model;
}

std::uint64_t eval_seed(std::uint64_t run_seed, std::size_t round) {
    return stream_seed(run_seed, "eval", round);
}

FederatedServer::FederatedServer(rl::AgentSystem& system, GlobalModel initial,
                                 RoundConfig config, rl::TrainingParams training,
                                 EvalSettings eval, std::uint64_t seed)
    : system_(system),
      global_(std::move(initial)),
      previous_(global_.params),
      uploads_(system.size(), global_.params),
      config_(std::move(config)),
      training_(training),
      eval_(eval),
      seed_(seed) {
    config_.validate(system_.size());
    training_.validate();
    for (std::size_t i = 0; i < system_.size(); ++i) system_.agent(i).receive(global_.params);
}

rl::EvalResult FederatedServer::evaluate_global(const policy::ParamVector& params,
                                                std::size_t round) const {
    return system_.evaluate_shared(params, eval_seed(seed_, round), eval_.steps, eval_.episodes);
}

MetricsRecord FederatedServer::initial_record() const {
    const auto eval = evaluate_global(global_.params, global_.round);
    MetricsRecord r;
    r.seed = seed_;
    r.regime = "fl";
    r.round = global_.round;
    r.joint_reward = eval.joint_reward;
    r.per_agent_mean_reward = eval.mean_reward;
    r.bytes_uplinked = system_.size() * payload_bytes(global_.params.size(), 0);
    return r;
}

MetricsRecord FederatedServer::run_round(std::span<const std::size_t> selected) {
    const auto started = std::chrono::steady_clock::now();
    const std::size_t n = system_.size();
    std::vector<std::size_t> ids(selected.begin(), selected.end());
    std::sort(ids.begin(), ids.end());
    if (ids.size() != config_.participation ||
        std::adjacent_find(ids.begin(), ids.end()) != ids.end() ||
        (!ids.empty() && ids.back() >= n)) {
        throw std::invalid_argument("run_round: need exactly K distinct valid agent ids");
    }
    const std::size_t round = global_.round + 1;

    std::vector<bool> trainable(n, false);
    for (auto id : ids) {
        trainable[id] = true;
        system_.agent(id).receive(global_.params);
    }
    auto local = system_.local_round(trainable, training_);

    // Stragglers train but their update never arrives.
    Rng straggler = make_stream(seed_, "straggler", round);
    std::vector<rl::LocalUpdate> received;
    std::uint64_t bytes = 0;
    const std::size_t dim = global_.params.size();
    for (auto& update : local.updates) {
        if (config_.p_drop > 0.0 && uniform01(straggler) < config_.p_drop) continue;
        if (config_.quantization_bits > 0) {
            // The delta from the broadcast model is what gets compressed.
            std::vector<double> delta(dim);
            for (std::size_t k = 0; k < dim; ++k) delta[k] = update.params[k] - global_.params[k];
            Rng q = make_stream(seed_, "quantizer", round, update.agent_id);
            const auto coded = dequantize(quantize(delta, config_.quantization_bits, q));
            for (std::size_t k = 0; k < dim; ++k) update.params[k] = global_.params[k] + coded[k];
        }
        bytes += payload_bytes(dim, config_.quantization_bits);
        uploads_[update.agent_id] = update.params;
        received.push_back(std::move(update));
    }

    previous_ = global_.params;
    if (!received.empty()) global_.params = aggregate(received);
    global_.round = round;

    const auto eval = evaluate_global(global_.params, round);
    MetricsRecord r;
    r.seed = seed_;
    r.regime = "fl";
    r.round = round;
    r.joint_reward = eval.joint_reward;
    r.per_agent_mean_reward = eval.mean_reward;
    r.selected_agent_ids = ids;
    r.bytes_uplinked = bytes;
    if (eval_.record_timing) {
        r.wall_clock_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    }
    return r;
}

}  // namespace fedmarl::fed
