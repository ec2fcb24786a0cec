#include "fedmarl/selector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedmarl::selector {

namespace {

struct QLayout {
    std::size_t w1, b1, w2, u2, b2, v, b3, end;
    QLayout(std::size_t h1, std::size_t h2) {
        constexpr std::size_t F = QNet::kBlockWidth;
        w1 = 0;
        b1 = w1 + h1 * F;
        w2 = b1 + h1;
        u2 = w2 + h2 * h1;
        b2 = u2 + h2 * h1;
        v = b2 + h2;
        b3 = v + h2;
        end = b3 + 1;
    }
};

// Activations of every layer, kept for backpropagation.
struct QPass {
    std::vector<std::vector<double>> x, a1, h1, z2, h2;
    std::vector<double> context;
    std::vector<double> scores;
};

QPass run_qnet(const QNet& q, const SelectorObservation& obs) {
    const QLayout L(q.hidden1, q.hidden2);
    if (q.params.size() != L.end) throw std::invalid_argument("qnet: parameter count mismatch");
    if (obs.features.size() != obs.n_agents * SelectorObservation::kFeaturesPerAgent ||
        obs.n_agents == 0) {
        throw std::invalid_argument("qnet: observation has wrong dimension");
    }
    const auto& p = q.params;
    const std::size_t N = obs.n_agents, H1 = q.hidden1, H2 = q.hidden2;
    constexpr std::size_t F = QNet::kBlockWidth;

    QPass s;
    s.x.resize(N);
    s.a1.assign(N, std::vector<double>(H1));
    s.h1.assign(N, std::vector<double>(H1));
    s.z2.assign(N, std::vector<double>(H2));
    s.h2.assign(N, std::vector<double>(H2));
    s.context.assign(H1, 0.0);
    s.scores.assign(N, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        s.x[n] = obs.block(n);
        for (std::size_t r = 0; r < H1; ++r) {
            double a = p[L.b1 + r];
            for (std::size_t c = 0; c < F; ++c) a += p[L.w1 + r * F + c] * s.x[n][c];
            s.a1[n][r] = a;
            s.h1[n][r] = std::max(a, 0.0);
            s.context[r] += s.h1[n][r];
        }
    }
    for (double& c : s.context) c /= static_cast<double>(N);
    for (std::size_t n = 0; n < N; ++n) {
        double score = p[L.b3];
        for (std::size_t r = 0; r < H2; ++r) {
            double z = p[L.b2 + r];
            for (std::size_t c = 0; c < H1; ++c) {
                z += p[L.w2 + r * H1 + c] * s.h1[n][c] + p[L.u2 + r * H1 + c] * s.context[c];
            }
            s.z2[n][r] = z;
            s.h2[n][r] = std::max(z, 0.0);
            score += p[L.v + r] * s.h2[n][r];
        }
        s.scores[n] = score;
    }
    return s;
}

void check_selected(std::span<const std::size_t> selected, std::size_t n_agents) {
    for (auto id : selected) {
        if (id >= n_agents) throw std::invalid_argument("selector: agent id out of range");
    }
}

}  // namespace

std::vector<double> SelectorObservation::block(std::size_t n) const {
    std::vector<double> x(features.begin() + static_cast<std::ptrdiff_t>(n * kFeaturesPerAgent),
                          features.begin() + static_cast<std::ptrdiff_t>((n + 1) * kFeaturesPerAgent));
    x.push_back(round_feature);
    return x;
}

SelectorObservation build_observation(std::span<const policy::ParamVector> uploads,
                                      const policy::ParamVector& global,
                                      const policy::ParamVector& previous_global,
                                      std::span<const std::size_t> rounds_since_selected,
                                      std::size_t round, std::size_t horizon) {
    if (uploads.size() != rounds_since_selected.size() || uploads.empty()) {
        throw std::invalid_argument("build_observation: one upload and counter per agent");
    }
    if (previous_global.size() != global.size()) {
        throw std::invalid_argument("build_observation: global vectors differ in length");
    }
    const std::size_t dim = global.size();
    double dir_sq = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        const double d = global[k] - previous_global[k];
        dir_sq += d * d;
    }

    SelectorObservation obs;
    obs.n_agents = uploads.size();
    obs.features.reserve(uploads.size() * SelectorObservation::kFeaturesPerAgent);
    for (std::size_t n = 0; n < uploads.size(); ++n) {
        if (uploads[n].size() != dim) {
            throw std::invalid_argument("build_observation: upload length mismatch");
        }
        double delta_sq = 0.0, dot = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = uploads[n][k] - global[k];
            delta_sq += d * d;
            dot += d * (global[k] - previous_global[k]);
        }
        const double norm = std::sqrt(delta_sq);
        const double denom = norm * std::sqrt(dir_sq);
        const auto stale = static_cast<double>(rounds_since_selected[n]);
        obs.features.push_back(norm);
        obs.features.push_back(denom > 0.0 ? dot / denom : 0.0);
        obs.features.push_back(stale / (1.0 + stale));
    }
    obs.round_feature =
        horizon > 0 ? std::min(1.0, static_cast<double>(round) / static_cast<double>(horizon))
                    : 0.0;
    return obs;
}

std::size_t QNet::param_count(std::size_t hidden1, std::size_t hidden2) {
    return QLayout(hidden1, hidden2).end;
}

QNet QNet::zeros(std::size_t hidden1, std::size_t hidden2) {
    return QNet{hidden1, hidden2, std::vector<double>(param_count(hidden1, hidden2), 0.0)};
}

QNet QNet::random(std::uint64_t seed, std::size_t hidden1, std::size_t hidden2) {
    QNet q = zeros(hidden1, hidden2);
    const QLayout L(hidden1, hidden2);
    Rng rng = make_stream(seed, "selector-init");
    auto fill = [&](std::size_t from, std::size_t to, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t k = from; k < to; ++k) q.params[k] = uniform(rng, -bound, bound);
    };
    fill(L.w1, L.b1, kBlockWidth);
    fill(L.w2, L.b2, 2 * hidden1);
    fill(L.v, L.b3, hidden2);
    return q;
}

std::vector<double> score_agents(const QNet& qnet, const SelectorObservation& obs) {
    return run_qnet(qnet, obs).scores;
}

std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, Rng& rng) {
    if (k < 1 || k > n) throw std::invalid_argument("random_subset: K must satisfy 1 <= K <= N");
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(ids[i], ids[i + uniform_index(rng, n - i)]);
    }
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k,
                                      double epsilon, Rng& rng) {
    const std::size_t n = scores.size();
    if (k < 1 || k > n) throw std::invalid_argument("select_top_k: K must satisfy 1 <= K <= N");
    if (uniform01(rng) < epsilon) return random_subset(n, k, rng);
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    ids.resize(k);
    std::sort(ids.begin(), ids.end());
    return ids;
}

double selector_reward(double joint_reward_after, double joint_reward_before) {
    return joint_reward_after - joint_reward_before;
}

double td_target(const QNet& qnet, const Transition& t, double gamma_q) {
    const std::size_t k = t.selected.size();
    if (k == 0) throw std::invalid_argument("td_target: empty selection");
    double bootstrap = 0.0;
    if (gamma_q != 0.0) {
        auto next = score_agents(qnet, t.next_obs);
        if (k > next.size()) throw std::invalid_argument("td_target: K exceeds agent count");
        std::partial_sort(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(k), next.end(),
                          std::greater<>());
        for (std::size_t i = 0; i < k; ++i) bootstrap += next[i];
        bootstrap /= static_cast<double>(k);
    }
    return t.reward / static_cast<double>(k) + gamma_q * bootstrap;
}

double td_loss(const QNet& qnet, const SelectorObservation& obs,
               std::span<const std::size_t> selected, double target) {
    check_selected(selected, obs.n_agents);
    const auto scores = score_agents(qnet, obs);
    double loss = 0.0;
    for (auto id : selected) {
        const double e = scores[id] - target;
        loss += 0.5 * e * e;
    }
    return loss;
}

std::vector<double> td_loss_grad(const QNet& qnet, const SelectorObservation& obs,
                                 std::span<const std::size_t> selected, double target) {
    check_selected(selected, obs.n_agents);
    const QPass s = run_qnet(qnet, obs);
    const QLayout L(qnet.hidden1, qnet.hidden2);
    const auto& p = qnet.params;
    const std::size_t N = obs.n_agents, H1 = qnet.hidden1, H2 = qnet.hidden2;
    constexpr std::size_t F = QNet::kBlockWidth;

    std::vector<double> ds(N, 0.0);
    for (auto id : selected) ds[id] += s.scores[id] - target;

    std::vector<double> g(L.end, 0.0);
    std::vector<std::vector<double>> dz(N, std::vector<double>(H2, 0.0));
    std::vector<double> dcontext(H1, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        if (ds[n] == 0.0) continue;
        g[L.b3] += ds[n];
        for (std::size_t r = 0; r < H2; ++r) {
            g[L.v + r] += ds[n] * s.h2[n][r];
            dz[n][r] = s.z2[n][r] > 0.0 ? ds[n] * p[L.v + r] : 0.0;
        }
    }
    std::vector<std::vector<double>> dh1(N, std::vector<double>(H1, 0.0));
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t r = 0; r < H2; ++r) {
            const double d = dz[n][r];
            if (d == 0.0) continue;
            g[L.b2 + r] += d;
            for (std::size_t c = 0; c < H1; ++c) {
                g[L.w2 + r * H1 + c] += d * s.h1[n][c];
                g[L.u2 + r * H1 + c] += d * s.context[c];
                dh1[n][c] += p[L.w2 + r * H1 + c] * d;
                dcontext[c] += p[L.u2 + r * H1 + c] * d;
            }
        }
    }
    const double inv_n = 1.0 / static_cast<double>(N);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t r = 0; r < H1; ++r) {
            const double dh = dh1[n][r] + dcontext[r] * inv_n;
            const double da = s.a1[n][r] > 0.0 ? dh : 0.0;
            if (da == 0.0) continue;
            g[L.b1 + r] += da;
            for (std::size_t c = 0; c < F; ++c) g[L.w1 + r * F + c] += da * s.x[n][c];
        }
    }
    return g;
}

QNet q_update(const QNet& qnet, const Transition& t, double learning_rate, double gamma_q) {
    const double target = td_target(qnet, t, gamma_q);
    const auto grad = td_loss_grad(qnet, t.obs, t.selected, target);
    QNet next = qnet;
    for (std::size_t k = 0; k < grad.size(); ++k) next.params[k] -= learning_rate * grad[k];
    return next;
}

void SelectorConfig::validate() const {
    if (hidden < 1) throw std::invalid_argument("selector_hidden must be >= 1");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("selector_lr must be >= 0");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("selector_gamma must lie in [0, 1)");
    if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0) ||
        !(epsilon_end >= 0.0 && epsilon_end <= 1.0)) {
        throw std::invalid_argument("epsilon_start/epsilon_end must lie in [0, 1]");
    }
}

double epsilon_at(const SelectorConfig& c, std::size_t round) {
    if (c.epsilon_decay_rounds <= 1 || round >= c.epsilon_decay_rounds) {
        return round >= c.epsilon_decay_rounds ? c.epsilon_end : c.epsilon_start;
    }
    const double progress = static_cast<double>(round > 0 ? round - 1 : 0) /
                            static_cast<double>(c.epsilon_decay_rounds - 1);
    return c.epsilon_start + (c.epsilon_end - c.epsilon_start) * progress;
}

DqnSelector::DqnSelector(std::size_t n_agents, std::size_t k, SelectorConfig config,
                         std::uint64_t seed)
    : n_agents_(n_agents),
      k_(k),
      config_(config),
      seed_(seed),
      qnet_(QNet::random(seed, config.hidden, config.hidden)) {
    config_.validate();
    if (k_ < 1 || k_ > n_agents_) throw std::invalid_argument("DqnSelector: K must satisfy 1 <= K <= N");
}

std::vector<std::size_t> DqnSelector::choose(const SelectorObservation& obs, std::size_t round) {
    if (obs.n_agents != n_agents_) throw std::invalid_argument("DqnSelector: agent count mismatch");
    Rng rng = make_stream(seed_, "selector-epsilon", round);
    return select_top_k(score_agents(qnet_, obs), k_, epsilon_at(config_, round), rng);
}

void DqnSelector::learn(const Transition& transition) {
    qnet_ = q_update(qnet_, transition, config_.learning_rate, config_.gamma);
}

}  // namespace fedmarl::selector
