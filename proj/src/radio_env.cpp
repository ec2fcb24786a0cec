#include "fedmarl/radio_env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fedmarl/rng.hpp"

namespace fedmarl::radio {

namespace {

constexpr int kMaxPlacementAttempts = 10000;
constexpr double kObservationClip = 40.0;

}  // namespace

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double PathlossModel::gain(double distance_m) const {
    if (!(distance_m > 0.0)) {
        throw std::invalid_argument("path_gain: distance must be positive");
    }
    const double d = std::max(distance_m, d_ref);
    return g0 * std::pow(d_ref / d, exponent);
}

double path_gain(double distance_m, const PathlossModel& model) {
    return model.gain(distance_m);
}

GainMatrix::GainMatrix(std::size_t n, std::vector<double> values)
    : n_(n), g_(std::move(values)) {
    if (g_.size() != n_ * n_) {
        throw std::invalid_argument("GainMatrix: expected n*n entries");
    }
    for (double v : g_) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("GainMatrix: entries must be positive and finite");
        }
    }
}

GainMatrix GainMatrix::from_topology(const Topology& topology,
                                     const PathlossModel& model) {
    const std::size_t n = topology.size();
    std::vector<double> g(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            g[i * n + j] =
                model.gain(distance(topology.pairs[j].tx, topology.pairs[i].rx));
        }
    }
    return GainMatrix(n, std::move(g));
}

double GainMatrix::max() const {
    return g_.empty() ? 0.0 : *std::max_element(g_.begin(), g_.end());
}

Observation initial_observation(std::size_t m_channels) {
    Observation obs(observation_size(m_channels), 0.0);
    obs[m_channels] = 1.0;
    return obs;
}

Topology place_pairs(std::uint64_t seed, std::size_t n_pairs, double area_side,
                     double d_min, double d_max) {
    if (n_pairs < 1) throw std::invalid_argument("place_pairs: n_pairs must be >= 1");
    if (!(area_side > 0.0)) throw std::invalid_argument("place_pairs: area_side must be positive");
    if (!(d_min > 0.0)) throw std::invalid_argument("place_pairs: d_min must be positive");
    if (d_min > d_max) throw std::invalid_argument("place_pairs: d_min > d_max");
    if (d_max > area_side) throw std::invalid_argument("place_pairs: d_max > area_side");

    Rng rng = make_stream(seed, "topology");
    Topology topo;
    topo.area_side = area_side;
    topo.pairs.reserve(n_pairs);
    for (std::size_t n = 0; n < n_pairs; ++n) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
            const Point tx{uniform(rng, 0.0, area_side), uniform(rng, 0.0, area_side)};
            const double d = uniform(rng, d_min, d_max);
            const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            const Point rx{tx.x + d * std::cos(theta), tx.y + d * std::sin(theta)};
            if (rx.x < 0.0 || rx.x > area_side || rx.y < 0.0 || rx.y > area_side) continue;
            // Rounding in cos/sin can move the realized length off the band.
            const double realized = distance(tx, rx);
            if (realized < d_min || realized > d_max) continue;
            topo.pairs.push_back({tx, rx});
            placed = true;
        }
        if (!placed) {
            throw std::runtime_error("place_pairs: infeasible geometry for pair " +
                                     std::to_string(n));
        }
    }
    return topo;
}

double sinr(std::size_t agent, const JointAction& joint, const GainMatrix& gains,
            double tx_power, double noise_power) {
    if (agent >= joint.size() || joint.size() != gains.size()) {
        throw std::invalid_argument("sinr: agent/joint/gain size mismatch");
    }
    const int channel = joint[agent];
    if (channel == kIdle) throw std::logic_error("sinr: agent is idle");
    if (!(tx_power > 0.0) || !(noise_power > 0.0)) {
        throw std::invalid_argument("sinr: powers must be positive");
    }
    double denominator = noise_power;
    for (std::size_t j = 0; j < joint.size(); ++j) {
        if (j != agent && joint[j] == channel) {
            denominator += tx_power * gains(agent, j);
        }
    }
    return tx_power * gains(agent, agent) / denominator;
}

double capacity_reward(double sinr_value) {
    if (!(sinr_value >= 0.0)) {
        throw std::invalid_argument("capacity_reward: sinr must be nonnegative");
    }
    return std::log2(1.0 + sinr_value);
}

PuOccupancy pu_process(std::uint64_t seed, std::uint64_t timestep,
                       std::size_t m_channels, double duty) {
    if (!(duty >= 0.0 && duty <= 1.0)) {
        throw std::invalid_argument("pu_process: duty must lie in [0, 1]");
    }
    Rng rng = make_stream(seed, "pu", timestep);
    PuOccupancy occupied(m_channels);
    for (auto& flag : occupied) flag = uniform01(rng) < duty ? 1 : 0;
    return occupied;
}

StepResult step(const Topology& topology, const GainMatrix& gains,
                const PuOccupancy& pu, const JointAction& joint,
                double tx_power, double noise_power) {
    const std::size_t n = topology.size();
    const std::size_t m = pu.size();
    if (joint.size() != n || gains.size() != n) {
        throw std::invalid_argument("step: joint action/gain size mismatch");
    }
    for (int a : joint) {
        if (a != kIdle && (a < 0 || static_cast<std::size_t>(a) >= m)) {
            throw std::invalid_argument("step: invalid channel in joint action");
        }
    }

    // Transmissions that survive PU blocking.
    JointAction effective = joint;
    for (auto& a : effective) {
        if (a != kIdle && pu[static_cast<std::size_t>(a)]) a = kIdle;
    }

    StepResult out;
    out.rewards.assign(n, 0.0);
    out.observations.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (effective[i] != kIdle) {
            out.rewards[i] =
                capacity_reward(sinr(i, effective, gains, tx_power, noise_power));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        Observation obs(observation_size(m), 0.0);
        obs[channel_to_action(joint[i], m)] = 1.0;
        for (std::size_t c = 0; c < m; ++c) {
            double power = noise_power;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != i && effective[j] == static_cast<int>(c)) {
                    power += tx_power * gains(i, j);
                }
            }
            obs[m + 1 + c] =
                std::clamp(std::log(power / noise_power), -kObservationClip, kObservationClip);
            obs[2 * m + 1 + c] = pu[c] ? 1.0 : 0.0;
        }
        obs[3 * m + 1] = out.rewards[i];
        out.observations.push_back(std::move(obs));
    }
    return out;
}

void RadioConfig::validate() const {
    if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
    if (m_channels < 1) throw std::invalid_argument("m_channels must be >= 1");
    if (!(area_side > 0.0)) throw std::invalid_argument("area_side must be positive");
    if (!(d_min > 0.0) || d_min > d_max || d_max > area_side) {
        throw std::invalid_argument("d_min/d_max must satisfy 0 < d_min <= d_max <= area_side");
    }
    if (!(pathloss.exponent > 0.0)) throw std::invalid_argument("pathloss_exponent must be positive");
    if (!(pathloss.d_ref > 0.0)) throw std::invalid_argument("d_ref must be positive");
    if (!(pathloss.g0 > 0.0)) throw std::invalid_argument("g0 must be positive");
    if (!(tx_power > 0.0)) throw std::invalid_argument("tx_power must be positive");
    if (!(noise_power > 0.0)) throw std::invalid_argument("noise_power must be positive");
    if (!(pu_duty >= 0.0 && pu_duty <= 1.0)) throw std::invalid_argument("pu_duty must lie in [0, 1]");
}

Environment::Environment(const RadioConfig& config, std::uint64_t topology_seed)
    : Environment(config, place_pairs(topology_seed, config.n_pairs, config.area_side,
                                      config.d_min, config.d_max)) {}

Environment::Environment(const RadioConfig& config, Topology topology)
    : config_(config),
      topology_(std::move(topology)),
      gains_(GainMatrix::from_topology(topology_, config.pathloss)) {
    config_.validate();
    config_.n_pairs = topology_.size();
}

PuOccupancy Environment::pu(std::uint64_t pu_seed, std::uint64_t timestep) const {
    return pu_process(pu_seed, timestep, config_.m_channels, config_.pu_duty);
}

StepResult Environment::step(const PuOccupancy& pu, const JointAction& joint) const {
    return radio::step(topology_, gains_, pu, joint, config_.tx_power, config_.noise_power);
}

}  // namespace fedmarl::radio
