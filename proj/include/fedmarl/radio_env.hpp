#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fedmarl::radio {

/// Joint-action entry meaning "does not transmit".
inline constexpr int kIdle = -1;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double distance(Point a, Point b);

struct LinkPair {
    Point tx;
    Point rx;
};

struct Topology {
    double area_side = 0.0;
    std::vector<LinkPair> pairs;

    std::size_t size() const { return pairs.size(); }
};

/// Log-distance pathloss: gain = g0 * (d_ref / d)^exponent, with d clamped
/// below at d_ref.
struct PathlossModel {
    double exponent = 3.0;
    double d_ref = 1.0;
    double g0 = 1e-3;

    double gain(double distance_m) const;
};

/// g(i, j) is the linear power gain from transmitter j to receiver i.
class GainMatrix {
public:
    GainMatrix() = default;
    GainMatrix(std::size_t n, std::vector<double> values);

    static GainMatrix from_topology(const Topology& topology,
                                    const PathlossModel& model);

    std::size_t size() const { return n_; }
    double operator()(std::size_t rx, std::size_t tx) const {
        return g_[rx * n_ + tx];
    }
    double max() const;

private:
    std::size_t n_ = 0;
    std::vector<double> g_;
};

/// occupied[c] is true when a primary user holds channel c.
using PuOccupancy = std::vector<std::uint8_t>;

/// One entry per agent: kIdle or a channel index in [0, M).
using JointAction = std::vector<int>;

/// Per-agent feature vector of length 3M+2:
///   [0, M]        one-hot of own last action (index M is idle)
///   [M+1, 2M]     ln((noise + interference on c) / noise) at own receiver
///   [2M+1, 3M]    PU occupancy flags of the previous timestep
///   [3M+1]        own last reward
using Observation = std::vector<double>;

constexpr std::size_t observation_size(std::size_t m_channels) {
    return 3 * m_channels + 2;
}

/// Observation before the first step of an episode: last action idle,
/// noise-only interference, no PU flags, zero reward.
Observation initial_observation(std::size_t m_channels);

/// Policy output index -> joint-action entry (index M maps to kIdle).
constexpr int action_to_channel(std::size_t action, std::size_t m_channels) {
    return action < m_channels ? static_cast<int>(action) : kIdle;
}
constexpr std::size_t channel_to_action(int channel, std::size_t m_channels) {
    return channel == kIdle ? m_channels : static_cast<std::size_t>(channel);
}

Topology place_pairs(std::uint64_t seed, std::size_t n_pairs, double area_side,
                     double d_min, double d_max);

double path_gain(double distance_m, const PathlossModel& model = {});

/// SINR of agent i on the channel it transmits on. Interferers are exactly
/// the other agents whose joint entry equals agent i's channel. Calling with
/// an idle agent throws.
double sinr(std::size_t agent, const JointAction& joint, const GainMatrix& gains,
            double tx_power, double noise_power);

/// log2(1 + sinr) with bandwidth normalized to 1.
double capacity_reward(double sinr_value);

PuOccupancy pu_process(std::uint64_t seed, std::uint64_t timestep,
                       std::size_t m_channels, double duty);

struct StepResult {
    std::vector<double> rewards;
    std::vector<Observation> observations;
};

/// Transmissions on PU-occupied channels are suppressed: they earn zero and
/// cause no interference. Pure in all arguments.
StepResult step(const Topology& topology, const GainMatrix& gains,
                const PuOccupancy& pu, const JointAction& joint,
                double tx_power, double noise_power);

struct RadioConfig {
    std::size_t n_pairs = 8;
    std::size_t m_channels = 4;
    double area_side = 400.0;
    double d_min = 10.0;
    double d_max = 50.0;
    PathlossModel pathloss;
    double tx_power = 1.0;
    double noise_power = 1e-9;
    double pu_duty = 0.2;

    void validate() const;
};

/// A placed topology plus its gains and the PU process parameters.
class Environment {
public:
    Environment(const RadioConfig& config, std::uint64_t topology_seed);
    Environment(const RadioConfig& config, Topology topology);

    const RadioConfig& config() const { return config_; }
    const Topology& topology() const { return topology_; }
    const GainMatrix& gains() const { return gains_; }
    std::size_t n_agents() const { return topology_.size(); }
    std::size_t m_channels() const { return config_.m_channels; }

    PuOccupancy pu(std::uint64_t pu_seed, std::uint64_t timestep) const;
    StepResult step(const PuOccupancy& pu, const JointAction& joint) const;

private:
    RadioConfig config_;
    Topology topology_;
    GainMatrix gains_;
};

}  // namespace fedmarl::radio
