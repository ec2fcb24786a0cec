#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedmarl/fed_core.hpp"
#include "fedmarl/policy_net.hpp"
#include "fedmarl/radio_env.hpp"
#include "fedmarl/rl_core.hpp"
#include "fedmarl/selector.hpp"

namespace fedmarl {

/// A configuration problem attributable to one key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& message)
        : std::invalid_argument("config key '" + key + "': " + message), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class Regime { kFederated, kDistributed, kRandom };

std::string to_string(Regime regime);
Regime parse_regime(const std::string& text);

enum class SelectionMode { kRandom, kDqn };

/// Every knob of an experiment. Files are flat UTF-8 `key = value` lines with
/// `#` comments; list values are comma separated.
struct ExperimentConfig {
    radio::RadioConfig radio;
    std::size_t hidden_width = 16;
    rl::TrainingParams training;
    std::size_t participation = 8;
    unsigned quantization_bits = 0;
    std::vector<double> agent_weights;  // empty means uniform
    double p_drop = 0.0;
    SelectionMode selection = SelectionMode::kRandom;
    selector::SelectorConfig selector;
    std::size_t rounds = 300;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<Regime> regimes{Regime::kFederated, Regime::kDistributed};
    std::size_t eval_episodes = 1;
    bool record_timing = false;
    bool write_checkpoints = false;

    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Assigns one key from its textual value. Throws ConfigError.
    void set(const std::string& key, const std::string& value);
    /// Checks every cross-key precondition. Throws ConfigError naming the key.
    void validate() const;
    /// Canonical text form; parse(to_text()) reproduces the config.
    std::string to_text() const;

    policy::Shape shape() const { return {radio.m_channels, hidden_width}; }
    fed::RoundConfig round_config() const;
    fed::EvalSettings eval_settings() const;
    /// Normalized joint-reward weights.
    std::vector<double> weights() const;
};

/// Names of all recognised keys, in canonical order.
const std::vector<std::string>& config_keys();

}  // namespace fedmarl
