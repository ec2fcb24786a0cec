#include "fedmarl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "fedmarl/metrics.hpp"

namespace fedmarl {

std::string to_string(Regime regime) {
    switch (regime) {
        case Regime::kFederated: return "fl";
        case Regime::kDistributed: return "distributed";
        case Regime::kRandom: return "random";
    }
    return "?";
}

Regime parse_regime(const std::string& text) {
    if (text == "fl") return Regime::kFederated;
    if (text == "distributed") return Regime::kDistributed;
    if (text == "random") return Regime::kRandom;
    throw std::invalid_argument("unknown regime '" + text + "'");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

double to_real(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a finite number, got '" + v + "'");
    }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
    }
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::string real_text(double x) { return format_real(x); }

template <typename T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& f) {
    std::string out;
    for (std::size_t k = 0; k < items.size(); ++k) {
        if (k) out += ',';
        out += f(items[k]);
    }
    return out;
}

struct KeySpec {
    std::string name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define REAL_KEY(key, field)                                                              \
    KeySpec {                                                                             \
        key, [](ExperimentConfig& c, const std::string& v) { c.field = to_real(key, v); }, \
            [](const ExperimentConfig& c) { return real_text(c.field); }                  \
    }
#define UINT_KEY(key, field, type)                                                        \
    KeySpec {                                                                             \
        key,                                                                              \
            [](ExperimentConfig& c, const std::string& v) {                               \
                c.field = static_cast<type>(to_uint(key, v));                             \
            },                                                                            \
            [](const ExperimentConfig& c) { return std::to_string(c.field); }             \
    }
#define BOOL_KEY(key, field)                                                              \
    KeySpec {                                                                             \
        key, [](ExperimentConfig& c, const std::string& v) { c.field = to_bool(key, v); }, \
            [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); } \
    }

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = {
        UINT_KEY("n_pairs", radio.n_pairs, std::size_t),
        UINT_KEY("m_channels", radio.m_channels, std::size_t),
        REAL_KEY("area_side", radio.area_side),
        REAL_KEY("d_min", radio.d_min),
        REAL_KEY("d_max", radio.d_max),
        REAL_KEY("pathloss_exponent", radio.pathloss.exponent),
        REAL_KEY("d_ref", radio.pathloss.d_ref),
        REAL_KEY("g0", radio.pathloss.g0),
        REAL_KEY("tx_power", radio.tx_power),
        REAL_KEY("noise_power", radio.noise_power),
        REAL_KEY("pu_duty", radio.pu_duty),
        UINT_KEY("episode_len", training.episode_len, std::size_t),
        UINT_KEY("local_episodes", training.local_episodes, std::size_t),
        REAL_KEY("learning_rate", training.learning_rate),
        REAL_KEY("gamma", training.gamma),
        REAL_KEY("grad_clip", training.grad_clip),
        UINT_KEY("hidden_width", hidden_width, std::size_t),
        UINT_KEY("participation", participation, std::size_t),
        UINT_KEY("quantization_bits", quantization_bits, unsigned),
        KeySpec{"agent_weights",
                [](ExperimentConfig& c, const std::string& v) {
                    c.agent_weights.clear();
                    if (v == "uniform") return;
                    for (const auto& item : split_list(v)) {
                        c.agent_weights.push_back(to_real("agent_weights", item));
                    }
                },
                [](const ExperimentConfig& c) {
                    if (c.agent_weights.empty()) return std::string("uniform");
                    return join<double>(c.agent_weights, real_text);
                }},
        REAL_KEY("p_drop", p_drop),
        KeySpec{"selector",
                [](ExperimentConfig& c, const std::string& v) {
                    if (v == "random") c.selection = SelectionMode::kRandom;
                    else if (v == "dqn") c.selection = SelectionMode::kDqn;
                    else throw ConfigError("selector", "expected random or dqn, got '" + v + "'");
                },
                [](const ExperimentConfig& c) {
                    return std::string(c.selection == SelectionMode::kDqn ? "dqn" : "random");
                }},
        UINT_KEY("selector_hidden", selector.hidden, std::size_t),
        REAL_KEY("selector_lr", selector.learning_rate),
        REAL_KEY("selector_gamma", selector.gamma),
        REAL_KEY("epsilon_start", selector.epsilon_start),
        REAL_KEY("epsilon_end", selector.epsilon_end),
        UINT_KEY("epsilon_decay_rounds", selector.epsilon_decay_rounds, std::size_t),
        UINT_KEY("rounds", rounds, std::size_t),
        KeySpec{"seeds",
                [](ExperimentConfig& c, const std::string& v) {
                    c.seeds.clear();
                    for (const auto& item : split_list(v)) c.seeds.push_back(to_uint("seeds", item));
                },
                [](const ExperimentConfig& c) {
                    return join<std::uint64_t>(c.seeds, [](const std::uint64_t& s) {
                        return std::to_string(s);
                    });
                }},
        KeySpec{"regime",
                [](ExperimentConfig& c, const std::string& v) {
                    c.regimes.clear();
                    for (const auto& item : split_list(v)) {
                        try {
                            c.regimes.push_back(parse_regime(item));
                        } catch (const std::invalid_argument& e) {
                            throw ConfigError("regime", e.what());
                        }
                    }
                },
                [](const ExperimentConfig& c) {
                    return join<Regime>(c.regimes, [](const Regime& r) { return to_string(r); });
                }},
        UINT_KEY("eval_episodes", eval_episodes, std::size_t),
        BOOL_KEY("record_timing", record_timing),
        BOOL_KEY("write_checkpoints", write_checkpoints),
    };
    return table;
}

#undef REAL_KEY
#undef UINT_KEY
#undef BOOL_KEY

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& k : key_table()) out.push_back(k.name);
        return out;
    }();
    return names;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    for (const auto& k : key_table()) {
        if (k.name == key) {
            k.set(*this, value);
            return;
        }
    }
    throw ConfigError(key, "unknown key");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::set<std::string> seen;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (!seen.insert(key).second) throw ConfigError(key, "given more than once");
        cfg.set(key, trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string ExperimentConfig::to_text() const {
    std::string out;
    for (const auto& k : key_table()) out += k.name + " = " + k.get(*this) + "\n";
    return out;
}

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const char* key, const char* message) {
        if (!ok) throw ConfigError(key, message);
    };
    const auto& r = radio;
    require(r.n_pairs >= 1, "n_pairs", "must be >= 1");
    require(r.m_channels >= 1, "m_channels", "must be >= 1");
    require(r.area_side > 0.0, "area_side", "must be positive");
    require(r.d_min > 0.0, "d_min", "must be positive");
    require(r.d_min <= r.d_max, "d_max", "must be >= d_min");
    require(r.d_max <= r.area_side, "d_max", "must be <= area_side");
    require(r.pathloss.exponent > 0.0, "pathloss_exponent", "must be positive");
    require(r.pathloss.d_ref > 0.0, "d_ref", "must be positive");
    require(r.pathloss.g0 > 0.0, "g0", "must be positive");
    require(r.tx_power > 0.0, "tx_power", "must be positive");
    require(r.noise_power > 0.0, "noise_power", "must be positive");
    require(r.pu_duty >= 0.0 && r.pu_duty <= 1.0, "pu_duty", "must lie in [0, 1]");
    require(training.episode_len >= 1, "episode_len", "must be >= 1");
    require(training.local_episodes >= 1, "local_episodes", "must be >= 1");
    require(training.learning_rate >= 0.0, "learning_rate", "must be >= 0");
    require(training.gamma >= 0.0 && training.gamma <= 1.0, "gamma", "must lie in [0, 1]");
    require(hidden_width >= 1, "hidden_width", "must be >= 1");
    require(participation >= 1 && participation <= r.n_pairs, "participation",
            "must satisfy 1 <= K <= n_pairs");
    require(quantization_bits == 0 || (quantization_bits >= 2 && quantization_bits <= 16),
            "quantization_bits", "must be 0 or in [2, 16]");
    require(agent_weights.empty() || agent_weights.size() == r.n_pairs, "agent_weights",
            "needs one entry per agent");
    require(std::all_of(agent_weights.begin(), agent_weights.end(),
                        [](double w) { return w >= 0.0; }),
            "agent_weights", "must be nonnegative");
    require(agent_weights.empty() ||
                std::any_of(agent_weights.begin(), agent_weights.end(),
                            [](double w) { return w > 0.0; }),
            "agent_weights", "must not all be zero");
    require(p_drop >= 0.0 && p_drop <= 1.0, "p_drop", "must lie in [0, 1]");
    require(selector.hidden >= 1, "selector_hidden", "must be >= 1");
    require(selector.learning_rate >= 0.0, "selector_lr", "must be >= 0");
    require(selector.gamma >= 0.0 && selector.gamma < 1.0, "selector_gamma", "must lie in [0, 1)");
    require(selector.epsilon_start >= 0.0 && selector.epsilon_start <= 1.0, "epsilon_start",
            "must lie in [0, 1]");
    require(selector.epsilon_end >= 0.0 && selector.epsilon_end <= 1.0, "epsilon_end",
            "must lie in [0, 1]");
    require(rounds >= 1, "rounds", "must be >= 1");
    require(!seeds.empty(), "seeds", "must list at least one seed");
    require(std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() == seeds.size(), "seeds",
            "must be distinct");
    require(!regimes.empty(), "regime", "must list at least one regime");
    require(std::set<Regime>(regimes.begin(), regimes.end()).size() == regimes.size(), "regime",
            "must be distinct");
    require(eval_episodes >= 1, "eval_episodes", "must be >= 1");
}

fed::RoundConfig ExperimentConfig::round_config() const {
    fed::RoundConfig rc;
    rc.participation = participation;
    rc.quantization_bits = quantization_bits;
    rc.agent_weights = agent_weights;
    rc.p_drop = p_drop;
    rc.validate(radio.n_pairs);
    return rc;
}

fed::EvalSettings ExperimentConfig::eval_settings() const {
    return {training.episode_len, eval_episodes, record_timing};
}

std::vector<double> ExperimentConfig::weights() const { return round_config().agent_weights; }

}  // namespace fedmarl
