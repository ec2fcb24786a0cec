#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "fedmarl/config.hpp"
#include "fedmarl/harness.hpp"
#include "fedmarl/metrics.hpp"

using namespace fedmarl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("fedmarl_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig tiny() {
    auto cfg = ExperimentConfig::parse(
        "rounds = 6\n"
        "seeds = 1, 2\n"
        "episode_len = 10\n"
        "local_episodes = 1\n");
    return cfg;
}

std::string config_error_key(const std::string& text) {
    try {
        ExperimentConfig::parse(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "";
}

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = ExperimentConfig::parse(
        "# comment line\n"
        "n_pairs = 4   # trailing comment\n"
        "participation=2\n"
        "regime = fl, random\n"
        "agent_weights = 1, 1, 2, 4\n"
        "selector = dqn\n"
        "\n");
    CHECK(cfg.radio.n_pairs == 4);
    CHECK(cfg.participation == 2);
    CHECK(cfg.regimes == std::vector<Regime>{Regime::kFederated, Regime::kRandom});
    CHECK(cfg.selection == SelectionMode::kDqn);
    CHECK(cfg.weights() == std::vector<double>{0.125, 0.125, 0.25, 0.5});

    const ExperimentConfig defaults;
    CHECK(defaults.radio.n_pairs == 8);
    CHECK(defaults.radio.m_channels == 4);
    CHECK(defaults.rounds == 300);
    CHECK(defaults.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
    CHECK(defaults.shape().param_count() == 581);

    // Every key survives a round trip through the text form.
    const auto again = ExperimentConfig::parse(cfg.to_text());
    CHECK(again.to_text() == cfg.to_text());
    for (const auto& key : config_keys()) CHECK(cfg.to_text().find(key + " = ") != std::string::npos);
}

TEST_CASE("invalid configs name the offending key") {
    CHECK(config_error_key("participation = 9\n") == "participation");
    CHECK(config_error_key("d_min = 60\n") == "d_max");
    CHECK(config_error_key("pu_duty = 1.5\n") == "pu_duty");
    CHECK(config_error_key("learning_rate = -1\n") == "learning_rate");
    CHECK(config_error_key("quantization_bits = 1\n") == "quantization_bits");
    CHECK(config_error_key("colour = blue\n") == "colour");
    CHECK(config_error_key("rounds = 3\nrounds = 4\n") == "rounds");
    CHECK(config_error_key("rounds = many\n") == "rounds");
    CHECK(config_error_key("regime = fl, central\n") == "regime");
    CHECK(config_error_key("seeds = 1, 1\n") == "seeds");
    CHECK(config_error_key("agent_weights = 1, 2\n") == "agent_weights");
    CHECK(config_error_key("selector = greedy\n") == "selector");
    CHECK_THROWS_AS(ExperimentConfig::parse("just words\n"), std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/config.txt"), std::runtime_error);
}

TEST_CASE("metrics csv round trip") {
    const std::vector<MetricsRecord> records{
        {1, "fl", 0, 3.25, 0.40625, {}, 37184, 0.0},
        {1, "fl", 1, 1.0 / 3.0, 0.1, {0, 3, 7}, 9296, 12.5},
    };
    std::stringstream buf;
    write_metrics_header(buf);
    for (const auto& r : records) write_metrics_row(buf, r);
    const std::string text = buf.str();
    CHECK(text.substr(0, text.find('\n')) == kMetricsHeader);
    CHECK(text.find("0;3;7") != std::string::npos);
    CHECK(text.find("0.333333333") != std::string::npos);

    std::stringstream in(text);
    const auto back = read_metrics(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == records[0]);
    CHECK(back[1].selected_agent_ids == records[1].selected_agent_ids);
    CHECK(back[1].joint_reward == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("malformed metrics are rejected with the line number") {
    auto message = [](const std::string& text) {
        std::stringstream in(text);
        try {
            read_metrics(in);
        } catch (const std::exception& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    const std::string header = std::string(kMetricsHeader) + "\n";
    CHECK(message("a,b\n").find("line 1") != std::string::npos);
    CHECK(message(header + "1,fl,0,1,1,,0,0\n1,fl,1,x,1,,0,0\n").find("line 3") != std::string::npos);
    CHECK(message(header + "1,fl,0,1,1,,0\n").find("line 2") != std::string::npos);
    CHECK(message(header + "1,fl,0,nan,1,,0,0\n").find("line 2") != std::string::npos);
}

TEST_CASE("run_experiment writes one row per seed, regime and round, deterministically") {
    const auto dir = fresh_dir("run");
    const auto cfg = tiny();
    const auto path = harness::run_experiment(cfg, dir);
    CHECK(path == dir / "metrics.csv");
    CHECK_FALSE(fs::exists(dir / "metrics.csv.partial"));
    std::ifstream in(path);
    const auto records = read_metrics(in);
    CHECK(records.size() == 2 * 2 * 6);

    const auto again = harness::run_experiment(cfg, dir, "again.csv");
    CHECK(slurp(path) == slurp(again));
    fs::remove_all(dir);
}

TEST_CASE("a failing run leaves no partial file behind") {
    const auto dir = fresh_dir("fail");
    auto cfg = tiny();
    cfg.write_checkpoints = true;
    // A directory where the checkpoint file should go makes the run fail late.
    fs::create_directories(harness::checkpoint_path(dir, 1));
    CHECK_THROWS(harness::run_experiment(cfg, dir));
    CHECK_FALSE(fs::exists(dir / "metrics.csv"));
    CHECK_FALSE(fs::exists(dir / "metrics.csv.partial"));
    fs::remove_all(dir);
}

TEST_CASE("checkpoints hold the final global model") {
    const auto dir = fresh_dir("ckpt");
    auto cfg = tiny();
    cfg.seeds = {3};
    cfg.write_checkpoints = true;
    harness::run_experiment(cfg, dir);
    const auto model = fed::load_checkpoint(harness::checkpoint_path(dir, 3));
    CHECK(model.round == cfg.rounds - 1);
    CHECK(model.params.size() == cfg.shape().param_count());
    fs::remove_all(dir);
}

TEST_CASE("sweep writes one csv per value") {
    const auto dir = fresh_dir("sweep");
    auto cfg = tiny();
    cfg.seeds = {1};
    cfg.regimes = {Regime::kFederated};
    const auto paths = harness::sweep(cfg, "participation", {"2", "4", "8"}, dir);
    REQUIRE(paths.size() == 3);
    CHECK(paths[0].filename() == "metrics_participation_2.csv");
    const auto rows = harness::summarize(paths);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].participation == 2);
    CHECK(rows[1].participation == 4);
    CHECK(rows[2].participation == 8);
    CHECK_THROWS_AS(harness::sweep(cfg, "participation", {"2", "12"}, dir), ConfigError);
    CHECK_THROWS_AS(harness::sweep(cfg, "bogus", {"1"}, dir), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("summaries") {
    SUBCASE("single seed, single regime gives that run's final-window mean") {
        std::vector<MetricsRecord> rows;
        for (std::size_t r = 0; r < 10; ++r) rows.push_back({1, "fl", r, double(r), 0.0, {}, 100, 0.0});
        const auto s = harness::summarize_records("x", rows);
        REQUIRE(s.size() == 1);
        CHECK(s[0].median_final_reward == 8.5);  // rounds 8 and 9
        CHECK(s[0].iqr_final_reward == 0.0);
        CHECK(s[0].median_uplink_bytes == 1000.0);
        CHECK(harness::final_window_mean(rows) == 8.5);
    }
    SUBCASE("distributed bytes are the initial broadcast only; identical files agree") {
        const auto dir = fresh_dir("summary");
        auto cfg = tiny();
        cfg.regimes = {Regime::kDistributed};
        const auto a = harness::run_experiment(cfg, dir, "a.csv");
        const auto b = harness::run_experiment(cfg, dir, "b.csv");
        const auto rows = harness::summarize({a, b});
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].median_uplink_bytes == 8.0 * 8.0 * 581.0);
        CHECK(rows[0].median_final_reward == rows[1].median_final_reward);
        CHECK(rows[0].iqr_final_reward == rows[1].iqr_final_reward);
        CHECK(rows[0].seeds == 2);
        std::stringstream out;
        harness::write_summary(out, rows);
        CHECK(out.str().rfind("source,regime,k,seeds,", 0) == 0);
        fs::remove_all(dir);
    }
    SUBCASE("bad inputs") {
        CHECK_THROWS(harness::summarize({}));
        CHECK_THROWS(harness::summarize({"/nonexistent/metrics.csv"}));
    }
}

TEST_CASE("quantile uses linear interpolation") {
    CHECK(harness::quantile({1, 2, 3, 4, 5}, 0.5) == 3.0);
    CHECK(harness::quantile({1, 2, 3, 4}, 0.5) == 2.5);
    CHECK(harness::quantile({4, 1, 3, 2}, 0.25) == 1.75);
    CHECK(harness::quantile({7}, 0.75) == 7.0);
    CHECK_THROWS(harness::quantile({}, 0.5));
}
