#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fedmarl/baselines.hpp"
#include "fedmarl/config.hpp"
#include "fedmarl/experiment.hpp"
#include "fedmarl/fed_core.hpp"
#include "fedmarl/harness.hpp"
#include "fedmarl/selector.hpp"

namespace py = pybind11;
using namespace fedmarl;

namespace {

// Python callers pass a seed instead of holding a generator object.
std::vector<double> quantize_seeded(const std::vector<double>& values, unsigned bits,
                                    std::uint64_t seed) {
    Rng rng(seed);
    return fed::quantize(values, bits, rng);
}

std::vector<std::size_t> select_top_k_seeded(const std::vector<double>& scores, std::size_t k,
                                             double epsilon, std::uint64_t seed) {
    Rng rng(seed);
    return selector::select_top_k(scores, k, epsilon, rng);
}

std::vector<double> aggregate_pairs(
    const std::vector<std::pair<std::vector<double>, std::size_t>>& updates) {
    std::vector<rl::LocalUpdate> ups;
    for (std::size_t i = 0; i < updates.size(); ++i) {
        ups.push_back({i, updates[i].first, updates[i].second});
    }
    return fed::aggregate(ups);
}

Trajectory make_trajectory(std::vector<std::vector<double>> observations,
                           std::vector<std::size_t> actions, std::vector<double> rewards) {
    return Trajectory{std::move(observations), std::move(actions), std::move(rewards)};
}

RunResult run_one(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& regime) {
    return harness::run_regime(cfg, seed, parse_regime(regime));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Federated multi-agent RL for dynamic spectrum access";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    // radio environment
    py::class_<radio::Point>(m, "Point")
        .def(py::init<>())
        .def(py::init([](double x, double y) { return radio::Point{x, y}; }))
        .def_readwrite("x", &radio::Point::x)
        .def_readwrite("y", &radio::Point::y);
    py::class_<radio::LinkPair>(m, "LinkPair")
        .def_readonly("tx", &radio::LinkPair::tx)
        .def_readonly("rx", &radio::LinkPair::rx);
    py::class_<radio::Topology>(m, "Topology")
        .def_readonly("area_side", &radio::Topology::area_side)
        .def_readonly("pairs", &radio::Topology::pairs)
        .def("__len__", &radio::Topology::size);
    py::class_<radio::PathlossModel>(m, "PathlossModel")
        .def(py::init<>())
        .def_readwrite("exponent", &radio::PathlossModel::exponent)
        .def_readwrite("d_ref", &radio::PathlossModel::d_ref)
        .def_readwrite("g0", &radio::PathlossModel::g0);
    py::class_<radio::GainMatrix>(m, "GainMatrix")
        .def(py::init<std::size_t, std::vector<double>>(), py::arg("n"), py::arg("values"))
        .def_static("from_topology", &radio::GainMatrix::from_topology)
        .def("__call__", &radio::GainMatrix::operator(), py::arg("rx"), py::arg("tx"))
        .def("__len__", &radio::GainMatrix::size);
    py::class_<radio::StepResult>(m, "StepResult")
        .def_readonly("rewards", &radio::StepResult::rewards)
        .def_readonly("observations", &radio::StepResult::observations);

    m.attr("IDLE") = radio::kIdle;
    m.def("distance", &radio::distance);
    m.def("place_pairs", &radio::place_pairs, py::arg("seed"), py::arg("n_pairs"),
          py::arg("area_side"), py::arg("d_min"), py::arg("d_max"));
    m.def("path_gain", &radio::path_gain, py::arg("distance"),
          py::arg("model") = radio::PathlossModel{});
    m.def("sinr", &radio::sinr, py::arg("agent"), py::arg("joint"), py::arg("gains"),
          py::arg("tx_power"), py::arg("noise_power"));
    m.def("capacity_reward", &radio::capacity_reward, py::arg("sinr"));
    m.def("pu_process", &radio::pu_process, py::arg("seed"), py::arg("timestep"),
          py::arg("m_channels"), py::arg("duty"));
    m.def("step", &radio::step, py::arg("topology"), py::arg("gains"), py::arg("pu"),
          py::arg("joint"), py::arg("tx_power"), py::arg("noise_power"));

    // policy network
    py::class_<policy::Shape>(m, "Shape")
        .def(py::init([](std::size_t m_channels, std::size_t hidden) {
                 return policy::Shape{m_channels, hidden};
             }),
             py::arg("m_channels") = 4, py::arg("hidden") = 16)
        .def_readwrite("m_channels", &policy::Shape::m_channels)
        .def_readwrite("hidden", &policy::Shape::hidden)
        .def_property_readonly("param_count", &policy::Shape::param_count);
    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init(&make_trajectory), py::arg("observations"), py::arg("actions"),
             py::arg("rewards"))
        .def_readonly("observations", &Trajectory::observations)
        .def_readonly("actions", &Trajectory::actions)
        .def_readonly("rewards", &Trajectory::rewards);
    m.def("init_params", &policy::init_params, py::arg("seed"), py::arg("shape"));
    m.def(
        "forward",
        [](const policy::Shape& shape, const std::vector<double>& params,
           const std::vector<double>& obs, const std::vector<double>& hidden) {
            auto out = policy::forward(shape, params, obs, hidden);
            return py::make_tuple(out.probs, out.hidden);
        },
        py::arg("shape"), py::arg("params"), py::arg("obs"), py::arg("hidden"));
    m.def(
        "logprob_grad",
        [](const policy::Shape& shape, const std::vector<double>& params, const Trajectory& traj,
           double gamma) { return policy::logprob_grad(shape, params, traj, gamma); },
        py::arg("shape"), py::arg("params"), py::arg("trajectory"), py::arg("gamma"));

    // federation
    m.def("aggregate", &aggregate_pairs, py::arg("updates"),
          "Weighted mean of (params, sample_count) pairs.");
    m.def("quantize", &quantize_seeded, py::arg("values"), py::arg("bits"), py::arg("seed"));
    m.def(
        "quantization_step",
        [](const std::vector<double>& v, unsigned bits) { return fed::quantization_step(v, bits); },
        py::arg("values"), py::arg("bits"));
    m.def("payload_bytes", &fed::payload_bytes, py::arg("n_params"), py::arg("bits"));
    m.def(
        "joint_reward",
        [](const std::vector<double>& r, const std::vector<double>& w) {
            return fed::joint_reward(r, w);
        },
        py::arg("rewards"), py::arg("weights"));
    m.def("select_top_k", &select_top_k_seeded, py::arg("scores"), py::arg("k"),
          py::arg("epsilon"), py::arg("seed"));
    m.def("selector_reward", &selector::selector_reward, py::arg("after"), py::arg("before"));

    // experiments
    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_static("parse", &ExperimentConfig::parse, py::arg("text"))
        .def_static("load", &ExperimentConfig::load, py::arg("path"))
        .def("set", &ExperimentConfig::set, py::arg("key"), py::arg("value"))
        .def("validate", &ExperimentConfig::validate)
        .def("to_text", &ExperimentConfig::to_text)
        .def("__repr__", &ExperimentConfig::to_text);
    py::class_<MetricsRecord>(m, "MetricsRecord")
        .def_readonly("seed", &MetricsRecord::seed)
        .def_readonly("regime", &MetricsRecord::regime)
        .def_readonly("round", &MetricsRecord::round)
        .def_readonly("joint_reward", &MetricsRecord::joint_reward)
        .def_readonly("per_agent_mean_reward", &MetricsRecord::per_agent_mean_reward)
        .def_readonly("selected_agent_ids", &MetricsRecord::selected_agent_ids)
        .def_readonly("bytes_uplinked", &MetricsRecord::bytes_uplinked)
        .def_readonly("wall_clock_ms", &MetricsRecord::wall_clock_ms);
    py::class_<RunResult>(m, "RunResult").def_readonly("records", &RunResult::records);
    py::class_<harness::SummaryRow>(m, "SummaryRow")
        .def_readonly("source", &harness::SummaryRow::source)
        .def_readonly("regime", &harness::SummaryRow::regime)
        .def_readonly("participation", &harness::SummaryRow::participation)
        .def_readonly("seeds", &harness::SummaryRow::seeds)
        .def_readonly("median_final_reward", &harness::SummaryRow::median_final_reward)
        .def_readonly("iqr_final_reward", &harness::SummaryRow::iqr_final_reward)
        .def_readonly("median_uplink_bytes", &harness::SummaryRow::median_uplink_bytes);

    m.def("run", &run_one, py::arg("config"), py::arg("seed"), py::arg("regime"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_experiment", &harness::run_experiment, py::arg("config"), py::arg("out_dir"),
          py::arg("file_name") = "metrics.csv", py::call_guard<py::gil_scoped_release>());
    m.def("sweep", &harness::sweep, py::arg("config"), py::arg("key"), py::arg("values"),
          py::arg("out_dir"), py::call_guard<py::gil_scoped_release>());
    m.def("summarize", &harness::summarize, py::arg("csv_paths"));
}
