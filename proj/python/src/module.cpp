#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "oranlab/data/analysis.hpp"
#include "oranlab/e2/codec.hpp"
#include "oranlab/exp/experiments.hpp"
#include "oranlab/sim/cell.hpp"

namespace py = pybind11;
using namespace oranlab;

namespace {

sim::ScenarioConfig scenario_from(const std::string& json_text) {
  if (json_text.empty()) return {};
  return sim::scenario_from_json(nlohmann::json::parse(json_text));
}

SlicingProfile slicing_from(const std::array<int, 3>& prbs) { return SlicingProfile{prbs}; }

SchedulingProfile scheduling_from(const std::string& text) {
  auto p = parse_scheduling(text);
  if (!p) throw py::value_error("bad scheduling profile: " + text);
  return *p;
}

py::object optional_float(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict message_dict(const e2::E2Message& m) {
  py::dict d;
  d["tag"] = std::string(e2::message_tag(m));
  std::visit(
      [&](const auto& msg) {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, e2::Indication>) {
          d["sub_id"] = msg.sub_id;
          d["bs_id"] = msg.bs_id;
          d["seq_no"] = msg.seq_no;
          d["payload"] = msg.payload;
        } else if constexpr (std::is_same_v<T, e2::ControlRequest>) {
          d["bs_id"] = msg.bs_id;
          d["seq_no"] = msg.seq_no;
          d["slicing"] = msg.slicing.prbs;
          d["scheduling"] = format_scheduling(msg.scheduling);
        }
      },
      m);
  return d;
}

std::string run_json(const std::string& mode, const std::string& spec_json) {
  auto m = exp::parse_mode(mode);
  if (!m) throw py::value_error("unknown mode: " + mode);
  auto spec = exp::spec_from_json(nlohmann::json::parse(spec_json));
  spec.mode = *m;
  nlohmann::json out;
  py::gil_scoped_release release;
  switch (*m) {
    case exp::Mode::Collect: {
      const auto r = exp::run_collect(spec);
      out = {{"dataset", r.dataset.string()}, {"rows", r.rows}, {"complete", r.complete}};
      break;
    }
    case exp::Mode::TrainOffline: {
      const auto r = exp::run_train_offline(spec);
      out = {{"checkpoint", r.checkpoint.string()}, {"updates", r.curve.size()}, {"plateau_stop", r.plateau_stop}};
      break;
    }
    case exp::Mode::Evaluate: {
      const auto r = exp::run_evaluate(spec);
      nlohmann::json arms = nlohmann::json::array();
      for (const auto& a : r.arms) arms.push_back({{"name", a.name}, {"mean_reward", a.mean_reward}});
      out = {{"arms", arms}, {"median_baseline_reward", r.median_baseline_reward()}};
      break;
    }
    case exp::Mode::TrainOnline: {
      const auto r = exp::run_train_online(spec);
      out = {{"checkpoint", r.checkpoint.string()},
             {"updates", r.updates.size()},
             {"reward_after", r.after.mean_reward},
             {"reward_frozen", r.frozen.mean_reward}};
      break;
    }
    case exp::Mode::Analyze: {
      const auto r = exp::run_analyze(spec);
      for (const auto& [slice, fr] : r.features) out["selected"][std::string(to_string(slice))] = fr.selected;
      break;
    }
  }
  out["out"] = spec.out.string();
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Open RAN closed-loop lab core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<e2::EncodeError>(m, "EncodeError", PyExc_ValueError);

  py::class_<KpmRecord>(m, "KpmRecord")
      .def(py::init<>())
      .def_readwrite("timestamp_ms", &KpmRecord::timestamp_ms)
      .def_readwrite("bs_id", &KpmRecord::bs_id)
      .def_readwrite("ue_id", &KpmRecord::ue_id)
      .def_property(
          "slice", [](const KpmRecord& r) { return std::string(to_string(r.slice)); },
          [](KpmRecord& r, const std::string& s) {
            auto v = parse_slice(s);
            if (!v) throw py::value_error("unknown slice: " + s);
            r.slice = *v;
          })
      .def_readwrite("dl_mcs", &KpmRecord::dl_mcs)
      .def_readwrite("dl_tx_symbols", &KpmRecord::dl_tx_symbols)
      .def_readwrite("dl_buffer", &KpmRecord::dl_buffer)
      .def_readwrite("dl_rate", &KpmRecord::dl_rate)
      .def_readwrite("dl_phy_tbs", &KpmRecord::dl_phy_tbs)
      .def_readwrite("dl_cqi", &KpmRecord::dl_cqi)
      .def_readwrite("ul_buffer", &KpmRecord::ul_buffer)
      .def_readwrite("ul_rate", &KpmRecord::ul_rate)
      .def_readwrite("ul_errors", &KpmRecord::ul_errors)
      .def_readwrite("granted_prbs", &KpmRecord::granted_prbs)
      .def_readwrite("requested_prbs", &KpmRecord::requested_prbs)
      .def("__eq__", [](const KpmRecord& a, const KpmRecord& b) { return a == b; })
      .def("__repr__", [](const KpmRecord& r) {
        return "<KpmRecord t=" + std::to_string(r.timestamp_ms) + " ue=" + std::to_string(r.ue_id) + " " +
               std::string(to_string(r.slice)) + ">";
      });

  py::class_<sim::Cell>(m, "Cell")
      .def(py::init([](const std::string& scenario_json, BsId bs_id) {
             auto cfg = scenario_from(scenario_json);
             cfg.validate();
             return std::make_unique<sim::Cell>(cfg, bs_id);
           }),
           py::arg("scenario_json") = "", py::arg("bs_id") = 0)
      .def("step_tti", &sim::Cell::step_tti)
      .def("run_ttis", &sim::Cell::run_ttis, py::arg("n"), py::call_guard<py::gil_scoped_release>())
      .def("snapshot_kpms", &sim::Cell::snapshot_kpms)
      .def("peek_kpms", &sim::Cell::peek_kpms)
      .def(
          "apply_control",
          [](sim::Cell& c, const std::array<int, 3>& slicing, const std::string& scheduling) {
            const auto r = c.apply_control(slicing_from(slicing), scheduling_from(scheduling));
            return py::make_tuple(r.accepted, r.reason);
          },
          py::arg("slicing"), py::arg("scheduling") = "RR-RR-RR")
      .def_property_readonly("now_ms", &sim::Cell::now_ms)
      .def_property_readonly("slicing", [](const sim::Cell& c) { return c.slicing().prbs; })
      .def_property_readonly("scheduling", [](const sim::Cell& c) { return format_scheduling(c.scheduling()); })
      .def_property_readonly("last_granted", [](const sim::Cell& c) { return c.last_tti().granted; });

  m.def(
      "encode_indication",
      [](std::uint32_t sub_id, BsId bs_id, std::uint64_t seq_no, std::vector<KpmRecord> records) {
        const auto f = e2::encode(e2::Indication{sub_id, bs_id, seq_no, std::move(records)});
        return py::bytes(reinterpret_cast<const char*>(f.data()), f.size());
      },
      py::arg("sub_id"), py::arg("bs_id"), py::arg("seq_no"), py::arg("records"));
  m.def(
      "encode_control",
      [](BsId bs_id, std::uint64_t seq_no, const std::array<int, 3>& slicing, const std::string& scheduling) {
        const auto f = e2::encode(e2::ControlRequest{bs_id, seq_no, slicing_from(slicing), scheduling_from(scheduling)});
        return py::bytes(reinterpret_cast<const char*>(f.data()), f.size());
      },
      py::arg("bs_id"), py::arg("seq_no"), py::arg("slicing"), py::arg("scheduling"));
  m.def(
      "decode",
      [](const py::bytes& data) {
        const std::string_view s = data;
        const auto r = e2::decode(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
        py::dict d;
        d["status"] = std::string(e2::to_string(r.status));
        d["consumed"] = r.consumed;
        d["detail"] = r.detail;
        if (r.message) d["message"] = message_dict(*r.message);
        return d;
      },
      py::arg("data"), "Decodes the first frame of `data`.");

  m.def(
      "pearson",
      [](const std::vector<double>& x, const std::vector<double>& y) { return optional_float(data::pearson(x, y)); },
      py::arg("x"), py::arg("y"));
  m.def(
      "linear_fit",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto f = data::linear_fit(x, y);
        return py::make_tuple(f.slope, f.intercept);
      },
      py::arg("x"), py::arg("y"));
  m.def(
      "correlations",
      [](const std::string& dataset, const std::vector<std::string>& metrics, const std::string& slice) {
        const auto ds = data::Dataset::load(dataset);
        data::Filter f;
        if (!slice.empty()) {
          f.slice = parse_slice(slice);
          if (!f.slice) throw py::value_error("unknown slice: " + slice);
        }
        const auto rep = data::correlation_matrix(ds, metrics, f);
        py::dict out;
        for (const auto& a : metrics) {
          py::dict row;
          for (const auto& b : metrics) row[py::str(b)] = optional_float(rep.at(a, b));
          out[py::str(a)] = row;
        }
        return out;
      },
      py::arg("dataset"), py::arg("metrics"), py::arg("slice") = "");

  m.def("_run", &run_json, py::arg("mode"), py::arg("spec_json"));
  m.def("default_spec", [] { return exp::spec_to_json(exp::ExperimentSpec{}).dump(); });
}
