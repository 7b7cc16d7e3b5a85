#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hspsim/analysis.hpp"
#include "hspsim/campaign.hpp"
#include "hspsim/config_io.hpp"
#include "hspsim/oracle.hpp"
#include "hspsim/stochastic.hpp"

namespace py = pybind11;
using namespace hspsim;

namespace {

ExperimentConfig config_from_obj(const py::object& obj) {
  ExperimentConfig config;
  if (py::isinstance<ExperimentConfig>(obj)) {
    config = obj.cast<ExperimentConfig>();
  } else if (py::isinstance<py::str>(obj)) {
    config = config_from_json_text(obj.cast<std::string>());
  } else {
    // dicts and anything json-like go through the JSON loader
    py::object dumps = py::module_::import("json").attr("dumps");
    config = config_from_json_text(dumps(obj).cast<std::string>());
  }
  size_run_duration(config); // a requested trigger count wins over run_duration
  return config;
}

} // namespace

PYBIND11_MODULE(_hspsim, m) {
  m.doc() = "Shuttered heralded single-photon source simulator";

  py::enum_<Origin>(m, "Origin")
      .value("HeraldedSignal", Origin::HeraldedSignal)
      .value("Background", Origin::Background)
      .value("DarkCount", Origin::DarkCount)
      .value("Afterpulse", Origin::Afterpulse)
      .value("HeraldPhoton", Origin::HeraldPhoton);

  py::enum_<Mode>(m, "Mode").value("PeakIn", Mode::PeakIn).value("PeakOut", Mode::PeakOut);

  py::class_<Event>(m, "Event")
      .def_readonly("time_ps", &Event::time)
      .def_readonly("origin", &Event::origin);

  py::class_<EventStream>(m, "EventStream")
      .def_readonly("channel", &EventStream::channel)
      .def_readonly("events", &EventStream::events)
      .def("__len__", [](const EventStream& s) { return s.size(); });

  py::class_<Detection>(m, "Detection")
      .def_readonly("time_in_gate_ps", &Detection::time_in_gate)
      .def_readonly("origin", &Detection::origin);

  py::class_<TriggerRecord>(m, "TriggerRecord")
      .def_readonly("trigger_time_ps", &TriggerRecord::trigger_time)
      .def_readonly("mode", &TriggerRecord::mode)
      .def_property_readonly("detections", [](const TriggerRecord& r) {
        return py::make_tuple(r.detections[0], r.detections[1]);
      });

  py::class_<ExperimentConfig>(m, "ExperimentConfig")
      .def(py::init<>())
      .def_static("from_json", &config_from_json_text, py::arg("text"))
      .def("to_json", &config_to_json_text, py::arg("indent") = 2)
      .def_property(
          "seed", [](const ExperimentConfig& c) { return c.seed.value; },
          [](ExperimentConfig& c, std::uint64_t v) { c.seed.value = v; })
      .def_property(
          "delta_t_switch_ns",
          [](const ExperimentConfig& c) { return ps_to_ns(c.switch_profile.delta_t_switch); },
          [](ExperimentConfig& c, double v) { c.switch_profile.delta_t_switch = ns_to_ps(v); })
      .def_readwrite("pair_rate_per_s", &ExperimentConfig::pair_rate_per_s)
      .def_readwrite("background_rate_per_s", &ExperimentConfig::background_rate_per_s)
      .def_readwrite("signal_coupling_gamma", &ExperimentConfig::signal_coupling_gamma)
      .def_readwrite("mode", &ExperimentConfig::mode)
      .def_readwrite("max_accepted_triggers", &ExperimentConfig::max_accepted_triggers);

  m.def(
      "generate_poisson_stream",
      [](double rate_per_s, double duration_s, Origin origin, std::uint64_t seed) {
        return generate_poisson_stream(rate_per_s, s_to_ps(duration_s), origin, RngSeed{seed});
      },
      py::arg("rate_per_s"), py::arg("duration_s"), py::arg("origin") = Origin::Background,
      py::arg("seed") = 1);
  m.def(
      "apply_jitter",
      [](const EventStream& s, double fwhm_ps, std::uint64_t seed) {
        return apply_jitter(s, static_cast<TimePs>(fwhm_ps), RngSeed{seed});
      },
      py::arg("stream"), py::arg("fwhm_ps"), py::arg("seed") = 1);
  m.def(
      "thin_stream",
      [](const EventStream& s, double p, std::uint64_t seed) {
        return thin_stream(s, p, RngSeed{seed});
      },
      py::arg("stream"), py::arg("survival_probability"), py::arg("seed") = 1);

  py::class_<ProbabilitySet>(m, "ProbabilitySet")
      .def_readonly("p_true", &ProbabilitySet::p_true)
      .def_readonly("p_bkg", &ProbabilitySet::p_bkg)
      .def_readonly("p_dark", &ProbabilitySet::p_dark)
      .def_readonly("p_tot", &ProbabilitySet::p_tot)
      .def_readonly("n_triggers", &ProbabilitySet::n_triggers);

  py::class_<PointResult>(m, "PointResult")
      .def_property_readonly("delta_t_switch_ns",
                             [](const PointResult& p) { return ps_to_ns(p.delta_t); })
      .def_readonly("onf", &PointResult::onf)
      .def_readonly("onf_err", &PointResult::onf_err)
      .def_readonly("alpha", &PointResult::alpha)
      .def_readonly("alpha_err", &PointResult::alpha_err)
      .def_readonly("r", &PointResult::r)
      .def_readonly("gamma", &PointResult::gamma)
      .def_readonly("n_triggers", &PointResult::n_triggers);

  m.def(
      "run_experiment",
      [](const py::object& config) {
        const RunResult result = run_experiment(config_from_obj(config));
        return py::make_tuple(result.records, result.n_triggers);
      },
      py::arg("config"), "Run the full pipeline; returns (records, n_triggers).");

  m.def(
      "analyze_run",
      [](const py::object& config) {
        const ExperimentConfig cfg = config_from_obj(config);
        RunAccumulator acc(250, cfg.detectors[0].gate_length);
        run_experiment_streaming(cfg, [&acc](const TriggerRecord& r) { acc.add(r); });
        const ProbabilitySet ps = estimate_probabilities(acc.histogram(), regions_for_config(cfg));
        py::dict out;
        out["probabilities"] = ps;
        out["onf"] = compute_onf(ps);
        out["onf_err"] = onf_standard_error(ps);
        out["gamma"] = compute_gamma(ps, cfg.apparatus_efficiency_eta);
        return out;
      },
      py::arg("config"), "Run one configuration and return its region estimators.");

  m.def(
      "analyze_sweep_point",
      [](const py::object& config, double delta_t_ns, std::uint64_t triggers,
         std::uint64_t triggers_blocked, std::uint64_t triggers_peak_out) {
        const PointAnalysis pa =
            analyze_point(config_from_obj(config), ns_to_ps(delta_t_ns), triggers,
                          triggers_blocked, triggers_peak_out, 0);
        return pa.result;
      },
      py::arg("config"), py::arg("delta_t_ns"), py::arg("triggers") = 200'000,
      py::arg("triggers_blocked") = 50'000, py::arg("triggers_peak_out") = 200'000,
      "Full per-point analysis: ONF, alpha, r and gamma at one switch duration.");

  m.def(
      "predict",
      [](const py::object& config) {
        const TriggerOutcomeDistribution dist =
            predict_trigger_distribution(config_from_obj(config));
        py::dict out;
        out["p_true"] = dist.p_true;
        out["p_bkg"] = dist.p_bkg;
        out["p_dark"] = dist.p_dark;
        out["p12_signal"] = dist.p12_signal;
        out["onf"] = dist.onf;
        out["alpha"] = dist.alpha;
        return out;
      },
      py::arg("config"), "Analytic per-trigger outcome prediction.");

  m.def(
      "calibrate_background",
      [](double target_onf, const py::object& config) {
        return calibrate_background(target_onf, config_from_obj(config));
      },
      py::arg("target_onf"), py::arg("config"),
      "Stray background rate whose analytic ONF matches the target.");
}
