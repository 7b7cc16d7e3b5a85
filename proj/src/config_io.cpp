#include "hspsim/config_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hspsim/errors.hpp"

namespace hspsim {

using nlohmann::json;

namespace {

json detector_to_json(const DetectorModel& d) {
  return json{{"efficiency", d.efficiency},
              {"dark_count_probability_per_gate", d.dark_count_probability_per_gate},
              {"gate_length_ns", ps_to_ns(d.gate_length)},
              {"dead_time_us", static_cast<double>(d.dead_time) / 1e6},
              {"afterpulse_probability", d.afterpulse_probability},
              {"afterpulse_tau_us", static_cast<double>(d.afterpulse_tau) / 1e6},
              {"jitter_fwhm_ps", static_cast<double>(d.jitter_fwhm)}};
}

DetectorModel detector_from_json(const json& j) {
  DetectorModel d;
  d.efficiency = j.at("efficiency").get<double>();
  d.dark_count_probability_per_gate = j.at("dark_count_probability_per_gate").get<double>();
  d.gate_length = ns_to_ps(j.at("gate_length_ns").get<double>());
  d.dead_time = us_to_ps(j.at("dead_time_us").get<double>());
  d.afterpulse_probability = j.value("afterpulse_probability", 0.0);
  d.afterpulse_tau = us_to_ps(j.value("afterpulse_tau_us", 5.0));
  d.jitter_fwhm = static_cast<TimePs>(std::llround(j.value("jitter_fwhm_ps", 0.0)));
  return d;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["pair_rate_per_s"] = c.pair_rate_per_s;
  j["herald_efficiency"] = c.herald_efficiency;
  j["herald_dark_rate_per_s"] = c.herald_dark_rate_per_s;
  j["herald_jitter_fwhm_ps"] = static_cast<double>(c.herald_jitter_fwhm);
  j["signal_coupling_gamma"] = c.signal_coupling_gamma;
  j["fiber_delay_ns"] = ps_to_ns(c.fiber_delay);
  j["background_rate_per_s"] = c.background_rate_per_s;
  j["switch"] = json{{"delta_t_switch_ns", ps_to_ns(c.switch_profile.delta_t_switch)},
                     {"rise_fall_time_ns", ps_to_ns(c.switch_profile.rise_fall_time)},
                     {"extinction", c.switch_profile.extinction},
                     {"quantization_step_ns", ps_to_ns(c.switch_profile.quantization_step)}};
  j["detectors"] = json::array({detector_to_json(c.detectors[0]), detector_to_json(c.detectors[1])});
  j["fbs_ratio"] = c.fbs_ratio;
  j["apparatus_efficiency_eta"] = c.apparatus_efficiency_eta;
  j["t_dead_us"] = static_cast<double>(c.t_dead) / 1e6;
  j["gate_lead_ns"] = ps_to_ns(c.gate_lead);
  if (c.window_lead >= 0) j["window_lead_ns"] = ps_to_ns(c.window_lead);
  j["run_duration_s"] = ps_to_s(c.run_duration);
  j["max_accepted_triggers"] = c.max_accepted_triggers;
  j["mode"] = std::string(mode_name(c.mode));
  j["peak_out_delay_ns"] = ps_to_ns(c.peak_out_delay);
  json blocked = json::array();
  for (int d = 0; d < 2; ++d) {
    if (c.blocked[d]) blocked.push_back(d + 1);
  }
  j["blocked_detectors"] = blocked;
  j["seed"] = c.seed.value;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    c.pair_rate_per_s = j.at("pair_rate_per_s").get<double>();
    c.herald_efficiency = j.at("herald_efficiency").get<double>();
    c.herald_dark_rate_per_s = j.value("herald_dark_rate_per_s", 0.0);
    c.herald_jitter_fwhm =
        static_cast<TimePs>(std::llround(j.value("herald_jitter_fwhm_ps", 0.0)));
    c.signal_coupling_gamma = j.at("signal_coupling_gamma").get<double>();
    c.fiber_delay = ns_to_ps(j.at("fiber_delay_ns").get<double>());
    c.background_rate_per_s = j.at("background_rate_per_s").get<double>();
    const json& sw = j.at("switch");
    c.switch_profile.delta_t_switch = ns_to_ps(sw.at("delta_t_switch_ns").get<double>());
    c.switch_profile.rise_fall_time = ns_to_ps(sw.value("rise_fall_time_ns", 2.5));
    c.switch_profile.extinction = sw.value("extinction", 3.5e-3);
    c.switch_profile.quantization_step = ns_to_ps(sw.value("quantization_step_ns", 6.0));
    const json& dets = j.at("detectors");
    if (!dets.is_array() || dets.size() != 2) {
      throw ConfigurationError("config field 'detectors' must list exactly 2 detectors");
    }
    c.detectors[0] = detector_from_json(dets[0]);
    c.detectors[1] = detector_from_json(dets[1]);
    c.fbs_ratio = j.value("fbs_ratio", 0.5);
    c.apparatus_efficiency_eta = j.at("apparatus_efficiency_eta").get<double>();
    c.t_dead = us_to_ps(j.at("t_dead_us").get<double>());
    c.gate_lead = ns_to_ps(j.value("gate_lead_ns", 20.0));
    c.window_lead = j.contains("window_lead_ns") ? ns_to_ps(j.at("window_lead_ns").get<double>())
                                                 : TimePs{-1};
    c.run_duration = s_to_ps(j.at("run_duration_s").get<double>());
    c.max_accepted_triggers = j.value("max_accepted_triggers", std::uint64_t{0});
    c.mode = mode_from_name(j.value("mode", "peak_in"));
    c.peak_out_delay = ns_to_ps(j.value("peak_out_delay_ns", 50.0));
    c.blocked = {false, false};
    if (j.contains("blocked_detectors")) {
      for (const auto& b : j.at("blocked_detectors")) {
        const int id = b.get<int>();
        if (id < 1 || id > 2) throw ConfigurationError("blocked_detectors entries must be 1 or 2");
        c.blocked[id - 1] = true;
      }
    }
    c.seed.value = j.value("seed", std::uint64_t{12345});
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

} // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string config_to_json_text(const ExperimentConfig& config, int indent) {
  return config_to_json(config).dump(indent) + "\n";
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

void save_config(const ExperimentConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write config file: " + path);
  out << config_to_json_text(config);
}

std::string manifest_json_text(const ExperimentConfig& config, std::uint64_t n_triggers) {
  json j;
  j["format_version"] = 1;
  j["config"] = config_to_json(config);
  j["seed"] = config.seed.value;
  j["n_triggers"] = n_triggers;
  return j.dump(2) + "\n";
}

ExperimentConfig config_from_manifest(const std::string& path, std::uint64_t* n_triggers) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (n_triggers != nullptr) *n_triggers = j.value("n_triggers", std::uint64_t{0});
  return config_from_json(j.at("config"));
}

} // namespace hspsim
