#include "hspsim/campaign.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hspsim/config_io.hpp"
#include "hspsim/errors.hpp"

namespace hspsim {

using nlohmann::json;

void Campaign::validate() const {
  base.validate();
  if (sweep_delta_t.empty()) throw ConfigurationError("sweep must contain at least one point");
  for (const TimePs dt : sweep_delta_t) {
    if (dt <= 0) throw ConfigurationError("sweep delta_t values must be positive");
  }
  if (triggers_per_point == 0 || triggers_blocked == 0 || triggers_peak_out == 0) {
    throw ConfigurationError("trigger counts must be positive");
  }
}

RngSeed campaign_run_seed(RngSeed master, std::size_t point_index, std::size_t run_index) {
  return derive_seed(master, StreamPurpose::CampaignRun, point_index * 16 + run_index);
}

void size_run_duration(ExperimentConfig& config) {
  if (config.max_accepted_triggers == 0) return;
  const double herald_rate =
      config.pair_rate_per_s * config.herald_efficiency + config.herald_dark_rate_per_s;
  if (herald_rate <= 0.0) return;
  const double cycle_s =
      ps_to_s(config.switch_profile.delta_t_switch + config.t_dead) + 1.0 / herald_rate;
  const double needed_s =
      1.5 * static_cast<double>(config.max_accepted_triggers) * cycle_s + 1.0;
  config.run_duration = std::max(config.run_duration, s_to_ps(needed_s));
}

ExperimentConfig configure_run(const ExperimentConfig& base, TimePs delta_t, Mode mode,
                               std::array<bool, 2> blocked, std::uint64_t triggers, RngSeed seed) {
  ExperimentConfig c = base;
  c.switch_profile.delta_t_switch = delta_t;
  c.mode = mode;
  c.blocked = blocked;
  c.max_accepted_triggers = triggers;
  c.seed = seed;
  c.run_duration = 0;
  size_run_duration(c);
  if (c.run_duration == 0) c.run_duration = base.run_duration;
  return c;
}

namespace {

struct RunOutcome {
  RunAccumulator acc;
  std::uint64_t n_triggers = 0;
};

RunOutcome run_into_accumulator(const ExperimentConfig& config, TimePs bin_width) {
  RunOutcome out{RunAccumulator(bin_width, config.detectors[0].gate_length), 0};
  out.n_triggers =
      run_experiment_streaming(config, [&out](const TriggerRecord& r) { out.acc.add(r); });
  if (out.n_triggers == 0) throw InsufficientDataError("run produced no accepted triggers");
  return out;
}

} // namespace

PointAnalysis analyze_point(const ExperimentConfig& base, TimePs delta_t,
                            std::uint64_t triggers_unblocked, std::uint64_t triggers_blocked,
                            std::uint64_t triggers_peak_out, std::size_t point_index,
                            TimePs peak_full_width) {
  constexpr TimePs kBinWidth = 250;
  const RngSeed master = base.seed;

  const ExperimentConfig cfg_unblocked =
      configure_run(base, delta_t, Mode::PeakIn, {false, false}, triggers_unblocked,
                    campaign_run_seed(master, point_index, 0));
  const ExperimentConfig cfg_b1 =
      configure_run(base, delta_t, Mode::PeakIn, {true, false}, triggers_blocked,
                    campaign_run_seed(master, point_index, 1));
  const ExperimentConfig cfg_b2 =
      configure_run(base, delta_t, Mode::PeakIn, {false, true}, triggers_blocked,
                    campaign_run_seed(master, point_index, 2));
  const ExperimentConfig cfg_bb =
      configure_run(base, delta_t, Mode::PeakIn, {true, true}, triggers_blocked,
                    campaign_run_seed(master, point_index, 3));
  const ExperimentConfig cfg_out =
      configure_run(base, delta_t, Mode::PeakOut, {false, false}, triggers_peak_out,
                    campaign_run_seed(master, point_index, 4));

  if (!configs_compatible(cfg_unblocked, cfg_b1) || !configs_compatible(cfg_unblocked, cfg_b2) ||
      !configs_compatible(cfg_unblocked, cfg_bb)) {
    throw ConfigurationError("blocked-run configurations diverged from the base point");
  }

  RunOutcome unblocked = run_into_accumulator(cfg_unblocked, kBinWidth);
  RunOutcome b1 = run_into_accumulator(cfg_b1, kBinWidth);
  RunOutcome b2 = run_into_accumulator(cfg_b2, kBinWidth);
  RunOutcome bb = run_into_accumulator(cfg_bb, kBinWidth);
  RunOutcome peak_out = run_into_accumulator(cfg_out, kBinWidth);

  const RegionBounds regions_in = regions_for_config(cfg_unblocked, peak_full_width);
  const RegionBounds regions_out = regions_for_config(cfg_out, peak_full_width);

  PointAnalysis pa;
  pa.histogram = unblocked.acc.histogram();
  pa.probabilities = estimate_probabilities(pa.histogram, regions_in);
  const ProbabilitySet probs_out = estimate_probabilities(peak_out.acc.histogram(), regions_out);

  auto counts = [](const RunOutcome& r) {
    return CoincidenceCounts{r.n_triggers, r.acc.coincidences()};
  };
  pa.coincidences = count_coincidences(counts(unblocked), counts(b1), counts(b2), counts(bb));

  const double p1_tb = pa.probabilities.p_true[0] + pa.probabilities.p_bkg[0];
  const double p2_tb = pa.probabilities.p_true[1] + pa.probabilities.p_bkg[1];

  PointResult& res = pa.result;
  res.delta_t = delta_t;
  res.n_triggers = unblocked.n_triggers;
  res.onf = compute_onf(pa.probabilities);
  res.onf_err = onf_standard_error(pa.probabilities);
  res.alpha = compute_alpha(pa.coincidences, p1_tb, p2_tb);
  res.alpha_err = alpha_standard_error(pa.coincidences, p1_tb, p2_tb);
  res.r = compute_r(pa.probabilities, probs_out);
  res.gamma = compute_gamma(pa.probabilities, base.apparatus_efficiency_eta);
  return pa;
}

SweepResult fit_sweep(const std::vector<PointResult>& points) {
  SweepResult sweep;
  sweep.points = points;
  if (points.size() < 3) {
    sweep.note = "insufficient points for a linear fit";
    return sweep;
  }
  std::vector<FitPoint> onf_pts, alpha_pts;
  for (const PointResult& p : points) {
    onf_pts.push_back(FitPoint{ps_to_ns(p.delta_t), p.onf, p.onf_err});
    alpha_pts.push_back(FitPoint{ps_to_ns(p.delta_t), p.alpha, p.alpha_err});
  }
  sweep.onf_fit = fit_linear(onf_pts);
  sweep.alpha_fit = fit_linear(alpha_pts);
  return sweep;
}

namespace {

json fit_to_json(const FitResult& fit) {
  return json{{"slope_per_ns", fit.slope},
              {"intercept", fit.intercept},
              {"slope_err", fit.slope_err},
              {"intercept_err", fit.intercept_err},
              {"correlation_factor_r", fit.r_pearson}};
}

json point_to_json(const PointResult& p) {
  return json{{"delta_t_switch_ns", ps_to_ns(p.delta_t)},
              {"onf", p.onf},
              {"onf_err", p.onf_err},
              {"alpha", p.alpha},
              {"alpha_err", p.alpha_err},
              {"r", p.r},
              {"gamma", p.gamma},
              {"n_triggers", p.n_triggers}};
}

} // namespace

std::string sweep_result_json_text(const SweepResult& sweep) {
  json j;
  j["points"] = json::array();
  for (const PointResult& p : sweep.points) j["points"].push_back(point_to_json(p));
  if (sweep.onf_fit) j["onf_fit"] = fit_to_json(*sweep.onf_fit);
  if (sweep.alpha_fit) j["alpha_fit"] = fit_to_json(*sweep.alpha_fit);
  if (!sweep.note.empty()) j["note"] = sweep.note;
  return j.dump(2) + "\n";
}

SweepResult run_campaign(const Campaign& campaign) {
  campaign.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(campaign.out_dir, ec);
  {
    std::ofstream probe(fs::path(campaign.out_dir) / ".write_probe");
    if (!probe) throw std::runtime_error("output directory is not writable: " + campaign.out_dir);
  }
  fs::remove(fs::path(campaign.out_dir) / ".write_probe", ec);

  std::vector<std::future<PointAnalysis>> futures;
  for (std::size_t i = 0; i < campaign.sweep_delta_t.size(); ++i) {
    futures.push_back(std::async(std::launch::async, [&campaign, i]() {
      return analyze_point(campaign.base, campaign.sweep_delta_t[i], campaign.triggers_per_point,
                           campaign.triggers_blocked, campaign.triggers_peak_out, i,
                           campaign.peak_full_width);
    }));
  }

  std::vector<PointResult> points;
  for (std::size_t i = 0; i < futures.size(); ++i) {
    PointAnalysis pa = futures[i].get();
    points.push_back(pa.result);
    std::ostringstream name;
    name << "hist_dt" << ps_to_ns(campaign.sweep_delta_t[i]) << "ns.csv";
    std::ofstream hist_file(fs::path(campaign.out_dir) / name.str());
    write_histogram_csv(hist_file, pa.histogram);
  }

  SweepResult sweep = fit_sweep(points);

  std::ofstream results(fs::path(campaign.out_dir) / "results.json");
  results << sweep_result_json_text(sweep);

  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = json::parse(config_to_json_text(campaign.base));
  manifest["sweep_delta_t_ns"] = json::array();
  for (const TimePs dt : campaign.sweep_delta_t) manifest["sweep_delta_t_ns"].push_back(ps_to_ns(dt));
  manifest["triggers_per_point"] = campaign.triggers_per_point;
  manifest["triggers_blocked"] = campaign.triggers_blocked;
  manifest["triggers_peak_out"] = campaign.triggers_peak_out;
  manifest["seed"] = campaign.base.seed.value;
  std::ofstream mf(fs::path(campaign.out_dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";

  return sweep;
}

// --- timestamp files -------------------------------------------------------

void write_trigger_csv_header(std::ostream& os) {
  os << "trigger_time_ps,detector,detection_time_in_gate_ps,origin,mode\n";
}

void write_trigger_csv_rows(std::ostream& os, const TriggerRecord& record) {
  for (int d = 0; d < 2; ++d) {
    for (const Detection& det : record.detections[d]) {
      os << record.trigger_time << ',' << (d + 1) << ',' << det.time_in_gate << ','
         << origin_name(det.origin) << ',' << mode_name(record.mode) << '\n';
    }
  }
}

std::vector<TriggerRecord> import_timetags(const std::string& path, const TimetagFormat& format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open timetag file: " + path);

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++line_no;
  if (line.rfind("trigger_time_ps,detector,detection_time_in_gate_ps,origin,mode", 0) != 0) {
    throw ParseError("unexpected header: " + line, line_no);
  }

  std::vector<TriggerRecord> records;
  TimePs prev_trigger = INT64_MIN;
  auto parse_int = [&line_no](std::string_view field, const char* what) {
    TimePs value = 0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) {
      throw ParseError(std::string("bad ") + what + " field", line_no);
    }
    return value;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<std::string_view, 5> fields;
    std::string_view rest = line;
    for (int f = 0; f < 5; ++f) {
      const auto comma = rest.find(',');
      if (f < 4 && comma == std::string_view::npos) {
        throw ParseError("expected 5 fields", line_no);
      }
      fields[f] = f < 4 ? rest.substr(0, comma) : rest;
      if (f < 4) rest = rest.substr(comma + 1);
    }
    const TimePs trigger = parse_int(fields[0], "trigger_time_ps");
    const TimePs detector = parse_int(fields[1], "detector");
    const TimePs t_in_gate = parse_int(fields[2], "detection_time_in_gate_ps");
    if (detector < 1 || detector > 2) throw ParseError("detector must be 1 or 2", line_no);
    if (t_in_gate < 0 || t_in_gate > format.gate_length) {
      throw ParseError("detection time outside the gate", line_no);
    }
    if (trigger < prev_trigger) throw ParseError("triggers not sorted", line_no);

    Origin origin;
    Mode mode;
    try {
      origin = origin_from_name(fields[3]);
      mode = mode_from_name(fields[4]);
    } catch (const InvalidParameterError& e) {
      throw ParseError(e.what(), line_no);
    }

    if (records.empty() || records.back().trigger_time != trigger) {
      TriggerRecord rec;
      rec.trigger_time = trigger;
      rec.mode = mode;
      records.push_back(rec);
    }
    records.back().detections[detector - 1].push_back(Detection{t_in_gate, origin});
    prev_trigger = trigger;
  }
  return records;
}

void write_histogram_csv(std::ostream& os, const GateHistogram& hist) {
  os << "bin_start_ps,det1_counts,det2_counts\n";
  for (std::size_t i = 0; i < hist.bins[0].size(); ++i) {
    os << static_cast<TimePs>(i) * hist.bin_width << ',' << hist.bins[0][i] << ','
       << hist.bins[1][i] << '\n';
  }
}

} // namespace hspsim
