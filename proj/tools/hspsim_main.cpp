#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hspsim/analysis.hpp"
#include "hspsim/campaign.hpp"
#include "hspsim/config_io.hpp"
#include "hspsim/errors.hpp"
#include "hspsim/oracle.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hspsim;

namespace {

std::vector<TimePs> parse_dt_list(const std::string& csv) {
  std::vector<TimePs> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(ns_to_ps(std::stod(item)));
  }
  return out;
}

json probabilities_to_json(const ProbabilitySet& ps) {
  json j;
  for (int d = 0; d < 2; ++d) {
    j["detector_" + std::to_string(d + 1)] = {{"p_true", ps.p_true[d]},
                                              {"p_bkg", ps.p_bkg[d]},
                                              {"p_dark", ps.p_dark[d]},
                                              {"p_tot", ps.p_tot[d]},
                                              {"n_triggers", ps.n_triggers[d]}};
  }
  return j;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed) {
  ExperimentConfig config = load_config(config_path);
  if (seed) config.seed.value = *seed;
  fs::create_directories(out_dir);

  std::ofstream tags(fs::path(out_dir) / "triggers.csv");
  write_trigger_csv_header(tags);
  RunAccumulator acc(250, config.detectors[0].gate_length);
  const std::uint64_t n = run_experiment_streaming(config, [&](const TriggerRecord& rec) {
    acc.add(rec);
    write_trigger_csv_rows(tags, rec);
  });

  std::ofstream manifest(fs::path(out_dir) / "manifest.json");
  manifest << manifest_json_text(config, n);

  std::ofstream hist_file(fs::path(out_dir) / "histogram.csv");
  write_histogram_csv(hist_file, acc.histogram());

  const RegionBounds regions = regions_for_config(config);
  const ProbabilitySet probs = estimate_probabilities(acc.histogram(), regions);
  json result;
  result["n_triggers"] = n;
  result["probabilities"] = probabilities_to_json(probs);
  result["onf"] = compute_onf(probs);
  result["onf_err"] = onf_standard_error(probs);
  result["gamma"] = compute_gamma(probs, config.apparatus_efficiency_eta);
  std::ofstream result_file(fs::path(out_dir) / "result.json");
  result_file << result.dump(2) << "\n";

  std::cout << "wrote " << n << " triggers to " << out_dir << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& dt_csv, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::uint64_t triggers,
              std::uint64_t triggers_blocked, std::uint64_t triggers_peak_out) {
  Campaign campaign;
  campaign.base = load_config(config_path);
  if (seed) campaign.base.seed.value = *seed;
  campaign.sweep_delta_t = parse_dt_list(dt_csv);
  campaign.triggers_per_point = triggers;
  campaign.triggers_blocked = triggers_blocked;
  campaign.triggers_peak_out = triggers_peak_out;
  campaign.out_dir = out_dir;

  const SweepResult sweep = run_campaign(campaign);
  std::cout << sweep_result_json_text(sweep);
  return 0;
}

int cmd_predict(const std::string& config_path) {
  const ExperimentConfig config = load_config(config_path);
  const TriggerOutcomeDistribution dist = predict_trigger_distribution(config);
  json j;
  j["p_true"] = dist.p_true;
  j["p_bkg"] = dist.p_bkg;
  j["p_dark"] = dist.p_dark;
  j["p_fire"] = dist.p_fire;
  j["p12"] = {{"tot_tot", dist.p12_tot_tot},
              {"dark_tot", dist.p12_dark_tot},
              {"tot_dark", dist.p12_tot_dark},
              {"dark_dark", dist.p12_dark_dark},
              {"signal", dist.p12_signal}};
  j["onf"] = dist.onf;
  j["alpha"] = dist.alpha;
  try {
    const auto [onf_fo, alpha_fo] = predict_first_order(config);
    j["first_order"] = {{"onf", onf_fo}, {"alpha", alpha_fo}};
  } catch (const AccuracyError& e) {
    j["first_order"] = {{"refused", e.what()}};
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze(const std::string& tags_path, const std::string& out_dir,
                const std::string& manifest_path) {
  std::string manifest = manifest_path;
  if (manifest.empty()) {
    manifest = (fs::path(tags_path).parent_path() / "manifest.json").string();
  }
  std::uint64_t n_triggers = 0;
  const ExperimentConfig config = config_from_manifest(manifest, &n_triggers);

  TimetagFormat format;
  format.gate_length = config.detectors[0].gate_length;
  const std::vector<TriggerRecord> records = import_timetags(tags_path, format);
  if (n_triggers == 0) n_triggers = records.size();

  RunAccumulator acc(250, format.gate_length);
  for (const TriggerRecord& rec : records) acc.add(rec);
  GateHistogram hist = acc.histogram();
  hist.n_triggers = {n_triggers, n_triggers}; // triggers without detections leave no rows

  const RegionBounds regions = regions_for_config(config);
  const ProbabilitySet probs = estimate_probabilities(hist, regions);

  fs::create_directories(out_dir);
  json result;
  result["n_triggers"] = n_triggers;
  result["probabilities"] = probabilities_to_json(probs);
  result["onf"] = compute_onf(probs);
  result["onf_err"] = onf_standard_error(probs);
  result["gamma"] = compute_gamma(probs, config.apparatus_efficiency_eta);
  std::ofstream result_file(fs::path(out_dir) / "result.json");
  result_file << result.dump(2) << "\n";
  std::cout << result.dump(2) << "\n";
  return 0;
}

const char* error_type_name(const std::exception& e) {
  if (dynamic_cast<const InvalidParameterError*>(&e)) return "invalid_parameter";
  if (dynamic_cast<const ConfigurationError*>(&e)) return "configuration";
  if (dynamic_cast<const InsufficientDataError*>(&e)) return "insufficient_data";
  if (dynamic_cast<const CalibrationError*>(&e)) return "calibration_failure";
  if (dynamic_cast<const AccuracyError*>(&e)) return "accuracy";
  if (dynamic_cast<const ParseError*>(&e)) return "parse";
  return "runtime";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shuttered heralded single-photon source simulator and analyzer"};
  app.require_subcommand(1);

  std::string config_path, out_dir, dt_csv = "60,30,15,5", tags_path, manifest_path;
  std::optional<std::uint64_t> seed;
  std::uint64_t triggers = 1'000'000, triggers_blocked = 200'000, triggers_peak_out = 1'000'000;

  auto* run = app.add_subcommand("run", "Run one experiment and export its records");
  run->add_option("--config", config_path, "config JSON")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed, "override the config seed");

  auto* sweep = app.add_subcommand("sweep", "Run the switch-duration sweep campaign");
  sweep->add_option("--config", config_path, "config JSON")->required();
  sweep->add_option("--dt", dt_csv, "comma-separated switch durations in ns");
  sweep->add_option("--out", out_dir, "output directory")->required();
  sweep->add_option("--seed", seed, "override the config seed");
  sweep->add_option("--triggers", triggers, "accepted triggers per point");
  sweep->add_option("--triggers-blocked", triggers_blocked, "triggers per blocked run");
  sweep->add_option("--triggers-peak-out", triggers_peak_out, "triggers for the peak-out run");

  auto* predict = app.add_subcommand("predict", "Print analytic per-trigger predictions");
  predict->add_option("--config", config_path, "config JSON")->required();

  auto* analyze = app.add_subcommand("analyze", "Analyze an exported timestamp file");
  analyze->add_option("--tags", tags_path, "trigger CSV")->required();
  analyze->add_option("--out", out_dir, "output directory")->required();
  analyze->add_option("--manifest", manifest_path,
                      "run manifest (default: manifest.json next to --tags)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, seed);
    if (sweep->parsed())
      return cmd_sweep(config_path, dt_csv, out_dir, seed, triggers, triggers_blocked,
                       triggers_peak_out);
    if (predict->parsed()) return cmd_predict(config_path);
    if (analyze->parsed()) return cmd_analyze(tags_path, out_dir, manifest_path);
  } catch (const std::exception& e) {
    json err;
    err["error"] = {{"type", error_type_name(e)}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
