#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hspsim/analysis.hpp"
#include "hspsim/instrument.hpp"

namespace hspsim {

// One sweep over switch pulse durations. Every point runs the four
// blocked-detector variants in peak-in mode plus one peak-out run; blocked
// calibration runs are short since their coincidence terms are tiny.
struct Campaign {
  ExperimentConfig base;
  std::vector<TimePs> sweep_delta_t;
  std::uint64_t triggers_per_point = 1'000'000;
  std::uint64_t triggers_blocked = 200'000;
  std::uint64_t triggers_peak_out = 1'000'000;
  TimePs peak_full_width = 3 * kPsPerNs;
  std::string out_dir;

  void validate() const;
};

struct PointResult {
  TimePs delta_t = 0;
  double onf = 0.0;
  double onf_err = 0.0;
  double alpha = 0.0;
  double alpha_err = 0.0;
  double r = 0.0;
  double gamma = 0.0;
  std::uint64_t n_triggers = 0;
};

struct PointAnalysis {
  PointResult result;
  GateHistogram histogram; // unblocked peak-in run
  ProbabilitySet probabilities;
  CoincidenceSet coincidences;
};

struct SweepResult {
  std::vector<PointResult> points;
  std::optional<FitResult> onf_fit;
  std::optional<FitResult> alpha_fit;
  std::string note; // e.g. fit skipped for a single point
};

// Seed for one run of one sweep point; run indices: 0 unblocked, 1 block-1,
// 2 block-2, 3 block-both, 4 peak-out.
RngSeed campaign_run_seed(RngSeed master, std::size_t point_index, std::size_t run_index);

// Extends run_duration so max_accepted_triggers is the binding stop condition.
void size_run_duration(ExperimentConfig& config);

ExperimentConfig configure_run(const ExperimentConfig& base, TimePs delta_t, Mode mode,
                               std::array<bool, 2> blocked, std::uint64_t triggers, RngSeed seed);

PointAnalysis analyze_point(const ExperimentConfig& base, TimePs delta_t,
                            std::uint64_t triggers_unblocked, std::uint64_t triggers_blocked,
                            std::uint64_t triggers_peak_out, std::size_t point_index,
                            TimePs peak_full_width = 3 * kPsPerNs);

SweepResult fit_sweep(const std::vector<PointResult>& points);

// Runs all points (concurrently), writes per-point histogram CSVs, the
// results JSON and a campaign manifest into out_dir.
SweepResult run_campaign(const Campaign& campaign);

std::string sweep_result_json_text(const SweepResult& sweep);

// --- timestamp files -------------------------------------------------------
// Schema: trigger_time_ps,detector,detection_time_in_gate_ps,origin,mode
// one row per detection; trigger counts travel in the run manifest.

struct TimetagFormat {
  TimePs gate_length = 100 * kPsPerNs;
};

void write_trigger_csv_header(std::ostream& os);
void write_trigger_csv_rows(std::ostream& os, const TriggerRecord& record);

std::vector<TriggerRecord> import_timetags(const std::string& path, const TimetagFormat& format);

void write_histogram_csv(std::ostream& os, const GateHistogram& hist);

} // namespace hspsim
