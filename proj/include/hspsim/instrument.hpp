#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hspsim/event_stream.hpp"
#include "hspsim/rng.hpp"

namespace hspsim {

enum class Mode : std::uint8_t { PeakIn, PeakOut };

std::string_view mode_name(Mode m);
Mode mode_from_name(std::string_view name);

// Optical switch driven by the FPGA. The commanded window [open, close] is the
// full-transmission plateau; the drive pulse edges extend rise_fall_time
// before open and after close, so the effective open width is
// delta_t_switch + rise_fall_time (trapezoid area). Outside the pulse the
// closed-state transmission is `extinction`.
struct SwitchProfile {
  TimePs delta_t_switch = 30 * kPsPerNs;
  TimePs rise_fall_time = ns_to_ps(2.5);
  double extinction = 3.5e-3;
  TimePs quantization_step = 6 * kPsPerNs; // FPGA time step

  void validate() const;
};

// Gated infrared single-photon detector. Only the first avalanche per gate is
// recorded (the device dead time exceeds the gate). Afterpulsing, when
// enabled, re-fires a later gate with probability
// afterpulse_probability * exp(-dt / afterpulse_tau).
struct DetectorModel {
  double efficiency = 0.081;
  double dark_count_probability_per_gate = 1e-5;
  TimePs gate_length = 100 * kPsPerNs;
  TimePs dead_time = 20 * kPsPerUs;
  double afterpulse_probability = 0.0;
  TimePs afterpulse_tau = 5 * kPsPerUs;
  TimePs jitter_fwhm = 700; // ps

  void validate() const;
};

struct Window {
  TimePs open = 0;
  TimePs close = 0;
};

// Windows opened by accepted heralds, plus the retrigger holdoff bookkeeping.
struct ShutterSchedule {
  std::vector<Window> windows;
  std::vector<TimePs> dead_until;        // per window: close + t_dead
  std::vector<TimePs> accepted_triggers; // herald times that opened windows

  std::size_t size() const { return windows.size(); }
  void check_invariants(TimePs delta_t_switch, TimePs t_dead) const;
};

struct Detection {
  TimePs time_in_gate = 0;
  Origin origin = Origin::Background;
};

struct TriggerRecord {
  TimePs trigger_time = 0;
  Window window;
  Mode mode = Mode::PeakIn;
  std::array<std::vector<Detection>, 2> detections;
};

struct ExperimentConfig {
  double pair_rate_per_s = 120e3;
  double herald_efficiency = 0.25;
  double herald_dark_rate_per_s = 100.0;
  TimePs herald_jitter_fwhm = 500; // ps
  double signal_coupling_gamma = 0.14;
  TimePs fiber_delay = 98 * kPsPerNs;
  double background_rate_per_s = 272.5e3; // at the switch input; set by calibration
  SwitchProfile switch_profile;
  std::array<DetectorModel, 2> detectors;
  double fbs_ratio = 0.5;
  double apparatus_efficiency_eta = 0.081;
  TimePs t_dead = 20 * kPsPerUs;
  TimePs gate_lead = 20 * kPsPerNs;   // gate opens this long before the window
  TimePs window_lead = -1;            // herald->photon lead inside window; -1 = delta_t/2
  TimePs run_duration = 1 * kPsPerS;
  std::uint64_t max_accepted_triggers = 0; // 0 = until run_duration
  Mode mode = Mode::PeakIn;
  TimePs peak_out_delay = 50 * kPsPerNs;
  std::array<bool, 2> blocked = {false, false};
  RngSeed seed{12345};

  void validate() const;
  TimePs effective_window_lead() const;
};

// Fixed per-trigger timing derived from a config. The FPGA counts clock steps
// from the herald, so the trigger->open delay is quantized to the step; the
// gate is anchored to the undelayed switch trigger in both modes.
struct TriggerGeometry {
  TimePs open_offset = 0;       // trigger -> window open
  TimePs gate_start_offset = 0; // trigger -> gate start
  TimePs gate_length = 0;
  TimePs window_open_in_gate = 0;
  TimePs window_close_in_gate = 0;
  TimePs peak_center_in_gate = 0; // expected heralded-photon arrival
};

TriggerGeometry compute_geometry(const ExperimentConfig& config);

// Greedy earliest-first trigger acceptance: a herald is accepted iff it falls
// at or after the previous window's close + t_dead. One window per accepted
// herald, opening trigger_to_open after it (already quantized).
ShutterSchedule build_shutter_schedule(const EventStream& heralds, const SwitchProfile& profile,
                                       TimePs t_dead, TimePs trigger_to_open);

// Transmission of the drive-pulse trapezoid at time t for the given window.
double switch_transmission(TimePs t, const Window& window, const SwitchProfile& profile);

// Bernoulli-transmit each photon through the nearest window's trapezoid,
// `extinction` elsewhere.
EventStream transmit_through_switch(const EventStream& signal, const ShutterSchedule& schedule,
                                    const SwitchProfile& profile, RngSeed seed);

// Route each event to output 1 with probability `ratio`, else output 2.
std::pair<EventStream, EventStream> split_fbs(const EventStream& stream, double ratio,
                                              RngSeed seed);

// Gated detection over a list of gate start times. Returns at most one
// detection per gate (times relative to the gate start).
std::vector<std::vector<Detection>> detect(const EventStream& photons,
                                           const std::vector<TimePs>& gate_starts,
                                           const DetectorModel& model, RngSeed seed);

struct RunResult {
  std::vector<TriggerRecord> records;
  std::uint64_t n_triggers = 0;
  TriggerGeometry geometry;
};

// Full pipeline for one configuration. The sink variant streams records
// without retaining them, for long runs.
using TriggerSink = std::function<void(const TriggerRecord&)>;

std::uint64_t run_experiment_streaming(const ExperimentConfig& config, const TriggerSink& sink);
RunResult run_experiment(const ExperimentConfig& config);

} // namespace hspsim
