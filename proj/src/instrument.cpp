#include "hspsim/instrument.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <queue>

#include "hspsim/errors.hpp"
#include "hspsim/stochastic.hpp"

namespace hspsim {

std::string_view mode_name(Mode m) { return m == Mode::PeakIn ? "peak_in" : "peak_out"; }

Mode mode_from_name(std::string_view name) {
  if (name == "peak_in") return Mode::PeakIn;
  if (name == "peak_out") return Mode::PeakOut;
  throw InvalidParameterError("unknown mode: " + std::string(name));
}

void SwitchProfile::validate() const {
  if (delta_t_switch <= 0) throw InvalidParameterError("delta_t_switch must be > 0");
  if (rise_fall_time < 0) throw InvalidParameterError("rise_fall_time must be >= 0");
  if (extinction < 0.0 || extinction >= 1.0) {
    throw InvalidParameterError("extinction must be in [0,1)");
  }
  if (quantization_step <= 0) throw InvalidParameterError("quantization_step must be > 0");
}

void DetectorModel::validate() const {
  if (efficiency < 0.0 || efficiency > 1.0) throw InvalidParameterError("efficiency in [0,1]");
  if (dark_count_probability_per_gate < 0.0 || dark_count_probability_per_gate > 1.0) {
    throw InvalidParameterError("dark_count_probability_per_gate in [0,1]");
  }
  if (gate_length <= 0) throw InvalidParameterError("gate_length must be > 0");
  if (dead_time < 0) throw InvalidParameterError("dead_time must be >= 0");
  if (afterpulse_probability < 0.0 || afterpulse_probability > 1.0) {
    throw InvalidParameterError("afterpulse_probability in [0,1]");
  }
  if (afterpulse_tau <= 0) throw InvalidParameterError("afterpulse_tau must be > 0");
  if (jitter_fwhm < 0) throw InvalidParameterError("jitter_fwhm must be >= 0");
}

void ExperimentConfig::validate() const {
  if (pair_rate_per_s < 0.0) throw InvalidParameterError("pair_rate_per_s must be >= 0");
  if (herald_efficiency < 0.0 || herald_efficiency > 1.0) {
    throw InvalidParameterError("herald_efficiency in [0,1]");
  }
  if (herald_dark_rate_per_s < 0.0) throw InvalidParameterError("herald_dark_rate_per_s >= 0");
  if (herald_jitter_fwhm < 0) throw InvalidParameterError("herald_jitter_fwhm >= 0");
  if (signal_coupling_gamma < 0.0 || signal_coupling_gamma > 1.0) {
    throw InvalidParameterError("signal_coupling_gamma in [0,1]");
  }
  if (fiber_delay < 0) throw InvalidParameterError("fiber_delay >= 0");
  if (background_rate_per_s < 0.0) throw InvalidParameterError("background_rate_per_s >= 0");
  switch_profile.validate();
  for (const auto& det : detectors) det.validate();
  if (fbs_ratio <= 0.0 || fbs_ratio >= 1.0) throw InvalidParameterError("fbs_ratio in (0,1)");
  if (apparatus_efficiency_eta < 0.0 || apparatus_efficiency_eta > 1.0) {
    throw InvalidParameterError("apparatus_efficiency_eta in [0,1]");
  }
  if (t_dead < 0) throw InvalidParameterError("t_dead >= 0");
  if (gate_lead < 0) throw InvalidParameterError("gate_lead >= 0");
  if (run_duration <= 0) throw InvalidParameterError("run_duration must be > 0");
  if (peak_out_delay < 0) throw InvalidParameterError("peak_out_delay >= 0");
}

TimePs ExperimentConfig::effective_window_lead() const {
  return window_lead >= 0 ? window_lead : switch_profile.delta_t_switch / 2;
}

namespace {

TimePs quantize_to_step(TimePs value, TimePs step) {
  const double steps = static_cast<double>(value) / static_cast<double>(step);
  return static_cast<TimePs>(std::llround(steps)) * step;
}

} // namespace

TriggerGeometry compute_geometry(const ExperimentConfig& config) {
  const auto& sw = config.switch_profile;
  const TimePs lead = config.effective_window_lead();
  TimePs delay_nominal = config.fiber_delay - lead;
  if (delay_nominal < 0) throw ConfigurationError("window lead exceeds fiber delay");

  const TimePs delay_in = quantize_to_step(delay_nominal, sw.quantization_step);
  const TimePs delay_out =
      quantize_to_step(delay_nominal + config.peak_out_delay, sw.quantization_step);

  TriggerGeometry g;
  g.open_offset = config.mode == Mode::PeakIn ? delay_in : delay_out;
  g.gate_start_offset = delay_in - config.gate_lead;
  g.gate_length = config.detectors[0].gate_length;
  if (config.detectors[1].gate_length != g.gate_length) {
    throw ConfigurationError("detectors must share one gate length");
  }
  g.window_open_in_gate = g.open_offset - g.gate_start_offset;
  g.window_close_in_gate = g.window_open_in_gate + sw.delta_t_switch;
  g.peak_center_in_gate = config.fiber_delay - g.gate_start_offset;

  if (g.peak_center_in_gate < 0 || g.peak_center_in_gate > g.gate_length) {
    throw ConfigurationError("heralded-photon arrival falls outside the detector gate");
  }
  if (config.mode == Mode::PeakIn) {
    if (g.window_open_in_gate - sw.rise_fall_time < 0 ||
        g.window_close_in_gate + sw.rise_fall_time > g.gate_length) {
      throw ConfigurationError("switch window does not fit inside the detector gate");
    }
  }
  return g;
}

void ShutterSchedule::check_invariants(TimePs delta_t_switch, TimePs t_dead) const {
  TimePs prev_close = INT64_MIN;
  TimePs prev_trigger = INT64_MIN / 2;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& w = windows[i];
    if (w.close - w.open != delta_t_switch) {
      throw ConfigurationError("window duration != delta_t_switch");
    }
    if (w.open <= prev_close) throw ConfigurationError("windows overlap or are unsorted");
    if (i > 0 && accepted_triggers[i] - prev_trigger < delta_t_switch + t_dead) {
      throw ConfigurationError("accepted triggers violate the dead-time spacing");
    }
    if (dead_until[i] != w.close + t_dead) throw ConfigurationError("dead_until mismatch");
    prev_close = w.close;
    prev_trigger = accepted_triggers[i];
  }
}

ShutterSchedule build_shutter_schedule(const EventStream& heralds, const SwitchProfile& profile,
                                       TimePs t_dead, TimePs trigger_to_open) {
  profile.validate();
  if (t_dead < 0) throw InvalidParameterError("t_dead must be >= 0");
  if (!heralds.is_sorted()) throw InvalidParameterError("herald stream must be sorted");

  const TimePs delay = quantize_to_step(trigger_to_open, profile.quantization_step);
  ShutterSchedule schedule;
  TimePs dead_until = INT64_MIN / 2;
  for (const Event& h : heralds.events) {
    if (h.time < dead_until) continue;
    const TimePs open = h.time + delay;
    schedule.windows.push_back(Window{open, open + profile.delta_t_switch});
    schedule.dead_until.push_back(open + profile.delta_t_switch + t_dead);
    schedule.accepted_triggers.push_back(h.time);
    dead_until = schedule.dead_until.back(); // next herald must clear close + t_dead
  }
  return schedule;
}

double switch_transmission(TimePs t, const Window& window, const SwitchProfile& profile) {
  const TimePs rise = profile.rise_fall_time;
  if (t >= window.open && t <= window.close) return 1.0;
  if (rise > 0) {
    if (t > window.open - rise && t < window.open) {
      const double frac =
          static_cast<double>(t - (window.open - rise)) / static_cast<double>(rise);
      return std::max(profile.extinction, frac);
    }
    if (t > window.close && t < window.close + rise) {
      const double frac =
          static_cast<double>(window.close + rise - t) / static_cast<double>(rise);
      return std::max(profile.extinction, frac);
    }
  }
  return profile.extinction;
}

EventStream transmit_through_switch(const EventStream& signal, const ShutterSchedule& schedule,
                                    const SwitchProfile& profile, RngSeed seed) {
  if (!signal.is_sorted()) throw InvalidParameterError("signal stream must be sorted");

  EventStream out;
  out.channel = signal.channel;
  RandomStream rng(seed);
  const auto& windows = schedule.windows;
  std::size_t idx = 0; // first window with close + rise >= t (monotone in t)
  for (const Event& e : signal.events) {
    while (idx < windows.size() && windows[idx].close + profile.rise_fall_time < e.time) ++idx;
    double p = profile.extinction;
    if (idx < windows.size()) p = std::max(p, switch_transmission(e.time, windows[idx], profile));
    if (rng.bernoulli(p)) out.events.push_back(e);
  }
  return out;
}

std::pair<EventStream, EventStream> split_fbs(const EventStream& stream, double ratio,
                                              RngSeed seed) {
  if (ratio <= 0.0 || ratio >= 1.0) throw InvalidParameterError("fbs ratio must be in (0,1)");
  EventStream out1, out2;
  out1.channel = stream.channel + ".1";
  out2.channel = stream.channel + ".2";
  RandomStream rng(seed);
  for (const Event& e : stream.events) {
    (rng.bernoulli(ratio) ? out1 : out2).events.push_back(e);
  }
  return {std::move(out1), std::move(out2)};
}

namespace {

// Per-detector RNG bundle; draw order inside one gate is fixed (photons in
// time order, then the dark draw, then afterpulse pendings).
struct DetectorStreams {
  RandomStream photon;
  RandomStream jitter;
  RandomStream dark;
  RandomStream afterpulse;
};

DetectorStreams make_detector_streams(RngSeed master, std::uint64_t det_index) {
  return DetectorStreams{
      RandomStream(derive_seed(master, StreamPurpose::DetectorPhoton, det_index)),
      RandomStream(derive_seed(master, StreamPurpose::DetectorJitter, det_index)),
      RandomStream(derive_seed(master, StreamPurpose::DetectorDarks, det_index)),
      RandomStream(derive_seed(master, StreamPurpose::DetectorAfterpulse, det_index)),
  };
}

struct GateCandidate {
  TimePs time;
  Origin origin;
};

std::optional<Detection> detect_one_gate(const std::vector<GateCandidate>& photons,
                                         TimePs gate_start, const DetectorModel& model,
                                         DetectorStreams& rng,
                                         std::deque<TimePs>& pending_avalanches) {
  const TimePs gate_end = gate_start + model.gate_length;
  const double sigma = static_cast<double>(model.jitter_fwhm) * kFwhmToSigma;

  std::optional<GateCandidate> best;
  auto consider = [&](TimePs t, Origin origin) {
    if (!best || t < best->time) best = GateCandidate{t, origin};
  };

  for (const GateCandidate& ph : photons) {
    if (!rng.photon.bernoulli(model.efficiency)) continue;
    TimePs t = ph.time;
    if (model.jitter_fwhm > 0) t += static_cast<TimePs>(std::llround(rng.jitter.normal(0.0, sigma)));
    t = std::clamp(t, gate_start, gate_end - 1);
    consider(t, ph.origin);
  }
  if (rng.dark.bernoulli(model.dark_count_probability_per_gate)) {
    consider(rng.dark.uniform_time(gate_start, gate_end), Origin::DarkCount);
  }
  if (model.afterpulse_probability > 0.0) {
    while (!pending_avalanches.empty()) {
      const double dt = static_cast<double>(gate_start - pending_avalanches.front());
      const double weight =
          model.afterpulse_probability * std::exp(-dt / static_cast<double>(model.afterpulse_tau));
      if (weight >= 1e-12) break;
      pending_avalanches.pop_front();
    }
    for (const TimePs t0 : pending_avalanches) {
      const double dt = static_cast<double>(gate_start - t0);
      const double weight =
          model.afterpulse_probability * std::exp(-dt / static_cast<double>(model.afterpulse_tau));
      if (rng.afterpulse.bernoulli(weight)) {
        consider(rng.afterpulse.uniform_time(gate_start, gate_end), Origin::Afterpulse);
      }
    }
  }

  if (!best) return std::nullopt;
  if (model.afterpulse_probability > 0.0) pending_avalanches.push_back(best->time);
  return Detection{best->time - gate_start, best->origin};
}

} // namespace

std::vector<std::vector<Detection>> detect(const EventStream& photons,
                                           const std::vector<TimePs>& gate_starts,
                                           const DetectorModel& model, RngSeed seed) {
  model.validate();
  if (!photons.is_sorted()) throw InvalidParameterError("photon stream must be sorted");
  for (std::size_t i = 1; i < gate_starts.size(); ++i) {
    if (gate_starts[i] < gate_starts[i - 1] + model.gate_length) {
      throw ConfigurationError("gates overlap");
    }
  }

  DetectorStreams rng = make_detector_streams(seed, 0);
  std::deque<TimePs> pending;
  std::vector<std::vector<Detection>> out(gate_starts.size());
  std::size_t ph = 0;
  std::vector<GateCandidate> in_gate;
  for (std::size_t g = 0; g < gate_starts.size(); ++g) {
    const TimePs gs = gate_starts[g];
    const TimePs ge = gs + model.gate_length;
    while (ph < photons.events.size() && photons.events[ph].time < gs) ++ph;
    in_gate.clear();
    for (std::size_t k = ph; k < photons.events.size() && photons.events[k].time < ge; ++k) {
      in_gate.push_back(GateCandidate{photons.events[k].time, photons.events[k].origin});
    }
    if (auto det = detect_one_gate(in_gate, gs, model, rng, pending)) {
      out[g].push_back(*det);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full experiment engine.
//
// Detectors are gated, so only photons inside some gate can ever be recorded;
// the engine therefore walks the pair process lazily and samples stray
// background photons gate-by-gate (a homogeneous Poisson process restricted
// to disjoint intervals is again Poisson). This keeps arbitrarily long runs
// in O(1) memory while remaining draw-for-draw deterministic per seed.
// ---------------------------------------------------------------------------

namespace {

struct HeraldCandidate {
  TimePs time;
  std::int64_t pair_index; // -1 for heralding-detector dark counts
  bool operator>(const HeraldCandidate& other) const { return time > other.time; }
};

struct IndexedPair {
  std::int64_t index;
  TimePs time;
};

class ExperimentEngine {
public:
  explicit ExperimentEngine(const ExperimentConfig& config)
      : config_(config),
        geometry_(compute_geometry(config)),
        pairs_(config.pair_rate_per_s, derive_seed(config.seed, StreamPurpose::PairTimes)),
        herald_darks_(config.herald_dark_rate_per_s,
                      derive_seed(config.seed, StreamPurpose::HeraldDarks)),
        herald_thin_(derive_seed(config.seed, StreamPurpose::HeraldThinning)),
        herald_jitter_(derive_seed(config.seed, StreamPurpose::HeraldJitter)),
        coupling_(derive_seed(config.seed, StreamPurpose::SignalCoupling)),
        background_(derive_seed(config.seed, StreamPurpose::BackgroundPhotons)),
        transmission_(derive_seed(config.seed, StreamPurpose::SwitchTransmission)),
        beam_splitter_(derive_seed(config.seed, StreamPurpose::BeamSplitter)),
        det_{make_detector_streams(config.seed, 0), make_detector_streams(config.seed, 1)} {
    herald_sigma_ = static_cast<double>(config.herald_jitter_fwhm) * kFwhmToSigma;
    // Box-Muller output is bounded by ~9.2 sigma, so this horizon is a hard
    // bound on how far jitter can move a herald ahead of its pair.
    sort_margin_ = static_cast<TimePs>(10.0 * herald_sigma_) + 1;
    run_horizon_ = config.run_duration + config.fiber_delay + kPsPerUs;
  }

  std::uint64_t run(const TriggerSink& sink) {
    const auto& sw = config_.switch_profile;
    const std::uint64_t max_triggers =
        config_.max_accepted_triggers == 0 ? UINT64_MAX : config_.max_accepted_triggers;
    TimePs dead_until = INT64_MIN / 2;
    TimePs prev_trigger = INT64_MIN / 2;
    std::uint64_t n_triggers = 0;

    while (n_triggers < max_triggers) {
      const HeraldCandidate h = next_herald();
      if (h.time >= config_.run_duration) break;
      if (h.time < 0 || h.time < dead_until) continue;

      const TimePs trigger = h.time;
      const Window window{trigger + geometry_.open_offset,
                          trigger + geometry_.open_offset + sw.delta_t_switch};
      dead_until = window.close + config_.t_dead;
      if (n_triggers > 0 && trigger - prev_trigger < sw.delta_t_switch + config_.t_dead) {
        throw ConfigurationError("dead-time invariant violated");
      }
      prev_trigger = trigger;

      TriggerRecord record;
      record.trigger_time = trigger;
      record.window = window;
      record.mode = config_.mode;
      process_gate(trigger, window, h.pair_index, record);
      sink(record);
      ++n_triggers;
    }
    return n_triggers;
  }

  const TriggerGeometry& geometry() const { return geometry_; }

private:
  void advance_one_pair() {
    const std::int64_t idx = next_pair_index_++;
    const TimePs t = pairs_.take();
    pair_buffer_.push_back(IndexedPair{idx, t});
    if (herald_thin_.bernoulli(config_.herald_efficiency)) {
      TimePs det_time = t;
      if (config_.herald_jitter_fwhm > 0) {
        det_time += static_cast<TimePs>(std::llround(herald_jitter_.normal(0.0, herald_sigma_)));
      }
      herald_queue_.push(HeraldCandidate{det_time, idx});
    }
  }

  void advance_pairs_until(TimePs t) {
    while (pairs_.peek() <= t) advance_one_pair();
  }

  // Next herald detection in time order, merging pair-derived detections with
  // heralding-detector darks. Pairs are advanced far enough that jitter can
  // no longer produce an earlier candidate.
  HeraldCandidate next_herald() {
    for (;;) {
      const TimePs safe_until =
          herald_queue_.empty() ? run_horizon_ : herald_queue_.top().time + sort_margin_;
      if (pairs_.peek() <= safe_until && pairs_.peek() <= run_horizon_) {
        advance_one_pair();
        continue;
      }
      const TimePs dark_time = herald_darks_.peek();
      if (!herald_queue_.empty() && herald_queue_.top().time <= dark_time) {
        const HeraldCandidate top = herald_queue_.top();
        herald_queue_.pop();
        return top;
      }
      if (dark_time < run_horizon_) {
        return HeraldCandidate{herald_darks_.take(), -1};
      }
      return HeraldCandidate{run_horizon_, -1}; // exhausted
    }
  }

  void process_gate(TimePs trigger, const Window& window, std::int64_t trigger_pair,
                    TriggerRecord& record) {
    const TimePs gate_start = trigger + geometry_.gate_start_offset;
    const TimePs gate_end = gate_start + geometry_.gate_length;

    advance_pairs_until(gate_end - config_.fiber_delay);
    while (!pair_buffer_.empty() &&
           pair_buffer_.front().time + config_.fiber_delay < gate_start) {
      pair_buffer_.pop_front();
    }

    // Signal photons reaching the switch inside this gate: the accepted
    // herald's twin plus any unheralded neighbours.
    photon_scratch_.clear();
    for (const IndexedPair& p : pair_buffer_) {
      const TimePs arrival = p.time + config_.fiber_delay;
      if (arrival >= gate_end) break;
      if (arrival < gate_start) continue;
      if (!coupling_.bernoulli(config_.signal_coupling_gamma)) continue;
      photon_scratch_.push_back(GateCandidate{
          arrival, p.index == trigger_pair ? Origin::HeraldedSignal : Origin::Background});
    }

    const double stray_mean = per_s_to_per_ps(config_.background_rate_per_s) *
                              static_cast<double>(geometry_.gate_length);
    const std::uint64_t n_stray = background_.poisson(stray_mean);
    for (std::uint64_t i = 0; i < n_stray; ++i) {
      photon_scratch_.push_back(
          GateCandidate{background_.uniform_time(gate_start, gate_end), Origin::Background});
    }
    std::stable_sort(photon_scratch_.begin(), photon_scratch_.end(),
                     [](const GateCandidate& a, const GateCandidate& b) { return a.time < b.time; });

    arm_scratch_[0].clear();
    arm_scratch_[1].clear();
    for (const GateCandidate& ph : photon_scratch_) {
      const double p = switch_transmission(ph.time, window, config_.switch_profile);
      if (!transmission_.bernoulli(p)) continue;
      const int arm = beam_splitter_.bernoulli(config_.fbs_ratio) ? 0 : 1;
      arm_scratch_[arm].push_back(ph);
    }

    for (int d = 0; d < 2; ++d) {
      const std::vector<GateCandidate>& photons =
          config_.blocked[d] ? empty_candidates_ : arm_scratch_[d];
      if (auto det = detect_one_gate(photons, gate_start, config_.detectors[d], det_[d],
                                     pending_[d])) {
        record.detections[d].push_back(*det);
      }
    }
  }

  ExperimentConfig config_;
  TriggerGeometry geometry_;

  PoissonWalker pairs_;
  PoissonWalker herald_darks_;
  RandomStream herald_thin_;
  RandomStream herald_jitter_;
  RandomStream coupling_;
  RandomStream background_;
  RandomStream transmission_;
  RandomStream beam_splitter_;
  std::array<DetectorStreams, 2> det_;
  std::array<std::deque<TimePs>, 2> pending_;

  double herald_sigma_ = 0.0;
  TimePs sort_margin_ = 0;
  TimePs run_horizon_ = 0;
  std::int64_t next_pair_index_ = 0;
  std::deque<IndexedPair> pair_buffer_;
  std::priority_queue<HeraldCandidate, std::vector<HeraldCandidate>, std::greater<>> herald_queue_;
  std::vector<GateCandidate> photon_scratch_;
  std::array<std::vector<GateCandidate>, 2> arm_scratch_;
  const std::vector<GateCandidate> empty_candidates_;
};

} // namespace

std::uint64_t run_experiment_streaming(const ExperimentConfig& config, const TriggerSink& sink) {
  config.validate();
  ExperimentEngine engine(config);
  return engine.run(sink);
}

RunResult run_experiment(const ExperimentConfig& config) {
  RunResult result;
  result.geometry = compute_geometry(config);
  result.n_triggers = run_experiment_streaming(
      config, [&result](const TriggerRecord& r) { result.records.push_back(r); });
  return result;
}

} // namespace hspsim
