#include "hspsim/oracle.hpp"

#include <cmath>

#include "hspsim/errors.hpp"

namespace hspsim {

namespace {

// Integral of the drive-pulse transmission over the gate, split into the
// open-window region (plateau plus ramps) and the rest of the gate. All in
// gate coordinates, clipped to [0, gate_length].
struct TransmissionAreas {
  double window_region_ps = 0.0; // integral of T over the window region
  double dark_region_ps = 0.0;   // integral of T over the remainder (leak)
  double window_region_width_ps = 0.0;
};

double clip_len(double lo, double hi, double a, double b) {
  const double l = std::max(lo, a);
  const double h = std::min(hi, b);
  return h > l ? h - l : 0.0;
}

TransmissionAreas transmission_areas(const TriggerGeometry& g, const SwitchProfile& sw) {
  const double gate = static_cast<double>(g.gate_length);
  const double wo = static_cast<double>(g.window_open_in_gate);
  const double wc = static_cast<double>(g.window_close_in_gate);
  const double rise = static_cast<double>(sw.rise_fall_time);
  const double eps = sw.extinction;

  TransmissionAreas areas;
  const double region_lo = wo - rise;
  const double region_hi = wc + rise;
  areas.window_region_width_ps = clip_len(region_lo, region_hi, 0.0, gate);

  // Plateau contributes 1, a fully contained ramp (1 + eps^2) / 2 on average.
  const double plateau = clip_len(wo, wc, 0.0, gate);
  const double ramp_avg = rise > 0.0 ? (1.0 + eps * eps) / 2.0 : 0.0;
  const double ramp_up = clip_len(region_lo, wo, 0.0, gate);
  const double ramp_down = clip_len(wc, region_hi, 0.0, gate);
  // Partially clipped ramps are approximated by their average height; with
  // 2.5 ns ramps against 100 ns gates the clipped slivers are negligible.
  areas.window_region_ps = plateau + ramp_avg * (ramp_up + ramp_down);
  areas.dark_region_ps = eps * (gate - areas.window_region_width_ps);
  return areas;
}

struct DetectorClassProbs {
  double t = 0.0;  // heralded photon recorded
  double no_win = 1.0;  // no window-region cause fires
  double no_dark = 1.0; // no dark-region cause fires

  // Class probabilities with priority True > Bkg > Dark; sums to 1 exactly.
  double p(OutcomeClass c) const {
    switch (c) {
      case OutcomeClass::True: return t;
      case OutcomeClass::Bkg: return (1.0 - t) * (1.0 - no_win);
      case OutcomeClass::Dark: return (1.0 - t) * no_win * (1.0 - no_dark);
      case OutcomeClass::None: return (1.0 - t) * no_win * no_dark;
    }
    return 0.0;
  }
};

} // namespace

double TriggerOutcomeDistribution::sum() const {
  double s = 0.0;
  for (const auto& row : joint)
    for (double v : row) s += v;
  return s;
}

double mean_background_per_window(const ExperimentConfig& config) {
  const double bg_rate =
      config.background_rate_per_s + config.pair_rate_per_s * config.signal_coupling_gamma;
  const double width_ps = static_cast<double>(config.switch_profile.delta_t_switch +
                                              config.switch_profile.rise_fall_time);
  return per_s_to_per_ps(bg_rate) * width_ps;
}

TriggerOutcomeDistribution predict_trigger_distribution(const ExperimentConfig& config) {
  config.validate();
  if (mean_background_per_window(config) > 1.0) {
    throw AccuracyError("mean background per window exceeds 1; enumeration refused");
  }
  const TriggerGeometry geom = compute_geometry(config);
  const auto& sw = config.switch_profile;

  // Fraction of accepted triggers opened by heralding-detector darks; the
  // acceptance rule is blind to the herald's origin.
  const double herald_rate =
      config.pair_rate_per_s * config.herald_efficiency + config.herald_dark_rate_per_s;
  const double f_dark_herald =
      herald_rate > 0.0 ? config.herald_dark_rate_per_s / herald_rate : 0.0;

  // Transmission seen by the heralded photon at its expected arrival.
  const Window window{geom.window_open_in_gate, geom.window_close_in_gate};
  const double t_peak = switch_transmission(geom.peak_center_in_gate, window, sw);
  const double p_present = (1.0 - f_dark_herald) * config.signal_coupling_gamma * t_peak;

  // Background photons at the switch: stray light plus unheralded signal
  // photons (the trigger's own pair excluded; the rest of the pair process
  // remains Poisson).
  const double bg_rate_per_ps = per_s_to_per_ps(
      config.background_rate_per_s + config.pair_rate_per_s * config.signal_coupling_gamma);
  const TransmissionAreas areas = transmission_areas(geom, sw);

  const std::array<double, 2> route = {config.fbs_ratio, 1.0 - config.fbs_ratio};
  std::array<DetectorClassProbs, 2> base;
  std::array<double, 2> mu_win{}, mu_dark{};
  for (int i = 0; i < 2; ++i) {
    const auto& det = config.detectors[i];
    const double eff = config.blocked[i] ? 0.0 : det.efficiency;
    mu_win[i] = bg_rate_per_ps * areas.window_region_ps * route[i] * eff;
    mu_dark[i] = bg_rate_per_ps * areas.dark_region_ps * route[i] * eff;
    const double w_frac = areas.window_region_width_ps / static_cast<double>(geom.gate_length);
    const double d_win = det.dark_count_probability_per_gate * w_frac;
    const double d_dark = det.dark_count_probability_per_gate * (1.0 - w_frac);
    base[i].no_win = std::exp(-mu_win[i]) * (1.0 - d_win);
    base[i].no_dark = std::exp(-mu_dark[i]) * (1.0 - d_dark);
  }

  // Routes: photon absent / to arm 1 / to arm 2 (exclusive).
  struct Route {
    double prob;
    std::array<double, 2> t;
  };
  const std::array<Route, 3> routes = {
      Route{1.0 - p_present, {0.0, 0.0}},
      Route{p_present * route[0], {config.blocked[0] ? 0.0 : config.detectors[0].efficiency, 0.0}},
      Route{p_present * route[1], {0.0, config.blocked[1] ? 0.0 : config.detectors[1].efficiency}},
  };

  TriggerOutcomeDistribution dist;
  for (const Route& r : routes) {
    std::array<DetectorClassProbs, 2> dp = base;
    dp[0].t = r.t[0];
    dp[1].t = r.t[1];
    for (int c1 = 0; c1 < 4; ++c1) {
      for (int c2 = 0; c2 < 4; ++c2) {
        dist.joint[c1][c2] += r.prob * dp[0].p(static_cast<OutcomeClass>(c1)) *
                              dp[1].p(static_cast<OutcomeClass>(c2));
      }
    }
  }

  for (int c1 = 0; c1 < 4; ++c1) {
    for (int c2 = 0; c2 < 4; ++c2) {
      const double p = dist.joint[c1][c2];
      if (c1 == static_cast<int>(OutcomeClass::True)) dist.p_true[0] += p;
      if (c1 == static_cast<int>(OutcomeClass::Bkg)) dist.p_bkg[0] += p;
      if (c1 == static_cast<int>(OutcomeClass::Dark)) dist.p_dark[0] += p;
      if (c1 != 0) dist.p_fire[0] += p;
      if (c2 == static_cast<int>(OutcomeClass::True)) dist.p_true[1] += p;
      if (c2 == static_cast<int>(OutcomeClass::Bkg)) dist.p_bkg[1] += p;
      if (c2 == static_cast<int>(OutcomeClass::Dark)) dist.p_dark[1] += p;
      if (c2 != 0) dist.p_fire[1] += p;
      if (c1 != 0 && c2 != 0) dist.p12_tot_tot += p;
    }
  }

  // Blocked-run coincidence terms: a blocked detector fires from darks only.
  std::array<double, 2> dark_fire{};
  for (int i = 0; i < 2; ++i) {
    const double d = config.detectors[i].dark_count_probability_per_gate;
    dark_fire[i] = d;
  }
  dist.p12_dark_tot = dark_fire[0] * dist.p_fire[1];
  dist.p12_tot_dark = dist.p_fire[0] * dark_fire[1];
  dist.p12_dark_dark = dark_fire[0] * dark_fire[1];
  dist.p12_signal =
      dist.p12_tot_tot - dist.p12_dark_tot - dist.p12_tot_dark + dist.p12_dark_dark;

  const double noise = dist.p_bkg[0] + dist.p_bkg[1];
  const double denom_onf = dist.p_true[0] + dist.p_true[1] + noise;
  dist.onf = denom_onf > 0.0 ? noise / denom_onf : 0.0;
  const double singles =
      (dist.p_true[0] + dist.p_bkg[0]) * (dist.p_true[1] + dist.p_bkg[1]);
  dist.alpha = singles > 0.0 ? dist.p12_signal / singles : 0.0;
  return dist;
}

std::pair<double, double> predict_first_order(const ExperimentConfig& config) {
  config.validate();
  const TriggerGeometry geom = compute_geometry(config);
  const auto& sw = config.switch_profile;

  const double herald_rate =
      config.pair_rate_per_s * config.herald_efficiency + config.herald_dark_rate_per_s;
  const double f_dark_herald =
      herald_rate > 0.0 ? config.herald_dark_rate_per_s / herald_rate : 0.0;
  const Window window{geom.window_open_in_gate, geom.window_close_in_gate};
  const double t_peak = switch_transmission(geom.peak_center_in_gate, window, sw);
  const double p_present = (1.0 - f_dark_herald) * config.signal_coupling_gamma * t_peak;

  const double bg_rate_per_ps = per_s_to_per_ps(
      config.background_rate_per_s + config.pair_rate_per_s * config.signal_coupling_gamma);
  const double eff_width = static_cast<double>(sw.delta_t_switch + sw.rise_fall_time);

  const std::array<double, 2> route = {config.fbs_ratio, 1.0 - config.fbs_ratio};
  std::array<double, 2> t{}, b{};
  for (int i = 0; i < 2; ++i) {
    const double eff = config.blocked[i] ? 0.0 : config.detectors[i].efficiency;
    t[i] = p_present * route[i] * eff;
    b[i] = bg_rate_per_ps * eff_width * route[i] * eff;
    const double d = config.detectors[i].dark_count_probability_per_gate;
    if (t[i] >= 0.1 || b[i] >= 0.1 || d >= 0.1) {
      throw AccuracyError("per-window probability >= 0.1; first-order formulas refused");
    }
  }

  const double noise = b[0] + b[1];
  const double denom = t[0] + t[1] + noise;
  const double onf = denom > 0.0 ? noise / denom : 0.0;
  const double p12 = t[0] * b[1] + t[1] * b[0] + b[0] * b[1];
  const double singles = (t[0] + b[0]) * (t[1] + b[1]);
  const double alpha = singles > 0.0 ? p12 / singles : 0.0;
  return {onf, alpha};
}

} // namespace hspsim
