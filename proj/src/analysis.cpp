#include "hspsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include "hspsim/errors.hpp"
#include "hspsim/oracle.hpp"

namespace hspsim {

std::uint64_t GateHistogram::total(int detector) const {
  std::uint64_t s = 0;
  for (std::uint64_t b : bins[detector]) s += b;
  return s;
}

RunAccumulator::RunAccumulator(TimePs bin_width, TimePs gate_length) {
  if (bin_width <= 0 || gate_length % bin_width != 0) {
    throw InvalidParameterError("bin width must divide the gate length");
  }
  hist_.bin_width = bin_width;
  hist_.gate_length = gate_length;
  const std::size_t n_bins = static_cast<std::size_t>(gate_length / bin_width);
  hist_.bins[0].assign(n_bins, 0);
  hist_.bins[1].assign(n_bins, 0);
}

void RunAccumulator::add(const TriggerRecord& record) {
  bool fired[2] = {false, false};
  for (int d = 0; d < 2; ++d) {
    ++hist_.n_triggers[d];
    for (const Detection& det : record.detections[d]) {
      const std::size_t bin = static_cast<std::size_t>(det.time_in_gate / hist_.bin_width);
      if (bin < hist_.bins[d].size()) ++hist_.bins[d][bin];
      fired[d] = true;
    }
  }
  if (fired[0]) ++fired_[0];
  if (fired[1]) ++fired_[1];
  if (fired[0] && fired[1]) ++both_;
}

GateHistogram build_histogram(std::span<const TriggerRecord> records, TimePs bin_width,
                              TimePs gate_length) {
  RunAccumulator acc(bin_width, gate_length);
  for (const TriggerRecord& r : records) acc.add(r);
  return acc.histogram();
}

RegionBounds classify_regions(Interval open_window, TimePs peak_center, TimePs peak_full_width,
                              TimePs gate_length, Mode mode) {
  if (peak_full_width < 0) throw InvalidParameterError("peak width must be >= 0");
  if (peak_full_width > open_window.width()) {
    throw ConfigurationError("peak region wider than the open window");
  }
  RegionBounds rb;
  rb.gate_length = gate_length;
  rb.mode = mode;
  rb.open_window = {std::max<TimePs>(0, open_window.lo), std::min(gate_length, open_window.hi)};
  rb.peak = {peak_center - peak_full_width / 2, peak_center + peak_full_width / 2};
  rb.peak.lo = std::max<TimePs>(0, rb.peak.lo);
  rb.peak.hi = std::min(gate_length, rb.peak.hi);

  const bool peak_inside =
      rb.peak.lo >= rb.open_window.lo && rb.peak.hi <= rb.open_window.hi;
  if (mode == Mode::PeakIn && !peak_inside) {
    throw ConfigurationError("peak-in mode requires the peak inside the open window");
  }
  if (mode == Mode::PeakOut && rb.peak.width() > 0 &&
      rb.peak.hi > rb.open_window.lo && rb.peak.lo < rb.open_window.hi) {
    throw ConfigurationError("peak-out mode requires the peak outside the open window");
  }
  return rb;
}

RegionBounds regions_for_config(const ExperimentConfig& config, TimePs peak_full_width) {
  const TriggerGeometry g = compute_geometry(config);
  const TimePs rise = config.switch_profile.rise_fall_time;
  Interval window{g.window_open_in_gate - rise, g.window_close_in_gate + rise};
  return classify_regions(window, g.peak_center_in_gate, peak_full_width, g.gate_length,
                          config.mode);
}

namespace {

struct RegionCounts {
  double peak = 0.0;
  double window = 0.0; // includes the peak when the peak lies inside
  double dark = 0.0;   // includes the peak when the peak lies outside
};

RegionCounts count_regions(const GateHistogram& hist, const RegionBounds& rb, int detector) {
  RegionCounts rc;
  const TimePs bw = hist.bin_width;
  for (std::size_t i = 0; i < hist.bins[detector].size(); ++i) {
    const std::uint64_t c = hist.bins[detector][i];
    if (c == 0) continue;
    const TimePs center = static_cast<TimePs>(i) * bw + bw / 2;
    const double counts = static_cast<double>(c);
    if (rb.peak.contains(center)) rc.peak += counts;
    if (rb.open_window.contains(center)) {
      rc.window += counts;
    } else {
      rc.dark += counts;
    }
  }
  return rc;
}

} // namespace

ProbabilitySet estimate_probabilities(const GateHistogram& hist, const RegionBounds& regions) {
  ProbabilitySet ps;
  for (int d = 0; d < 2; ++d) {
    const std::uint64_t n = hist.n_triggers[d];
    if (n == 0) throw InsufficientDataError("no accepted triggers");
    ps.n_triggers[d] = n;

    const RegionCounts rc = count_regions(hist, regions, d);
    const bool peak_in_window =
        regions.peak.lo >= regions.open_window.lo && regions.peak.hi <= regions.open_window.hi;

    // Flat level under the peak, from the rest of whichever region the peak
    // sits in; the peak-region excess over it is the true-photon count.
    const double host_total = peak_in_window ? rc.window : rc.dark;
    const double host_width = static_cast<double>(
        peak_in_window ? regions.open_window.width()
                       : regions.gate_length - regions.open_window.width());
    const double peak_width = static_cast<double>(regions.peak.width());
    const double side_width = host_width - peak_width;
    const double density = side_width > 0 ? (host_total - rc.peak) / side_width : 0.0;
    const double n_true = std::max(0.0, rc.peak - density * peak_width);

    const double n_bkg = peak_in_window ? rc.window - n_true : rc.window;
    const double n_dark = peak_in_window ? rc.dark : rc.dark - n_true;

    const double inv_n = 1.0 / static_cast<double>(n);
    ps.p_true[d] = n_true * inv_n;
    ps.p_bkg[d] = std::max(0.0, n_bkg) * inv_n;
    ps.p_dark[d] = std::max(0.0, n_dark) * inv_n;
    ps.p_tot[d] = ps.p_true[d] + ps.p_bkg[d] + ps.p_dark[d];

    const double ratio = side_width > 0 ? peak_width / side_width : 0.0;
    ps.sigma_true[d] =
        std::sqrt(std::max(0.0, rc.peak + ratio * ratio * std::max(0.0, host_total - rc.peak))) *
        inv_n;
  }
  return ps;
}

double compute_onf(const ProbabilitySet& probs) {
  const double noise = probs.p_bkg_sum();
  const double denom = probs.p_true_sum() + noise;
  if (denom <= 0.0) throw InsufficientDataError("no counts in the open window");
  return noise / denom;
}

double onf_standard_error(const ProbabilitySet& probs) {
  const double n = static_cast<double>(probs.n_triggers[0] + probs.n_triggers[1]) / 2.0;
  const double b = probs.p_bkg_sum() * n;
  const double t = probs.p_true_sum() * n;
  const double tot = b + t;
  if (tot <= 0.0) return 0.0;
  return std::sqrt(t * t * b + b * b * t) / (tot * tot);
}

double CoincidenceCounts::probability() const {
  if (n_triggers == 0) throw InsufficientDataError("coincidence run has no triggers");
  return static_cast<double>(both_fired) / static_cast<double>(n_triggers);
}

bool configs_compatible(const ExperimentConfig& a, const ExperimentConfig& b) {
  const auto key = [](const ExperimentConfig& c) {
    return std::tuple(c.pair_rate_per_s, c.herald_efficiency, c.herald_dark_rate_per_s,
                      c.herald_jitter_fwhm, c.signal_coupling_gamma, c.fiber_delay,
                      c.background_rate_per_s, c.switch_profile.delta_t_switch,
                      c.switch_profile.rise_fall_time, c.switch_profile.extinction,
                      c.switch_profile.quantization_step, c.fbs_ratio,
                      c.apparatus_efficiency_eta, c.t_dead, c.gate_lead, c.window_lead,
                      c.mode, c.peak_out_delay);
  };
  const auto det_key = [](const DetectorModel& d) {
    return std::tuple(d.efficiency, d.dark_count_probability_per_gate, d.gate_length,
                      d.dead_time, d.afterpulse_probability, d.afterpulse_tau, d.jitter_fwhm);
  };
  return key(a) == key(b) && det_key(a.detectors[0]) == det_key(b.detectors[0]) &&
         det_key(a.detectors[1]) == det_key(b.detectors[1]);
}

CoincidenceSet count_coincidences(const CoincidenceCounts& unblocked,
                                  const CoincidenceCounts& blocked_1,
                                  const CoincidenceCounts& blocked_2,
                                  const CoincidenceCounts& blocked_both) {
  CoincidenceSet cs;
  cs.p12_tot_tot = unblocked.probability();
  cs.p12_dark_tot = blocked_1.probability();
  cs.p12_tot_dark = blocked_2.probability();
  cs.p12_dark_dark = blocked_both.probability();
  cs.p12_signal = cs.p12_tot_tot - cs.p12_dark_tot - cs.p12_tot_dark + cs.p12_dark_dark;

  auto var = [](const CoincidenceCounts& c) {
    return static_cast<double>(c.both_fired) /
           (static_cast<double>(c.n_triggers) * static_cast<double>(c.n_triggers));
  };
  cs.sigma_signal =
      std::sqrt(var(unblocked) + var(blocked_1) + var(blocked_2) + var(blocked_both));
  return cs;
}

double compute_alpha(const CoincidenceSet& coincidences, double p1_true_bkg,
                     double p2_true_bkg) {
  if (p1_true_bkg <= 0.0 || p2_true_bkg <= 0.0) {
    throw InsufficientDataError("single-detector probabilities must be > 0");
  }
  return coincidences.p12_signal / (p1_true_bkg * p2_true_bkg);
}

double alpha_standard_error(const CoincidenceSet& coincidences, double p1_true_bkg,
                            double p2_true_bkg) {
  if (p1_true_bkg <= 0.0 || p2_true_bkg <= 0.0) return 0.0;
  return coincidences.sigma_signal / (p1_true_bkg * p2_true_bkg);
}

double compute_r(const ProbabilitySet& probs_peak_in, const ProbabilitySet& probs_peak_out) {
  const double denom = probs_peak_in.p_true_sum();
  if (denom <= 0.0) throw InsufficientDataError("peak-in true-photon probability is zero");
  return probs_peak_out.p_true_sum() / denom;
}

double compute_gamma(const ProbabilitySet& probs, double eta) {
  if (eta <= 0.0) throw InvalidParameterError("eta must be > 0");
  return probs.p_true_sum() / eta;
}

double student_t_975(std::size_t dof) {
  static constexpr double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                     2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                     2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                     2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (dof == 0) return std::numeric_limits<double>::infinity();
  if (dof <= 30) return table[dof - 1];
  return 1.960;
}

FitResult fit_linear(std::span<const FitPoint> points) {
  if (points.size() < 3) throw InsufficientDataError("linear fit needs at least 3 points");

  bool weighted = true;
  for (const FitPoint& p : points) {
    if (!(p.sigma > 0.0)) weighted = false;
  }

  FitResult fit;
  fit.n_points = points.size();
  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (const FitPoint& p : points) {
    const double w = weighted ? 1.0 / (p.sigma * p.sigma) : 1.0;
    sw += w;
    swx += w * p.x;
    swy += w * p.y;
  }
  const double xm = swx / sw;
  const double ym = swy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (const FitPoint& p : points) {
    const double w = weighted ? 1.0 / (p.sigma * p.sigma) : 1.0;
    sxx += w * (p.x - xm) * (p.x - xm);
    sxy += w * (p.x - xm) * (p.y - ym);
  }
  if (sxx <= 0.0) throw InvalidParameterError("degenerate design: identical x values");

  fit.slope = sxy / sxx;
  fit.intercept = ym - fit.slope * xm;
  fit.weight_sum = sw;
  fit.x_mean = xm;
  fit.sxx = sxx;

  double ss_res = 0.0;
  for (const FitPoint& p : points) {
    const double w = weighted ? 1.0 / (p.sigma * p.sigma) : 1.0;
    const double r = p.y - (fit.intercept + fit.slope * p.x);
    ss_res += w * r * r;
  }
  const std::size_t dof = points.size() - 2;
  fit.residual_variance = dof > 0 ? ss_res / static_cast<double>(dof) : 0.0;
  fit.slope_err = std::sqrt(fit.residual_variance / sxx);
  fit.intercept_err = std::sqrt(fit.residual_variance * (1.0 / sw + xm * xm / sxx));
  fit.t_quantile_95 = student_t_975(dof);

  // Correlation factor reported unweighted.
  double uxm = 0.0, uym = 0.0;
  for (const FitPoint& p : points) {
    uxm += p.x;
    uym += p.y;
  }
  uxm /= static_cast<double>(points.size());
  uym /= static_cast<double>(points.size());
  double cxx = 0.0, cyy = 0.0, cxy = 0.0;
  for (const FitPoint& p : points) {
    cxx += (p.x - uxm) * (p.x - uxm);
    cyy += (p.y - uym) * (p.y - uym);
    cxy += (p.x - uxm) * (p.y - uym);
  }
  fit.r_pearson = (cxx > 0.0 && cyy > 0.0) ? cxy / std::sqrt(cxx * cyy) : 0.0;
  return fit;
}

std::pair<double, double> FitResult::confidence_band(double x) const {
  const double y = intercept + slope * x;
  const double half =
      t_quantile_95 *
      std::sqrt(residual_variance * (1.0 / weight_sum + (x - x_mean) * (x - x_mean) / sxx));
  return {y - half, y + half};
}

double calibrate_background(double target_onf, const ExperimentConfig& base_config) {
  if (target_onf < 0.0 || target_onf >= 1.0) {
    throw InvalidParameterError("target ONF must be in [0,1)");
  }
  if (target_onf == 0.0) return 0.0;

  auto onf_at = [&base_config](double rate) {
    ExperimentConfig c = base_config;
    c.background_rate_per_s = rate;
    try {
      return predict_trigger_distribution(c).onf;
    } catch (const AccuracyError&) {
      throw CalibrationError("target ONF needs a background beyond the prediction's validity");
    }
  };

  if (onf_at(0.0) > target_onf) {
    throw CalibrationError("target ONF below the zero-background floor");
  }
  double lo = 0.0;
  double hi = 1e3;
  int guard = 0;
  while (onf_at(hi) < target_onf) {
    hi *= 2.0;
    if (++guard > 50) throw CalibrationError("target ONF unreachable within rate bounds");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double onf = onf_at(mid);
    if (std::abs(onf - target_onf) <= 1e-3 * 0.1) return mid;
    (onf < target_onf ? lo : hi) = mid;
  }
  const double rate = 0.5 * (lo + hi);
  if (std::abs(onf_at(rate) - target_onf) > 1e-3) {
    throw CalibrationError("bisection failed to reach the target ONF");
  }
  return rate;
}

} // namespace hspsim
