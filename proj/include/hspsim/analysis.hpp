#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "hspsim/instrument.hpp"

namespace hspsim {

struct Interval {
  TimePs lo = 0;
  TimePs hi = 0;
  TimePs width() const { return hi - lo; }
  bool contains(TimePs t) const { return t >= lo && t < hi; }
};

// Counts of detections by time-in-gate bin, per detector.
struct GateHistogram {
  TimePs bin_width = 250; // ps
  TimePs gate_length = 100 * kPsPerNs;
  std::array<std::vector<std::uint64_t>, 2> bins;
  std::array<std::uint64_t, 2> n_triggers{};

  std::uint64_t total(int detector) const;
};

// Incremental histogram + coincidence bookkeeping so long runs never need the
// full record list in memory.
class RunAccumulator {
public:
  RunAccumulator(TimePs bin_width, TimePs gate_length);
  void add(const TriggerRecord& record);

  const GateHistogram& histogram() const { return hist_; }
  std::uint64_t n_triggers() const { return hist_.n_triggers[0]; }
  std::uint64_t coincidences() const { return both_; }
  std::uint64_t singles(int detector) const { return fired_[detector]; }

private:
  GateHistogram hist_;
  std::array<std::uint64_t, 2> fired_{};
  std::uint64_t both_ = 0;
};

GateHistogram build_histogram(std::span<const TriggerRecord> records, TimePs bin_width,
                              TimePs gate_length = 100 * kPsPerNs);

// Disjoint, exhaustive decomposition of the gate: the heralded-photon peak,
// the switch open window (plateau plus ramps), and the dark remainder.
struct RegionBounds {
  Interval peak;
  Interval open_window;
  TimePs gate_length = 100 * kPsPerNs;
  Mode mode = Mode::PeakIn;
};

RegionBounds classify_regions(Interval open_window, TimePs peak_center, TimePs peak_full_width,
                              TimePs gate_length, Mode mode);

// Regions for a configuration, from its trigger geometry. The peak full width
// defaults to 3 ns around the expected photon arrival.
RegionBounds regions_for_config(const ExperimentConfig& config,
                                TimePs peak_full_width = 3 * kPsPerNs);

// Per-trigger detection probabilities split by region. The true-photon count
// is the peak-region excess over the local flat level (estimated from the
// rest of the region the peak sits in), so uniform background and dark counts
// under the peak do not bias it. p_tot = p_true + p_bkg + p_dark holds by
// construction.
struct ProbabilitySet {
  std::array<double, 2> p_true{};
  std::array<double, 2> p_bkg{};
  std::array<double, 2> p_dark{};
  std::array<double, 2> p_tot{};
  std::array<double, 2> sigma_true{};
  std::array<std::uint64_t, 2> n_triggers{};

  double p_true_sum() const { return p_true[0] + p_true[1]; }
  double p_bkg_sum() const { return p_bkg[0] + p_bkg[1]; }
};

ProbabilitySet estimate_probabilities(const GateHistogram& hist, const RegionBounds& regions);

double compute_onf(const ProbabilitySet& probs);
double onf_standard_error(const ProbabilitySet& probs);

// Per-run coincidence tallies feeding the dark-subtracted coincidence
// probability (blocked-detector runs supply the dark terms).
struct CoincidenceCounts {
  std::uint64_t n_triggers = 0;
  std::uint64_t both_fired = 0;
  double probability() const;
};

struct CoincidenceSet {
  double p12_tot_tot = 0.0;
  double p12_dark_tot = 0.0;
  double p12_tot_dark = 0.0;
  double p12_dark_dark = 0.0;
  double p12_signal = 0.0;
  double sigma_signal = 0.0;
};

// The four runs must share a configuration apart from which detectors are
// blocked (and the seed).
bool configs_compatible(const ExperimentConfig& a, const ExperimentConfig& b);

CoincidenceSet count_coincidences(const CoincidenceCounts& unblocked,
                                  const CoincidenceCounts& blocked_1,
                                  const CoincidenceCounts& blocked_2,
                                  const CoincidenceCounts& blocked_both);

double compute_alpha(const CoincidenceSet& coincidences, double p1_true_bkg, double p2_true_bkg);
double alpha_standard_error(const CoincidenceSet& coincidences, double p1_true_bkg,
                            double p2_true_bkg);

// Extinction ratio: summed true-photon probability, peak-out over peak-in.
double compute_r(const ProbabilitySet& probs_peak_in, const ProbabilitySet& probs_peak_out);

// Coupling efficiency from the summed true-photon probabilities and the
// calibrated apparatus detection efficiency.
double compute_gamma(const ProbabilitySet& probs, double eta);

struct FitPoint {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0; // 0 = unweighted
};

// Weighted least squares line with the plain (unweighted) Pearson correlation
// factor and a 95% confidence band for the fitted mean.
struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
  double intercept_err = 0.0;
  double r_pearson = 0.0;

  std::pair<double, double> confidence_band(double x) const;

  double weight_sum = 0.0;
  double x_mean = 0.0;
  double sxx = 0.0;
  double residual_variance = 0.0;
  double t_quantile_95 = 0.0;
  std::size_t n_points = 0;
};

FitResult fit_linear(std::span<const FitPoint> points);

// Two-sided 97.5% Student t quantile (95% interval half-width factor).
double student_t_975(std::size_t dof);

// Bisection over the stray background rate until the analytic ONF prediction
// matches the target within 1e-3 absolute.
double calibrate_background(double target_onf, const ExperimentConfig& base_config);

} // namespace hspsim
