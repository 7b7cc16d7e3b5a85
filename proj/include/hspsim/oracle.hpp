#pragma once

#include <array>

#include "hspsim/instrument.hpp"

namespace hspsim {

// Analytic per-trigger outcome probabilities for one configuration, used to
// cross-validate the Monte Carlo. Per detector, the recorded first detection
// falls into one of four classes; when several causes fire in one gate the
// class follows the priority True > Bkg > Dark, which matches time ordering
// up to O(p^2) cross terms.
enum class OutcomeClass : int { None = 0, True = 1, Bkg = 2, Dark = 3 };

struct TriggerOutcomeDistribution {
  // joint[c1][c2] over (detector 1 class, detector 2 class); sums to 1.
  std::array<std::array<double, 4>, 4> joint{};

  std::array<double, 2> p_true{};  // heralded photon recorded
  std::array<double, 2> p_bkg{};   // window-region count (background or window dark)
  std::array<double, 2> p_dark{};  // dark-region count
  std::array<double, 2> p_fire{};  // any detection in the gate

  double p12_tot_tot = 0.0;
  double p12_dark_tot = 0.0;
  double p12_tot_dark = 0.0;
  double p12_dark_dark = 0.0;
  double p12_signal = 0.0; // dark-subtracted coincidence probability

  double onf = 0.0;
  double alpha = 0.0;

  double sum() const;
};

// Exact enumeration of the pipeline's per-trigger outcome. Refuses when the
// mean background per open window exceeds 1 (outside the regime the
// enumeration is calibrated for).
TriggerOutcomeDistribution predict_trigger_distribution(const ExperimentConfig& config);

// Closed-form leading-order ONF and alpha; refuses outside the
// small-probability regime (any per-window probability >= 0.1).
std::pair<double, double> predict_first_order(const ExperimentConfig& config);

// Mean background photons per effective open window at the switch input
// (stray light plus unheralded signal photons).
double mean_background_per_window(const ExperimentConfig& config);

} // namespace hspsim
