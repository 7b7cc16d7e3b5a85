#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hspsim/errors.hpp"
#include "hspsim/oracle.hpp"

using namespace hspsim;

namespace {

ExperimentConfig silent_config() {
  ExperimentConfig c;
  c.pair_rate_per_s = 0.0;
  c.herald_dark_rate_per_s = 1e4;
  c.background_rate_per_s = 0.0;
  c.signal_coupling_gamma = 0.0;
  c.detectors[0].dark_count_probability_per_gate = 0.0;
  c.detectors[1].dark_count_probability_per_gate = 0.0;
  return c;
}

} // namespace

TEST_CASE("all rates zero concentrates the distribution on no-fire") {
  const auto dist = predict_trigger_distribution(silent_config());
  CHECK(dist.joint[0][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dist.p_fire[0] == 0.0);
  CHECK(dist.p_fire[1] == 0.0);
  CHECK(dist.onf == 0.0);
  CHECK(dist.alpha == 0.0);
}

TEST_CASE("a perfect single photon never fires both detectors") {
  // Low pair rate: unheralded neighbour pairs otherwise add a real (tiny)
  // two-photon coincidence channel even with every herald detected.
  ExperimentConfig c = silent_config();
  c.pair_rate_per_s = 1.0;
  c.herald_efficiency = 1.0;
  c.herald_dark_rate_per_s = 0.0;
  c.signal_coupling_gamma = 1.0;
  c.switch_profile.extinction = 0.0;
  c.detectors[0].efficiency = 1.0;
  c.detectors[1].efficiency = 1.0;

  const auto dist = predict_trigger_distribution(c);
  CHECK(dist.p_true[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(dist.p_true[1] == doctest::Approx(0.5).epsilon(1e-6));
  const int t = static_cast<int>(OutcomeClass::True);
  CHECK(dist.joint[t][t] == 0.0); // the heralded photon itself cannot double-fire
  CHECK(dist.p12_tot_tot < 1e-7);
  CHECK(dist.alpha < 1e-6);
  CHECK(dist.p_fire[0] + dist.p_fire[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("outcome probabilities sum to one within 1e-12") {
  ExperimentConfig c; // reference defaults
  const auto dist = predict_trigger_distribution(c);
  CHECK(std::abs(dist.sum() - 1.0) < 1e-12);

  c.mode = Mode::PeakOut;
  CHECK(std::abs(predict_trigger_distribution(c).sum() - 1.0) < 1e-12);

  c.mode = Mode::PeakIn;
  c.blocked = {true, false};
  CHECK(std::abs(predict_trigger_distribution(c).sum() - 1.0) < 1e-12);
}

TEST_CASE("enumeration refuses when the per-window background mean exceeds 1") {
  ExperimentConfig c;
  c.background_rate_per_s = 5e10;
  CHECK(mean_background_per_window(c) > 1.0);
  CHECK_THROWS_AS(predict_trigger_distribution(c), AccuracyError);
}

TEST_CASE("first-order formulas track the enumeration within 5 percent") {
  ExperimentConfig c; // reference defaults: per-window probabilities < 0.02
  const auto dist = predict_trigger_distribution(c);
  const auto [onf_fo, alpha_fo] = predict_first_order(c);
  CHECK(onf_fo == doctest::Approx(dist.onf).epsilon(0.05));
  CHECK(alpha_fo == doctest::Approx(dist.alpha).epsilon(0.05));
}

TEST_CASE("first-order ONF scales with the effective window width") {
  ExperimentConfig c5;
  c5.switch_profile.delta_t_switch = ns_to_ps(5);
  ExperimentConfig c10 = c5;
  c10.switch_profile.delta_t_switch = ns_to_ps(10);

  const auto [onf5, alpha5] = predict_first_order(c5);
  const auto [onf10, alpha10] = predict_first_order(c10);
  CHECK(alpha5 < alpha10);
  // Background scales by (10 + 2.5) / (5 + 2.5); the ONF ratio follows it up
  // to the small denominator normalization.
  CHECK(onf10 / onf5 == doctest::Approx(12.5 / 7.5).epsilon(0.02));
}

TEST_CASE("first-order formulas refuse outside the small-probability regime") {
  ExperimentConfig c;
  c.background_rate_per_s = 3e9; // ~0.6 photons per window at the switch
  CHECK_THROWS_AS(predict_first_order(c), AccuracyError);
}

TEST_CASE("zero rates give zero first-order predictions") {
  const auto [onf, alpha] = predict_first_order(silent_config());
  CHECK(onf == 0.0);
  CHECK(alpha == 0.0);
}

TEST_CASE("peak-out prediction suppresses the true-photon probability by the extinction") {
  ExperimentConfig in;
  ExperimentConfig out = in;
  out.mode = Mode::PeakOut;
  const auto d_in = predict_trigger_distribution(in);
  const auto d_out = predict_trigger_distribution(out);
  const double ratio = (d_out.p_true[0] + d_out.p_true[1]) / (d_in.p_true[0] + d_in.p_true[1]);
  CHECK(ratio == doctest::Approx(in.switch_profile.extinction).epsilon(1e-6));
}
