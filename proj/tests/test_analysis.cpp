#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hspsim/analysis.hpp"
#include "hspsim/campaign.hpp"
#include "hspsim/errors.hpp"
#include "hspsim/oracle.hpp"

using namespace hspsim;

namespace {

TriggerRecord record_with(std::initializer_list<std::pair<int, TimePs>> detections) {
  TriggerRecord rec;
  for (const auto& [det, t] : detections) {
    rec.detections[det].push_back(Detection{t, Origin::Background});
  }
  return rec;
}

RegionBounds default_regions() {
  // Window [20, 50] ns plus 2.5 ns ramps, peak at 35 ns, 3 ns wide.
  return classify_regions(Interval{ns_to_ps(17.5), ns_to_ps(52.5)}, ns_to_ps(35), ns_to_ps(3),
                          100 * kPsPerNs, Mode::PeakIn);
}

} // namespace

TEST_CASE("empty record list gives all-zero bins") {
  std::vector<TriggerRecord> records(10);
  const GateHistogram hist = build_histogram(records, 250);
  CHECK(hist.total(0) == 0);
  CHECK(hist.total(1) == 0);
  CHECK(hist.n_triggers[0] == 10);
}

TEST_CASE("three detections in one bin count as three") {
  std::vector<TriggerRecord> records;
  records.push_back(record_with({{0, ns_to_ps(35) + 10}}));
  records.push_back(record_with({{0, ns_to_ps(35) + 20}}));
  records.push_back(record_with({{0, ns_to_ps(35) + 30}}));
  const GateHistogram hist = build_histogram(records, 250);
  const std::size_t bin = static_cast<std::size_t>(ns_to_ps(35) / 250);
  CHECK(hist.bins[0][bin] == 3);
  CHECK(hist.total(0) == 3);
}

TEST_CASE("bin width must divide the gate length") {
  std::vector<TriggerRecord> records(1);
  CHECK_THROWS_AS(build_histogram(records, 333), InvalidParameterError);
}

TEST_CASE("region decomposition follows the interval arithmetic") {
  const RegionBounds rb = default_regions();
  CHECK(rb.peak.lo == ns_to_ps(33.5));
  CHECK(rb.peak.hi == ns_to_ps(36.5));
  CHECK(rb.open_window.lo == ns_to_ps(17.5));
  CHECK(rb.open_window.hi == ns_to_ps(52.5));
}

TEST_CASE("peak-out keeps the peak region outside the window") {
  const RegionBounds rb = classify_regions(Interval{ns_to_ps(20), ns_to_ps(50)}, ns_to_ps(70),
                                           ns_to_ps(3), 100 * kPsPerNs, Mode::PeakOut);
  CHECK(rb.peak.lo == ns_to_ps(68.5));
  CHECK(rb.peak.hi > rb.open_window.hi);
}

TEST_CASE("zero-width peak leaves every window count as background") {
  const RegionBounds rb = classify_regions(Interval{ns_to_ps(20), ns_to_ps(50)}, ns_to_ps(35), 0,
                                           100 * kPsPerNs, Mode::PeakIn);
  GateHistogram hist;
  hist.bin_width = 250;
  hist.bins[0].assign(400, 0);
  hist.bins[1].assign(400, 0);
  hist.n_triggers = {1000, 1000};
  hist.bins[0][static_cast<std::size_t>(ns_to_ps(35) / 250)] = 7;
  const ProbabilitySet ps = estimate_probabilities(hist, rb);
  CHECK(ps.p_true[0] == 0.0);
  CHECK(ps.p_bkg[0] == doctest::Approx(0.007));
}

TEST_CASE("a peak wider than the window is a configuration error") {
  CHECK_THROWS_AS(classify_regions(Interval{ns_to_ps(20), ns_to_ps(25)}, ns_to_ps(22),
                                   ns_to_ps(10), 100 * kPsPerNs, Mode::PeakIn),
                  ConfigurationError);
}

TEST_CASE("peak-in with the peak outside the window is rejected") {
  CHECK_THROWS_AS(classify_regions(Interval{ns_to_ps(20), ns_to_ps(50)}, ns_to_ps(70),
                                   ns_to_ps(3), 100 * kPsPerNs, Mode::PeakIn),
                  ConfigurationError);
}

TEST_CASE("clean peak counts divide by the trigger count") {
  GateHistogram hist;
  hist.bin_width = 250;
  hist.bins[0].assign(400, 0);
  hist.bins[1].assign(400, 0);
  hist.n_triggers = {10000, 10000};
  hist.bins[0][static_cast<std::size_t>(ns_to_ps(35) / 250)] = 100; // all inside the peak
  const ProbabilitySet ps = estimate_probabilities(hist, default_regions());
  CHECK(ps.p_true[0] == doctest::Approx(0.01));
  CHECK(ps.p_bkg[0] == doctest::Approx(0.0));
  CHECK(ps.p_tot[0] == ps.p_true[0] + ps.p_bkg[0] + ps.p_dark[0]);
}

TEST_CASE("counts in the dark region only give zero true and background") {
  GateHistogram hist;
  hist.bin_width = 250;
  hist.bins[0].assign(400, 0);
  hist.bins[1].assign(400, 0);
  hist.n_triggers = {5000, 5000};
  hist.bins[0][4] = 40; // ~1 ns, before the window
  hist.bins[1][390] = 8;
  const ProbabilitySet ps = estimate_probabilities(hist, default_regions());
  CHECK(ps.p_true[0] == 0.0);
  CHECK(ps.p_bkg[0] == 0.0);
  CHECK(ps.p_dark[0] == doctest::Approx(0.008));
  CHECK(ps.p_dark[1] == doctest::Approx(0.0016));
}

TEST_CASE("uniform background under the peak is subtracted from the true count") {
  GateHistogram hist;
  hist.bin_width = 250;
  hist.bins[0].assign(400, 0);
  hist.bins[1].assign(400, 0);
  hist.n_triggers = {100000, 100000};
  // Flat 2 counts per bin across the full window region [17.5, 52.5] ns plus
  // a 600-count spike mid-peak.
  for (std::size_t b = 70; b < 210; ++b) hist.bins[0][b] = 2;
  hist.bins[0][140] += 600;
  const ProbabilitySet ps = estimate_probabilities(hist, default_regions());
  CHECK(ps.p_true[0] == doctest::Approx(0.006).epsilon(1e-9));
  CHECK(ps.p_bkg[0] == doctest::Approx(280.0 / 100000.0).epsilon(1e-9));
}

TEST_CASE("zero triggers is insufficient data") {
  GateHistogram hist;
  hist.bins[0].assign(400, 0);
  hist.bins[1].assign(400, 0);
  hist.n_triggers = {0, 0};
  CHECK_THROWS_AS(estimate_probabilities(hist, default_regions()), InsufficientDataError);
}

TEST_CASE("onf arithmetic") {
  ProbabilitySet ps;
  ps.p_bkg = {0.0, 0.0};
  ps.p_true = {0.1, 0.1};
  CHECK(compute_onf(ps) == 0.0);

  ps.p_bkg = {0.01, 0.01};
  ps.p_true = {0.10, 0.10};
  CHECK(compute_onf(ps) == doctest::Approx(0.02 / 0.22));

  ProbabilitySet empty;
  CHECK_THROWS_AS(compute_onf(empty), InsufficientDataError);
}

TEST_CASE("coincidence combination cancels and its trivial cases hold") {
  const CoincidenceCounts none{1000, 0};
  const CoincidenceSet cs0 = count_coincidences(none, none, none, none);
  CHECK(cs0.p12_signal == 0.0);

  const CoincidenceCounts all{1000, 1000};
  const CoincidenceSet cs1 = count_coincidences(all, all, all, all);
  CHECK(cs1.p12_signal == doctest::Approx(0.0)); // 1 - 1 - 1 + 1

  CHECK_THROWS_AS(count_coincidences(CoincidenceCounts{0, 0}, none, none, none),
                  InsufficientDataError);
}

TEST_CASE("alpha arithmetic and guards") {
  CoincidenceSet cs;
  cs.p12_signal = 0.0;
  CHECK(compute_alpha(cs, 0.1, 0.1) == 0.0);
  cs.p12_signal = 0.005;
  CHECK(compute_alpha(cs, 0.1, 0.05) == doctest::Approx(1.0));
  CHECK_THROWS_AS(compute_alpha(cs, 0.0, 0.1), InsufficientDataError);
}

TEST_CASE("extinction ratio arithmetic and guards") {
  ProbabilitySet in;
  in.p_true = {0.005, 0.005};
  ProbabilitySet out;
  out.p_true = {0.0, 0.0};
  CHECK(compute_r(in, out) == 0.0);
  CHECK(compute_r(in, in) == doctest::Approx(1.0));
  CHECK_THROWS_AS(compute_r(out, in), InsufficientDataError);
}

TEST_CASE("gamma arithmetic and guards") {
  ProbabilitySet ps;
  ps.p_true = {0.0, 0.0};
  CHECK(compute_gamma(ps, 0.081) == 0.0);
  ps.p_true = {0.00567, 0.00567};
  CHECK(compute_gamma(ps, 0.081) == doctest::Approx(0.14));
  CHECK_THROWS_AS(compute_gamma(ps, 0.0), InvalidParameterError);
}

TEST_CASE("exact line fits with R = 1") {
  std::vector<FitPoint> pts;
  for (double x : {1.0, 2.0, 3.0, 4.0}) pts.push_back(FitPoint{x, 2.0 * x + 1.0, 0.1});
  const FitResult fit = fit_linear(pts);
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_pearson == doctest::Approx(1.0));
  const auto [lo, hi] = fit.confidence_band(2.5);
  CHECK(lo <= 6.0);
  CHECK(hi >= 6.0);
}

TEST_CASE("flipping the sign of y negates the fit but not |R|") {
  std::vector<FitPoint> pts, neg;
  for (double x : {5.0, 15.0, 30.0, 60.0}) {
    const double y = 0.002 * x + 0.01 + ((x == 15.0) ? 0.001 : 0.0);
    pts.push_back(FitPoint{x, y, 0.001});
    neg.push_back(FitPoint{x, -y, 0.001});
  }
  const FitResult a = fit_linear(pts);
  const FitResult b = fit_linear(neg);
  CHECK(b.slope == doctest::Approx(-a.slope));
  CHECK(b.intercept == doctest::Approx(-a.intercept));
  CHECK(std::abs(b.r_pearson) == doctest::Approx(std::abs(a.r_pearson)));
}

TEST_CASE("fit guards: too few points and degenerate designs") {
  std::vector<FitPoint> two = {FitPoint{1, 1, 0}, FitPoint{2, 2, 0}};
  CHECK_THROWS_AS(fit_linear(two), InsufficientDataError);
  std::vector<FitPoint> flat = {FitPoint{1, 1, 0}, FitPoint{1, 2, 0}, FitPoint{1, 3, 0}};
  CHECK_THROWS_AS(fit_linear(flat), InvalidParameterError);
}

TEST_CASE("background calibration hits its target and is monotone") {
  CHECK(calibrate_background(0.0, ExperimentConfig{}) == 0.0);

  ExperimentConfig base;
  const double rate = calibrate_background(0.115, base);
  CHECK(rate > 0.0);
  base.background_rate_per_s = rate;
  CHECK(predict_trigger_distribution(base).onf == doctest::Approx(0.115).epsilon(1e-3));

  // Doubling gamma roughly halves the predicted ONF at a fixed rate.
  ExperimentConfig doubled = base;
  doubled.signal_coupling_gamma = 2.0 * base.signal_coupling_gamma;
  // Unheralded signal photons scale with gamma too, so the ratio sits a
  // little under the first-order factor of 2.
  const double onf1 = predict_trigger_distribution(base).onf;
  const double onf2 = predict_trigger_distribution(doubled).onf;
  CHECK(onf1 / onf2 > 1.7);
  CHECK(onf1 / onf2 < 2.1);
}

TEST_CASE("unreachable calibration targets raise a calibration error") {
  ExperimentConfig base;
  CHECK_THROWS_AS(calibrate_background(0.9999, base), CalibrationError);
}

TEST_CASE("blocked-run configs must match the base") {
  ExperimentConfig a;
  ExperimentConfig b = a;
  b.blocked = {true, false};
  b.seed.value = 777;
  CHECK(configs_compatible(a, b));
  b.background_rate_per_s *= 2.0;
  CHECK(!configs_compatible(a, b));
}
