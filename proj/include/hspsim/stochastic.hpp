#pragma once

#include "hspsim/event_stream.hpp"
#include "hspsim/rng.hpp"

namespace hspsim {

// Homogeneous Poisson process over [0, duration]: exponential gaps, count
// distributed Poisson(rate * duration).
EventStream generate_poisson_stream(double rate_per_s, TimePs duration, Origin origin,
                                    RngSeed seed);

// Shift every event by an independent Gaussian deviate of the given FWHM and
// re-sort. Tags ride along. fwhm = 0 returns the input untouched.
EventStream apply_jitter(const EventStream& stream, TimePs fwhm, RngSeed seed);

// Keep each event independently with the given probability.
EventStream thin_stream(const EventStream& stream, double survival_probability, RngSeed seed);

// Lazy walker over the same exponential-gap sequence generate_poisson_stream
// materialises; lets long runs consume events without holding the stream.
class PoissonWalker {
public:
  PoissonWalker(double rate_per_s, RngSeed seed)
      : rng_(seed), rate_per_ps_(per_s_to_per_ps(rate_per_s)) {
    advance();
  }

  // Time of the next event, or a sentinel past any horizon when rate is 0.
  TimePs peek() const { return next_; }

  TimePs take() {
    const TimePs t = next_;
    advance();
    return t;
  }

  bool exhausted(TimePs horizon) const { return next_ > horizon; }

private:
  void advance() {
    if (rate_per_ps_ <= 0.0) {
      next_ = kNever;
      return;
    }
    const double gap = rng_.exponential_ps(rate_per_ps_);
    next_ += static_cast<TimePs>(std::llround(gap));
  }

  static constexpr TimePs kNever = INT64_MAX / 2;
  RandomStream rng_;
  double rate_per_ps_;
  TimePs next_ = 0;
};

} // namespace hspsim
