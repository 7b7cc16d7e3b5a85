#include "hspsim/stochastic.hpp"

#include "hspsim/errors.hpp"

namespace hspsim {

EventStream generate_poisson_stream(double rate_per_s, TimePs duration, Origin origin,
                                    RngSeed seed) {
  if (rate_per_s < 0.0) throw InvalidParameterError("poisson rate must be >= 0");
  if (duration <= 0) throw InvalidParameterError("duration must be > 0");

  EventStream out;
  out.channel = "poisson";
  PoissonWalker walker(rate_per_s, seed);
  while (!walker.exhausted(duration)) {
    out.events.push_back(Event{walker.take(), origin});
  }
  return out;
}

EventStream apply_jitter(const EventStream& stream, TimePs fwhm, RngSeed seed) {
  if (fwhm < 0) throw InvalidParameterError("jitter fwhm must be >= 0");
  if (fwhm == 0) return stream;

  EventStream out = stream;
  RandomStream rng(seed);
  const double sigma = static_cast<double>(fwhm) * kFwhmToSigma;
  for (Event& e : out.events) {
    e.time += static_cast<TimePs>(std::llround(rng.normal(0.0, sigma)));
  }
  out.sort_stable();
  return out;
}

EventStream thin_stream(const EventStream& stream, double survival_probability, RngSeed seed) {
  if (survival_probability < 0.0 || survival_probability > 1.0) {
    throw InvalidParameterError("survival probability must be in [0,1]");
  }
  EventStream out;
  out.channel = stream.channel;
  RandomStream rng(seed);
  for (const Event& e : stream.events) {
    if (rng.bernoulli(survival_probability)) out.events.push_back(e);
  }
  return out;
}

} // namespace hspsim
