#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>

#include "hspsim/time_units.hpp"

namespace hspsim {

// One master seed per run. Every stochastic component draws from its own
// sub-stream, derived as
//
//   sub_seed = mix(mix(master ^ mix(purpose)) ^ mix(index))
//
// where `purpose` is a StreamPurpose constant and `index` an optional counter
// (detector id, sweep point, repeat). Derivation is a pure hash of
// (master, purpose, index), so adding or removing one component never
// perturbs the draws of any other. Sequences are bit-stable across platforms:
// the generator and all samplers below are fixed algorithms, not
// implementation-defined std::distributions.

struct RngSeed {
  std::uint64_t value = 0;
};

enum class StreamPurpose : std::uint64_t {
  PairTimes = 1,
  HeraldThinning = 2,
  HeraldDarks = 3,
  HeraldJitter = 4,
  SignalCoupling = 5,
  BackgroundPhotons = 6,
  SwitchTransmission = 7,
  BeamSplitter = 8,
  DetectorPhoton = 9,      // + detector index
  DetectorJitter = 11,     // + detector index
  DetectorDarks = 13,      // + detector index
  DetectorAfterpulse = 15, // + detector index
  GenericStream = 32,      // standalone stream operations
  CampaignRun = 33,        // per (sweep point, run variant) seeds
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline RngSeed derive_seed(RngSeed master, StreamPurpose purpose, std::uint64_t index = 0) {
  std::uint64_t s = master.value ^ splitmix64(static_cast<std::uint64_t>(purpose));
  s = splitmix64(s) ^ splitmix64(index + 0x51ED270B0A437Dull);
  return RngSeed{splitmix64(s)};
}

// xoshiro256++ (Blackman & Vigna), seeded through splitmix64.
class RandomStream {
public:
  explicit RandomStream(RngSeed seed) {
    std::uint64_t s = seed.value;
    for (auto& word : state_) {
      s = splitmix64(s);
      word = s;
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform01() < p;
  }

  // Exponential inter-arrival gap for a rate given per picosecond.
  double exponential_ps(double rate_per_ps) {
    return -std::log1p(-uniform01()) / rate_per_ps;
  }

  // Standard normal via Box-Muller; exactly two uniforms per call.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 0x1.0p-60) u1 = 0x1.0p-60;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Inversion sampler; recursive halving keeps the partial sums well
  // conditioned for the occasional larger mean.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) return poisson(mean * 0.5) + poisson(mean * 0.5);
    const double u = uniform01();
    double p = std::exp(-mean);
    double cum = p;
    std::uint64_t k = 0;
    while (u > cum && k < 200) {
      ++k;
      p *= mean / static_cast<double>(k);
      cum += p;
    }
    return k;
  }

  TimePs uniform_time(TimePs lo, TimePs hi) {
    return lo + static_cast<TimePs>(std::floor(uniform01() * static_cast<double>(hi - lo)));
  }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

// FWHM of a Gaussian = 2 sqrt(2 ln 2) sigma.
constexpr double kFwhmToSigma = 1.0 / 2.3548200450309493;

} // namespace hspsim
