#pragma once

#include <cstdint>
#include <cmath>

namespace hspsim {

// All event times and interval bounds are integer picoseconds. Sub-ns window
// edges and 20 us dead times coexist in one run; integer time keeps gating,
// sorting and equality exact.
using TimePs = std::int64_t;

constexpr TimePs kPsPerNs = 1'000;
constexpr TimePs kPsPerUs = 1'000'000;
constexpr TimePs kPsPerMs = 1'000'000'000;
constexpr TimePs kPsPerS  = 1'000'000'000'000;

inline TimePs ns_to_ps(double ns) { return static_cast<TimePs>(std::llround(ns * 1e3)); }
inline TimePs us_to_ps(double us) { return static_cast<TimePs>(std::llround(us * 1e6)); }
inline TimePs s_to_ps(double s)   { return static_cast<TimePs>(std::llround(s * 1e12)); }

inline double ps_to_ns(TimePs t) { return static_cast<double>(t) * 1e-3; }
inline double ps_to_s(TimePs t)  { return static_cast<double>(t) * 1e-12; }

// Rate conversions: user-facing rates are events per second.
inline double per_s_to_per_ps(double rate_per_s) { return rate_per_s * 1e-12; }

} // namespace hspsim
