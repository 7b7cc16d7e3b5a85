#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hspsim/rng.hpp"

using namespace hspsim;

TEST_CASE("identical seeds give identical sequences") {
  RandomStream a(RngSeed{42});
  RandomStream b(RngSeed{42});
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived sub-seeds are independent of each other") {
  const RngSeed master{99};
  const RngSeed s1 = derive_seed(master, StreamPurpose::PairTimes);
  const RngSeed s2 = derive_seed(master, StreamPurpose::BackgroundPhotons);
  const RngSeed s3 = derive_seed(master, StreamPurpose::DetectorPhoton, 1);
  CHECK(s1.value != s2.value);
  CHECK(s1.value != s3.value);
  CHECK(derive_seed(master, StreamPurpose::PairTimes).value == s1.value);
  CHECK(derive_seed(RngSeed{100}, StreamPurpose::PairTimes).value != s1.value);
}

TEST_CASE("uniform01 stays in [0,1) with sane mean") {
  RandomStream rng(RngSeed{7});
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 0.005);
}

TEST_CASE("normal sampler matches the target sigma") {
  RandomStream rng(RngSeed{11});
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal(0.0, 2.0);
    sum += z;
    sum2 += z * z;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(std::sqrt(var) - 2.0) < 0.03);
}

TEST_CASE("poisson sampler mean and variance agree") {
  RandomStream rng(RngSeed{13});
  const double mean = 4.2;
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(rng.poisson(mean));
    sum += k;
    sum2 += k * k;
  }
  const double m = sum / n;
  const double v = sum2 / n - m * m;
  CHECK(std::abs(m - mean) < 0.02);
  CHECK(std::abs(v - mean) < 0.06);
}

TEST_CASE("poisson halving handles larger means") {
  RandomStream rng(RngSeed{17});
  const double mean = 80.0;
  const int n = 50000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += static_cast<double>(rng.poisson(mean));
  CHECK(std::abs(sum / n - mean) < 0.3);
}
