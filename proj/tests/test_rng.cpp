#include <cmath>

#include "doctest.h"
#include "sdnioc/rng.hpp"

using namespace sdnioc;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("substreams differ from each other and the base stream") {
  Rng base(7);
  Rng s0 = Rng::substream(7, 0);
  Rng s1 = Rng::substream(7, 1);
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) {
    const uint64_t v0 = s0.next_u64();
    const uint64_t v1 = s1.next_u64();
    if (v0 != v1) all_equal = false;
    (void)base;
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("uniform stays in [0,1) with sensible mean") {
  Rng rng(1);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("normal has unit moments") {
  Rng rng(2);
  const int n = 500000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(var == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("gamma(shape) has mean=shape and var=shape") {
  Rng rng(3);
  const int n = 300000;
  for (double shape : {0.5, 3.0}) {
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = rng.gamma(shape);
      sum += g;
      sq += g * g;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(shape).epsilon(0.02));
    CHECK(var == doctest::Approx(shape).epsilon(0.05));
  }
}

TEST_CASE("beta(2,2) has mean 1/2 and var 1/20") {
  Rng rng(4);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double b = rng.beta(2.0, 2.0);
    REQUIRE(b >= 0.0);
    REQUIRE(b <= 1.0);
    sum += b;
    sq += b * b;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(var == doctest::Approx(0.05).epsilon(0.05));
}
