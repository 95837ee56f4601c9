#include "doctest.h"
#include "pshield/ensemble.hpp"
#include "pshield/random.hpp"

using namespace pshield;

TEST_CASE("combine examples") {
  CHECK(combine(0.995, 0.20) == 0.995);
  CHECK(combine(0.50, 0.70) == doctest::Approx(0.60).epsilon(1e-15));
  CHECK(combine(0.99, 0.10) == 0.99);
  CHECK(combine(0.10, 0.99) == 0.99);
  CHECK(combine(0.3, 0.5, {0.4}) == 0.5);
  CHECK_THROWS(combine(1.2, 0.1));
  CHECK_THROWS(combine(0.2, -0.1));
  CHECK_THROWS(combine(0.2, 0.1, {0.0}));
  CHECK_THROWS(combine(0.2, 0.1, {1.5}));
}

TEST_CASE("combine properties") {
  Rng rng(7);
  const EnsembleConfig cfg;
  for (int i = 0; i < 20000; ++i) {
    // Mix in exact gate values and equal pairs.
    double a = rng.uniform(), b = rng.uniform();
    if (i % 10 == 0) a = cfg.gate;
    if (i % 13 == 0) b = a;
    const double c = combine(a, b);
    CHECK(c == combine(b, a));
    CHECK(std::min(a, b) <= c);
    CHECK(c <= std::max(a, b));
    CHECK(combine(a, a) == a);

    const double a2 = a + rng.uniform(0.0, 1.0 - a), b2 = b + rng.uniform(0.0, 1.0 - b);
    if (std::max(a2, b2) < cfg.gate) CHECK(combine(a2, b2) >= c);
    if (std::max(a, b) >= cfg.gate) CHECK(combine(a2, b2) >= c);
  }
}
