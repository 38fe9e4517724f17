#include <random>

#include "amc/mcs_model.hpp"
#include "amc/olla.hpp"
#include "doctest.h"

using namespace amc;

TEST_CASE("olla selection rounds the offset CQI mapping and clamps") {
  OllaState s;
  s.offset = 0.4;
  CHECK(olla_select(s, 10, 28, 15) == 19);
  s.offset = 100.0;
  CHECK(olla_select(s, 15, 28, 15) == 28);
  s.offset = -100.0;
  CHECK(olla_select(s, 1, 28, 15) == 1);
}

TEST_CASE("olla update steps") {
  OllaState s{0.0, 0.1, 0.1};
  olla_update(s, true);
  CHECK(s.offset == doctest::Approx(0.1));
  s.offset = 0.0;
  olla_update(s, false);
  CHECK(s.offset == doctest::Approx(-0.9));
}

TEST_CASE("expected drift vanishes exactly at nack probability b") {
  const OllaState s{0.0, 0.1, 0.1};
  const double beta = s.target_bler;
  const double drift = s.step * (1.0 - beta) - s.step * beta * (1.0 - s.target_bler) / s.target_bler;
  CHECK(drift == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("olla state validation") {
  CHECK_THROWS(OllaState{0.0, 0.0, 0.1}.validate());
  CHECK_THROWS(OllaState{0.0, 0.1, 1.0}.validate());
  CHECK_NOTHROW(OllaState{}.validate());
}

TEST_CASE("long-run nack rate converges to the target on a stationary channel") {
  const McsTable table = McsTable::nr_default();
  const CqiTable cqi;
  OllaState s{0.0, 0.1, 0.1};
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double sinr = 8.0;
  const int reported = cqi_from_sinr(cqi, sinr);
  long nacks = 0;
  const long n = 200000;
  for (long t = 0; t < n; ++t) {
    const int mcs = olla_select(s, reported, table.size(), cqi.count);
    const bool ack = u(rng) < success_probability(table, mcs, sinr);
    if (!ack) ++nacks;
    olla_update(s, ack);
  }
  CHECK(static_cast<double>(nacks) / n == doctest::Approx(0.1).epsilon(0.2));
}
