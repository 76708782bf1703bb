// Apache License, Version 2.0, refer to LICENSE.txt
#include <doctest.h>

#include <sstream>

#include "ppctrl/event_sequence.hpp"
#include "ppctrl/rng.hpp"

using namespace ppctrl;

TEST_CASE("append enforces ordering and window membership") {
  EventSequence seq(2, 0.0, 10.0);
  seq.append(0, 1.0);
  seq.append(0, 2.0);
  seq.append(1, 0.5);
  CHECK_THROWS_AS(seq.append(0, 2.0), std::invalid_argument);   // not increasing
  CHECK_THROWS_AS(seq.append(1, 10.5), std::invalid_argument);  // outside window
  CHECK(seq.total_events() == 3);
}

TEST_CASE("count_in uses half-open intervals") {
  EventSequence seq(1, 0.0, 4.0);
  seq.append(0, 1.0);
  seq.append(0, 2.0);
  seq.append(0, 3.0);
  CHECK(seq.count_in(0, 1.0, 3.0) == 2);  // 1.0 in, 3.0 out
  CHECK(seq.count_in(0, 0.0, 1.0) == 0);
  CHECK(seq.count_in(0, 3.0, 4.0) == 1);
  CHECK(seq.count_in(0, 2.5, 2.5) == 0);
}

TEST_CASE("merged is sorted by time then dimension") {
  EventSequence seq(3, 0.0, 5.0);
  seq.append(2, 1.0);
  seq.append(0, 2.0);
  seq.append(1, 1.5);
  const auto merged = seq.merged();
  REQUIRE(merged.size() == 3);
  CHECK(merged[0].dim == 2);
  CHECK(merged[1].dim == 1);
  CHECK(merged[2].dim == 0);
}

TEST_CASE("csv round trip preserves random sequences exactly") {
  RngStream rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const int dims = 1 + static_cast<int>(rng.below(4));
    EventSequence seq(dims, 0.0, 50.0);
    for (int d = 0; d < dims; ++d) {
      double t = 0.0;
      const int n = static_cast<int>(rng.below(20));
      for (int k = 0; k < n; ++k) {
        t += rng.exponential();
        if (t >= 50.0) break;
        seq.append(d, t);
      }
    }
    std::stringstream io;
    seq.write_csv(io);
    const EventSequence back = EventSequence::read_csv(io, dims, 0.0, 50.0);
    CHECK(back == seq);
  }
}
