#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gffx/rng.hpp"

using namespace gffx;

TEST_SUITE("rng") {

TEST_CASE("splitmix64 reference sequence") {
  // Known first outputs of splitmix64 seeded with 0.
  Rng rng(0);
  CHECK(rng.next_u64() == 0xe220a8397b1dcdafull);
  CHECK(rng.next_u64() == 0x6e789e6aa1b965f4ull);
  CHECK(rng.next_u64() == 0x06c45d188009454full);
  CHECK(derive_stream(0, 0) == 0xe220a8397b1dcdafull);  // mix of the first step
}

TEST_CASE("streams are deterministic and distinct") {
  Rng a = Rng::for_stream(42, 3);
  Rng b = Rng::for_stream(42, 3);
  Rng c = Rng::for_stream(42, 4);
  CHECK(a.stream_id() == 3);
  CHECK(c.stream_id() == 4);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
  bool any_diff = false;
  Rng a2 = Rng::for_stream(42, 3);
  for (int i = 0; i < 16; ++i) any_diff |= (a2.next_u64() != c.next_u64());
  CHECK(any_diff);
}

TEST_CASE("uniform ranges") {
  Rng rng(9);
  for (int i = 0; i < 20000; ++i) {
    double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    double v = rng.uniform01_open();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("uniform_below histogram") {
  Rng rng(11);
  std::vector<int> counts(6, 0);
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) ++counts[rng.uniform_below(6)];
  for (int c : counts) {
    CHECK(c > 9400);
    CHECK(c < 10600);
  }
}

TEST_CASE("gaussian moments") {
  Rng rng(17);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    sum += g;
    sum2 += g * g;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation") {
  Rng rng(23);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  auto w = v;
  rng.shuffle(w);
  auto sorted = w;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
}

}  // TEST_SUITE
