#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "distid/random.hpp"

using namespace distid;

TEST_CASE("engine matches the standard mt19937_64 sequence") {
  // 10000th output for the default seed is fixed by the C++ standard
  Rng rng(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next_u64();
  CHECK(x == 9981545732273789042ull);
}

TEST_CASE("same seed, same stream") {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.normal() == b.normal());
    CHECK(a.uniform01() == b.uniform01());
    CHECK(a.uniform_int(-3, 7) == b.uniform_int(-3, 7));
  }
  Rng c(43);
  Rng d(42);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += c.next_u64() == d.next_u64();
  CHECK(same == 0);
}

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t root = 0; root < 20; ++root)
    for (std::uint64_t stream = 0; stream < 20; ++stream) seen.insert(derive_seed(root, stream));
  CHECK(seen.size() == 400);
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}

TEST_CASE("uniform01 and uniform_int ranges") {
  Rng rng(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 100000; ++i) {
    const auto v = rng.uniform_int(1, 10);
    REQUIRE(v >= 1);
    REQUIRE(v <= 10);
    ++hits[static_cast<std::size_t>(v - 1)];
  }
  // binomial std is ~95 per bin
  for (int h : hits) CHECK(std::abs(h - 10000) < 500);
  CHECK(rng.uniform_int(5, 5) == 5);
}

TEST_CASE("normal moments") {
  Rng rng(2024);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(2.0, 3.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean - 2.0) < 4.0 * 3.0 / std::sqrt(n));
  // var of the sample variance is 2 sigma^4 / n
  CHECK(std::abs(var - 9.0) < 4.0 * 9.0 * std::sqrt(2.0 / n));
}
