// Copyright 2026 The fidnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "fidnet/rng.hpp"

using fidnet::RngStream;

TEST_CASE("same seed and index reproduce the stream") {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a() == b());
}

TEST_CASE("distinct indices and seeds give distinct streams") {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (std::uint64_t idx = 0; idx < 20; ++idx) firsts.insert(RngStream(seed, idx)());
  }
  CHECK(firsts.size() == 400);
}

TEST_CASE("uniform draws stay in [0, 1) with the right moments") {
  RngStream r(1, 0);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sq += u * u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(sq / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12).epsilon(0.01));
}

TEST_CASE("normal draws have zero mean and unit variance") {
  RngStream r(2, 0);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("below is uniform over its range") {
  RngStream r(3, 0);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const auto v = r.below(7);
    REQUIRE(v < 7);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK(r.below(1) == 0);
}

TEST_CASE("split ignores consumed draws") {
  RngStream a(5, 9);
  const RngStream child_before = a.split(3);
  for (int i = 0; i < 10; ++i) a();
  RngStream c1 = child_before;
  RngStream c2 = a.split(3);
  for (int i = 0; i < 100; ++i) CHECK(c1() == c2());
  CHECK(a.split(3)() != a.split(4)());
}

TEST_CASE("works with standard distributions") {
  RngStream r(11, 0);
  std::poisson_distribution<int> pois(4.0);
  double sum = 0.0;
  for (int i = 0; i < 50000; ++i) sum += pois(r);
  CHECK(sum / 50000 == doctest::Approx(4.0).epsilon(0.02));
}
