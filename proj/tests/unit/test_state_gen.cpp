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
#include <numeric>

#include "fidnet/errors.hpp"
#include "fidnet/state_gen.hpp"
#include "oracles.hpp"

using namespace fidnet;
using namespace fidnet::gen;

namespace {

bool throws_code(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

double hermitian_gap(const CMatrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("random simplex") {
  RngStream rng(1, 0);
  CHECK(random_simplex(1, rng) == std::vector<double>{1.0});
  const auto s = random_simplex(4, rng);
  CHECK(std::abs(std::accumulate(s.begin(), s.end(), 0.0) - 1.0) < 1e-12);
  for (double x : s) CHECK(x >= 0.0);

  std::vector<double> mean(3, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto v = random_simplex(3, rng);
    for (int j = 0; j < 3; ++j) mean[j] += v[j] / draws;
  }
  for (double m : mean) CHECK(std::abs(m - 1.0 / 3.0) < 0.01);
  CHECK(throws_code([&] { random_simplex(0, rng); }, ErrorCode::InvalidArgument));
}

TEST_CASE("random ket") {
  RngStream rng(2, 0);
  const CVector one = random_ket(1, rng);
  CHECK(one[0] == Complex(1.0, 0.0));
  double mean0 = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const CVector v = random_ket(8, rng);
    REQUIRE(v[0].imag() == 0.0);
    REQUIRE(std::abs(v.squaredNorm() - 1.0) < 1e-12);
    mean0 += std::norm(v[0]) / draws;
  }
  CHECK(std::abs(mean0 - 1.0 / 8.0) < 0.01);
}

TEST_CASE("pure states at a given fidelity") {
  RngStream rng(3, 0);
  const StateVector one = gen_pure_with_fidelity(3, 1.0, rng);
  CHECK(one[0] == Complex(1.0, 0.0));
  CHECK((one.amplitudes().tail(7)).norm() == 0.0);
  const StateVector zero = gen_pure_with_fidelity(3, 0.0, rng);
  CHECK(zero[0] == Complex(0.0, 0.0));
  CHECK(std::abs(zero.amplitudes().norm() - 1.0) < 1e-12);
  for (int t = 0; t < 100; ++t) {
    const StateVector s = gen_pure_with_fidelity(4, 0.25, rng);
    CHECK(std::abs(fidelity_to_pure(StateVector::basis(4, 0), s) - 0.25) < 1e-12);
  }
}

TEST_CASE("mixed states at a given fidelity") {
  RngStream rng(4, 0);
  const DensityMatrix one = gen_mixed_with_fidelity(3, 1.0, M1Dist::C, rng);
  CMatrix expect = CMatrix::Zero(8, 8);
  expect(0, 0) = 1.0;
  CHECK((one.matrix() - expect).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(std::abs(fidelity_to_pure(StateVector::basis(3, 0), one) - 1.0) < 1e-9);

  for (int t = 0; t < 50; ++t) {
    const DensityMatrix r = gen_mixed_with_fidelity(2, 0.8, M1Dist::C, rng);
    CHECK(std::abs(fidelity_to_pure(StateVector::basis(2, 0), r) - 0.8) < 1e-9);
  }
  const DensityMatrix rank1 = gen_mixed_with_fidelity(3, 0.6, M1Dist::C, rng, 1.0);
  CHECK(std::abs(purity(rank1) - 1.0) < 1e-9);
  const DensityMatrix e_dist = gen_mixed_with_fidelity(3, 0.6, M1Dist::E, rng);
  CHECK(std::abs(purity(e_dist) - 1.0) < 1e-9);
}

TEST_CASE("every generated state meets its fidelity and is a valid density matrix") {
  RngStream spec_rng(5, 0);
  for (int t = 0; t < 1000; ++t) {
    const int n = 2 + static_cast<int>(spec_rng.below(4));
    const double f = spec_rng.uniform();
    const auto dist = static_cast<M1Dist>(spec_rng.below(9));
    RngStream rng(5, 1 + static_cast<std::uint64_t>(t));
    const DensityMatrix r = gen_mixed_with_fidelity(n, f, dist, rng);
    REQUIRE(std::abs(fidelity_to_pure(StateVector::basis(n, 0), r) - f) < 1e-9);
    REQUIRE(hermitian_gap(r.matrix()) < 1e-10);
    REQUIRE(std::abs(r.matrix().trace() - Complex(1.0, 0.0)) < 1e-10);
    REQUIRE(r.min_eigenvalue() >= -1e-9);
    const StateVector p = gen_pure_with_fidelity(n, f, rng);
    REQUIRE(std::abs(fidelity_to_pure(StateVector::basis(n, 0), p) - f) < 1e-9);
  }
}

TEST_CASE("generation is a pure function of the stream") {
  GeneratorSpec spec;
  spec.n = 3;
  spec.fidelity = 0.7;
  RngStream a(9, 4), b(9, 4);
  const AnyState x = generate(spec, a), y = generate(spec, b);
  CHECK(std::get<DensityMatrix>(x).matrix() == std::get<DensityMatrix>(y).matrix());
}

TEST_CASE("m1 draws stay in [0, 1]") {
  RngStream rng(6, 0);
  for (int d = 0; d < 9; ++d) {
    for (int t = 0; t < 2000; ++t) {
      const double m = draw_m1(static_cast<M1Dist>(d), rng);
      REQUIRE(m >= 0.0);
      REQUIRE(m <= 1.0);
    }
  }
  CHECK(draw_m1(M1Dist::E, rng) == 1.0);
}

TEST_CASE("generator spec validation") {
  GeneratorSpec s;
  s.m1_dist = M1Dist::E;
  s.kind = StateKind::Mixed;
  CHECK(throws_code([&] { s.validate(); }, ErrorCode::InvalidArgument));
  s.kind = StateKind::Pure;
  CHECK_NOTHROW(s.validate());
  s.fidelity = 1.5;
  CHECK(throws_code([&] { s.validate(); }, ErrorCode::InvalidArgument));
  CHECK(parse_m1_dist("H") == M1Dist::H);
  CHECK(parse_state_kind("pure") == StateKind::Pure);
}

TEST_CASE("transport preserves fidelity") {
  RngStream rng(7, 0);
  const StateVector psi = gen_pure_with_fidelity(3, 0.3, rng);
  const StateVector same = transport_state(Unitary::identity(3), psi);
  CHECK((same.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-15);

  const StateVector ghz = named_state(NamedState::GHZ, 3);
  const Unitary u = householder_target_unitary(ghz);
  CHECK(std::abs(transport_state(u, psi).amplitudes().norm() - 1.0) < 1e-12);
  for (int t = 0; t < 20; ++t) {
    const DensityMatrix sigma = gen_mixed_with_fidelity(3, 0.6, M1Dist::H, rng);
    CHECK(std::abs(fidelity_to_pure(ghz, transport_state(u, sigma)) - 0.6) < 1e-10);
  }
}

TEST_CASE("purity") {
  CHECK(purity(DensityMatrix::maximally_mixed(2)) == doctest::Approx(0.25).epsilon(1e-14));
  RngStream rng(8, 0);
  for (int t = 0; t < 10; ++t) {
    const DensityMatrix r(3, oracle::random_density(3, rng));
    const Eigen::SelfAdjointEigenSolver<CMatrix> es(r.matrix());
    CHECK(std::abs(purity(r) - es.eigenvalues().squaredNorm()) < 1e-10);
  }
}

TEST_CASE("uniformity report") {
  RngStream rng(9, 0);
  std::vector<StateVector> same(10, named_state(NamedState::GHZ, 3));
  const auto rep = uniformity_report(same, 2, 10, rng);
  REQUIRE(rep.anchors.size() == 2);
  for (const auto& a : rep.anchors) CHECK(a.histogram.counts.back() == 9);

  std::vector<StateVector> states;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    RngStream r(10, i);
    states.push_back(gen_pure_with_fidelity(4, 0.25, r));
  }
  const std::vector<StateVector> hundred(states.begin(), states.begin() + 100);
  const auto small = uniformity_report(hundred, 2, 20, rng);
  REQUIRE(small.anchors.size() == 2);
  for (const auto& a : small.anchors) CHECK(a.histogram.total() == 99);

  const auto big = uniformity_report(states, 2, 20, rng);
  CHECK(ks_statistic(big.anchors[0].fidelities, big.anchors[1].fidelities) < 0.1);

  CHECK(throws_code([&] { uniformity_report(std::span<const StateVector>(states.data(), 2), 2, 5, rng); },
                    ErrorCode::TooFewStates));
}

TEST_CASE("purity report") {
  const std::vector<PuritySource> sources{{M1Dist::E, std::nullopt},
                                          {M1Dist::C, 0.01},
                                          {M1Dist::H, std::nullopt},
                                          {M1Dist::C, std::nullopt}};
  const auto rows = purity_report(4, 0.25, sources, 300, 20, 3);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rows[0].histogram.counts.back() == 300);
  CHECK(rows[1].label == "m1=0.01");
  CHECK(rows[1].mean < 0.3);
  CHECK(rows[2].mean > rows[3].mean);
  CHECK(throws_code([&] { purity_report(4, 0.25, sources, 50, 20, 3); }, ErrorCode::InvalidArgument));
}
