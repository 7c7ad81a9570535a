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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fidnet/quantum.hpp"
#include "fidnet/rng.hpp"

namespace fidnet::gen {

enum class StateKind { Pure, Mixed };

/// Distributions of the leading column weight m1 of the mixed-state
/// generator. Each u is an independent uniform draw on [0, 1).
enum class M1Dist {
  A,  // 1 - u*u
  B,  // 1 - sqrt(u)*u
  C,  // u
  D,  // |N(0,1)| clamped to [0, 1]
  E,  // pure: m1 = 1
  F,  // 1 - u*u*u
  G,  // 1 - u*u*u*u
  H,  // 1 - u^3 (one draw)
  I,  // 1 - u*u^3
};

std::string_view to_string(M1Dist dist);
std::optional<M1Dist> parse_m1_dist(std::string_view name);
std::string_view to_string(StateKind kind);
std::optional<StateKind> parse_state_kind(std::string_view name);

struct GeneratorSpec {
  int n = 2;
  double fidelity = 1.0;
  StateKind kind = StateKind::Mixed;
  M1Dist m1_dist = M1Dist::H;
  /// Fixed m1 in place of a draw from m1_dist.
  std::optional<double> m1_override;

  void validate() const;
};

/// d nonnegative reals summing to one: gaps between d-1 sorted uniforms.
std::vector<double> random_simplex(std::size_t d, RngStream& rng);

/// sqrt(simplex) magnitudes with uniform phases; the first phase is 1.
CVector random_ket(std::size_t d, RngStream& rng);

/// f|0...0> + sqrt(1 - f^2)|phi>, |phi> random on the complement.
StateVector gen_pure_with_fidelity(int n, double f, RngStream& rng);

double draw_m1(M1Dist dist, RngStream& rng);

/// Ginibre-style construction rho = G G^dag / tr(G G^dag) with the first
/// component of every column tuned so that <0...0|rho|0...0> = f^2.
///
/// Column b is sqrt(m_b) (x_b e^{i t1}, sqrt(1 - x_b^2) e^{i t2} |phi_b>).
/// The weights m sum to one, so the population of |0...0> is sum m_b x_b^2.
/// The x_b are fixed one column at a time, each uniform over the interval
/// that keeps the remaining columns able to reach the target; the last
/// nonzero column absorbs the residual exactly.
DensityMatrix gen_mixed_with_fidelity(int n, double f, M1Dist dist, RngStream& rng,
                                      std::optional<double> m1_override = std::nullopt);

/// Dispatches on spec.kind; the result is relative to the |0...0> target.
AnyState generate(const GeneratorSpec& spec, RngStream& rng);

StateVector transport_state(const Unitary& u, const StateVector& psi);
DensityMatrix transport_state(const Unitary& u, const DensityMatrix& rho);
AnyState transport_state(const Unitary& u, const AnyState& state);

double purity(const DensityMatrix& rho);

struct Histogram {
  std::vector<double> edges;  // bins + 1 equal-width edges on [0, 1]
  std::vector<std::size_t> counts;

  static Histogram build(std::span<const double> values, std::size_t bins);
  std::size_t total() const;
};

struct AnchorHistogram {
  std::size_t anchor = 0;
  std::vector<double> fidelities;  // to every other state, in index order
  Histogram histogram;
};

struct UniformityReport {
  std::vector<AnchorHistogram> anchors;
};

/// Picks `anchors` distinct states at random and histograms the fidelity of
/// each to all other states.
UniformityReport uniformity_report(std::span<const StateVector> states, std::size_t anchors,
                                   std::size_t bins, RngStream& rng);
UniformityReport uniformity_report(std::span<const DensityMatrix> states, std::size_t anchors,
                                   std::size_t bins, RngStream& rng);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

struct PurityRow {
  std::string label;  // distribution letter or "m1=<value>"
  double mean = 0.0;
  Histogram histogram;
};

struct PuritySource {
  M1Dist dist = M1Dist::C;
  std::optional<double> m1_override;
  std::string label() const;
};

/// Purity histograms of `count` mixed states at fidelity f per m1 source.
std::vector<PurityRow> purity_report(int n, double f, std::span<const PuritySource> sources,
                                     std::size_t count, std::size_t bins, std::uint64_t seed);

}  // namespace fidnet::gen
