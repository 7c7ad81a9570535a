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

#include "fidnet/state_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fidnet/errors.hpp"

namespace fidnet::gen {

namespace {

constexpr double kZeroWeight = 1e-15;

Complex unit_phase(RngStream& rng) {
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return {std::cos(theta), std::sin(theta)};
}

void check_fidelity(double f) {
  if (!(f >= 0.0 && f <= 1.0)) {
    std::ostringstream os;
    os << "fidelity " << f << " outside [0, 1]";
    fail(ErrorCode::InvalidArgument, os.str());
  }
}

template <typename State, typename Fid>
UniformityReport uniformity_impl(std::span<const State> states, std::size_t anchors,
                                 std::size_t bins, RngStream& rng, Fid&& fid) {
  if (anchors == 0 || states.size() < anchors + 1) {
    fail(ErrorCode::TooFewStates, "need at least anchors + 1 states");
  }
  for (const auto& s : states) {
    if (s.n() != states.front().n()) {
      fail(ErrorCode::DimensionMismatch, "states differ in qubit count");
    }
  }
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < anchors; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
    std::swap(order[i], order[j]);
  }
  UniformityReport report;
  for (std::size_t a = 0; a < anchors; ++a) {
    AnchorHistogram row;
    row.anchor = order[a];
    row.fidelities.reserve(states.size() - 1);
    for (std::size_t j = 0; j < states.size(); ++j) {
      if (j == row.anchor) continue;
      row.fidelities.push_back(fid(states[row.anchor], states[j]));
    }
    row.histogram = Histogram::build(row.fidelities, bins);
    report.anchors.push_back(std::move(row));
  }
  return report;
}

}  // namespace

std::string_view to_string(M1Dist dist) {
  static constexpr std::string_view kNames[] = {"A", "B", "C", "D", "E", "F", "G", "H", "I"};
  return kNames[static_cast<int>(dist)];
}

std::optional<M1Dist> parse_m1_dist(std::string_view name) {
  if (name.size() != 1) return std::nullopt;
  const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  if (c < 'A' || c > 'I') return std::nullopt;
  return static_cast<M1Dist>(c - 'A');
}

std::string_view to_string(StateKind kind) { return kind == StateKind::Pure ? "pure" : "mixed"; }

std::optional<StateKind> parse_state_kind(std::string_view name) {
  if (name == "pure") return StateKind::Pure;
  if (name == "mixed") return StateKind::Mixed;
  return std::nullopt;
}

void GeneratorSpec::validate() const {
  if (n < 1 || n > kMaxQubits) fail(ErrorCode::InvalidArgument, "qubit count outside [1, 8]");
  check_fidelity(fidelity);
  if (m1_dist == M1Dist::E && kind != StateKind::Pure) {
    fail(ErrorCode::InvalidArgument, "m1 distribution E describes pure states");
  }
  if (m1_override && !(*m1_override > 0.0 && *m1_override <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "m1 override outside (0, 1]");
  }
}

std::vector<double> random_simplex(std::size_t d, RngStream& rng) {
  if (d == 0) fail(ErrorCode::InvalidArgument, "simplex dimension must be positive");
  std::vector<double> cuts(d - 1);
  for (double& c : cuts) c = rng.uniform();
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> out(d);
  double prev = 0.0;
  for (std::size_t i = 0; i + 1 < d; ++i) {
    out[i] = cuts[i] - prev;
    prev = cuts[i];
  }
  out[d - 1] = 1.0 - prev;
  return out;
}

CVector random_ket(std::size_t d, RngStream& rng) {
  const std::vector<double> p = random_simplex(d, rng);
  CVector out(static_cast<Eigen::Index>(d));
  out[0] = std::sqrt(p[0]);
  for (std::size_t i = 1; i < d; ++i) {
    out[static_cast<Eigen::Index>(i)] = std::sqrt(p[i]) * unit_phase(rng);
  }
  // Gap sums carry ~1e-16 drift; renormalize so downstream norms stay tight.
  out /= out.norm();
  return out;
}

StateVector gen_pure_with_fidelity(int n, double f, RngStream& rng) {
  check_fidelity(f);
  const std::size_t d = dim_of(n);
  CVector amp(static_cast<Eigen::Index>(d));
  amp[0] = f;
  amp.tail(static_cast<Eigen::Index>(d - 1)) = std::sqrt(1.0 - f * f) * random_ket(d - 1, rng);
  return StateVector(n, std::move(amp));
}

double draw_m1(M1Dist dist, RngStream& rng) {
  switch (dist) {
    case M1Dist::A: { const double u = rng.uniform(); return 1.0 - u * rng.uniform(); }
    case M1Dist::B: { const double u = rng.uniform(); return 1.0 - std::sqrt(u) * rng.uniform(); }
    case M1Dist::C: return rng.uniform();
    case M1Dist::D: return std::clamp(std::abs(rng.normal()), 0.0, 1.0);
    case M1Dist::E: return 1.0;
    case M1Dist::F: {
      const double u1 = rng.uniform();
      const double u2 = rng.uniform();
      return 1.0 - u1 * u2 * rng.uniform();
    }
    case M1Dist::G: {
      const double u1 = rng.uniform();
      const double u2 = rng.uniform();
      const double u3 = rng.uniform();
      return 1.0 - u1 * u2 * u3 * rng.uniform();
    }
    case M1Dist::H: { const double u = rng.uniform(); return 1.0 - u * u * u; }
    case M1Dist::I: {
      const double u1 = rng.uniform();
      const double u2 = rng.uniform();
      return 1.0 - u1 * u2 * u2 * u2;
    }
  }
  return 1.0;
}

DensityMatrix gen_mixed_with_fidelity(int n, double f, M1Dist dist, RngStream& rng,
                                      std::optional<double> m1_override) {
  check_fidelity(f);
  const std::size_t d = dim_of(n);
  const double target = f * f;

  // Column weights: m1 from the chosen rule, the rest proportional to
  // squared standard normals.
  std::vector<double> m(d, 0.0);
  m[0] = std::clamp(m1_override ? *m1_override : draw_m1(dist, rng), 0.0, 1.0);
  {
    std::vector<double> g(d - 1);
    double total = 0.0;
    for (double& x : g) {
      const double z = rng.normal();
      x = z * z;
      total += x;
    }
    for (std::size_t b = 1; b < d; ++b) {
      m[b] = total > 0.0 ? (1.0 - m[0]) * g[b - 1] / total : 0.0;
    }
  }

  std::vector<std::size_t> active;
  for (std::size_t b = 0; b < d; ++b) {
    if (m[b] >= kZeroWeight) active.push_back(b);
  }
  std::vector<double> tail(active.size() + 1, 0.0);
  for (std::size_t i = active.size(); i-- > 0;) tail[i] = tail[i + 1] + m[active[i]];

  std::vector<double> x(d, 0.0);
  double residual = target;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const std::size_t b = active[i];
    const double hi2 = std::clamp(residual / m[b], 0.0, 1.0);
    if (i + 1 == active.size()) {
      x[b] = std::sqrt(hi2);
    } else {
      const double lo2 = std::clamp((residual - tail[i + 1]) / m[b], 0.0, 1.0);
      x[b] = rng.uniform(std::sqrt(lo2), std::sqrt(std::max(lo2, hi2)));
    }
    residual = std::max(0.0, residual - m[b] * x[b] * x[b]);
  }

  const auto dd = static_cast<Eigen::Index>(d);
  CMatrix g = CMatrix::Zero(dd, dd);
  for (std::size_t b : active) {
    const auto col = static_cast<Eigen::Index>(b);
    const double w = std::sqrt(m[b]);
    g(0, col) = w * x[b] * unit_phase(rng);
    const Complex phase = unit_phase(rng);
    g.col(col).tail(dd - 1) = w * std::sqrt(std::max(0.0, 1.0 - x[b] * x[b])) * phase *
                              random_ket(d - 1, rng);
  }
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint()).eval();

  const double population = rho(0, 0).real();
  if (std::abs(population - target) > 1e-9) {
    std::ostringstream os;
    os << "generated population " << population << " misses target " << target;
    fail(ErrorCode::InfeasibleSpec, os.str());
  }
  return DensityMatrix(n, std::move(rho));
}

AnyState generate(const GeneratorSpec& spec, RngStream& rng) {
  spec.validate();
  if (spec.kind == StateKind::Pure) return gen_pure_with_fidelity(spec.n, spec.fidelity, rng);
  return gen_mixed_with_fidelity(spec.n, spec.fidelity, spec.m1_dist, rng, spec.m1_override);
}

StateVector transport_state(const Unitary& u, const StateVector& psi) {
  if (u.n() != psi.n()) fail(ErrorCode::DimensionMismatch, "unitary and state sizes differ");
  CVector out = u.matrix() * psi.amplitudes();
  return StateVector::normalized(psi.n(), std::move(out));
}

DensityMatrix transport_state(const Unitary& u, const DensityMatrix& rho) {
  if (u.n() != rho.n()) fail(ErrorCode::DimensionMismatch, "unitary and state sizes differ");
  CMatrix out = u.matrix() * rho.matrix() * u.matrix().adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  return DensityMatrix(rho.n(), std::move(out));
}

AnyState transport_state(const Unitary& u, const AnyState& state) {
  return std::visit([&](const auto& s) -> AnyState { return transport_state(u, s); }, state);
}

double purity(const DensityMatrix& rho) { return rho.matrix().squaredNorm(); }

Histogram Histogram::build(std::span<const double> values, std::size_t bins) {
  if (bins == 0) fail(ErrorCode::InvalidArgument, "histogram needs at least one bin");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : values) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    const auto idx = std::min(bins - 1, static_cast<std::size_t>(clamped * static_cast<double>(bins)));
    ++h.counts[idx];
  }
  return h;
}

std::size_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

UniformityReport uniformity_report(std::span<const StateVector> states, std::size_t anchors,
                                   std::size_t bins, RngStream& rng) {
  return uniformity_impl(states, anchors, bins, rng,
                         [](const StateVector& a, const StateVector& b) {
                           return fidelity_to_pure(a, b);
                         });
}

UniformityReport uniformity_report(std::span<const DensityMatrix> states, std::size_t anchors,
                                   std::size_t bins, RngStream& rng) {
  return uniformity_impl(states, anchors, bins, rng,
                         [](const DensityMatrix& a, const DensityMatrix& b) {
                           return fidelity_general(a, b);
                         });
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) fail(ErrorCode::InvalidArgument, "KS statistic of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double best = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

std::string PuritySource::label() const {
  if (m1_override) {
    std::ostringstream os;
    os << "m1=" << *m1_override;
    return os.str();
  }
  return std::string(to_string(dist));
}

std::vector<PurityRow> purity_report(int n, double f, std::span<const PuritySource> sources,
                                     std::size_t count, std::size_t bins, std::uint64_t seed) {
  if (count < 100) fail(ErrorCode::InvalidArgument, "purity report needs count >= 100");
  std::vector<PurityRow> rows;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const PuritySource& src = sources[s];
    std::vector<double> values(count);
    const RngStream base(seed, s);
    for (std::size_t i = 0; i < count; ++i) {
      RngStream rng = base.split(i);
      if (src.dist == M1Dist::E && !src.m1_override) {
        values[i] = purity(DensityMatrix(gen_pure_with_fidelity(n, f, rng)));
      } else {
        values[i] = purity(gen_mixed_with_fidelity(n, f, src.dist, rng, src.m1_override));
      }
    }
    PurityRow row;
    row.label = src.label();
    row.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(count);
    row.histogram = Histogram::build(values, bins);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace fidnet::gen
