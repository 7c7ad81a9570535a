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

#include "fidnet/measurement.hpp"

#include <bit>
#include <cmath>
#include <random>

#include "fidnet/errors.hpp"

namespace fidnet::meas {

namespace {

using Gate = Eigen::Matrix2cd;

// Rotation taking the eigenbasis of the letter to the computational basis,
// +1 eigenvector first.
Gate basis_change(Pauli letter) {
  const double h = 1.0 / std::sqrt(2.0);
  Gate g;
  switch (letter) {
    case Pauli::X: g << h, h, h, -h; break;
    case Pauli::Y: g << h, Complex(0, -h), h, Complex(0, h); break;  // H S^dag
    default: g = Gate::Identity(); break;
  }
  return g;
}

void apply_to_rows(CMatrix& m, int n, int qubit, const Gate& g) {
  const std::size_t bit = std::size_t{1} << (n - 1 - qubit);
  for (std::size_t j = 0; j < dim_of(n); ++j) {
    if (j & bit) continue;
    const auto r0 = static_cast<Eigen::Index>(j);
    const auto r1 = static_cast<Eigen::Index>(j | bit);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const Complex a = m(r0, c);
      const Complex b = m(r1, c);
      m(r0, c) = g(0, 0) * a + g(0, 1) * b;
      m(r1, c) = g(1, 0) * a + g(1, 1) * b;
    }
  }
}

void check_setting(int n, const MeasurementSetting& s) {
  if (n != s.n()) fail(ErrorCode::DimensionMismatch, "state and setting sizes differ");
}

}  // namespace

MeasurementSetting::MeasurementSetting(PauliString word) : word_(word) {
  for (int q = 0; q < word_.n(); ++q) {
    if (word_.letter(q) == Pauli::I) {
      fail(ErrorCode::InvalidArgument, "measurement setting " + word_.letters() + " contains I");
    }
  }
}

MeasurementSetting MeasurementSetting::parse(std::string_view letters) {
  return MeasurementSetting(PauliString::parse(letters));
}

PauliString MeasurementSetting::sub_pauli(std::uint64_t mask) const {
  const int n = word_.n();
  std::uint64_t index = 0;
  for (int q = 0; q < n; ++q) {
    index *= 4;
    if (mask & (std::uint64_t{1} << (n - 1 - q))) index += static_cast<std::uint64_t>(word_.letter(q));
  }
  return PauliString(n, index);
}

std::vector<double> CountVector::frequencies() const {
  if (total == 0) fail(ErrorCode::ZeroTotal, "count vector has zero total");
  std::vector<double> out(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    out[j] = static_cast<double>(counts[j]) / static_cast<double>(total);
  }
  return out;
}

OutcomeDistribution outcome_probabilities(const StateVector& psi, const MeasurementSetting& s) {
  check_setting(psi.n(), s);
  CMatrix column = psi.amplitudes();
  for (int q = 0; q < psi.n(); ++q) apply_to_rows(column, psi.n(), q, basis_change(s.word().letter(q)));
  OutcomeDistribution out{s, std::vector<double>(psi.dim())};
  for (std::size_t j = 0; j < psi.dim(); ++j) out.p[j] = std::norm(column(static_cast<Eigen::Index>(j), 0));
  return out;
}

OutcomeDistribution outcome_probabilities(const DensityMatrix& rho, const MeasurementSetting& s) {
  check_setting(rho.n(), s);
  // V rho V^dag: rotate rows, then rotate rows of the adjoint.
  CMatrix m = rho.matrix();
  for (int q = 0; q < rho.n(); ++q) apply_to_rows(m, rho.n(), q, basis_change(s.word().letter(q)));
  CMatrix mt = m.adjoint();
  for (int q = 0; q < rho.n(); ++q) apply_to_rows(mt, rho.n(), q, basis_change(s.word().letter(q)));
  OutcomeDistribution out{s, std::vector<double>(rho.dim())};
  for (std::size_t j = 0; j < rho.dim(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    out.p[j] = std::max(0.0, mt(i, i).real());
  }
  return out;
}

OutcomeDistribution outcome_probabilities(const AnyState& state, const MeasurementSetting& s) {
  return std::visit([&](const auto& v) { return outcome_probabilities(v, s); }, state);
}

CountVector sample_counts_poisson(const OutcomeDistribution& dist, std::uint64_t shots,
                                  RngStream& rng) {
  if (shots == 0) fail(ErrorCode::InvalidArgument, "shot count must be positive");
  CountVector out{dist.setting, std::vector<std::uint64_t>(dist.p.size(), 0), 0};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    out.total = 0;
    for (std::size_t j = 0; j < dist.p.size(); ++j) {
      const double mean = static_cast<double>(shots) * dist.p[j];
      if (mean <= 0.0) {
        out.counts[j] = 0;
        continue;
      }
      std::poisson_distribution<std::uint64_t> poisson(mean);
      out.counts[j] = poisson(rng);
      out.total += out.counts[j];
    }
    if (out.total > 0) return out;
  }
  fail(ErrorCode::ZeroTotal, "Poisson sampling kept producing empty count vectors");
}

void parity_transform(std::span<double> values) {
  const std::size_t len = values.size();
  if (!std::has_single_bit(len)) fail(ErrorCode::LengthMismatch, "length is not a power of two");
  for (std::size_t h = 1; h < len; h <<= 1) {
    for (std::size_t i = 0; i < len; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = values[j];
        const double b = values[j + h];
        values[j] = a + b;
        values[j + h] = a - b;
      }
    }
  }
}

double SubPauliExpectations::at(const PauliString& p) const {
  if (p.n() != setting.n()) fail(ErrorCode::DimensionMismatch, "Pauli size differs from setting");
  std::uint64_t mask = 0;
  for (int q = 0; q < p.n(); ++q) {
    const Pauli letter = p.letter(q);
    if (letter == Pauli::I) continue;
    if (letter != setting.word().letter(q)) {
      fail(ErrorCode::InvalidArgument, p.letters() + " is not a sub-Pauli of " + setting.letters());
    }
    mask |= std::uint64_t{1} << (p.n() - 1 - q);
  }
  return by_mask[mask];
}

SubPauliExpectations expectations_from_outcomes(const OutcomeDistribution& dist) {
  double total = 0.0;
  for (double v : dist.p) total += v;
  if (!(total > 0.0)) fail(ErrorCode::ZeroTotal, "outcome distribution has zero mass");
  SubPauliExpectations out{dist.setting, dist.p};
  for (double& v : out.by_mask) v /= total;
  parity_transform(out.by_mask);
  return out;
}

SubPauliExpectations expectations_from_outcomes(const CountVector& counts) {
  return expectations_from_outcomes(OutcomeDistribution{counts.setting, counts.frequencies()});
}

}  // namespace fidnet::meas
