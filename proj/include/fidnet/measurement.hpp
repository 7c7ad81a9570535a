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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fidnet/quantum.hpp"
#include "fidnet/rng.hpp"

namespace fidnet::meas {

/// Local measurement basis per qubit: a Pauli word without identities.
class MeasurementSetting {
 public:
  explicit MeasurementSetting(PauliString word);
  static MeasurementSetting parse(std::string_view letters);

  int n() const { return word_.n(); }
  const PauliString& word() const { return word_; }
  std::uint64_t index() const { return word_.index(); }
  std::string letters() const { return word_.letters(); }

  /// Sub-Pauli keeping this setting's letters on the qubits whose outcome
  /// bits are set in `mask` (bit n-1-q is qubit q) and I elsewhere.
  PauliString sub_pauli(std::uint64_t mask) const;

  friend bool operator==(const MeasurementSetting&, const MeasurementSetting&) = default;

 private:
  PauliString word_;
};

/// Outcome j has bit (n-1-q) clear when qubit q reads eigenvalue +1.
struct OutcomeDistribution {
  MeasurementSetting setting;
  std::vector<double> p;
};

struct CountVector {
  MeasurementSetting setting;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  /// counts / total.
  std::vector<double> frequencies() const;
};

OutcomeDistribution outcome_probabilities(const StateVector& psi, const MeasurementSetting& s);
OutcomeDistribution outcome_probabilities(const DensityMatrix& rho, const MeasurementSetting& s);
OutcomeDistribution outcome_probabilities(const AnyState& state, const MeasurementSetting& s);

/// Independent Poisson(N p_j) counts; an all-zero draw is redrawn.
CountVector sample_counts_poisson(const OutcomeDistribution& dist, std::uint64_t shots,
                                  RngStream& rng);

/// Expectations of every sub-Pauli of the measured setting.
struct SubPauliExpectations {
  MeasurementSetting setting;
  /// Indexed by qubit mask; entry 0 is the identity (always 1).
  std::vector<double> by_mask;

  double at(const PauliString& p) const;
};

SubPauliExpectations expectations_from_outcomes(const OutcomeDistribution& dist);
SubPauliExpectations expectations_from_outcomes(const CountVector& counts);

/// In-place Walsh-Hadamard transform: out[S] = sum_j (-1)^{|j & S|} in[j].
void parity_transform(std::span<double> values);

}  // namespace fidnet::meas
