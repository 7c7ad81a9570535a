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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fidnet/measurement.hpp"
#include "fidnet/quantum.hpp"

namespace fidnet::plan {

using meas::MeasurementSetting;

enum class Strategy { GreedyCoverage, TopAbsExpectation };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);

/// Ordered measurement settings for one target. captured_weight[j] is the
/// total weight of nonidentity Paulis covered by settings[0..j].
struct SettingPlan {
  std::string target_id;
  Strategy strategy = Strategy::GreedyCoverage;
  std::vector<MeasurementSetting> settings;
  std::vector<double> captured_weight;

  std::size_t size() const { return settings.size(); }
  SettingPlan prefix(std::size_t k) const;
  std::string describe() const;  // "XX;YY;ZZ"
};

/// chi(p)^2 for every Pauli index; entry 0 is the identity weight 1.
std::vector<double> pauli_weights(const StateVector& target);

/// All 3^n settings in canonical (Pauli index) order.
std::vector<MeasurementSetting> all_settings(int n);

SettingPlan select_settings(const StateVector& target, std::string target_id, std::size_t k,
                            Strategy strategy = Strategy::GreedyCoverage);

/// Weight captured by each prefix of an arbitrary setting list.
std::vector<double> captured_weights(std::span<const double> weights,
                                     std::span<const MeasurementSetting> settings);

/// Outcome masks (bit n-1-q for qubit q) of the sub-Paulis with at most
/// max_identities identity letters, in increasing mask order. The identity
/// string itself (mask 0) appears only when max_identities >= n and
/// include_identity is set.
std::vector<std::uint64_t> feature_masks(int n, int max_identities, bool include_identity = true);

std::vector<PauliString> filter_feature_paulis(const MeasurementSetting& setting,
                                               int max_identities, bool include_identity = true);

/// sum_{i=0}^{4} C(n, i) in polynomial form: (n^4 - 2n^3 + 11n^2 + 14n)/24 + 1.
std::uint64_t polynomial_feature_count(int n);

/// Published setting lists for the named targets, kept for side-by-side
/// reports only.
struct FixtureRow {
  NamedState state;
  int n;
  std::string_view settings;
};

std::optional<FixtureRow> published_settings(NamedState state, int n);
std::vector<MeasurementSetting> parse_setting_list(std::string_view list);

}  // namespace fidnet::plan
