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

#include "fidnet/pauli_select.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "fidnet/errors.hpp"

namespace fidnet::plan {

namespace {

constexpr double kTieTolerance = 1e-12;

std::uint64_t pow3(int n) {
  std::uint64_t out = 1;
  for (int i = 0; i < n; ++i) out *= 3;
  return out;
}

// Pauli indices of the nonidentity sub-Paulis of a setting.
std::vector<std::uint64_t> sub_pauli_indices(const MeasurementSetting& s) {
  std::vector<std::uint64_t> out;
  out.reserve(dim_of(s.n()) - 1);
  for (std::uint64_t mask = 1; mask < dim_of(s.n()); ++mask) out.push_back(s.sub_pauli(mask).index());
  return out;
}

constexpr FixtureRow kFixtures[] = {
    {NamedState::Bell, 2, "XX;YZ;ZY;YY;ZX;XZ;XY"},
    {NamedState::W, 2, "XX;YZ;ZY;XZ;YY;ZX;ZZ"},
    {NamedState::GHZ, 3, "ZZZ;XXX;XYY;YXY;YYX;YYY;XXZ"},
    {NamedState::W, 3, "ZZZ;ZXX;ZYY;XZX;XXZ;YZY;YYZ"},
    {NamedState::Cluster, 4, "ZZXX;ZZYY;XXZZ;YYZZ;XYXY;XYYX;YXXY"},
    {NamedState::Dicke, 4, "XXXX;YYYY;ZZZZ;XXZZ;ZZYY;ZZXX;YYZZ"},
    {NamedState::GHZ, 4, "XXXX;YYYY;ZZZZ;XXYY;XYXY;YXYX;YYXX"},
    {NamedState::W, 4, "ZZZZ;ZZXX;ZZYY;XXZZ;YYZZ;XZXZ;YZYZ"},
    {NamedState::Cluster, 5, "XZZXZ;ZYXYZ;ZXZZX;YXXXY;YYZZX;XZZYY;ZYXXY"},
    {NamedState::CRing, 5, "XXXXX;ZYXYZ;ZZYXY;XYZZY;YXYZZ;YZZYX;XZZYX"},
    {NamedState::Dicke, 5, "ZZZZZ;XXXXZ;YYYZY;ZZZXX;ZYYYY;YZZYZ;XXXZX"},
    {NamedState::GHZ, 5, "XXXXX;ZZZZZ;XYXXY;XYXYX;XYYXX;YXYYY;YYXYY"},
    {NamedState::W, 5, "ZZZZZ;XXZZZ;XZZXZ;YYZZZ;YZZYZ;ZXZXZ;ZYZYZ"},
    {NamedState::C23, 6, "XZXYXY;XZXYXY;ZXYZYZ;ZYZYXZ;YXYXZX;XZXZYY;ZYZZXY"},
    {NamedState::Dicke, 6, "ZZZZZZ;XXZZZZ;ZZZZYY;ZZYYZZ;ZZXZZX;ZZZXXZ;YYZZZZ"},
    {NamedState::GHZ, 6, "XXXXXX;YYYYYY;ZZZZZZ;XXXYYY;XYYYYX;YXYYXY;YYYYXX"},
    {NamedState::W, 6, "ZZZZZZ;XZXZZZ;XZZZZX;YYZZZZ;YZZZYZ;ZXZXZZ;ZYZZYZ"},
};

}  // namespace

std::string_view to_string(Strategy s) {
  return s == Strategy::GreedyCoverage ? "greedy" : "top-abs";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  if (name == "greedy") return Strategy::GreedyCoverage;
  if (name == "top-abs") return Strategy::TopAbsExpectation;
  return std::nullopt;
}

SettingPlan SettingPlan::prefix(std::size_t k) const {
  if (k == 0 || k > settings.size()) {
    fail(ErrorCode::KOutOfRange, "prefix length " + std::to_string(k) + " outside plan of size " +
                                     std::to_string(settings.size()));
  }
  SettingPlan out{target_id, strategy, {}, {}};
  out.settings.assign(settings.begin(), settings.begin() + static_cast<std::ptrdiff_t>(k));
  // Plans read back from files may carry settings without weights.
  const std::size_t w = std::min(k, captured_weight.size());
  out.captured_weight.assign(captured_weight.begin(),
                             captured_weight.begin() + static_cast<std::ptrdiff_t>(w));
  return out;
}

std::string SettingPlan::describe() const {
  std::string out;
  for (const auto& s : settings) {
    if (!out.empty()) out += ';';
    out += s.letters();
  }
  return out;
}

std::vector<double> pauli_weights(const StateVector& target) {
  std::vector<double> w = pauli_vector(target);
  for (double& v : w) v *= v;
  return w;
}

std::vector<MeasurementSetting> all_settings(int n) {
  std::vector<MeasurementSetting> out;
  const std::uint64_t count = pow3(n);
  out.reserve(count);
  for (std::uint64_t code = 0; code < count; ++code) {
    // Base-3 digits, most significant first, mapped to X, Y, Z.
    std::uint64_t rest = code;
    std::uint64_t index = 0;
    std::uint64_t scale = 1;
    for (int q = n - 1; q >= 0; --q) {
      index += (rest % 3 + 1) * scale;
      rest /= 3;
      scale *= 4;
    }
    out.emplace_back(PauliString(n, index));
  }
  return out;
}

std::vector<double> captured_weights(std::span<const double> weights,
                                     std::span<const MeasurementSetting> settings) {
  std::vector<char> covered(weights.size(), 0);
  std::vector<double> out;
  double total = 0.0;
  for (const auto& s : settings) {
    for (std::uint64_t idx : sub_pauli_indices(s)) {
      if (!covered[idx]) {
        covered[idx] = 1;
        total += weights[idx];
      }
    }
    out.push_back(total);
  }
  return out;
}

SettingPlan select_settings(const StateVector& target, std::string target_id, std::size_t k,
                            Strategy strategy) {
  const int n = target.n();
  const std::uint64_t count = pow3(n);
  if (k < 1 || k > count) {
    fail(ErrorCode::KOutOfRange,
         "k = " + std::to_string(k) + " outside [1, " + std::to_string(count) + "]");
  }
  const std::vector<double> weights = pauli_weights(target);
  const std::vector<MeasurementSetting> candidates = all_settings(n);

  SettingPlan plan{std::move(target_id), strategy, {}, {}};
  if (strategy == Strategy::TopAbsExpectation) {
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Quantize so that weights equal up to round-off tie and fall back to index order.
    auto key = [&](std::size_t i) {
      return std::llround(std::sqrt(weights[candidates[i].index()]) / kTieTolerance);
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
    for (std::size_t i = 0; i < k; ++i) plan.settings.push_back(candidates[order[i]]);
  } else {
    std::vector<std::vector<std::uint64_t>> subs;
    subs.reserve(candidates.size());
    for (const auto& c : candidates) subs.push_back(sub_pauli_indices(c));
    std::vector<char> covered(weights.size(), 0);
    std::vector<char> taken(candidates.size(), 0);
    for (std::size_t round = 0; round < k; ++round) {
      std::size_t best = candidates.size();
      double best_gain = -1.0;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        if (taken[c]) continue;
        double gain = 0.0;
        for (std::uint64_t idx : subs[c]) {
          if (!covered[idx]) gain += weights[idx];
        }
        if (gain > best_gain + kTieTolerance) {
          best_gain = gain;
          best = c;
        }
      }
      taken[best] = 1;
      for (std::uint64_t idx : subs[best]) covered[idx] = 1;
      plan.settings.push_back(candidates[best]);
    }
  }
  plan.captured_weight = captured_weights(weights, plan.settings);
  return plan;
}

std::vector<std::uint64_t> feature_masks(int n, int max_identities, bool include_identity) {
  if (max_identities < 0 || max_identities > n) {
    fail(ErrorCode::InvalidArgument, "max_identities outside [0, n]");
  }
  std::vector<std::uint64_t> out;
  for (std::uint64_t mask = 0; mask < dim_of(n); ++mask) {
    const int identities = n - std::popcount(mask);
    if (identities > max_identities) continue;
    if (mask == 0 && !include_identity) continue;
    out.push_back(mask);
  }
  return out;
}

std::vector<PauliString> filter_feature_paulis(const MeasurementSetting& setting,
                                               int max_identities, bool include_identity) {
  std::vector<PauliString> out;
  for (std::uint64_t mask : feature_masks(setting.n(), max_identities, include_identity)) {
    out.push_back(setting.sub_pauli(mask));
  }
  return out;
}

std::uint64_t polynomial_feature_count(int n) {
  const std::uint64_t m = static_cast<std::uint64_t>(n);
  return (m * m * m * m - 2 * m * m * m + 11 * m * m + 14 * m) / 24 + 1;
}

std::optional<FixtureRow> published_settings(NamedState state, int n) {
  for (const FixtureRow& row : kFixtures) {
    if (row.state == state && row.n == n) return row;
  }
  return std::nullopt;
}

std::vector<MeasurementSetting> parse_setting_list(std::string_view list) {
  std::vector<MeasurementSetting> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    std::size_t end = list.find(';', start);
    if (end == std::string_view::npos) end = list.size();
    std::string word;
    for (char c : list.substr(start, end - start)) {
      if (c != ' ') word += c;
    }
    if (!word.empty()) out.push_back(MeasurementSetting::parse(word));
    start = end + 1;
  }
  return out;
}

}  // namespace fidnet::plan
