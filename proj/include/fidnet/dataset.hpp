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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fidnet/pauli_select.hpp"
#include "fidnet/quantum.hpp"
#include "fidnet/rng.hpp"
#include "fidnet/state_gen.hpp"

namespace fidnet::data {

inline constexpr int kDatasetSchemaVersion = 1;

/// Partition of [0, 1] into fidelity labels. Intervals are half-open
/// [e_i, e_{i+1}) except the last, which is closed at 1.
struct BinningScheme {
  std::string id;
  std::vector<double> edges;

  std::size_t count() const { return edges.size() - 1; }
  std::size_t bin_of(double f) const;
  double lower(std::size_t bin) const { return edges.at(bin); }
  double upper(std::size_t bin) const { return edges.at(bin + 1); }
  double midpoint(std::size_t bin) const { return 0.5 * (lower(bin) + upper(bin)); }
  double width(std::size_t bin) const { return upper(bin) - lower(bin); }
};

enum class BinPreset { L66, L122, L234 };

/// Two-band ladder: coarse intervals on [0, 0.55), fine ones on [0.55, 1].
/// (coarse, fine) = (11, 55), (22, 100), (34, 200).
BinningScheme make_binning(BinPreset preset);
/// Explicit edges; throws BadEdges unless strictly increasing from 0 to 1.
BinningScheme make_binning(std::string id, std::vector<double> edges);
/// "L66" / "L122" / "L234".
std::optional<BinPreset> parse_bin_preset(std::string_view id);
std::string_view to_string(BinPreset preset);

enum class FeatureMode { OutcomeProbs, PauliExpectations };
std::string_view to_string(FeatureMode mode);
std::optional<FeatureMode> parse_feature_mode(std::string_view name);

/// Which numbers the network sees for each measured setting.
struct FeatureSpec {
  FeatureMode mode = FeatureMode::OutcomeProbs;
  plan::SettingPlan plan;
  int max_identities = 4;
  /// Poisson shots per setting; 0 means exact probabilities.
  std::uint64_t shots = 10000;

  int n() const;
  /// max_identities capped at n, so the default of 4 also serves small registers.
  int effective_max_identities() const;
  std::size_t features_per_setting() const;
  std::size_t feature_count() const { return features_per_setting() * plan.size(); }
  /// Column ids such as "XY:01" (outcome) or "XY:XI" (sub-Pauli).
  std::vector<std::string> layout() const;
  std::string layout_hash() const;
  FeatureSpec prefix(std::size_t k) const;
};

/// Feature block for one setting from its outcome frequencies.
std::vector<double> features_from_frequencies(std::vector<double> freqs,
                                              const meas::MeasurementSetting& setting,
                                              const FeatureSpec& spec);

/// Feature block for one setting; consumes rng only when shots > 0.
std::vector<double> setting_features(const AnyState& state, const meas::MeasurementSetting& setting,
                                     const FeatureSpec& spec, RngStream& rng);

struct DatasetRecord {
  std::vector<double> features;
  std::size_t label = 0;
  double true_fidelity = 0.0;
  std::uint64_t seed = 0;
};

struct Target {
  std::string id;
  StateVector state = StateVector::basis(1, 0);
};

/// Everything needed to regenerate a dataset bit for bit.
struct DatasetManifest {
  int schema_version = kDatasetSchemaVersion;
  std::string target_id;
  std::vector<Complex> target_amplitudes;
  FeatureSpec features;
  BinningScheme binning;
  gen::StateKind kind = gen::StateKind::Mixed;
  gen::M1Dist m1_dist = gen::M1Dist::H;
  std::size_t per_label_train = 0;
  std::size_t per_label_val = 0;
  std::uint64_t root_seed = 0;
  std::string records_hash;

  int n() const { return features.n(); }
  std::string target_hash() const;
  StateVector target() const;
  nlohmann::json to_json() const;
  static DatasetManifest from_json(const nlohmann::json& j);
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<DatasetRecord> train;
  std::vector<DatasetRecord> val;

  /// Same records restricted to the first k settings of the plan.
  Dataset prefix(std::size_t k) const;
};

struct BuildConfig {
  Target target;
  FeatureSpec features;
  BinningScheme binning;
  gen::StateKind kind = gen::StateKind::Mixed;
  gen::M1Dist m1_dist = gen::M1Dist::H;
  std::size_t per_label_train = 200;
  std::size_t per_label_val = 50;
  std::uint64_t root_seed = 1;
  std::size_t workers = 0;
};

/// Per label, generates states at fidelities uniform within the label's
/// interval (relative to |0...0>), moves them onto the target with the
/// Householder unitary, measures every planned setting and assembles
/// features. Train records come first (label-major), then validation.
Dataset build_dataset(const BuildConfig& config);

/// Record `index` of a build, exposed for regeneration checks.
DatasetRecord make_record(const BuildConfig& config, const Unitary& transport, std::size_t label,
                          std::uint64_t index);

/// Writes <base>.manifest.json and <base>.csv.
void save_dataset(const Dataset& ds, const std::filesystem::path& base);
Dataset load_dataset(const std::filesystem::path& base);

std::string fnv1a_hex(std::string_view bytes);
/// Shortest round-trip decimal ("%.17g").
std::string format_real(double v);

}  // namespace fidnet::data
