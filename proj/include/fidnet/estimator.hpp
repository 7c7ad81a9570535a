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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fidnet/dataset.hpp"
#include "fidnet/nn.hpp"
#include "fidnet/quantum.hpp"
#include "fidnet/rng.hpp"

namespace fidnet::est {

inline constexpr int kCalibrationSchemaVersion = 1;
inline constexpr int kRegistrySchemaVersion = 1;

/// How a class-probability vector becomes a point estimate.
enum class PointEstimate { ArgmaxMidpoint, WeightedMean };
std::string_view to_string(PointEstimate p);
std::optional<PointEstimate> parse_point_estimate(std::string_view name);

double point_estimate(std::span<const double> probs, const data::BinningScheme& bins,
                      PointEstimate mode = PointEstimate::ArgmaxMidpoint);

// --------------------------------------------------------------- calibration

struct CalibrationBand {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t samples = 0;
  bool reliable = false;
  std::vector<double> epsilon;  // one per requested delta
};

/// Empirical error quantiles of |F~ - F| per true-fidelity band.
struct CalibrationTable {
  std::string model_id;
  std::string layout_hash;
  PointEstimate point = PointEstimate::ArgmaxMidpoint;
  std::size_t min_samples = 50;
  std::vector<double> deltas;
  std::vector<CalibrationBand> bands;
  std::vector<double> pooled_epsilon;

  std::size_t band_of(double f) const;
  std::size_t delta_index(double delta) const;
  /// Quantile for the band containing f; empty bands fall back to the
  /// pooled quantile.
  double epsilon(double f, double delta) const;
  /// Mean over bands that hold any samples.
  double mean_epsilon(double delta, bool reliable_only = false) const;

  nlohmann::json to_json() const;
  static CalibrationTable from_json(const nlohmann::json& j);
};

/// Conservative (1 - delta) order statistic: e_(ceil((1 - delta) m)) of the
/// sorted errors, 1-based.
double conservative_quantile(std::vector<double> errors, double delta);

struct CalibrationOptions {
  double band_width = 0.05;
  std::size_t min_samples = 50;
  PointEstimate point = PointEstimate::ArgmaxMidpoint;
};

CalibrationTable calibrate(const nn::MLPModel& model, std::span<const data::DatasetRecord> valset,
                           std::span<const double> deltas, std::string model_id = "",
                           const CalibrationOptions& options = {});

/// Empirical rate of |F~ - F| > epsilon(F~) per band (by true fidelity).
struct CoverageRow {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t samples = 0;
  std::size_t misses = 0;
  bool reliable = false;
  double rate() const { return samples ? static_cast<double>(misses) / static_cast<double>(samples) : 0.0; }
};
std::vector<CoverageRow> coverage(const nn::MLPModel& model, const CalibrationTable& table,
                                  std::span<const data::DatasetRecord> records, double delta);

void save_calibration(const CalibrationTable& table, const std::filesystem::path& path);
CalibrationTable load_calibration(const std::filesystem::path& path);

// ------------------------------------------------------------------ registry

struct RegistryEntry {
  std::size_t k = 0;
  data::FeatureSpec features;  // plan holds exactly k settings
  std::filesystem::path model_path;
  std::filesystem::path calibration_path;
  std::shared_ptr<const nn::MLPModel> model;
  std::shared_ptr<const CalibrationTable> calibration;
};

/// target id -> k -> model, calibration and setting plan. Plans of one
/// target are prefixes of each other.
class ModelRegistry {
 public:
  void add(const std::string& target_id, RegistryEntry entry);
  bool contains(std::string_view target_id, std::size_t k) const;
  const RegistryEntry& at(std::string_view target_id, std::size_t k) const;
  std::vector<std::size_t> ks(std::string_view target_id) const;
  std::vector<std::string> targets() const;

  /// Paths are stored relative to the registry file when possible.
  void save(const std::filesystem::path& path) const;
  /// Loads models and calibrations eagerly.
  static ModelRegistry load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::map<std::size_t, RegistryEntry>, std::less<>> entries_;
};

// ---------------------------------------------------------------- estimation

struct FeatureVector {
  std::string layout_hash;
  std::vector<double> values;
};

/// Simulated access to one prepared state. Each setting is measured at most
/// once per shot count; later rounds reuse the cached frequencies.
class StateMeasurer {
 public:
  StateMeasurer(AnyState state, std::uint64_t seed);

  FeatureVector features(const data::FeatureSpec& spec, std::size_t k);
  std::size_t settings_measured() const { return cache_.size(); }
  const AnyState& state() const { return state_; }

 private:
  const std::vector<double>& frequencies(const meas::MeasurementSetting& s, std::uint64_t shots);

  AnyState state_;
  std::uint64_t seed_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<double>> cache_;
};

struct Estimate {
  std::size_t k = 0;
  std::size_t bin = 0;
  double f_tilde = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
};

Estimate estimate(const ModelRegistry& registry, std::string_view target_id,
                  const FeatureVector& features, std::size_t k, double delta);

// ------------------------------------------------------------- certification

enum class Verdict { Exceeds, DoesNotExceed, Undetermined };
std::string_view to_string(Verdict v);

struct CertifyConfig {
  double threshold = 0.96;
  double delta = 0.05;
  double epsilon_target = 0.01;
  std::size_t k_min = 2;
  std::size_t k_max = 7;
};

struct Round {
  std::size_t k = 0;
  std::string added_setting;
  double f_tilde = 0.0;
  double epsilon = 0.0;
  /// Set when the interval straddles the threshold at target precision and
  /// the verdict defaults to DoesNotExceed.
  bool tie_rule = false;
  std::optional<Verdict> verdict;
};

struct Decision {
  Verdict verdict = Verdict::Undetermined;
  std::size_t k = 0;
  double f_tilde = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double threshold = 0.0;
  std::vector<Round> transcript;
};

/// The per-round rule; nullopt means measure another setting.
std::optional<Verdict> decide(double f_tilde, double epsilon, double threshold,
                              double epsilon_target, bool* tie_rule = nullptr);

Decision adaptive_certify(const ModelRegistry& registry, std::string_view target_id,
                          StateMeasurer& state, const CertifyConfig& config);

/// Every round's verdict agrees with its interval under the decision rule.
bool transcript_consistent(const Decision& decision, double epsilon_target);

/// One JSON object per round.
void write_transcript(const Decision& decision, std::ostream& out);

// ----------------------------------------------------------------- baselines

/// ceil(8 / (epsilon^2 delta)), robust to the representation error of the
/// inputs.
std::uint64_t dfe_sample_count(double epsilon, double delta);

struct DfeConfig {
  double epsilon = 0.01;
  double delta = 0.05;
  std::optional<std::uint64_t> cap;
  /// Repetitions per sampled Pauli; 0 evaluates each expectation exactly.
  std::uint64_t shots = 0;
};

struct DfeResult {
  double f_hat = 0.0;
  double f2_hat = 0.0;
  std::uint64_t samples_required = 0;
  std::uint64_t samples_used = 0;
  bool capped = false;
  std::uint64_t resamples = 0;
};

DfeResult dfe_baseline(const StateVector& target, const AnyState& state, const DfeConfig& config,
                       RngStream& rng);

std::uint64_t qst_settings_count(int n);

}  // namespace fidnet::est
