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

#include "fidnet/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <variant>

#include "fidnet/errors.hpp"
#include "fidnet/pauli_select.hpp"

namespace fidnet::est {

namespace {

using nlohmann::json;

std::size_t argmax(std::span<const double> p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, "unreadable " + path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace

std::string_view to_string(PointEstimate p) {
  return p == PointEstimate::ArgmaxMidpoint ? "argmax" : "weighted-mean";
}

std::optional<PointEstimate> parse_point_estimate(std::string_view name) {
  if (name == "argmax") return PointEstimate::ArgmaxMidpoint;
  if (name == "weighted-mean") return PointEstimate::WeightedMean;
  return std::nullopt;
}

double point_estimate(std::span<const double> probs, const data::BinningScheme& bins,
                      PointEstimate mode) {
  if (probs.size() != bins.count()) fail(ErrorCode::ShapeMismatch, "probabilities do not match the binning");
  if (mode == PointEstimate::ArgmaxMidpoint) return bins.midpoint(argmax(probs));
  double f = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) f += probs[i] * bins.midpoint(i);
  return f;
}

// --------------------------------------------------------------- calibration

double conservative_quantile(std::vector<double> errors, double delta) {
  if (errors.empty()) fail(ErrorCode::InsufficientSamples, "no samples for a quantile");
  if (!(delta > 0.0 && delta < 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  std::sort(errors.begin(), errors.end());
  const double m = static_cast<double>(errors.size());
  auto rank = static_cast<std::size_t>(std::ceil((1.0 - delta) * m - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, errors.size());
  return errors[rank - 1];
}

std::size_t CalibrationTable::band_of(double f) const {
  if (bands.empty()) fail(ErrorCode::InvalidArgument, "calibration has no bands");
  const auto count = static_cast<double>(bands.size());
  const double pos = std::floor(std::clamp(f, 0.0, 1.0) * count + 1e-9);
  return std::min(static_cast<std::size_t>(std::max(pos, 0.0)), bands.size() - 1);
}

std::size_t CalibrationTable::delta_index(double delta) const {
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (std::abs(deltas[i] - delta) < 1e-12) return i;
  }
  fail(ErrorCode::InvalidArgument, "delta " + data::format_real(delta) + " was not calibrated");
}

double CalibrationTable::epsilon(double f, double delta) const {
  const std::size_t d = delta_index(delta);
  const CalibrationBand& band = bands[band_of(f)];
  return band.samples ? band.epsilon[d] : pooled_epsilon[d];
}

double CalibrationTable::mean_epsilon(double delta, bool reliable_only) const {
  const std::size_t d = delta_index(delta);
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& band : bands) {
    if (band.samples == 0 || (reliable_only && !band.reliable)) continue;
    sum += band.epsilon[d];
    ++used;
  }
  return used ? sum / static_cast<double>(used) : 0.0;
}

json CalibrationTable::to_json() const {
  json bands_json = json::array();
  for (const auto& b : bands) {
    bands_json.push_back({{"lower", b.lower},
                          {"upper", b.upper},
                          {"samples", b.samples},
                          {"reliable", b.reliable},
                          {"epsilon", b.epsilon}});
  }
  return {{"schema_version", kCalibrationSchemaVersion},
          {"model_id", model_id},
          {"layout_hash", layout_hash},
          {"point_estimate", std::string(to_string(point))},
          {"min_samples", min_samples},
          {"deltas", deltas},
          {"pooled_epsilon", pooled_epsilon},
          {"bands", bands_json}};
}

CalibrationTable CalibrationTable::from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kCalibrationSchemaVersion) {
      fail(ErrorCode::SchemaMismatch, "unsupported calibration schema version");
    }
    CalibrationTable t;
    t.model_id = j.at("model_id").get<std::string>();
    t.layout_hash = j.at("layout_hash").get<std::string>();
    const auto point = parse_point_estimate(j.at("point_estimate").get<std::string>());
    if (!point) fail(ErrorCode::SchemaMismatch, "unknown point estimate");
    t.point = *point;
    t.min_samples = j.at("min_samples").get<std::size_t>();
    t.deltas = j.at("deltas").get<std::vector<double>>();
    t.pooled_epsilon = j.at("pooled_epsilon").get<std::vector<double>>();
    for (const auto& b : j.at("bands")) {
      CalibrationBand band;
      band.lower = b.at("lower").get<double>();
      band.upper = b.at("upper").get<double>();
      band.samples = b.at("samples").get<std::size_t>();
      band.reliable = b.at("reliable").get<bool>();
      band.epsilon = b.at("epsilon").get<std::vector<double>>();
      if (band.epsilon.size() != t.deltas.size()) fail(ErrorCode::SchemaMismatch, "band quantile count mismatch");
      t.bands.push_back(std::move(band));
    }
    if (t.bands.empty() || t.pooled_epsilon.size() != t.deltas.size()) {
      fail(ErrorCode::SchemaMismatch, "incomplete calibration table");
    }
    return t;
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("malformed calibration: ") + e.what());
  }
}

CalibrationTable calibrate(const nn::MLPModel& model, std::span<const data::DatasetRecord> valset,
                           std::span<const double> deltas, std::string model_id,
                           const CalibrationOptions& options) {
  if (valset.empty()) fail(ErrorCode::EmptyDataset, "no calibration records");
  if (deltas.empty()) fail(ErrorCode::InvalidArgument, "no confidence levels requested");
  if (!(options.band_width > 0.0 && options.band_width <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "band width must lie in (0, 1]");
  }
  CalibrationTable t;
  t.model_id = std::move(model_id);
  t.layout_hash = model.layout_hash;
  t.point = options.point;
  t.min_samples = options.min_samples;
  t.deltas.assign(deltas.begin(), deltas.end());
  std::sort(t.deltas.begin(), t.deltas.end());
  for (double d : t.deltas) {
    if (!(d > 0.0 && d < 1.0)) fail(ErrorCode::InvalidArgument, "delta must lie in (0, 1)");
  }

  const auto band_count = static_cast<std::size_t>(std::llround(1.0 / options.band_width));
  for (std::size_t b = 0; b < band_count; ++b) {
    t.bands.push_back({static_cast<double>(b) / static_cast<double>(band_count),
                       static_cast<double>(b + 1) / static_cast<double>(band_count), 0, false, {}});
  }

  const Eigen::MatrixXd probs = nn::forward(model, nn::feature_matrix(valset));
  std::vector<std::vector<double>> errors(band_count);
  std::vector<double> pooled;
  for (std::size_t i = 0; i < valset.size(); ++i) {
    const auto col = probs.col(static_cast<Eigen::Index>(i));
    const double f_tilde = point_estimate({col.data(), static_cast<std::size_t>(col.size())},
                                          model.binning, options.point);
    const double err = std::abs(f_tilde - valset[i].true_fidelity);
    errors[t.band_of(valset[i].true_fidelity)].push_back(err);
    pooled.push_back(err);
  }
  for (std::size_t b = 0; b < band_count; ++b) {
    auto& band = t.bands[b];
    band.samples = errors[b].size();
    band.reliable = band.samples >= options.min_samples;
    for (double d : t.deltas) {
      band.epsilon.push_back(band.samples ? conservative_quantile(errors[b], d) : 0.0);
    }
  }
  for (double d : t.deltas) t.pooled_epsilon.push_back(conservative_quantile(pooled, d));
  return t;
}

std::vector<CoverageRow> coverage(const nn::MLPModel& model, const CalibrationTable& table,
                                  std::span<const data::DatasetRecord> records, double delta) {
  const std::size_t d = table.delta_index(delta);
  std::vector<CoverageRow> rows;
  for (const auto& band : table.bands) rows.push_back({band.lower, band.upper, 0, 0, band.reliable});
  if (records.empty()) return rows;
  const Eigen::MatrixXd probs = nn::forward(model, nn::feature_matrix(records));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto col = probs.col(static_cast<Eigen::Index>(i));
    const double f_tilde = point_estimate({col.data(), static_cast<std::size_t>(col.size())},
                                          model.binning, table.point);
    const std::size_t b = table.band_of(records[i].true_fidelity);
    const double eps = table.bands[b].samples ? table.bands[b].epsilon[d] : table.pooled_epsilon[d];
    ++rows[b].samples;
    if (std::abs(f_tilde - records[i].true_fidelity) > eps) ++rows[b].misses;
  }
  return rows;
}

void save_calibration(const CalibrationTable& table, const std::filesystem::path& path) {
  write_json(table.to_json(), path);
}

CalibrationTable load_calibration(const std::filesystem::path& path) {
  return CalibrationTable::from_json(read_json(path));
}

// ------------------------------------------------------------------ registry

void ModelRegistry::add(const std::string& target_id, RegistryEntry entry) {
  if (entry.k == 0 || entry.features.plan.size() != entry.k) {
    fail(ErrorCode::InvalidArgument, "registry entry plan must hold exactly k settings");
  }
  if (!entry.model || !entry.calibration) fail(ErrorCode::MissingModel, "registry entry lacks a model");
  const std::string layout = entry.features.layout_hash();
  if (entry.model->layout_hash != layout || entry.calibration->layout_hash != layout) {
    fail(ErrorCode::LayoutMismatch, "model or calibration does not match the entry's feature layout");
  }
  auto& by_k = entries_[target_id];
  for (const auto& [k, other] : by_k) {
    if (k == entry.k) continue;
    const auto& shorter = k < entry.k ? other.features.plan.settings : entry.features.plan.settings;
    const auto& longer = k < entry.k ? entry.features.plan.settings : other.features.plan.settings;
    if (!std::equal(shorter.begin(), shorter.end(), longer.begin())) {
      fail(ErrorCode::InvalidArgument, "plans for " + target_id + " are not prefix-consistent");
    }
  }
  by_k.insert_or_assign(entry.k, std::move(entry));
}

bool ModelRegistry::contains(std::string_view target_id, std::size_t k) const {
  const auto it = entries_.find(target_id);
  return it != entries_.end() && it->second.contains(k);
}

const RegistryEntry& ModelRegistry::at(std::string_view target_id, std::size_t k) const {
  const auto it = entries_.find(target_id);
  if (it == entries_.end() || !it->second.contains(k)) {
    fail(ErrorCode::MissingModel, "no model for target '" + std::string(target_id) + "' at k=" +
                                      std::to_string(k));
  }
  return it->second.at(k);
}

std::vector<std::size_t> ModelRegistry::ks(std::string_view target_id) const {
  std::vector<std::size_t> out;
  const auto it = entries_.find(target_id);
  if (it != entries_.end()) {
    for (const auto& kv : it->second) out.push_back(kv.first);
  }
  return out;
}

std::vector<std::string> ModelRegistry::targets() const {
  std::vector<std::string> out;
  for (const auto& kv : entries_) out.push_back(kv.first);
  return out;
}

void ModelRegistry::save(const std::filesystem::path& path) const {
  const auto base = std::filesystem::absolute(path).parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    const auto r = std::filesystem::absolute(p).lexically_relative(base);
    return (r.empty() ? p : r).generic_string();
  };
  json targets = json::object();
  for (const auto& [id, by_k] : entries_) {
    json list = json::array();
    for (const auto& [k, e] : by_k) {
      list.push_back({{"k", k},
                      {"model", rel(e.model_path)},
                      {"calibration", rel(e.calibration_path)},
                      {"feature_mode", std::string(data::to_string(e.features.mode))},
                      {"max_identities", e.features.max_identities},
                      {"shots", e.features.shots},
                      {"strategy", std::string(plan::to_string(e.features.plan.strategy))},
                      {"settings", e.features.plan.describe()}});
    }
    targets[id] = list;
  }
  write_json({{"schema_version", kRegistrySchemaVersion}, {"targets", targets}}, path);
}

ModelRegistry ModelRegistry::load(const std::filesystem::path& path) {
  const json j = read_json(path);
  const auto base = std::filesystem::absolute(path).parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };
  ModelRegistry reg;
  try {
    if (j.at("schema_version").get<int>() != kRegistrySchemaVersion) {
      fail(ErrorCode::SchemaMismatch, "unsupported registry schema version");
    }
    for (const auto& [id, list] : j.at("targets").items()) {
      for (const auto& item : list) {
        RegistryEntry e;
        e.k = item.at("k").get<std::size_t>();
        const auto mode = data::parse_feature_mode(item.at("feature_mode").get<std::string>());
        const auto strategy = plan::parse_strategy(item.at("strategy").get<std::string>());
        if (!mode || !strategy) fail(ErrorCode::SchemaMismatch, "unknown feature mode or strategy");
        e.features.mode = *mode;
        e.features.max_identities = item.at("max_identities").get<int>();
        e.features.shots = item.at("shots").get<std::uint64_t>();
        e.features.plan.target_id = id;
        e.features.plan.strategy = *strategy;
        e.features.plan.settings = plan::parse_setting_list(item.at("settings").get<std::string>());
        e.model_path = resolve(item.at("model").get<std::string>());
        e.calibration_path = resolve(item.at("calibration").get<std::string>());
        e.model = std::make_shared<const nn::MLPModel>(nn::load_model(e.model_path));
        e.calibration =
            std::make_shared<const CalibrationTable>(load_calibration(e.calibration_path));
        reg.add(id, std::move(e));
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("malformed registry: ") + e.what());
  }
  return reg;
}

// ---------------------------------------------------------------- estimation

StateMeasurer::StateMeasurer(AnyState state, std::uint64_t seed)
    : state_(std::move(state)), seed_(seed) {}

const std::vector<double>& StateMeasurer::frequencies(const meas::MeasurementSetting& s,
                                                      std::uint64_t shots) {
  const auto key = std::make_pair(s.index(), shots);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    meas::OutcomeDistribution dist = meas::outcome_probabilities(state_, s);
    if (shots > 0) {
      RngStream rng = RngStream(seed_, s.index()).split(shots);
      dist.p = meas::sample_counts_poisson(dist, shots, rng).frequencies();
    }
    it = cache_.emplace(key, std::move(dist.p)).first;
  }
  return it->second;
}

FeatureVector StateMeasurer::features(const data::FeatureSpec& spec, std::size_t k) {
  const data::FeatureSpec prefix = spec.prefix(k);
  if (prefix.n() != qubits_of(state_)) fail(ErrorCode::DimensionMismatch, "plan and state sizes differ");
  FeatureVector fv;
  fv.layout_hash = prefix.layout_hash();
  for (const auto& s : prefix.plan.settings) {
    const auto block = data::features_from_frequencies(frequencies(s, prefix.shots), s, prefix);
    fv.values.insert(fv.values.end(), block.begin(), block.end());
  }
  return fv;
}

Estimate estimate(const ModelRegistry& registry, std::string_view target_id,
                  const FeatureVector& features, std::size_t k, double delta) {
  const RegistryEntry& e = registry.at(target_id, k);
  if (features.layout_hash != e.model->layout_hash || features.values.size() != e.model->inputs()) {
    fail(ErrorCode::LayoutMismatch, "measured features do not match the model layout for k=" +
                                        std::to_string(k));
  }
  const std::vector<double> probs = nn::forward(*e.model, features.values);
  Estimate out;
  out.k = k;
  out.delta = delta;
  out.bin = argmax(probs);
  out.f_tilde = point_estimate(probs, e.model->binning, e.calibration->point);
  out.epsilon = e.calibration->epsilon(out.f_tilde, delta);
  return out;
}

// ------------------------------------------------------------- certification

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Exceeds: return "Exceeds";
    case Verdict::DoesNotExceed: return "DoesNotExceed";
    case Verdict::Undetermined: return "Undetermined";
  }
  return "?";
}

std::optional<Verdict> decide(double f_tilde, double epsilon, double threshold,
                              double epsilon_target, bool* tie_rule) {
  if (tie_rule) *tie_rule = false;
  if (f_tilde - epsilon > threshold) return Verdict::Exceeds;
  if (f_tilde + epsilon < threshold) return Verdict::DoesNotExceed;
  if (epsilon <= epsilon_target + 1e-12) {
    if (tie_rule) *tie_rule = true;
    return Verdict::DoesNotExceed;
  }
  return std::nullopt;
}

Decision adaptive_certify(const ModelRegistry& registry, std::string_view target_id,
                          StateMeasurer& state, const CertifyConfig& config) {
  if (config.k_min == 0 || config.k_min > config.k_max) {
    fail(ErrorCode::InvalidArgument, "need 1 <= k_min <= k_max");
  }
  Decision d;
  d.delta = config.delta;
  d.threshold = config.threshold;
  for (std::size_t k = config.k_min; k <= config.k_max; ++k) {
    const RegistryEntry& entry = registry.at(target_id, k);
    const Estimate est = estimate(registry, target_id, state.features(entry.features, k), k, config.delta);
    Round r;
    r.k = k;
    r.added_setting = entry.features.plan.settings.back().letters();
    r.f_tilde = est.f_tilde;
    r.epsilon = est.epsilon;
    r.verdict = decide(est.f_tilde, est.epsilon, config.threshold, config.epsilon_target, &r.tie_rule);
    d.transcript.push_back(r);
    d.k = k;
    d.f_tilde = est.f_tilde;
    d.epsilon = est.epsilon;
    if (r.verdict) {
      d.verdict = *r.verdict;
      return d;
    }
  }
  d.verdict = Verdict::Undetermined;
  return d;
}

bool transcript_consistent(const Decision& decision, double epsilon_target) {
  if (decision.transcript.empty()) return false;
  for (std::size_t i = 0; i < decision.transcript.size(); ++i) {
    const Round& r = decision.transcript[i];
    bool tie = false;
    const auto expected = decide(r.f_tilde, r.epsilon, decision.threshold, epsilon_target, &tie);
    if (expected != r.verdict || tie != r.tie_rule) return false;
    if (r.verdict == Verdict::Exceeds && r.f_tilde - r.epsilon <= decision.threshold) return false;
    // Only the last round may carry a verdict.
    if (r.verdict && i + 1 != decision.transcript.size()) return false;
  }
  const Round& last = decision.transcript.back();
  return decision.verdict == last.verdict.value_or(Verdict::Undetermined) && decision.k == last.k;
}

void write_transcript(const Decision& decision, std::ostream& out) {
  for (const Round& r : decision.transcript) {
    json line{{"k", r.k},
              {"added_setting", r.added_setting},
              {"f_tilde", r.f_tilde},
              {"epsilon", r.epsilon},
              {"lower", r.f_tilde - r.epsilon},
              {"upper", r.f_tilde + r.epsilon},
              {"threshold", decision.threshold},
              {"delta", decision.delta},
              {"tie_rule", r.tie_rule},
              {"verdict", r.verdict ? json(std::string(to_string(*r.verdict))) : json(nullptr)}};
    out << line.dump() << '\n';
  }
}

// ----------------------------------------------------------------- baselines

std::uint64_t dfe_sample_count(double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    fail(ErrorCode::InvalidArgument, "epsilon and delta must lie in (0, 1)");
  }
  const double x = 8.0 / (epsilon * epsilon * delta);
  const double r = std::round(x);
  return static_cast<std::uint64_t>(std::abs(x - r) <= 1e-9 * x ? r : std::ceil(x));
}

DfeResult dfe_baseline(const StateVector& target, const AnyState& state, const DfeConfig& config,
                       RngStream& rng) {
  if (qubits_of(state) != target.n()) fail(ErrorCode::DimensionMismatch, "target and state sizes differ");
  DfeResult res;
  res.samples_required = dfe_sample_count(config.epsilon, config.delta);
  res.samples_used = res.samples_required;
  if (config.cap && *config.cap < res.samples_used) {
    res.samples_used = *config.cap;
    res.capped = true;
  }
  if (res.samples_used == 0) fail(ErrorCode::InvalidArgument, "sample cap must be >= 1");

  const std::vector<double> a = pauli_vector(target);
  const std::vector<double> beta =
      std::visit([](const auto& s) { return pauli_vector(s); }, state);
  const double dim = static_cast<double>(target.dim());
  std::vector<double> prob(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) prob[j] = a[j] * a[j] / dim;
  std::discrete_distribution<std::size_t> pick(prob.begin(), prob.end());

  constexpr double kMinWeight = 1e-14;
  constexpr std::uint64_t kMaxResamples = 1000;
  double sum = 0.0;
  for (std::uint64_t s = 0; s < res.samples_used; ++s) {
    std::size_t j = pick(rng);
    std::uint64_t tries = 0;
    while (a[j] * a[j] < kMinWeight) {
      ++res.resamples;
      if (++tries > kMaxResamples) fail(ErrorCode::DegenerateWeight, "sampled Pauli weights underflow");
      j = pick(rng);
    }
    double b = beta[j];
    if (config.shots > 0) {
      std::binomial_distribution<std::uint64_t> plus(config.shots, std::clamp(0.5 * (1.0 + b), 0.0, 1.0));
      b = 2.0 * static_cast<double>(plus(rng)) / static_cast<double>(config.shots) - 1.0;
    }
    sum += b / a[j];
  }
  res.f2_hat = sum / static_cast<double>(res.samples_used);
  res.f_hat = std::sqrt(std::max(0.0, res.f2_hat));
  return res;
}

std::uint64_t qst_settings_count(int n) {
  if (n < 1 || n > 40) fail(ErrorCode::InvalidArgument, "qubit count out of range");
  std::uint64_t c = 1;
  for (int i = 0; i < n; ++i) c *= 3;
  return c;
}

}  // namespace fidnet::est
