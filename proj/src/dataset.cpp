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

#include "fidnet/dataset.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fidnet/errors.hpp"
#include "fidnet/measurement.hpp"
#include "fidnet/parallel.hpp"

namespace fidnet::data {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

std::filesystem::path with_suffix(const std::filesystem::path& base, std::string_view suffix) {
  return base.string() + std::string(suffix);
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t end = line.find(sep, start);
    out.emplace_back(line.substr(start, end == std::string_view::npos ? end : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

double parse_real(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(ErrorCode::CorruptRecord, "not a number: '" + text + "'");
  }
  if (used != text.size()) fail(ErrorCode::CorruptRecord, "trailing characters in '" + text + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& text) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    fail(ErrorCode::CorruptRecord, "not an unsigned integer: '" + text + "'");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    fail(ErrorCode::CorruptRecord, "integer out of range: '" + text + "'");
  }
}

BinningScheme ladder(std::string id, std::size_t coarse, std::size_t fine) {
  constexpr double kSplit = 0.55;
  std::vector<double> edges;
  for (std::size_t i = 0; i <= coarse; ++i) {
    edges.push_back(kSplit * static_cast<double>(i) / static_cast<double>(coarse));
  }
  edges.back() = kSplit;
  for (std::size_t j = 1; j <= fine; ++j) {
    edges.push_back(kSplit + (1.0 - kSplit) * static_cast<double>(j) / static_cast<double>(fine));
  }
  edges.back() = 1.0;
  return make_binning(std::move(id), std::move(edges));
}

void check_record(const DatasetRecord& r, const DatasetManifest& m) {
  const std::size_t expected = m.features.feature_count();
  if (r.features.size() != expected) fail(ErrorCode::CorruptRecord, "wrong feature count");
  if (!(r.true_fidelity >= 0.0 && r.true_fidelity <= 1.0)) {
    fail(ErrorCode::CorruptRecord, "true fidelity outside [0, 1]");
  }
  if (r.label != m.binning.bin_of(r.true_fidelity)) {
    fail(ErrorCode::CorruptRecord, "label does not match the fidelity's bin");
  }
  const bool probs = m.features.mode == FeatureMode::OutcomeProbs;
  for (double v : r.features) {
    const bool ok = std::isfinite(v) && (probs ? (v >= 0.0 && v <= 1.0) : (v >= -1.0 && v <= 1.0));
    if (!ok) fail(ErrorCode::CorruptRecord, "feature value out of range");
  }
}

std::string records_csv(const Dataset& ds) {
  std::string out;
  const auto layout = ds.manifest.features.layout();
  for (const auto& id : layout) {
    out += id;
    out += ',';
  }
  out += "label,true_fidelity,seed\n";
  auto emit = [&](const DatasetRecord& r) {
    for (double v : r.features) {
      out += format_real(v);
      out += ',';
    }
    out += std::to_string(r.label);
    out += ',';
    out += format_real(r.true_fidelity);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  };
  for (const auto& r : ds.train) emit(r);
  for (const auto& r : ds.val) emit(r);
  return out;
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ------------------------------------------------------------------- binning

std::size_t BinningScheme::bin_of(double f) const {
  if (!(f >= -1e-12 && f <= 1.0 + 1e-12)) {
    fail(ErrorCode::InvalidArgument, "fidelity " + format_real(f) + " outside [0, 1]");
  }
  const auto it = std::upper_bound(edges.begin(), edges.end(), f);
  const auto pos = static_cast<std::size_t>(it - edges.begin());
  if (pos == 0) return 0;
  return std::min(pos - 1, count() - 1);
}

BinningScheme make_binning(BinPreset preset) {
  switch (preset) {
    case BinPreset::L66: return ladder("L66", 11, 55);
    case BinPreset::L122: return ladder("L122", 22, 100);
    case BinPreset::L234: return ladder("L234", 34, 200);
  }
  fail(ErrorCode::BadEdges, "unknown preset");
}

BinningScheme make_binning(std::string id, std::vector<double> edges) {
  if (edges.size() < 2) fail(ErrorCode::BadEdges, "need at least two edges");
  if (edges.front() != 0.0 || edges.back() != 1.0) {
    fail(ErrorCode::BadEdges, "edges must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) fail(ErrorCode::BadEdges, "edges must be strictly increasing");
  }
  return BinningScheme{std::move(id), std::move(edges)};
}

std::optional<BinPreset> parse_bin_preset(std::string_view id) {
  if (id == "L66") return BinPreset::L66;
  if (id == "L122") return BinPreset::L122;
  if (id == "L234") return BinPreset::L234;
  return std::nullopt;
}

std::string_view to_string(BinPreset preset) {
  switch (preset) {
    case BinPreset::L66: return "L66";
    case BinPreset::L122: return "L122";
    case BinPreset::L234: return "L234";
  }
  return "?";
}

// ------------------------------------------------------------------ features

std::string_view to_string(FeatureMode mode) {
  return mode == FeatureMode::OutcomeProbs ? "outcome_probs" : "pauli_expectations";
}

std::optional<FeatureMode> parse_feature_mode(std::string_view name) {
  if (name == "outcome_probs" || name == "probs") return FeatureMode::OutcomeProbs;
  if (name == "pauli_expectations" || name == "paulis") return FeatureMode::PauliExpectations;
  return std::nullopt;
}

int FeatureSpec::n() const {
  if (plan.settings.empty()) fail(ErrorCode::InvalidArgument, "feature spec has an empty plan");
  return plan.settings.front().n();
}

int FeatureSpec::effective_max_identities() const { return std::min(max_identities, n()); }

std::size_t FeatureSpec::features_per_setting() const {
  if (mode == FeatureMode::OutcomeProbs) return dim_of(n());
  return plan::feature_masks(n(), effective_max_identities()).size();
}

std::vector<std::string> FeatureSpec::layout() const {
  std::vector<std::string> out;
  const int nq = n();
  for (const auto& s : plan.settings) {
    const std::string word = s.letters();
    if (mode == FeatureMode::OutcomeProbs) {
      for (std::size_t j = 0; j < dim_of(nq); ++j) {
        std::string bits(static_cast<std::size_t>(nq), '0');
        for (int q = 0; q < nq; ++q) {
          if (j & (std::size_t{1} << (nq - 1 - q))) bits[static_cast<std::size_t>(q)] = '1';
        }
        out.push_back(word + ":" + bits);
      }
    } else {
      for (const auto& p : plan::filter_feature_paulis(s, effective_max_identities())) {
        out.push_back(word + ":" + p.letters());
      }
    }
  }
  return out;
}

std::string FeatureSpec::layout_hash() const {
  std::string joined(to_string(mode));
  for (const auto& id : layout()) {
    joined += '|';
    joined += id;
  }
  return fnv1a_hex(joined);
}

FeatureSpec FeatureSpec::prefix(std::size_t k) const {
  FeatureSpec out = *this;
  out.plan = plan.prefix(k);
  return out;
}

std::vector<double> features_from_frequencies(std::vector<double> freqs,
                                              const meas::MeasurementSetting& setting,
                                              const FeatureSpec& spec) {
  if (spec.mode == FeatureMode::OutcomeProbs) return freqs;
  const meas::SubPauliExpectations ex =
      meas::expectations_from_outcomes(meas::OutcomeDistribution{setting, std::move(freqs)});
  std::vector<double> out;
  for (std::uint64_t mask : plan::feature_masks(setting.n(), spec.effective_max_identities())) {
    out.push_back(std::clamp(ex.by_mask[mask], -1.0, 1.0));
  }
  return out;
}

std::vector<double> setting_features(const AnyState& state, const meas::MeasurementSetting& setting,
                                     const FeatureSpec& spec, RngStream& rng) {
  meas::OutcomeDistribution dist = meas::outcome_probabilities(state, setting);
  if (spec.shots > 0) {
    dist.p = meas::sample_counts_poisson(dist, spec.shots, rng).frequencies();
  }
  return features_from_frequencies(std::move(dist.p), setting, spec);
}

// ------------------------------------------------------------------ manifest

std::string DatasetManifest::target_hash() const {
  std::string text;
  for (const Complex& a : target_amplitudes) {
    text += format_real(a.real());
    text += ',';
    text += format_real(a.imag());
    text += ';';
  }
  return fnv1a_hex(text);
}

StateVector DatasetManifest::target() const {
  CVector amp(static_cast<Eigen::Index>(target_amplitudes.size()));
  for (std::size_t i = 0; i < target_amplitudes.size(); ++i) {
    amp[static_cast<Eigen::Index>(i)] = target_amplitudes[i];
  }
  return StateVector(n(), std::move(amp));
}

json DatasetManifest::to_json() const {
  json amps = json::array();
  for (const Complex& a : target_amplitudes) amps.push_back({a.real(), a.imag()});
  json settings = json::array();
  for (const auto& s : features.plan.settings) settings.push_back(s.letters());
  return json{
      {"schema_version", schema_version},
      {"n", n()},
      {"target", {{"id", target_id}, {"amplitudes", amps}, {"hash", target_hash()}}},
      {"features",
       {{"mode", to_string(features.mode)},
        {"settings", settings},
        {"strategy", plan::to_string(features.plan.strategy)},
        {"captured_weight", features.plan.captured_weight},
        {"max_identities", features.max_identities},
        {"shots", features.shots},
        {"layout", features.layout()},
        {"layout_hash", features.layout_hash()}}},
      {"binning", {{"id", binning.id}, {"edges", binning.edges}}},
      {"generator", {{"kind", gen::to_string(kind)}, {"m1_dist", gen::to_string(m1_dist)}}},
      {"per_label_train", per_label_train},
      {"per_label_val", per_label_val},
      {"root_seed", root_seed},
      {"records_hash", records_hash},
  };
}

DatasetManifest DatasetManifest::from_json(const json& j) {
  DatasetManifest m;
  try {
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kDatasetSchemaVersion) {
      fail(ErrorCode::SchemaMismatch, "unsupported dataset schema version");
    }
    const auto& t = j.at("target");
    m.target_id = t.at("id").get<std::string>();
    for (const auto& a : t.at("amplitudes")) m.target_amplitudes.emplace_back(a.at(0).get<double>(), a.at(1).get<double>());
    const auto& f = j.at("features");
    const auto mode = parse_feature_mode(f.at("mode").get<std::string>());
    const auto strategy = plan::parse_strategy(f.at("strategy").get<std::string>());
    if (!mode || !strategy) fail(ErrorCode::SchemaMismatch, "unknown feature mode or strategy");
    m.features.mode = *mode;
    m.features.plan.target_id = m.target_id;
    m.features.plan.strategy = *strategy;
    for (const auto& s : f.at("settings")) {
      m.features.plan.settings.push_back(meas::MeasurementSetting::parse(s.get<std::string>()));
    }
    m.features.plan.captured_weight = f.at("captured_weight").get<std::vector<double>>();
    m.features.max_identities = f.at("max_identities").get<int>();
    m.features.shots = f.at("shots").get<std::uint64_t>();
    const auto& b = j.at("binning");
    m.binning = make_binning(b.at("id").get<std::string>(), b.at("edges").get<std::vector<double>>());
    const auto& g = j.at("generator");
    const auto kind = gen::parse_state_kind(g.at("kind").get<std::string>());
    const auto dist = gen::parse_m1_dist(g.at("m1_dist").get<std::string>());
    if (!kind || !dist) fail(ErrorCode::SchemaMismatch, "unknown generator settings");
    m.kind = *kind;
    m.m1_dist = *dist;
    m.per_label_train = j.at("per_label_train").get<std::size_t>();
    m.per_label_val = j.at("per_label_val").get<std::size_t>();
    m.root_seed = j.at("root_seed").get<std::uint64_t>();
    m.records_hash = j.at("records_hash").get<std::string>();

    if (j.at("n").get<int>() != m.n()) fail(ErrorCode::SchemaMismatch, "qubit count disagrees with settings");
    if (t.at("hash").get<std::string>() != m.target_hash()) {
      fail(ErrorCode::SchemaMismatch, "target hash does not match amplitudes");
    }
    if (f.at("layout").get<std::vector<std::string>>() != m.features.layout() ||
        f.at("layout_hash").get<std::string>() != m.features.layout_hash()) {
      fail(ErrorCode::SchemaMismatch, "feature layout disagrees with settings");
    }
    if (const auto preset = parse_bin_preset(m.binning.id)) {
      if (make_binning(*preset).edges != m.binning.edges) {
        fail(ErrorCode::SchemaMismatch, "binning id " + m.binning.id + " does not match its edges");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("malformed manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SchemaMismatch) throw;
    fail(ErrorCode::SchemaMismatch, e.what());
  }
  return m;
}

// ------------------------------------------------------------------- records

Dataset Dataset::prefix(std::size_t k) const {
  Dataset out;
  out.manifest = manifest;
  out.manifest.features = manifest.features.prefix(k);
  out.manifest.records_hash.clear();
  const std::size_t width = out.manifest.features.feature_count();
  auto cut = [width](const std::vector<DatasetRecord>& in) {
    std::vector<DatasetRecord> result;
    result.reserve(in.size());
    for (const auto& r : in) {
      DatasetRecord c = r;
      c.features.resize(width);
      result.push_back(std::move(c));
    }
    return result;
  };
  out.train = cut(train);
  out.val = cut(val);
  return out;
}

DatasetRecord make_record(const BuildConfig& config, const Unitary& transport, std::size_t label,
                          std::uint64_t index) {
  RngStream rng(config.root_seed, index);
  const BinningScheme& bins = config.binning;
  double f = rng.uniform(bins.lower(label), bins.upper(label));
  if (bins.bin_of(f) != label) f = bins.lower(label);

  gen::GeneratorSpec spec;
  spec.n = config.target.state.n();
  spec.fidelity = f;
  spec.kind = config.kind;
  spec.m1_dist = config.m1_dist;
  const AnyState state = gen::transport_state(transport, gen::generate(spec, rng));

  DatasetRecord record;
  record.label = label;
  record.true_fidelity = f;
  record.seed = rng.derived_seed();
  record.features.reserve(config.features.feature_count());
  for (const auto& setting : config.features.plan.settings) {
    const auto block = setting_features(state, setting, config.features, rng);
    record.features.insert(record.features.end(), block.begin(), block.end());
  }
  return record;
}

Dataset build_dataset(const BuildConfig& config) {
  if (config.per_label_train == 0) fail(ErrorCode::InvalidArgument, "per-label train count must be >= 1");
  if (config.features.n() != config.target.state.n()) {
    fail(ErrorCode::DimensionMismatch, "plan and target sizes differ");
  }
  const Unitary transport = householder_target_unitary(config.target.state);
  const std::size_t labels = config.binning.count();
  const std::size_t per_label = config.per_label_train + config.per_label_val;

  std::vector<DatasetRecord> records(labels * per_label);
  parallel_for(records.size(), config.workers, [&](std::size_t i) {
    records[i] = make_record(config, transport, i / per_label, i);
  });

  Dataset ds;
  auto& m = ds.manifest;
  m.target_id = config.target.id;
  for (Eigen::Index i = 0; i < config.target.state.amplitudes().size(); ++i) {
    m.target_amplitudes.push_back(config.target.state.amplitudes()[i]);
  }
  m.features = config.features;
  m.binning = config.binning;
  m.kind = config.kind;
  m.m1_dist = config.m1_dist;
  m.per_label_train = config.per_label_train;
  m.per_label_val = config.per_label_val;
  m.root_seed = config.root_seed;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& dest = (i % per_label) < config.per_label_train ? ds.train : ds.val;
    dest.push_back(std::move(records[i]));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& base) {
  const std::string csv = records_csv(ds);
  DatasetManifest m = ds.manifest;
  m.records_hash = fnv1a_hex(csv);
  json j = m.to_json();
  j["manifest_hash"] = fnv1a_hex(j.dump());
  write_file(with_suffix(base, ".csv"), csv);
  write_file(with_suffix(base, ".manifest.json"), j.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& base) {
  const std::string manifest_text = read_file(with_suffix(base, ".manifest.json"));
  json j;
  try {
    j = json::parse(manifest_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, std::string("unreadable manifest: ") + e.what());
  }
  if (!j.is_object() || !j.contains("manifest_hash")) {
    fail(ErrorCode::SchemaMismatch, "manifest lacks its hash");
  }
  const std::string stored_hash = j["manifest_hash"].get<std::string>();
  j.erase("manifest_hash");
  if (fnv1a_hex(j.dump()) != stored_hash) {
    fail(ErrorCode::SchemaMismatch, "manifest content does not match its hash");
  }

  Dataset ds;
  ds.manifest = DatasetManifest::from_json(j);
  const std::string csv = read_file(with_suffix(base, ".csv"));
  if (fnv1a_hex(csv) != ds.manifest.records_hash) {
    fail(ErrorCode::CorruptRecord, "record file does not match the manifest hash");
  }

  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::CorruptRecord, "empty record file");
  std::vector<std::string> expected = ds.manifest.features.layout();
  expected.insert(expected.end(), {"label", "true_fidelity", "seed"});
  if (split(line, ',') != expected) fail(ErrorCode::SchemaMismatch, "CSV header does not match layout");

  const std::size_t width = ds.manifest.features.feature_count();
  const std::size_t labels = ds.manifest.binning.count();
  std::vector<DatasetRecord> records;
  while (std::getline(in, line)) {
    const auto cells = split(line, ',');
    if (cells.size() != width + 3) fail(ErrorCode::CorruptRecord, "wrong column count");
    DatasetRecord r;
    r.features.reserve(width);
    for (std::size_t c = 0; c < width; ++c) r.features.push_back(parse_real(cells[c]));
    r.label = static_cast<std::size_t>(parse_uint(cells[width]));
    r.true_fidelity = parse_real(cells[width + 1]);
    r.seed = parse_uint(cells[width + 2]);
    check_record(r, ds.manifest);
    records.push_back(std::move(r));
  }
  const std::size_t n_train = labels * ds.manifest.per_label_train;
  const std::size_t n_val = labels * ds.manifest.per_label_val;
  if (records.size() != n_train + n_val) fail(ErrorCode::CorruptRecord, "record count mismatch");
  ds.train.assign(std::make_move_iterator(records.begin()),
                  std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>(n_train)));
  ds.val.assign(std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>(n_train)),
                std::make_move_iterator(records.end()));
  return ds;
}

}  // namespace fidnet::data
