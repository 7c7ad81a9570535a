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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fidnet/dataset.hpp"
#include "fidnet/errors.hpp"
#include "oracles.hpp"

using namespace fidnet;
using namespace fidnet::data;

namespace {

bool throws_code(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "fidnet_test_dataset";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

BuildConfig small_config(std::size_t k, std::uint64_t shots, FeatureMode mode = FeatureMode::OutcomeProbs) {
  BuildConfig c;
  c.target = Target{"bell", named_state(NamedState::Bell, 2)};
  c.features.mode = mode;
  c.features.plan = plan::select_settings(c.target.state, "bell", k);
  c.features.shots = shots;
  c.binning = make_binning(BinPreset::L122);
  c.per_label_train = 4;
  c.per_label_val = 1;
  c.root_seed = 5;
  return c;
}

}  // namespace

TEST_CASE("ladder presets") {
  const BinningScheme b = make_binning(BinPreset::L122);
  CHECK(b.count() == 122);
  CHECK(b.edges.front() == 0.0);
  CHECK(b.edges.back() == 1.0);
  CHECK(b.bin_of(1.0) == 121);
  CHECK(b.bin_of(0.0) == 0);
  CHECK(b.bin_of(0.97) == 22 + static_cast<std::size_t>(std::floor((0.97 - 0.55) / 0.0045)));
  CHECK(b.bin_of(0.97) == 115);
  CHECK(b.width(0) == doctest::Approx(0.025));
  CHECK(b.width(121) == doctest::Approx(0.0045));
  CHECK(b.lower(22) == doctest::Approx(0.55));

  const std::map<BinPreset, std::pair<std::size_t, std::size_t>> ladders{
      {BinPreset::L66, {11, 55}}, {BinPreset::L122, {22, 100}}, {BinPreset::L234, {34, 200}}};
  for (const auto& [preset, counts] : ladders) {
    const BinningScheme s = make_binning(preset);
    CHECK(s.count() == counts.first + counts.second);
    CHECK(s.id == to_string(preset));
    CHECK(parse_bin_preset(s.id) == preset);
    for (std::size_t i = 0; i < s.count(); ++i) {
      const double w = i < counts.first ? 0.55 / static_cast<double>(counts.first)
                                        : 0.45 / static_cast<double>(counts.second);
      CHECK(std::abs(s.width(i) - w) < 1e-12);
    }
  }
}

TEST_CASE("bins partition the unit interval") {
  const BinningScheme b = make_binning(BinPreset::L122);
  for (std::size_t i = 0; i < b.count(); ++i) {
    CHECK(b.bin_of(b.lower(i)) == i);
    CHECK(b.bin_of(b.midpoint(i)) == i);
    if (i + 1 < b.count()) CHECK(b.bin_of(b.upper(i)) == i + 1);
  }
  RngStream rng(7, 0);
  for (int t = 0; t < 2000; ++t) {
    const double f = rng.uniform();
    const std::size_t i = b.bin_of(f);
    CHECK((b.lower(i) <= f && f < b.upper(i)));
  }
  const BinningScheme custom = make_binning("mine", {0.0, 0.3, 1.0});
  CHECK(custom.bin_of(0.3) == 1);
  CHECK(custom.bin_of(1.0) == 1);
}

TEST_CASE("bad edges") {
  CHECK(throws_code([] { make_binning("x", {0.0}); }, ErrorCode::BadEdges));
  CHECK(throws_code([] { make_binning("x", {0.1, 1.0}); }, ErrorCode::BadEdges));
  CHECK(throws_code([] { make_binning("x", {0.0, 0.9}); }, ErrorCode::BadEdges));
  CHECK(throws_code([] { make_binning("x", {0.0, 0.5, 0.5, 1.0}); }, ErrorCode::BadEdges));
  CHECK(throws_code([] { make_binning("x", {0.0, 0.6, 0.4, 1.0}); }, ErrorCode::BadEdges));
}

TEST_CASE("noiseless outcome features equal Born probabilities") {
  RngStream rng(8, 0);
  for (int n = 1; n <= 3; ++n) {
    const CMatrix rho = oracle::random_density(n, rng);
    const AnyState state = DensityMatrix(n, rho);
    FeatureSpec spec;
    spec.plan = plan::select_settings(StateVector(n, oracle::random_ket(n, rng)), "t", 2);
    spec.shots = 0;
    for (const auto& s : spec.plan.settings) {
      const auto probs = setting_features(state, s, spec, rng);
      REQUIRE(probs.size() == dim_of(n));
      for (std::size_t j = 0; j < probs.size(); ++j) {
        CHECK(std::abs(probs[j] - oracle::projector_probability(rho, s.letters(), j)) < 1e-10);
      }
    }
  }
}

TEST_CASE("noiseless Pauli features equal analytic expectations") {
  RngStream rng(9, 0);
  for (int n = 2; n <= 5; ++n) {
    const CMatrix rho = oracle::random_density(n, rng);
    const AnyState state = DensityMatrix(n, rho);
    FeatureSpec spec;
    spec.mode = FeatureMode::PauliExpectations;
    spec.plan = plan::select_settings(StateVector(n, oracle::random_ket(n, rng)), "t", 1);
    spec.shots = 0;
    const auto& s = spec.plan.settings[0];
    const auto vals = setting_features(state, s, spec, rng);
    const auto masks = plan::feature_masks(n, spec.effective_max_identities());
    REQUIRE(vals.size() == masks.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
      const double expect = oracle::trace_expectation(rho, oracle::sub_letters(s.letters(), masks[i]));
      CHECK(std::abs(vals[i] - expect) < 1e-10);
    }
  }
}

TEST_CASE("layouts and prefixes") {
  const BuildConfig c = small_config(3, 100);
  const auto layout = c.features.layout();
  CHECK(layout.size() == 12);
  CHECK(layout[0] == c.features.plan.settings[0].letters() + ":00");
  CHECK(layout[3] == c.features.plan.settings[0].letters() + ":11");
  CHECK(c.features.prefix(2).feature_count() == 8);
  CHECK(c.features.prefix(2).layout_hash() != c.features.layout_hash());
  CHECK(c.features.prefix(3).layout_hash() == c.features.layout_hash());
  const BuildConfig p = small_config(2, 100, FeatureMode::PauliExpectations);
  CHECK(p.features.features_per_setting() == 4);
  const std::string w = p.features.plan.settings[0].letters();
  const auto pl = p.features.layout();
  CHECK(std::find(pl.begin(), pl.end(), w + ":" + w) != pl.end());
}

TEST_CASE("build balances labels and respects bins") {
  const BuildConfig c = small_config(3, 1000);
  const Dataset ds = build_dataset(c);
  CHECK(ds.train.size() == 122 * 4);
  CHECK(ds.val.size() == 122);
  std::vector<std::size_t> train_counts(122, 0), val_counts(122, 0);
  std::set<std::uint64_t> seeds;
  for (const auto& r : ds.train) {
    ++train_counts[r.label];
    CHECK(r.label == c.binning.bin_of(r.true_fidelity));
    CHECK(r.features.size() == 12);
    seeds.insert(r.seed);
  }
  for (const auto& r : ds.val) {
    ++val_counts[r.label];
    CHECK(r.label == c.binning.bin_of(r.true_fidelity));
    seeds.insert(r.seed);
  }
  CHECK(seeds.size() == ds.train.size() + ds.val.size());
  for (std::size_t i = 0; i < 122; ++i) {
    CHECK(train_counts[i] == 4);
    CHECK(val_counts[i] == 1);
  }
  const Dataset again = build_dataset(c);
  REQUIRE(again.train.size() == ds.train.size());
  bool same = true;
  for (std::size_t i = 0; i < ds.train.size(); ++i) same = same && ds.train[i].features == again.train[i].features;
  CHECK(same);
  CHECK(again.manifest.records_hash == ds.manifest.records_hash);

  const Dataset pre = ds.prefix(2);
  CHECK(pre.train.front().features.size() == 8);
  CHECK(std::equal(pre.train.front().features.begin(), pre.train.front().features.end(),
                   ds.train.front().features.begin()));
  CHECK(pre.manifest.features.plan.size() == 2);
}

TEST_CASE("a dataset of one record per bin") {
  BuildConfig c = small_config(2, 0);
  c.per_label_train = 10;
  c.per_label_val = 0;
  const Dataset ds = build_dataset(c);
  CHECK(ds.train.size() + ds.val.size() == 1220);
}

TEST_CASE("save and load round trip") {
  const BuildConfig c = small_config(2, 500, FeatureMode::PauliExpectations);
  const Dataset ds = build_dataset(c);
  const auto base = scratch("rt");
  save_dataset(ds, base);
  const Dataset back = load_dataset(base);
  REQUIRE(back.train.size() == ds.train.size());
  REQUIRE(back.val.size() == ds.val.size());
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(back.train[i].features == ds.train[i].features);
    CHECK(back.train[i].true_fidelity == ds.train[i].true_fidelity);
    CHECK(back.train[i].label == ds.train[i].label);
    CHECK(back.train[i].seed == ds.train[i].seed);
  }
  CHECK(back.manifest.features.layout_hash() == ds.manifest.features.layout_hash());
  CHECK(back.manifest.binning.edges == ds.manifest.binning.edges);
  CHECK(back.manifest.target_hash() == ds.manifest.target_hash());

  save_dataset(ds, scratch("rt2"));
  CHECK(slurp(scratch("rt.csv")) == slurp(scratch("rt2.csv")));
}

TEST_CASE("damaged files are rejected") {
  const Dataset ds = build_dataset(small_config(2, 500));
  const auto base = scratch("dmg");
  save_dataset(ds, base);
  const std::string csv = slurp(scratch("dmg.csv"));
  const std::string manifest = slurp(scratch("dmg.manifest.json"));

  dump(scratch("dmg.csv"), csv.substr(0, csv.size() / 2));
  CHECK(throws_code([&] { load_dataset(base); }, ErrorCode::CorruptRecord));
  dump(scratch("dmg.csv"), csv);

  std::string edited = manifest;
  const auto at = edited.find("\"L122\"");
  REQUIRE(at != std::string::npos);
  edited.replace(at, 6, "\"L234\"");
  dump(scratch("dmg.manifest.json"), edited);
  CHECK(throws_code([&] { load_dataset(base); }, ErrorCode::SchemaMismatch));
  dump(scratch("dmg.manifest.json"), manifest);
  CHECK_NOTHROW(load_dataset(base));

  CHECK(throws_code([] { load_dataset(scratch("absent")); }, ErrorCode::IoError));
}

TEST_CASE("record regeneration is deterministic") {
  const BuildConfig c = small_config(3, 1000);
  const Unitary u = householder_target_unitary(c.target.state);
  const DatasetRecord a = make_record(c, u, 100, 3);
  const DatasetRecord b = make_record(c, u, 100, 3);
  CHECK(a.features == b.features);
  CHECK(a.true_fidelity == b.true_fidelity);
  CHECK(a.label == 100);
  const DatasetRecord other = make_record(c, u, 100, 4);
  CHECK(other.features != a.features);
}

TEST_CASE("worker count does not change the records") {
  BuildConfig c = small_config(2, 1000);
  c.workers = 1;
  const Dataset one = build_dataset(c);
  c.workers = 3;
  const Dataset three = build_dataset(c);
  CHECK(one.manifest.records_hash == three.manifest.records_hash);
}
