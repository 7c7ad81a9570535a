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
#include <string>

#include "fidnet/pipeline.hpp"

using namespace fidnet;
using namespace fidnet::pipe;

namespace {

/// Enumerates every sign assignment of the average ranks.
double wilcoxon_oracle(const std::vector<double>& diffs, double* w_plus) {
  std::vector<double> d;
  for (double x : diffs) {
    if (x != 0.0) d.push_back(x);
  }
  std::vector<double> rank(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double below = 0.0, equal = 0.0;
    for (double y : d) {
      below += std::abs(y) < std::abs(d[i]);
      equal += std::abs(y) == std::abs(d[i]);
    }
    rank[i] = below + (equal + 1.0) / 2.0;
  }
  double observed = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) observed += d[i] > 0 ? rank[i] : 0.0;
  *w_plus = observed;
  std::size_t hits = 0;
  const std::size_t patterns = std::size_t{1} << d.size();
  for (std::size_t mask = 0; mask < patterns; ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) w += (mask >> i) & 1U ? rank[i] : 0.0;
    hits += w >= observed - 1e-9;
  }
  return static_cast<double>(hits) / static_cast<double>(patterns);
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("signed-rank test matches enumeration") {
  RngStream rng(41, 0);
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back(std::round(rng.uniform(-5.0, 6.0)));
    double w = 0.0;
    const double p = wilcoxon_oracle(d, &w);
    const WilcoxonResult r = wilcoxon_signed_rank(d);
    CHECK(r.w_plus == doctest::Approx(w));
    CHECK(r.p_increase == doctest::Approx(p).epsilon(1e-12));
    CHECK(r.w_plus + r.w_minus == doctest::Approx(static_cast<double>(r.n * (r.n + 1)) / 2.0));
  }
  const std::vector<double> all_up{0.1, 0.2, 0.3, 0.4, 0.5};
  CHECK(wilcoxon_signed_rank(all_up).p_increase == doctest::Approx(1.0 / 32.0));
  CHECK(wilcoxon_signed_rank(std::vector<double>{0.0, 0.0}).n == 0);
}

TEST_CASE("step statistics") {
  const std::vector<std::vector<double>> s{{1.0, 0.8, 0.7}, {1.2, 0.9, 0.9}, {0.9, 0.8, 0.6}};
  const auto st = step_stats(s);
  REQUIRE(st.size() == 2);
  CHECK(st[0].mean == doctest::Approx((-0.2 - 0.3 - 0.1) / 3.0));
  const double m = -0.2;
  const double var = ((-0.2 - m) * (-0.2 - m) + (-0.3 - m) * (-0.3 - m) + (-0.1 - m) * (-0.1 - m)) / 2.0;
  CHECK(st[0].se == doctest::Approx(std::sqrt(var / 3.0)));
  CHECK(step_stats({{1.0, 2.0}})[0].se == 0.0);
}

TEST_CASE("relabeling keeps features and moves labels") {
  DeskConfig cfg = DeskConfig::bell();
  cfg.per_label_train = 2;
  cfg.per_label_val = 1;
  cfg.k_max = 3;
  const data::Dataset ds = build(cfg, 3, 1000);
  const auto coarse = data::make_binning(data::BinPreset::L66);
  const data::Dataset re = relabel(ds, coarse);
  REQUIRE(re.train.size() == ds.train.size());
  CHECK(re.manifest.binning.id == "L66");
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(re.train[i].features == ds.train[i].features);
    CHECK(re.train[i].label == coarse.bin_of(ds.train[i].true_fidelity));
  }
  CHECK(ds.manifest.features.plan.size() == 3);
}

TEST_CASE("a miniature accuracy sweep runs end to end") {
  DeskConfig cfg = DeskConfig::bell();
  cfg.per_label_train = 3;
  cfg.per_label_val = 1;
  cfg.k_min = 2;
  cfg.k_max = 3;
  cfg.seeds = {1};
  cfg.train.epochs = 2;
  cfg.train.hidden = {16};
  const AccVsK r = run_acc_vs_k(cfg);
  REQUIRE(r.runs.size() == 2);
  CHECK(r.run(1, 3).k == 3);
  CHECK(r.mean_accuracy(2) == r.run(1, 2).accuracy);
  CHECK(r.run(1, 2).calibration.layout_hash == r.run(1, 2).result.model.layout_hash);
  const auto dir = std::filesystem::temp_directory_path() / "fidnet_test_pipeline";
  std::filesystem::create_directories(dir);
  write_acc_vs_k(r, dir / "acc.csv");
  write_eps_vs_f(r, dir / "eps.csv");
  CHECK(count_lines(dir / "acc.csv") == 3);
  CHECK(count_lines(dir / "eps.csv") == 1 + 2 * 20 * cfg.deltas.size());
  write_purity(2, 0.9, 100, 10, 1, dir / "purity.csv");
  CHECK(count_lines(dir / "purity.csv") > 1);
}
