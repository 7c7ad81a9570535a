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

#include "fidnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fidnet/errors.hpp"

namespace fidnet::pipe {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, std::string_view header) : out_(path, std::ios::trunc) {
    if (!out_) fail(ErrorCode::IoError, "cannot write " + path.string());
    out_ << header << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... cells) {
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << cell(cells)), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return data::format_real(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(const char* s) { return s; }
  template <typename T>
    requires std::is_integral_v<T>
  static std::string cell(T v) {
    return std::to_string(v);
  }

  std::ofstream out_;
};

}  // namespace

DeskConfig DeskConfig::bell() {
  DeskConfig c;
  c.target = {"bell", named_state(NamedState::Bell, 2)};
  c.binning = data::make_binning(data::BinPreset::L122);
  return c;
}

data::BuildConfig build_config(const DeskConfig& config, std::uint64_t seed, std::uint64_t shots) {
  data::BuildConfig b;
  b.target = config.target;
  b.features.mode = config.mode;
  b.features.max_identities = config.max_identities;
  b.features.shots = shots;
  b.features.plan = plan::select_settings(config.target.state, config.target.id, config.k_max,
                                          config.strategy);
  b.binning = config.binning;
  b.kind = config.kind;
  b.m1_dist = config.m1_dist;
  b.per_label_train = config.per_label_train;
  b.per_label_val = config.per_label_val;
  b.root_seed = seed;
  b.workers = config.workers;
  return b;
}

data::Dataset build(const DeskConfig& config, std::uint64_t seed, std::uint64_t shots) {
  return data::build_dataset(build_config(config, seed, shots));
}

data::Dataset relabel(const data::Dataset& ds, const data::BinningScheme& bins) {
  data::Dataset out = ds;
  out.manifest.binning = bins;
  out.manifest.records_hash.clear();
  for (auto* part : {&out.train, &out.val}) {
    for (auto& r : *part) r.label = bins.bin_of(r.true_fidelity);
  }
  return out;
}

ModelRun train_and_calibrate(const data::Dataset& ds, const DeskConfig& config, std::size_t k,
                             std::uint64_t seed) {
  const auto start = Clock::now();
  const data::Dataset slice = ds.prefix(k);
  nn::TrainConfig tc = config.train;
  tc.seed = seed;
  ModelRun run;
  run.k = k;
  run.seed = seed;
  run.result = nn::train(slice, tc);
  run.accuracy = nn::accuracy_pm(run.result.model, slice.val, tc.accuracy_tol);
  run.calibration = est::calibrate(run.result.model, slice.val, config.deltas,
                                   ds.manifest.target_id + "-k" + std::to_string(k));
  run.mean_epsilon = run.calibration.mean_epsilon(0.05);
  run.seconds = seconds_since(start);
  return run;
}

// ----------------------------------------------------------------- statistics

WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences) {
  std::vector<double> d;
  for (double x : differences) {
    if (x != 0.0) d.push_back(x);
  }
  WilcoxonResult r;
  r.n = d.size();
  if (d.empty()) return r;
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });
  // Doubled average ranks keep ties integral.
  std::vector<std::size_t> rank2(d.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    for (std::size_t t = i; t <= j; ++t) rank2[order[t]] = i + j + 2;
    i = j + 1;
  }
  std::size_t plus2 = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] > 0) plus2 += rank2[i];
  }
  const std::size_t total2 = std::accumulate(rank2.begin(), rank2.end(), std::size_t{0});
  r.w_plus = static_cast<double>(plus2) / 2.0;
  r.w_minus = static_cast<double>(total2 - plus2) / 2.0;
  // Null distribution of the doubled signed-rank sum by dynamic programming.
  std::vector<double> ways(total2 + 1, 0.0);
  ways[0] = 1.0;
  for (std::size_t rk : rank2) {
    for (std::size_t s = total2; s + 1 > rk; --s) ways[s] += ways[s - rk];
  }
  const double all = std::pow(2.0, static_cast<double>(d.size()));
  double tail = 0.0;
  for (std::size_t s = plus2; s <= total2; ++s) tail += ways[s];
  r.p_increase = tail / all;
  return r;
}

std::vector<StepStat> step_stats(const std::vector<std::vector<double>>& series) {
  std::vector<StepStat> out;
  if (series.empty()) return out;
  const std::size_t len = series.front().size();
  for (std::size_t i = 0; i + 1 < len; ++i) {
    std::vector<double> diff;
    for (const auto& s : series) diff.push_back(s.at(i + 1) - s.at(i));
    const double m = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(diff.size());
    double var = 0.0;
    for (double x : diff) var += (x - m) * (x - m);
    const double se = diff.size() > 1
                          ? std::sqrt(var / static_cast<double>(diff.size() - 1) / static_cast<double>(diff.size()))
                          : 0.0;
    out.push_back({m, se});
  }
  return out;
}

// --------------------------------------------------------------------- suites

double AccVsK::mean_accuracy(std::size_t k) const {
  double sum = 0.0;
  std::size_t c = 0;
  for (const auto& r : runs) {
    if (r.k == k) {
      sum += r.accuracy;
      ++c;
    }
  }
  return c ? sum / static_cast<double>(c) : 0.0;
}

double AccVsK::mean_epsilon(std::size_t k) const {
  double sum = 0.0;
  std::size_t c = 0;
  for (const auto& r : runs) {
    if (r.k == k) {
      sum += r.mean_epsilon;
      ++c;
    }
  }
  return c ? sum / static_cast<double>(c) : 0.0;
}

const ModelRun& AccVsK::run(std::uint64_t seed, std::size_t k) const {
  for (const auto& r : runs) {
    if (r.seed == seed && r.k == k) return r;
  }
  fail(ErrorCode::MissingModel, "no run for seed " + std::to_string(seed) + ", k=" + std::to_string(k));
}

AccVsK run_acc_vs_k(const DeskConfig& config, std::vector<data::Dataset>* datasets) {
  if (config.k_min < 1 || config.k_min > config.k_max) {
    fail(ErrorCode::InvalidArgument, "need 1 <= k_min <= k_max");
  }
  AccVsK out;
  std::vector<double> diffs;
  for (std::uint64_t seed : config.seeds) {
    data::Dataset ds = build(config, seed, config.shots);
    double previous = 0.0;
    for (std::size_t k = config.k_min; k <= config.k_max; ++k) {
      out.runs.push_back(train_and_calibrate(ds, config, k, seed));
      if (k > config.k_min) diffs.push_back(out.runs.back().accuracy - previous);
      previous = out.runs.back().accuracy;
    }
    if (datasets) datasets->push_back(std::move(ds));
  }
  out.trend = wilcoxon_signed_rank(diffs);
  return out;
}

std::vector<NoiseRow> run_noise_sweep(const DeskConfig& config, std::span<const std::uint64_t> shots,
                                      std::size_t k,
                                      const std::map<std::pair<std::uint64_t, std::uint64_t>, double>& known) {
  std::vector<NoiseRow> rows;
  for (std::uint64_t seed : config.seeds) {
    for (std::uint64_t s : shots) {
      if (const auto it = known.find({s, seed}); it != known.end()) {
        rows.push_back({s, seed, it->second, 0.0});
        continue;
      }
      const auto start = Clock::now();
      const data::Dataset ds = build(config, seed, s).prefix(k);
      nn::TrainConfig tc = config.train;
      tc.seed = seed;
      const nn::TrainResult tr = nn::train(ds, tc);
      rows.push_back({s, seed, nn::accuracy_pm(tr.model, ds.val, tc.accuracy_tol), seconds_since(start)});
    }
  }
  return rows;
}

std::vector<LabelRow> run_label_sweep(const DeskConfig& config, std::span<const data::BinPreset> presets,
                                      std::size_t k) {
  std::vector<LabelRow> rows;
  for (std::uint64_t seed : config.seeds) {
    const data::Dataset base = build(config, seed, config.shots).prefix(k);
    for (data::BinPreset p : presets) {
      const auto start = Clock::now();
      const data::Dataset ds = relabel(base, data::make_binning(p));
      nn::TrainConfig tc = config.train;
      tc.seed = seed;
      const nn::TrainResult tr = nn::train(ds, tc);
      rows.push_back({std::string(data::to_string(p)), ds.manifest.binning.count(), seed,
                      nn::accuracy_pm(tr.model, ds.val, tc.accuracy_tol), seconds_since(start)});
    }
  }
  return rows;
}

std::vector<ScalingRow> run_scaling(const DeskConfig& config, std::span<const int> ns) {
  std::vector<ScalingRow> rows;
  for (int n : ns) {
    DeskConfig c = config;
    c.target = n == 2 ? data::Target{"bell", named_state(NamedState::Bell, 2)}
                      : data::Target{"ghz" + std::to_string(n), named_state(NamedState::GHZ, n)};
    c.mode = data::FeatureMode::PauliExpectations;
    c.k_max = std::min<std::size_t>(2 * static_cast<std::size_t>(n), plan::all_settings(n).size());
    for (std::uint64_t seed : config.seeds) {
      const data::Dataset ds = build(c, seed, c.shots);
      ModelRun run = train_and_calibrate(ds, c, c.k_max, seed);
      rows.push_back({n, c.target.id, c.k_max, ds.manifest.features.feature_count(), seed, run.accuracy,
                      run.mean_epsilon, run.seconds});
    }
  }
  return rows;
}

// -------------------------------------------------------------------- reports

void write_acc_vs_k(const AccVsK& r, const std::filesystem::path& csv) {
  Csv out(csv, "k,seed,val_acc_pm1,mean_epsilon_d05,best_epoch,epochs_run,seconds,wilcoxon_w_plus,wilcoxon_n,wilcoxon_p_increase");
  for (const auto& run : r.runs) {
    out.row(run.k, run.seed, run.accuracy, run.mean_epsilon, run.result.best_epoch,
            run.result.history.size(), run.seconds, r.trend.w_plus, r.trend.n, r.trend.p_increase);
  }
}

void write_eps_vs_f(const AccVsK& r, const std::filesystem::path& csv) {
  Csv out(csv, "k,seed,band_lower,band_upper,samples,reliable,delta,epsilon");
  for (const auto& run : r.runs) {
    const auto& t = run.calibration;
    for (const auto& band : t.bands) {
      for (std::size_t d = 0; d < t.deltas.size(); ++d) {
        out.row(run.k, run.seed, band.lower, band.upper, band.samples, band.reliable ? 1 : 0,
                t.deltas[d], band.epsilon[d]);
      }
    }
  }
}

void write_noise_sweep(std::span<const NoiseRow> rows, const std::filesystem::path& csv) {
  Csv out(csv, "shots,seed,val_acc_pm1,seconds");
  for (const auto& r : rows) out.row(r.shots, r.seed, r.accuracy, r.seconds);
}

void write_label_sweep(std::span<const LabelRow> rows, const std::filesystem::path& csv) {
  Csv out(csv, "binning,labels,seed,val_acc_pm1,seconds");
  for (const auto& r : rows) out.row(r.binning, r.labels, r.seed, r.accuracy, r.seconds);
}

void write_scaling(std::span<const ScalingRow> rows, const std::filesystem::path& csv) {
  Csv out(csv, "n,target,k,features,seed,val_acc_pm1,mean_epsilon_d05,seconds");
  for (const auto& r : rows) {
    out.row(r.n, r.target, r.k, r.features, r.seed, r.accuracy, r.mean_epsilon, r.seconds);
  }
}

void write_uniformity(int n, double f, std::size_t states, std::size_t anchors, std::size_t bins,
                      std::uint64_t seed, const std::filesystem::path& csv) {
  const auto start = Clock::now();
  std::vector<StateVector> pure;
  std::vector<DensityMatrix> mixed;
  for (std::size_t i = 0; i < states; ++i) {
    RngStream rp(seed, 2 * i);
    RngStream rm(seed, 2 * i + 1);
    pure.push_back(gen::gen_pure_with_fidelity(n, f, rp));
    mixed.push_back(gen::gen_mixed_with_fidelity(n, f, gen::M1Dist::H, rm));
  }
  RngStream pick(seed, 2 * states);
  const auto rep_pure = gen::uniformity_report(pure, anchors, bins, pick);
  const auto rep_mixed = gen::uniformity_report(mixed, anchors, bins, pick);
  const double secs = seconds_since(start);

  Csv out(csv, "kind,anchor,bin_lower,bin_upper,count,ks_vs_first_anchor,seed,seconds");
  auto emit = [&](std::string_view kind, const gen::UniformityReport& rep) {
    for (const auto& a : rep.anchors) {
      const double ks = gen::ks_statistic(a.fidelities, rep.anchors.front().fidelities);
      for (std::size_t b = 0; b < a.histogram.counts.size(); ++b) {
        out.row(kind, a.anchor, a.histogram.edges[b], a.histogram.edges[b + 1], a.histogram.counts[b], ks,
                seed, secs);
      }
    }
  };
  emit("pure", rep_pure);
  emit("mixed", rep_mixed);
}

void write_purity(int n, double f, std::size_t count, std::size_t bins, std::uint64_t seed,
                  const std::filesystem::path& csv) {
  const auto start = Clock::now();
  std::vector<gen::PuritySource> sources;
  for (auto d : {gen::M1Dist::A, gen::M1Dist::B, gen::M1Dist::C, gen::M1Dist::D, gen::M1Dist::E,
                 gen::M1Dist::F, gen::M1Dist::G, gen::M1Dist::H, gen::M1Dist::I}) {
    sources.push_back({d, std::nullopt});
  }
  sources.push_back({gen::M1Dist::C, 0.01});
  const auto rows = gen::purity_report(n, f, sources, count, bins, seed);
  const double secs = seconds_since(start);
  Csv out(csv, "source,mean_purity,bin_lower,bin_upper,count,seed,seconds");
  for (const auto& r : rows) {
    for (std::size_t b = 0; b < r.histogram.counts.size(); ++b) {
      out.row(r.label, r.mean, r.histogram.edges[b], r.histogram.edges[b + 1], r.histogram.counts[b], seed, secs);
    }
  }
}

}  // namespace fidnet::pipe
