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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fidnet/dataset.hpp"
#include "fidnet/estimator.hpp"
#include "fidnet/nn.hpp"
#include "fidnet/pauli_select.hpp"
#include "fidnet/state_gen.hpp"

namespace fidnet::pipe {

/// Parameters shared by the desk-scale experiment suites.
struct DeskConfig {
  data::Target target;
  data::BinningScheme binning;
  data::FeatureMode mode = data::FeatureMode::OutcomeProbs;
  int max_identities = 4;
  std::uint64_t shots = 10000;
  plan::Strategy strategy = plan::Strategy::GreedyCoverage;
  std::size_t k_min = 2;
  std::size_t k_max = 7;
  std::size_t per_label_train = 200;
  std::size_t per_label_val = 50;
  gen::StateKind kind = gen::StateKind::Mixed;
  gen::M1Dist m1_dist = gen::M1Dist::H;
  nn::TrainConfig train;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<double> deltas{0.01, 0.05, 0.1, 0.5};
  std::size_t workers = 0;

  /// Bell target, L122 labels, 200/50 per label, 10^4 shots, k = 2..7.
  static DeskConfig bell();
};

data::BuildConfig build_config(const DeskConfig& config, std::uint64_t seed, std::uint64_t shots);
data::Dataset build(const DeskConfig& config, std::uint64_t seed, std::uint64_t shots);

/// Same records under a different binning (labels recomputed from the true
/// fidelities).
data::Dataset relabel(const data::Dataset& ds, const data::BinningScheme& bins);

struct ModelRun {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double mean_epsilon = 0.0;  // delta = 0.05, over bands with samples
  double seconds = 0.0;
  nn::TrainResult result;
  est::CalibrationTable calibration;
};

/// Trains on the first k settings and calibrates on the validation split.
ModelRun train_and_calibrate(const data::Dataset& ds, const DeskConfig& config, std::size_t k,
                             std::uint64_t seed);

struct WilcoxonResult {
  std::size_t n = 0;  // nonzero differences
  double w_plus = 0.0;
  double w_minus = 0.0;
  /// One-sided exact P(W+ >= observed) under the symmetric null.
  double p_increase = 1.0;
};
WilcoxonResult wilcoxon_signed_rank(std::span<const double> differences);

/// Mean and standard error of each consecutive step of a per-seed series.
struct StepStat {
  double mean = 0.0;
  double se = 0.0;
};
std::vector<StepStat> step_stats(const std::vector<std::vector<double>>& per_seed_series);

// -------------------------------------------------------------------- suites

struct AccVsK {
  std::vector<ModelRun> runs;  // seed-major, k ascending
  WilcoxonResult trend;        // consecutive-k accuracy differences

  double mean_accuracy(std::size_t k) const;
  double mean_epsilon(std::size_t k) const;
  const ModelRun& run(std::uint64_t seed, std::size_t k) const;
};
AccVsK run_acc_vs_k(const DeskConfig& config, std::vector<data::Dataset>* datasets = nullptr);

struct NoiseRow {
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double seconds = 0.0;
};
/// `known` supplies already measured (shots, seed) accuracies.
std::vector<NoiseRow> run_noise_sweep(const DeskConfig& config, std::span<const std::uint64_t> shots,
                                      std::size_t k,
                                      const std::map<std::pair<std::uint64_t, std::uint64_t>, double>& known = {});

struct LabelRow {
  std::string binning;
  std::size_t labels = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double seconds = 0.0;
};
std::vector<LabelRow> run_label_sweep(const DeskConfig& config, std::span<const data::BinPreset> presets,
                                      std::size_t k);

struct ScalingRow {
  int n = 0;
  std::string target;
  std::size_t k = 0;
  std::size_t features = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double mean_epsilon = 0.0;
  double seconds = 0.0;
};
/// Per n: Bell (n=2) or GHZ target, k = 2n, filtered Pauli features.
std::vector<ScalingRow> run_scaling(const DeskConfig& config, std::span<const int> ns);

// ------------------------------------------------------------------- reports

void write_acc_vs_k(const AccVsK& r, const std::filesystem::path& csv);
void write_eps_vs_f(const AccVsK& r, const std::filesystem::path& csv);
void write_noise_sweep(std::span<const NoiseRow> rows, const std::filesystem::path& csv);
void write_label_sweep(std::span<const LabelRow> rows, const std::filesystem::path& csv);
void write_scaling(std::span<const ScalingRow> rows, const std::filesystem::path& csv);

/// Pairwise-fidelity histograms of pure and mixed states at fidelity f, plus
/// KS statistics between anchors.
void write_uniformity(int n, double f, std::size_t states, std::size_t anchors, std::size_t bins,
                      std::uint64_t seed, const std::filesystem::path& csv);
void write_purity(int n, double f, std::size_t count, std::size_t bins, std::uint64_t seed,
                  const std::filesystem::path& csv);

}  // namespace fidnet::pipe
