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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fidnet/dataset.hpp"
#include "fidnet/rng.hpp"

namespace fidnet::nn {

inline constexpr int kModelSchemaVersion = 1;

/// Dense classifier: ReLU hidden layers, softmax output over fidelity bins.
/// weights[l] is (sizes[l+1] x sizes[l]); inputs are column vectors.
struct MLPModel {
  std::vector<std::size_t> sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  /// Provenance checked against datasets at load/predict time.
  std::string layout_hash;
  data::BinningScheme binning;

  /// Glorot-uniform weights, zero biases.
  static MLPModel init(std::vector<std::size_t> sizes, RngStream& rng);
  static MLPModel zeros(std::vector<std::size_t> sizes);

  std::size_t inputs() const { return sizes.front(); }
  std::size_t outputs() const { return sizes.back(); }
  std::size_t parameter_count() const;
  bool all_finite() const;
};

/// Class probabilities for every column of x (inputs x batch).
Eigen::MatrixXd forward(const MLPModel& model, const Eigen::MatrixXd& x);
std::vector<double> forward(const MLPModel& model, std::span<const double> x);

/// -log(max(p[label], 1e-15)).
double loss(std::span<const double> probs, std::size_t label);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  double loss = 0.0;  // mean cross-entropy of the batch
};

/// Gradients of the mean cross-entropy over the batch columns.
Gradients backward(const MLPModel& model, const Eigen::MatrixXd& x,
                   std::span<const std::size_t> labels);

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 256;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<std::size_t> hidden{128, 64};
  std::size_t patience = 20;
  std::uint64_t seed = 1;  // initialization and shuffling
  double accuracy_tol = 0.01;

  void validate() const;
};

/// Published hyperparameter rows, kept for reference runs.
struct ReferencePreset {
  std::string_view name;
  std::size_t epochs;
  std::size_t batch_size;
  std::vector<std::size_t> hidden;
};
std::vector<ReferencePreset> reference_presets();

struct NadamState {
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;
  std::uint64_t step = 0;

  static NadamState for_model(const MLPModel& model);
};

/// Nesterov-accelerated Adam:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   theta <- theta - lr (b1 m_hat + (1-b1) g / (1-b1^t)) / (sqrt(v_hat) + eps).
void nadam_step(NadamState& state, MLPModel& model, const Gradients& grads,
                const TrainConfig& config);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  MLPModel model;  // best validation accuracy
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

/// Features as columns.
Eigen::MatrixXd feature_matrix(std::span<const data::DatasetRecord> records);

TrainResult train(const data::Dataset& dataset, const TrainConfig& config);

/// Argmax class, lowest index on ties.
std::size_t predict_bin(const MLPModel& model, std::span<const double> features);
std::vector<std::size_t> predict_bins(const MLPModel& model,
                                      std::span<const data::DatasetRecord> records);

/// Fraction of records whose predicted bin midpoint is within tol of the
/// true fidelity.
double accuracy_pm(const MLPModel& model, std::span<const data::DatasetRecord> records,
                   double tol);

/// Throws SchemaMismatch when the model was trained on another layout or binning.
void check_compatible(const MLPModel& model, const data::DatasetManifest& manifest);

void save_model(const MLPModel& model, const std::filesystem::path& path);
MLPModel load_model(const std::filesystem::path& path);

}  // namespace fidnet::nn
