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

#include "fidnet/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fidnet/errors.hpp"

namespace fidnet::nn {

namespace {

using nlohmann::json;

constexpr double kProbFloor = 1e-15;

void softmax_columns(Eigen::MatrixXd& z) {
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    auto col = z.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

std::size_t argmax(const double* p, std::size_t len) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < len; ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

void check_input(const MLPModel& model, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != model.inputs()) {
    fail(ErrorCode::ShapeMismatch, "input has " + std::to_string(rows) + " features, model expects " +
                                       std::to_string(model.inputs()));
  }
}

}  // namespace

// ---------------------------------------------------------------------- model

MLPModel MLPModel::zeros(std::vector<std::size_t> sizes) {
  if (sizes.size() < 2) fail(ErrorCode::ShapeMismatch, "model needs input and output layers");
  MLPModel m;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] == 0 || sizes[l + 1] == 0) fail(ErrorCode::ShapeMismatch, "empty layer");
    m.weights.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sizes[l + 1]),
                                              static_cast<Eigen::Index>(sizes[l])));
    m.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sizes[l + 1])));
  }
  m.sizes = std::move(sizes);
  return m;
}

MLPModel MLPModel::init(std::vector<std::size_t> sizes, RngStream& rng) {
  MLPModel m = zeros(std::move(sizes));
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.sizes[l] + m.sizes[l + 1]));
    auto& w = m.weights[l];
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-limit, limit);
    }
  }
  return m;
}

std::size_t MLPModel::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    total += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return total;
}

bool MLPModel::all_finite() const {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (!weights[l].allFinite() || !biases[l].allFinite()) return false;
  }
  return true;
}

Eigen::MatrixXd forward(const MLPModel& model, const Eigen::MatrixXd& x) {
  check_input(model, x.rows());
  Eigen::MatrixXd a = x;
  const std::size_t layers = model.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = model.weights[l] * a;
    z.colwise() += model.biases[l];
    if (l + 1 < layers) {
      a = z.cwiseMax(0.0);
    } else {
      softmax_columns(z);
      a = std::move(z);
    }
  }
  return a;
}

std::vector<double> forward(const MLPModel& model, std::span<const double> x) {
  const Eigen::MatrixXd col = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd p = forward(model, col);
  return std::vector<double>(p.data(), p.data() + p.size());
}

double loss(std::span<const double> probs, std::size_t label) {
  if (label >= probs.size()) fail(ErrorCode::LabelOutOfRange, "label outside the output layer");
  return -std::log(std::max(probs[label], kProbFloor));
}

// -------------------------------------------------------------------- backprop

Gradients backward(const MLPModel& model, const Eigen::MatrixXd& x,
                   std::span<const std::size_t> labels) {
  check_input(model, x.rows());
  if (x.cols() == 0) fail(ErrorCode::ShapeMismatch, "empty batch");
  if (static_cast<std::size_t>(x.cols()) != labels.size()) {
    fail(ErrorCode::ShapeMismatch, "batch and label counts differ");
  }
  const std::size_t layers = model.weights.size();
  const double batch = static_cast<double>(x.cols());

  // activations[l] feeds layer l; pre[l] is layer l's pre-activation.
  std::vector<Eigen::MatrixXd> activations{x};
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = model.weights[l] * activations.back();
    z.colwise() += model.biases[l];
    pre.push_back(z);
    if (l + 1 < layers) {
      activations.push_back(z.cwiseMax(0.0));
    } else {
      softmax_columns(z);
      activations.push_back(std::move(z));
    }
  }

  Gradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Eigen::MatrixXd delta = activations.back();
  double total = 0.0;
  for (Eigen::Index c = 0; c < delta.cols(); ++c) {
    const auto label = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(c)]);
    if (label >= delta.rows()) fail(ErrorCode::LabelOutOfRange, "label outside the output layer");
    total += -std::log(std::max(delta(label, c), kProbFloor));
    delta(label, c) -= 1.0;
  }
  g.loss = total / batch;
  delta /= batch;

  for (std::size_t l = layers; l-- > 0;) {
    g.weights[l] = delta * activations[l].transpose();
    g.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd upstream = model.weights[l].transpose() * delta;
      // ReLU subgradient at 0 is 0.
      delta = upstream.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

// -------------------------------------------------------------------- optimizer

void TrainConfig::validate() const {
  if (batch_size == 0) fail(ErrorCode::InvalidArgument, "batch size must be >= 1");
  if (epochs == 0) fail(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(learning_rate > 0.0) || !(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "rates must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    fail(ErrorCode::InvalidArgument, "betas must lie in (0, 1)");
  }
  for (std::size_t h : hidden) {
    if (h == 0) fail(ErrorCode::InvalidArgument, "hidden layer of width 0");
  }
}

std::vector<ReferencePreset> reference_presets() {
  return {
      {"two-qubit-probs", 200, 2048, {1000}},
      {"two-qubit-probs", 200, 2048, {2000}},
      {"two-qubit-probs", 200, 2048, {3000}},
      {"three-qubit-probs", 400, 4096, {1000}},
      {"three-qubit-probs", 400, 4096, {2000}},
      {"three-qubit-probs", 400, 4096, {3000}},
      {"four-qubit-probs", 400, 8192, {2000}},
      {"four-qubit-probs", 400, 8192, {3000}},
      {"four-qubit-probs", 400, 8192, {5000}},
      {"five-qubit-probs", 200, 16384, {500, 500}},
      {"five-qubit-probs", 200, 16384, {1000, 1000}},
      {"five-qubit-probs", 200, 16384, {1500, 1500}},
      {"six-qubit-probs", 500, 16384, {500, 500}},
      {"six-qubit-probs", 500, 16384, {1000, 1000}},
      {"six-qubit-probs", 500, 16384, {1500, 1500}},
      {"seven-qubit-probs", 500, 16384, {800, 400}},
      {"seven-qubit-probs", 500, 16384, {900, 400}},
      {"seven-qubit-probs", 500, 16384, {1000, 400}},
      {"eight-qubit-probs", 500, 16384, {700, 400}},
      {"eight-qubit-probs", 500, 16384, {1000, 400}},
      {"eight-qubit-probs", 500, 16384, {2000, 500}},
      {"four-qubit-paulis", 400, 8192, {2000}},
      {"four-qubit-paulis", 400, 8192, {3000}},
      {"four-qubit-paulis", 400, 8192, {5000}},
      {"five-qubit-paulis", 500, 16384, {700, 300}},
      {"five-qubit-paulis", 500, 16384, {900, 300}},
      {"five-qubit-paulis", 500, 16384, {1000, 300}},
      {"six-qubit-paulis", 500, 16384, {500, 300}},
      {"six-qubit-paulis", 500, 16384, {700, 300}},
      {"six-qubit-paulis", 500, 16384, {900, 300}},
  };
}

NadamState NadamState::for_model(const MLPModel& model) {
  NadamState s;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    s.m_weights.push_back(Eigen::MatrixXd::Zero(model.weights[l].rows(), model.weights[l].cols()));
    s.v_weights.push_back(s.m_weights.back());
    s.m_biases.push_back(Eigen::VectorXd::Zero(model.biases[l].size()));
    s.v_biases.push_back(s.m_biases.back());
  }
  return s;
}

namespace {

template <typename Param, typename Moment>
void nadam_update(Param& theta, Moment& m, Moment& v, const Moment& g, const TrainConfig& c,
                  double bias1, double bias2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
  const auto m_hat = m.array() / bias1;
  const auto v_hat = v.array() / bias2;
  const auto nesterov = c.beta1 * m_hat + (1.0 - c.beta1) * g.array() / bias1;
  theta.array() -= c.learning_rate * nesterov / (v_hat.sqrt() + c.epsilon);
}

}  // namespace

void nadam_step(NadamState& state, MLPModel& model, const Gradients& grads,
                const TrainConfig& config) {
  if (state.m_weights.size() != model.weights.size() || grads.weights.size() != model.weights.size()) {
    fail(ErrorCode::ShapeMismatch, "optimizer state does not match the model");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    nadam_update(model.weights[l], state.m_weights[l], state.v_weights[l], grads.weights[l], config,
                 bias1, bias2);
    nadam_update(model.biases[l], state.m_biases[l], state.v_biases[l], grads.biases[l], config,
                 bias1, bias2);
  }
}

// --------------------------------------------------------------------- training

Eigen::MatrixXd feature_matrix(std::span<const data::DatasetRecord> records) {
  if (records.empty()) return {};
  const auto rows = static_cast<Eigen::Index>(records.front().features.size());
  Eigen::MatrixXd x(rows, static_cast<Eigen::Index>(records.size()));
  for (std::size_t c = 0; c < records.size(); ++c) {
    if (static_cast<Eigen::Index>(records[c].features.size()) != rows) {
      fail(ErrorCode::ShapeMismatch, "records differ in feature count");
    }
    x.col(static_cast<Eigen::Index>(c)) =
        Eigen::Map<const Eigen::VectorXd>(records[c].features.data(), rows);
  }
  return x;
}

namespace {

double accuracy_from_probs(const Eigen::MatrixXd& probs, std::span<const data::DatasetRecord> records,
                           const data::BinningScheme& bins, double tol) {
  if (records.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t c = 0; c < records.size(); ++c) {
    const std::size_t bin = argmax(probs.col(static_cast<Eigen::Index>(c)).data(),
                                   static_cast<std::size_t>(probs.rows()));
    if (std::abs(bins.midpoint(bin) - records[c].true_fidelity) <= tol + 1e-12) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(records.size());
}

}  // namespace

TrainResult train(const data::Dataset& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.train.empty()) fail(ErrorCode::EmptyDataset, "no training records");
  const auto& spec = dataset.manifest.features;
  const std::size_t inputs = spec.feature_count();

  std::vector<std::size_t> sizes{inputs};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(dataset.manifest.binning.count());
  RngStream init_rng(config.seed, 0);
  MLPModel model = MLPModel::init(sizes, init_rng);
  model.layout_hash = spec.layout_hash();
  model.binning = dataset.manifest.binning;

  const Eigen::MatrixXd x_train = feature_matrix(dataset.train);
  if (static_cast<std::size_t>(x_train.rows()) != inputs) {
    fail(ErrorCode::ShapeMismatch, "record width does not match the feature layout");
  }
  const Eigen::MatrixXd x_val = feature_matrix(dataset.val);
  // Without a validation split, select on training accuracy.
  const auto& monitor_records = dataset.val.empty() ? dataset.train : dataset.val;
  const Eigen::MatrixXd& x_monitor = dataset.val.empty() ? x_train : x_val;

  std::vector<std::size_t> labels(dataset.train.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = dataset.train[i].label;

  NadamState opt = NadamState::for_model(model);
  RngStream shuffle_rng(config.seed, 1);
  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.model = model;
  double best_acc = -1.0;
  std::size_t since_best = 0;
  const std::size_t batch = std::min(config.batch_size, order.size());

  Eigen::MatrixXd xb;
  std::vector<std::size_t> yb;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.below(i))]);
    }
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      xb.resize(static_cast<Eigen::Index>(inputs), static_cast<Eigen::Index>(len));
      yb.resize(len);
      for (std::size_t j = 0; j < len; ++j) {
        const std::size_t src = order[start + j];
        xb.col(static_cast<Eigen::Index>(j)) = x_train.col(static_cast<Eigen::Index>(src));
        yb[j] = labels[src];
      }
      const Gradients g = backward(model, xb, yb);
      if (!std::isfinite(g.loss)) {
        std::ostringstream os;
        os << "loss became " << g.loss << " at epoch " << epoch << ", batch starting at " << start;
        fail(ErrorCode::NonFiniteLoss, os.str());
      }
      loss_sum += g.loss * static_cast<double>(len);
      seen += len;
      nadam_step(opt, model, g, config);
    }
    const double acc = accuracy_from_probs(forward(model, x_monitor), monitor_records,
                                           model.binning, config.accuracy_tol);
    result.history.push_back({epoch, loss_sum / static_cast<double>(seen), acc});
    if (acc > best_acc) {
      best_acc = acc;
      since_best = 0;
      result.model = model;
      result.best_epoch = epoch;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

std::size_t predict_bin(const MLPModel& model, std::span<const double> features) {
  const std::vector<double> p = forward(model, features);
  return argmax(p.data(), p.size());
}

std::vector<std::size_t> predict_bins(const MLPModel& model,
                                      std::span<const data::DatasetRecord> records) {
  std::vector<std::size_t> out;
  if (records.empty()) return out;
  const Eigen::MatrixXd probs = forward(model, feature_matrix(records));
  out.reserve(records.size());
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    out.push_back(argmax(probs.col(c).data(), static_cast<std::size_t>(probs.rows())));
  }
  return out;
}

double accuracy_pm(const MLPModel& model, std::span<const data::DatasetRecord> records, double tol) {
  if (tol < 0.0) fail(ErrorCode::InvalidArgument, "tolerance must be nonnegative");
  if (records.empty()) return 0.0;
  return accuracy_from_probs(forward(model, feature_matrix(records)), records, model.binning, tol);
}

void check_compatible(const MLPModel& model, const data::DatasetManifest& manifest) {
  if (model.layout_hash != manifest.features.layout_hash()) {
    fail(ErrorCode::SchemaMismatch, "model feature layout differs from the dataset's");
  }
  if (model.binning.edges != manifest.binning.edges) {
    fail(ErrorCode::SchemaMismatch, "model binning differs from the dataset's");
  }
}

// ------------------------------------------------------------------------ I/O

void save_model(const MLPModel& model, const std::filesystem::path& path) {
  json layers = json::array();
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const auto& w = model.weights[l];
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) row_major.push_back(w(r, c));
    }
    std::vector<double> bias(model.biases[l].data(), model.biases[l].data() + model.biases[l].size());
    layers.push_back({{"weights", row_major}, {"bias", bias}});
  }
  const json j{{"schema_version", kModelSchemaVersion},
               {"layer_sizes", model.sizes},
               {"layers", layers},
               {"layout_hash", model.layout_hash},
               {"binning", {{"id", model.binning.id}, {"edges", model.binning.edges}}}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump() << '\n';
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

MLPModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, "unreadable model file " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kModelSchemaVersion) {
      fail(ErrorCode::SchemaMismatch, "unsupported model schema version");
    }
    MLPModel m = MLPModel::zeros(j.at("layer_sizes").get<std::vector<std::size_t>>());
    const auto& layers = j.at("layers");
    if (layers.size() != m.weights.size()) fail(ErrorCode::SchemaMismatch, "layer count mismatch");
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      auto& mw = m.weights[l];
      if (w.size() != static_cast<std::size_t>(mw.size()) ||
          b.size() != static_cast<std::size_t>(m.biases[l].size())) {
        fail(ErrorCode::SchemaMismatch, "parameter array has the wrong length");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < mw.rows(); ++r) {
        for (Eigen::Index c = 0; c < mw.cols(); ++c) mw(r, c) = w[k++];
      }
      m.biases[l] = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
    }
    m.layout_hash = j.at("layout_hash").get<std::string>();
    const auto& bins = j.at("binning");
    m.binning = data::make_binning(bins.at("id").get<std::string>(),
                                   bins.at("edges").get<std::vector<double>>());
    if (m.binning.count() != m.outputs()) fail(ErrorCode::SchemaMismatch, "binning does not match output layer");
    if (!m.all_finite()) fail(ErrorCode::SchemaMismatch, "non-finite parameters");
    return m;
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaMismatch, std::string("malformed model file: ") + e.what());
  }
}

}  // namespace fidnet::nn
