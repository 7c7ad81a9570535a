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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "fidnet/errors.hpp"
#include "fidnet/nn.hpp"

using namespace fidnet;
using namespace fidnet::nn;

namespace {

bool throws_code(const std::function<void()>& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

/// Mean cross-entropy recomputed with plain loops.
double loss_oracle(const MLPModel& m, const Eigen::MatrixXd& x, const std::vector<std::size_t>& y) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    std::vector<double> a(x.col(c).data(), x.col(c).data() + x.rows());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
      std::vector<double> z(static_cast<std::size_t>(m.weights[l].rows()));
      for (Eigen::Index r = 0; r < m.weights[l].rows(); ++r) {
        double s = m.biases[l][r];
        for (Eigen::Index k = 0; k < m.weights[l].cols(); ++k) s += m.weights[l](r, k) * a[static_cast<std::size_t>(k)];
        z[static_cast<std::size_t>(r)] = (l + 1 < m.weights.size()) ? std::max(0.0, s) : s;
      }
      a = z;
    }
    double mx = a[0];
    for (double v : a) mx = std::max(mx, v);
    double norm = 0.0;
    for (double v : a) norm += std::exp(v - mx);
    total += -(a[y[static_cast<std::size_t>(c)]] - mx - std::log(norm));
  }
  return total / static_cast<double>(x.cols());
}

Eigen::MatrixXd random_inputs(std::size_t rows, std::size_t cols, RngStream& rng) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (auto& v : x.reshaped()) v = rng.uniform(-1.0, 1.0);
  return x;
}

data::Dataset small_bell(std::size_t per_label, std::uint64_t seed) {
  data::BuildConfig c;
  c.target = data::Target{"bell", named_state(NamedState::Bell, 2)};
  c.features.plan = plan::select_settings(c.target.state, "bell", 3);
  c.features.shots = 10000;
  c.binning = data::make_binning(data::BinPreset::L122);
  c.per_label_train = per_label;
  c.per_label_val = 2;
  c.root_seed = seed;
  return data::build_dataset(c);
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "fidnet_test_nn";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("zero model is uniform") {
  const MLPModel m = MLPModel::zeros({4, 16, 122});
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const auto p = forward(m, x);
  REQUIRE(p.size() == 122);
  for (double v : p) CHECK(std::abs(v - 1.0 / 122.0) < 1e-15);
  CHECK(loss(p, 5) == doctest::Approx(std::log(122.0)).epsilon(1e-12));
  CHECK(loss(p, 5) == doctest::Approx(4.804).epsilon(1e-3));
  std::vector<double> onehot(122, 0.0);
  onehot[7] = 1.0;
  CHECK(loss(onehot, 7) == 0.0);
  CHECK(loss(onehot, 8) == doctest::Approx(-std::log(1e-15)));
  CHECK(throws_code([&] { loss(onehot, 122); }, ErrorCode::LabelOutOfRange));
}

TEST_CASE("hand-computed 1-2-2 network") {
  MLPModel m = MLPModel::zeros({1, 2, 2});
  m.weights[0] << 1.0, -1.0;
  m.biases[0] << 0.0, 0.5;
  m.weights[1] << 1.0, 2.0, 3.0, -1.0;
  m.biases[1] << 0.1, -0.2;
  const std::vector<double> x{1.0};
  // hidden = relu(1, -0.5) = (1, 0); logits = (1.1, 2.8)
  const double p1 = std::exp(2.8) / (std::exp(1.1) + std::exp(2.8));
  const auto p = forward(m, x);
  CHECK(std::abs(p[1] - p1) < 1e-12);
  CHECK(std::abs(p[0] - (1.0 - p1)) < 1e-12);
}

TEST_CASE("outputs are normalized and the loss is nonnegative") {
  RngStream rng(21, 0);
  const MLPModel m = MLPModel::init({5, 7, 9}, rng);
  const Eigen::MatrixXd x = random_inputs(5, 40, rng) * 10.0;
  const Eigen::MatrixXd p = forward(m, x);
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    CHECK(std::abs(p.col(c).sum() - 1.0) < 1e-12);
    CHECK(p.col(c).minCoeff() >= 0.0);
    std::vector<double> col(p.col(c).data(), p.col(c).data() + p.rows());
    CHECK(loss(col, static_cast<std::size_t>(c % 9)) >= 0.0);
  }
}

TEST_CASE("glorot initialization bounds") {
  RngStream rng(22, 0);
  const MLPModel m = MLPModel::init({10, 30, 5}, rng);
  CHECK(m.weights[0].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 40.0));
  CHECK(m.weights[1].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 35.0));
  CHECK(m.biases[0].isZero());
  CHECK(m.parameter_count() == 10 * 30 + 30 + 30 * 5 + 5);
}

TEST_CASE("gradient at the uniform point") {
  const MLPModel m = MLPModel::zeros({3, 4, 6});
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 4);
  const std::vector<std::size_t> y{0, 2, 2, 5};
  const Gradients g = backward(m, x, y);
  for (Eigen::Index i = 0; i < 6; ++i) {
    double expect = 1.0 / 6.0;
    for (std::size_t label : y) expect -= (static_cast<Eigen::Index>(label) == i) ? 0.25 : 0.0;
    CHECK(std::abs(g.biases[1][i] - expect) < 1e-15);
  }
  CHECK(g.weights[0].isZero());
  CHECK(g.loss == doctest::Approx(std::log(6.0)));
}

TEST_CASE("backpropagation agrees with central differences") {
  RngStream rng(23, 0);
  int probes = 0;
  for (int model_i = 0; model_i < 10; ++model_i) {
    MLPModel m = MLPModel::init({6, 8, 5}, rng);
    for (auto& b : m.biases) for (auto& v : b) v = rng.uniform(-0.5, 0.5);
    const Eigen::MatrixXd x = random_inputs(6, 7, rng);
    std::vector<std::size_t> y;
    for (int i = 0; i < 7; ++i) y.push_back(rng.below(5));
    const Gradients g = backward(m, x, y);
    CHECK(std::abs(g.loss - loss_oracle(m, x, y)) < 1e-12);
    for (int p = 0; p < 10; ++p, ++probes) {
      const std::size_t layer = rng.below(2);
      const bool bias = rng.below(4) == 0;
      double* slot;
      double analytic;
      if (bias) {
        const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m.biases[layer].size())));
        slot = &m.biases[layer][r];
        analytic = g.biases[layer][r];
      } else {
        const auto r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m.weights[layer].rows())));
        const auto c = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m.weights[layer].cols())));
        slot = &m.weights[layer](r, c);
        analytic = g.weights[layer](r, c);
      }
      const double saved = *slot;
      const double numeric = [&] {
        const double h = 1e-5;
        *slot = saved + h;
        const double up = loss_oracle(m, x, y);
        *slot = saved - h;
        const double down = loss_oracle(m, x, y);
        *slot = saved;
        return (up - down) / (2.0 * h);
      }();
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      CHECK(std::abs(numeric - analytic) / scale <= 1e-4);
    }
  }
  CHECK(probes == 100);
}

TEST_CASE("duplicated batch entries leave the mean gradient unchanged") {
  RngStream rng(24, 0);
  const MLPModel m = MLPModel::init({4, 6, 3}, rng);
  const Eigen::MatrixXd x = random_inputs(4, 3, rng);
  const std::vector<std::size_t> y{0, 1, 2};
  Eigen::MatrixXd xx(4, 6);
  xx << x, x;
  const std::vector<std::size_t> yy{0, 1, 2, 0, 1, 2};
  const Gradients a = backward(m, x, y), b = backward(m, xx, yy);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK((a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((a.biases[l] - b.biases[l]).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK(throws_code([&] { backward(m, x, std::vector<std::size_t>{0, 1}); }, ErrorCode::ShapeMismatch));
}

TEST_CASE("nadam first steps") {
  TrainConfig cfg;
  MLPModel m = MLPModel::zeros({1, 1});
  NadamState s = NadamState::for_model(m);
  Gradients zero{{Eigen::MatrixXd::Zero(1, 1)}, {Eigen::VectorXd::Zero(1)}, 0.0};
  nadam_step(s, m, zero, cfg);
  CHECK(m.weights[0](0, 0) == 0.0);
  CHECK(m.biases[0][0] == 0.0);

  MLPModel one = MLPModel::zeros({1, 1});
  NadamState s1 = NadamState::for_model(one);
  Gradients g{{Eigen::MatrixXd::Constant(1, 1, 1.0)}, {Eigen::VectorXd::Constant(1, 1.0)}, 0.0};
  nadam_step(s1, one, g, cfg);
  // m = 0.1, v = 0.001, bias corrections 0.1 and 0.001.
  const double m_hat = 0.1 / 0.1, v_hat = 0.001 / 0.001;
  const double nesterov = 0.9 * m_hat + 0.1 * 1.0 / 0.1;
  const double step = 1e-3 * nesterov / (std::sqrt(v_hat) + 1e-8);
  CHECK(std::abs(-one.weights[0](0, 0) - step) < 1e-15);
  CHECK(step == doctest::Approx(1.9e-3).epsilon(1e-6));

  MLPModel two = MLPModel::zeros({1, 1});
  NadamState s2 = NadamState::for_model(two);
  nadam_step(s2, two, g, cfg);
  CHECK(two.weights[0](0, 0) == one.weights[0](0, 0));
}

TEST_CASE("reference presets") {
  const auto presets = reference_presets();
  bool found = false;
  for (const auto& p : presets) {
    if (p.name == "five-qubit-paulis" && p.hidden == std::vector<std::size_t>{1000, 300}) {
      found = true;
      CHECK(p.epochs == 500);
      CHECK(p.batch_size == 16384);
    }
  }
  CHECK(found);
  CHECK(presets.size() == 30);
}

TEST_CASE("accuracy against a counting oracle") {
  const auto bins = data::make_binning(data::BinPreset::L122);
  const data::Dataset ds = small_bell(2, 31);
  const auto& recs = ds.train;
  const double tol = 0.01;
  double sum = 0.0;
  for (std::size_t b = 0; b < bins.count(); ++b) {
    MLPModel m = MLPModel::zeros({12, 122});
    m.binning = bins;
    m.biases[0][static_cast<Eigen::Index>(b)] = 1.0;
    sum += accuracy_pm(m, recs, tol);
  }
  double expect = 0.0;
  for (const auto& r : recs) {
    std::size_t within = 0;
    for (std::size_t b = 0; b < bins.count(); ++b) within += std::abs(bins.midpoint(b) - r.true_fidelity) <= tol;
    expect += static_cast<double>(within) / static_cast<double>(bins.count());
  }
  expect /= static_cast<double>(recs.size());
  CHECK(sum / static_cast<double>(bins.count()) == doctest::Approx(expect).epsilon(1e-12));

  MLPModel m = MLPModel::zeros({12, 122});
  m.binning = bins;
  CHECK(accuracy_pm(m, recs, 1.0) == 1.0);
  double prev = 0.0;
  for (double t : {0.0, 0.005, 0.01, 0.05, 0.2, 0.5}) {
    const double a = accuracy_pm(m, recs, t);
    CHECK(a >= prev);
    prev = a;
  }
}

TEST_CASE("training is deterministic and returns the best epoch") {
  const data::Dataset ds = small_bell(8, 32);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 64;
  cfg.hidden = {32, 16};
  cfg.learning_rate = 3e-3;
  cfg.patience = 100;
  const TrainResult a = train(ds, cfg);
  const TrainResult b = train(ds, cfg);
  CHECK(a.history.size() == 12);
  for (std::size_t l = 0; l < a.model.weights.size(); ++l) {
    CHECK(a.model.weights[l] == b.model.weights[l]);
    CHECK(a.model.biases[l] == b.model.biases[l]);
  }
  double best = 0.0;
  for (const auto& e : a.history) best = std::max(best, e.val_accuracy);
  CHECK(a.history[a.best_epoch - 1].val_accuracy == best);
  CHECK(accuracy_pm(a.model, ds.val, 0.01) == doctest::Approx(best).epsilon(1e-12));
  CHECK(a.history.back().loss < a.history.front().loss);
  CHECK(a.model.layout_hash == ds.manifest.features.layout_hash());
  CHECK_NOTHROW(check_compatible(a.model, ds.manifest));
  CHECK(throws_code([&] { check_compatible(a.model, ds.prefix(2).manifest); }, ErrorCode::SchemaMismatch));

  cfg.patience = 1;
  cfg.epochs = 50;
  const TrainResult early = train(ds, cfg);
  CHECK(early.history.size() < 50);

  data::Dataset empty = ds;
  empty.train.clear();
  CHECK(throws_code([&] { train(empty, cfg); }, ErrorCode::EmptyDataset));

  cfg.learning_rate = 1e6;
  cfg.epochs = 30;
  cfg.patience = 100;
  bool diverged_cleanly = true;
  try {
    const TrainResult wild = train(ds, cfg);
    diverged_cleanly = wild.model.all_finite();
  } catch (const Error& e) {
    diverged_cleanly = e.code() == ErrorCode::NonFiniteLoss;
  }
  CHECK(diverged_cleanly);
}

TEST_CASE("model files round trip") {
  RngStream rng(25, 0);
  MLPModel m = MLPModel::init({12, 20, 122}, rng);
  m.binning = data::make_binning(data::BinPreset::L122);
  m.layout_hash = "abc";
  save_model(m, scratch("m.model.json"));
  const MLPModel back = load_model(scratch("m.model.json"));
  const Eigen::MatrixXd x = random_inputs(12, 10, rng);
  CHECK(forward(m, x) == forward(back, x));
  CHECK(back.layout_hash == "abc");
  CHECK(back.sizes == m.sizes);

  std::ifstream in(scratch("m.model.json"));
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::ofstream(scratch("cut.model.json")) << text.substr(0, text.size() / 2);
  CHECK(throws_code([] { load_model(scratch("cut.model.json")); }, ErrorCode::IoError));
  CHECK(throws_code([] { load_model(scratch("none.model.json")); }, ErrorCode::IoError));
  auto j = nlohmann::json::parse(text);
  j["layer_sizes"][1] = 21;
  std::ofstream(scratch("bad.model.json")) << j.dump();
  CHECK(throws_code([] { load_model(scratch("bad.model.json")); }, ErrorCode::SchemaMismatch));
}
