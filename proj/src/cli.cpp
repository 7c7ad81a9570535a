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

#include "fidnet/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "fidnet/dataset.hpp"
#include "fidnet/estimator.hpp"
#include "fidnet/nn.hpp"
#include "fidnet/pauli_select.hpp"
#include "fidnet/pipeline.hpp"
#include "fidnet/quantum.hpp"
#include "fidnet/state_gen.hpp"

namespace fidnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnsupportedState:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InfeasibleSpec:
    case ErrorCode::KOutOfRange:
    case ErrorCode::BadEdges:
    case ErrorCode::TooFewStates:
    case ErrorCode::MissingModel:
      return kConfigError;
    case ErrorCode::IoError:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::CorruptRecord:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::LengthMismatch:
    case ErrorCode::LayoutMismatch:
    case ErrorCode::LabelOutOfRange:
    case ErrorCode::EmptyDataset:
      return kDataError;
    default:
      return kRuntimeError;
  }
}

namespace {

struct Globals {
  std::string output_root;
  bool force = false;
  std::size_t workers = 0;
  bool strict = false;
};

struct TargetArgs {
  std::string name = "bell";
  int n = 0;
  std::string file;

  void add(CLI::App* cmd) {
    cmd->add_option("--target", name, "Named target state (bell, w, ghz, dicke, cluster, cring, c23, basis0)")
        ->capture_default_str();
    cmd->add_option("--n", n, "Qubit count (defaults to the target's smallest size)");
    cmd->add_option("--target-file", file, "JSON file with target amplitudes [[re, im], ...]");
  }
};

struct FeatureArgs {
  std::string mode = "probs";
  int max_identities = 4;
  std::uint64_t shots = 10000;
  std::string strategy = "greedy";

  void add(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "Features: probs (outcome probabilities) or paulis")->capture_default_str();
    cmd->add_option("--max-identities", max_identities, "Sub-Pauli identity limit for paulis mode")
        ->capture_default_str();
    cmd->add_option("--shots", shots, "Poisson shots per setting (0 = exact)")->capture_default_str();
    cmd->add_option("--strategy", strategy, "Setting selection: greedy or top-abs")->capture_default_str();
  }
};

struct TrainArgs {
  std::size_t epochs = 150;
  std::size_t batch = 256;
  double lr = 1e-3;
  std::vector<std::size_t> hidden{128, 64};
  std::size_t patience = 20;
  std::uint64_t seed = 1;

  void add(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs)->capture_default_str();
    cmd->add_option("--batch", batch)->capture_default_str();
    cmd->add_option("--lr", lr)->capture_default_str();
    cmd->add_option("--hidden", hidden, "Hidden layer widths, comma separated")->delimiter(',')->capture_default_str();
    cmd->add_option("--patience", patience, "Early-stop patience in epochs")->capture_default_str();
    cmd->add_option("--train-seed", seed, "Initialization and shuffling seed")->capture_default_str();
  }

  nn::TrainConfig config() const {
    nn::TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch;
    c.learning_rate = lr;
    c.hidden = hidden;
    c.patience = patience;
    c.seed = seed;
    return c;
  }
};

std::string default_id(NamedState kind, int n) {
  std::string id(to_string(kind));
  return kind == NamedState::Bell ? id : id + std::to_string(n);
}

int smallest_size(NamedState kind) {
  switch (kind) {
    case NamedState::Bell: return 2;
    case NamedState::W: return 2;
    case NamedState::GHZ: return 3;
    case NamedState::Dicke: return 4;
    case NamedState::Cluster: return 4;
    case NamedState::CRing: return 5;
    case NamedState::C23: return 6;
    case NamedState::Basis0: return 1;
  }
  return 1;
}

template <typename T>
T require(std::optional<T> v, std::string_view what, std::string_view value) {
  if (!v) fail(ErrorCode::InvalidArgument, "unknown " + std::string(what) + " '" + std::string(value) + "'");
  return *v;
}

class Runner {
 public:
  Runner(const Globals& g, std::ostream& out) : g_(g), out_(out) {
    if (!g.output_root.empty()) {
      root_ = g.output_root;
    } else if (const char* env = std::getenv("FIDNET_OUTPUT_ROOT"); env && *env) {
      root_ = env;
    } else {
      root_ = ".";
    }
  }

  fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : root_ / path;
  }

  /// Refuses to overwrite without --force and creates parent directories.
  fs::path output(const std::string& p, std::initializer_list<std::string_view> suffixes = {""}) {
    const fs::path path = resolve(p);
    for (auto s : suffixes) {
      fs::path probe = path;
      probe += s;
      if (fs::exists(probe) && !g_.force) {
        fail(ErrorCode::InvalidArgument, probe.string() + " exists; pass --force to overwrite");
      }
      outputs_.push_back(probe);
    }
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    return path;
  }

  std::size_t workers() const { return g_.strict ? 1 : g_.workers; }

  data::Target target(const TargetArgs& t) const {
    if (!t.file.empty()) {
      std::ifstream in(resolve(t.file));
      if (!in) fail(ErrorCode::IoError, "cannot open target file " + t.file);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        fail(ErrorCode::IoError, std::string("unreadable target file: ") + e.what());
      }
      const json& amps = j.is_object() ? j.at("amplitudes") : j;
      CVector v(static_cast<Eigen::Index>(amps.size()));
      for (std::size_t i = 0; i < amps.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = {amps[i].at(0).get<double>(), amps[i].at(1).get<double>()};
      }
      int n = 0;
      while ((std::size_t{1} << n) < amps.size()) ++n;
      if ((std::size_t{1} << n) != amps.size() || n < 1) {
        fail(ErrorCode::InvalidArgument, "target length must be a power of two");
      }
      const std::string id = j.is_object() && j.contains("id") ? j["id"].get<std::string>()
                                                              : fs::path(t.file).stem().string();
      return {id, StateVector(n, v)};
    }
    const NamedState kind = require(parse_named_state(t.name), "target", t.name);
    const int n = t.n > 0 ? t.n : smallest_size(kind);
    return {default_id(kind, n), named_state(kind, n)};
  }

  data::FeatureSpec features(const FeatureArgs& f, const data::Target& target, std::size_t k) const {
    data::FeatureSpec spec;
    spec.mode = require(data::parse_feature_mode(f.mode), "feature mode", f.mode);
    spec.max_identities = f.max_identities;
    spec.shots = f.shots;
    spec.plan = plan::select_settings(target.state, target.id, k,
                                      require(plan::parse_strategy(f.strategy), "strategy", f.strategy));
    return spec;
  }

  /// Writes <primary>.run.ini: the resolved configuration, loadable with --config.
  void manifest(const CLI::App& app, const std::string& command, const fs::path& primary) {
    fs::path path = primary;
    path += ".run.ini";
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
    out << "# fidnet run manifest\n# command: " << command << '\n';
    for (const auto& o : outputs_) {
      if (!fs::is_regular_file(o)) continue;
      std::ifstream in(o, std::ios::binary);
      std::ostringstream bytes;
      bytes << in.rdbuf();
      out << "# output " << o.generic_string() << " fnv1a=" << data::fnv1a_hex(bytes.str()) << '\n';
    }
    // Global options, then the executed subcommand as a section so that
    // --config on this file replays the run.
    std::istringstream globals(app.config_to_str(true, false));
    for (std::string line; std::getline(globals, line);) {
      if (!line.empty() && line[0] == '[') break;
      const auto eq = line.find('=');
      if (eq == std::string::npos || line.compare(0, 6, "force=") == 0) continue;
      if (line.substr(0, eq).find('.') != std::string::npos) continue;
      out << line << '\n';
    }
    out << '[' << command << "]\n" << app.get_subcommand(command)->config_to_str(true, false);
  }

  std::ostream& out() { return out_; }

 private:
  const Globals& g_;
  std::ostream& out_;
  fs::path root_;
  std::vector<fs::path> outputs_;
};

AnyState prepared_state(const data::Target& target, double f, const std::string& kind_name,
                        const std::string& m1_name, std::uint64_t seed) {
  gen::GeneratorSpec spec;
  spec.n = target.state.n();
  spec.fidelity = f;
  spec.kind = require(gen::parse_state_kind(kind_name), "state kind", kind_name);
  spec.m1_dist = require(gen::parse_m1_dist(m1_name), "m1 distribution", m1_name);
  spec.validate();
  RngStream rng(seed, 0);
  return gen::transport_state(householder_target_unitary(target.state), gen::generate(spec, rng));
}

data::BinningScheme binning(const std::string& id) {
  return data::make_binning(require(data::parse_bin_preset(id), "binning preset", id));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"fidnet: neural-network fidelity estimation at desk scale"};
  app.set_config("--config", "", "Key-value configuration file (flags override file values)");
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--output-root", g.output_root, "Base directory for relative paths (env FIDNET_OUTPUT_ROOT)");
  app.add_flag("--force", g.force, "Overwrite existing outputs");
  app.add_option("--workers", g.workers, "Worker threads for generation (0 = all cores)");
  app.add_flag("--strict-deterministic", g.strict, "Single worker and fixed-order reductions");

  // select
  auto* sel = app.add_subcommand("select", "Choose measurement settings for a target");
  sel->configurable();
  TargetArgs sel_t;
  sel_t.add(sel);
  std::size_t sel_k = 0;
  std::string sel_strategy = "greedy";
  std::string sel_out;
  sel->add_option("--k", sel_k, "Number of settings")->required();
  sel->add_option("--strategy", sel_strategy)->capture_default_str();
  sel->add_option("--out", sel_out, "Plan file (default select/<target>_k<k>.plan.json)");

  // gen-data
  auto* gd = app.add_subcommand("gen-data", "Generate a labeled dataset");
  gd->configurable();
  TargetArgs gd_t;
  gd_t.add(gd);
  FeatureArgs gd_f;
  gd_f.add(gd);
  std::size_t gd_k = 7;
  std::string gd_bins = "L122", gd_kind = "mixed", gd_m1 = "H", gd_out;
  std::size_t gd_train = 200, gd_val = 50;
  std::uint64_t gd_seed = 1;
  gd->add_option("--k", gd_k, "Settings in the plan")->capture_default_str();
  gd->add_option("--binning", gd_bins, "L66, L122 or L234")->capture_default_str();
  gd->add_option("--kind", gd_kind, "pure or mixed")->capture_default_str();
  gd->add_option("--m1", gd_m1, "Leading-weight distribution A..I")->capture_default_str();
  gd->add_option("--train", gd_train, "Training records per label")->capture_default_str();
  gd->add_option("--val", gd_val, "Validation records per label")->capture_default_str();
  gd->add_option("--seed", gd_seed, "Root seed")->capture_default_str();
  gd->add_option("--out", gd_out, "Output base path (writes .csv and .manifest.json)")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train a classifier on a dataset");
  tr->configurable();
  std::string tr_data, tr_out;
  std::size_t tr_k = 0;
  TrainArgs tr_a;
  tr_a.add(tr);
  tr->add_option("--data", tr_data, "Dataset base path")->required();
  tr->add_option("--k", tr_k, "Use the first k settings (default: all)");
  tr->add_option("--out", tr_out, "Model file")->required();

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Calibrate error bars on validation data");
  cal->configurable();
  std::string cal_model, cal_data, cal_out, cal_registry, cal_point = "argmax";
  std::size_t cal_k = 0;
  std::vector<double> cal_deltas{0.01, 0.05, 0.1, 0.5};
  double cal_band = 0.05;
  cal->add_option("--model", cal_model)->required();
  cal->add_option("--data", cal_data, "Dataset base path (validation split is used)")->required();
  cal->add_option("--k", cal_k, "Settings used by the model (default: all)");
  cal->add_option("--deltas", cal_deltas)->delimiter(',')->capture_default_str();
  cal->add_option("--band-width", cal_band)->capture_default_str();
  cal->add_option("--point", cal_point, "argmax or weighted-mean")->capture_default_str();
  cal->add_option("--out", cal_out, "Calibration file")->required();
  cal->add_option("--registry", cal_registry, "Registry file to add this model to");

  // predict
  auto* pr = app.add_subcommand("predict", "Predict fidelities for a dataset");
  pr->configurable();
  std::string pr_model, pr_data, pr_out;
  std::size_t pr_k = 0;
  pr->add_option("--model", pr_model)->required();
  pr->add_option("--data", pr_data)->required();
  pr->add_option("--k", pr_k, "Settings used by the model (default: all)");
  pr->add_option("--out", pr_out, "Predictions CSV")->required();

  // certify
  auto* ce = app.add_subcommand("certify", "Adaptive threshold certification of a prepared state");
  ce->configurable();
  std::string ce_registry, ce_out, ce_kind = "mixed", ce_m1 = "H";
  TargetArgs ce_t;
  ce_t.add(ce);
  double ce_f = 0.99;
  std::uint64_t ce_seed = 1;
  est::CertifyConfig ce_c;
  ce->add_option("--registry", ce_registry)->required();
  ce->add_option("--state-fidelity", ce_f, "True fidelity of the prepared state")->capture_default_str();
  ce->add_option("--state-kind", ce_kind)->capture_default_str();
  ce->add_option("--state-m1", ce_m1)->capture_default_str();
  ce->add_option("--state-seed", ce_seed)->capture_default_str();
  ce->add_option("--threshold", ce_c.threshold)->capture_default_str();
  ce->add_option("--delta", ce_c.delta)->capture_default_str();
  ce->add_option("--eps-target", ce_c.epsilon_target)->capture_default_str();
  ce->add_option("--k-min", ce_c.k_min)->capture_default_str();
  ce->add_option("--k-max", ce_c.k_max)->capture_default_str();
  ce->add_option("--out", ce_out, "Transcript (JSON lines)")->required();

  // benchmark
  auto* be = app.add_subcommand("benchmark", "Desk-scale experiment suites");
  be->configurable();
  std::string be_suite, be_dir = "bench", be_bins = "L122";
  TargetArgs be_t;
  be_t.add(be);
  FeatureArgs be_f;
  be_f.add(be);
  TrainArgs be_a;
  be_a.add(be);
  pipe::DeskConfig desk = pipe::DeskConfig::bell();
  std::vector<std::uint64_t> be_noise{1000, 10000, 100000};
  std::vector<std::string> be_labels{"L66", "L122", "L234"};
  std::vector<int> be_ns{2, 3, 4};
  int be_gen_n = 4, be_anchors = 20, be_states = 1000, be_bins_hist = 50;
  double be_gen_f = 0.25;
  be->add_option("--suite", be_suite)
      ->required()
      ->check(CLI::IsMember({"acc_vs_k", "eps_vs_F", "noise_sweep", "label_sweep", "scaling", "uniformity", "purity"}));
  be->add_option("--out-dir", be_dir)->capture_default_str();
  be->add_option("--binning", be_bins)->capture_default_str();
  be->add_option("--k-min", desk.k_min)->capture_default_str();
  be->add_option("--k-max", desk.k_max)->capture_default_str();
  be->add_option("--train", desk.per_label_train)->capture_default_str();
  be->add_option("--val", desk.per_label_val)->capture_default_str();
  be->add_option("--seeds", desk.seeds)->delimiter(',')->capture_default_str();
  be->add_option("--noise-shots", be_noise)->delimiter(',')->capture_default_str();
  be->add_option("--labels", be_labels)->delimiter(',')->capture_default_str();
  be->add_option("--ns", be_ns)->delimiter(',')->capture_default_str();
  be->add_option("--gen-n", be_gen_n, "Qubits for uniformity/purity")->capture_default_str();
  be->add_option("--gen-f", be_gen_f, "Fidelity for uniformity/purity")->capture_default_str();
  be->add_option("--states", be_states, "States for uniformity/purity")->capture_default_str();
  be->add_option("--anchors", be_anchors)->capture_default_str();
  be->add_option("--hist-bins", be_bins_hist)->capture_default_str();

  // baseline
  auto* ba = app.add_subcommand("baseline", "Settings cost of DFE and QST");
  ba->configurable();
  std::string ba_method, ba_out, ba_kind = "mixed", ba_m1 = "H";
  TargetArgs ba_t;
  ba_t.add(ba);
  est::DfeConfig ba_c;
  std::uint64_t ba_cap = 10000;
  double ba_f = 0.9;
  std::size_t ba_repeats = 50;
  std::uint64_t ba_seed = 1;
  ba->add_option("method", ba_method, "dfe or qst")->required()->check(CLI::IsMember({"dfe", "qst"}));
  ba->add_option("--epsilon", ba_c.epsilon)->capture_default_str();
  ba->add_option("--delta", ba_c.delta)->capture_default_str();
  ba->add_option("--cap", ba_cap, "Cap on sampled Paulis (0 = none)")->capture_default_str();
  ba->add_option("--shots", ba_c.shots, "Repetitions per sampled Pauli (0 = exact)")->capture_default_str();
  ba->add_option("--state-fidelity", ba_f)->capture_default_str();
  ba->add_option("--state-kind", ba_kind)->capture_default_str();
  ba->add_option("--state-m1", ba_m1)->capture_default_str();
  ba->add_option("--repeats", ba_repeats, "Independent DFE runs")->capture_default_str();
  ba->add_option("--seed", ba_seed)->capture_default_str();
  ba->add_option("--out", ba_out, "Comparison CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    if (g.strict) Eigen::setNbThreads(1);
    Runner r(g, out);

    if (*sel) {
      const data::Target t = r.target(sel_t);
      const auto strategy = require(plan::parse_strategy(sel_strategy), "strategy", sel_strategy);
      const plan::SettingPlan p = plan::select_settings(t.state, t.id, sel_k, strategy);
      const fs::path plan_path =
          r.output(sel_out.empty() ? "select/" + t.id + "_k" + std::to_string(sel_k) + ".plan.json" : sel_out);
      fs::path report_path = plan_path;
      report_path += ".report.csv";
      r.output(report_path.string());

      std::vector<std::string> letters;
      for (const auto& s : p.settings) letters.push_back(s.letters());
      const json pj{{"target_id", p.target_id},
                    {"strategy", std::string(plan::to_string(p.strategy))},
                    {"settings", letters},
                    {"captured_weight", p.captured_weight}};
      write_text(plan_path, pj.dump(2) + "\n");

      std::optional<plan::FixtureRow> fixture;
      if (sel_t.file.empty()) fixture = plan::published_settings(*parse_named_state(sel_t.name), t.state.n());
      std::vector<plan::MeasurementSetting> fx;
      std::vector<double> fx_w;
      if (fixture) {
        fx = plan::parse_setting_list(fixture->settings);
        fx_w = plan::captured_weights(plan::pauli_weights(t.state), fx);
      }
      std::ostringstream rep;
      rep << "position,setting,captured_weight,fixture_setting,fixture_captured_weight\n";
      for (std::size_t i = 0; i < p.size(); ++i) {
        rep << i + 1 << ',' << p.settings[i].letters() << ',' << data::format_real(p.captured_weight[i]) << ',';
        if (i < fx.size()) rep << fx[i].letters() << ',' << data::format_real(fx_w[i]);
        else rep << ',';
        rep << '\n';
      }
      write_text(report_path, rep.str());
      out << "target " << t.id << " plan " << p.describe() << " captured "
          << data::format_real(p.captured_weight.back()) << '\n';
      if (fixture) out << "fixture " << fixture->settings << '\n';
      r.manifest(app, "select", plan_path);
    } else if (*gd) {
      data::BuildConfig b;
      b.target = r.target(gd_t);
      b.features = r.features(gd_f, b.target, gd_k);
      b.binning = binning(gd_bins);
      b.kind = require(gen::parse_state_kind(gd_kind), "state kind", gd_kind);
      b.m1_dist = require(gen::parse_m1_dist(gd_m1), "m1 distribution", gd_m1);
      if (b.m1_dist == gen::M1Dist::E && b.kind != gen::StateKind::Pure) {
        fail(ErrorCode::InvalidArgument, "distribution E requires --kind pure");
      }
      b.per_label_train = gd_train;
      b.per_label_val = gd_val;
      b.root_seed = gd_seed;
      b.workers = r.workers();
      const fs::path base = r.output(gd_out, {".csv", ".manifest.json"});
      const data::Dataset ds = data::build_dataset(b);
      data::save_dataset(ds, base);
      out << "wrote " << ds.train.size() << " train and " << ds.val.size() << " validation records, "
          << ds.manifest.features.feature_count() << " features, plan " << ds.manifest.features.plan.describe()
          << '\n';
      fs::path m = base;
      m += ".csv";
      r.manifest(app, "gen-data", m);
    } else if (*tr) {
      data::Dataset ds = data::load_dataset(r.resolve(tr_data));
      if (tr_k) ds = ds.prefix(tr_k);
      const fs::path model_path = r.output(tr_out, {"", ".history.csv"});
      const nn::TrainResult res = nn::train(ds, tr_a.config());
      nn::save_model(res.model, model_path);
      std::ostringstream hist;
      hist << "epoch,loss,val_acc_pm1\n";
      for (const auto& e : res.history) {
        hist << e.epoch << ',' << data::format_real(e.loss) << ',' << data::format_real(e.val_accuracy) << '\n';
      }
      fs::path hp = model_path;
      hp += ".history.csv";
      write_text(hp, hist.str());
      out << "best epoch " << res.best_epoch << " of " << res.history.size() << ", val +-1% accuracy "
          << fmt(nn::accuracy_pm(res.model, ds.val, 0.01), 4) << '\n';
      r.manifest(app, "train", model_path);
    } else if (*cal) {
      const nn::MLPModel model = nn::load_model(r.resolve(cal_model));
      data::Dataset ds = data::load_dataset(r.resolve(cal_data));
      const std::size_t k = cal_k ? cal_k : ds.manifest.features.plan.size();
      ds = ds.prefix(k);
      if (model.layout_hash != ds.manifest.features.layout_hash()) {
        fail(ErrorCode::LayoutMismatch, "model was trained on a different feature layout");
      }
      if (ds.val.empty()) fail(ErrorCode::EmptyDataset, "dataset has no validation split");
      est::CalibrationOptions opt;
      opt.band_width = cal_band;
      opt.point = require(est::parse_point_estimate(cal_point), "point estimate", cal_point);
      const fs::path cal_path = r.output(cal_out);
      const est::CalibrationTable table =
          est::calibrate(model, ds.val, cal_deltas, fs::path(cal_model).stem().string(), opt);
      est::save_calibration(table, cal_path);
      for (double d : table.deltas) {
        out << "delta " << d << ": mean epsilon " << fmt(table.mean_epsilon(d), 4) << '\n';
      }
      if (!cal_registry.empty()) {
        const fs::path reg_path = r.resolve(cal_registry);
        est::ModelRegistry reg = fs::exists(reg_path) ? est::ModelRegistry::load(reg_path) : est::ModelRegistry{};
        est::RegistryEntry e;
        e.k = k;
        e.features = ds.manifest.features;
        e.model_path = r.resolve(cal_model);
        e.calibration_path = cal_path;
        e.model = std::make_shared<const nn::MLPModel>(model);
        e.calibration = std::make_shared<const est::CalibrationTable>(table);
        reg.add(ds.manifest.target_id, std::move(e));
        if (reg_path.has_parent_path()) fs::create_directories(reg_path.parent_path());
        reg.save(reg_path);
        out << "registered " << ds.manifest.target_id << " k=" << k << " in " << reg_path.string() << '\n';
      }
      r.manifest(app, "calibrate", cal_path);
    } else if (*pr) {
      const nn::MLPModel model = nn::load_model(r.resolve(pr_model));
      data::Dataset ds = data::load_dataset(r.resolve(pr_data));
      if (pr_k) ds = ds.prefix(pr_k);
      if (model.layout_hash != ds.manifest.features.layout_hash() ||
          model.binning.edges != ds.manifest.binning.edges) {
        fail(ErrorCode::LayoutMismatch, "model and dataset layouts differ");
      }
      const fs::path path = r.output(pr_out);
      std::ostringstream csv;
      csv << "split,index,true_fidelity,label,predicted_bin,f_tilde\n";
      for (const auto* part : {&ds.train, &ds.val}) {
        const auto bins = nn::predict_bins(model, *part);
        for (std::size_t i = 0; i < part->size(); ++i) {
          csv << (part == &ds.train ? "train" : "val") << ',' << i << ','
              << data::format_real((*part)[i].true_fidelity) << ',' << (*part)[i].label << ',' << bins[i] << ','
              << data::format_real(model.binning.midpoint(bins[i])) << '\n';
        }
      }
      write_text(path, csv.str());
      out << "val +-1% accuracy " << fmt(nn::accuracy_pm(model, ds.val, 0.01), 4) << '\n';
      r.manifest(app, "predict", path);
    } else if (*ce) {
      const est::ModelRegistry reg = est::ModelRegistry::load(r.resolve(ce_registry));
      const data::Target t = r.target(ce_t);
      const fs::path path = r.output(ce_out);
      est::StateMeasurer m(prepared_state(t, ce_f, ce_kind, ce_m1, ce_seed), ce_seed);
      const est::Decision d = est::adaptive_certify(reg, t.id, m, ce_c);
      std::ostringstream lines;
      est::write_transcript(d, lines);
      write_text(path, lines.str());
      out << "verdict " << est::to_string(d.verdict) << " at k=" << d.k << ": F~ = " << fmt(d.f_tilde, 4)
          << " +- " << fmt(d.epsilon, 4) << " (1-delta = " << 1.0 - d.delta << ")\n";
      r.manifest(app, "certify", path);
    } else if (*be) {
      desk.target = r.target(be_t);
      desk.binning = binning(be_bins);
      desk.mode = require(data::parse_feature_mode(be_f.mode), "feature mode", be_f.mode);
      desk.max_identities = be_f.max_identities;
      desk.shots = be_f.shots;
      desk.strategy = require(plan::parse_strategy(be_f.strategy), "strategy", be_f.strategy);
      desk.train = be_a.config();
      desk.workers = r.workers();
      const fs::path csv = r.output((fs::path(be_dir) / (be_suite + ".csv")).string());
      if (be_suite == "acc_vs_k" || be_suite == "eps_vs_F") {
        const pipe::AccVsK res = pipe::run_acc_vs_k(desk);
        if (be_suite == "acc_vs_k") pipe::write_acc_vs_k(res, csv);
        else pipe::write_eps_vs_f(res, csv);
        for (std::size_t k = desk.k_min; k <= desk.k_max; ++k) {
          out << "k=" << k << " accuracy " << fmt(res.mean_accuracy(k), 4) << " mean epsilon "
              << fmt(res.mean_epsilon(k), 4) << '\n';
        }
        out << "Wilcoxon W+ " << res.trend.w_plus << " p(increase) " << fmt(res.trend.p_increase, 4) << '\n';
      } else if (be_suite == "noise_sweep") {
        const auto rows = pipe::run_noise_sweep(desk, be_noise, desk.k_max);
        pipe::write_noise_sweep(rows, csv);
      } else if (be_suite == "label_sweep") {
        std::vector<data::BinPreset> presets;
        for (const auto& l : be_labels) presets.push_back(require(data::parse_bin_preset(l), "binning preset", l));
        pipe::write_label_sweep(pipe::run_label_sweep(desk, presets, desk.k_max), csv);
      } else if (be_suite == "scaling") {
        pipe::write_scaling(pipe::run_scaling(desk, be_ns), csv);
      } else if (be_suite == "uniformity") {
        pipe::write_uniformity(be_gen_n, be_gen_f, static_cast<std::size_t>(be_states),
                               static_cast<std::size_t>(be_anchors), static_cast<std::size_t>(be_bins_hist),
                               desk.seeds.front(), csv);
      } else {
        pipe::write_purity(be_gen_n, be_gen_f, static_cast<std::size_t>(be_states),
                           static_cast<std::size_t>(be_bins_hist), desk.seeds.front(), csv);
      }
      out << "wrote " << csv.string() << '\n';
      r.manifest(app, "benchmark", csv);
    } else if (*ba) {
      const data::Target t = r.target(ba_t);
      const fs::path path = r.output(ba_out);
      std::ostringstream csv;
      csv << "method,n,epsilon,delta,settings_required,settings_used,capped,true_fidelity,mean_f_hat,"
             "mean_f2_hat,f2_standard_error,resamples\n";
      const int n = t.state.n();
      if (ba_method == "dfe") {
        const AnyState state = prepared_state(t, ba_f, ba_kind, ba_m1, ba_seed);
        const double truth = fidelity_to_pure(t.state, state);
        ba_c.cap = ba_cap ? std::optional<std::uint64_t>(ba_cap) : std::nullopt;
        std::vector<double> f2;
        double fsum = 0.0;
        est::DfeResult last;
        std::uint64_t resamples = 0;
        for (std::size_t i = 0; i < ba_repeats; ++i) {
          RngStream rng(ba_seed, 1000 + i);
          last = est::dfe_baseline(t.state, state, ba_c, rng);
          f2.push_back(last.f2_hat);
          fsum += last.f_hat;
          resamples += last.resamples;
        }
        const double mean = std::accumulate(f2.begin(), f2.end(), 0.0) / static_cast<double>(f2.size());
        double var = 0.0;
        for (double x : f2) var += (x - mean) * (x - mean);
        const double se = f2.size() > 1 ? std::sqrt(var / static_cast<double>(f2.size() - 1) /
                                                     static_cast<double>(f2.size()))
                                        : 0.0;
        csv << "dfe," << n << ',' << data::format_real(ba_c.epsilon) << ',' << data::format_real(ba_c.delta) << ','
            << last.samples_required << ',' << last.samples_used << ',' << (last.capped ? 1 : 0) << ','
            << data::format_real(truth) << ',' << data::format_real(fsum / static_cast<double>(f2.size())) << ','
            << data::format_real(mean) << ',' << data::format_real(se) << ',' << resamples << '\n';
        out << "DFE needs " << last.samples_required << " Pauli settings (used " << last.samples_used
            << "); mean F^2 " << fmt(mean) << " +- " << fmt(se) << " vs true " << fmt(truth * truth) << '\n';
      }
      csv << "qst," << n << ",,," << est::qst_settings_count(n) << ',' << est::qst_settings_count(n) << ",0,,,,,\n";
      out << "QST needs " << est::qst_settings_count(n) << " settings for n=" << n << '\n';
      write_text(path, csv.str());
      r.manifest(app, "baseline", path);
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error [IoError]: " << e.what() << '\n';
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    err << "error [SchemaMismatch]: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace fidnet::cli
