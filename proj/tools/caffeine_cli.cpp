// Copyright 2026 The caffeine Authors
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


// Command-line driver for the experiments.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "caffeine/certify.hpp"
#include "caffeine/csv.hpp"
#include "caffeine/harness.hpp"
#include "caffeine/regression.hpp"

namespace fs = std::filesystem;
using namespace caffeine;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNumeric = 3 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> methods;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON experiment config")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  app->add_option("--out", c.out, "output directory (overrides the config)");
  app->add_option("--method", c.methods, "method name; repeatable");
  app->add_option("--threads", c.threads, "worker threads, 0 for all cores");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.out_dir = c.out;
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::string path_in(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

Dataset rows_of(const Dataset& d, const std::vector<Index>& rows) { return d.subset(rows); }

Dataset load_or_collect(const ExperimentConfig& cfg, const std::string& data_path) {
  if (!data_path.empty()) return read_dataset_csv(data_path);
  std::cerr << "collecting grid data\n";
  return collect_grid_data(cfg).data;
}

int cmd_collect(const ExperimentConfig& cfg, bool write_trajectories) {
  const GridData g = collect_grid_data(cfg);
  write_dataset_csv(g.data, path_in(cfg, "dataset.csv"));
  const auto [tr, te] = shuffled_split(g.data.size(), cfg.train_fraction, cfg.seed);
  write_dataset_csv(rows_of(g.data, tr), path_in(cfg, "train.csv"));
  write_dataset_csv(rows_of(g.data, te), path_in(cfg, "test.csv"));
  if (write_trajectories) {
    fs::create_directories(path_in(cfg, "trajectories"));
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "trajectories/traj_%03zu.csv", i);
      write_trajectory_csv(g.trajectories[i], path_in(cfg, name));
    }
  }
  write_manifest(cfg, "collect", path_in(cfg, "manifest.json"));
  std::printf("trajectories %zu  excluded %d  samples %lld  train %zu  test %zu\n",
              g.trajectories.size(), g.excluded, static_cast<long long>(g.data.size()), tr.size(),
              te.size());
  return kOk;
}

void save_benchmark_models(const ExperimentConfig& cfg, const Dataset& train,
                           const std::vector<BenchmarkRecord>& records, const std::string& dir) {
  fs::create_directories(dir);
  for (const auto& r : records) {
    if (!r.ok) continue;
    ModelRecord rec;
    rec.family = "ridge";
    rec.lambda = cfg.lambda;
    rec.train = train.samples;
    rec.z = train.z;
    rec.seed = r.seed;
    if (is_kernel_method(r.method)) {
      const KernelSpec spec = kernel_for_method(r.method, train.samples.input_dim(), cfg.gamma);
      rec.kernel = true;
      rec.variant = spec.variant;
      rec.gammas = spec.gammas;
    } else {
      if (r.trial != 0 || r.feature_dim != cfg.feature_dims.back()) continue;
      rec.kernel = false;
      rec.variant = variant_for_method(r.method) == Variant::ADP ? KernelVariant::ADP
                                                                   : KernelVariant::AD;
      rec.gammas.assign(static_cast<std::size_t>(train.samples.input_dim() + 1), cfg.gamma);
      rec.feature_dim = r.feature_dim;
    }
    save_model(rec, (fs::path(dir) / (r.method + ".json")).string());
  }
}

int cmd_predict(ExperimentConfig cfg, const std::vector<std::string>& methods,
                const std::string& data_path, const std::string& models_dir) {
  if (!methods.empty()) cfg.methods = methods;
  cfg.validate();
  const Dataset data = load_or_collect(cfg, data_path);
  const auto [tr, te] = shuffled_split(data.size(), cfg.train_fraction, cfg.seed);
  const Dataset train = rows_of(data, tr), test = rows_of(data, te);
  const auto records = run_prediction_benchmark(cfg, train, test);
  write_benchmark_csv(records, path_in(cfg, "prediction_bench.csv"));
  if (!models_dir.empty()) save_benchmark_models(cfg, train, records, models_dir);
  write_manifest(cfg, "predict-bench", path_in(cfg, "manifest.json"));
  for (const auto& m : cfg.methods) {
    if (is_kernel_method(m)) {
      const auto s = select(records, m, 2, 0);
      if (!s.empty()) std::printf("%-10s rmse %.5f  train %.2fs\n", m.c_str(), s[0].rmse, s[0].train_seconds);
      continue;
    }
    for (Index D : cfg.feature_dims) {
      const auto s = select(records, m, 2, D);
      if (s.empty()) continue;
      std::vector<double> rm, t;
      for (const auto& r : s) {
        rm.push_back(r.rmse);
        t.push_back(r.train_seconds);
      }
      const Quartiles q = quartiles(rm);
      std::printf("%-10s D %5lld  rmse %.5f [%.5f, %.5f]  train %.3fs\n", m.c_str(),
                  static_cast<long long>(D), q.median, q.q1, q.q3, quartiles(t).median);
    }
  }
  return kOk;
}

void write_series(const std::string& path, const EpisodicResult& r, const CLFSpec& clf) {
  CsvWriter out(path, {"episode", "train_size", "k", "C"});
  auto emit = [&](int e, Index n, const std::vector<double>& series) {
    for (std::size_t k = 0; k < series.size(); ++k)
      out.row({static_cast<double>(e), static_cast<double>(n), static_cast<double>(k), series[k]});
  };
  for (const auto& ep : r.episodes) emit(ep.episode, ep.train_size, ep.clf_series);
  emit(static_cast<int>(r.episodes.size()), r.final_train_size, clf_series(clf, r.final_run));
}

int cmd_episodic(ExperimentConfig cfg, const std::vector<std::string>& methods,
                 const std::string& data_path) {
  if (!methods.empty()) cfg.episodic_methods = methods;
  cfg.validate();
  const Dataset data = load_or_collect(cfg, data_path);
  const Eigen::Vector4d x0(cfg.x0[0], cfg.x0[1], cfg.x0[2], cfg.x0[3]);
  const double c0 = clf_value(cfg.clf, x0);
  for (const auto& [name, ctl] : {std::pair{std::string("oracle"), oracle_controller(cfg)},
                                  std::pair{std::string("nominal"), nominal_controller(cfg)}}) {
    const Trajectory t = simulate(cfg.truth, ctl, x0, cfg.episode_duration, cfg.rate);
    write_trajectory_csv(t, path_in(cfg, "reference_" + name + ".csv"));
    const double cT = t.ok() ? clf_value(cfg.clf, t.final_state) : NAN;
    std::printf("%-8s C(T)/C(0) %.4g  (%s)\n", name.c_str(), cT / c0, to_string(t.status).c_str());
  }
  int status = kOk;
  for (const auto& m : cfg.episodic_methods) {
    const EpisodicResult r = run_episodic_loop(cfg, m, data);
    write_series(path_in(cfg, "episodic_" + m + ".csv"), r, cfg.clf);
    write_trajectory_csv(r.final_run, path_in(cfg, "final_" + m + ".csv"));
    std::printf("%-8s C(T)/C(0) %.4g  train size %lld  (%s)\n", m.c_str(), r.final_clf / c0,
                static_cast<long long>(r.final_train_size), to_string(r.final_run.status).c_str());
  }
  write_manifest(cfg, "episodic", path_in(cfg, "manifest.json"));
  return status;
}

int cmd_synthetic(const ExperimentConfig& cfg) {
  const auto records = run_synthetic_benchmark(cfg);
  write_benchmark_csv(records, path_in(cfg, "synthetic_bench.csv"));
  write_manifest(cfg, "synthetic-bench", path_in(cfg, "manifest.json"));
  for (int m : cfg.synthetic_inputs)
    for (const std::string method : {"ADP-RF", "AD-RF"}) {
      std::vector<double> rm, t;
      Index cd = 0;
      for (const auto& r : records)
        if (r.ok && r.method == method && r.input_dim == m &&
            r.compound_dim >= cd) {
          if (r.compound_dim > cd) {
            rm.clear();
            t.clear();
            cd = r.compound_dim;
          }
          rm.push_back(r.rmse);
          t.push_back(r.train_seconds);
        }
      if (rm.empty()) continue;
      std::printf("m %2d  %-7s compound %5lld  median rmse %.4f  mean train %.4fs\n", m,
                  method.c_str(), static_cast<long long>(cd), quartiles(rm).median,
                  std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size()));
    }
  return kOk;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& controller,
                 const std::vector<double>& x0v, double duration) {
  Controller ctl;
  if (controller == "oracle") ctl = oracle_controller(cfg);
  else if (controller == "nominal") ctl = nominal_controller(cfg);
  else if (controller == "desired") ctl = desired_controller(cfg);
  else if (controller == "zero") ctl = [](const Eigen::VectorXd&, double) -> Eigen::VectorXd { return Eigen::Vector2d::Zero(); };
  else throw ConfigError("unknown controller '" + controller + "'");
  Eigen::Vector4d x0(cfg.x0[0], cfg.x0[1], cfg.x0[2], cfg.x0[3]);
  if (!x0v.empty()) {
    if (x0v.size() != 4) throw ConfigError("--x0 needs 4 values");
    x0 = Eigen::Vector4d(x0v[0], x0v[1], x0v[2], x0v[3]);
  }
  const Trajectory t = simulate(cfg.truth, ctl, x0, duration > 0 ? duration : cfg.episode_duration, cfg.rate);
  write_trajectory_csv(t, path_in(cfg, "trajectory_" + controller + ".csv"));
  write_manifest(cfg, "simulate", path_in(cfg, "manifest.json"));
  std::printf("%s: %zu samples, status %s, C(x0) %.6g, C(T) %.6g\n", controller.c_str(), t.size(),
              to_string(t.status).c_str(), clf_value(cfg.clf, x0),
              t.ok() ? clf_value(cfg.clf, t.final_state) : NAN);
  return t.ok() ? kOk : kNumeric;
}

int cmd_eval(const std::string& model_path, const std::string& data_path) {
  const ModelRecord rec = load_model(model_path);
  const Dataset data = read_dataset_csv(data_path);
  double err = 0.0;
  if (rec.family == "gp") {
    const GPModel gp = fit_gp(rec);
    VectorXd mu(data.size());
    for (Index i = 0; i < data.size(); ++i)
      mu(i) = gp_posterior(gp, data.samples.X.row(i).transpose(), data.samples.U.row(i).transpose()).mu;
    err = rmse(mu, data.z);
  } else {
    err = rmse(predict(fit_ridge(rec), data.samples), data.z);
  }
  std::printf("rmse %.17g\n", err);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caffeine: random-feature and kernel models for control-affine systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", library_version());

  Common common;
  auto* collect = app.add_subcommand("collect", "simulate the initial-condition grid and build the residual dataset");
  add_common(collect, common);
  bool no_traj = false;
  collect->add_flag("--no-trajectories", no_traj, "skip per-trajectory CSVs");

  auto* predict = app.add_subcommand("predict-bench", "prediction benchmark on the grid dataset");
  add_common(predict, common);
  std::string data_path, models_dir;
  predict->add_option("--data", data_path, "dataset CSV (default: collect)")->check(CLI::ExistingFile);
  predict->add_option("--save-models", models_dir, "directory for model records");

  auto* episodic = app.add_subcommand("episodic", "episodic closed-loop learning");
  add_common(episodic, common);
  episodic->add_option("--data", data_path, "grid dataset CSV (default: collect)")->check(CLI::ExistingFile);

  auto* synthetic = app.add_subcommand("synthetic-bench", "synthetic control-affine benchmark");
  add_common(synthetic, common);

  auto* sim = app.add_subcommand("simulate", "simulate one closed-loop run");
  add_common(sim, common);
  std::string controller = "oracle";
  std::vector<double> x0;
  double duration = 0.0;
  sim->add_option("--controller", controller, "oracle, nominal, desired or zero");
  sim->add_option("--x0", x0, "initial state (4 values)")->delimiter(',');
  sim->add_option("--duration", duration, "seconds (default: episode duration)");

  auto* eval = app.add_subcommand("eval", "refit a saved model record and report RMSE on a dataset");
  std::string model_path, eval_data;
  eval->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", eval_data, "dataset CSV")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*eval) return cmd_eval(model_path, eval_data);
    const ExperimentConfig cfg = resolve(common);
    if (*collect) return cmd_collect(cfg, !no_traj);
    if (*predict) return cmd_predict(cfg, common.methods, data_path, models_dir);
    if (*episodic) return cmd_episodic(cfg, common.methods, data_path);
    if (*synthetic) return cmd_synthetic(cfg);
    if (*sim) return cmd_simulate(cfg, controller, x0, duration);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
