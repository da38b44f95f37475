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


#include "caffeine/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "caffeine/csv.hpp"

namespace caffeine {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.3.1";
constexpr const char* kBenchComment = "caffeine-bench v1";

std::uint64_t task_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                        std::uint64_t c = 0, std::uint64_t d = 0) {
  return stream_seed(stream_seed(stream_seed(stream_seed(master, a), b), c), d);
}

const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> names{"Vanilla-K", "ADP-K", "AD-K", "ADP-RF", "AD-RF"};
  return names;
}

std::uint64_t method_id(const std::string& method) {
  const auto& names = known_methods();
  const auto it = std::find(names.begin(), names.end(), method);
  if (it == names.end()) throw ConfigError("unknown method '" + method + "'");
  return static_cast<std::uint64_t>(it - names.begin());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RidgeMode mode_for(Index compound_dim, Index N) {
  return compound_dim <= N ? RidgeMode::Primal : RidgeMode::Dual;
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

// --- JSON (de)serialization ------------------------------------------------

json params_json(const PendulumParams& p) {
  return {{"m1", p.m1}, {"m2", p.m2}, {"l1", p.l1}, {"l2", p.l2}, {"g", p.g}};
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

PendulumParams params_from(const json& j, const std::string& where, PendulumParams p) {
  check_keys(j, where, {"m1", "m2", "l1", "l2", "g"});
  read(j, "m1", p.m1);
  read(j, "m2", p.m2);
  read(j, "l1", p.l1);
  read(j, "l2", p.l2);
  read(j, "g", p.g);
  return p;
}

json to_json_value(const ExperimentConfig& c) {
  std::vector<std::vector<double>> P(4, std::vector<double>(4));
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) P[i][k] = c.clf.P(i, k);
  return json{
      {"seed", c.seed},
      {"out_dir", c.out_dir},
      {"threads", c.threads},
      {"truth", params_json(c.truth)},
      {"nominal", params_json(c.nominal)},
      {"clf", {{"P", P}, {"alpha_slope", c.clf.alpha_slope}}},
      {"c1", c.c1},
      {"slack", c.slack},
      {"kp", c.kp},
      {"kd", c.kd},
      {"rate", c.rate},
      {"grid",
       {{"angles", c.grid.angles},
        {"velocity_offsets", c.grid.velocity_offsets},
        {"extra", c.grid.extra}}},
      {"collect_duration", c.collect_duration},
      {"train_fraction", c.train_fraction},
      {"methods", c.methods},
      {"feature_dims", c.feature_dims},
      {"trials", c.trials},
      {"gamma", c.gamma},
      {"lambda", c.lambda},
      {"kernel_timing_repeats", c.kernel_timing_repeats},
      {"episodic_methods", c.episodic_methods},
      {"episodes", c.episodes},
      {"episode_duration", c.episode_duration},
      {"warm_start_stride", c.warm_start_stride},
      {"rf_fraction", c.rf_fraction},
      {"episodic_gamma", c.episodic_gamma},
      {"episodic_lambda", c.episodic_lambda},
      {"x0", c.x0},
      {"synthetic_inputs", c.synthetic_inputs},
      {"synthetic_dims", c.synthetic_dims},
      {"synthetic_trials", c.synthetic_trials},
      {"synthetic_samples", c.synthetic_samples},
      {"synthetic_state_dim", c.synthetic_state_dim},
      {"synthetic_train_fraction", c.synthetic_train_fraction},
      {"synthetic_noise_sd", c.synthetic_noise_sd},
      {"synthetic_gamma", c.synthetic_gamma},
      {"synthetic_lambda", c.synthetic_lambda},
  };
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Eigen::Vector4d> GridSpec::points() const {
  std::vector<Eigen::Vector4d> out;
  for (double a : angles)
    for (double b : angles)
      for (const auto& v : velocity_offsets) out.emplace_back(a, b, v[0], v[1]);
  for (const auto& e : extra) out.emplace_back(e[0], e[1], e[2], e[3]);
  return out;
}

void ExperimentConfig::validate() const {
  auto check = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
  };
  try {
    truth.validate();
    nominal.validate();
    clf.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check(c1 >= 0.0, "c1 must be >= 0");
  check(slack > 0.0, "slack must be > 0");
  check(kp > 0.0 && kd > 0.0, "kp and kd must be > 0");
  check(rate > 0.0, "rate must be > 0");
  check(collect_duration > 0.0 && episode_duration > 0.0, "durations must be > 0");
  check(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must be in (0, 1)");
  check(synthetic_train_fraction > 0.0 && synthetic_train_fraction < 1.0,
        "synthetic_train_fraction must be in (0, 1)");
  check(!grid.points().empty(), "grid has no points");
  for (const auto& m : methods) method_id(m);
  for (const auto& m : episodic_methods) {
    method_id(m);
    check(m != "Vanilla-K", "episodic methods must be affine in u");
  }
  for (Index d : feature_dims) check(d >= 2 && d % 2 == 0, "feature_dims must be even and >= 2");
  for (Index d : synthetic_dims)
    check(d >= 2 && d % 2 == 0, "synthetic_dims must be even and >= 2");
  for (int m : synthetic_inputs) check(m >= 1, "synthetic_inputs must be >= 1");
  check(trials >= 1 && synthetic_trials >= 1, "trials must be >= 1");
  check(kernel_timing_repeats >= 1, "kernel_timing_repeats must be >= 1");
  check(gamma > 0 && lambda > 0 && episodic_gamma > 0 && episodic_lambda > 0 &&
            synthetic_gamma > 0 && synthetic_lambda > 0,
        "bandwidths and regularizers must be > 0");
  check(episodes >= 0, "episodes must be >= 0");
  check(warm_start_stride >= 1, "warm_start_stride must be >= 1");
  check(rf_fraction > 0.0, "rf_fraction must be > 0");
  check(synthetic_samples >= 10 && synthetic_state_dim >= 1, "synthetic sizes too small");
  check(synthetic_noise_sd >= 0.0, "synthetic_noise_sd must be >= 0");
}

std::string config_to_json(const ExperimentConfig& cfg) { return to_json_value(cfg).dump(2); }

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig c;
  const json defaults = to_json_value(c);
  std::set<std::string> allowed;
  for (const auto& item : defaults.items()) allowed.insert(item.key());
  check_keys(j, "config", allowed);

  read(j, "seed", c.seed);
  read(j, "out_dir", c.out_dir);
  read(j, "threads", c.threads);
  if (j.contains("truth")) c.truth = params_from(j["truth"], "truth", c.truth);
  if (j.contains("nominal")) c.nominal = params_from(j["nominal"], "nominal", c.nominal);
  if (j.contains("clf")) {
    const json& k = j["clf"];
    check_keys(k, "clf", {"P", "alpha_slope"});
    read(k, "alpha_slope", c.clf.alpha_slope);
    if (k.contains("P")) {
      std::vector<std::vector<double>> P;
      read(k, "P", P);
      if (P.size() != 4) throw ConfigError("clf.P must be 4x4");
      for (int i = 0; i < 4; ++i) {
        if (P[i].size() != 4) throw ConfigError("clf.P must be 4x4");
        for (int r = 0; r < 4; ++r) c.clf.P(i, r) = P[i][r];
      }
    }
  }
  read(j, "c1", c.c1);
  read(j, "slack", c.slack);
  read(j, "kp", c.kp);
  read(j, "kd", c.kd);
  read(j, "rate", c.rate);
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, "grid", {"angles", "velocity_offsets", "extra"});
    read(g, "angles", c.grid.angles);
    read(g, "velocity_offsets", c.grid.velocity_offsets);
    read(g, "extra", c.grid.extra);
  }
  read(j, "collect_duration", c.collect_duration);
  read(j, "train_fraction", c.train_fraction);
  read(j, "methods", c.methods);
  read(j, "feature_dims", c.feature_dims);
  read(j, "trials", c.trials);
  read(j, "gamma", c.gamma);
  read(j, "lambda", c.lambda);
  read(j, "kernel_timing_repeats", c.kernel_timing_repeats);
  read(j, "episodic_methods", c.episodic_methods);
  read(j, "episodes", c.episodes);
  read(j, "episode_duration", c.episode_duration);
  read(j, "warm_start_stride", c.warm_start_stride);
  read(j, "rf_fraction", c.rf_fraction);
  read(j, "episodic_gamma", c.episodic_gamma);
  read(j, "episodic_lambda", c.episodic_lambda);
  read(j, "x0", c.x0);
  read(j, "synthetic_inputs", c.synthetic_inputs);
  read(j, "synthetic_dims", c.synthetic_dims);
  read(j, "synthetic_trials", c.synthetic_trials);
  read(j, "synthetic_samples", c.synthetic_samples);
  read(j, "synthetic_state_dim", c.synthetic_state_dim);
  read(j, "synthetic_train_fraction", c.synthetic_train_fraction);
  read(j, "synthetic_noise_sd", c.synthetic_noise_sd);
  read(j, "synthetic_gamma", c.synthetic_gamma);
  read(j, "synthetic_lambda", c.synthetic_lambda);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = to_json_value(cfg);
  j.erase("out_dir");
  j.erase("threads");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string library_version() { return kVersion; }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::string& path) {
  const json j{{"tool", "caffeine"},
               {"version", library_version()},
               {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                             std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION)},
               {"command", command},
               {"config_hash", config_hash(cfg)},
               {"created", utc_timestamp()},
               {"config", to_json_value(cfg)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

Controller desired_controller(const ExperimentConfig& cfg) {
  return feedback_linearizing_controller(cfg.nominal, cfg.kp * Eigen::Matrix2d::Identity(),
                                         cfg.kd * Eigen::Matrix2d::Identity());
}

QPControllerConfig qp_config(const ExperimentConfig& cfg, bool growing) {
  QPControllerConfig q;
  q.clf = cfg.clf;
  q.c1 = cfg.c1;
  q.rho = growing ? growing_slack(cfg.slack) : constant_slack(cfg.slack);
  q.desired = desired_controller(cfg);
  return q;
}

Controller nominal_controller(const ExperimentConfig& cfg) {
  return ccf_qp_controller(qp_config(cfg, false), model_cdot(cfg.clf, cfg.nominal));
}

Controller oracle_controller(const ExperimentConfig& cfg) {
  return ccf_qp_controller(qp_config(cfg, false), model_cdot(cfg.clf, cfg.truth));
}

// ---------------------------------------------------------------------------

void parallel_for(Index n, unsigned threads, const std::function<void(Index)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Index>(threads, std::max<Index>(n, 1)));
  if (threads <= 1) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (Index i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

GridData collect_grid_data(const ExperimentConfig& cfg) {
  cfg.validate();
  GridData out;
  out.initial = cfg.grid.points();
  const Index E = static_cast<Index>(out.initial.size());
  out.trajectories.resize(E);
  const Controller ctl = nominal_controller(cfg);
  parallel_for(E, cfg.threads, [&](Index i) {
    out.trajectories[i] = simulate(cfg.truth, ctl, out.initial[i], cfg.collect_duration, cfg.rate);
  });

  std::vector<Trajectory> kept;
  int first = -1;
  for (Index i = 0; i < E; ++i) {
    const Trajectory& tr = out.trajectories[i];
    if (!tr.ok()) {
      ++out.excluded;
      std::cerr << "warning: trajectory " << i << " excluded (" << to_string(tr.status) << ": "
                << tr.message << ")\n";
      continue;
    }
    Dataset d = build_residual_dataset({tr}, cfg.clf, cfg.nominal, static_cast<int>(i));
    if (first < 0) {
      out.data = std::move(d);
      first = 0;
    } else {
      out.data.append(d);
    }
  }
  if (out.excluded > 0)
    std::cerr << "warning: " << out.excluded << " of " << E << " trajectories excluded\n";
  return out;
}

std::pair<std::vector<Index>, std::vector<Index>> shuffled_split(Index n, double train_fraction,
                                                                 std::uint64_t seed) {
  require(n >= 2, "shuffled_split: need at least 2 rows");
  require(train_fraction > 0.0 && train_fraction < 1.0,
          "shuffled_split: train_fraction must be in (0, 1)");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng = make_rng(seed, 0);
  // Fisher-Yates with an explicit index draw, so the permutation does not
  // depend on the standard library's shuffle implementation.
  for (Index i = n - 1; i > 0; --i) {
    const Index j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  const Index n_train =
      std::clamp<Index>(static_cast<Index>(std::llround(train_fraction * n)), 1, n - 1);
  std::vector<Index> train(perm.begin(), perm.begin() + n_train);
  std::vector<Index> test(perm.begin() + n_train, perm.end());
  return {train, test};
}

// ---------------------------------------------------------------------------

void write_benchmark_csv(const std::vector<BenchmarkRecord>& records, const std::string& path) {
  CsvWriter out(path,
                {"method", "input_dim", "feature_dim", "compound_dim", "trial", "rmse",
                 "train_seconds", "ok", "seed", "datetime", "message"},
                kBenchComment);
  for (const auto& r : records)
    out.text_row({r.method, std::to_string(r.input_dim), std::to_string(r.feature_dim),
                  std::to_string(r.compound_dim), std::to_string(r.trial), format_double(r.rmse),
                  format_double(r.train_seconds), r.ok ? "1" : "0", std::to_string(r.seed),
                  r.datetime, sanitize(r.message)});
}

std::vector<BenchmarkRecord> read_benchmark_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::vector<BenchmarkRecord> out;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto c = split_csv_line(line);
    require(c.size() == 11, "read_benchmark_csv: expected 11 columns in " + path);
    BenchmarkRecord r;
    r.method = c[0];
    r.input_dim = std::stoi(c[1]);
    r.feature_dim = std::stoll(c[2]);
    r.compound_dim = std::stoll(c[3]);
    r.trial = std::stoi(c[4]);
    r.rmse = std::stod(c[5]);
    r.train_seconds = std::stod(c[6]);
    r.ok = c[7] == "1";
    r.seed = std::stoull(c[8]);
    r.datetime = c[9];
    r.message = c[10];
    out.push_back(std::move(r));
  }
  return out;
}

Quartiles quartiles(std::vector<double> v) {
  require(!v.empty(), "quartiles: empty input");
  std::sort(v.begin(), v.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

std::vector<BenchmarkRecord> select(const std::vector<BenchmarkRecord>& records,
                                    const std::string& method, int input_dim, Index feature_dim) {
  std::vector<BenchmarkRecord> out;
  for (const auto& r : records)
    if (r.ok && r.method == method && r.input_dim == input_dim && r.feature_dim == feature_dim)
      out.push_back(r);
  return out;
}

bool is_kernel_method(const std::string& method) {
  method_id(method);
  return method.size() > 2 && method.compare(method.size() - 2, 2, "-K") == 0;
}

KernelSpec kernel_for_method(const std::string& method, Index m, double gamma) {
  if (method == "Vanilla-K") return KernelSpec::vanilla(gamma);
  if (method == "ADP-K") return KernelSpec::compound(KernelVariant::ADP, m, gamma);
  if (method == "AD-K") return KernelSpec::compound(KernelVariant::AD, m, gamma);
  throw ConfigError("'" + method + "' is not a kernel method");
}

Variant variant_for_method(const std::string& method) {
  if (method == "ADP-RF") return Variant::ADP;
  if (method == "AD-RF") return Variant::AD;
  throw ConfigError("'" + method + "' is not a random-feature method");
}

std::vector<BenchmarkRecord> run_prediction_benchmark(const ExperimentConfig& cfg,
                                                      const Dataset& train, const Dataset& test) {
  cfg.validate();
  require(train.size() > 0 && test.size() > 0, "run_prediction_benchmark: empty split");
  const Index n = train.samples.state_dim();
  const Index m = train.samples.input_dim();
  const Index N = train.size();
  const std::string stamp = utc_timestamp();
  std::vector<BenchmarkRecord> records;

  for (const auto& method : cfg.methods) {
    const std::uint64_t mid = method_id(method);
    if (is_kernel_method(method)) {
      BenchmarkRecord r;
      r.method = method;
      r.input_dim = static_cast<int>(m);
      r.seed = cfg.seed;
      r.datetime = stamp;
      try {
        const KernelSpec spec = kernel_for_method(method, m, cfg.gamma);
        std::vector<double> times;
        RidgeModel model;
        for (int rep = 0; rep < cfg.kernel_timing_repeats; ++rep) {
          model = RidgeModel{};
          const auto t0 = std::chrono::steady_clock::now();
          model = fit_ridge(spec, train.samples, train.z, cfg.lambda);
          times.push_back(seconds_since(t0));
        }
        r.train_seconds = quartiles(times).median;
        r.rmse = rmse(predict(model, test.samples), test.z);
      } catch (const NumericalError& e) {
        r.ok = false;
        r.message = e.what();
      }
      records.push_back(r);
      continue;
    }

    const Variant variant = variant_for_method(method);
    for (Index D : cfg.feature_dims) {
      std::vector<BenchmarkRecord> batch(static_cast<std::size_t>(cfg.trials));
      parallel_for(cfg.trials, cfg.threads, [&](Index trial) {
        BenchmarkRecord& r = batch[static_cast<std::size_t>(trial)];
        r.method = method;
        r.input_dim = static_cast<int>(m);
        r.feature_dim = D;
        r.trial = static_cast<int>(trial);
        r.seed = task_seed(cfg.seed, 1, mid, static_cast<std::uint64_t>(D),
                           static_cast<std::uint64_t>(trial));
        r.datetime = stamp;
        try {
          const CompoundBasis basis = sample_compound_basis(variant, n, m, D, cfg.gamma, r.seed);
          r.compound_dim = basis.output_dim();
          const auto t0 = std::chrono::steady_clock::now();
          const RidgeModel model = fit_ridge(basis, train.samples, train.z, cfg.lambda,
                                             mode_for(basis.output_dim(), N));
          r.train_seconds = seconds_since(t0);
          r.rmse = rmse(predict(model, test.samples), test.z);
        } catch (const NumericalError& e) {
          r.ok = false;
          r.message = e.what();
        }
      });
      records.insert(records.end(), batch.begin(), batch.end());
    }
  }
  return records;
}

// ---------------------------------------------------------------------------

Dataset subsample(const Dataset& data, int stride) {
  require(stride >= 1, "subsample: stride must be >= 1");
  std::vector<Index> rows;
  for (Index i = 0; i < data.size(); i += stride) rows.push_back(i);
  return data.subset(rows);
}

Index episodic_feature_dim(const ExperimentConfig& cfg, const std::string& method, Index N) {
  const Variant v = variant_for_method(method);
  const Index m = 2;
  const auto compound = static_cast<Index>(std::floor(cfg.rf_fraction * static_cast<double>(N)));
  Index D = v == Variant::ADP ? compound / (m + 1) : compound;
  D -= D % 2;
  return std::max<Index>(D, 2);
}

std::function<AffineForm(const Eigen::Vector4d&)> fit_residual(const ExperimentConfig& cfg,
                                                               const std::string& method,
                                                               const Dataset& data,
                                                               std::uint64_t seed) {
  const Index m = data.samples.input_dim();
  if (is_kernel_method(method))
    return residual_of(fit_ridge(kernel_for_method(method, m, cfg.episodic_gamma), data.samples,
                                 data.z, cfg.episodic_lambda));
  const Index D = episodic_feature_dim(cfg, method, data.size());
  const CompoundBasis basis = sample_compound_basis(
      variant_for_method(method), data.samples.state_dim(), m, D, cfg.episodic_gamma, seed);
  return residual_of(fit_ridge(basis, data.samples, data.z, cfg.episodic_lambda,
                               mode_for(basis.output_dim(), data.size())));
}

std::vector<double> clf_series(const CLFSpec& clf, const Trajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.size() + 1);
  for (const auto& x : traj.states) out.push_back(clf_value(clf, x));
  if (traj.ok()) out.push_back(clf_value(clf, traj.final_state));
  return out;
}

Dataset episode_dataset(const ExperimentConfig& cfg, const Trajectory& traj, int traj_id) {
  Trajectory t = traj;
  if (traj.ok() && !traj.times.empty()) {
    t.times.push_back(traj.times.back() + 1.0 / traj.rate);
    t.states.push_back(traj.final_state);
    t.inputs.push_back(Eigen::Vector2d::Zero());
  }
  if (t.size() < 2) return Dataset{};
  return build_residual_dataset({t}, cfg.clf, cfg.nominal, traj_id);
}

EpisodicResult run_episodic_loop(const ExperimentConfig& cfg, const std::string& method,
                                 const Dataset& grid_data) {
  cfg.validate();
  const std::uint64_t mid = method_id(method);
  require(method != "Vanilla-K", "run_episodic_loop: method must be affine in u");
  EpisodicResult out;
  out.method = method;
  Dataset data = subsample(grid_data, cfg.warm_start_stride);
  const Eigen::Vector4d x0(cfg.x0[0], cfg.x0[1], cfg.x0[2], cfg.x0[3]);
  const QPControllerConfig qp = qp_config(cfg, true);
  const int id_base = 1 << 20;

  for (int e = 0; e <= cfg.episodes; ++e) {
    const auto residual = fit_residual(cfg, method, data, task_seed(cfg.seed, 2, mid, e));
    const Controller ctl = ce_controller(qp, cfg.nominal, residual);
    Trajectory tr = simulate(cfg.truth, ctl, x0, cfg.episode_duration, cfg.rate);
    if (e == cfg.episodes) {
      out.final_run = std::move(tr);
      break;
    }
    EpisodeResult ep;
    ep.episode = e;
    ep.train_size = data.size();
    ep.clf_series = clf_series(cfg.clf, tr);
    const Dataset fresh = episode_dataset(cfg, tr, id_base + e);
    if (fresh.size() > 0) data.append(fresh);
    ep.trajectory = std::move(tr);
    out.episodes.push_back(std::move(ep));
  }
  out.final_train_size = data.size();
  out.final_clf = out.final_run.ok() ? clf_value(cfg.clf, out.final_run.final_state)
                                     : std::numeric_limits<double>::infinity();
  return out;
}

// ---------------------------------------------------------------------------

SyntheticWeights synthetic_weights(Index n, Index m, std::uint64_t seed) {
  require(n >= 1 && m >= 1, "synthetic_weights: n and m must be >= 1");
  Rng rng = make_rng(seed, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SyntheticWeights wt;
  wt.w.resize(n, m + 2);
  wt.gamma.resize(m);
  for (Index j = 0; j < 2; ++j)
    for (Index i = 0; i < n; ++i) wt.w(i, j) = unif(rng);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) wt.w(i, j + 2) = unif(rng);
    wt.gamma(j) = unif(rng);
  }
  return wt;
}

double synthetic_h(const SyntheticWeights& wt, const VecRef& x, const VecRef& u) {
  require(x.size() == wt.w.rows() && u.size() == wt.gamma.size(),
          "synthetic_h: dimension mismatch");
  const double two_pi = 2.0 * M_PI;
  double h = 3.0 * std::sin(two_pi * x.dot(wt.w.col(0))) -
             2.0 * std::sin(2.0 * two_pi * x.dot(wt.w.col(1)));
  for (Index j = 0; j < u.size(); ++j)
    h += wt.gamma(j) * std::sin(two_pi * x.dot(wt.w.col(j + 2))) * u(j);
  return h;
}

SyntheticData generate_synthetic_hm(Index n, Index m, Index count, std::uint64_t seed,
                                    double noise_sd) {
  require(count >= 1, "generate_synthetic_hm: count must be >= 1");
  require(noise_sd >= 0.0, "generate_synthetic_hm: noise_sd must be >= 0");
  SyntheticData d;
  d.weights = synthetic_weights(n, m, seed);
  Rng rng = make_rng(seed, 1 + static_cast<std::uint64_t>(m));
  Rng noise = make_rng(seed, (1ULL << 32) + static_cast<std::uint64_t>(m));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  d.samples.X.resize(count, n);
  d.samples.U.resize(count, m);
  d.y.resize(count);
  d.clean.resize(count);
  for (Index i = 0; i < count; ++i) {
    for (Index k = 0; k < n; ++k) d.samples.X(i, k) = unif(rng);
    for (Index k = 0; k < m; ++k) d.samples.U(i, k) = unif(rng);
    d.clean(i) = synthetic_h(d.weights, d.samples.X.row(i).transpose(),
                             d.samples.U.row(i).transpose());
    d.y(i) = d.clean(i) + noise_sd * gauss(noise);
  }
  return d;
}

std::vector<BenchmarkRecord> run_synthetic_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::string stamp = utc_timestamp();
  std::vector<BenchmarkRecord> records;
  const Index n = cfg.synthetic_state_dim;
  for (int m : cfg.synthetic_inputs) {
    const SyntheticData data =
        generate_synthetic_hm(n, m, cfg.synthetic_samples, cfg.seed, cfg.synthetic_noise_sd);
    const auto [tr_rows, te_rows] = shuffled_split(
        cfg.synthetic_samples, cfg.synthetic_train_fraction, task_seed(cfg.seed, 4, m));
    const Samples train = data.samples.rows(tr_rows);
    const Samples test = data.samples.rows(te_rows);
    VectorXd ytr(static_cast<Index>(tr_rows.size())), yte(static_cast<Index>(te_rows.size()));
    for (std::size_t i = 0; i < tr_rows.size(); ++i) ytr(static_cast<Index>(i)) = data.y(tr_rows[i]);
    for (std::size_t i = 0; i < te_rows.size(); ++i) yte(static_cast<Index>(i)) = data.y(te_rows[i]);

    for (Index D : cfg.synthetic_dims) {
      for (const std::string method : {"ADP-RF", "AD-RF"}) {
        const Variant variant = variant_for_method(method);
        const Index per_basis = variant == Variant::ADP ? D : D * (m + 1);
        std::vector<BenchmarkRecord> batch(static_cast<std::size_t>(cfg.synthetic_trials));
        parallel_for(cfg.synthetic_trials, cfg.threads, [&](Index trial) {
          BenchmarkRecord& r = batch[static_cast<std::size_t>(trial)];
          r.method = method;
          r.input_dim = m;
          r.feature_dim = per_basis;
          r.trial = static_cast<int>(trial);
          r.seed = task_seed(cfg.seed, 5, method_id(method), static_cast<std::uint64_t>(m),
                             (static_cast<std::uint64_t>(D) << 16) + static_cast<std::uint64_t>(trial));
          r.datetime = stamp;
          try {
            const CompoundBasis basis =
                sample_compound_basis(variant, n, m, per_basis, cfg.synthetic_gamma, r.seed);
            r.compound_dim = basis.output_dim();
            const auto t0 = std::chrono::steady_clock::now();
            const RidgeModel model = fit_ridge(basis, train, ytr, cfg.synthetic_lambda,
                                               mode_for(basis.output_dim(), train.size()));
            r.train_seconds = seconds_since(t0);
            r.rmse = rmse(predict(model, test), yte);
          } catch (const NumericalError& e) {
            r.ok = false;
            r.message = e.what();
          }
        });
        records.insert(records.end(), batch.begin(), batch.end());
      }
    }
  }
  return records;
}

}  // namespace caffeine
