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


#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <doctest.h>

#include "caffeine/harness.hpp"

using namespace caffeine;

namespace {

const GridData& grid_data() {
  static const GridData g = [] {
    ExperimentConfig cfg;
    cfg.threads = 1;
    return collect_grid_data(cfg);
  }();
  return g;
}

ExperimentConfig small_bench_config() {
  ExperimentConfig cfg;
  cfg.threads = 1;
  cfg.feature_dims = {16, 32};
  cfg.trials = 2;
  cfg.kernel_timing_repeats = 1;
  return cfg;
}

}  // namespace

TEST_CASE("initial condition grid") {
  const GridSpec g;
  const auto pts = g.points();
  CHECK(pts.size() == 226);
  std::set<std::array<double, 4>> uniq;
  for (const auto& p : pts) uniq.insert({p(0), p(1), p(2), p(3)});
  CHECK(uniq.size() == 226);
  CHECK(pts.front() == Eigen::Vector4d(-1.5, -1.5, 0.0, 0.0));
  CHECK(pts.back() == Eigen::Vector4d(0, 0, -1.0, -1.0));
}

TEST_CASE("grid data collection") {
  const GridData& g = grid_data();
  CHECK(g.trajectories.size() == 226);
  CHECK(g.excluded == 0);
  CHECK(g.data.size() == 226 * 49);
  for (const auto& tr : g.trajectories) CHECK(tr.size() == 50);
  CHECK(g.data.traj_id.front() == 0);
  CHECK(g.data.traj_id.back() == 225);

  const auto [train, test] = shuffled_split(g.data.size(), 0.8, 0);
  CHECK(train.size() == 8859);
  CHECK(test.size() == 2215);
  std::set<Index> all(train.begin(), train.end());
  all.insert(test.begin(), test.end());
  CHECK(all.size() == 11074);
  CHECK(shuffled_split(g.data.size(), 0.8, 0).first == train);
  CHECK(shuffled_split(g.data.size(), 0.8, 1).first != train);
  CHECK_THROWS_AS(shuffled_split(10, 1.0, 0), InvalidArgument);
}

TEST_CASE("collection is deterministic across thread counts") {
  ExperimentConfig cfg;
  cfg.grid.angles = {-0.5, 0.5};
  cfg.grid.extra.resize(2);
  cfg.threads = 1;
  const GridData a = collect_grid_data(cfg);
  cfg.threads = 3;
  const GridData b = collect_grid_data(cfg);
  CHECK(a.data.size() == 26 * 49);
  CHECK((a.data.z - b.data.z).norm() == 0.0);
  CHECK((a.data.samples.X - b.data.samples.X).norm() == 0.0);
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](Index i) { hits[static_cast<std::size_t>(i)] += 1; });
  for (int h : hits) CHECK(h == 1);
}

TEST_CASE("episodic helpers") {
  const ExperimentConfig cfg;
  const Dataset warm = subsample(grid_data().data, cfg.warm_start_stride);
  CHECK(warm.size() == 2215);
  CHECK(warm.z(1) == grid_data().data.z(5));

  CHECK(episodic_feature_dim(cfg, "AD-RF", 2215) == 442);
  CHECK(episodic_feature_dim(cfg, "ADP-RF", 2215) == 146);
  CHECK(episodic_feature_dim(cfg, "AD-RF", 3215) == 642);

  const Trajectory tr =
      simulate(cfg.truth, nominal_controller(cfg), Eigen::Vector4d(cfg.x0.data()), cfg.episode_duration, cfg.rate);
  REQUIRE(tr.ok());
  const Dataset d = episode_dataset(cfg, tr, 1 << 20);
  CHECK(d.size() == 100);
  CHECK(d.traj_id.front() == 1 << 20);
  const double last = (clf_value(cfg.clf, tr.final_state) - clf_value(cfg.clf, tr.states.back())) * cfg.rate -
                      cdot_affine(cfg.clf, cfg.nominal, tr.states.back())(tr.inputs.back());
  CHECK(d.z(99) == doctest::Approx(last).epsilon(1e-12));

  const auto series = clf_series(cfg.clf, tr);
  CHECK(series.size() == 101);
  CHECK(series.front() == doctest::Approx(48.0));
  CHECK(series.back() == clf_value(cfg.clf, tr.final_state));
}

TEST_CASE("benchmark CSV round trip and statistics") {
  std::vector<BenchmarkRecord> rs(3);
  rs[0] = {"AD-RF", 2, 64, 64, 0, 0.125, 0.5, true, 17, "2026-01-01T00:00:00Z", ""};
  rs[1] = {"AD-K", 2, 0, 0, 1, 1.0 / 3.0, 2.0, true, 0, "2026-01-01T00:00:00Z", ""};
  rs[2] = {"ADP-RF", 2, 64, 192, 2, std::nan(""), 0.0, false, 9, "2026-01-01T00:00:00Z", "solver, failed"};
  const std::string path = "test_bench_roundtrip.csv";
  write_benchmark_csv(rs, path);
  const auto back = read_benchmark_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.size() == 3);
  CHECK(back[1].rmse == rs[1].rmse);
  CHECK(back[0].seed == 17);
  CHECK(back[0].compound_dim == 64);
  CHECK_FALSE(back[2].ok);
  CHECK(back[2].message == "solver; failed");
  CHECK(select(back, "ADP-RF", 2, 64).empty());
  CHECK(select(back, "AD-RF", 2, 64).size() == 1);

  const Quartiles q = quartiles({4.0, 1.0, 3.0, 2.0, 5.0});
  CHECK(q.median == 3.0);
  CHECK(q.q1 == 2.0);
  CHECK(q.q3 == 4.0);
  CHECK(quartiles({1.0, 2.0}).median == 1.5);
}

TEST_CASE("method helpers") {
  CHECK(is_kernel_method("AD-K"));
  CHECK_FALSE(is_kernel_method("ADP-RF"));
  CHECK(kernel_for_method("Vanilla-K", 2, 1.0).variant == KernelVariant::VanillaRBF);
  CHECK(kernel_for_method("ADP-K", 2, 1.0).gammas.size() == 3);
  CHECK(variant_for_method("AD-RF") == Variant::AD);
  CHECK_THROWS_AS(kernel_for_method("Foo", 2, 1.0), InvalidArgument);
}

TEST_CASE("prediction benchmark on a small split") {
  ExperimentConfig cfg = small_bench_config();
  const Dataset& all = grid_data().data;
  std::vector<Index> tr, te;
  for (Index i = 0; i < 400; ++i) (i % 5 == 0 ? te : tr).push_back(i * 7);
  const Dataset train = all.subset(tr), test = all.subset(te);
  const auto rs = run_prediction_benchmark(cfg, train, test);
  // 3 kernel methods + 2 RF methods x 2 dims x 2 trials
  CHECK(rs.size() == 3 + 8);
  for (const auto& r : rs) {
    CHECK(r.ok);
    CHECK(std::isfinite(r.rmse));
    CHECK(r.rmse > 0.0);
  }
  const auto again = run_prediction_benchmark(cfg, train, test);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CHECK(again[i].rmse == rs[i].rmse);
    CHECK(again[i].seed == rs[i].seed);
  }
  const auto adp = select(rs, "ADP-RF", 2, 32);
  REQUIRE(adp.size() == 2);
  CHECK(adp[0].compound_dim == 96);
  CHECK(adp[0].seed != adp[1].seed);
}

TEST_CASE("synthetic generator") {
  const SyntheticWeights w1 = synthetic_weights(6, 1, 3), w3 = synthetic_weights(6, 3, 3);
  CHECK((w3.w.leftCols(3) - w1.w).norm() == 0.0);
  CHECK(w3.gamma(0) == w1.gamma(0));
  CHECK(w1.w.minCoeff() >= 0.0);
  CHECK(w1.w.maxCoeff() < 1.0);

  VectorXd x = VectorXd::Zero(6), u = VectorXd::Ones(1);
  CHECK(synthetic_h(w1, x, u) == 0.0);
  x(0) = 0.3;
  const double a = 2.0 * M_PI * 0.3;
  const double expect = 3.0 * std::sin(a * w1.w(0, 0)) - 2.0 * std::sin(2.0 * a * w1.w(0, 1)) +
                        w1.gamma(0) * std::sin(a * w1.w(0, 2));
  CHECK(synthetic_h(w1, x, u) == doctest::Approx(expect).epsilon(1e-14));

  const SyntheticData d = generate_synthetic_hm(6, 10, 5000, 4, 0.1);
  const VectorXd noise = d.y - d.clean;
  const double var = (noise.array() - noise.mean()).square().sum() / (noise.size() - 1);
  CHECK(var == doctest::Approx(0.01).epsilon(0.08));
  CHECK(d.samples.U.minCoeff() >= 0.0);
  CHECK(d.samples.X.maxCoeff() < 1.0);
  const SyntheticData e = generate_synthetic_hm(6, 10, 5000, 4, 0.1);
  CHECK((d.y - e.y).norm() == 0.0);
}

TEST_CASE("random-feature posterior mean approaches the kernel posterior mean") {
  const SyntheticData d = generate_synthetic_hm(6, 1, 300, 0, 0.1);
  std::vector<Index> tr, te;
  for (Index i = 0; i < 300; ++i) (i < 200 ? tr : te).push_back(i);
  const Samples train = d.samples.rows(tr), test = d.samples.rows(te);
  const VectorXd z = d.y.head(200);
  // lambda = 1 makes K + l^2 I and Phi'Phi + l I share the same regularizer
  const GPModel gk = fit_gp(KernelSpec::compound(KernelVariant::AD, 1, 1.0), train, z, 1.0);
  const RidgeModel rf =
      fit_ridge(sample_compound_basis(Variant::AD, 6, 1, 8192, 1.0, 5), train, z, 1.0, RidgeMode::Dual);
  double acc = 0.0;
  for (Index i = 0; i < 100; ++i) {
    const VectorXd x = test.X.row(i).transpose(), u = test.U.row(i).transpose();
    acc += std::abs(gp_posterior(gk, x, u).mu - predict(rf, x, u));
  }
  CHECK(acc / 100.0 <= 0.05);

  // feature-mode GP mean is the primal ridge predictor
  const CompoundBasis cb = sample_compound_basis(Variant::AD, 6, 1, 64, 1.0, 5);
  const GPModel gf = fit_gp(cb, train, z, 1.0);
  const RidgeModel rp = fit_ridge(cb, train, z, 1.0);
  for (Index i = 0; i < 10; ++i) {
    const VectorXd x = test.X.row(i).transpose(), u = test.U.row(i).transpose();
    CHECK(gp_posterior(gf, x, u).mu == doctest::Approx(predict(rp, x, u)).epsilon(1e-10));
  }
}

TEST_CASE("synthetic benchmark rows") {
  ExperimentConfig cfg;
  cfg.threads = 1;
  cfg.synthetic_inputs = {1, 3};
  cfg.synthetic_dims = {8, 16};
  cfg.synthetic_trials = 2;
  cfg.synthetic_samples = 200;
  const auto rs = run_synthetic_benchmark(cfg);
  CHECK(rs.size() == 2 * 2 * 2 * 2);
  // matched compound budgets
  for (std::size_t i = 0; i + 2 < rs.size(); i += 4) CHECK(rs[i].compound_dim == rs[i + 2].compound_dim);
  for (const auto& r : rs) {
    CHECK(r.ok);
    if (r.method == "AD-RF") CHECK(r.compound_dim == r.feature_dim);
    if (r.method == "ADP-RF") CHECK(r.compound_dim == r.feature_dim * (r.input_dim + 1));
  }
}

TEST_CASE("configuration") {
  ExperimentConfig cfg;
  cfg.seed = 99;
  cfg.kp = 12.5;
  cfg.grid.angles = {-1.0, 1.0};
  cfg.methods = {"AD-K"};
  const std::string text = config_to_json(cfg);
  const ExperimentConfig back = config_from_json(text);
  CHECK(config_to_json(back) == text);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(config_hash(cfg).size() == 16);

  ExperimentConfig other = cfg;
  other.out_dir = "elsewhere";
  other.threads = 7;
  CHECK(config_hash(other) == config_hash(cfg));
  other.lambda = 2.0;
  CHECK(config_hash(other) != config_hash(cfg));

  CHECK(config_from_json(R"({"seed": 5})").seed == 5);
  CHECK_THROWS_AS(config_from_json(R"({"sede": 5})"), ConfigError);
  CHECK_THROWS_AS(config_from_json("{not json"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"trials": 0})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"methods": ["Nope"]})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"feature_dims": [63]})"), ConfigError);
  CHECK_THROWS_AS(load_config("missing_config.json"), ConfigError);

  const std::string path = "test_manifest.json";
  write_manifest(cfg, "collect", path);
  std::ifstream in(path);
  const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::remove(path.c_str());
  CHECK(body.find(config_hash(cfg)) != std::string::npos);
  CHECK(body.find(library_version()) != std::string::npos);
  CHECK(utc_timestamp().size() == 20);
}

TEST_CASE("saved models reproduce their predictions") {
  const Dataset& all = grid_data().data;
  std::vector<Index> idx;
  for (Index i = 0; i < 300; ++i) idx.push_back(i * 11);
  const Dataset d = all.subset(idx);
  ModelRecord r;
  r.family = "ridge";
  r.kernel = false;
  r.variant = KernelVariant::ADP;
  r.gammas = {1.0, 1.0, 1.0};
  r.feature_dim = 32;
  r.seed = 8;
  r.train = d.samples;
  r.z = d.z;
  const std::string path = "test_saved_model.json";
  save_model(r, path);
  const RidgeModel a = fit_ridge(r), b = fit_ridge(load_model(path));
  std::remove(path.c_str());
  const double ra = rmse(predict(a, d.samples), d.z), rb = rmse(predict(b, d.samples), d.z);
  CHECK(std::abs(ra - rb) <= 1e-10 * ra);
}
