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


#ifndef CAFFEINE_HARNESS_HPP_
#define CAFFEINE_HARNESS_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "caffeine/certify.hpp"
#include "caffeine/common.hpp"
#include "caffeine/control.hpp"
#include "caffeine/dynamics.hpp"
#include "caffeine/regression.hpp"

namespace caffeine {

/// Malformed or out-of-range experiment configuration.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Initial conditions: every (th1, th2) pair from `angles`, crossed with each
/// velocity offset, followed by the `extra` states verbatim.
struct GridSpec {
  std::vector<double> angles{-1.5, -1.0, -0.5, 0.5, 1.0, 1.5};
  std::vector<std::array<double, 2>> velocity_offsets{{0.0, 0.0},  {0.5, 0.0}, {-0.5, 0.0},
                                                      {0.0, 0.5},  {0.0, -0.5}, {0.5, -0.5}};
  std::vector<std::array<double, 4>> extra{
      {0, 0, 0.5, 0},  {0, 0, -0.5, 0}, {0, 0, 1.0, 0}, {0, 0, -1.0, 0}, {0, 0, 0, 0.5},
      {0, 0, 0, -0.5}, {0, 0, 0, 1.0},  {0, 0, 0, -1.0}, {0, 0, 1.0, 1.0}, {0, 0, -1.0, -1.0}};

  std::vector<Eigen::Vector4d> points() const;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  unsigned threads = 0;  // 0: hardware concurrency

  PendulumParams truth = PendulumParams::unit();
  PendulumParams nominal = PendulumParams::scaled(0.6);
  CLFSpec clf = CLFSpec::pendulum();
  double c1 = 25.0;
  double slack = 1e6;
  double kp = 25.0;  // feedback-linearizing gains, Kp = kp I, Kd = kd I
  double kd = 10.0;
  double rate = 10.0;

  // grid data collection
  GridSpec grid;
  double collect_duration = 5.0;
  double train_fraction = 0.8;

  // prediction benchmark
  std::vector<std::string> methods{"Vanilla-K", "ADP-K", "AD-K", "ADP-RF", "AD-RF"};
  std::vector<Index> feature_dims{64, 128, 256, 512, 1024, 2048};
  int trials = 10;
  double gamma = 1.0;
  double lambda = 1.0;
  int kernel_timing_repeats = 3;

  // episodic closed loop
  std::vector<std::string> episodic_methods{"AD-K", "ADP-K", "AD-RF", "ADP-RF"};
  int episodes = 10;
  double episode_duration = 10.0;
  int warm_start_stride = 5;
  double rf_fraction = 0.2;  // compound RF dimension = floor(N * rf_fraction)
  double episodic_gamma = 1.0;
  double episodic_lambda = 1.0;
  std::array<double, 4> x0{2.0, 0.0, 0.0, 0.0};

  // synthetic benchmark
  std::vector<int> synthetic_inputs{1, 10, 20};
  std::vector<Index> synthetic_dims{22, 44, 66, 88, 110, 132, 154, 176, 198, 220};
  int synthetic_trials = 10;
  Index synthetic_samples = 1000;
  Index synthetic_state_dim = 6;
  double synthetic_train_fraction = 0.9;
  double synthetic_noise_sd = 0.1;
  double synthetic_gamma = 1.0;
  double synthetic_lambda = 1.0;

  void validate() const;
};

/// JSON round trip; unknown keys are rejected with ConfigError.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// FNV-1a of the canonical JSON dump, 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Run manifest (JSON): command, config, config hash, version, UTC timestamp.
void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::string& path);

std::string library_version();
std::string utc_timestamp();

// ---------------------------------------------------------------------------
// Controllers shared by the experiments

Controller desired_controller(const ExperimentConfig& cfg);
/// CCF-QP with the nominal model in the constraint.
Controller nominal_controller(const ExperimentConfig& cfg);
/// CCF-QP with the true model in the constraint.
Controller oracle_controller(const ExperimentConfig& cfg);
QPControllerConfig qp_config(const ExperimentConfig& cfg, bool growing_slack);

// ---------------------------------------------------------------------------
// Data collection

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers.
void parallel_for(Index n, unsigned threads, const std::function<void(Index)>& fn);

struct GridData {
  std::vector<Eigen::Vector4d> initial;
  std::vector<Trajectory> trajectories;  // one per initial condition
  Dataset data;                          // residual labels from the Ok trajectories
  int excluded = 0;
};

GridData collect_grid_data(const ExperimentConfig& cfg);

/// Shuffled split of [0, n) with round(n * train_fraction) training rows.
std::pair<std::vector<Index>, std::vector<Index>> shuffled_split(Index n, double train_fraction,
                                                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Benchmarks

struct BenchmarkRecord {
  std::string method;
  int input_dim = 0;
  Index feature_dim = 0;   // per state basis; 0 for kernel methods
  Index compound_dim = 0;  // length of phi; 0 for kernel methods
  int trial = 0;
  double rmse = 0.0;
  double train_seconds = 0.0;
  bool ok = true;
  std::uint64_t seed = 0;
  std::string datetime;
  std::string message;
};

void write_benchmark_csv(const std::vector<BenchmarkRecord>& records, const std::string& path);
std::vector<BenchmarkRecord> read_benchmark_csv(const std::string& path);

struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};
Quartiles quartiles(std::vector<double> values);

/// Records with ok == true matching (method, input_dim, feature_dim).
std::vector<BenchmarkRecord> select(const std::vector<BenchmarkRecord>& records,
                                    const std::string& method, int input_dim, Index feature_dim);

bool is_kernel_method(const std::string& method);
KernelSpec kernel_for_method(const std::string& method, Index m, double gamma);
Variant variant_for_method(const std::string& method);

std::vector<BenchmarkRecord> run_prediction_benchmark(const ExperimentConfig& cfg,
                                                      const Dataset& train, const Dataset& test);

// ---------------------------------------------------------------------------
// Episodic closed loop

struct EpisodeResult {
  int episode = 0;
  Index train_size = 0;  // data used to fit this episode's controller
  Trajectory trajectory;
  std::vector<double> clf_series;  // C(x(t_k)) followed by C(x(T))
};

struct EpisodicResult {
  std::string method;
  std::vector<EpisodeResult> episodes;
  Trajectory final_run;  // controller fitted on all data, after the last episode
  Index final_train_size = 0;
  double final_clf = 0.0;  // C(x(T)) of final_run
};

/// Every `stride`-th row.
Dataset subsample(const Dataset& data, int stride);

/// Fits the residual model for `method` and wraps it as an affine function of u.
std::function<AffineForm(const Eigen::Vector4d&)> fit_residual(const ExperimentConfig& cfg,
                                                               const std::string& method,
                                                               const Dataset& data,
                                                               std::uint64_t seed);

/// RF compound dimension for N samples, as a per-state-basis D.
Index episodic_feature_dim(const ExperimentConfig& cfg, const std::string& method, Index N);

EpisodicResult run_episodic_loop(const ExperimentConfig& cfg, const std::string& method,
                                 const Dataset& grid_data);

/// Residual labels for a run, closing the last interval with the terminal state.
Dataset episode_dataset(const ExperimentConfig& cfg, const Trajectory& traj, int traj_id);

/// C(x(t_k)) for each sample, then C at the terminal state.
std::vector<double> clf_series(const CLFSpec& clf, const Trajectory& traj);

// ---------------------------------------------------------------------------
// Synthetic control-affine benchmark

/// w: n x (m+2) columns w_1..w_{m+2}; gamma: m. Draws are sequential from one
/// stream, so the weights for m are a prefix of the weights for m+1.
struct SyntheticWeights {
  MatrixXd w;
  VectorXd gamma;
};

SyntheticWeights synthetic_weights(Index n, Index m, std::uint64_t seed);

/// Noise-free h_m(x, u).
double synthetic_h(const SyntheticWeights& wt, const VecRef& x, const VecRef& u);

struct SyntheticData {
  SyntheticWeights weights;
  Samples samples;
  VectorXd y;      // labels with noise
  VectorXd clean;  // noise-free labels
};

SyntheticData generate_synthetic_hm(Index n, Index m, Index count, std::uint64_t seed,
                                    double noise_sd = 0.1);

/// ADP uses per-state-basis D; AD uses D (m+1) so both compound dimensions match.
std::vector<BenchmarkRecord> run_synthetic_benchmark(const ExperimentConfig& cfg);

}  // namespace caffeine

#endif  // CAFFEINE_HARNESS_HPP_
