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


#ifndef CAFFEINE_REGRESSION_HPP_
#define CAFFEINE_REGRESSION_HPP_

#include <optional>
#include <string>

#include <Eigen/Cholesky>

#include "caffeine/common.hpp"
#include "caffeine/features.hpp"
#include "caffeine/kernels.hpp"

namespace caffeine {

/// Scalar function affine in u: bias + slope'u.
struct AffineForm {
  double bias = 0.0;
  VectorXd slope;

  double operator()(const VecRef& u) const { return bias + slope.dot(u); }
  AffineForm& operator+=(const AffineForm& o) {
    bias += o.bias;
    slope += o.slope;
    return *this;
  }
};

// ---------------------------------------------------------------------------
// Ridge regression

/// (Phi'Phi + lambda I)^{-1} Phi'z.
VectorXd ridge_weights(const MatRef& Phi, const VecRef& z, double lambda);

/// (K + lambda I)^{-1} z. K is factored in place and left holding its Cholesky
/// factor, which keeps peak memory at one N x N buffer.
VectorXd ridge_dual_coefficients(MatrixXd& K, const VecRef& z, double lambda);

enum class RidgeMode { Primal, Dual };

struct RidgeModel {
  RidgeMode mode = RidgeMode::Primal;
  double lambda = 1.0;
  std::optional<CompoundBasis> basis;  // random-feature models
  std::optional<KernelSpec> kernel;    // exact kernel models (always Dual)
  VectorXd weights;                    // Primal: length output_dim
  VectorXd coeffs;                     // Dual: length N
  Samples train;                       // Dual: training inputs

  Index state_dim() const { return basis ? basis->state_dim() : train.state_dim(); }
  Index input_dim() const { return basis ? basis->input_dim() : train.input_dim(); }
};

/// Random-feature ridge model. Primal solves in feature space (D x D), Dual in
/// sample space (N x N); both give the same predictor.
RidgeModel fit_ridge(const CompoundBasis& basis, const Samples& samples, const VecRef& z,
                     double lambda, RidgeMode mode = RidgeMode::Primal);

/// Kernel ridge model (dual form).
RidgeModel fit_ridge(const KernelSpec& kernel, const Samples& samples, const VecRef& z,
                     double lambda);

double predict(const RidgeModel& model, const VecRef& x, const VecRef& u);
VectorXd predict(const RidgeModel& model, const Samples& queries);

/// Prediction at fixed x as an affine function of u (compound models only).
AffineForm predict_affine(const RidgeModel& model, const VecRef& x);

double rmse(const VecRef& prediction, const VecRef& target);

// ---------------------------------------------------------------------------
// Gaussian-process posterior

/// Kernel mode: mu = z'(K + l^2 I)^{-1} k_s, var = k(s,s) - k_s'(K + l^2 I)^{-1} k_s.
/// Feature mode: mu = phi'(Phi'Phi + l I)^{-1} Phi'z, var = l phi'(Phi'Phi + l I)^{-1} phi.
struct GPModel {
  std::optional<KernelSpec> kernel;
  std::optional<CompoundBasis> basis;
  Samples train;
  VectorXd z;
  double lambda_n = 1.0;
  double beta = 0.0;
  Eigen::LLT<MatrixXd> factor;
  VectorXd alpha;    // kernel mode: (K + l^2 I)^{-1} z
  VectorXd weights;  // feature mode: (Phi'Phi + l I)^{-1} Phi'z

  bool kernel_mode() const { return kernel.has_value(); }
  Index state_dim() const { return train.state_dim(); }
  Index input_dim() const { return train.input_dim(); }
};

GPModel fit_gp(const KernelSpec& kernel, const Samples& samples, const VecRef& z, double lambda_n,
               double beta = 0.0);
GPModel fit_gp(const CompoundBasis& basis, const Samples& samples, const VecRef& z,
               double lambda_n, double beta = 0.0);

struct Posterior {
  double mu = 0.0;
  double sigma = 0.0;
  double variance_raw = 0.0;  // before clamping at zero
};

/// Negative variances down to -1e-8 are clamped to 0; beyond that a NumericalError is thrown.
inline constexpr double kVarianceClamp = 1e-8;

Posterior gp_posterior(const GPModel& model, const VecRef& x, const VecRef& u);

/// mu_x(u) = Xi [u;1], sigma_x(u)^2 = [u;1]' G [u;1], Omega'Omega = G.
struct AffinePosterior {
  RowVectorXd Xi;
  MatrixXd G;
  MatrixXd Omega;
  double min_eigenvalue = 0.0;  // of G before clamping

  double mean(const VecRef& u) const { return Xi.dot(augment(u)); }
  double stddev(const VecRef& u) const { return (Omega * augment(u)).norm(); }
};

AffinePosterior affine_decompose(const GPModel& model, const VecRef& x);

/// Symmetric square root factor: Omega'Omega = G with eigenvalues >= -tol clamped to 0.
MatrixXd psd_root(const MatRef& G, double tol, double* min_eigenvalue = nullptr);

// ---------------------------------------------------------------------------
// Persistence. Features are re-derived from (variant, bandwidths, D, seed) on load.

struct ModelRecord {
  std::string family = "gp";  // "gp" or "ridge"
  bool kernel = true;
  KernelVariant variant = KernelVariant::AD;
  std::vector<double> gammas{1.0};
  Index feature_dim = 0;  // per state basis, feature models only
  std::uint64_t seed = 0;
  double lambda = 1.0;
  double beta = 0.0;
  Samples train;
  VectorXd z;
};

void save_model(const ModelRecord& record, const std::string& path);
ModelRecord load_model(const std::string& path);

CompoundBasis basis_for(const ModelRecord& record);
/// Feature models solve in primal form when output_dim <= N, dual otherwise.
RidgeModel fit_ridge(const ModelRecord& record);
GPModel fit_gp(const ModelRecord& record);

}  // namespace caffeine

#endif  // CAFFEINE_REGRESSION_HPP_
