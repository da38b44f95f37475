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


#include "caffeine/regression.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>

#include "json.hpp"

namespace caffeine {

namespace {

template <typename Llt>
void check_factor(const Llt& llt, const char* who) {
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(who) + ": matrix is not numerically positive definite");
}

}  // namespace

VectorXd ridge_weights(const MatRef& Phi, const VecRef& z, double lambda) {
  require(lambda >= 0.0, "ridge_weights: lambda must be >= 0");
  require(Phi.rows() == z.size(), "ridge_weights: row count differs from target length");
  const Index D = Phi.cols();
  MatrixXd A = MatrixXd::Zero(D, D);
  A.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose());
  A.diagonal().array() += lambda;
  Eigen::LLT<Eigen::Ref<MatrixXd>> llt(A);
  check_factor(llt, "ridge_weights");
  return llt.solve(Phi.transpose() * z);
}

VectorXd ridge_dual_coefficients(MatrixXd& K, const VecRef& z, double lambda) {
  require(lambda >= 0.0, "ridge_dual_coefficients: lambda must be >= 0");
  require(K.rows() == K.cols() && K.rows() == z.size(), "ridge_dual_coefficients: shape mismatch");
  K.diagonal().array() += lambda;
  Eigen::LLT<Eigen::Ref<MatrixXd>> llt(K);
  check_factor(llt, "ridge_dual_coefficients");
  return llt.solve(z);
}

RidgeModel fit_ridge(const CompoundBasis& basis, const Samples& samples, const VecRef& z,
                     double lambda, RidgeMode mode) {
  require(samples.size() == z.size(), "fit_ridge: sample and target counts differ");
  RidgeModel model;
  model.mode = mode;
  model.lambda = lambda;
  model.basis = basis;
  const MatrixXd Phi = feature_matrix(basis, samples);
  if (mode == RidgeMode::Primal) {
    model.weights = ridge_weights(Phi, z, lambda);
  } else {
    MatrixXd K = Phi * Phi.transpose();
    model.coeffs = ridge_dual_coefficients(K, z, lambda);
    model.train = samples;
  }
  return model;
}

RidgeModel fit_ridge(const KernelSpec& kernel, const Samples& samples, const VecRef& z,
                     double lambda) {
  require(samples.size() == z.size(), "fit_ridge: sample and target counts differ");
  RidgeModel model;
  model.mode = RidgeMode::Dual;
  model.lambda = lambda;
  model.kernel = kernel;
  model.train = samples;
  MatrixXd K = gram(kernel, samples);
  model.coeffs = ridge_dual_coefficients(K, z, lambda);
  return model;
}

VectorXd predict(const RidgeModel& model, const Samples& queries) {
  check_samples(queries, "predict");
  require(queries.state_dim() == model.state_dim() && queries.input_dim() == model.input_dim(),
          "predict: query dimension mismatch");
  if (model.kernel) return cross_gram(*model.kernel, queries, model.train) * model.coeffs;
  const MatrixXd Phi = feature_matrix(*model.basis, queries);
  if (model.mode == RidgeMode::Primal) return Phi * model.weights;
  // k_s = Phi_train phi(s)
  const MatrixXd Ks = Phi * feature_matrix(*model.basis, model.train).transpose();
  return Ks * model.coeffs;
}

double predict(const RidgeModel& model, const VecRef& x, const VecRef& u) {
  require(x.size() == model.state_dim() && u.size() == model.input_dim(),
          "predict: query dimension mismatch");
  return predict(model, Samples{x.transpose(), u.transpose()})(0);
}

AffineForm predict_affine(const RidgeModel& model, const VecRef& x) {
  const Index m = model.input_dim();
  require(x.size() == model.state_dim(), "predict_affine: state dimension mismatch");
  VectorXd row;
  if (model.kernel) {
    require(model.kernel->variant != KernelVariant::VanillaRBF,
            "predict_affine: VanillaRBF is not affine in u");
    // prediction = sum_i c_i [u_i;1]' M(x_i, x) [u;1]
    row = VectorXd::Zero(m + 1);
    for (Index i = 0; i < model.train.size(); ++i)
      row.noalias() += model.coeffs(i) *
                       (kernel_matrix(*model.kernel, model.train.X.row(i).transpose(), x).transpose() *
                        augment(model.train.U.row(i).transpose()));
  } else {
    const MatrixXd Psi = basis_stack(*model.basis, x);
    if (model.mode == RidgeMode::Primal) {
      row = Psi.transpose() * model.weights;
    } else {
      const MatrixXd Phi = feature_matrix(*model.basis, model.train);
      row = Psi.transpose() * (Phi.transpose() * model.coeffs);
    }
  }
  return {row(m), row.head(m)};
}

double rmse(const VecRef& prediction, const VecRef& target) {
  require(prediction.size() == target.size() && target.size() > 0, "rmse: size mismatch");
  return std::sqrt((prediction - target).squaredNorm() / static_cast<double>(target.size()));
}

// ---------------------------------------------------------------------------

GPModel fit_gp(const KernelSpec& kernel, const Samples& samples, const VecRef& z, double lambda_n,
               double beta) {
  require(lambda_n > 0.0, "fit_gp: lambda_n must be > 0");
  require(beta >= 0.0, "fit_gp: beta must be >= 0");
  require(samples.size() == z.size() && samples.size() > 0, "fit_gp: bad training data");
  GPModel model;
  model.kernel = kernel;
  model.train = samples;
  model.z = z;
  model.lambda_n = lambda_n;
  model.beta = beta;
  MatrixXd K = gram(kernel, samples);
  K.diagonal().array() += lambda_n * lambda_n;
  model.factor.compute(K);
  check_factor(model.factor, "fit_gp");
  model.alpha = model.factor.solve(z);
  return model;
}

GPModel fit_gp(const CompoundBasis& basis, const Samples& samples, const VecRef& z,
               double lambda_n, double beta) {
  require(lambda_n > 0.0, "fit_gp: lambda_n must be > 0");
  require(beta >= 0.0, "fit_gp: beta must be >= 0");
  require(samples.size() == z.size() && samples.size() > 0, "fit_gp: bad training data");
  GPModel model;
  model.basis = basis;
  model.train = samples;
  model.z = z;
  model.lambda_n = lambda_n;
  model.beta = beta;
  const MatrixXd Phi = feature_matrix(basis, samples);
  MatrixXd A = MatrixXd::Zero(Phi.cols(), Phi.cols());
  A.selfadjointView<Eigen::Lower>().rankUpdate(Phi.transpose());
  A.diagonal().array() += lambda_n;
  model.factor.compute(A);
  check_factor(model.factor, "fit_gp");
  model.weights = model.factor.solve(Phi.transpose() * z);
  return model;
}

namespace {

double clamp_variance(double v) {
  if (!std::isfinite(v) || v < -kVarianceClamp)
    throw NumericalError("gp_posterior: posterior variance " + std::to_string(v) +
                         " below clamp tolerance");
  return v < 0.0 ? 0.0 : v;
}

}  // namespace

Posterior gp_posterior(const GPModel& model, const VecRef& x, const VecRef& u) {
  require(x.size() == model.state_dim() && u.size() == model.input_dim(),
          "gp_posterior: query dimension mismatch");
  Posterior p;
  if (model.kernel_mode()) {
    const VectorXd ks = cross_vector(*model.kernel, model.train, x, u);
    p.mu = model.alpha.dot(ks);
    const VectorXd v = model.factor.matrixL().solve(ks);
    p.variance_raw = kernel(*model.kernel, x, u, x, u) - v.squaredNorm();
  } else {
    const VectorXd phi = eval_compound_basis(*model.basis, x, u);
    p.mu = phi.dot(model.weights);
    const VectorXd v = model.factor.matrixL().solve(phi);
    p.variance_raw = model.lambda_n * v.squaredNorm();
  }
  p.sigma = std::sqrt(clamp_variance(p.variance_raw));
  return p;
}

MatrixXd psd_root(const MatRef& G, double tol, double* min_eigenvalue) {
  require(G.rows() == G.cols(), "psd_root: matrix must be square");
  const MatrixXd S = 0.5 * (G + G.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("psd_root: eigendecomposition failed");
  VectorXd lam = es.eigenvalues();
  if (min_eigenvalue) *min_eigenvalue = lam.minCoeff();
  if (lam.minCoeff() < -tol)
    throw NumericalError("psd_root: matrix has eigenvalue " + std::to_string(lam.minCoeff()) +
                         " below -" + std::to_string(tol));
  lam = lam.cwiseMax(0.0);
  return lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

AffinePosterior affine_decompose(const GPModel& model, const VecRef& x) {
  require(x.size() == model.state_dim(), "affine_decompose: state dimension mismatch");
  const Index m = model.input_dim();
  AffinePosterior ap;
  if (model.kernel_mode()) {
    const KernelSpec& spec = *model.kernel;
    require(spec.variant != KernelVariant::VanillaRBF,
            "affine_decompose: VanillaRBF has no affine decomposition");
    const Index N = model.train.size();
    // row i of k_train is y_i' M(x_i, x), so k_s = k_train [u;1]
    MatrixXd ktrain(N, m + 1);
    for (Index i = 0; i < N; ++i)
      ktrain.row(i) = augment(model.train.U.row(i).transpose()).transpose() *
                      kernel_matrix(spec, model.train.X.row(i).transpose(), x);
    ap.Xi = model.alpha.transpose() * ktrain;
    const MatrixXd V = model.factor.matrixL().solve(ktrain);
    ap.G = kernel_matrix(spec, x, x) - V.transpose() * V;
  } else {
    const MatrixXd Psi = basis_stack(*model.basis, x);
    ap.Xi = (Psi.transpose() * model.weights).transpose();
    const MatrixXd V = model.factor.matrixL().solve(Psi);
    ap.G = model.lambda_n * (V.transpose() * V);
  }
  ap.G = 0.5 * (ap.G + ap.G.transpose());
  ap.Omega = psd_root(ap.G, kVarianceClamp, &ap.min_eigenvalue);
  return ap;
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json matrix_to_json(const MatrixXd& M) {
  json rows = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j, Index cols) {
  MatrixXd M(static_cast<Index>(j.size()), cols);
  for (Index r = 0; r < M.rows(); ++r) {
    require(static_cast<Index>(j[r].size()) == cols, "load_model: ragged matrix");
    for (Index c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

}  // namespace

void save_model(const ModelRecord& r, const std::string& path) {
  json j;
  j["format"] = "caffeine-model";
  j["version"] = 1;
  j["family"] = r.family;
  j["kernel"] = r.kernel;
  j["variant"] = to_string(r.variant);
  j["gammas"] = r.gammas;
  j["feature_dim"] = r.feature_dim;
  j["seed"] = r.seed;
  j["lambda"] = r.lambda;
  j["beta"] = r.beta;
  j["state_dim"] = r.train.state_dim();
  j["input_dim"] = r.train.input_dim();
  j["X"] = matrix_to_json(r.train.X);
  j["U"] = matrix_to_json(r.train.U);
  j["z"] = std::vector<double>(r.z.data(), r.z.data() + r.z.size());
  std::ofstream out(path);
  if (!out) throw InvalidArgument("save_model: cannot open " + path);
  // doubles are emitted in shortest round-trip form
  out << j.dump();
}

ModelRecord load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("load_model: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("load_model: ") + e.what());
  }
  require(j.value("format", "") == "caffeine-model", "load_model: not a caffeine model file");
  require(j.value("version", 0) == 1, "load_model: unsupported version");
  ModelRecord r;
  r.family = j.at("family").get<std::string>();
  r.kernel = j.at("kernel").get<bool>();
  r.variant = kernel_variant_from_string(j.at("variant").get<std::string>());
  r.gammas = j.at("gammas").get<std::vector<double>>();
  r.feature_dim = j.at("feature_dim").get<Index>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.lambda = j.at("lambda").get<double>();
  r.beta = j.at("beta").get<double>();
  const Index n = j.at("state_dim").get<Index>();
  const Index m = j.at("input_dim").get<Index>();
  r.train.X = matrix_from_json(j.at("X"), n);
  r.train.U = matrix_from_json(j.at("U"), m);
  const auto z = j.at("z").get<std::vector<double>>();
  r.z = Eigen::Map<const VectorXd>(z.data(), static_cast<Index>(z.size()));
  require(r.z.size() == r.train.size(), "load_model: label count mismatch");
  return r;
}

CompoundBasis basis_for(const ModelRecord& r) {
  require(!r.kernel, "basis_for: record describes a kernel model");
  require(r.variant != KernelVariant::VanillaRBF, "basis_for: no random-feature VanillaRBF model");
  const Variant v = r.variant == KernelVariant::ADP ? Variant::ADP : Variant::AD;
  return sample_compound_basis(v, r.train.state_dim(), r.train.input_dim(), r.feature_dim,
                               r.gammas, r.seed);
}

RidgeModel fit_ridge(const ModelRecord& r) {
  if (r.kernel) return fit_ridge(KernelSpec{r.variant, r.gammas}, r.train, r.z, r.lambda);
  const CompoundBasis basis = basis_for(r);
  const RidgeMode mode = basis.output_dim() <= r.train.size() ? RidgeMode::Primal : RidgeMode::Dual;
  return fit_ridge(basis, r.train, r.z, r.lambda, mode);
}

GPModel fit_gp(const ModelRecord& r) {
  if (r.kernel) return fit_gp(KernelSpec{r.variant, r.gammas}, r.train, r.z, r.lambda, r.beta);
  return fit_gp(basis_for(r), r.train, r.z, r.lambda, r.beta);
}

}  // namespace caffeine
