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


#include "caffeine/features.hpp"

#include <cmath>

namespace caffeine {

StateBasis sample_state_basis(Index n, Index D, double gamma, std::uint64_t seed) {
  require(n >= 1, "sample_state_basis: state dimension must be >= 1");
  require(D >= 2 && D % 2 == 0, "sample_state_basis: D must be even and >= 2");
  require(gamma > 0.0 && std::isfinite(gamma), "sample_state_basis: gamma must be positive");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 * gamma));
  StateBasis basis;
  basis.gamma = gamma;
  basis.seed = seed;
  basis.frequencies.resize(n, D / 2);
  // column-major fill: column j is one frequency vector
  for (Index j = 0; j < D / 2; ++j)
    for (Index r = 0; r < n; ++r) basis.frequencies(r, j) = normal(rng);
  return basis;
}

VectorXd eval_state_basis(const StateBasis& basis, const VecRef& x) {
  require(x.size() == basis.state_dim(), "eval_state_basis: state dimension mismatch");
  const Index half = basis.frequencies.cols();
  const double scale = std::sqrt(2.0 / static_cast<double>(basis.dim()));
  const VectorXd proj = basis.frequencies.transpose() * x;
  VectorXd out(2 * half);
  for (Index j = 0; j < half; ++j) {
    out(2 * j) = scale * std::sin(proj(j));
    out(2 * j + 1) = scale * std::cos(proj(j));
  }
  return out;
}

MatrixXd eval_state_basis_rows(const StateBasis& basis, const MatRef& X) {
  require(X.cols() == basis.state_dim(), "eval_state_basis_rows: state dimension mismatch");
  const Index half = basis.frequencies.cols();
  const double scale = std::sqrt(2.0 / static_cast<double>(basis.dim()));
  const MatrixXd proj = X * basis.frequencies;
  MatrixXd out(X.rows(), 2 * half);
  for (Index j = 0; j < half; ++j) {
    out.col(2 * j) = scale * proj.col(j).array().sin();
    out.col(2 * j + 1) = scale * proj.col(j).array().cos();
  }
  return out;
}

std::string to_string(Variant v) { return v == Variant::ADP ? "ADP" : "AD"; }

Variant variant_from_string(const std::string& s) {
  if (s == "ADP") return Variant::ADP;
  if (s == "AD") return Variant::AD;
  throw InvalidArgument("unknown compound variant '" + s + "'");
}

CompoundBasis sample_compound_basis(Variant variant, Index n, Index m, Index D,
                                    std::span<const double> gammas, std::uint64_t seed) {
  require(m >= 1, "sample_compound_basis: input dimension must be >= 1");
  require(static_cast<Index>(gammas.size()) == m + 1,
          "sample_compound_basis: need exactly m+1 bandwidths");
  CompoundBasis cb;
  cb.variant = variant;
  cb.seed = seed;
  cb.bases.reserve(m + 1);
  for (Index i = 0; i <= m; ++i)
    cb.bases.push_back(sample_state_basis(n, D, gammas[i], stream_seed(seed, i)));
  return cb;
}

CompoundBasis sample_compound_basis(Variant variant, Index n, Index m, Index D, double gamma,
                                    std::uint64_t seed) {
  const std::vector<double> gammas(static_cast<std::size_t>(m + 1), gamma);
  return sample_compound_basis(variant, n, m, D, gammas, seed);
}

VectorXd eval_compound_basis(const CompoundBasis& cb, const VecRef& x, const VecRef& u) {
  require(u.size() == cb.input_dim(), "eval_compound_basis: input dimension mismatch");
  return basis_stack(cb, x) * augment(u);
}

MatrixXd basis_stack(const CompoundBasis& cb, const VecRef& x) {
  const Index D = cb.basis_dim();
  const Index k = cb.input_dim() + 1;
  if (cb.variant == Variant::ADP) {
    MatrixXd psi = MatrixXd::Zero(D * k, k);
    for (Index i = 0; i < k; ++i) psi.block(i * D, i, D, 1) = eval_state_basis(cb.bases[i], x);
    return psi;
  }
  MatrixXd psi(D, k);
  for (Index i = 0; i < k; ++i) psi.col(i) = eval_state_basis(cb.bases[i], x);
  return psi;
}

MatrixXd feature_matrix(const CompoundBasis& cb, const Samples& samples) {
  check_samples(samples, "feature_matrix");
  require(samples.size() > 0, "feature_matrix: empty sample list");
  require(samples.state_dim() == cb.state_dim(), "feature_matrix: state dimension mismatch");
  require(samples.input_dim() == cb.input_dim(), "feature_matrix: input dimension mismatch");

  const Index N = samples.size();
  const Index D = cb.basis_dim();
  const Index m = cb.input_dim();
  MatrixXd phi(N, cb.output_dim());
  if (cb.variant == Variant::ADP) {
    for (Index i = 0; i < m; ++i)
      phi.middleCols(i * D, D) =
          samples.U.col(i).asDiagonal() * eval_state_basis_rows(cb.bases[i], samples.X);
    phi.middleCols(m * D, D) = eval_state_basis_rows(cb.bases[m], samples.X);
  } else {
    phi = eval_state_basis_rows(cb.bases[m], samples.X);
    for (Index i = 0; i < m; ++i)
      phi.noalias() += samples.U.col(i).asDiagonal() * eval_state_basis_rows(cb.bases[i], samples.X);
  }
  return phi;
}

}  // namespace caffeine
