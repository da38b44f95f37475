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

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "caffeine/features.hpp"
#include "caffeine/kernels.hpp"

using namespace caffeine;

namespace {

VectorXd random_vec(Rng& rng, Index n, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

Samples random_samples(Rng& rng, Index N, Index n, Index m) {
  Samples s{MatrixXd(N, n), MatrixXd(N, m)};
  for (Index i = 0; i < N; ++i) {
    s.X.row(i) = random_vec(rng, n).transpose();
    s.U.row(i) = random_vec(rng, m).transpose();
  }
  return s;
}

}  // namespace

TEST_CASE("rbf") {
  const VectorXd x = VectorXd::Zero(3);
  CHECK(rbf(x, x, 1.0) == 1.0);
  VectorXd e(3);
  e << 1.0, 0.0, 0.0;
  CHECK(rbf(x, e, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(rbf(x, 2.0 * e, 0.5) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(rbf_at(e, 1.0) == rbf(e, x, 1.0));
}

TEST_CASE("compound kernels at special inputs") {
  Rng rng(1);
  const KernelSpec adp = KernelSpec::compound(KernelVariant::ADP, 2, 1.0);
  const KernelSpec ad = KernelSpec::compound(KernelVariant::AD, 2, 1.0);
  const VectorXd x = random_vec(rng, 4), xp = random_vec(rng, 4);
  const double k = rbf(x, xp, 1.0);
  const VectorXd zero = VectorXd::Zero(2);
  CHECK(adp_kernel(adp, x, zero, xp, zero) == doctest::Approx(k).epsilon(1e-15));
  CHECK(ad_kernel(ad, x, zero, xp, zero) == doctest::Approx(k).epsilon(1e-15));

  // same state: diagonal kernels equal 1, cross terms equal exp(-2|x|^2)
  const VectorXd u = random_vec(rng, 2), up = random_vec(rng, 2);
  const double yy = u.dot(up) + 1.0;
  CHECK(adp_kernel(adp, x, u, x, up) == doctest::Approx(yy).epsilon(1e-14));
  const double s = u.sum() + 1.0, sp = up.sum() + 1.0;
  const double c2 = std::exp(-2.0 * x.squaredNorm());
  CHECK(ad_kernel(ad, x, u, x, up) == doctest::Approx(yy + c2 * (s * sp - yy)).epsilon(1e-13));

  // explicit hand expansion, m = 1
  const KernelSpec ad1{KernelVariant::AD, {0.5, 2.0}};
  const VectorXd u1 = VectorXd::Constant(1, 0.7), up1 = VectorXd::Constant(1, -1.3);
  const double k1 = rbf(x, xp, 0.5), k2 = rbf(x, xp, 2.0);
  const double diag = u1(0) * up1(0) * k1 + k2;
  const double cross = u1(0) * rbf(x, VectorXd::Zero(4), 0.5) * rbf(xp, VectorXd::Zero(4), 2.0) +
                       up1(0) * rbf(x, VectorXd::Zero(4), 2.0) * rbf(xp, VectorXd::Zero(4), 0.5);
  CHECK(ad_kernel(ad1, x, u1, xp, up1) == doctest::Approx(diag + cross).epsilon(1e-13));
  const KernelSpec adp1{KernelVariant::ADP, {0.5, 2.0}};
  CHECK(adp_kernel(adp1, x, u1, xp, up1) == doctest::Approx(diag).epsilon(1e-14));

  CHECK(vanilla_kernel(KernelSpec::vanilla(1.0), x, u, xp, up) ==
        doctest::Approx(std::exp(-(x - xp).squaredNorm() - (u - up).squaredNorm())).epsilon(1e-14));
}

TEST_CASE("kernel matrix reproduces the kernel") {
  Rng rng(2);
  for (KernelVariant v : {KernelVariant::ADP, KernelVariant::AD}) {
    const KernelSpec spec{v, {0.5, 1.0, 2.0}};
    for (int t = 0; t < 20; ++t) {
      const VectorXd x = random_vec(rng, 4), xp = random_vec(rng, 4);
      const VectorXd u = random_vec(rng, 2, 3.0), up = random_vec(rng, 2, 3.0);
      const MatrixXd M = kernel_matrix(spec, x, xp);
      CHECK(M.rows() == 3);
      CHECK(std::abs(augment(u).dot(M * augment(up)) - kernel(spec, x, u, xp, up)) < 1e-12);
      CHECK((kernel_matrix(spec, xp, x) - M.transpose()).norm() < 1e-15);
      if (v == KernelVariant::ADP) CHECK((M - MatrixXd(M.diagonal().asDiagonal())).norm() == 0.0);
    }
  }
  CHECK_THROWS_AS(kernel_matrix(KernelSpec::vanilla(1.0), VectorXd::Zero(4), VectorXd::Zero(4)),
                  InvalidArgument);
}

TEST_CASE("kernel spec validation") {
  CHECK_THROWS_AS(KernelSpec({KernelVariant::AD, {}}).validate(), InvalidArgument);
  CHECK_THROWS_AS(KernelSpec({KernelVariant::AD, {1.0, -1.0}}).validate(), InvalidArgument);
  CHECK_THROWS_AS(KernelSpec({KernelVariant::VanillaRBF, {1.0, 1.0}}).validate(), InvalidArgument);
  CHECK(KernelSpec::compound(KernelVariant::ADP, 3, 1.0).input_dim() == 3);
  CHECK(KernelSpec::vanilla(1.0).input_dim() == -1);
  const KernelSpec spec = KernelSpec::compound(KernelVariant::AD, 2, 1.0);
  CHECK_THROWS_AS(kernel(spec, VectorXd::Zero(4), VectorXd::Zero(3), VectorXd::Zero(4), VectorXd::Zero(3)),
                  InvalidArgument);
  CHECK(kernel_variant_from_string(to_string(KernelVariant::VanillaRBF)) == KernelVariant::VanillaRBF);
  CHECK_THROWS_AS(kernel_variant_from_string("nope"), InvalidArgument);
}

TEST_CASE("random features average to the AD kernel") {
  Rng rng(3);
  const KernelSpec spec = KernelSpec::compound(KernelVariant::AD, 2, 1.0);
  for (int t = 0; t < 5; ++t) {
    const VectorXd x = random_vec(rng, 4, 0.5), xp = random_vec(rng, 4, 0.5);
    const VectorXd u = random_vec(rng, 2), up = random_vec(rng, 2);
    double acc = 0.0;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
      const CompoundBasis cb = sample_compound_basis(Variant::AD, 4, 2, 128, 1.0, 500 + r);
      acc += eval_compound_basis(cb, x, u).dot(eval_compound_basis(cb, xp, up));
    }
    CHECK(std::abs(acc / reps - ad_kernel(spec, x, u, xp, up)) < 0.05);
  }
}

TEST_CASE("Gram matrices") {
  Rng rng(4);
  const Samples s = random_samples(rng, 30, 4, 2);
  const Samples t = random_samples(rng, 7, 4, 2);
  for (const KernelSpec& spec : {KernelSpec::compound(KernelVariant::ADP, 2, 1.0),
                                 KernelSpec::compound(KernelVariant::AD, 2, 1.0), KernelSpec::vanilla(1.0)}) {
    const MatrixXd K = gram(spec, s);
    CHECK((K - K.transpose()).norm() < 1e-14);
    CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(K).eigenvalues().minCoeff() >= -1e-8);
    const MatrixXd C = cross_gram(spec, s, t);
    CHECK(C.rows() == 30);
    CHECK(C.cols() == 7);
    for (Index j = 0; j < 7; ++j) {
      const VectorXd kv = cross_vector(spec, s, t.X.row(j).transpose(), t.U.row(j).transpose());
      CHECK((kv - C.col(j)).norm() < 1e-14);
    }
    CHECK(std::abs(C(3, 2) - kernel(spec, s.X.row(3).transpose(), s.U.row(3).transpose(),
                                    t.X.row(2).transpose(), t.U.row(2).transpose())) < 1e-15);
  }
}

TEST_CASE("approximation error report") {
  Rng rng(5);
  const KernelSpec spec = KernelSpec::compound(KernelVariant::AD, 2, 1.0);
  std::vector<KernelPair> grid;
  for (int i = 0; i < 40; ++i)
    grid.push_back({random_vec(rng, 4), random_vec(rng, 2), random_vec(rng, 4), random_vec(rng, 2)});

  const CompoundBasis small = sample_compound_basis(Variant::AD, 4, 2, 16, 1.0, 1);
  const CompoundBasis large = sample_compound_basis(Variant::AD, 4, 2, 8192, 1.0, 1);
  const ApproxErrorReport rs = measure_approx_error(small, spec, grid);
  const ApproxErrorReport rl = measure_approx_error(large, spec, grid);
  CHECK(rs.compound_errors.size() == grid.size());
  CHECK(rl.eps_individual < rs.eps_individual);
  CHECK(rl.eps_individual < 0.1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& p = grid[i];
    if (std::isnan(rl.compound_errors[i])) continue;
    const double direct = std::abs(ad_kernel(spec, p.x, p.u, p.xp, p.up) -
                                   eval_compound_basis(large, p.x, p.u).dot(eval_compound_basis(large, p.xp, p.up)));
    CHECK(rl.compound_errors[i] == doctest::Approx(direct).epsilon(1e-9));
    CHECK(rl.scale[i] == doctest::Approx(p.u.dot(p.up) + 1.0).epsilon(1e-14));
  }
}
