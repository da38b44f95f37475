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
#include <string>

#include <doctest.h>

#include "caffeine/regression.hpp"

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

VectorXd smooth_target(const Samples& s) {
  VectorXd z(s.size());
  for (Index i = 0; i < s.size(); ++i)
    z(i) = std::sin(s.X(i, 0)) + s.U(i, 0) * std::cos(s.X(i, 1)) - 0.5 * s.U(i, 1) * s.X(i, 2);
  return z;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("ridge weights") {
  const MatrixXd I = MatrixXd::Identity(5, 5);
  VectorXd z(5);
  z << 1, -2, 3, 0.5, 4;
  CHECK((ridge_weights(I, z, 1.0) - z / 2.0).norm() < 1e-15);
  CHECK((ridge_weights(I, z, 0.0) - z).norm() < 1e-15);

  Rng rng(1);
  const MatrixXd Phi = MatrixXd::NullaryExpr(40, 6, [&] { return std::normal_distribution<double>()(rng); });
  const VectorXd y = MatrixXd::NullaryExpr(40, 1, [&] { return std::normal_distribution<double>()(rng); });
  double prev = ridge_weights(Phi, y, 1e-6).norm();
  for (double lam : {1e-2, 1.0, 1e2, 1e4}) {
    const double cur = ridge_weights(Phi, y, lam).norm();
    CHECK(cur < prev);
    prev = cur;
  }
  const VectorXd w = ridge_weights(Phi, y, 0.3);
  CHECK((Phi.transpose() * (Phi * w - y) + 0.3 * w).norm() < 1e-11);
  CHECK_THROWS_AS(ridge_weights(Phi, y, -1.0), InvalidArgument);
  CHECK_THROWS_AS(ridge_weights(Phi, y.head(10), 1.0), InvalidArgument);
}

TEST_CASE("primal and dual ridge agree") {
  Rng rng(2);
  for (auto [N, D] : {std::pair<Index, Index>{200, 32}, {40, 256}}) {
    const Samples train = random_samples(rng, N, 4, 2);
    const Samples test = random_samples(rng, 25, 4, 2);
    const VectorXd z = smooth_target(train);
    for (Variant v : {Variant::ADP, Variant::AD}) {
      const CompoundBasis cb = sample_compound_basis(v, 4, 2, D, 1.0, 3);
      const RidgeModel p = fit_ridge(cb, train, z, 0.1, RidgeMode::Primal);
      const RidgeModel d = fit_ridge(cb, train, z, 0.1, RidgeMode::Dual);
      const VectorXd yp = predict(p, test), yd = predict(d, test);
      CHECK((yp - yd).norm() / yp.norm() < 1e-8);
      for (Index i = 0; i < 5; ++i) {
        const VectorXd x = test.X.row(i).transpose(), u = test.U.row(i).transpose();
        CHECK(rel(predict(p, x, u), yp(i)) < 1e-12);
        const AffineForm ap = predict_affine(p, x), ad = predict_affine(d, x);
        CHECK(rel(ap(u), yp(i)) < 1e-10);
        CHECK(rel(ad(u), yp(i)) < 1e-8);
      }
    }
  }
}

TEST_CASE("kernel ridge interpolates with small lambda") {
  Rng rng(3);
  const Samples train = random_samples(rng, 30, 4, 2);
  const VectorXd z = smooth_target(train);
  for (const KernelSpec& spec : {KernelSpec::compound(KernelVariant::ADP, 2, 1.0),
                                 KernelSpec::compound(KernelVariant::AD, 2, 1.0), KernelSpec::vanilla(1.0)}) {
    const RidgeModel m = fit_ridge(spec, train, z, 1e-9);
    CHECK(m.mode == RidgeMode::Dual);
    CHECK((predict(m, train) - z).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("compound models are affine in u") {
  Rng rng(4);
  const Samples train = random_samples(rng, 60, 4, 2);
  const VectorXd z = smooth_target(train);
  const RidgeModel km = fit_ridge(KernelSpec::compound(KernelVariant::AD, 2, 1.0), train, z, 0.1);
  const RidgeModel fm = fit_ridge(sample_compound_basis(Variant::ADP, 4, 2, 64, 1.0, 1), train, z, 0.1);
  for (const RidgeModel* m : {&km, &fm}) {
    const VectorXd x = random_vec(rng, 4);
    const VectorXd u1 = random_vec(rng, 2, 3.0), u2 = random_vec(rng, 2, 3.0);
    const double t = 0.3;
    const double lhs = predict(*m, x, t * u1 + (1 - t) * u2);
    const double rhs = t * predict(*m, x, u1) + (1 - t) * predict(*m, x, u2);
    CHECK(std::abs(lhs - rhs) < 1e-10);
    const AffineForm a = predict_affine(*m, x);
    CHECK(std::abs(a(u1) - predict(*m, x, u1)) < 1e-10);
  }
  const RidgeModel vm = fit_ridge(KernelSpec::vanilla(1.0), train, z, 0.1);
  CHECK_THROWS_AS(predict_affine(vm, VectorXd::Zero(4)), InvalidArgument);
}

TEST_CASE("rmse") {
  VectorXd a(3), b(3);
  a << 1, 2, 3;
  b << 1, 2, 5;
  CHECK(rmse(a, b) == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-15));
  CHECK(rmse(a, a) == 0.0);
  CHECK_THROWS_AS(rmse(a, b.head(2)), InvalidArgument);
}

TEST_CASE("GP posterior in kernel mode") {
  Rng rng(5);
  const Samples train = random_samples(rng, 40, 4, 2);
  const VectorXd z = smooth_target(train);
  const KernelSpec spec = KernelSpec::compound(KernelVariant::AD, 2, 1.0);

  // self consistency against a direct solve
  const GPModel gp = fit_gp(spec, train, z, 0.3);
  MatrixXd K = gram(spec, train);
  K.diagonal().array() += 0.09;
  const VectorXd x = random_vec(rng, 4), u = random_vec(rng, 2);
  const VectorXd ks = cross_vector(spec, train, x, u);
  const Posterior p = gp_posterior(gp, x, u);
  CHECK(std::abs(p.mu - z.dot(K.ldlt().solve(ks))) < 1e-10);
  CHECK(std::abs(p.variance_raw - (kernel(spec, x, u, x, u) - ks.dot(K.ldlt().solve(ks)))) < 1e-10);

  // near interpolation at training points
  const GPModel tight = fit_gp(spec, train, z, 1e-4);
  for (Index i = 0; i < 5; ++i) {
    const Posterior q = gp_posterior(tight, train.X.row(i).transpose(), train.U.row(i).transpose());
    CHECK(std::abs(q.mu - z(i)) < 1e-3);
    CHECK(q.sigma < 1e-2);
    CHECK(q.variance_raw >= -1e-10);
  }

  // more data never increases the variance
  const Samples half = train.rows([] {
    std::vector<Index> idx;
    for (Index i = 0; i < 20; ++i) idx.push_back(i);
    return idx;
  }());
  const GPModel small = fit_gp(spec, half, z.head(20), 0.3);
  for (int t = 0; t < 10; ++t) {
    const VectorXd xq = random_vec(rng, 4), uq = random_vec(rng, 2);
    CHECK(gp_posterior(gp, xq, uq).variance_raw <= gp_posterior(small, xq, uq).variance_raw + 1e-12);
  }

  CHECK_THROWS_AS(fit_gp(spec, train, z, 0.0), InvalidArgument);
  CHECK_THROWS_AS(fit_gp(spec, train, z, 1.0, -1.0), InvalidArgument);
}

TEST_CASE("affine decomposition matches direct posterior") {
  Rng rng(6);
  const Samples train = random_samples(rng, 50, 4, 2);
  const VectorXd z = smooth_target(train);
  std::vector<GPModel> models;
  models.push_back(fit_gp(KernelSpec::compound(KernelVariant::ADP, 2, 1.0), train, z, 0.2));
  models.push_back(fit_gp(KernelSpec::compound(KernelVariant::AD, 2, 1.0), train, z, 0.2));
  models.push_back(fit_gp(sample_compound_basis(Variant::ADP, 4, 2, 32, 1.0, 1), train, z, 0.2));
  models.push_back(fit_gp(sample_compound_basis(Variant::AD, 4, 2, 64, 1.0, 1), train, z, 0.2));
  for (const GPModel& gp : models) {
    for (int t = 0; t < 50; ++t) {
      const VectorXd x = random_vec(rng, 4), u = random_vec(rng, 2, 2.0);
      const Posterior p = gp_posterior(gp, x, u);
      const AffinePosterior ap = affine_decompose(gp, x);
      CHECK(rel(ap.mean(u), p.mu) < 1e-8);
      CHECK(rel(ap.stddev(u), p.sigma) < 1e-8);
      CHECK((ap.Omega.transpose() * ap.Omega - ap.G).norm() < 1e-10 * std::max(1.0, ap.G.norm()));
      CHECK(ap.min_eigenvalue >= -1e-8);
    }
  }
  const GPModel vg = fit_gp(KernelSpec::vanilla(1.0), train, z, 0.2);
  CHECK_THROWS_AS(affine_decompose(vg, VectorXd::Zero(4)), InvalidArgument);
}

TEST_CASE("feature GP approaches kernel GP for large D") {
  Rng rng(7);
  const Samples train = random_samples(rng, 30, 4, 2);
  const VectorXd z = smooth_target(train);
  const KernelSpec spec = KernelSpec::compound(KernelVariant::AD, 2, 1.0);
  const RidgeModel km = fit_ridge(spec, train, z, 0.5);
  const RidgeModel fm = fit_ridge(sample_compound_basis(Variant::AD, 4, 2, 8192, 1.0, 11), train, z, 0.5,
                                  RidgeMode::Dual);
  for (int t = 0; t < 10; ++t) {
    const VectorXd x = random_vec(rng, 4), u = random_vec(rng, 2);
    CHECK(std::abs(predict(km, x, u) - predict(fm, x, u)) < 0.1);
  }
}

TEST_CASE("psd root") {
  MatrixXd G(2, 2);
  G << 4, 2, 2, 3;
  const MatrixXd O = psd_root(G, 1e-8);
  CHECK((O.transpose() * O - G).norm() < 1e-13);
  MatrixXd N(2, 2);
  N << 1, 0, 0, -1e-10;
  double mn = 0.0;
  CHECK((psd_root(N, 1e-8, &mn).transpose() * psd_root(N, 1e-8) - MatrixXd(VectorXd::Unit(2, 0).asDiagonal())).norm() < 1e-15);
  CHECK(mn == -1e-10);
  N(1, 1) = -1e-3;
  CHECK_THROWS_AS(psd_root(N, 1e-8), NumericalError);
}

TEST_CASE("model save and load") {
  Rng rng(8);
  ModelRecord r;
  r.family = "ridge";
  r.kernel = false;
  r.variant = KernelVariant::AD;
  r.gammas = {1.0, 0.5, 2.0};
  r.feature_dim = 64;
  r.seed = 42;
  r.lambda = 0.25;
  r.train = random_samples(rng, 30, 4, 2);
  r.z = smooth_target(r.train);
  const std::string path = "test_model_roundtrip.json";
  save_model(r, path);
  const ModelRecord back = load_model(path);
  std::remove(path.c_str());
  CHECK(back.family == "ridge");
  CHECK(back.seed == 42);
  CHECK(back.gammas == r.gammas);
  CHECK((back.train.X - r.train.X).norm() == 0.0);
  CHECK((back.z - r.z).norm() == 0.0);
  const RidgeModel a = fit_ridge(r), b = fit_ridge(back);
  const Samples q = random_samples(rng, 10, 4, 2);
  CHECK((predict(a, q) - predict(b, q)).norm() == 0.0);
  CHECK_THROWS_AS(load_model("does_not_exist.json"), InvalidArgument);

  r.kernel = true;
  r.family = "gp";
  const GPModel g1 = fit_gp(r);
  CHECK(g1.kernel_mode());
}
