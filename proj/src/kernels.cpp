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


#include "caffeine/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace caffeine {

std::string to_string(KernelVariant v) {
  switch (v) {
    case KernelVariant::VanillaRBF: return "Vanilla";
    case KernelVariant::ADP: return "ADP";
    case KernelVariant::AD: return "AD";
  }
  return "?";
}

KernelVariant kernel_variant_from_string(const std::string& s) {
  if (s == "Vanilla" || s == "VanillaRBF") return KernelVariant::VanillaRBF;
  if (s == "ADP") return KernelVariant::ADP;
  if (s == "AD") return KernelVariant::AD;
  throw InvalidArgument("unknown kernel variant '" + s + "'");
}

void KernelSpec::validate() const {
  require(!gammas.empty(), "KernelSpec: no bandwidths");
  for (double g : gammas) require(g > 0.0 && std::isfinite(g), "KernelSpec: bandwidths must be > 0");
  if (variant == KernelVariant::VanillaRBF)
    require(gammas.size() == 1, "KernelSpec: VanillaRBF takes exactly one bandwidth");
  else
    require(gammas.size() >= 2, "KernelSpec: compound kernels need m+1 >= 2 bandwidths");
}

Index KernelSpec::input_dim() const {
  return variant == KernelVariant::VanillaRBF ? -1 : static_cast<Index>(gammas.size()) - 1;
}

double rbf(const VecRef& x, const VecRef& xp, double gamma) {
  require(x.size() == xp.size(), "rbf: dimension mismatch");
  return std::exp(-gamma * (x - xp).squaredNorm());
}

double rbf_at(const VecRef& v, double gamma) { return std::exp(-gamma * v.squaredNorm()); }

namespace {

void check_pair(const KernelSpec& spec, KernelVariant want, const VecRef& x, const VecRef& u,
                const VecRef& xp, const VecRef& up, const char* who) {
  spec.validate();
  require(spec.variant == want, std::string(who) + ": wrong kernel variant");
  require(x.size() == xp.size(), std::string(who) + ": state dimension mismatch");
  require(u.size() == up.size(), std::string(who) + ": input dimension mismatch");
  if (want != KernelVariant::VanillaRBF)
    require(u.size() == spec.input_dim(), std::string(who) + ": input dimension mismatch");
}

}  // namespace

MatrixXd kernel_matrix(const KernelSpec& spec, const VecRef& x, const VecRef& xp) {
  require(spec.variant != KernelVariant::VanillaRBF,
          "kernel_matrix: VanillaRBF has no affine decomposition");
  require(x.size() == xp.size(), "kernel_matrix: state dimension mismatch");
  const Index k = static_cast<Index>(spec.gammas.size());
  const VectorXd diff = x - xp;
  MatrixXd M = MatrixXd::Zero(k, k);
  for (Index i = 0; i < k; ++i) M(i, i) = rbf_at(diff, spec.gammas[i]);
  if (spec.variant == KernelVariant::AD) {
    VectorXd kx(k), kxp(k);
    for (Index i = 0; i < k; ++i) {
      kx(i) = rbf_at(x, spec.gammas[i]);
      kxp(i) = rbf_at(xp, spec.gammas[i]);
    }
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j)
        if (i != j) M(i, j) = kx(i) * kxp(j);
  }
  return M;
}

double adp_kernel(const KernelSpec& spec, const VecRef& x, const VecRef& u, const VecRef& xp,
                  const VecRef& up) {
  check_pair(spec, KernelVariant::ADP, x, u, xp, up, "adp_kernel");
  const Index m = u.size();
  const VectorXd diff = x - xp;
  double acc = rbf_at(diff, spec.gammas[m]);
  for (Index i = 0; i < m; ++i) acc += u(i) * up(i) * rbf_at(diff, spec.gammas[i]);
  return acc;
}

double ad_kernel(const KernelSpec& spec, const VecRef& x, const VecRef& u, const VecRef& xp,
                 const VecRef& up) {
  check_pair(spec, KernelVariant::AD, x, u, xp, up, "ad_kernel");
  return augment(u).dot(kernel_matrix(spec, x, xp) * augment(up));
}

double vanilla_kernel(const KernelSpec& spec, const VecRef& x, const VecRef& u, const VecRef& xp,
                      const VecRef& up) {
  check_pair(spec, KernelVariant::VanillaRBF, x, u, xp, up, "vanilla_kernel");
  return std::exp(-spec.gammas[0] * ((x - xp).squaredNorm() + (u - up).squaredNorm()));
}

double kernel(const KernelSpec& spec, const VecRef& x, const VecRef& u, const VecRef& xp,
              const VecRef& up) {
  switch (spec.variant) {
    case KernelVariant::VanillaRBF: return vanilla_kernel(spec, x, u, xp, up);
    case KernelVariant::ADP: return adp_kernel(spec, x, u, xp, up);
    case KernelVariant::AD: return ad_kernel(spec, x, u, xp, up);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

/// Bandwidth index -> slot in a deduplicated list, so equal bandwidths share
/// one exp() pass.
struct BandwidthSlots {
  std::vector<double> unique;
  std::vector<std::size_t> slot;

  explicit BandwidthSlots(const std::vector<double>& gammas) {
    for (double g : gammas) {
      auto it = std::find(unique.begin(), unique.end(), g);
      if (it == unique.end()) {
        slot.push_back(unique.size());
        unique.push_back(g);
      } else {
        slot.push_back(static_cast<std::size_t>(it - unique.begin()));
      }
    }
  }
};

/// k_i(x_a) for every row a and bandwidth i.
MatrixXd origin_kernels(const MatrixXd& X, const std::vector<double>& gammas) {
  const VectorXd sq = X.rowwise().squaredNorm();
  MatrixXd R(X.rows(), static_cast<Index>(gammas.size()));
  for (std::size_t i = 0; i < gammas.size(); ++i)
    R.col(static_cast<Index>(i)) = (-gammas[i] * sq.array()).exp();
  return R;
}

MatrixXd augmented(const MatrixXd& U) {
  MatrixXd Y(U.rows(), U.cols() + 1);
  Y.leftCols(U.cols()) = U;
  Y.col(U.cols()).setOnes();
  return Y;
}

}  // namespace

MatrixXd cross_gram(const KernelSpec& spec, const Samples& a, const Samples& b) {
  spec.validate();
  check_samples(a, "cross_gram");
  check_samples(b, "cross_gram");
  require(a.size() > 0 && b.size() > 0, "cross_gram: empty samples");
  require(a.state_dim() == b.state_dim() && a.input_dim() == b.input_dim(),
          "cross_gram: dimension mismatch");

  const Index na = a.size();
  const Index nb = b.size();
  MatrixXd K(na, nb);

  if (spec.variant == KernelVariant::VanillaRBF) {
    MatrixXd Sa(na, a.state_dim() + a.input_dim());
    Sa << a.X, a.U;
    MatrixXd Sb(nb, b.state_dim() + b.input_dim());
    Sb << b.X, b.U;
    for (Index j = 0; j < nb; ++j)
      K.col(j) = (-spec.gammas[0] * (Sa.rowwise() - Sb.row(j)).rowwise().squaredNorm().array()).exp();
    return K;
  }

  require(a.input_dim() == spec.input_dim(), "cross_gram: input dimension mismatch");
  const Index k = static_cast<Index>(spec.gammas.size());
  const BandwidthSlots slots(spec.gammas);
  const MatrixXd Ya = augmented(a.U);
  const MatrixXd Yb = augmented(b.U);

  MatrixXd Ra, Rb;
  VectorXd sa, sb;
  MatrixXd YRa;
  if (spec.variant == KernelVariant::AD) {
    Ra = origin_kernels(a.X, spec.gammas);
    Rb = origin_kernels(b.X, spec.gammas);
    YRa = Ya.cwiseProduct(Ra);
    sa = YRa.rowwise().sum();
    sb = Yb.cwiseProduct(Rb).rowwise().sum();
  }

  MatrixXd kcols(na, static_cast<Index>(slots.unique.size()));
  for (Index j = 0; j < nb; ++j) {
    const VectorXd d2 = (a.X.rowwise() - b.X.row(j)).rowwise().squaredNorm();
    for (std::size_t g = 0; g < slots.unique.size(); ++g)
      kcols.col(static_cast<Index>(g)) = (-slots.unique[g] * d2.array()).exp();
    auto col = K.col(j);
    col.setZero();
    for (Index i = 0; i < k; ++i)
      col.noalias() += (Yb(j, i) * Ya.col(i)).cwiseProduct(kcols.col(static_cast<Index>(slots.slot[i])));
    if (spec.variant == KernelVariant::AD) {
      // dense cross terms: (sum_i y_i k_i(x))(sum_j y'_j k_j(x')) minus their diagonal
      col.noalias() += sb(j) * sa;
      for (Index i = 0; i < k; ++i) col.noalias() -= (Yb(j, i) * Rb(j, i)) * YRa.col(i);
    }
  }
  return K;
}

MatrixXd gram(const KernelSpec& spec, const Samples& samples) {
  require(samples.size() > 0, "gram: empty samples");
  return cross_gram(spec, samples, samples);
}

VectorXd cross_vector(const KernelSpec& spec, const Samples& samples, const VecRef& x,
                      const VecRef& u) {
  require(samples.size() > 0, "cross_vector: empty samples");
  require(x.size() == samples.state_dim() && u.size() == samples.input_dim(),
          "cross_vector: query dimension mismatch");
  Samples q{x.transpose(), u.transpose()};
  return cross_gram(spec, samples, q).col(0);
}

ApproxErrorReport measure_approx_error(const CompoundBasis& cb, const KernelSpec& spec,
                                       const std::vector<KernelPair>& grid) {
  spec.validate();
  require(!grid.empty(), "measure_approx_error: empty grid");
  require((cb.variant == Variant::ADP && spec.variant == KernelVariant::ADP) ||
              (cb.variant == Variant::AD && spec.variant == KernelVariant::AD),
          "measure_approx_error: basis and kernel variants differ");
  require(spec.input_dim() == cb.input_dim(), "measure_approx_error: input dimension mismatch");
  for (Index i = 0; i <= cb.input_dim(); ++i)
    require(cb.bases[i].gamma == spec.gammas[i], "measure_approx_error: bandwidth mismatch");

  const Index P = static_cast<Index>(grid.size());
  const Index n = cb.state_dim();
  const Index k = cb.input_dim() + 1;
  MatrixXd X(P, n), Xp(P, n);
  for (Index p = 0; p < P; ++p) {
    X.row(p) = grid[p].x.transpose();
    Xp.row(p) = grid[p].xp.transpose();
  }

  std::vector<MatrixXd> psi, psip;
  for (Index i = 0; i < k; ++i) {
    psi.push_back(eval_state_basis_rows(cb.bases[i], X));
    psip.push_back(eval_state_basis_rows(cb.bases[i], Xp));
  }
  const MatrixXd R = origin_kernels(X, spec.gammas);
  const MatrixXd Rp = origin_kernels(Xp, spec.gammas);

  ApproxErrorReport rep;
  // entrywise kernel-matrix error over all pairs of grid states
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      if (i != j && cb.variant == Variant::ADP) continue;
      const MatrixXd approx = psi[i] * psip[j].transpose();
      MatrixXd exact(P, P);
      if (i == j) {
        for (Index b = 0; b < P; ++b)
          exact.col(b) =
              (-spec.gammas[i] * (X.rowwise() - Xp.row(b)).rowwise().squaredNorm().array()).exp();
      } else {
        exact = R.col(i) * Rp.col(j).transpose();
      }
      rep.eps_individual = std::max(rep.eps_individual, (exact - approx).cwiseAbs().maxCoeff());
    }
  }

  for (Index p = 0; p < P; ++p) {
    const KernelPair& g = grid[p];
    const double s = g.u.dot(g.up) + 1.0;
    rep.scale.push_back(s);
    if (s <= 0.0) {
      ++rep.excluded;
      rep.compound_errors.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double exact = kernel(spec, g.x, g.u, g.xp, g.up);
    const double approx = eval_compound_basis(cb, g.x, g.u).dot(eval_compound_basis(cb, g.xp, g.up));
    const double err = std::abs(exact - approx);
    rep.compound_errors.push_back(err);
    rep.compound_sup = std::max(rep.compound_sup, err / s);
    if (err > rep.eps_individual * s) rep.bound_holds = false;
  }
  return rep;
}

}  // namespace caffeine
