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


#ifndef CAFFEINE_KERNELS_HPP_
#define CAFFEINE_KERNELS_HPP_

#include <string>
#include <vector>

#include "caffeine/common.hpp"
#include "caffeine/features.hpp"

namespace caffeine {

enum class KernelVariant { VanillaRBF, ADP, AD };

std::string to_string(KernelVariant v);
KernelVariant kernel_variant_from_string(const std::string& s);

/// VanillaRBF uses gammas[0] on the concatenated (x, u); ADP and AD use one
/// bandwidth per input coordinate plus one for the drift term (m+1 total).
struct KernelSpec {
  KernelVariant variant = KernelVariant::AD;
  std::vector<double> gammas;

  static KernelSpec vanilla(double gamma) { return {KernelVariant::VanillaRBF, {gamma}}; }
  static KernelSpec compound(KernelVariant v, Index m, double gamma) {
    return {v, std::vector<double>(static_cast<std::size_t>(m + 1), gamma)};
  }

  void validate() const;
  /// Input dimension implied by the bandwidth list; -1 for VanillaRBF.
  Index input_dim() const;
};

double rbf(const VecRef& x, const VecRef& xp, double gamma);

/// Shift-invariant one-argument form k(v) = exp(-gamma |v|^2) = rbf(v, 0).
double rbf_at(const VecRef& v, double gamma);

double adp_kernel(const KernelSpec& spec, const VecRef& x, const VecRef& u, const VecRef& xp,
                  const VecRef& up);
double ad_kernel(const KernelSpec& spec, const VecRef& x, const VecRef& u, const VecRef& xp,
                 const VecRef& up);
double vanilla_kernel(const KernelSpec& spec, const VecRef& x, const VecRef& u, const VecRef& xp,
                      const VecRef& up);

/// Dispatch on spec.variant.
double kernel(const KernelSpec& spec, const VecRef& x, const VecRef& u, const VecRef& xp,
              const VecRef& up);

/// (m+1) x (m+1) matrix M(x, x') with k(s, s') = [u;1]' M [u';1]. Diagonal for
/// ADP; D + A for AD. Undefined for VanillaRBF.
MatrixXd kernel_matrix(const KernelSpec& spec, const VecRef& x, const VecRef& xp);

MatrixXd gram(const KernelSpec& spec, const Samples& samples);

/// Rows index `a`, columns index `b`.
MatrixXd cross_gram(const KernelSpec& spec, const Samples& a, const Samples& b);

VectorXd cross_vector(const KernelSpec& spec, const Samples& samples, const VecRef& x,
                      const VecRef& u);

/// One evaluation pair for approximation-error measurement.
struct KernelPair {
  VectorXd x, u, xp, up;
};

struct ApproxErrorReport {
  /// max over i, j and all pairs of grid states of |M_ij - Mhat_ij|, the
  /// entrywise error of the compound kernel matrix (diagonal terms are the
  /// individual kernel errors).
  double eps_individual = 0.0;
  /// sup over grid of |k - phi'phi'| / (u'u' + 1)
  double compound_sup = 0.0;
  /// per-point |k - phi'phi'|, NaN for excluded points
  std::vector<double> compound_errors;
  /// per-point u'u' + 1
  std::vector<double> scale;
  /// points with u'u' + 1 <= 0, skipped
  int excluded = 0;
  /// compound error <= eps_individual * (u'u' + 1) at every kept point
  bool bound_holds = true;
};

ApproxErrorReport measure_approx_error(const CompoundBasis& cb, const KernelSpec& spec,
                                       const std::vector<KernelPair>& grid);

}  // namespace caffeine

#endif  // CAFFEINE_KERNELS_HPP_
