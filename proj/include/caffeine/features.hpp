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


#ifndef CAFFEINE_FEATURES_HPP_
#define CAFFEINE_FEATURES_HPP_

#include <span>
#include <string>
#include <vector>

#include "caffeine/common.hpp"

namespace caffeine {

/// Random Fourier basis over the state: psi(x) = sqrt(2/D) [sin(t_1'x), cos(t_1'x), ...].
/// Frequencies t_j ~ N(0, 2*gamma*I), so E[psi(x)'psi(x')] = exp(-gamma |x - x'|^2).
struct StateBasis {
  MatrixXd frequencies;  // n x D/2, one column per frequency
  double gamma = 1.0;
  std::uint64_t seed = 0;

  Index state_dim() const { return frequencies.rows(); }
  Index dim() const { return 2 * frequencies.cols(); }
};

StateBasis sample_state_basis(Index n, Index D, double gamma, std::uint64_t seed);

VectorXd eval_state_basis(const StateBasis& basis, const VecRef& x);

/// Row i is psi(X.row(i)).
MatrixXd eval_state_basis_rows(const StateBasis& basis, const MatRef& X);

enum class Variant { ADP, AD };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// m+1 state bases combined affinely in the input.
///   ADP: [u_1 psi_1; ...; u_m psi_m; psi_{m+1}]   (length D(m+1))
///   AD:  sum_i u_i psi_i + psi_{m+1}              (length D)
struct CompoundBasis {
  std::vector<StateBasis> bases;
  Variant variant = Variant::AD;
  std::uint64_t seed = 0;

  Index input_dim() const { return static_cast<Index>(bases.size()) - 1; }
  Index state_dim() const { return bases.front().state_dim(); }
  Index basis_dim() const { return bases.front().dim(); }
  Index output_dim() const {
    return variant == Variant::ADP ? basis_dim() * (input_dim() + 1) : basis_dim();
  }
};

/// Basis i is drawn from seed stream (seed, i).
CompoundBasis sample_compound_basis(Variant variant, Index n, Index m, Index D,
                                    std::span<const double> gammas, std::uint64_t seed);
CompoundBasis sample_compound_basis(Variant variant, Index n, Index m, Index D,
                                    double gamma, std::uint64_t seed);

VectorXd eval_compound_basis(const CompoundBasis& cb, const VecRef& x, const VecRef& u);

/// Input-independent factor Psi(x) with phi(x, u) = Psi(x) [u; 1]:
/// block diagonal (D(m+1) x (m+1)) for ADP, column stack (D x (m+1)) for AD.
MatrixXd basis_stack(const CompoundBasis& cb, const VecRef& x);

/// N x output_dim, row i = phi(x_i, u_i).
MatrixXd feature_matrix(const CompoundBasis& cb, const Samples& samples);

}  // namespace caffeine

#endif  // CAFFEINE_FEATURES_HPP_
