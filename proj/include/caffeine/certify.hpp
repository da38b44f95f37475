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


#ifndef CAFFEINE_CERTIFY_HPP_
#define CAFFEINE_CERTIFY_HPP_

#include <string>
#include <vector>

#include "caffeine/common.hpp"
#include "caffeine/dynamics.hpp"
#include "caffeine/regression.hpp"

namespace caffeine {

/// Quadratic certificate C(x) = x'Px with comparison function alpha(c) = slope * c.
struct CLFSpec {
  MatrixXd P;
  double alpha_slope = 0.725;

  void validate() const;
  double alpha(double c) const { return alpha_slope * c; }

  /// The 4x4 double-pendulum certificate used throughout the experiments.
  static CLFSpec pendulum();
};

double clf_value(const CLFSpec& spec, const VecRef& x);
VectorXd clf_grad(const CLFSpec& spec, const VecRef& x);

/// Cdot(x, u) = grad C(x)'f(x) + (grad C(x)'g(x)) u, in split affine form.
AffineForm cdot_affine(const CLFSpec& spec, const VecRef& f, const MatRef& g, const VecRef& x);
double cdot_model(const CLFSpec& spec, const VecRef& f, const MatRef& g, const VecRef& x,
                  const VecRef& u);

/// Convenience: affine Cdot under the pendulum model `p`.
AffineForm cdot_affine(const CLFSpec& spec, const PendulumParams& p, const Eigen::Vector4d& x);

struct LabeledSample {
  VectorXd x;
  VectorXd u;
  double z = 0.0;
  int traj_id = 0;
  int idx = 0;
};

/// Residual regression data: z_i = (C(x_{i+1}) - C(x_i))/dt - Cdot~(x_i, u_i).
struct Dataset {
  Samples samples;
  VectorXd z;
  std::vector<int> traj_id;
  std::vector<int> idx;

  Index size() const { return z.size(); }
  LabeledSample at(Index i) const;
  Dataset subset(const std::vector<Index>& rows) const;
  void append(const Dataset& other);
};

Dataset build_residual_dataset(const std::vector<Trajectory>& trajectories, const CLFSpec& spec,
                               const PendulumParams& nominal, int first_traj_id = 0);

/// CSV columns x1..x4,u1,u2,z,traj_id,idx.
void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

}  // namespace caffeine

#endif  // CAFFEINE_CERTIFY_HPP_
