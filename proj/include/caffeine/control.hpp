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


#ifndef CAFFEINE_CONTROL_HPP_
#define CAFFEINE_CONTROL_HPP_

#include <functional>
#include <memory>
#include <optional>

#include "caffeine/certify.hpp"
#include "caffeine/common.hpp"
#include "caffeine/dynamics.hpp"
#include "caffeine/regression.hpp"

namespace caffeine {

// ---------------------------------------------------------------------------
// CCF-QP: min |u|^2 + c1 |u - u_d|^2 + rho delta^2  s.t.  a'u + b <= delta

struct QPProblem {
  VectorXd u_d;
  double c1 = 0.0;
  VectorXd a;
  double b = 0.0;
  double rho = 1e6;
};

struct KKTResidual {
  double stationarity = 0.0;        // |2u + 2c1(u - u_d) + mu a|
  double slack_stationarity = 0.0;  // |2 rho delta - mu|
  double primal = 0.0;              // max(0, a'u + b - delta)
  double dual = 0.0;                // max(0, -mu)
  double complementarity = 0.0;     // |mu (a'u + b - delta)|

  double max() const;
};

struct QPSolution {
  VectorXd u;
  double delta = 0.0;
  double multiplier = 0.0;
  double objective = 0.0;
  bool constraint_active = false;
  KKTResidual kkt;
};

/// Exact minimizer by the two-case KKT closed form.
QPSolution solve_ccf_qp(const QPProblem& p);

/// Objective with the slack at its optimal value max(0, a'u + b).
double ccf_qp_objective(const QPProblem& p, const VecRef& u);

// ---------------------------------------------------------------------------
// Robust correction terms for random-feature posteriors

struct RobustBoundParams {
  double epsilon = 0.0;    // sup individual kernel approximation error
  double beta = 0.0;       // confidence multiplier
  double kappa = 0.0;      // |k_s| <= sqrt(N) kappa
  double sigma_n = 0.0;    // noise / label bound
  double sigma_max = 0.0;  // largest singular value of the input matrix U
  double N = 1.0;          // data count
  double lambda = 1.0;     // per-sample regularizer

  void validate() const;
};

struct RobustTerms {
  double nu = 0.0;
  double iota = 0.0;
  double Delta = 0.0;
  double Delta_mu = 0.0;
  double Delta_sigma = 0.0;
};

RobustTerms robust_terms(const RobustBoundParams& p);

// ---------------------------------------------------------------------------
// CCF-SOCP:
//   min |u|^2 (+ c1 |u - u_d|^2)
//   s.t. Xi [u;1] + beta |Omega [u;1]| + eps (nu |u| + iota |u|^2 + Delta) + alpha_term <= 0

struct SOCPProblem {
  RowVectorXd Xi;   // length m+1
  MatrixXd Omega;   // (m+1) x (m+1), or empty for no uncertainty term
  double alpha_term = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  RobustTerms robust;
  /// Optional tracking term; off unless c1 > 0.
  double c1 = 0.0;
  VectorXd u_d;
  /// When set, an infeasible conic constraint is relaxed to <= delta with
  /// penalty rho delta^2.
  std::optional<double> slack_penalty;

  Index input_dim() const { return Xi.size() - 1; }
  /// Left-hand side of the constraint at u.
  double constraint(const VecRef& u) const;
  double objective(const VecRef& u) const;
};

struct SOCPSolution {
  VectorXd u;
  double delta = 0.0;  // 0 unless the slack fallback was used
  double objective = 0.0;
  double residual = 0.0;  // max(0, constraint(u) - delta)
  bool used_slack = false;
  int newton_steps = 0;
};

/// The conic constraint has no strictly feasible point and no slack was allowed.
class InfeasibleError : public NumericalError {
 public:
  InfeasibleError(const std::string& what, VectorXd point, double violation)
      : NumericalError(what), point_(std::move(point)), violation_(violation) {}
  const VectorXd& point() const { return point_; }
  double violation() const { return violation_; }

 private:
  VectorXd point_;
  double violation_;
};

SOCPSolution solve_ccf_socp(const SOCPProblem& p);

// ---------------------------------------------------------------------------
// Controllers

/// Slack penalty as a function of the within-trajectory time.
using SlackSchedule = std::function<double(double t)>;
SlackSchedule constant_slack(double rho);
/// rho0 * (t + 1)
SlackSchedule growing_slack(double rho0);

/// x -> Cdot(x, .) as an affine function of u.
using CdotProvider = std::function<AffineForm(const Eigen::Vector4d& x)>;

struct QPControllerConfig {
  CLFSpec clf = CLFSpec::pendulum();
  double c1 = 25.0;
  SlackSchedule rho = constant_slack(1e6);
  Controller desired;  // u_d(x, t)
};

/// Builds the QP data (a, b) = (slope, bias + alpha(C(x))) from `cdot` and solves it.
Controller ccf_qp_controller(const QPControllerConfig& cfg, CdotProvider cdot);

/// QP data for one query, exposed for inspection and tests.
QPProblem ccf_qp_problem(const QPControllerConfig& cfg, const CdotProvider& cdot,
                         const Eigen::Vector4d& x, double t);

/// Cdot from the pendulum model `p` (oracle with true params, nominal with nominal params).
CdotProvider model_cdot(const CLFSpec& clf, const PendulumParams& p);

/// Certainty-equivalent: nominal Cdot~ plus a learned residual h(x, .).
CdotProvider residual_cdot(const CLFSpec& clf, const PendulumParams& nominal,
                           std::function<AffineForm(const Eigen::Vector4d&)> residual);

Controller ce_controller(const QPControllerConfig& cfg, const PendulumParams& nominal,
                         std::function<AffineForm(const Eigen::Vector4d&)> residual);

/// Affine residual view of fitted models.
std::function<AffineForm(const Eigen::Vector4d&)> residual_of(const RidgeModel& model);
std::function<AffineForm(const Eigen::Vector4d&)> residual_of(const GPModel& model);

struct SOCPControllerConfig {
  CLFSpec clf = CLFSpec::pendulum();
  double beta = 1.0;
  double epsilon = 0.0;
  RobustTerms robust;
  double c1 = 0.0;
  Controller desired;
  std::optional<double> slack_penalty = 1e6;
};

/// Robust controller with constraint Cdot~ + mu + beta sigma (+ eps terms) + alpha(C) <= 0.
/// With epsilon = 0 this is the Bayesian (BLR) variant.
Controller ccf_socp_controller(const SOCPControllerConfig& cfg, const PendulumParams& nominal,
                               std::shared_ptr<const GPModel> model);

SOCPProblem ccf_socp_problem(const SOCPControllerConfig& cfg, const PendulumParams& nominal,
                             const GPModel& model, const Eigen::Vector4d& x, double t);

}  // namespace caffeine

#endif  // CAFFEINE_CONTROL_HPP_
