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


#include "caffeine/control.hpp"

#include <algorithm>
#include <cmath>

namespace caffeine {

double KKTResidual::max() const {
  return std::max({stationarity, slack_stationarity, primal, dual, complementarity});
}

double ccf_qp_objective(const QPProblem& p, const VecRef& u) {
  const double viol = std::max(0.0, p.a.dot(u) + p.b);
  return u.squaredNorm() + p.c1 * (u - p.u_d).squaredNorm() + p.rho * viol * viol;
}

QPSolution solve_ccf_qp(const QPProblem& p) {
  require(p.u_d.size() == p.a.size(), "solve_ccf_qp: u_d and a differ in length");
  require(p.c1 >= 0.0, "solve_ccf_qp: c1 must be >= 0");
  require(p.rho > 0.0, "solve_ccf_qp: slack penalty must be > 0");

  QPSolution s;
  const double w = 1.0 + p.c1;
  const VectorXd u0 = (p.c1 / w) * p.u_d;
  const double g0 = p.a.dot(u0) + p.b;
  if (g0 <= 0.0) {
    s.u = u0;
    s.delta = 0.0;
    s.multiplier = 0.0;
  } else {
    // active: u = u0 - (rho delta / w) a with delta = a'u + b
    s.delta = g0 / (1.0 + p.rho * p.a.squaredNorm() / w);
    s.u = u0 - (p.rho * s.delta / w) * p.a;
    s.multiplier = 2.0 * p.rho * s.delta;
    s.constraint_active = true;
  }
  s.objective = s.u.squaredNorm() + p.c1 * (s.u - p.u_d).squaredNorm() + p.rho * s.delta * s.delta;

  const double g = p.a.dot(s.u) + p.b - s.delta;
  s.kkt.stationarity = (2.0 * s.u + 2.0 * p.c1 * (s.u - p.u_d) + s.multiplier * p.a).norm();
  s.kkt.slack_stationarity = std::abs(2.0 * p.rho * s.delta - s.multiplier);
  s.kkt.primal = std::max(0.0, g);
  s.kkt.dual = std::max(0.0, -s.multiplier);
  s.kkt.complementarity = std::abs(s.multiplier * g);
  return s;
}

// ---------------------------------------------------------------------------

void RobustBoundParams::validate() const {
  require(epsilon >= 0 && beta >= 0 && kappa >= 0 && sigma_n >= 0 && sigma_max >= 0,
          "RobustBoundParams: parameters must be >= 0");
  require(N >= 1.0, "RobustBoundParams: N must be >= 1");
  require(lambda > 0.0, "RobustBoundParams: lambda must be > 0");
}

RobustTerms robust_terms(const RobustBoundParams& p) {
  p.validate();
  const double sqN = std::sqrt(p.N);
  RobustTerms r;
  r.Delta_mu = (1.0 / (p.lambda * sqN)) *
               (1.0 + p.kappa * p.sigma_max / (p.N * sqN * p.lambda) + p.kappa / (sqN * p.lambda));
  r.Delta_sigma = 1.0 + p.epsilon + p.kappa / (sqN * p.lambda);
  r.nu = (p.sigma_max / (sqN * p.lambda)) *
         (p.sigma_n + 2.0 * p.beta * p.kappa / sqN + 2.0 * p.beta * p.epsilon);
  r.iota = p.beta * p.epsilon * p.sigma_max * p.sigma_max / (p.N * p.lambda);
  r.Delta = p.beta * r.Delta_sigma + (p.beta * p.kappa + sqN * p.sigma_n) * r.Delta_mu;
  return r;
}

// ---------------------------------------------------------------------------

SlackSchedule constant_slack(double rho) {
  return [rho](double) { return rho; };
}

SlackSchedule growing_slack(double rho0) {
  return [rho0](double t) { return rho0 * (t + 1.0); };
}

QPProblem ccf_qp_problem(const QPControllerConfig& cfg, const CdotProvider& cdot,
                         const Eigen::Vector4d& x, double t) {
  const AffineForm c = cdot(x);
  QPProblem p;
  p.u_d = cfg.desired ? cfg.desired(Eigen::VectorXd(x), t) : VectorXd::Zero(c.slope.size());
  p.c1 = cfg.c1;
  p.a = c.slope;
  p.b = c.bias + cfg.clf.alpha(clf_value(cfg.clf, x));
  p.rho = cfg.rho(t);
  return p;
}

Controller ccf_qp_controller(const QPControllerConfig& cfg, CdotProvider cdot) {
  cfg.clf.validate();
  return [cfg, cdot = std::move(cdot)](const Eigen::VectorXd& x, double t) -> Eigen::VectorXd {
    const Eigen::Vector4d xs = x;
    return solve_ccf_qp(ccf_qp_problem(cfg, cdot, xs, t)).u;
  };
}

CdotProvider model_cdot(const CLFSpec& clf, const PendulumParams& p) {
  return [clf, p](const Eigen::Vector4d& x) { return cdot_affine(clf, p, x); };
}

CdotProvider residual_cdot(const CLFSpec& clf, const PendulumParams& nominal,
                           std::function<AffineForm(const Eigen::Vector4d&)> residual) {
  return [clf, nominal, residual = std::move(residual)](const Eigen::Vector4d& x) {
    AffineForm c = cdot_affine(clf, nominal, x);
    c += residual(x);
    return c;
  };
}

Controller ce_controller(const QPControllerConfig& cfg, const PendulumParams& nominal,
                         std::function<AffineForm(const Eigen::Vector4d&)> residual) {
  return ccf_qp_controller(cfg, residual_cdot(cfg.clf, nominal, std::move(residual)));
}

std::function<AffineForm(const Eigen::Vector4d&)> residual_of(const RidgeModel& model) {
  auto shared = std::make_shared<const RidgeModel>(model);
  return [shared](const Eigen::Vector4d& x) { return predict_affine(*shared, x); };
}

std::function<AffineForm(const Eigen::Vector4d&)> residual_of(const GPModel& model) {
  auto shared = std::make_shared<const GPModel>(model);
  return [shared](const Eigen::Vector4d& x) {
    const Index m = shared->input_dim();
    RowVectorXd xi;
    if (shared->kernel_mode()) {
      // mean only: Xi = alpha' k_train
      const KernelSpec& spec = *shared->kernel;
      xi = RowVectorXd::Zero(m + 1);
      for (Index i = 0; i < shared->train.size(); ++i)
        xi.noalias() += shared->alpha(i) *
                        (augment(shared->train.U.row(i).transpose()).transpose() *
                         kernel_matrix(spec, shared->train.X.row(i).transpose(), x));
    } else {
      xi = (basis_stack(*shared->basis, x).transpose() * shared->weights).transpose();
    }
    return AffineForm{xi(m), xi.head(m).transpose()};
  };
}

SOCPProblem ccf_socp_problem(const SOCPControllerConfig& cfg, const PendulumParams& nominal,
                             const GPModel& model, const Eigen::Vector4d& x, double t) {
  const AffinePosterior ap = affine_decompose(model, x);
  const AffineForm nom = cdot_affine(cfg.clf, nominal, x);
  SOCPProblem p;
  const Index m = nom.slope.size();
  p.Xi = ap.Xi;
  p.Xi.head(m) += nom.slope.transpose();
  p.Xi(m) += nom.bias;
  p.Omega = ap.Omega;
  p.alpha_term = cfg.clf.alpha(clf_value(cfg.clf, x));
  p.beta = cfg.beta;
  p.epsilon = cfg.epsilon;
  p.robust = cfg.robust;
  p.c1 = cfg.c1;
  p.u_d = cfg.desired ? cfg.desired(Eigen::VectorXd(x), t) : VectorXd::Zero(m);
  p.slack_penalty = cfg.slack_penalty;
  return p;
}

Controller ccf_socp_controller(const SOCPControllerConfig& cfg, const PendulumParams& nominal,
                               std::shared_ptr<const GPModel> model) {
  cfg.clf.validate();
  require(model != nullptr, "ccf_socp_controller: null model");
  return [cfg, nominal, model](const Eigen::VectorXd& x, double t) -> Eigen::VectorXd {
    const Eigen::Vector4d xs = x;
    return solve_ccf_socp(ccf_socp_problem(cfg, nominal, *model, xs, t)).u;
  };
}

}  // namespace caffeine
