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


#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "caffeine/control.hpp"

namespace caffeine {

namespace {

VectorXd desired_or_zero(const SOCPProblem& p) {
  return p.u_d.size() == p.input_dim() ? p.u_d : VectorXd::Zero(p.input_dim());
}

bool has_omega(const SOCPProblem& p) { return p.beta > 0.0 && p.Omega.size() > 0; }

double omega_norm(const SOCPProblem& p, const VecRef& u) {
  return has_omega(p) ? (p.Omega * augment(u)).norm() : 0.0;
}

enum class Extra { None, PhaseOne, Slack };

// Barrier problem over z = (u, [s1], [s2], [extra]).
class Barrier {
 public:
  Barrier(const SOCPProblem& p, Extra extra) : p_(p), extra_(extra) {
    m_ = p.input_dim();
    ud_ = desired_or_zero(p);
    Index k = m_;
    if (has_omega(p)) {
      s1_ = k++;
      Om_u_ = p.Omega.leftCols(m_);
      om1_ = p.Omega.col(m_);
    }
    nu_coef_ = p.epsilon * p.robust.nu;
    if (nu_coef_ > 0.0) s2_ = k++;
    iota_coef_ = p.epsilon * p.robust.iota;
    const_ = p.Xi(m_) + p.epsilon * p.robust.Delta + p.alpha_term;
    if (extra != Extra::None) e_ = k++;
    n_ = k;
    xi_u_ = p.Xi.head(m_).transpose();
  }

  Index size() const { return n_; }
  Index extra_index() const { return e_; }
  double num_barriers() const { return 1.0 + 2.0 * ((s1_ >= 0) + (s2_ >= 0)); }

  // Interior point from u with cone variables set just outside the cones.
  VectorXd start(const VectorXd& u) const {
    VectorXd z = VectorXd::Zero(n_);
    z.head(m_) = u;
    if (s1_ >= 0) z(s1_) = (Om_u_ * u + om1_).norm() + 1.0;
    if (s2_ >= 0) z(s2_) = u.norm() + 1.0;
    if (e_ >= 0) z(e_) = g(z) + 1.0;
    return z;
  }

  // Constraint value without the extra variable.
  double g(const VectorXd& z) const {
    const auto u = z.head(m_);
    double v = xi_u_.dot(u) + const_ + iota_coef_ * u.squaredNorm();
    if (s1_ >= 0) v += p_.beta * z(s1_);
    if (s2_ >= 0) v += nu_coef_ * z(s2_);
    return v;
  }

  double h(const VectorXd& z) const { return g(z) - (e_ >= 0 ? z(e_) : 0.0); }

  double objective(const VectorXd& z) const {
    if (extra_ == Extra::PhaseOne) return z(e_);
    const auto u = z.head(m_);
    double f = u.squaredNorm() + p_.c1 * (u - ud_).squaredNorm();
    if (extra_ == Extra::Slack) f += *p_.slack_penalty * z(e_) * z(e_);
    return f;
  }

  bool interior(const VectorXd& z) const {
    if (!z.allFinite() || !(h(z) < 0.0)) return false;
    const auto u = z.head(m_);
    if (s1_ >= 0 && !(z(s1_) > 0.0 && z(s1_) * z(s1_) - (Om_u_ * u + om1_).squaredNorm() > 0.0))
      return false;
    if (s2_ >= 0 && !(z(s2_) > 0.0 && z(s2_) * z(s2_) - u.squaredNorm() > 0.0)) return false;
    return true;
  }

  double value(const VectorXd& z, double tau) const {
    const auto u = z.head(m_);
    double v = tau * objective(z) - std::log(-h(z));
    if (s1_ >= 0) v -= std::log(z(s1_) * z(s1_) - (Om_u_ * u + om1_).squaredNorm());
    if (s2_ >= 0) v -= std::log(z(s2_) * z(s2_) - u.squaredNorm());
    return v;
  }

  void derivatives(const VectorXd& z, double tau, VectorXd& grad, MatrixXd& hess) const {
    const auto u = z.head(m_);
    grad = VectorXd::Zero(n_);
    hess = MatrixXd::Zero(n_, n_);

    // objective
    if (extra_ == Extra::PhaseOne) {
      grad(e_) += tau;
    } else {
      grad.head(m_) += tau * (2.0 * u + 2.0 * p_.c1 * (u - ud_));
      hess.topLeftCorner(m_, m_).diagonal().array() += tau * (2.0 + 2.0 * p_.c1);
      if (extra_ == Extra::Slack) {
        grad(e_) += tau * 2.0 * *p_.slack_penalty * z(e_);
        hess(e_, e_) += tau * 2.0 * *p_.slack_penalty;
      }
    }

    // -log(-h)
    const double hv = h(z);
    VectorXd dh = VectorXd::Zero(n_);
    dh.head(m_) = xi_u_ + 2.0 * iota_coef_ * u;
    if (s1_ >= 0) dh(s1_) = p_.beta;
    if (s2_ >= 0) dh(s2_) = nu_coef_;
    if (e_ >= 0) dh(e_) = -1.0;
    grad += dh / (-hv);
    hess += dh * dh.transpose() / (hv * hv);
    hess.topLeftCorner(m_, m_).diagonal().array() += 2.0 * iota_coef_ / (-hv);

    // -log(s^2 - |w|^2) with w = A u + c
    auto cone = [&](Index si, const MatrixXd& A, const VectorXd& w) {
      const double s = z(si);
      const double psi = s * s - w.squaredNorm();
      VectorXd dpsi = VectorXd::Zero(n_);
      dpsi.head(m_) = -2.0 * A.transpose() * w;
      dpsi(si) = 2.0 * s;
      grad -= dpsi / psi;
      hess += dpsi * dpsi.transpose() / (psi * psi);
      hess.topLeftCorner(m_, m_) += 2.0 * A.transpose() * A / psi;
      hess(si, si) -= 2.0 / psi;
    };
    if (s1_ >= 0) cone(s1_, Om_u_, Om_u_ * u + om1_);
    if (s2_ >= 0) cone(s2_, MatrixXd::Identity(m_, m_), u);
  }

 private:
  const SOCPProblem& p_;
  Extra extra_;
  Index m_ = 0, n_ = 0, s1_ = -1, s2_ = -1, e_ = -1;
  VectorXd ud_, xi_u_, om1_;
  MatrixXd Om_u_;
  double nu_coef_ = 0.0, iota_coef_ = 0.0, const_ = 0.0;
};

VectorXd newton_direction(const MatrixXd& H, const VectorXd& grad) {
  const double scale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
  for (double damp = 0.0; damp < 1e3 * scale; damp = damp == 0.0 ? 1e-12 * scale : damp * 100) {
    Eigen::LLT<MatrixXd> llt(H + damp * MatrixXd::Identity(H.rows(), H.cols()));
    if (llt.info() == Eigen::Success) {
      VectorXd d = llt.solve(-grad);
      if (d.allFinite()) return d;
    }
  }
  return -grad;
}

constexpr int kMaxNewton = 200;

// Damped Newton centering. `stop` is checked after every accepted step.
template <typename Stop>
bool center(const Barrier& b, VectorXd& z, double tau, int& steps, Stop&& stop) {
  VectorXd grad;
  MatrixXd hess;
  for (int it = 0; it < kMaxNewton; ++it) {
    b.derivatives(z, tau, grad, hess);
    const VectorXd d = newton_direction(hess, grad);
    const double dec = -grad.dot(d);
    if (dec / 2.0 <= 1e-12) return true;
    const double f0 = b.value(z, tau);
    double t = 1.0;
    VectorXd trial;
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls, t *= 0.5) {
      trial = z + t * d;
      if (b.interior(trial) && b.value(trial, tau) <= f0 - 0.25 * t * dec) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return true;  // no further progress at this precision
    z = trial;
    ++steps;
    if (stop(z)) return true;
  }
  return false;
}

SOCPSolution finish(const SOCPProblem& p, const VectorXd& u, double delta, bool slack, int steps) {
  SOCPSolution s;
  s.u = u;
  s.delta = delta;
  s.used_slack = slack;
  s.newton_steps = steps;
  s.objective = p.objective(u) + (slack ? *p.slack_penalty * delta * delta : 0.0);
  s.residual = std::max(0.0, p.constraint(u) - delta);
  return s;
}

// Barrier path from an interior z until the duality gap bound is below tolerance.
void follow_path(const Barrier& b, VectorXd& z, int& steps) {
  double tau = 1.0 / std::max(1.0, std::abs(b.objective(z)));
  for (int outer = 0; outer < 40; ++outer) {
    center(b, z, tau, steps, [](const VectorXd&) { return false; });
    const double gap = b.num_barriers() / tau;
    if (gap <= 1e-10 * std::max(1.0, std::abs(b.objective(z)))) return;
    tau *= 10.0;
  }
}

}  // namespace

double SOCPProblem::constraint(const VecRef& u) const {
  require(u.size() == input_dim(), "SOCPProblem: input dimension mismatch");
  return Xi.dot(augment(u)) + beta * omega_norm(*this, u) +
         epsilon * (robust.nu * u.norm() + robust.iota * u.squaredNorm() + robust.Delta) +
         alpha_term;
}

double SOCPProblem::objective(const VecRef& u) const {
  return u.squaredNorm() + c1 * (u - desired_or_zero(*this)).squaredNorm();
}

SOCPSolution solve_ccf_socp(const SOCPProblem& p) {
  const Index m = p.input_dim();
  require(m >= 1, "solve_ccf_socp: Xi must have length m+1 >= 2");
  require(p.Omega.size() == 0 || (p.Omega.cols() == m + 1),
          "solve_ccf_socp: Omega must have m+1 columns");
  require(p.beta >= 0.0 && p.epsilon >= 0.0 && p.c1 >= 0.0,
          "solve_ccf_socp: beta, epsilon and c1 must be >= 0");
  require(!p.slack_penalty || *p.slack_penalty > 0.0, "solve_ccf_socp: slack penalty must be > 0");
  require(p.Xi.allFinite() && (p.Omega.size() == 0 || p.Omega.allFinite()) &&
              std::isfinite(p.alpha_term),
          "solve_ccf_socp: non-finite problem data");

  int steps = 0;
  const VectorXd u0 = (p.c1 / (1.0 + p.c1)) * desired_or_zero(p);

  // phase I: min t s.t. g(u, s) <= t
  Barrier one(p, Extra::PhaseOne);
  const Index te = one.extra_index();
  VectorXd z = one.start(u0);
  bool feasible = z(te) - 1.0 < 0.0;
  if (feasible) {
    z(te) = 0.0;
  } else {
    double tau = 1.0;
    for (int outer = 0; outer < 40 && !feasible; ++outer) {
      center(one, z, tau, steps, [&](const VectorXd& v) { return v(te) < 0.0; });
      if (z(te) < 0.0) {
        feasible = true;
        break;
      }
      const double gap = one.num_barriers() / tau;
      if (z(te) - gap > 0.0 || gap < 1e-12 * std::max(1.0, std::abs(z(te)))) break;
      tau *= 10.0;
    }
  }

  if (feasible) {
    Barrier two(p, Extra::None);
    VectorXd w = z.head(two.size());
    follow_path(two, w, steps);
    return finish(p, w.head(m), 0.0, false, steps);
  }

  const VectorXd closest = z.head(m);
  const double violation = p.constraint(closest);
  if (!p.slack_penalty)
    throw InfeasibleError("solve_ccf_socp: constraint infeasible (min violation " +
                              std::to_string(violation) + ")",
                          closest, violation);

  Barrier slack(p, Extra::Slack);
  VectorXd w = slack.start(u0);
  follow_path(slack, w, steps);
  return finish(p, w.head(m), w(slack.extra_index()), true, steps);
}

}  // namespace caffeine
