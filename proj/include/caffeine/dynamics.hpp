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


#ifndef CAFFEINE_DYNAMICS_HPP_
#define CAFFEINE_DYNAMICS_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "caffeine/common.hpp"

namespace caffeine {

/// Two point-mass links, angles measured from upright; x = (q, qdot) in R^4.
struct PendulumParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double l1 = 1.0;
  double l2 = 1.0;
  double g = 9.81;

  void validate() const;

  static PendulumParams unit() { return {}; }
  static PendulumParams scaled(double v) { return {v, v, v, v, 9.81}; }
};

Eigen::Matrix2d mass_matrix(const PendulumParams& p, const Eigen::Vector2d& q);
Eigen::Matrix2d coriolis(const PendulumParams& p, const Eigen::Vector2d& q,
                         const Eigen::Vector2d& qdot);
Eigen::Vector2d gravity_torque(const PendulumParams& p, const Eigen::Vector2d& q);

/// Input matrix of the manipulator equation M qdd + C qd = tau_g + B u. One
/// torque per joint.
inline Eigen::Matrix2d input_matrix() { return Eigen::Matrix2d::Identity(); }

struct ControlAffine {
  Eigen::Vector4d f;
  Eigen::Matrix<double, 4, 2> g;
};

ControlAffine control_affine(const PendulumParams& p, const Eigen::Vector4d& x);

/// xdot = f(x) + g(x) u, assembled through one mass-matrix solve.
Eigen::Vector4d state_derivative(const PendulumParams& p, const Eigen::Vector4d& x,
                                 const Eigen::Vector2d& u);

double kinetic_energy(const PendulumParams& p, const Eigen::Vector4d& x);
double potential_energy(const PendulumParams& p, const Eigen::Vector4d& x);
double total_energy(const PendulumParams& p, const Eigen::Vector4d& x);

// ---------------------------------------------------------------------------
// Integration

struct IntegratorOptions {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double max_step = 0.0;  // 0: use the hold interval
  double min_step = 1e-12;
};

/// Adaptive Dormand-Prince 5(4) from t0 to t1 for a time-invariant vector field.
/// Throws NumericalError on non-finite states or step-size underflow.
template <typename Field>
Eigen::Vector4d integrate_dopri(const Field& field, Eigen::Vector4d x, double t0, double t1,
                                const IntegratorOptions& opt, int* steps_taken = nullptr);

using Controller = std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double t)>;

enum class TrajectoryStatus { Ok, ControllerFailure, Diverged };

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::Vector4d> states;  // x(t_k), control held on [t_k, t_k + 1/rate)
  std::vector<Eigen::Vector2d> inputs;  // u(t_k)
  Eigen::Vector4d final_state = Eigen::Vector4d::Zero();  // x(duration) when Ok
  double rate = 10.0;
  TrajectoryStatus status = TrajectoryStatus::Ok;
  std::string message;

  bool ok() const { return status == TrajectoryStatus::Ok; }
  std::size_t size() const { return states.size(); }
};

/// Zero-order-hold simulation: the controller is queried at t_k = k/rate and
/// the state integrated adaptively to t_{k+1}. duration*rate samples are
/// recorded (5 s at 10 Hz gives t = 0.0 ... 4.9).
Trajectory simulate(const PendulumParams& p, const Controller& controller,
                    const Eigen::Vector4d& x0, double duration, double rate,
                    const IntegratorOptions& opt = {});

/// u_d(x) = B^{-1}[M~(q)(-Kp q - Kd qd) + C~(q, qd) qd - tau~_g(q)], which makes
/// the nominal closed loop qdd = -Kp q - Kd qd.
Controller feedback_linearizing_controller(const PendulumParams& nominal,
                                           const Eigen::Matrix2d& Kp = Eigen::Matrix2d::Identity(),
                                           const Eigen::Matrix2d& Kd = 2.0 * Eigen::Matrix2d::Identity());

/// CSV with header t,th1,th2,dth1,dth2,u1,u2.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

std::string to_string(TrajectoryStatus s);

// ---------------------------------------------------------------------------

template <typename Field>
Eigen::Vector4d integrate_dopri(const Field& field, Eigen::Vector4d x, double t0, double t1,
                                const IntegratorOptions& opt, int* steps_taken) {
  using V = Eigen::Vector4d;
  // Dormand-Prince 5(4) tableau
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                   a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                   a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                   b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                   e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2; (void)c3; (void)c4; (void)c5;

  const double span = t1 - t0;
  if (span <= 0.0) return x;
  const double hmax = opt.max_step > 0.0 ? opt.max_step : span;
  double t = t0;
  double h = std::min(hmax, span);
  V k1 = field(x);
  {
    // initial step from the tolerance-scaled magnitudes of x and f(x)
    const V sc = (opt.abs_tol + opt.rel_tol * x.array().abs()).matrix();
    const double d0 = (x.array() / sc.array()).matrix().norm();
    const double d1 = (k1.array() / sc.array()).matrix().norm();
    const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::clamp(h0, std::min(1e-6, span), h);
  }
  int steps = 0;
  while (t < t1) {
    if (t + h > t1) h = t1 - t;
    const V k2 = field(V(x + h * (a21 * k1)));
    const V k3 = field(V(x + h * (a31 * k1 + a32 * k2)));
    const V k4 = field(V(x + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const V k5 = field(V(x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const V k6 = field(V(x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    const V xn = x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const V k7 = field(xn);
    const V err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const V sc = (opt.abs_tol + opt.rel_tol * x.array().abs().max(xn.array().abs())).matrix();
    const double en = std::sqrt((err.array() / sc.array()).square().mean());
    if (!std::isfinite(en) || !xn.allFinite()) {
      if (h <= opt.min_step) throw NumericalError("integrate_dopri: non-finite state");
      h *= 0.25;
      continue;
    }
    if (en <= 1.0) {
      t = (t1 - (t + h) < 1e-14 * std::abs(t1)) ? t1 : t + h;
      x = xn;
      k1 = k7;  // first-same-as-last
      ++steps;
    }
    const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
    h = std::min(hmax, h * fac);
    if (h < opt.min_step && t < t1) throw NumericalError("integrate_dopri: step size underflow");
  }
  if (steps_taken) *steps_taken = steps;
  return x;
}

}  // namespace caffeine

#endif  // CAFFEINE_DYNAMICS_HPP_
