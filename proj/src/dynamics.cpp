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


#include "caffeine/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "caffeine/csv.hpp"

namespace caffeine {

void PendulumParams::validate() const {
  require(m1 > 0 && m2 > 0 && l1 > 0 && l2 > 0 && g > 0,
          "PendulumParams: masses, lengths and gravity must be positive");
}

Eigen::Matrix2d mass_matrix(const PendulumParams& p, const Eigen::Vector2d& q) {
  const double c2 = std::cos(q(1));
  const double off = p.m2 * p.l1 * p.l2 * c2 + p.m2 * p.l2 * p.l2;
  Eigen::Matrix2d M;
  M << (p.m1 + p.m2) * p.l1 * p.l1 + 2.0 * p.m2 * p.l1 * p.l2 * c2 + p.m2 * p.l2 * p.l2, off,
      off, p.m2 * p.l2 * p.l2;
  return M;
}

Eigen::Matrix2d coriolis(const PendulumParams& p, const Eigen::Vector2d& q,
                         const Eigen::Vector2d& qdot) {
  const double h = p.m2 * p.l1 * p.l2 * std::sin(q(1));
  Eigen::Matrix2d C;
  C << -2.0 * h * qdot(1), -h * qdot(1),
       h * qdot(0), 0.0;
  return C;
}

Eigen::Vector2d gravity_torque(const PendulumParams& p, const Eigen::Vector2d& q) {
  const double s12 = std::sin(q(0) + q(1));
  return {(p.m1 + p.m2) * p.g * p.l1 * std::sin(q(0)) + p.m2 * p.g * p.l2 * s12,
          p.m2 * p.g * p.l2 * s12};
}

ControlAffine control_affine(const PendulumParams& p, const Eigen::Vector4d& x) {
  const Eigen::Vector2d q = x.head<2>();
  const Eigen::Vector2d qd = x.tail<2>();
  const Eigen::Matrix2d M = mass_matrix(p, q);
  const double det = M.determinant();
  if (!(std::abs(det) > 1e-12)) throw NumericalError("control_affine: singular mass matrix");
  const Eigen::Matrix2d Minv = M.inverse();
  ControlAffine ca;
  ca.f << qd, Minv * (-coriolis(p, q, qd) * qd + gravity_torque(p, q));
  ca.g.setZero();
  ca.g.bottomRows<2>() = Minv * input_matrix();
  return ca;
}

Eigen::Vector4d state_derivative(const PendulumParams& p, const Eigen::Vector4d& x,
                                 const Eigen::Vector2d& u) {
  const Eigen::Vector2d q = x.head<2>();
  const Eigen::Vector2d qd = x.tail<2>();
  const Eigen::Vector2d rhs = gravity_torque(p, q) - coriolis(p, q, qd) * qd + input_matrix() * u;
  Eigen::Vector4d xd;
  xd << qd, mass_matrix(p, q).ldlt().solve(rhs);
  return xd;
}

double kinetic_energy(const PendulumParams& p, const Eigen::Vector4d& x) {
  const Eigen::Vector2d qd = x.tail<2>();
  return 0.5 * qd.dot(mass_matrix(p, x.head<2>()) * qd);
}

double potential_energy(const PendulumParams& p, const Eigen::Vector4d& x) {
  return (p.m1 + p.m2) * p.g * p.l1 * std::cos(x(0)) + p.m2 * p.g * p.l2 * std::cos(x(0) + x(1));
}

double total_energy(const PendulumParams& p, const Eigen::Vector4d& x) {
  return kinetic_energy(p, x) + potential_energy(p, x);
}

Trajectory simulate(const PendulumParams& p, const Controller& controller,
                    const Eigen::Vector4d& x0, double duration, double rate,
                    const IntegratorOptions& opt) {
  p.validate();
  require(rate > 0.0, "simulate: rate must be positive");
  require(duration > 0.0, "simulate: duration must be positive");
  const double ticks = duration * rate;
  const long steps = std::lround(ticks);
  require(std::abs(ticks - static_cast<double>(steps)) < 1e-9,
          "simulate: duration must be a multiple of the control period");

  Trajectory traj;
  traj.rate = rate;
  traj.times.reserve(steps);
  traj.states.reserve(steps);
  traj.inputs.reserve(steps);
  IntegratorOptions o = opt;
  if (o.max_step <= 0.0) o.max_step = 1.0 / rate;

  Eigen::Vector4d x = x0;
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / rate;
    Eigen::VectorXd u;
    try {
      u = controller(Eigen::VectorXd(x), t);
    } catch (const std::exception& e) {
      traj.status = TrajectoryStatus::ControllerFailure;
      traj.message = e.what();
      return traj;
    }
    if (u.size() != 2 || !u.allFinite()) {
      traj.status = TrajectoryStatus::ControllerFailure;
      traj.message = "controller returned a non-finite or mis-sized input";
      return traj;
    }
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.inputs.push_back(u);
    const Eigen::Vector2d uh = u;
    try {
      x = integrate_dopri([&](const Eigen::Vector4d& s) { return state_derivative(p, s, uh); }, x,
                          t, static_cast<double>(k + 1) / rate, o);
    } catch (const NumericalError& e) {
      traj.status = TrajectoryStatus::Diverged;
      traj.message = e.what();
      return traj;
    }
    if (!x.allFinite()) {
      traj.status = TrajectoryStatus::Diverged;
      traj.message = "state became non-finite";
      return traj;
    }
  }
  traj.final_state = x;
  return traj;
}

Controller feedback_linearizing_controller(const PendulumParams& nominal, const Eigen::Matrix2d& Kp,
                                           const Eigen::Matrix2d& Kd) {
  nominal.validate();
  const Eigen::Matrix2d Binv = input_matrix().inverse();
  return [nominal, Kp, Kd, Binv](const Eigen::VectorXd& x, double) -> Eigen::VectorXd {
    require(x.size() == 4, "feedback_linearizing_controller: state must have 4 entries");
    const Eigen::Vector2d q = x.head<2>();
    const Eigen::Vector2d qd = x.tail<2>();
    const Eigen::Vector2d v = -Kp * q - Kd * qd;
    return Binv * (mass_matrix(nominal, q) * v + coriolis(nominal, q, qd) * qd -
                   gravity_torque(nominal, q));
  };
}

std::string to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::Ok: return "ok";
    case TrajectoryStatus::ControllerFailure: return "controller-failure";
    case TrajectoryStatus::Diverged: return "diverged";
  }
  return "?";
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  CsvWriter out(path, {"t", "th1", "th2", "dth1", "dth2", "u1", "u2"});
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& x = traj.states[k];
    const auto& u = traj.inputs[k];
    out.row({traj.times[k], x(0), x(1), x(2), x(3), u(0), u(1)});
  }
}

Trajectory read_trajectory_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  require(table.header == std::vector<std::string>({"t", "th1", "th2", "dth1", "dth2", "u1", "u2"}),
          "read_trajectory_csv: unexpected header in " + path);
  Trajectory traj;
  for (const auto& r : table.rows) {
    traj.times.push_back(r[0]);
    traj.states.emplace_back(r[1], r[2], r[3], r[4]);
    traj.inputs.emplace_back(r[5], r[6]);
  }
  if (traj.times.size() >= 2) traj.rate = 1.0 / (traj.times[1] - traj.times[0]);
  return traj;
}

}  // namespace caffeine
