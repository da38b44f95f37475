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


#include "caffeine/certify.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "caffeine/csv.hpp"

namespace caffeine {

void CLFSpec::validate() const {
  require(P.rows() == P.cols() && P.rows() > 0, "CLFSpec: P must be square");
  require((P - P.transpose()).cwiseAbs().maxCoeff() == 0.0, "CLFSpec: P must be symmetric");
  require(alpha_slope > 0.0, "CLFSpec: comparison slope must be positive");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() > 0.0, "CLFSpec: P must be positive definite");
}

CLFSpec CLFSpec::pendulum() {
  CLFSpec s;
  s.P.resize(4, 4);
  s.P << 12.0, 0.0, 3.16, 0.0,
         0.0, 12.0, 0.0, 3.16,
         3.16, 0.0, 4.04, 0.0,
         0.0, 3.16, 0.0, 4.04;
  s.alpha_slope = 0.725;
  return s;
}

double clf_value(const CLFSpec& spec, const VecRef& x) {
  require(x.size() == spec.P.rows(), "clf_value: state dimension mismatch");
  return x.dot(spec.P * x);
}

VectorXd clf_grad(const CLFSpec& spec, const VecRef& x) {
  require(x.size() == spec.P.rows(), "clf_grad: state dimension mismatch");
  return 2.0 * (spec.P * x);
}

AffineForm cdot_affine(const CLFSpec& spec, const VecRef& f, const MatRef& g, const VecRef& x) {
  require(f.size() == x.size() && g.rows() == x.size(), "cdot_affine: dimension mismatch");
  const VectorXd grad = clf_grad(spec, x);
  return {grad.dot(f), g.transpose() * grad};
}

double cdot_model(const CLFSpec& spec, const VecRef& f, const MatRef& g, const VecRef& x,
                  const VecRef& u) {
  require(u.size() == g.cols(), "cdot_model: input dimension mismatch");
  return cdot_affine(spec, f, g, x)(u);
}

AffineForm cdot_affine(const CLFSpec& spec, const PendulumParams& p, const Eigen::Vector4d& x) {
  const ControlAffine ca = control_affine(p, x);
  return cdot_affine(spec, ca.f, ca.g, x);
}

LabeledSample Dataset::at(Index i) const {
  return {samples.X.row(i).transpose(), samples.U.row(i).transpose(), z(i), traj_id[i], idx[i]};
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.samples = samples.rows(rows);
  out.z.resize(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.z(static_cast<Index>(k)) = z(rows[k]);
    out.traj_id.push_back(traj_id[rows[k]]);
    out.idx.push_back(idx[rows[k]]);
  }
  return out;
}

void Dataset::append(const Dataset& other) {
  if (other.size() == 0) return;
  if (size() == 0) {
    *this = other;
    return;
  }
  require(other.samples.state_dim() == samples.state_dim() &&
              other.samples.input_dim() == samples.input_dim(),
          "Dataset::append: dimension mismatch");
  const Index n = size();
  const Index k = other.size();
  samples.X.conservativeResize(n + k, Eigen::NoChange);
  samples.U.conservativeResize(n + k, Eigen::NoChange);
  z.conservativeResize(n + k);
  samples.X.bottomRows(k) = other.samples.X;
  samples.U.bottomRows(k) = other.samples.U;
  z.tail(k) = other.z;
  traj_id.insert(traj_id.end(), other.traj_id.begin(), other.traj_id.end());
  idx.insert(idx.end(), other.idx.begin(), other.idx.end());
}

Dataset build_residual_dataset(const std::vector<Trajectory>& trajectories, const CLFSpec& spec,
                               const PendulumParams& nominal, int first_traj_id) {
  Index total = 0;
  for (const auto& tr : trajectories) {
    require(tr.size() >= 2, "build_residual_dataset: trajectory needs at least 2 samples");
    total += static_cast<Index>(tr.size()) - 1;
  }
  Dataset data;
  data.samples.X.resize(total, 4);
  data.samples.U.resize(total, 2);
  data.z.resize(total);
  Index row = 0;
  int id = first_traj_id;
  for (const auto& tr : trajectories) {
    const double dt = tr.times[1] - tr.times[0];
    require(dt > 0.0, "build_residual_dataset: time grid must increase");
    for (std::size_t k = 1; k + 1 < tr.times.size(); ++k)
      require(std::abs((tr.times[k + 1] - tr.times[k]) - dt) <= 1e-9 * std::max(1.0, dt),
              "build_residual_dataset: non-uniform time grid");
    for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
      const Eigen::Vector4d& x = tr.states[k];
      const double cdot_fd = (clf_value(spec, tr.states[k + 1]) - clf_value(spec, x)) / dt;
      data.samples.X.row(row) = x.transpose();
      data.samples.U.row(row) = tr.inputs[k].transpose();
      data.z(row) = cdot_fd - cdot_affine(spec, nominal, x)(tr.inputs[k]);
      require(std::isfinite(data.z(row)), "build_residual_dataset: non-finite label");
      data.traj_id.push_back(id);
      data.idx.push_back(static_cast<int>(k));
      ++row;
    }
    ++id;
  }
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  CsvWriter out(path, {"x1", "x2", "x3", "x4", "u1", "u2", "z", "traj_id", "idx"});
  for (Index i = 0; i < data.size(); ++i) {
    const auto& X = data.samples.X;
    const auto& U = data.samples.U;
    out.row({X(i, 0), X(i, 1), X(i, 2), X(i, 3), U(i, 0), U(i, 1), data.z(i),
             static_cast<double>(data.traj_id[i]), static_cast<double>(data.idx[i])});
  }
}

Dataset read_dataset_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  require(t.header == std::vector<std::string>(
                          {"x1", "x2", "x3", "x4", "u1", "u2", "z", "traj_id", "idx"}),
          "read_dataset_csv: unexpected header in " + path);
  const Index n = static_cast<Index>(t.rows.size());
  Dataset d;
  d.samples.X.resize(n, 4);
  d.samples.U.resize(n, 2);
  d.z.resize(n);
  for (Index i = 0; i < n; ++i) {
    const auto& r = t.rows[i];
    d.samples.X.row(i) << r[0], r[1], r[2], r[3];
    d.samples.U.row(i) << r[4], r[5];
    d.z(i) = r[6];
    d.traj_id.push_back(static_cast<int>(r[7]));
    d.idx.push_back(static_cast<int>(r[8]));
  }
  return d;
}

}  // namespace caffeine
