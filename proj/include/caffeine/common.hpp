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

#ifndef CAFFEINE_COMMON_HPP_
#define CAFFEINE_COMMON_HPP_

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace caffeine {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Eigen::RowVectorXd;

using VecRef = Eigen::Ref<const Eigen::VectorXd>;
using MatRef = Eigen::Ref<const Eigen::MatrixXd>;

/// Bad shapes, out-of-range hyperparameters, malformed records.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization failures, negative variances beyond tolerance, NaN states.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidArgument(what);
}

/// SplitMix64 finalizer; used to derive independent seed streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of stream `stream` under `master`. Streams never depend on each other,
/// so adding a stream does not perturb existing ones.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
  return mix64(mix64(master) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
  return Rng(stream_seed(master, stream));
}

/// y = [u; 1]
inline VectorXd augment(const VecRef& u) {
  VectorXd y(u.size() + 1);
  y.head(u.size()) = u;
  y(u.size()) = 1.0;
  return y;
}

/// Row-stacked (state, input) samples: row i of X and U form one sample.
struct Samples {
  MatrixXd X;
  MatrixXd U;

  Index size() const { return X.rows(); }
  Index state_dim() const { return X.cols(); }
  Index input_dim() const { return U.cols(); }

  Samples rows(const std::vector<Index>& idx) const {
    Samples out{MatrixXd(idx.size(), X.cols()), MatrixXd(idx.size(), U.cols())};
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.X.row(k) = X.row(idx[k]);
      out.U.row(k) = U.row(idx[k]);
    }
    return out;
  }
};

inline void check_samples(const Samples& s, const char* who) {
  require(s.X.rows() == s.U.rows(), std::string(who) + ": X and U row counts differ");
}

}  // namespace caffeine

#endif  // CAFFEINE_COMMON_HPP_
