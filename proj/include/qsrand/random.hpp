// Copyright 2026 The qsrand Authors
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

#pragma once

// Seeded random fixtures: Ginibre density matrices, Haar-random projections,
// Dirichlet spectra.

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "qsrand/linalg.hpp"

namespace qsrand {

using Rng = std::mt19937_64;

inline ComplexMatrix random_gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> g(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  return m;
}

/// G G^* / Tr(G G^*) with G a dim x rank complex Gaussian matrix.
inline DensityOperator random_density(Rng& rng, int qubits, int rank = 0) {
  const auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << qubits);
  const Eigen::Index r = rank > 0 ? rank : dim;
  ComplexMatrix g = random_gaussian_matrix(rng, dim, r);
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = (rho + rho.adjoint()) / 2.0;
  return validate_density(rho, 1e-9);
}

/// Haar-random unitary via QR with the phase correction on R's diagonal.
inline ComplexMatrix haar_unitary(Rng& rng, Eigen::Index dim) {
  ComplexMatrix z = random_gaussian_matrix(rng, dim, dim);
  Eigen::HouseholderQR<ComplexMatrix> qr(z);
  ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(dim, dim);
  ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    const double a = std::abs(d);
    if (a > 0) q.col(j) *= d / a;
  }
  return q;
}

/// Rank-k projection onto the span of k Haar-random orthonormal vectors.
inline Projection random_projection(Rng& rng, int qubits, std::uint64_t k) {
  const auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << qubits);
  ComplexMatrix u = haar_unitary(rng, dim);
  const auto kk = static_cast<Eigen::Index>(k);
  ComplexMatrix p = u.leftCols(kk) * u.leftCols(kk).adjoint();
  p = (p + p.adjoint()) / 2.0;
  return Projection::trusted_dense(std::move(p), k);
}

/// Descending spectrum from a symmetric Dirichlet(concentration) draw.
inline std::vector<double> random_descending_spectrum(Rng& rng, std::size_t dim, double concentration = 1.0) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> v(dim);
  double total = 0.0;
  for (auto& x : v) {
    x = gamma(rng);
    total += x;
  }
  for (auto& x : v) x /= total;
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

}  // namespace qsrand
