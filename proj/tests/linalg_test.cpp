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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qsrand/linalg.hpp"
#include "qsrand/random.hpp"

namespace qsrand {
namespace {

ComplexMatrix ket_bra(std::initializer_list<Complex> v) {
  Eigen::VectorXcd k(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (auto x : v) k(i++) = x;
  return k * k.adjoint();
}

ComplexMatrix diag_matrix(std::initializer_list<double> v) {
  Eigen::VectorXd d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.cast<Complex>().asDiagonal();
}

DensityOperator dense(const ComplexMatrix& m) { return validate_density(m, 1e-9); }

void expect_matrix_near(const ComplexMatrix& a, const ComplexMatrix& b, double tol) {
  ASSERT_EQ(a.rows(), b.rows());
  ASSERT_EQ(a.cols(), b.cols());
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), tol);
}

// Brute-force marginal: sums over the traced low-order bits directly.
std::vector<double> marginal_oracle(const std::vector<double>& p, int n, int a) {
  std::vector<double> out(std::size_t{1} << (n - a), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) out[i >> a] += p[i];
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kParse;
}

TEST(Tensor, IdentityTimesIdentity) {
  expect_matrix_near(tensor(ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(2, 2)), ComplexMatrix::Identity(4, 4), 0);
}

TEST(Tensor, RankOneProduct) {
  expect_matrix_near(tensor(ket_bra({1, 0}), ket_bra({1, 0})), ket_bra({1, 0, 0, 0}), 0);
}

TEST(Tensor, DiagonalKronecker) {
  expect_matrix_near(tensor(diag_matrix({0.5, 0.5}), diag_matrix({1, 0})), diag_matrix({0.5, 0, 0.5, 0}), 0);
  const std::vector<double> a{0.5, 0.5}, b{1, 0};
  EXPECT_EQ(kron(a, b), (std::vector<double>{0.5, 0, 0.5, 0}));
}

TEST(Tensor, FirstFactorIsHighOrder) {
  // |1><1| (x) |0><0| = |10><10| = index 2
  const ComplexMatrix t = tensor(ket_bra({0, 1}), ket_bra({1, 0}));
  EXPECT_EQ(t(2, 2), Complex(1, 0));
  EXPECT_EQ(t.trace(), Complex(1, 0));
}

TEST(Tensor, DenseCapEnforced) {
  const ComplexMatrix big = ComplexMatrix::Identity(1 << 7, 1 << 7);
  EXPECT_EQ(code_of([&] { tensor(big, ComplexMatrix::Identity(1 << 6, 1 << 6)); }), ErrorCode::kCapExceeded);
}

TEST(PartialTrace, ProductStateIdentity) {
  Rng rng(1);
  const DensityOperator rho = random_density(rng, 2);
  const DensityOperator sigma = random_density(rng, 1);
  const DensityOperator joint = dense(tensor(rho.matrix(), sigma.matrix()));
  expect_matrix_near(partial_trace_last(joint).matrix(), rho.matrix(), 1e-10);
}

TEST(PartialTrace, BellStateReducesToMaximallyMixed) {
  const double r = 1 / std::sqrt(2.0);
  const DensityOperator bell = dense(ket_bra({r, 0, 0, r}));
  expect_matrix_near(partial_trace_last(bell).to_matrix(), diag_matrix({0.5, 0.5}), 1e-12);
}

TEST(PartialTrace, DiagonalSumsAdjacentPairs) {
  const auto d = DensityOperator::diagonal({0.1, 0.2, 0.3, 0.4});
  const auto r = partial_trace_last(d);
  ASSERT_TRUE(r.is_diagonal());
  EXPECT_NEAR(r.probabilities()[0], 0.3, 1e-15);
  EXPECT_NEAR(r.probabilities()[1], 0.7, 1e-15);
}

TEST(PartialTrace, DenseMatchesEntryFormula) {
  Rng rng(2);
  const DensityOperator d = random_density(rng, 3);
  const ComplexMatrix r = partial_trace_last(d).matrix();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_LE(std::abs(r(i, j) - (d.matrix()(2 * i, 2 * j) + d.matrix()(2 * i + 1, 2 * j + 1))), 1e-14);
    }
  }
}

TEST(PartialTrace, NeedsTwoQubits) {
  EXPECT_EQ(code_of([] { partial_trace_last(DensityOperator::diagonal({0.5, 0.5})); }), ErrorCode::kOutOfRange);
}

TEST(PartialTraceK, ZeroIsIdentity) {
  Rng rng(3);
  const DensityOperator d = random_density(rng, 2);
  expect_matrix_near(partial_trace_k(d, 0).matrix(), d.matrix(), 0);
}

TEST(PartialTraceK, ProductReduction) {
  Rng rng(4);
  const DensityOperator rho = random_density(rng, 2);
  const ComplexMatrix tau2 = ComplexMatrix::Identity(4, 4) / 4.0;
  expect_matrix_near(partial_trace_k(dense(tensor(rho.matrix(), tau2)), 2).matrix(), rho.matrix(), 1e-12);
}

TEST(PartialTraceK, DiagonalMarginalMatchesBruteForce) {
  Rng rng(5);
  const auto p = random_descending_spectrum(rng, 8);
  std::vector<double> shuffled = p;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const auto d = DensityOperator::diagonal(shuffled);
  const auto r = partial_trace_k(d, 2);
  const auto oracle = marginal_oracle(shuffled, 3, 2);
  ASSERT_EQ(r.probabilities().size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(r.probabilities()[i], oracle[i], 1e-15);
}

TEST(PartialTraceK, EqualsRepeatedPartialTraceLast) {
  Rng rng(6);
  const DensityOperator d = random_density(rng, 4);
  expect_matrix_near(partial_trace_k(d, 3).matrix(), partial_trace_last(partial_trace_last(partial_trace_last(d))).matrix(),
                     1e-14);
}

TEST(PartialTraceK, RejectsTracingEverything) {
  EXPECT_EQ(code_of([] { partial_trace_k(DensityOperator::diagonal({0.25, 0.25, 0.25, 0.25}), 2); }), ErrorCode::kOutOfRange);
}

TEST(PartialTraceK, ProductSplitsLastFactor) {
  Rng rng(7);
  const DensityOperator a = random_density(rng, 2);
  const DensityOperator b = random_density(rng, 3);
  const DensityOperator p = DensityOperator::product({a, b});
  const DensityOperator r = partial_trace_k(p, 2);
  expect_matrix_near(r.to_matrix(), tensor(a.matrix(), partial_trace_k(b, 2).matrix()), 1e-14);
}

TEST(Eigendecompose, MaximallyMixed) {
  const Spectrum s = eigendecompose(dense(diag_matrix({0.5, 0.5})));
  ASSERT_EQ(s.values.size(), 2u);
  EXPECT_NEAR(s.values[0], 0.5, 1e-15);
  EXPECT_NEAR(s.values[1], 0.5, 1e-15);
}

TEST(Eigendecompose, PureState) {
  const Spectrum s = eigendecompose(dense(ket_bra({1, 0})));
  EXPECT_NEAR(s.values[0], 1.0, 1e-15);
  EXPECT_NEAR(s.values[1], 0.0, 1e-15);
}

TEST(Eigendecompose, ReconstructsRandomThreeQubitState) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityOperator d = random_density(rng, 3);
    const Spectrum s = eigendecompose(d);
    ASSERT_TRUE(s.vectors);
    const ComplexMatrix& v = *s.vectors;
    ComplexMatrix rebuilt = ComplexMatrix::Zero(8, 8);
    for (int i = 0; i < 8; ++i) rebuilt += s.values[static_cast<std::size_t>(i)] * v.col(i) * v.col(i).adjoint();
    expect_matrix_near(rebuilt, d.matrix(), 1e-9);
    expect_matrix_near(v.adjoint() * v, ComplexMatrix::Identity(8, 8), 1e-9);
    EXPECT_TRUE(std::is_sorted(s.values.begin(), s.values.end(), std::greater<>()));
  }
}

TEST(Eigendecompose, DiagonalTiesBrokenByIndex) {
  const Spectrum s = eigendecompose(DensityOperator::diagonal({0.2, 0.3, 0.2, 0.3}));
  EXPECT_EQ(s.labels, (std::vector<BasisIndex>{1, 3, 0, 2}));
  EXPECT_FALSE(s.vectors.has_value());
}

TEST(Eigendecompose, ClipsTinyNegatives) {
  const Spectrum s = eigendecompose(DensityOperator::trusted_diagonal({1.0 + 5e-10, -5e-10}));
  EXPECT_EQ(s.values[1], 0.0);
  EXPECT_NEAR(s.values[0], 1.0, 1e-15);
}

TEST(Eigendecompose, RenormalizesSmallTraceDrift) {
  const Spectrum s = eigendecompose(DensityOperator::trusted_diagonal({0.5 + 2e-7, 0.5}));
  EXPECT_NEAR(s.values[0] + s.values[1], 1.0, 1e-15);
}

TEST(Eigendecompose, MalformedTraceIsAnError) {
  EXPECT_EQ(code_of([] { eigendecompose(DensityOperator::trusted_diagonal({0.5, 0.51})); }), ErrorCode::kMalformedOperator);
}

TEST(ShannonEntropy, Examples) {
  EXPECT_DOUBLE_EQ(shannon_entropy(std::vector<double>{0.5, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(shannon_entropy(std::vector<double>{1, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(shannon_entropy(std::vector<double>{0.5, 0.25, 0.125, 0.125}), 1.75);
}

TEST(ShannonEntropy, RejectsNegativeEntry) {
  EXPECT_EQ(code_of([] { shannon_entropy(std::vector<double>{1.1, -0.1}); }), ErrorCode::kPrecondition);
}

TEST(VonNeumannEntropy, TracialStateHasNBits) {
  for (int n = 1; n <= 6; ++n) {
    const ComplexMatrix m = ComplexMatrix::Identity(1 << n, 1 << n) / static_cast<double>(1 << n);
    EXPECT_NEAR(von_neumann_entropy(dense(m)), n, 1e-12);
  }
}

TEST(VonNeumannEntropy, BasisStatesHaveZero) {
  const std::vector<int> bits{1, 0, 1, 1};
  EXPECT_EQ(von_neumann_entropy(DensityOperator::basis_state(bits)), 0.0);
}

TEST(VonNeumannEntropy, AdditivityAgainstEigenvalueProducts) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const DensityOperator a = random_density(rng, 1 + trial % 2);
    const DensityOperator b = random_density(rng, 1 + trial % 3);
    const auto sa = eigendecompose(a).values, sb = eigendecompose(b).values;
    const auto prod = kron(sa, sb);
    const double joint = von_neumann_entropy(dense(tensor(a.matrix(), b.matrix())));
    EXPECT_NEAR(joint, shannon_entropy(prod), 1e-8);
    EXPECT_NEAR(joint, von_neumann_entropy(a) + von_neumann_entropy(b), 1e-8);
  }
}

TEST(VonNeumannEntropy, RangeProperty) {
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const int q = 1 + trial % 4;
    const double h = von_neumann_entropy(random_density(rng, q, 1 + trial % (1 << q)));
    EXPECT_GE(h, -1e-12);
    EXPECT_LE(h, q + 1e-12);
  }
}

TEST(TopKSum, Examples) {
  Spectrum s;
  s.qubits = 2;
  s.values = {0.5, 0.3, 0.2, 0.0};
  EXPECT_NEAR(top_k_sum(s, 2), 0.8, 1e-15);
  EXPECT_NEAR(top_k_sum(s, 4), 1.0, 1e-15);
}

TEST(TopKSum, MatchesSortThenSumOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_descending_spectrum(rng, 8);
    std::shuffle(p.begin(), p.end(), rng);
    const Spectrum s = eigendecompose(DensityOperator::diagonal(p));
    std::vector<double> sorted = p;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    EXPECT_NEAR(top_k_sum(s, 3), sorted[0] + sorted[1] + sorted[2], 1e-15);
    for (std::uint64_t k = 1; k < 8; ++k) EXPECT_LE(top_k_sum(s, k), top_k_sum(s, k + 1) + 1e-16);
  }
}

TEST(TopKSum, RangeChecked) {
  const Spectrum s = eigendecompose(DensityOperator::diagonal({0.5, 0.5}));
  EXPECT_EQ(code_of([&] { top_k_sum(s, 0); }), ErrorCode::kOutOfRange);
  EXPECT_EQ(code_of([&] { top_k_sum(s, 3); }), ErrorCode::kOutOfRange);
}

TEST(TopKProjector, PureState) {
  const Spectrum s = eigendecompose(dense(ket_bra({1, 0})));
  const Projection p = top_k_projector(s, 1);
  expect_matrix_near(p.to_matrix(), ket_bra({1, 0}), 1e-12);
}

TEST(TopKProjector, FullRankIsIdentity) {
  const Spectrum s = eigendecompose(dense(diag_matrix({0.5, 0.5})));
  expect_matrix_near(top_k_projector(s, 2).to_matrix(), ComplexMatrix::Identity(2, 2), 1e-12);
}

TEST(TopKProjector, RandomTwoQubitIsRankTwoProjection) {
  Rng rng(12);
  const Projection p = top_k_projector(eigendecompose(random_density(rng, 2)), 2);
  const ComplexMatrix m = p.to_matrix();
  expect_matrix_near(m * m, m, 1e-9);
  expect_matrix_near(m.adjoint(), m, 1e-9);
  EXPECT_NEAR(m.trace().real(), 2.0, 1e-9);
  EXPECT_EQ(p.rank(), 2u);
}

TEST(TopKProjector, DiagonalGivesBasisSubset) {
  const Projection p = top_k_projector(eigendecompose(DensityOperator::diagonal({0.1, 0.6, 0.3, 0.0})), 2);
  ASSERT_TRUE(p.is_subset());
  EXPECT_EQ(p.indices(), (std::vector<BasisIndex>{1, 2}));
}

TEST(ProjectionWeight, Examples) {
  Rng rng(13);
  const DensityOperator d = random_density(rng, 2);
  EXPECT_NEAR(projection_weight(d, Projection::identity(2)), 1.0, 1e-12);
  EXPECT_NEAR(projection_weight(dense(diag_matrix({0.5, 0.5})), Projection::from_matrix(ket_bra({1, 0}))), 0.5, 1e-15);
  const Spectrum s = eigendecompose(d);
  for (std::uint64_t k = 1; k <= 4; ++k) EXPECT_NEAR(projection_weight(d, top_k_projector(s, k)), top_k_sum(s, k), 1e-9);
}

TEST(ProjectionWeight, DimensionMismatch) {
  EXPECT_EQ(code_of([] { projection_weight(DensityOperator::diagonal({0.5, 0.5}), Projection::identity(2)); }),
            ErrorCode::kDimensionMismatch);
}

TEST(ProjectionWeight, ProductFormsAgreeWithMaterialized) {
  Rng rng(14);
  const DensityOperator d = DensityOperator::product({random_density(rng, 1), random_density(rng, 2), random_density(rng, 1)});
  const Projection g = Projection::product({random_projection(rng, 2, 1), random_projection(rng, 2, 3)});
  const double w = projection_weight(d, g);
  const double direct = (d.to_matrix() * g.to_matrix()).trace().real();
  EXPECT_NEAR(w, direct, 1e-12);
}

TEST(SvdBound, RandomPairsNeverExceedTopK) {
  Rng rng(15);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int q = 1 + trial % 4;
    const std::uint64_t dim = std::uint64_t{1} << q;
    std::uniform_int_distribution<std::uint64_t> kd(1, dim);
    const std::uint64_t k = kd(rng);
    const DensityOperator d = random_density(rng, q);
    const Spectrum s = eigendecompose(d);
    if (projection_weight(d, random_projection(rng, q, k)) > top_k_sum(s, k) + 1e-9) ++violations;
    EXPECT_NEAR(projection_weight(d, top_k_projector(s, k)), top_k_sum(s, k), 1e-9);
  }
  EXPECT_EQ(violations, 0);
}

TEST(TauWeight, Examples) {
  EXPECT_EQ(tau_weight(Projection::identity(5)), 1.0);
  EXPECT_EQ(tau_weight(Projection::from_matrix(ket_bra({1, 0}))), 0.5);
  EXPECT_EQ(tau_weight(Projection::basis_subset(3, {0, 5})), 0.25);
}

TEST(ValidateDensity, AcceptsMaximallyMixed) {
  EXPECT_NO_THROW(validate_density(diag_matrix({0.5, 0.5}), 1e-9));
}

TEST(ValidateDensity, WrongTrace) {
  EXPECT_EQ(code_of([] { validate_density(diag_matrix({0.6, 0.6}), 1e-9); }), ErrorCode::kWrongTrace);
  EXPECT_EQ(code_of([] { validate_density(diag_matrix({0.6, 0.6}), 0.5); }), ErrorCode::kWrongTrace);
}

TEST(ValidateDensity, ClipsTinyNegativeEigenvalue) {
  Rng rng(16);
  const ComplexMatrix u = haar_unitary(rng, 4);
  Eigen::VectorXd vals(4);
  vals << 0.6, 0.3, 0.1 + 1e-12, -1e-12;
  const ComplexMatrix m = u * vals.cast<Complex>().asDiagonal() * u.adjoint();
  const DensityOperator d = validate_density(m, 1e-9);
  const Spectrum s = eigendecompose(d);
  EXPECT_GE(s.values.back(), 0.0);
  expect_matrix_near(d.matrix(), m, 1e-10);
}

TEST(ValidateDensity, DistinctErrorCodes) {
  ComplexMatrix nh = diag_matrix({0.5, 0.5});
  nh(0, 1) = 0.3;
  EXPECT_EQ(code_of([&] { validate_density(nh, 1e-9); }), ErrorCode::kNotHermitian);
  EXPECT_EQ(code_of([] { validate_density(diag_matrix({1.5, -0.5}), 1e-9); }), ErrorCode::kNotPsd);
  EXPECT_EQ(code_of([] { validate_density(ComplexMatrix::Identity(3, 3) / 3.0, 1e-9); }), ErrorCode::kBadDimension);
  EXPECT_EQ(code_of([] { validate_density(ComplexMatrix::Identity(2, 3), 1e-9); }), ErrorCode::kBadDimension);
}

TEST(DensityOperator, DiagonalValidation) {
  EXPECT_EQ(code_of([] { DensityOperator::diagonal({0.5, 0.4}); }), ErrorCode::kWrongTrace);
  EXPECT_EQ(code_of([] { DensityOperator::diagonal({1.2, -0.2}); }), ErrorCode::kNotPsd);
  EXPECT_EQ(code_of([] { DensityOperator::diagonal({0.5, 0.25, 0.25}); }), ErrorCode::kBadDimension);
}

TEST(DensityOperator, ProductEntriesMatchKronecker) {
  Rng rng(17);
  const DensityOperator a = random_density(rng, 1), b = random_density(rng, 2);
  const DensityOperator p = DensityOperator::product({a, b});
  const ComplexMatrix k = tensor(a.matrix(), b.matrix());
  for (BasisIndex i = 0; i < 8; ++i) {
    for (BasisIndex j = 0; j < 8; ++j) EXPECT_LE(std::abs(p.entry(i, j) - k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))), 1e-15);
  }
  EXPECT_NEAR(von_neumann_entropy(p), von_neumann_entropy(dense(k)), 1e-9);
}

TEST(MaxAbsDiff, PartialTraceConsistency) {
  Rng rng(18);
  for (int trial = 0; trial < 50; ++trial) {
    const DensityOperator a = random_density(rng, 1 + trial % 3);
    const DensityOperator sigma = random_density(rng, 1);
    const DensityOperator joint = dense(tensor(a.matrix(), sigma.matrix()));
    EXPECT_LE(max_abs_diff(partial_trace_last(joint), a), 1e-10);
  }
}

TEST(MaxAbsDiff, ProductBeyondCapsIsZeroForEqualFactors) {
  std::vector<DensityOperator> fs(40, DensityOperator::diagonal({0.7, 0.3}));
  const DensityOperator a = DensityOperator::product(fs);
  EXPECT_EQ(max_abs_diff(a, a), 0.0);
  fs.back() = DensityOperator::diagonal({0.6, 0.4});
  EXPECT_GT(max_abs_diff(a, DensityOperator::product(fs)), 0.0);
}

TEST(CompensatedSum, RecoversSmallTerms) {
  std::vector<double> xs{1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0};
  EXPECT_NEAR(compensated_sum(xs), 4e-16, 1e-30);
}

}  // namespace
}  // namespace qsrand
