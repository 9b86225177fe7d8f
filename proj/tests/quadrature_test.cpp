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

#include <cmath>
#include <numbers>

#include "qsrand/quadrature.hpp"

namespace qsrand {
namespace {

TEST(AdaptiveSimpson, Polynomials) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return x * x; }, 0.0, 1.0), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(adaptive_simpson([](double x) { return x * x * x * x; }, -1.0, 2.0), 33.0 / 5.0, 1e-12);
}

TEST(AdaptiveSimpson, Transcendental) {
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, std::numbers::pi), 2.0, 1e-12);
  EXPECT_NEAR(adaptive_simpson([](double x) { return std::exp(-x); }, 0.0, 5.0), 1.0 - std::exp(-5.0), 1e-12);
}

TEST(AdaptiveSimpson, EmptyInterval) { EXPECT_EQ(adaptive_simpson([](double) { return 1.0; }, 1.0, 1.0), 0.0); }

TEST(AdaptiveSimpson, NonFiniteIntegrandFails) {
  EXPECT_THROW(adaptive_simpson([](double x) { return 1.0 / (x - 0.5); }, 0.0, 1.0), Error);
}

TEST(IntegrateTowardZero, IntegrableSingularity) {
  // integral of x^{-1/2} over (0, 1] is 2; the dyadic pieces shrink by 1/sqrt 2
  EXPECT_NEAR(integrate_toward_zero([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0), 2.0, 1e-9);
  EXPECT_NEAR(integrate_toward_zero([](double x) { return std::log(x); }, 0.0, 1.0), -1.0, 1e-9);
}

TEST(IntegrateTowardZero, LogarithmicTailIsRejected) {
  // f2's pieces decay like 1/j^2: no geometric tail.
  const auto f2 = [](double x) { return 1.0 / (x * std::pow(1.0 - std::log(x), 2)); };
  try {
    integrate_toward_zero(f2, 0.0, 1.0);
    FAIL() << "expected quadrature failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kQuadrature);
  }
}

TEST(DensitySpec, BuiltinsNormalized) {
  for (const char* name : {"uniform", "f1", "f2"}) {
    const DensitySpec s = DensitySpec::builtin(name);
    EXPECT_NEAR(s.mass(0.0, 1.0), 1.0, 1e-15) << name;
  }
  EXPECT_THROW(DensitySpec::builtin("f3"), Error);
}

TEST(DensitySpec, F2FirstCylinder) {
  EXPECT_NEAR(DensitySpec::f2().mass(0.0, 0.5), 1.0 / (1.0 + std::numbers::ln2), 1e-15);
  EXPECT_NEAR(DensitySpec::f2().mass(0.0, 0.5), 0.590616, 1e-6);
}

TEST(DensitySpec, AntiderivativesMatchQuadratureAwayFromZero) {
  for (const DensitySpec& s : {DensitySpec::f1(), DensitySpec::f2()}) {
    for (double a : {0.01, 0.1, 0.3}) {
      const double b = a + 0.2;
      const double q = adaptive_simpson([&](double x) { return s.density(x); }, a, b, 1e-13);
      EXPECT_NEAR(s.mass(a, b), q, 1e-11) << s.name() << " " << a;
    }
  }
}

TEST(DensitySpec, UserDensityViaQuadrature) {
  const DensitySpec cubic("3x^2", [](double x) { return 3 * x * x; });
  EXPECT_FALSE(cubic.has_antiderivative());
  EXPECT_NEAR(cubic.mass(0.0, 0.5), 0.125, 1e-12);
  EXPECT_NEAR(cubic.mass(0.25, 0.75), 0.75 * 0.75 * 0.75 - 0.25 * 0.25 * 0.25, 1e-12);
  const DensitySpec root("1/(2 sqrt x)", [](double x) { return 0.5 / std::sqrt(x); });
  EXPECT_NEAR(root.mass(0.0, 0.25), 0.5, 1e-9);
}

TEST(DensitySpec, NormalizationChecked) {
  try {
    DensitySpec("twice", [](double) { return 2.0; });
    FAIL() << "expected normalization failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNormalization);
  }
}

TEST(DensitySpec, SingularUserDensityWithoutAntiderivativeFails) {
  EXPECT_THROW(DensitySpec("f2-no-F", [](double x) { return 1.0 / (x * std::pow(1.0 - std::log(x), 2)); }), Error);
}

}  // namespace
}  // namespace qsrand
