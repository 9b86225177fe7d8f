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

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <optional>
#include <string>

#include "qsrand/error.hpp"

namespace qsrand {

struct QuadratureOptions {
  double tol = 1e-12;
  int max_depth = 48;
  // Dyadic pieces examined toward a singular left endpoint at 0.
  int max_zero_pieces = 1000;
};

namespace detail {

template <typename F>
double simpson_recurse(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                       int depth, bool& ok) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol || std::abs(delta) <= 1e-15 * std::abs(left + right)) {
    return left + right + delta / 15.0;
  }
  if (depth <= 0) {
    ok = false;
    return left + right + delta / 15.0;
  }
  return simpson_recurse(f, a, m, fa, flm, fm, left, tol / 2, depth - 1, ok) +
         simpson_recurse(f, m, b, fm, frm, fb, right, tol / 2, depth - 1, ok);
}

}  // namespace detail

/// Adaptive Simpson on a closed interval where f is finite.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-12, int max_depth = 48) {
  if (!(b > a)) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  bool ok = true;
  double v = detail::simpson_recurse(f, a, b, fa, fm, fb, whole, tol, max_depth, ok);
  if (!ok || !std::isfinite(v)) {
    throw Error(ErrorCode::kQuadrature, "adaptive Simpson did not converge on [" + std::to_string(a) + ", " +
                                            std::to_string(b) + "]");
  }
  return v;
}

/// Integral over (a, b]. When a == 0 the integrand may be singular there: the
/// interval is split into dyadic pieces [b 2^{-j-1}, b 2^{-j}] and summation
/// stops once the pieces decay geometrically below tolerance. Slowly decaying
/// tails raise a quadrature error.
template <typename F>
double integrate_toward_zero(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
  if (a > 0) return adaptive_simpson(f, a, b, opt.tol, opt.max_depth);
  double total = 0.0;
  double hi = b;
  double prev = -1.0;
  std::deque<double> ratios;
  for (int j = 0; j < opt.max_zero_pieces; ++j) {
    const double lo = hi / 2;
    const double piece = adaptive_simpson(f, lo, hi, opt.tol / 4, opt.max_depth);
    total += piece;
    const double size = std::abs(piece);
    if (prev > 0) {
      ratios.push_back(size / prev);
      if (ratios.size() > 8) ratios.pop_front();
    }
    if (size == 0.0 && prev == 0.0) return total;
    if (ratios.size() == 8) {
      const double r = *std::max_element(ratios.begin(), ratios.end());
      if (r <= 0.75 && size * r / (1.0 - r) <= opt.tol) return total;
    }
    prev = size;
    hi = lo;
  }
  throw Error(ErrorCode::kQuadrature, "integrand mass near 0 does not decay geometrically");
}

/// A probability density on (0,1), optionally with a closed-form antiderivative.
class DensitySpec {
 public:
  using Fn = std::function<double(double)>;

  DensitySpec(std::string name, Fn density, std::optional<Fn> antiderivative = std::nullopt,
              QuadratureOptions quad = {}, double normalization_tol = 1e-9)
      : name_(std::move(name)), density_(std::move(density)), antiderivative_(std::move(antiderivative)), quad_(quad) {
    const double total = mass(0.0, 1.0);
    if (std::abs(total - 1.0) > normalization_tol) {
      throw Error(ErrorCode::kNormalization, name_ + " integrates to " + std::to_string(total));
    }
  }

  const std::string& name() const { return name_; }
  bool has_antiderivative() const { return antiderivative_.has_value(); }
  double density(double x) const { return density_(x); }
  double antiderivative(double x) const { return (*antiderivative_)(x); }
  const QuadratureOptions& quadrature() const { return quad_; }

  /// Integral of the density over [a, b).
  double mass(double a, double b) const {
    if (antiderivative_) return (*antiderivative_)(b) - (*antiderivative_)(a);
    return integrate_toward_zero(density_, a, b, quad_);
  }

  static DensitySpec uniform() {
    return DensitySpec("uniform", [](double) { return 1.0; }, Fn([](double x) { return x; }));
  }

  /// 2 / (x (1 - ln x)^3): finite -integral f log f.
  static DensitySpec f1() {
    return DensitySpec(
        "f1", [](double x) { return 2.0 / (x * std::pow(1.0 - std::log(x), 3)); },
        Fn([](double x) { return x <= 0 ? 0.0 : 1.0 / std::pow(1.0 - std::log(x), 2); }));
  }

  /// 1 / (x (1 - ln x)^2): integral f log f diverges.
  static DensitySpec f2() {
    return DensitySpec(
        "f2", [](double x) { return 1.0 / (x * std::pow(1.0 - std::log(x), 2)); },
        Fn([](double x) { return x <= 0 ? 0.0 : 1.0 / (1.0 - std::log(x)); }));
  }

  static DensitySpec builtin(const std::string& name) {
    if (name == "uniform") return uniform();
    if (name == "f1") return f1();
    if (name == "f2") return f2();
    throw Error(ErrorCode::kParse, "unknown density " + name);
  }

 private:
  std::string name_;
  Fn density_;
  std::optional<Fn> antiderivative_;
  QuadratureOptions quad_;
};

}  // namespace qsrand
