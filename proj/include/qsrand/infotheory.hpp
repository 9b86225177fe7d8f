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

// Distribution flattening, the entropy bounds around it, the step-function
// family of a state, and uniform-integrability profiles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "qsrand/linalg.hpp"
#include "qsrand/quadrature.hpp"
#include "qsrand/states.hpp"

namespace qsrand {

namespace detail {

inline int spectrum_qubits(std::span<const double> alpha) {
  auto q = qubits_for_dimension(alpha.size());
  if (!q) throw Error(ErrorCode::kBadDimension, "spectrum length " + std::to_string(alpha.size()) + " is not 2^n");
  return *q;
}

inline void require_descending_distribution(std::span<const double> alpha) {
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] < 0) throw Error(ErrorCode::kPrecondition, "negative probability");
    if (i > 0 && alpha[i] > alpha[i - 1] + 1e-15) {
      throw Error(ErrorCode::kNotDescending, "entry " + std::to_string(i) + " exceeds its predecessor");
    }
  }
  if (std::abs(compensated_sum(alpha) - 1.0) > 1e-9) throw Error(ErrorCode::kPrecondition, "spectrum does not sum to 1");
}

/// ceil(2^x) with results within 1e-9 of an integer snapped to it.
inline std::uint64_t ceil_exp2(double x) {
  const double v = std::exp2(x);
  const double r = std::round(v);
  if (std::abs(v - r) <= 1e-9 * std::max(1.0, v)) return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(v));
}

}  // namespace detail

struct FlattenResult {
  std::vector<double> r;       // sub-distribution
  std::vector<double> p;       // r / mass
  std::uint64_t cut = 0;       // ceil(2^{n eps})
  std::uint64_t xi_index = 0;  // 1-based
  double mass = 0.0;           // sum of r
};

/// r copies alpha up to the cut, then repeats alpha_cut while the running sum
/// stays at most 1, then is zero. Trailing zero entries do not extend xi.
inline FlattenResult flatten_distribution(std::span<const double> alpha, double eps) {
  if (!(eps > 0 && eps < 1)) throw Error(ErrorCode::kPrecondition, "eps must lie in (0,1)");
  const int n = detail::spectrum_qubits(alpha);
  detail::require_descending_distribution(alpha);
  const std::uint64_t dim = alpha.size();
  FlattenResult f;
  f.cut = std::min<std::uint64_t>(dim, detail::ceil_exp2(n * eps));
  const double level = alpha[f.cut - 1];
  CompensatedSum running;
  std::uint64_t xi = 0;
  for (std::uint64_t i = 1; i <= dim; ++i) {
    const double candidate = i <= f.cut ? alpha[i - 1] : level;
    running.add(candidate);
    if (running.value() > 1.0 + 1e-12) break;
    if (candidate > 0) xi = i;
  }
  f.xi_index = xi;
  f.r.assign(dim, 0.0);
  CompensatedSum mass;
  for (std::uint64_t i = 1; i <= xi; ++i) {
    f.r[i - 1] = i <= f.cut ? alpha[i - 1] : level;
    mass.add(f.r[i - 1]);
  }
  f.mass = mass.value();
  f.p.resize(dim);
  for (std::uint64_t i = 0; i < dim; ++i) f.p[i] = f.r[i] / f.mass;
  return f;
}

/// Both sides of an entropy inequality. `applicable` is false when the
/// premise of the bound does not hold for the input.
struct BoundCheck {
  bool applicable = true;
  double entropy = 0.0;
  double bound = 0.0;
};

/// H(alpha) vs (1 - 2 delta)[log(1 - delta) - log(delta) + n eps], valid when
/// the top-ceil(2^{n eps}) mass and alpha_1 are both at most delta.
inline BoundCheck entropy_lower_bound_check(std::span<const double> alpha, double eps, double delta) {
  if (!(delta > 0 && delta < 0.5)) throw Error(ErrorCode::kPrecondition, "delta must lie in (0, 0.5)");
  if (!(eps > 0 && eps < 1)) throw Error(ErrorCode::kPrecondition, "eps must lie in (0,1)");
  const int n = detail::spectrum_qubits(alpha);
  detail::require_descending_distribution(alpha);
  const std::uint64_t cut = std::min<std::uint64_t>(alpha.size(), detail::ceil_exp2(n * eps));
  BoundCheck c;
  c.entropy = shannon_entropy(alpha);
  c.bound = (1 - 2 * delta) * (std::log2(1 - delta) - std::log2(delta) + n * eps);
  c.applicable = compensated_sum(alpha.subspan(0, cut)) <= delta && alpha[0] <= delta;
  return c;
}

/// True iff the descending rearrangement of p dominates that of q on the
/// support of p. Then p majorizes q, so H(q) >= H(p).
inline bool uniformity_dominance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw Error(ErrorCode::kDimensionMismatch, "distributions differ in length");
  std::vector<double> ps(p.begin(), p.end()), qs(q.begin(), q.end());
  std::sort(ps.begin(), ps.end(), std::greater<>());
  std::sort(qs.begin(), qs.end(), std::greater<>());
  for (std::size_t i = 0; i < ps.size() && ps[i] > 0; ++i) {
    if (ps[i] < qs[i] - 1e-15) return false;
  }
  return true;
}

/// Uniform on the first 2^{n-m} indices (carrying their total S) and uniform
/// on the rest (carrying 1 - S).
inline std::vector<double> two_block_average(std::span<const double> alpha, int m) {
  const int n = detail::spectrum_qubits(alpha);
  if (m < 0 || m > n) throw Error(ErrorCode::kOutOfRange, "block level m outside [0, n]");
  const std::uint64_t dim = alpha.size();
  const std::uint64_t head = std::uint64_t{1} << (n - m);
  const double s = compensated_sum(alpha.subspan(0, head));
  std::vector<double> out(dim);
  for (std::uint64_t i = 0; i < head; ++i) out[i] = s / static_cast<double>(head);
  const double rest = std::max(0.0, 1.0 - s);
  for (std::uint64_t i = head; i < dim; ++i) out[i] = rest / static_cast<double>(dim - head);
  return out;
}

struct UpperBoundCheck {
  double entropy = 0.0;        // H(alpha)
  double bound = 0.0;          // 1 - m S + n
  double block_entropy = 0.0;  // H(two_block_average(alpha, m))
  double top_mass = 0.0;       // S = top-2^{n-m} sum
  bool premise = false;        // S > delta
};

inline UpperBoundCheck entropy_upper_bound_check(std::span<const double> alpha, int m, double delta) {
  const int n = detail::spectrum_qubits(alpha);
  if (m < 0 || m > n) throw Error(ErrorCode::kOutOfRange, "block level m outside [0, n]");
  detail::require_descending_distribution(alpha);
  UpperBoundCheck c;
  c.top_mass = compensated_sum(alpha.subspan(0, std::uint64_t{1} << (n - m)));
  c.entropy = shannon_entropy(alpha);
  c.bound = 1.0 - m * c.top_mass + n;
  c.block_entropy = shannon_entropy(two_block_average(alpha, m));
  c.premise = c.top_mass > delta;
  return c;
}

// ---------------------------------------------------------------------------
// Step family: f_n(x) = 2^n alpha^n_i on [(i-1) 2^{-n}, i 2^{-n})

class StepFamily {
 public:
  explicit StepFamily(std::vector<std::vector<double>> alphas) : alphas_(std::move(alphas)) {
    for (const auto& a : alphas_) {
      std::vector<double> c(a.size() + 1, 0.0);
      CompensatedSum s;
      for (std::size_t i = 0; i < a.size(); ++i) {
        s.add(a[i]);
        c[i + 1] = s.value();
      }
      cumulative_.push_back(std::move(c));
    }
  }

  int depth() const { return static_cast<int>(alphas_.size()); }
  const std::vector<double>& eigenvalues(int n) const { return alphas_.at(static_cast<std::size_t>(n - 1)); }

  double value(int n, double x) const {
    const auto& a = eigenvalues(n);
    auto i = static_cast<std::size_t>(std::floor(std::ldexp(x, n)));
    i = std::min(i, a.size() - 1);
    return std::ldexp(a[i], n);
  }

  /// Integral of f_n over [0, 1): the eigenvalue total.
  double integral(int n) const { return cumulative_.at(static_cast<std::size_t>(n - 1)).back(); }

  /// Integral of f_n over [0, x).
  double prefix_integral(int n, double x) const {
    const auto& c = cumulative_.at(static_cast<std::size_t>(n - 1));
    const auto& a = eigenvalues(n);
    x = std::clamp(x, 0.0, 1.0);
    const double scaled = std::ldexp(x, n);
    auto whole = static_cast<std::size_t>(std::floor(scaled));
    if (whole >= a.size()) return c.back();
    return c[whole] + (scaled - static_cast<double>(whole)) * a[whole];
  }

  double integral_over(int n, double a, double b) const { return prefix_integral(n, b) - prefix_integral(n, a); }

 private:
  std::vector<std::vector<double>> alphas_;
  std::vector<std::vector<double>> cumulative_;
};

inline StepFamily step_family(const StateSequence& rho, int depth) {
  if (depth > rho.max_depth()) throw Error(ErrorCode::kDepthMismatch, "family depth beyond max depth");
  std::vector<std::vector<double>> alphas;
  for (int n = 1; n <= depth; ++n) alphas.push_back(eigendecompose(rho.at(n)).values);
  return StepFamily(std::move(alphas));
}

/// Integral of f_n over [0, 2^{-m}) = sum of the 2^{n-m} largest eigenvalues.
inline double tail_integral(const StepFamily& fam, int n, int m) {
  if (m < 0 || m > n) throw Error(ErrorCode::kOutOfRange, "tail integral needs 0 <= m <= n");
  const auto& a = fam.eigenvalues(n);
  const auto k = std::size_t{1} << (n - m);
  return compensated_sum(std::span<const double>(a.data(), k));
}

struct UIProfile {
  struct Row {
    double delta = 0.0;
    std::optional<int> level;  // modulus 2^{-level}
    double epsilon = 0.0;      // 2^{-level}, 0 when no modulus
    double sup_tail = 0.0;     // sup_n integral over [0, 2^{-level}) (or at level = depth when none)
  };
  int depth = 0;
  std::vector<Row> rows;
};

/// For each delta, the smallest m with sup_{n <= N} of the integral of f_n over
/// [0, 2^{-m}) at most delta. Each f_n is non-increasing, so among sets of
/// measure 2^{-m} the prefix [0, 2^{-m}) carries the most mass; prefixes
/// suffice.
inline UIProfile ui_profile(const StepFamily& fam, std::span<const double> deltas, int depth) {
  if (deltas.empty()) throw Error(ErrorCode::kPrecondition, "empty delta grid");
  if (depth > fam.depth()) throw Error(ErrorCode::kDepthMismatch, "profile depth beyond family depth");
  std::vector<double> sup(static_cast<std::size_t>(depth) + 1, 0.0);
  for (int m = 1; m <= depth; ++m) {
    for (int n = 1; n <= depth; ++n) {
      const double v = m <= n ? tail_integral(fam, n, m) : fam.prefix_integral(n, std::ldexp(1.0, -m));
      sup[static_cast<std::size_t>(m)] = std::max(sup[static_cast<std::size_t>(m)], v);
    }
  }
  UIProfile prof;
  prof.depth = depth;
  for (double delta : deltas) {
    UIProfile::Row row;
    row.delta = delta;
    row.sup_tail = sup[static_cast<std::size_t>(depth)];
    for (int m = 1; m <= depth; ++m) {
      if (sup[static_cast<std::size_t>(m)] <= delta) {
        row.level = m;
        row.epsilon = std::ldexp(1.0, -m);
        row.sup_tail = sup[static_cast<std::size_t>(m)];
        break;
      }
    }
    prof.rows.push_back(row);
  }
  return prof;
}

/// H(rho_n) - n for the measure-induced state, from exact cylinder masses.
inline double riemann_entropy_gap(const DensitySpec& spec, int n) {
  return von_neumann_entropy(measure_state(spec, n).at(n)) - n;
}

}  // namespace qsrand
