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

// Quantum Schnorr tests, s-tests and null conditions at finite depth, their
// evaluators, and the constructive builders.
//
// "Fails a test" is a statement about infinitely many m. Everything here
// reports witnesses up to a depth M; interpreting a report is up to the caller.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qsrand/linalg.hpp"
#include "qsrand/rational.hpp"
#include "qsrand/states.hpp"

namespace qsrand {

inline constexpr double kBudgetSlack = 1e-12;

struct TestTerm {
  int m = 0;
  int qubits = 0;  // n_m
  Projection projector;
};

/// m -> (S^m, n_m) for 1 <= m <= max_terms.
class ProjectionSequence {
 public:
  using Generator = std::function<TestTerm(int m)>;

  ProjectionSequence(int max_terms, Generator gen) : max_terms_(max_terms), gen_(std::move(gen)) {}

  static ProjectionSequence from_terms(std::vector<TestTerm> terms) {
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i].m = static_cast<int>(i) + 1;
    auto shared = std::make_shared<const std::vector<TestTerm>>(std::move(terms));
    const int count = static_cast<int>(shared->size());
    return ProjectionSequence(count, [shared](int m) { return (*shared)[static_cast<std::size_t>(m - 1)]; });
  }

  int max_terms() const { return max_terms_; }

  TestTerm term(int m) const {
    if (m < 1 || m > max_terms_) {
      throw Error(ErrorCode::kDepthMismatch, "term " + std::to_string(m) + " outside [1, " + std::to_string(max_terms_) + "]");
    }
    TestTerm t = gen_(m);
    t.m = m;
    if (t.projector.qubits() != t.qubits) {
      throw Error(ErrorCode::kMalformedOperator, "term " + std::to_string(m) + " declares " + std::to_string(t.qubits) +
                                                     " qubits but its projection acts on " +
                                                     std::to_string(t.projector.qubits()));
    }
    return t;
  }

  std::vector<TestTerm> terms(int count) const {
    std::vector<TestTerm> out;
    for (int m = 1; m <= count; ++m) out.push_back(term(m));
    return out;
  }

 private:
  int max_terms_;
  Generator gen_;
};

/// Budget certificates for sum_m tau(S^m).
struct GeometricBudget {};  // tau(S^m) <= 2^{-m}
struct PartialSumBudget {
  std::vector<double> sums;  // claimed sum_{i<=m} tau(S^i), converging at rate 2^{-m}
};
struct UnverifiedBudget {};
using BudgetCertificate = std::variant<GeometricBudget, PartialSumBudget, UnverifiedBudget>;

struct QSTest {
  ProjectionSequence seq;
  BudgetCertificate certificate = GeometricBudget{};
};

struct STest {
  Rational s;
  ProjectionSequence seq;
  std::vector<double> weight_partial_sums;  // sum_{i<=m} 2^{-s n_i} Tr(T^i)
};

struct NullCondition {
  ProjectionSequence seq;
};

struct FailureReport {
  double delta = 0.0;
  int depth = 0;
  std::vector<int> witnesses;  // m with rho(S^m) > delta
  std::vector<double> weights;  // rho(S^m), m = 1..depth
  std::vector<double> taus;     // tau(S^m)
  std::vector<int> qubits;      // n_m
};

// ---------------------------------------------------------------------------
// Validation and evaluation

struct ValidationReport {
  bool budget_verified = true;
  bool valid = true;
  std::optional<int> violation;
  std::string reason;
  std::vector<double> taus;
};

inline ValidationReport validate_qstest(const QSTest& t, int depth) {
  if (depth > t.seq.max_terms()) throw Error(ErrorCode::kDepthMismatch, "validation depth beyond test length");
  ValidationReport r;
  for (int m = 1; m <= depth; ++m) r.taus.push_back(tau_weight(t.seq.term(m).projector));
  auto fail = [&](int m, std::string why) {
    if (r.valid) {
      r.valid = false;
      r.violation = m;
      r.reason = std::move(why);
    }
  };
  if (std::holds_alternative<GeometricBudget>(t.certificate)) {
    for (int m = 1; m <= depth; ++m) {
      if (r.taus[m - 1] > std::ldexp(1.0, -m) + kBudgetSlack) {
        fail(m, "tau(S^" + std::to_string(m) + ") = " + std::to_string(r.taus[m - 1]) + " > 2^-" + std::to_string(m));
      }
    }
  } else if (const auto* ps = std::get_if<PartialSumBudget>(&t.certificate)) {
    if (ps->sums.size() < static_cast<std::size_t>(depth)) throw Error(ErrorCode::kDepthMismatch, "too few partial sums");
    CompensatedSum acc;
    for (int m = 1; m <= depth; ++m) {
      acc.add(r.taus[m - 1]);
      const double phi = ps->sums[m - 1];
      if (std::abs(phi - acc.value()) > kBudgetSlack) fail(m, "partial sum disagrees with tau sum");
      if (m > 1 && phi + kBudgetSlack < ps->sums[m - 2]) fail(m, "partial sums decrease");
    }
    // A limit r with |r - phi(i)| <= 2^{-i} for all i forces |phi(j) - phi(i)| <= 2^{-i} + 2^{-j}.
    for (int i = 1; i <= depth; ++i) {
      for (int j = i + 1; j <= depth; ++j) {
        if (std::abs(ps->sums[j - 1] - ps->sums[i - 1]) > std::ldexp(1.0, -i) + std::ldexp(1.0, -j) + kBudgetSlack) {
          fail(j, "partial sums violate the 2^-m Cauchy rate");
        }
      }
    }
  } else {
    r.budget_verified = false;
    r.valid = false;
    r.reason = "budget unverified";
  }
  return r;
}

inline FailureReport evaluate_failure(const StateSequence& rho, const ProjectionSequence& seq, double delta, int depth) {
  if (depth > seq.max_terms()) {
    throw Error(ErrorCode::kDepthMismatch, "depth " + std::to_string(depth) + " beyond " + std::to_string(seq.max_terms()) + " terms");
  }
  FailureReport r;
  r.delta = delta;
  r.depth = depth;
  for (int m = 1; m <= depth; ++m) {
    TestTerm t = seq.term(m);
    if (t.qubits > rho.max_depth()) {
      throw Error(ErrorCode::kDepthMismatch, "term " + std::to_string(m) + " needs depth " + std::to_string(t.qubits) +
                                                 " but state stops at " + std::to_string(rho.max_depth()));
    }
    const double w = projection_weight(rho.at(t.qubits), t.projector);
    r.weights.push_back(w);
    r.taus.push_back(tau_weight(t.projector));
    r.qubits.push_back(t.qubits);
    if (w > delta) r.witnesses.push_back(m);
  }
  return r;
}

inline FailureReport evaluate_failure(const StateSequence& rho, const QSTest& t, double delta, int depth) {
  return evaluate_failure(rho, t.seq, delta, depth);
}
inline FailureReport evaluate_failure(const StateSequence& rho, const NullCondition& c, double delta, int depth) {
  return evaluate_failure(rho, c.seq, delta, depth);
}

inline FailureReport covered_by_s_test(const StateSequence& rho, const STest& t, double delta, int depth) {
  return evaluate_failure(rho, t.seq, delta, depth);
}

// ---------------------------------------------------------------------------
// Builders

/// Post-hoc certificate for one emitted term.
struct TermCertificate {
  int m = 0;
  int qubits = 0;
  std::uint64_t rank = 0;
  double tau = 0.0;
  double budget = 0.0;  // tau for q-S tests, 2^{-s n} Tr for s-tests
  double weight = 0.0;  // rho_{n_m}(S^m)
  bool budget_ok = false;
  bool weight_ok = false;
};

/// Terms found before the search ran out. Exhaustion at m implies exhaustion
/// at every later m: the later budget condition is stricter and the scanned
/// range of n is the same.
struct BuildOutcome {
  std::string kind;  // "qs" | "s"
  std::vector<TestTerm> terms;
  std::vector<TermCertificate> certificates;
  std::optional<int> exhausted_at;
  std::optional<Rational> s;
  int scan_limit = 0;               // largest n examined
  bool limited_by_representation = false;  // scan_limit below n_cap because rho_n cannot be materialized

  bool complete() const { return !exhausted_at.has_value(); }
  bool all_certified() const {
    return std::all_of(certificates.begin(), certificates.end(), [](const auto& c) { return c.budget_ok && c.weight_ok; });
  }
  QSTest qs_test() const { return QSTest{ProjectionSequence::from_terms(terms), GeometricBudget{}}; }
  STest s_test() const {
    STest t{s.value_or(Rational(1, 1)), ProjectionSequence::from_terms(terms), {}};
    CompensatedSum acc;
    for (const auto& c : certificates) {
      acc.add(c.budget);
      t.weight_partial_sums.push_back(acc.value());
    }
    return t;
  }
};

namespace detail {

/// Scans n upward from the previous n_m + 1 for each m. `budget_ok(n, m)`
/// is the cheap size condition; `rank_for(n, m)` is the projector rank.
template <typename BudgetOk, typename RankFor>
BuildOutcome run_builder(const StateSequence& rho, double delta, int terms, int n_cap,
                         const BudgetOk& budget_ok, const RankFor& rank_for) {
  BuildOutcome out;
  const int cap = rho.representation_hint() == Representation::kDense ? limits().dense_max_qubits
                                                                       : limits().diagonal_max_qubits;
  const int top = std::min({n_cap, rho.max_depth(), cap});
  out.scan_limit = top;
  out.limited_by_representation = cap < std::min(n_cap, rho.max_depth());
  int prev = 0;
  std::map<int, Spectrum> cache;
  for (int m = 1; m <= terms; ++m) {
    bool found = false;
    for (int n = prev + 1; n <= top; ++n) {
      if (!budget_ok(n, m)) continue;
      const std::uint64_t k = rank_for(n, m);
      auto it = cache.find(n);
      if (it == cache.end()) it = cache.emplace(n, eigendecompose(rho.at(n))).first;
      if (top_k_sum(it->second, k) <= delta) continue;
      Projection g = top_k_projector(it->second, k);
      TermCertificate c;
      c.m = m;
      c.qubits = n;
      c.rank = g.rank();
      c.tau = tau_weight(g);
      c.weight = projection_weight(rho.at(n), g);
      c.weight_ok = c.weight > delta;
      out.certificates.push_back(c);
      out.terms.push_back(TestTerm{m, n, std::move(g)});
      prev = n;
      found = true;
      break;
    }
    if (!found) {
      out.exhausted_at = m;
      break;
    }
    cache.erase(cache.begin(), cache.upper_bound(prev));
  }
  return out;
}

inline void require_rational_in(const Rational& x, const Rational& lo, const Rational& hi, const char* what, bool open_lo) {
  const bool low_ok = open_lo ? (lo < x) : (lo <= x);
  if (!low_ok || !(x < hi)) throw Error(ErrorCode::kPrecondition, std::string(what) + " out of range: " + x.str());
}

}  // namespace detail

/// For each m finds n with (1) the top-ceil(2^{n theta}) eigenvalue sum of
/// rho_n above delta and (2) (2^{n theta} + 1) / 2^n < 2^{-m}; emits the
/// top-ceil(2^{n theta}) eigenprojector.
inline BuildOutcome build_entropy_deficiency_test(const StateSequence& rho, const Rational& theta, const Rational& delta,
                                                  int terms, int n_cap) {
  detail::require_rational_in(theta, Rational(0, 1), Rational(1, 1), "theta", true);
  auto out = detail::run_builder(
      rho, delta.value(), terms, n_cap,
      [&](int n, int m) { return schnorr_budget_ok(static_cast<std::uint64_t>(n), theta, static_cast<std::uint64_t>(m)); },
      [&](int n, int) { return ceil_pow2(static_cast<std::uint64_t>(n), theta); });
  out.kind = "qs";
  for (auto& c : out.certificates) {
    c.budget = c.tau;
    c.budget_ok = c.tau < std::ldexp(1.0, -c.m);
  }
  return out;
}

/// Same search with budget (2^{n t} + 1) / 2^{n s} < 2^{-m}; per-term weight
/// 2^{-s n_m} Tr(S^m) < 2^{-m}.
inline BuildOutcome build_s_test(const StateSequence& rho, const Rational& s, const Rational& t, const Rational& delta,
                                 int terms, int n_cap) {
  if (t.num() < 0 || !(t < s) || Rational(1, 1) < s) throw Error(ErrorCode::kPrecondition, "need 0 <= t < s <= 1");
  auto out = detail::run_builder(
      rho, delta.value(), terms, n_cap,
      [&](int n, int m) { return s_budget_ok(static_cast<std::uint64_t>(n), t, s, static_cast<std::uint64_t>(m)); },
      [&](int n, int) { return ceil_pow2(static_cast<std::uint64_t>(n), t); });
  out.kind = "s";
  out.s = s;
  for (auto& c : out.certificates) {
    c.budget = std::exp2(-s.value() * c.qubits) * static_cast<double>(c.rank);
    c.budget_ok = c.budget < std::ldexp(1.0, -c.m);
  }
  return out;
}

/// For each m finds j with the top-2^{j-m} eigenvalue sum of rho_j above
/// delta; the emitted projector has tau = 2^{-m} exactly.
inline BuildOutcome build_ui_test(const StateSequence& rho, const Rational& delta, int terms, int n_cap) {
  auto out = detail::run_builder(
      rho, delta.value(), terms, n_cap, [](int n, int m) { return n >= m && n - m < 63; },
      [](int n, int m) { return std::uint64_t{1} << (n - m); });
  out.kind = "qs";
  for (auto& c : out.certificates) {
    c.budget = c.tau;
    c.budget_ok = c.tau == std::ldexp(1.0, -c.m);
  }
  return out;
}

/// G^m = (x)_{i=1}^m |0><0| (x) I_i on xi(m) qubits, rank 2^{xi(m) - m}.
inline TestTerm block_state_test(int m) {
  if (m < 1) throw Error(ErrorCode::kOutOfRange, "block test index must be >= 1");
  if (xi(m) > limits().product_max_qubits) throw Error(ErrorCode::kCapExceeded, "block test beyond product cap");
  std::vector<Projection> fs;
  for (int i = 1; i <= m; ++i) {
    std::vector<BasisIndex> idx(std::size_t{1} << i);
    std::iota(idx.begin(), idx.end(), BasisIndex{0});
    fs.push_back(Projection::basis_subset(i + 1, std::move(idx)));
  }
  return TestTerm{m, xi(m), Projection::product(std::move(fs))};
}

inline QSTest block_qstest(int terms) {
  return QSTest{ProjectionSequence(terms, [](int m) { return block_state_test(m); }), GeometricBudget{}};
}

// ---------------------------------------------------------------------------
// Null conditions

struct TrendReport {
  std::vector<double> taus;
  double head_max = 0.0;  // max tau over m <= M/2
  double tail_max = 0.0;  // max tau over m > M/2
  /// The tail maximum is at most half the head maximum.
  bool decreasing = false;
};

inline TrendReport null_condition_trend(const NullCondition& c, int depth) {
  if (depth > c.seq.max_terms()) throw Error(ErrorCode::kDepthMismatch, "trend depth beyond sequence length");
  if (depth < 2) throw Error(ErrorCode::kPrecondition, "trend needs at least two terms");
  TrendReport r;
  for (int m = 1; m <= depth; ++m) r.taus.push_back(tau_weight(c.seq.term(m).projector));
  const auto half = static_cast<std::ptrdiff_t>(depth / 2);
  r.head_max = *std::max_element(r.taus.begin(), r.taus.begin() + half);
  r.tail_max = *std::max_element(r.taus.begin() + half, r.taus.end());
  r.decreasing = r.tail_max <= 0.5 * r.head_max;
  return r;
}

/// The subsequence (S^{k_1}, S^{k_2}, ...) as a null condition, e.g. from the
/// witness list of a failed q-S test.
inline NullCondition subsequence(const ProjectionSequence& seq, const std::vector<int>& indices) {
  std::vector<TestTerm> terms;
  for (int k : indices) terms.push_back(seq.term(k));
  return NullCondition{ProjectionSequence::from_terms(std::move(terms))};
}

struct SatisfactionReport {
  FailureReport report;
  double min_weight = 1.0;
  int argmin = 0;
  bool satisfied = false;  // min weight <= delta
};

inline SatisfactionReport satisfaction_check(const StateSequence& rho, const NullCondition& c, double delta, int depth) {
  SatisfactionReport s;
  s.report = evaluate_failure(rho, c.seq, delta, depth);
  auto it = std::min_element(s.report.weights.begin(), s.report.weights.end());
  if (it != s.report.weights.end()) {
    s.min_weight = *it;
    s.argmin = static_cast<int>(it - s.report.weights.begin()) + 1;
  }
  s.satisfied = s.min_weight <= delta;
  return s;
}

// ---------------------------------------------------------------------------
// Typical subspaces and padding

struct DecayPoint {
  int n = 0;
  std::uint64_t rank = 0;
  double value = 0.0;
};

struct DecayCurve {
  std::vector<DecayPoint> points;  // n = 1..N
  bool tail_decreasing = false;    // strictly decreasing over the second half

  bool strictly_decreasing(int from, int to) const {
    for (int n = from; n < to; ++n) {
      if (!(points[static_cast<std::size_t>(n)].value < points[static_cast<std::size_t>(n - 1)].value)) return false;
    }
    return true;
  }
  double at(int n) const { return points[static_cast<std::size_t>(n - 1)].value; }
};

/// Sum of the floor(2^{n r}) largest eigenvalues of d^{(x) n}, which by the
/// top-k bound is the largest Tr(S d^{(x) n}) over projections of that rank.
/// Eigenvalues of the tensor power are enumerated as multinomial classes.
inline DecayCurve typical_subspace_decay(const DensityOperator& d, const Rational& r, int depth) {
  const Spectrum spec = eigendecompose(d);
  const double h = shannon_entropy(spec.values);
  if (!(r.value() < h)) {
    throw Error(ErrorCode::kPrecondition, "rate " + r.str() + " is not below H(d) = " + std::to_string(h));
  }
  std::vector<double> lambda;
  for (double v : spec.values) {
    if (v > 0) lambda.push_back(v);
  }
  const int parts = static_cast<int>(lambda.size());
  DecayCurve curve;
  for (int n = 1; n <= depth; ++n) {
    struct Class {
      long double log_value;
      long double multiplicity;
    };
    std::vector<Class> classes;
    std::vector<int> counts(static_cast<std::size_t>(parts), 0);
    // Enumerate compositions of n into `parts` nonnegative counts.
    std::function<void(int, int)> rec = [&](int idx, int left) {
      if (idx == parts - 1) {
        counts[static_cast<std::size_t>(idx)] = left;
        long double lv = 0, lm = std::lgamma(static_cast<long double>(n) + 1);
        for (int i = 0; i < parts; ++i) {
          const int c = counts[static_cast<std::size_t>(i)];
          lv += c * std::log(static_cast<long double>(lambda[static_cast<std::size_t>(i)]));
          lm -= std::lgamma(static_cast<long double>(c) + 1);
        }
        classes.push_back({lv, std::round(std::exp(lm))});
        return;
      }
      for (int c = 0; c <= left; ++c) {
        counts[static_cast<std::size_t>(idx)] = c;
        rec(idx + 1, left - c);
      }
    };
    rec(0, n);
    std::sort(classes.begin(), classes.end(), [](const Class& a, const Class& b) { return a.log_value > b.log_value; });
    const std::uint64_t rank = floor_pow2(static_cast<std::uint64_t>(n), r);
    long double left = static_cast<long double>(rank);
    long double total = 0;
    for (const auto& c : classes) {
      if (left <= 0) break;
      const long double take = std::min(left, c.multiplicity);
      total += take * std::exp(c.log_value);
      left -= take;
    }
    curve.points.push_back({n, rank, static_cast<double>(total)});
  }
  curve.tail_decreasing = depth >= 2 && curve.strictly_decreasing(depth / 2 + 1, depth);
  return curve;
}

/// T (x) I on the next multiple of k qubits; tau and every state's weight are
/// unchanged.
inline Projection pad_to_multiple(const Projection& t, int k) {
  if (k < 1) throw Error(ErrorCode::kPrecondition, "k must be >= 1");
  const int u = t.qubits();
  const int padded = (u + k - 1) / k * k;
  if (padded == u) return t;
  return Projection::product({t, Projection::identity(padded - u)});
}

}  // namespace qsrand
