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

// End-to-end experiments behind the acceptance suite and `qsrand reproduce`.
// Each experiment returns named checks plus the tables it computed.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "qsrand/infotheory.hpp"
#include "qsrand/io.hpp"
#include "qsrand/linalg.hpp"
#include "qsrand/quadrature.hpp"
#include "qsrand/random.hpp"
#include "qsrand/rational.hpp"
#include "qsrand/rtests.hpp"
#include "qsrand/states.hpp"

namespace qsrand::experiments {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
  bool timing = false;  // detail depends on wall-clock time
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::initializer_list<io::CsvWriter::Cell> cells) {
    std::vector<std::string> r;
    for (const auto& c : cells) r.push_back(c.text);
    rows.push_back(std::move(r));
  }
};

struct Experiment {
  int criterion = 0;  // 0 when not an acceptance criterion
  std::string name;
  std::vector<Check> checks;
  std::vector<Table> tables;
  double seconds = 0.0;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
  void check(std::string what, bool ok, std::string detail = {}) {
    checks.push_back({std::move(what), ok, std::move(detail), false});
  }
};

inline constexpr std::uint64_t kDefaultSeed = 20240601;

namespace detail {

inline std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
inline std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void finish(Experiment& e, const Stopwatch& w, double limit) {
  e.seconds = w.seconds();
  if (limit > 0) {
    e.checks.push_back({fmt("runtime < %g s", limit), e.seconds < limit, fmt("%.2f s", e.seconds), true});
  }
}

/// Cylinder masses of F(x) = (1 - ln x)^{-p} on level n, in the form
/// (B^p - A^p) / (A^p B^p) with A = 1 - ln a, B = 1 - ln b, which avoids the
/// cancellation of F(b) - F(a).
inline std::vector<long double> log_power_masses(int n, int p) {
  const std::size_t dim = std::size_t{1} << n;
  std::vector<long double> out(dim);
  const long double h = std::ldexp(1.0L, -n);
  out[0] = std::pow(1.0L - std::log(h), -static_cast<long double>(p));
  for (std::size_t i = 1; i < dim; ++i) {
    const long double a = 1.0L - std::log(h * static_cast<long double>(i));
    const long double b = 1.0L - std::log(h * static_cast<long double>(i + 1));
    const long double diff = a - b;  // = ln((i+1)/i)
    const long double num = p == 1 ? diff : diff * (a + b);
    out[i] = num / (p == 1 ? a * b : a * a * b * b);
  }
  return out;
}

inline double gap_from_masses(const std::vector<long double>& m, int n) {
  long double h = 0;
  for (long double x : m) {
    if (x > 0) h -= x * std::log2(x);
  }
  return static_cast<double>(h) - n;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// Block state: tau(G^m) = 2^{-m}, rho(G^m) = 1, and the entropy rate profile.
inline Experiment block_reproduction(int terms = 8) {
  detail::Stopwatch w;
  Experiment e{1, "block-state reproduction", {}, {}, 0.0};
  const int depth = xi(terms);
  const StateSequence rho = block_state(depth);

  Table tt{"block_terms", {"m", "n_m", "tau", "rho", "tau_exact"}, {}};
  bool tau_ok = true, rho_ok = true;
  double worst_rho = 0;
  for (int m = 1; m <= terms; ++m) {
    const TestTerm t = block_state_test(m);
    const double tau = tau_weight(t.projector);
    const double weight = projection_weight(rho.at(t.qubits), t.projector);
    const bool exact = tau == std::ldexp(1.0, -m);
    tau_ok = tau_ok && exact;
    worst_rho = std::max(worst_rho, std::abs(weight - 1.0));
    tt.add({m, t.qubits, tau, weight, exact});
  }
  rho_ok = worst_rho <= 1e-10;
  e.check("tau(G^m) = 2^-m exactly, m = 1..8", tau_ok);
  e.check("rho(G^m) = 1 within 1e-10", rho_ok, detail::fmt("max |rho - 1| = %.3g", worst_rho));

  const EntropyProfile prof = entropy_profile(rho, depth);
  Table pt{"block_entropy", {"n", "H", "H_over_n"}, {}};
  for (const auto& en : prof.entries) pt.add({en.n, en.entropy, en.rate});

  bool identity_ok = true;
  for (int m = 1; m <= terms; ++m) {
    const double h = prof.entries[static_cast<std::size_t>(xi(m) - 1)].entropy;
    identity_ok = identity_ok && std::abs(h - (xi(m) - m)) <= 1e-9;
  }
  e.check("H(rho_xi(m)) = xi(m) - m", identity_ok);

  int first_drop = 0;
  for (int n = 5; n < depth; ++n) {
    if (prof.entries[static_cast<std::size_t>(n)].rate < prof.entries[static_cast<std::size_t>(n - 1)].rate) {
      first_drop = n + 1;
      break;
    }
  }
  e.check("H/n non-decreasing for n >= 5", first_drop == 0,
          first_drop ? detail::fmt("H/n drops at n = %d: %.6f -> %.6f", first_drop,
                                   prof.entries[static_cast<std::size_t>(first_drop - 2)].rate,
                                   prof.entries[static_cast<std::size_t>(first_drop - 1)].rate)
                     : std::string{});
  const double final_rate = prof.entries.back().rate;
  e.check("H(rho_44)/44 > 0.85", final_rate > 0.85, detail::fmt("H/n at n = %d is %.6f", depth, final_rate));
  e.tables = {std::move(tt), std::move(pt)};
  detail::finish(e, w, 10.0);
  return e;
}

/// Tr(G d) <= top-k eigenvalue sum for random pairs; equality for the top-k eigenprojector.
inline Experiment svd_bound(std::uint64_t seed = kDefaultSeed, int pairs = 1000) {
  detail::Stopwatch w;
  Experiment e{2, "svd bound", {}, {}, 0.0};
  Rng rng(seed);
  std::uniform_int_distribution<int> qd(1, 4);
  int violations = 0, eq_failures = 0;
  double worst_eq = 0, worst_slack = -1;
  Table t{"svd_pairs", {"trial", "qubits", "k", "tr_gd", "top_k", "top_k_projector_weight"}, {}};
  for (int trial = 0; trial < pairs; ++trial) {
    const int q = qd(rng);
    const auto dim = std::uint64_t{1} << q;
    std::uniform_int_distribution<std::uint64_t> kd(1, dim);
    std::uniform_int_distribution<int> rd(1, static_cast<int>(dim));
    const std::uint64_t k = kd(rng);
    const DensityOperator d = random_density(rng, q, rd(rng));
    const Projection g = random_projection(rng, q, k);
    const Spectrum s = eigendecompose(d);
    const double top = top_k_sum(s, k);
    const double tr = projection_weight(d, g);
    const double best = projection_weight(d, top_k_projector(s, k));
    if (tr > top + 1e-9) ++violations;
    worst_slack = std::max(worst_slack, tr - top);
    worst_eq = std::max(worst_eq, std::abs(best - top));
    if (std::abs(best - top) > 1e-9) ++eq_failures;
    t.add({trial, q, k, tr, top, best});
  }
  e.check(detail::fmt("Tr(Gd) <= top-k sum + 1e-9 on %d pairs", pairs), violations == 0,
          detail::fmt("%d violations, max Tr(Gd) - top = %.3g", violations, worst_slack));
  e.check("equality for the top-k eigenprojector within 1e-9", eq_failures == 0,
          detail::fmt("max deviation %.3g", worst_eq));
  e.tables = {std::move(t)};
  detail::finish(e, w, 30.0);
  return e;
}

/// Lower entropy bound on random premise-satisfying spectra.
inline Experiment entropy_lower_bound(std::uint64_t seed = kDefaultSeed, int instances = 1000) {
  detail::Stopwatch w;
  Experiment e{3, "entropy lower bound", {}, {}, 0.0};
  Rng rng(seed);
  std::uniform_int_distribution<int> nd(4, 10);
  std::uniform_real_distribution<double> ed(0.02, 0.6), dd(0.02, 0.48), cd(0.0, 3.0);
  int accepted = 0, attempts = 0, violations = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  Table t{"lower_bound", {"instance", "n", "eps", "delta", "H", "bound"}, {}};
  while (accepted < instances && attempts < 2000000) {
    ++attempts;
    const int n = nd(rng);
    const double eps = ed(rng), delta = dd(rng);
    const auto alpha = random_descending_spectrum(rng, std::size_t{1} << n, std::pow(10.0, cd(rng)));
    const BoundCheck c = entropy_lower_bound_check(alpha, eps, delta);
    if (!c.applicable) continue;
    ++accepted;
    min_margin = std::min(min_margin, c.entropy - c.bound);
    if (!(c.entropy > c.bound)) ++violations;
    t.add({accepted, n, eps, delta, c.entropy, c.bound});
  }
  e.check(detail::fmt("at least %d premise-satisfying instances", instances), accepted >= instances,
          detail::fmt("%d accepted of %d drawn", accepted, attempts));
  e.check("H(alpha) > (1-2 delta)[log(1-delta) - log delta + n eps] strictly", violations == 0,
          detail::fmt("%d violations, min margin %.6g", violations, min_margin));

  // Flattening never raises entropy.
  int flat_bad = 0;
  for (int i = 0; i < instances; ++i) {
    const int n = nd(rng);
    const auto alpha = random_descending_spectrum(rng, std::size_t{1} << n, std::pow(10.0, cd(rng) - 1.0));
    const FlattenResult f = flatten_distribution(alpha, ed(rng));
    if (shannon_entropy(f.p) > shannon_entropy(alpha) + 1e-9) ++flat_bad;
  }
  e.check("flatten_distribution: H(p) <= H(alpha)", flat_bad == 0, detail::fmt("%d violations", flat_bad));
  e.tables = {std::move(t)};
  detail::finish(e, w, 0);
  return e;
}

/// Upper entropy bound and the two-block averaging step on random spectra.
inline Experiment entropy_upper_bound(std::uint64_t seed = kDefaultSeed, int instances = 1000) {
  detail::Stopwatch w;
  Experiment e{4, "entropy upper bound", {}, {}, 0.0};
  Rng rng(seed + 1);
  std::uniform_int_distribution<int> nd(1, 10);
  std::uniform_real_distribution<double> cd(-1.0, 2.0);
  int bound_bad = 0, block_bad = 0;
  double worst = -std::numeric_limits<double>::infinity();
  Table t{"upper_bound", {"instance", "n", "m", "H", "bound", "H_two_block"}, {}};
  for (int i = 0; i < instances; ++i) {
    const int n = nd(rng);
    std::uniform_int_distribution<int> md(0, n);
    const int m = md(rng);
    const auto alpha = random_descending_spectrum(rng, std::size_t{1} << n, std::pow(10.0, cd(rng)));
    const UpperBoundCheck c = entropy_upper_bound_check(alpha, m, 0.5);
    worst = std::max(worst, c.entropy - c.bound);
    if (c.entropy > c.bound + 1e-9) ++bound_bad;
    if (c.entropy > c.block_entropy + 1e-9) ++block_bad;
    t.add({i, n, m, c.entropy, c.bound, c.block_entropy});
  }
  e.check("H(alpha) <= 1 - m S + n", bound_bad == 0, detail::fmt("%d violations, max H - bound = %.6g", bound_bad, worst));
  e.check("H(alpha) <= H(two-block average)", block_bad == 0, detail::fmt("%d violations", block_bad));
  e.tables = {std::move(t)};
  detail::finish(e, w, 0);
  return e;
}

/// States used wherever a fixed family of examples is needed.
inline std::vector<StateSequence> fixture_states(int depth, std::uint64_t seed = kDefaultSeed) {
  Rng rng(seed + 2);
  std::vector<StateSequence> out;
  out.push_back(tracial_state(depth));
  out.push_back(pure_bitstring_state(BitSource::seeded(seed), depth));
  out.push_back(block_state(depth));
  out.push_back(tensor_power_state(DensityOperator::diagonal({0.9, 0.1}), depth));
  out.push_back(tensor_power_state(random_density(rng, 1), depth));
  out.push_back(tensor_power_state(random_density(rng, 2), depth));
  out.push_back(measure_state(DensitySpec::f1(), depth));
  out.push_back(measure_state(DensitySpec::f2(), depth));
  return out;
}

/// tail_integral(n, m) against the weight of the top-2^{n-m} eigenprojector.
inline Experiment tail_bridge(std::uint64_t seed = kDefaultSeed, int depth = 10) {
  detail::Stopwatch w;
  Experiment e{5, "tail-integral bridge", {}, {}, 0.0};
  double worst = 0;
  int compared = 0;
  Table t{"tail_bridge", {"state", "n", "m", "tail_integral", "projection_weight"}, {}};
  for (const auto& rho : fixture_states(depth, seed)) {
    const StepFamily fam = step_family(rho, depth);
    for (int n = 1; n <= depth; ++n) {
      const DensityOperator d = rho.at(n);
      const Spectrum s = eigendecompose(d);
      for (int m = 0; m <= n; ++m) {
        const double ti = tail_integral(fam, n, m);
        const double pw = projection_weight(d, top_k_projector(s, std::uint64_t{1} << (n - m)));
        worst = std::max(worst, std::abs(ti - pw));
        ++compared;
        t.add({rho.name(), n, m, ti, pw});
      }
    }
  }
  e.check("tail_integral = projection_weight within 1e-10", worst <= 1e-10,
          detail::fmt("%d pairs, max deviation %.3g", compared, worst));
  e.tables = {std::move(t)};
  detail::finish(e, w, 0);
  return e;
}

/// f2: divergent gap H(rho_n) - n.
inline Experiment fstate_infinite(int depth = 20) {
  detail::Stopwatch w;
  Experiment e{6, "measure state f2", {}, {}, 0.0};
  const StateSequence rho = measure_state(DensitySpec::f2(), depth);
  const double a0 = rho.at(1).probabilities()[0];
  const double closed = 1.0 / (1.0 + std::numbers::ln2);
  e.check("alpha_0 = 1/(1 + ln 2) within 1e-9", std::abs(a0 - closed) <= 1e-9,
          detail::fmt("alpha_0 = %.17g, closed form %.17g", a0, closed));
  Table t{"f2_gap", {"n", "gap", "closed_form_gap"}, {}};
  std::vector<double> gaps;
  double worst = 0;
  for (int n = 1; n <= depth; ++n) {
    const double g = von_neumann_entropy(rho.at(n)) - n;
    const double oracle = detail::gap_from_masses(detail::log_power_masses(n, 1), n);
    worst = std::max(worst, std::abs(g - oracle));
    gaps.push_back(g);
    t.add({n, g, oracle});
  }
  e.check("gap agrees with closed-form antiderivative within 1e-9", worst <= 1e-9, detail::fmt("max deviation %.3g", worst));
  bool dec = true;
  for (int n = 5; n <= depth; ++n) dec = dec && gaps[static_cast<std::size_t>(n - 1)] < gaps[static_cast<std::size_t>(n - 2)];
  e.check("gap strictly decreasing for 4 <= n <= 20", dec);
  const double last = gaps.back();
  e.check("gap < -3 at n = 20", last < -3.0, detail::fmt("gap(%d) = %.6f", depth, last));
  e.tables = {std::move(t)};
  detail::finish(e, w, 60.0);
  return e;
}

/// -integral of f1 log2 f1 over (0, 1), by double-exponential quadrature in u = -ln x.
inline double f1_entropy_limit() {
  boost::math::quadrature::exp_sinh<double> integrator;
  auto g = [](double u) {
    const double v = 1.0 + u;
    return 2.0 / (v * v * v) * (1.0 + u / std::numbers::ln2 - 3.0 * std::log2(v));
  };
  return -integrator.integrate(g, 1e-14);
}

/// f1: convergent gap H(rho_n) - n.
inline Experiment fstate_finite(int depth = 20) {
  detail::Stopwatch w;
  Experiment e{6, "measure state f1", {}, {}, 0.0};
  const StateSequence rho = measure_state(DensitySpec::f1(), depth);
  const double limit = f1_entropy_limit();
  Table t{"f1_gap", {"n", "gap", "closed_form_gap", "limit"}, {}};
  double worst = 0, last = 0;
  for (int n = 1; n <= depth; ++n) {
    const double g = von_neumann_entropy(rho.at(n)) - n;
    const double oracle = detail::gap_from_masses(detail::log_power_masses(n, 2), n);
    worst = std::max(worst, std::abs(g - oracle));
    last = g;
    t.add({n, g, oracle, limit});
  }
  e.check("gap agrees with closed-form antiderivative within 1e-9", worst <= 1e-9, detail::fmt("max deviation %.3g", worst));
  e.check("gap(20) within 0.05 of -integral f1 log2 f1", std::abs(last - limit) <= 0.05,
          detail::fmt("gap(%d) = %.6f, limit %.6f, |diff| = %.4f", depth, last, limit, std::abs(last - limit)));
  e.tables = {std::move(t)};
  detail::finish(e, w, 60.0);
  return e;
}

inline Experiment measure_states(int depth = 20) {
  detail::Stopwatch w;
  Experiment e{6, "measure-induced states", {}, {}, 0.0};
  for (auto part : {fstate_infinite(depth), fstate_finite(depth)}) {
    for (auto& c : part.checks) {
      if (c.timing) continue;
      c.name = part.name + ": " + c.name;
      e.checks.push_back(std::move(c));
    }
    for (auto& t : part.tables) e.tables.push_back(std::move(t));
  }
  detail::finish(e, w, 60.0);
  return e;
}

/// Entropy-deficiency builder: sound on a pure state, exhausted on the tracial one.
inline Experiment builder_soundness(std::uint64_t seed = kDefaultSeed, int terms = 8, int n_cap = 20) {
  detail::Stopwatch w;
  Experiment e{7, "builder soundness and exhaustion", {}, {}, 0.0};
  const Rational theta(1, 2), delta(1, 2);
  const StateSequence pure = pure_bitstring_state(BitSource::seeded(seed), n_cap);
  const BuildOutcome b = build_entropy_deficiency_test(pure, theta, delta, terms, n_cap);
  Table t{"pure_terms", {"m", "n_m", "rank", "tau", "rho"}, {}};
  bool tau_ok = true, rho_ok = true;
  for (const auto& c : b.certificates) {
    tau_ok = tau_ok && c.tau < std::ldexp(1.0, -c.m);
    rho_ok = rho_ok && c.weight > 0.5;
    t.add({c.m, c.qubits, c.rank, c.tau, c.weight});
  }
  e.check("pure state: 8 terms emitted", b.complete() && static_cast<int>(b.terms.size()) == terms,
          detail::fmt("%zu terms", b.terms.size()));
  e.check("pure state: tau(G^m) < 2^-m", tau_ok && !b.terms.empty());
  e.check("pure state: rho(G^m) > 0.5", rho_ok && !b.terms.empty());

  const StateSequence tr = tracial_state(n_cap);
  const BuildOutcome x = build_entropy_deficiency_test(tr, theta, delta, terms, n_cap);
  e.check("tracial: search exhausted from m = 1", x.exhausted_at == 1 && x.terms.empty(),
          x.exhausted_at ? detail::fmt("exhausted at m = %d", *x.exhausted_at) : std::string("not exhausted"));
  // Direct scan: top-k sum of the tracial spectrum is k 2^{-n}.
  bool any = false;
  for (int m = 1; m <= terms; ++m) {
    for (int n = 1; n <= n_cap; ++n) {
      const double k = std::ceil(std::exp2(0.5 * n) - 1e-12);
      if ((std::exp2(0.5 * n) + 1) / std::exp2(n) < std::exp2(-m) && k / std::exp2(n) > 0.5) any = true;
    }
  }
  e.check("tracial: no admissible n <= n_cap for any m (direct scan)", !any);
  e.tables = {std::move(t)};
  detail::finish(e, w, 0);
  return e;
}

/// Sum of the floor(2^{rn}) largest eigenvalues of diag(0.9, 0.1)^{(x) n}.
inline Experiment typical_decay(int depth = 24) {
  detail::Stopwatch w;
  Experiment e{8, "typical-subspace decay", {}, {}, 0.0};
  const DecayCurve c = typical_subspace_decay(DensityOperator::diagonal({0.9, 0.1}), Rational(3, 10), depth);
  Table t{"typical_decay", {"n", "rank", "top_sum", "brute_force"}, {}};
  double worst = 0;
  for (const auto& p : c.points) {
    double brute = std::nan("");
    if (p.n <= 16) {
      std::vector<double> ev(std::size_t{1} << p.n);
      for (std::size_t i = 0; i < ev.size(); ++i) {
        const int ones = std::popcount(i);
        ev[i] = std::pow(0.9, p.n - ones) * std::pow(0.1, ones);
      }
      std::sort(ev.begin(), ev.end(), std::greater<>());
      brute = compensated_sum(std::span<const double>(ev.data(), p.rank));
      worst = std::max(worst, std::abs(brute - p.value));
    }
    t.add({p.n, p.rank, p.value, brute});
  }
  e.check("multinomial curve matches brute force for n <= 16 within 1e-12", worst <= 1e-12, detail::fmt("max deviation %.3g", worst));
  int bump = 0;
  for (int n = 7; n <= 16 && !bump; ++n) {
    if (!(c.at(n) < c.at(n - 1))) bump = n;
  }
  e.check("strictly decreasing for 6 <= n <= 16", bump == 0,
          bump ? detail::fmt("value rises at n = %d: %.6f -> %.6f", bump, c.at(bump - 1), c.at(bump)) : std::string{});
  const double ratio = c.at(6) / c.at(16);
  e.check("value(6) / value(16) >= 2", ratio >= 2.0, detail::fmt("value(6) = %.6f, value(16) = %.6f, ratio %.4f", c.at(6), c.at(16), ratio));
  e.tables = {std::move(t)};
  detail::finish(e, w, 0);
  return e;
}

/// UI moduli of the tracial, pure and f2 step families.
inline Experiment ui_profiles(std::uint64_t seed = kDefaultSeed, int depth = 20) {
  detail::Stopwatch w;
  Experiment e{9, "uniform integrability profiles", {}, {}, 0.0};
  const std::vector<double> deltas{0.5, 0.25, 0.1};
  Table t{"ui_profile", {"state", "delta", "level", "epsilon", "expected_level"}, {}};

  const UIProfile tr = ui_profile(step_family(tracial_state(depth), depth), deltas, depth);
  bool tr_ok = true;
  for (const auto& r : tr.rows) {
    const int expect = static_cast<int>(std::ceil(std::log2(1.0 / r.delta)));
    tr_ok = tr_ok && r.level && r.epsilon == std::ldexp(1.0, -expect);
    t.add({"tracial", r.delta, r.level.value_or(0), r.epsilon, expect});
  }
  e.check("tracial modulus = 2^-ceil(log2(1/delta))", tr_ok);

  const std::vector<double> pure_deltas{0.99, 0.9, 0.5, 0.25, 0.1};
  const UIProfile pu = ui_profile(step_family(pure_bitstring_state(BitSource::seeded(seed), depth), depth), pure_deltas, depth);
  bool pu_ok = true;
  for (const auto& r : pu.rows) {
    pu_ok = pu_ok && !r.level;
    t.add({"pure", r.delta, r.level.value_or(0), r.epsilon, 0});
  }
  e.check("pure state: no modulus for delta < 1 up to depth 20", pu_ok);

  const UIProfile f2 = ui_profile(step_family(measure_state(DensitySpec::f2(), depth), depth), deltas, depth);
  bool f2_ok = true;
  std::string f2_detail;
  for (const auto& r : f2.rows) {
    // 1/(1 - ln eps) <= delta  iff  eps <= exp(1 - 1/delta).
    const int expect = static_cast<int>(std::ceil((1.0 / r.delta - 1.0) / std::numbers::ln2));
    f2_ok = f2_ok && r.level && std::abs(*r.level - expect) <= 1;
    f2_detail += detail::fmt("%sdelta %.2g: level %d vs %d", f2_detail.empty() ? "" : "; ", r.delta, r.level.value_or(0), expect);
    t.add({"f2", r.delta, r.level.value_or(0), r.epsilon, expect});
  }
  e.check("f2 modulus within one dyadic level of the closed form", f2_ok, f2_detail);
  e.tables = {std::move(t)};
  detail::finish(e, w, 0);
  return e;
}

/// Builtin constructors with their maximum depths.
inline std::vector<StateSequence> builtin_states(std::uint64_t seed = kDefaultSeed) {
  Rng rng(seed + 3);
  std::vector<StateSequence> out;
  out.push_back(tracial_state(24));
  out.push_back(pure_bitstring_state(BitSource::seeded(seed), 24));
  out.push_back(pure_bitstring_state(BitSource::periodic("0110"), 24));
  out.push_back(block_state(44));
  out.push_back(tensor_power_state(DensityOperator::diagonal({0.9, 0.1}), 24));
  out.push_back(tensor_power_state(random_density(rng, 2), 12));
  out.push_back(tensor_power_state(random_density(rng, 3), 12));
  out.push_back(measure_state(DensitySpec::uniform(), 20));
  out.push_back(measure_state(DensitySpec::f1(), 20));
  out.push_back(measure_state(DensitySpec::f2(), 20));
  return out;
}

/// Tensor power of diag(0.9, 0.1) whose n = `bad` member has mass moved between two
/// entries that trace out to different marginals.
inline StateSequence mutated_control(int depth, int bad) {
  const StateSequence base = tensor_power_state(DensityOperator::diagonal({0.9, 0.1}), depth);
  return StateSequence("mutated_tensor_power", depth, Representation::kDiagonal, [base, bad](int n) {
    DensityOperator d = base.at(n).materialize();
    if (n != bad) return d;
    auto p = d.probabilities();
    p[0] -= 1e-3;
    p[2] += 1e-3;
    return DensityOperator::diagonal(std::move(p));
  });
}

inline Experiment coherence_suite(std::uint64_t seed = kDefaultSeed) {
  detail::Stopwatch w;
  Experiment e{10, "coherence suite", {}, {}, 0.0};
  Table t{"coherence", {"state", "N_max", "max_deviation", "pass"}, {}};
  for (const auto& s : builtin_states(seed)) {
    const CoherenceReport r = check_coherence(s, s.max_depth(), 1e-8);
    const double worst = r.deviations.empty() ? 0.0 : *std::max_element(r.deviations.begin(), r.deviations.end());
    e.check(s.name() + " coherent to N = " + std::to_string(s.max_depth()), r.pass(), detail::fmt("max deviation %.3g", worst));
    t.add({s.name(), s.max_depth(), worst, r.pass()});
  }
  const int bad = 7;
  const CoherenceReport r = check_coherence(mutated_control(12, bad), 12, 1e-8);
  e.check("mutated control fails at the mutated index", !r.pass() && r.first_failure() == bad,
          r.first_failure() ? detail::fmt("first failure at n = %d", *r.first_failure()) : std::string("no failure"));
  e.tables = {std::move(t)};
  detail::finish(e, w, 0);
  return e;
}

/// Entropy rate of a tensor power: H(rho_n)/n = H(d) whenever n is a multiple of d's qubit count.
inline Experiment tensor_power_rate(int depth = 24) {
  detail::Stopwatch w;
  Experiment e{0, "tensor-power entropy rate", {}, {}, 0.0};
  const StateSequence rho = tensor_power_state(DensityOperator::diagonal({0.9, 0.1}), depth);
  const double h = -(0.9 * std::log2(0.9) + 0.1 * std::log2(0.1));
  const EntropyProfile p = entropy_profile(rho, depth);
  Table t{"tensor_power_entropy", {"n", "H", "H_over_n"}, {}};
  double worst = 0;
  for (const auto& en : p.entries) {
    worst = std::max(worst, std::abs(en.rate - h));
    t.add({en.n, en.entropy, en.rate});
  }
  e.check("H(rho_n)/n = h(0.9) within 1e-12", worst <= 1e-12, detail::fmt("h(0.9) = %.10f, max deviation %.3g", h, worst));
  const RateEstimate est = entropy_rate_estimate(p, 5);
  e.check("trailing-window estimate = h(0.9)", std::abs(est.value - h) <= 1e-12, detail::fmt("estimate %.10f", est.value));
  e.check("coherent to N = 24", check_coherence(rho, depth, 1e-8).pass());
  e.tables = {std::move(t)};
  detail::finish(e, w, 0);
  return e;
}

inline std::vector<Experiment> acceptance_suite(std::uint64_t seed = kDefaultSeed) {
  std::vector<Experiment> out;
  out.push_back(block_reproduction());
  out.push_back(svd_bound(seed));
  out.push_back(entropy_lower_bound(seed));
  out.push_back(entropy_upper_bound(seed));
  out.push_back(tail_bridge(seed));
  out.push_back(measure_states());
  out.push_back(builder_soundness(seed));
  out.push_back(typical_decay());
  out.push_back(ui_profiles(seed));
  out.push_back(coherence_suite(seed));
  return out;
}

/// Experiments for `reproduce <name>`; empty for an unknown name.
inline std::vector<Experiment> reproduce(const std::string& name, std::uint64_t seed = kDefaultSeed) {
  if (name == "block") return {block_reproduction()};
  if (name == "fstate-finite") return {fstate_finite()};
  if (name == "fstate-infinite") return {fstate_infinite()};
  if (name == "tensor-power") return {tensor_power_rate()};
  if (name == "svd-bound") return {svd_bound(seed)};
  if (name == "typical-decay") return {typical_decay()};
  if (name == "flatten-bounds") return {entropy_lower_bound(seed), entropy_upper_bound(seed)};
  return {};
}

inline const std::vector<std::string>& reproduce_names() {
  static const std::vector<std::string> names{"block", "fstate-finite", "fstate-infinite", "tensor-power",
                                              "svd-bound", "typical-decay", "flatten-bounds"};
  return names;
}

}  // namespace qsrand::experiments
