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

// Coherent state sequences n -> rho_n, the concrete constructors, and
// finite-depth entropy-rate analytics.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qsrand/linalg.hpp"
#include "qsrand/quadrature.hpp"

namespace qsrand {

enum class Representation { kDense, kDiagonal, kProduct };

inline std::string_view to_string(Representation r) {
  switch (r) {
    case Representation::kDense: return "dense";
    case Representation::kDiagonal: return "diag";
    case Representation::kProduct: return "product";
  }
  return "unknown";
}

/// A state truncated at max_depth. The generator must be deterministic and
/// re-entrant; `at` may be called concurrently.
class StateSequence {
 public:
  using Generator = std::function<DensityOperator(int n)>;

  StateSequence(std::string name, int max_depth, Representation hint, Generator gen)
      : name_(std::move(name)), max_depth_(max_depth), hint_(hint), gen_(std::move(gen)) {
    if (max_depth_ < 1) throw Error(ErrorCode::kPrecondition, "max depth must be >= 1");
  }

  const std::string& name() const { return name_; }
  int max_depth() const { return max_depth_; }
  Representation representation_hint() const { return hint_; }

  /// Replayable constructor description (JSON text), empty when ad hoc.
  const std::string& descriptor() const { return descriptor_; }
  void set_descriptor(std::string d) { descriptor_ = std::move(d); }

  DensityOperator at(int n) const {
    if (n < 1 || n > max_depth_) {
      throw Error(ErrorCode::kDepthMismatch,
                  name_ + ": depth " + std::to_string(n) + " outside [1, " + std::to_string(max_depth_) + "]");
    }
    DensityOperator d = gen_(n);
    if (d.qubits() != n) {
      throw Error(ErrorCode::kMalformedOperator, name_ + ": generator returned " + std::to_string(d.qubits()) +
                                                     " qubits at depth " + std::to_string(n));
    }
    return d;
  }

 private:
  std::string name_;
  int max_depth_;
  Representation hint_;
  Generator gen_;
  std::string descriptor_;
};

// ---------------------------------------------------------------------------
// Bit sources for pure basis-state sequences

class BitSource {
 public:
  /// Exactly these bits; asking for more throws source-exhausted.
  static BitSource explicit_bits(std::string bits) { return BitSource(Kind::kExplicit, check(std::move(bits)), 0); }
  /// The pattern repeated forever.
  static BitSource periodic(std::string pattern) {
    auto p = check(std::move(pattern));
    if (p.empty()) throw Error(ErrorCode::kParse, "empty periodic pattern");
    return BitSource(Kind::kPeriodic, std::move(p), 0);
  }
  /// mt19937_64 bits; a reproducible stand-in for an arbitrary sequence.
  static BitSource seeded(std::uint64_t seed) { return BitSource(Kind::kSeeded, "", seed); }

  std::vector<int> take(std::size_t n) const {
    std::vector<int> out(n);
    switch (kind_) {
      case Kind::kExplicit:
        if (n > bits_.size()) {
          throw Error(ErrorCode::kSourceExhausted,
                      "need " + std::to_string(n) + " bits, source has " + std::to_string(bits_.size()));
        }
        for (std::size_t i = 0; i < n; ++i) out[i] = bits_[i] == '1';
        break;
      case Kind::kPeriodic:
        for (std::size_t i = 0; i < n; ++i) out[i] = bits_[i % bits_.size()] == '1';
        break;
      case Kind::kSeeded: {
        std::mt19937_64 rng(seed_);
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(rng() >> 63);
        break;
      }
    }
    return out;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::kExplicit: return "bits=" + bits_;
      case Kind::kPeriodic: return "pattern=" + bits_;
      case Kind::kSeeded: return "seed=" + std::to_string(seed_);
    }
    return {};
  }

 private:
  enum class Kind { kExplicit, kPeriodic, kSeeded };
  BitSource(Kind k, std::string bits, std::uint64_t seed) : kind_(k), bits_(std::move(bits)), seed_(seed) {}

  static std::string check(std::string s) {
    for (char c : s) {
      if (c != '0' && c != '1') throw Error(ErrorCode::kParse, "bit string contains '" + std::string(1, c) + "'");
    }
    return s;
  }

  Kind kind_;
  std::string bits_;
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Constructors

namespace detail {

inline DensityOperator uniform_diagonal(int qubits) {
  return DensityOperator::trusted_diagonal(std::vector<double>(std::size_t{1} << qubits, std::ldexp(1.0, -qubits)));
}

inline void require_depth(int depth, int cap, const char* what) {
  if (depth > cap) {
    throw Error(ErrorCode::kCapExceeded, std::string(what) + ": depth " + std::to_string(depth) + " exceeds cap " +
                                             std::to_string(cap));
  }
}

}  // namespace detail

/// rho_n = 2^{-n} I_n.
inline StateSequence tracial_state(int max_depth) {
  detail::require_depth(max_depth, limits().product_max_qubits, "tracial state");
  return StateSequence("tracial", max_depth, Representation::kDiagonal, [](int n) {
    if (n <= limits().diagonal_max_qubits) return detail::uniform_diagonal(n);
    return DensityOperator::product(std::vector<DensityOperator>(static_cast<std::size_t>(n), detail::uniform_diagonal(1)));
  });
}

/// rho_n = |Z|n><Z|n|.
inline StateSequence pure_bitstring_state(const BitSource& bits, int max_depth) {
  detail::require_depth(max_depth, limits().product_max_qubits, "pure bitstring state");
  auto z = bits.take(static_cast<std::size_t>(max_depth));
  return StateSequence("pure(" + bits.describe() + ")", max_depth, Representation::kDiagonal, [z](int n) {
    return DensityOperator::basis_state(std::span<const int>(z.data(), static_cast<std::size_t>(n)));
  });
}

/// m + m(m+1)/2: the qubit count of the first m blocks of the block state.
constexpr int xi(int m) { return m + m * (m + 1) / 2; }

/// d_i = |0><0| (x) 2^{-i} I_i on i+1 qubits; d_0 = |0><0|.
inline DensityOperator block_factor(int i) {
  std::vector<double> p(std::size_t{1} << (i + 1), 0.0);
  const double w = std::ldexp(1.0, -i);
  for (std::size_t k = 0; k < (std::size_t{1} << i); ++k) p[k] = w;
  return DensityOperator::trusted_diagonal(std::move(p));
}

/// rho_{xi(m)} = d_1 (x) ... (x) d_m, and rho_n = rho_{xi(m)} (x) d_{n - xi(m) - 1}
/// for xi(m) < n < xi(m+1).
inline StateSequence block_state(int max_depth) {
  detail::require_depth(max_depth, limits().product_max_qubits, "block state");
  return StateSequence("block", max_depth, Representation::kDiagonal, [](int n) {
    int m = 0;
    while (xi(m + 1) <= n) ++m;
    std::vector<DensityOperator> fs;
    for (int i = 1; i <= m; ++i) fs.push_back(block_factor(i));
    if (xi(m) < n) fs.push_back(block_factor(n - xi(m) - 1));
    return DensityOperator::product(std::move(fs));
  });
}

/// rho_{nk} = d^{(x) n}; depths between multiples of k are partial traces of
/// the next multiple.
inline StateSequence tensor_power_state(const DensityOperator& d, int max_depth) {
  detail::require_depth(max_depth, limits().product_max_qubits, "tensor power state");
  if (d.is_product()) throw Error(ErrorCode::kPrecondition, "tensor power base must be a dense or diagonal leaf");
  const int k = d.qubits();
  const auto hint = d.is_diagonal() ? Representation::kDiagonal : Representation::kDense;
  return StateSequence("tensor_power", max_depth, hint, [d, k](int z) {
    const int blocks = (z + k - 1) / k;
    std::vector<DensityOperator> fs(static_cast<std::size_t>(blocks - 1), d);
    fs.push_back(partial_trace_k(d, blocks * k - z));
    return DensityOperator::product(std::move(fs));
  });
}

/// Mass of cylinder `index` at level n; must satisfy mass(n, i) = mass(n+1, 2i) + mass(n+1, 2i+1).
using CylinderMeasure = std::function<double(int n, BasisIndex index)>;

inline StateSequence measure_state(std::string name, CylinderMeasure measure, int max_depth) {
  detail::require_depth(max_depth, limits().diagonal_max_qubits, "measure state");
  return StateSequence(std::move(name), max_depth, Representation::kDiagonal, [measure = std::move(measure)](int n) {
    std::vector<double> p(std::size_t{1} << n);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = measure(n, i);
    return DensityOperator::diagonal(std::move(p));
  });
}

/// Diagonal state with alpha_sigma = integral of the density over the dyadic
/// cylinder [sigma], sigma read as a binary fraction (qubit 1 first).
inline StateSequence measure_state(const DensitySpec& spec, int max_depth) {
  detail::require_depth(max_depth, limits().diagonal_max_qubits, "measure state");
  return StateSequence("measure(" + spec.name() + ")", max_depth, Representation::kDiagonal, [spec](int n) {
    const std::size_t dim = std::size_t{1} << n;
    std::vector<double> p(dim);
    if (spec.has_antiderivative()) {
      double prev = spec.antiderivative(0.0);
      for (std::size_t i = 0; i < dim; ++i) {
        const double next = spec.antiderivative(std::ldexp(static_cast<double>(i + 1), -n));
        p[i] = next - prev;
        prev = next;
      }
    } else {
      for (std::size_t i = 0; i < dim; ++i) {
        p[i] = spec.mass(std::ldexp(static_cast<double>(i), -n), std::ldexp(static_cast<double>(i + 1), -n));
      }
    }
    return DensityOperator::diagonal(std::move(p));
  });
}

// ---------------------------------------------------------------------------
// Analytics

struct CoherenceReport {
  double tol = 0.0;
  std::vector<int> depths;          // n = 2..N
  std::vector<double> deviations;   // ||PT(rho_n) - rho_{n-1}||_inf, aligned with depths
  std::vector<int> failing;

  bool pass() const { return failing.empty(); }
  std::optional<int> first_failure() const {
    if (failing.empty()) return std::nullopt;
    return failing.front();
  }
};

inline CoherenceReport check_coherence(const StateSequence& s, int depth, double tol) {
  if (depth > s.max_depth()) throw Error(ErrorCode::kDepthMismatch, "coherence depth beyond max depth");
  CoherenceReport r;
  r.tol = tol;
  std::optional<DensityOperator> prev;
  for (int n = 1; n <= depth; ++n) {
    DensityOperator cur = s.at(n);
    if (prev) {
      const double dev = max_abs_diff(partial_trace_last(cur), *prev);
      r.depths.push_back(n);
      r.deviations.push_back(dev);
      if (!(dev <= tol)) r.failing.push_back(n);
    }
    prev = std::move(cur);
  }
  return r;
}

struct EntropyProfile {
  struct Entry {
    int n;
    double entropy;
    double rate;  // entropy / n
  };
  std::vector<Entry> entries;
};

inline EntropyProfile entropy_profile(const StateSequence& s, int depth) {
  if (depth > s.max_depth()) throw Error(ErrorCode::kDepthMismatch, "profile depth beyond max depth");
  EntropyProfile p;
  for (int n = 1; n <= depth; ++n) {
    const double h = von_neumann_entropy(s.at(n));
    p.entries.push_back({n, h, h / n});
  }
  return p;
}

/// Trailing-window minimum of H(rho_n)/n: finite evidence about the liminf,
/// never the limit itself.
struct RateEstimate {
  double value = 0.0;
  int window = 0;
  int from_n = 0;
  int to_n = 0;
};

inline RateEstimate entropy_rate_estimate(const EntropyProfile& p, int window) {
  if (p.entries.empty()) throw Error(ErrorCode::kPrecondition, "empty entropy profile");
  if (window < 1 || static_cast<std::size_t>(window) > p.entries.size()) {
    throw Error(ErrorCode::kOutOfRange, "window " + std::to_string(window) + " vs profile length " +
                                            std::to_string(p.entries.size()));
  }
  RateEstimate est;
  est.window = window;
  est.value = std::numeric_limits<double>::infinity();
  auto first = p.entries.end() - window;
  est.from_n = first->n;
  est.to_n = p.entries.back().n;
  for (auto it = first; it != p.entries.end(); ++it) est.value = std::min(est.value, it->rate);
  return est;
}

}  // namespace qsrand
