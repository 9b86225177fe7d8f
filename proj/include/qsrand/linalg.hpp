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

// Density operators, projections and spectra on n qubits.
//
// Index convention: computational-basis index i has qubit 1 as its most
// significant bit, so tracing out the last qubit sums adjacent index pairs and
// tensor(a, b) puts a's index in the high-order position.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "qsrand/error.hpp"

namespace qsrand {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using BasisIndex = std::uint64_t;

inline constexpr double kDefaultTol = 1e-9;
inline constexpr double kClipTol = 1e-9;
inline constexpr double kRenormTol = 1e-6;

// ---------------------------------------------------------------------------
// Small numeric helpers

/// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

/// Returns n if dim == 2^n (n >= 1), otherwise nullopt.
inline std::optional<int> qubits_for_dimension(std::uint64_t dim) {
  if (dim < 2 || (dim & (dim - 1)) != 0) return std::nullopt;
  int n = 0;
  while ((std::uint64_t{1} << n) < dim) ++n;
  return n;
}

inline void require_qubits(int qubits, int cap, const char* what) {
  if (qubits > cap) {
    throw Error(ErrorCode::kCapExceeded, std::string(what) + " on " + std::to_string(qubits) +
                                             " qubits exceeds cap of " + std::to_string(cap));
  }
}

/// Kronecker product; a's index is the high-order one.
inline ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  const auto rows = static_cast<std::uint64_t>(a.rows()) * static_cast<std::uint64_t>(b.rows());
  const auto cols = static_cast<std::uint64_t>(a.cols()) * static_cast<std::uint64_t>(b.cols());
  const std::uint64_t cap = std::uint64_t{1} << limits().dense_max_qubits;
  if (rows > cap || cols > cap) {
    throw Error(ErrorCode::kCapExceeded, "tensor product dimension " + std::to_string(rows) +
                                             " exceeds dense cap " + std::to_string(cap));
  }
  ComplexMatrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline std::vector<double> kron(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out;
  out.reserve(a.size() * b.size());
  for (double x : a) {
    for (double y : b) out.push_back(x * y);
  }
  return out;
}

inline double shannon_entropy(std::span<const double> p, double tol = kDefaultTol) {
  CompensatedSum h;
  for (double x : p) {
    if (x < -tol) throw Error(ErrorCode::kPrecondition, "negative probability " + std::to_string(x));
    if (x > 0) h.add(-x * std::log2(x));
  }
  return h.value();
}

// ---------------------------------------------------------------------------
// DensityOperator

class DensityOperator {
 public:
  struct Dense {
    ComplexMatrix matrix;
  };
  struct Diagonal {
    std::vector<double> probs;
  };
  struct Product {
    std::vector<DensityOperator> factors;  // leaves only, in qubit order
  };

  /// Diagonal state over the computational basis; validates the vector.
  static DensityOperator diagonal(std::vector<double> probs, double tol = kDefaultTol) {
    auto q = qubits_for_dimension(probs.size());
    if (!q) throw Error(ErrorCode::kBadDimension, "diagonal length " + std::to_string(probs.size()));
    require_qubits(*q, limits().diagonal_max_qubits, "diagonal state");
    for (double& x : probs) {
      if (!std::isfinite(x)) throw Error(ErrorCode::kMalformedOperator, "non-finite entry");
      if (x < -tol) throw Error(ErrorCode::kNotPsd, "negative probability " + std::to_string(x));
      if (x < 0) x = 0;
    }
    double total = compensated_sum(probs);
    if (std::abs(total - 1.0) > tol) {
      throw Error(ErrorCode::kWrongTrace, "trace " + std::to_string(total));
    }
    return DensityOperator(*q, Diagonal{std::move(probs)});
  }

  /// Basis state |bits> as a diagonal (or, past the diagonal cap, product) state.
  static DensityOperator basis_state(std::span<const int> bits) {
    const int n = static_cast<int>(bits.size());
    if (n < 1) throw Error(ErrorCode::kBadDimension, "empty bit string");
    if (n <= limits().diagonal_max_qubits) {
      BasisIndex idx = 0;
      for (int b : bits) idx = (idx << 1) | static_cast<BasisIndex>(b != 0);
      std::vector<double> p(std::size_t{1} << n, 0.0);
      p[idx] = 1.0;
      return DensityOperator(n, Diagonal{std::move(p)});
    }
    std::vector<DensityOperator> fs;
    for (int b : bits) fs.push_back(DensityOperator(1, Diagonal{b ? std::vector<double>{0, 1} : std::vector<double>{1, 0}}));
    return product(std::move(fs));
  }

  /// Tensor product of factors, flattened to leaves; a single leaf is returned as is.
  static DensityOperator product(std::vector<DensityOperator> factors) {
    std::vector<DensityOperator> leaves;
    int n = 0;
    for (auto& f : factors) {
      n += f.qubits();
      if (auto* p = std::get_if<Product>(&f.rep_)) {
        for (auto& leaf : p->factors) leaves.push_back(std::move(leaf));
      } else {
        leaves.push_back(std::move(f));
      }
    }
    if (leaves.empty()) throw Error(ErrorCode::kBadDimension, "empty product");
    if (leaves.size() == 1) return std::move(leaves.front());
    require_qubits(n, limits().product_max_qubits, "product state");
    return DensityOperator(n, Product{std::move(leaves)});
  }

  /// Wraps an already-valid matrix without re-checking it.
  static DensityOperator trusted_dense(ComplexMatrix m) {
    auto q = qubits_for_dimension(static_cast<std::uint64_t>(m.rows()));
    if (!q || m.rows() != m.cols()) throw Error(ErrorCode::kBadDimension, "matrix is not 2^n square");
    return DensityOperator(*q, Dense{std::move(m)});
  }
  static DensityOperator trusted_diagonal(std::vector<double> p) {
    auto q = qubits_for_dimension(p.size());
    if (!q) throw Error(ErrorCode::kBadDimension, "diagonal length " + std::to_string(p.size()));
    return DensityOperator(*q, Diagonal{std::move(p)});
  }

  int qubits() const { return qubits_; }
  std::uint64_t dimension() const { return std::uint64_t{1} << qubits_; }

  bool is_dense() const { return std::holds_alternative<Dense>(rep_); }
  bool is_diagonal() const { return std::holds_alternative<Diagonal>(rep_); }
  bool is_product() const { return std::holds_alternative<Product>(rep_); }

  const ComplexMatrix& matrix() const { return std::get<Dense>(rep_).matrix; }
  const std::vector<double>& probabilities() const { return std::get<Diagonal>(rep_).probs; }
  const std::vector<DensityOperator>& factors() const { return std::get<Product>(rep_).factors; }

  /// True when every leaf is diagonal.
  bool is_diagonal_like() const {
    if (is_diagonal()) return true;
    if (is_product()) {
      return std::all_of(factors().begin(), factors().end(), [](const auto& f) { return f.is_diagonal(); });
    }
    return false;
  }

  /// Collapses a product into a single dense or diagonal leaf, within caps.
  DensityOperator materialize() const {
    if (!is_product()) return *this;
    if (is_diagonal_like()) {
      require_qubits(qubits_, limits().diagonal_max_qubits, "materialized diagonal state");
      std::vector<double> p{1.0};
      for (const auto& f : factors()) p = kron(p, f.probabilities());
      return DensityOperator(qubits_, Diagonal{std::move(p)});
    }
    require_qubits(qubits_, limits().dense_max_qubits, "materialized dense state");
    ComplexMatrix m = ComplexMatrix::Ones(1, 1);
    for (const auto& f : factors()) m = tensor(m, f.to_matrix());
    return DensityOperator(qubits_, Dense{std::move(m)});
  }

  /// Dense matrix form, within the dense cap.
  ComplexMatrix to_matrix() const {
    require_qubits(qubits_, limits().dense_max_qubits, "dense matrix");
    if (is_dense()) return matrix();
    if (is_diagonal()) {
      const auto& p = probabilities();
      Eigen::VectorXcd d(static_cast<Eigen::Index>(p.size()));
      for (std::size_t i = 0; i < p.size(); ++i) d[static_cast<Eigen::Index>(i)] = p[i];
      return d.asDiagonal();
    }
    return materialize().to_matrix();
  }

  /// Matrix entry (i, j) in any representation.
  Complex entry(BasisIndex i, BasisIndex j) const {
    if (is_dense()) return matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    if (is_diagonal()) return i == j ? Complex(probabilities()[i]) : Complex(0.0);
    Complex v = 1.0;
    int shift = qubits_;
    for (const auto& f : factors()) {
      shift -= f.qubits();
      const BasisIndex mask = (BasisIndex{1} << f.qubits()) - 1;
      v *= f.entry((i >> shift) & mask, (j >> shift) & mask);
      if (v == Complex(0.0)) break;
    }
    return v;
  }

 private:
  using Rep = std::variant<Dense, Diagonal, Product>;
  DensityOperator(int qubits, Rep rep) : qubits_(qubits), rep_(std::move(rep)) {}

  int qubits_ = 0;
  Rep rep_;
};

// ---------------------------------------------------------------------------
// Spectrum

struct Spectrum {
  int qubits = 0;
  std::vector<double> values;                // descending, clipped, sums to 1
  std::optional<ComplexMatrix> vectors;      // dense form: column i pairs with values[i]
  std::vector<BasisIndex> labels;            // diagonal form: basis index of values[i]

  std::uint64_t dimension() const { return values.size(); }
};

namespace detail {

/// Clip, renormalize and order eigenvalues descending, ties by ascending index.
inline std::vector<std::size_t> order_and_clip(std::vector<double>& vals) {
  for (double& v : vals) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kMalformedOperator, "non-finite eigenvalue");
    if (v < -kClipTol) throw Error(ErrorCode::kNotPsd, "eigenvalue " + std::to_string(v));
    v = std::clamp(v, 0.0, 1.0);
  }
  double total = compensated_sum(vals);
  if (std::abs(total - 1.0) > kRenormTol) {
    throw Error(ErrorCode::kMalformedOperator, "eigenvalues sum to " + std::to_string(total));
  }
  for (double& v : vals) v /= total;
  std::vector<std::size_t> order(vals.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
  return order;
}

}  // namespace detail

inline Spectrum eigendecompose(const DensityOperator& d) {
  if (d.is_product()) return eigendecompose(d.materialize());
  Spectrum s;
  s.qubits = d.qubits();
  if (d.is_diagonal()) {
    std::vector<double> vals = d.probabilities();
    auto order = detail::order_and_clip(vals);
    s.values.reserve(vals.size());
    s.labels.reserve(vals.size());
    for (auto i : order) {
      s.values.push_back(vals[i]);
      s.labels.push_back(i);
    }
    return s;
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(d.matrix());
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::kMalformedOperator, "eigensolver failed");
  std::vector<double> vals(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
  auto order = detail::order_and_clip(vals);
  ComplexMatrix vecs(d.matrix().rows(), d.matrix().cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    s.values.push_back(vals[order[k]]);
    vecs.col(static_cast<Eigen::Index>(k)) = solver.eigenvectors().col(static_cast<Eigen::Index>(order[k]));
  }
  s.vectors = std::move(vecs);
  return s;
}

inline double von_neumann_entropy(const DensityOperator& d) {
  if (d.is_product()) {
    double h = 0.0;
    for (const auto& f : d.factors()) h += von_neumann_entropy(f);
    return h;
  }
  if (d.is_diagonal()) return shannon_entropy(d.probabilities());
  return shannon_entropy(eigendecompose(d).values);
}

inline double top_k_sum(const Spectrum& s, std::uint64_t k) {
  if (k < 1 || k > s.dimension()) {
    throw Error(ErrorCode::kOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(s.dimension()) + "]");
  }
  return compensated_sum(std::span<const double>(s.values.data(), k));
}

// ---------------------------------------------------------------------------
// Projection

class Projection {
 public:
  struct Dense {
    ComplexMatrix matrix;
  };
  struct Subset {
    std::vector<BasisIndex> indices;  // sorted, unique
  };
  struct Product {
    std::vector<Projection> factors;
  };

  /// Hermitian idempotent matrix; rank is the rounded trace.
  static Projection from_matrix(ComplexMatrix m, double tol = kDefaultTol) {
    auto q = qubits_for_dimension(static_cast<std::uint64_t>(m.rows()));
    if (!q || m.rows() != m.cols()) throw Error(ErrorCode::kBadDimension, "projection is not 2^n square");
    require_qubits(*q, limits().dense_max_qubits, "dense projection");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) throw Error(ErrorCode::kNotHermitian, "projection not Hermitian");
    if ((m * m - m).cwiseAbs().maxCoeff() > tol) throw Error(ErrorCode::kPrecondition, "projection not idempotent");
    const double tr = m.trace().real();
    const auto rank = static_cast<std::uint64_t>(std::llround(tr));
    if (std::abs(tr - static_cast<double>(rank)) > tol * std::max(1.0, tr)) {
      throw Error(ErrorCode::kPrecondition, "projection trace is not an integer");
    }
    return Projection(*q, rank, Dense{std::move(m)});
  }

  /// Wraps a matrix known to be a rank-`rank` projection.
  static Projection trusted_dense(ComplexMatrix m, std::uint64_t rank) {
    auto q = qubits_for_dimension(static_cast<std::uint64_t>(m.rows()));
    if (!q || m.rows() != m.cols()) throw Error(ErrorCode::kBadDimension, "projection is not 2^n square");
    return Projection(*q, rank, Dense{std::move(m)});
  }

  static Projection basis_subset(int qubits, std::vector<BasisIndex> indices) {
    if (qubits < 1) throw Error(ErrorCode::kBadDimension, "projection needs at least one qubit");
    require_qubits(qubits, limits().diagonal_max_qubits, "basis-subset projection");
    std::sort(indices.begin(), indices.end());
    indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
    const BasisIndex dim = BasisIndex{1} << qubits;
    if (!indices.empty() && indices.back() >= dim) throw Error(ErrorCode::kOutOfRange, "basis index out of range");
    const auto rank = static_cast<std::uint64_t>(indices.size());
    return Projection(qubits, rank, Subset{std::move(indices)});
  }

  static Projection identity(int qubits) {
    if (qubits > 12) {
      std::vector<Projection> chunks;
      for (int left = qubits; left > 0; left -= 12) chunks.push_back(identity(std::min(left, 12)));
      return product(std::move(chunks));
    }
    std::vector<BasisIndex> all(std::size_t{1} << qubits);
    std::iota(all.begin(), all.end(), BasisIndex{0});
    return basis_subset(qubits, std::move(all));
  }

  static Projection product(std::vector<Projection> factors) {
    std::vector<Projection> leaves;
    int n = 0;
    std::uint64_t rank = 1;
    for (auto& f : factors) {
      n += f.qubits();
      rank *= f.rank();
      if (auto* p = std::get_if<Product>(&f.rep_)) {
        for (auto& leaf : p->factors) leaves.push_back(std::move(leaf));
      } else {
        leaves.push_back(std::move(f));
      }
    }
    if (leaves.empty()) throw Error(ErrorCode::kBadDimension, "empty product");
    if (leaves.size() == 1) return std::move(leaves.front());
    require_qubits(n, limits().product_max_qubits, "product projection");
    return Projection(n, rank, Product{std::move(leaves)});
  }

  int qubits() const { return qubits_; }
  std::uint64_t rank() const { return rank_; }

  bool is_dense() const { return std::holds_alternative<Dense>(rep_); }
  bool is_subset() const { return std::holds_alternative<Subset>(rep_); }
  bool is_product() const { return std::holds_alternative<Product>(rep_); }

  const ComplexMatrix& matrix() const { return std::get<Dense>(rep_).matrix; }
  const std::vector<BasisIndex>& indices() const { return std::get<Subset>(rep_).indices; }
  const std::vector<Projection>& factors() const { return std::get<Product>(rep_).factors; }

  bool is_subset_like() const {
    if (is_subset()) return true;
    if (is_product()) {
      return std::all_of(factors().begin(), factors().end(), [](const auto& f) { return f.is_subset(); });
    }
    return false;
  }

  Projection materialize() const {
    if (!is_product()) return *this;
    if (is_subset_like()) {
      require_qubits(qubits_, limits().diagonal_max_qubits, "materialized subset projection");
      std::vector<BasisIndex> idx{0};
      for (const auto& f : factors()) {
        std::vector<BasisIndex> next;
        next.reserve(idx.size() * f.indices().size());
        for (auto hi : idx) {
          for (auto lo : f.indices()) next.push_back((hi << f.qubits()) | lo);
        }
        idx = std::move(next);
      }
      return Projection(qubits_, rank_, Subset{std::move(idx)});
    }
    return Projection(qubits_, rank_, Dense{to_matrix()});
  }

  ComplexMatrix to_matrix() const {
    require_qubits(qubits_, limits().dense_max_qubits, "dense projection");
    if (is_dense()) return matrix();
    const auto dim = static_cast<Eigen::Index>(std::uint64_t{1} << qubits_);
    if (is_subset()) {
      ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
      for (auto i : indices()) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
      return m;
    }
    ComplexMatrix m = ComplexMatrix::Ones(1, 1);
    for (const auto& f : factors()) m = tensor(m, f.to_matrix());
    return m;
  }

 private:
  using Rep = std::variant<Dense, Subset, Product>;
  Projection(int qubits, std::uint64_t rank, Rep rep) : qubits_(qubits), rank_(rank), rep_(std::move(rep)) {}

  int qubits_ = 0;
  std::uint64_t rank_ = 0;
  Rep rep_;
};

/// Projection onto the span of the first k eigenvectors (basis subset for
/// spectra of diagonal states).
inline Projection top_k_projector(const Spectrum& s, std::uint64_t k) {
  if (k < 1 || k > s.dimension()) {
    throw Error(ErrorCode::kOutOfRange, "k=" + std::to_string(k) + " outside [1, " + std::to_string(s.dimension()) + "]");
  }
  if (s.vectors) {
    const auto& v = *s.vectors;
    const auto kk = static_cast<Eigen::Index>(k);
    ComplexMatrix p = v.leftCols(kk) * v.leftCols(kk).adjoint();
    return Projection::trusted_dense(std::move(p), k);
  }
  if (s.labels.size() != s.values.size()) {
    throw Error(ErrorCode::kPrecondition, "spectrum carries neither eigenvectors nor basis labels");
  }
  std::vector<BasisIndex> idx(s.labels.begin(), s.labels.begin() + static_cast<std::ptrdiff_t>(k));
  return Projection::basis_subset(s.qubits, std::move(idx));
}

inline double tau_weight(const Projection& g) {
  return std::ldexp(static_cast<double>(g.rank()), -g.qubits());
}

// ---------------------------------------------------------------------------
// Factor alignment for product forms

namespace detail {

/// Splits two factorizations of the same qubit count into their coarsest
/// common refinement: returns, per merged block, [begin, end) factor ranges
/// into a and b.
struct BlockRange {
  std::size_t a_begin, a_end, b_begin, b_end;
};

inline std::vector<BlockRange> align_blocks(std::span<const int> a, std::span<const int> b) {
  std::vector<BlockRange> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    BlockRange r{i, i, j, j};
    int sa = 0, sb = 0;
    do {
      if (sa <= sb && i < a.size()) {
        sa += a[i++];
      } else if (j < b.size()) {
        sb += b[j++];
      } else {
        sa += a[i++];
      }
    } while (sa != sb);
    r.a_end = i;
    r.b_end = j;
    out.push_back(r);
  }
  return out;
}

template <typename T>
std::vector<T> as_factors(const T& x) {
  if (x.is_product()) return x.factors();
  return {x};
}

template <typename T>
std::vector<int> factor_qubits(const std::vector<T>& fs) {
  std::vector<int> q;
  for (const auto& f : fs) q.push_back(f.qubits());
  return q;
}

template <typename T>
T merge(const std::vector<T>& fs, std::size_t begin, std::size_t end) {
  std::vector<T> part(fs.begin() + static_cast<std::ptrdiff_t>(begin), fs.begin() + static_cast<std::ptrdiff_t>(end));
  return T::product(std::move(part)).materialize();
}

inline double leaf_weight(const DensityOperator& d, const Projection& g) {
  CompensatedSum s;
  if (d.is_diagonal()) {
    const auto& p = d.probabilities();
    if (g.is_subset()) {
      for (auto i : g.indices()) s.add(p[i]);
    } else {
      const auto& m = g.matrix();
      for (std::size_t i = 0; i < p.size(); ++i) s.add(p[i] * m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real());
    }
    return s.value();
  }
  const auto& m = d.matrix();
  if (g.is_subset()) {
    for (auto i : g.indices()) s.add(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real());
    return s.value();
  }
  // Tr(d g) = sum_ij d_ij g_ji
  return (m.cwiseProduct(g.matrix().transpose())).sum().real();
}

}  // namespace detail

/// rho(G) = Tr(d G).
inline double projection_weight(const DensityOperator& d, const Projection& g) {
  if (d.qubits() != g.qubits()) {
    throw Error(ErrorCode::kDimensionMismatch, "state on " + std::to_string(d.qubits()) + " qubits, projection on " +
                                                   std::to_string(g.qubits()));
  }
  if (!d.is_product() && !g.is_product()) return detail::leaf_weight(d, g);
  const auto df = detail::as_factors(d);
  const auto gf = detail::as_factors(g);
  const auto dq = detail::factor_qubits(df);
  const auto gq = detail::factor_qubits(gf);
  double w = 1.0;
  for (const auto& r : detail::align_blocks(dq, gq)) {
    w *= detail::leaf_weight(detail::merge(df, r.a_begin, r.a_end), detail::merge(gf, r.b_begin, r.b_end));
    if (w == 0.0) break;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Partial traces

/// Traces out the last `a` qubits.
inline DensityOperator partial_trace_k(const DensityOperator& d, int a) {
  if (a < 0 || a >= d.qubits()) {
    throw Error(ErrorCode::kOutOfRange, "cannot trace " + std::to_string(a) + " of " + std::to_string(d.qubits()) + " qubits");
  }
  if (a == 0) return d;
  if (d.is_product()) {
    std::vector<DensityOperator> fs = d.factors();
    int left = a;
    while (left > 0) {
      auto& last = fs.back();
      if (last.qubits() <= left) {
        left -= last.qubits();
        fs.pop_back();
      } else {
        last = partial_trace_k(last, left);
        left = 0;
      }
    }
    return DensityOperator::product(std::move(fs));
  }
  const std::uint64_t block = std::uint64_t{1} << a;
  const std::uint64_t out_dim = d.dimension() >> a;
  if (d.is_diagonal()) {
    const auto& p = d.probabilities();
    std::vector<double> out(out_dim);
    for (std::uint64_t i = 0; i < out_dim; ++i) {
      CompensatedSum s;
      for (std::uint64_t r = 0; r < block; ++r) s.add(p[i * block + r]);
      out[i] = s.value();
    }
    return DensityOperator::trusted_diagonal(std::move(out));
  }
  const auto& m = d.matrix();
  const auto od = static_cast<Eigen::Index>(out_dim);
  const auto bl = static_cast<Eigen::Index>(block);
  ComplexMatrix out = ComplexMatrix::Zero(od, od);
  for (Eigen::Index i = 0; i < od; ++i) {
    for (Eigen::Index j = 0; j < od; ++j) {
      Complex acc = 0.0;
      for (Eigen::Index r = 0; r < bl; ++r) acc += m(i * bl + r, j * bl + r);
      out(i, j) = acc;
    }
  }
  return DensityOperator::trusted_dense(std::move(out));
}

inline DensityOperator partial_trace_last(const DensityOperator& d) {
  if (d.qubits() < 2) throw Error(ErrorCode::kOutOfRange, "partial trace needs at least 2 qubits");
  return partial_trace_k(d, 1);
}

// ---------------------------------------------------------------------------
// Validation and comparison

/// Checks Hermiticity, positivity and unit trace. Eigenvalues in [-tol, 0)
/// are clipped to zero and the operator is rebuilt from the clipped spectrum.
/// The trace tolerance is capped at kRenormTol.
inline DensityOperator validate_density(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::kBadDimension, "matrix is not square");
  auto q = qubits_for_dimension(static_cast<std::uint64_t>(m.rows()));
  if (!q) throw Error(ErrorCode::kBadDimension, "dimension " + std::to_string(m.rows()) + " is not 2^n");
  require_qubits(*q, limits().dense_max_qubits, "dense state");
  if (!m.allFinite()) throw Error(ErrorCode::kMalformedOperator, "non-finite entry");
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) throw Error(ErrorCode::kNotHermitian, "matrix is not Hermitian");
  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > std::min(tol, kRenormTol)) throw Error(ErrorCode::kWrongTrace, "trace " + std::to_string(tr));
  ComplexMatrix h = (m + m.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  const double min_eig = solver.eigenvalues().minCoeff();
  if (min_eig < -tol) throw Error(ErrorCode::kNotPsd, "eigenvalue " + std::to_string(min_eig));
  if (min_eig < 0) {
    Eigen::VectorXd vals = solver.eigenvalues().cwiseMax(0.0);
    vals /= vals.sum();
    h = solver.eigenvectors() * vals.cast<Complex>().asDiagonal() * solver.eigenvectors().adjoint();
  }
  return DensityOperator::trusted_dense(std::move(h));
}

namespace detail {

inline double leaf_max_abs(const DensityOperator& d) {
  if (d.is_diagonal()) return *std::max_element(d.probabilities().begin(), d.probabilities().end());
  return d.matrix().cwiseAbs().maxCoeff();
}

inline double leaf_max_abs_diff(const DensityOperator& a, const DensityOperator& b) {
  if (a.is_diagonal() && b.is_diagonal()) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.probabilities().size(); ++i) {
      m = std::max(m, std::abs(a.probabilities()[i] - b.probabilities()[i]));
    }
    return m;
  }
  return (a.to_matrix() - b.to_matrix()).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Max-entry distance ||a - b||_inf. Exact for leaves and for products that
/// fit the caps once merged; otherwise a telescoping upper bound over aligned
/// factor blocks (zero iff every block agrees exactly).
inline double max_abs_diff(const DensityOperator& a, const DensityOperator& b) {
  if (a.qubits() != b.qubits()) throw Error(ErrorCode::kDimensionMismatch, "qubit counts differ");
  const int n = a.qubits();
  const bool diag = a.is_diagonal_like() && b.is_diagonal_like();
  if ((diag && n <= limits().diagonal_max_qubits) || n <= limits().dense_max_qubits) {
    return detail::leaf_max_abs_diff(a.materialize(), b.materialize());
  }
  const auto af = detail::as_factors(a);
  const auto bf = detail::as_factors(b);
  const auto blocks = detail::align_blocks(detail::factor_qubits(af), detail::factor_qubits(bf));
  std::vector<double> diffs, scale;
  for (const auto& r : blocks) {
    auto x = detail::merge(af, r.a_begin, r.a_end);
    auto y = detail::merge(bf, r.b_begin, r.b_end);
    diffs.push_back(detail::leaf_max_abs_diff(x, y));
    scale.push_back(std::max(detail::leaf_max_abs(x), detail::leaf_max_abs(y)));
  }
  double bound = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    double term = diffs[i];
    for (std::size_t j = 0; j < diffs.size() && term > 0; ++j) {
      if (j != i) term *= scale[j];
    }
    bound += term;
  }
  return bound;
}

}  // namespace qsrand
