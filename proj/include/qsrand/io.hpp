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

// JSON forms of operators, projections, state specs and tests; CSV output with
// 17-significant-digit reals.
//
//   operator:   {"qubits": n, "repr": "dense", "data": [[[re, im], ...], ...]}
//               {"qubits": n, "repr": "diag", "data": [p, ...]}
//               {"qubits": n, "repr": "product", "factors": [operator, ...]}
//   projection: {"qubits": n, "repr": "subset", "indices": [i, ...]}
//               {"qubits": n, "repr": "dense" | "product", ...}
//   state:      {"name", "N_max", "repr", "constructor": {"kind": ..., params}}
//               or {"name", "N_max", "repr", "data": [operator for n = 1..N_max]}
//   test:       {"kind": "qs" | "s" | "null", "terms": [{"m", "n_m", "projector"}],
//                "certificate": {"type": "geometric" | "partial_sums" | "unverified"}}

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qsrand/linalg.hpp"
#include "qsrand/quadrature.hpp"
#include "qsrand/rational.hpp"
#include "qsrand/rtests.hpp"
#include "qsrand/states.hpp"

namespace qsrand::io {

using Json = nlohmann::json;

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 64-bit FNV-1a, stable across platforms.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string spec_hash(const Json& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(spec.dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// Matrices

inline Json matrix_to_json(const ComplexMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ComplexMatrix matrix_from_json(const Json& data) {
  if (!data.is_array() || data.empty()) throw Error(ErrorCode::kParse, "matrix data must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(data.size());
  const auto cols = static_cast<Eigen::Index>(data[0].size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = data[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorCode::kParse, "ragged matrix rows");
    for (Eigen::Index j = 0; j < cols; ++j) {
      const auto& e = row[static_cast<std::size_t>(j)];
      if (e.is_number()) {
        m(i, j) = e.get<double>();
      } else {
        m(i, j) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
      }
    }
  }
  return m;
}

inline Json to_json(const DensityOperator& d) {
  Json j{{"qubits", d.qubits()}};
  if (d.is_dense()) {
    j["repr"] = "dense";
    j["data"] = matrix_to_json(d.matrix());
  } else if (d.is_diagonal()) {
    j["repr"] = "diag";
    j["data"] = d.probabilities();
  } else {
    j["repr"] = "product";
    Json fs = Json::array();
    for (const auto& f : d.factors()) fs.push_back(to_json(f));
    j["factors"] = std::move(fs);
  }
  return j;
}

inline DensityOperator density_from_json(const Json& j, double tol = kDefaultTol) {
  const std::string repr = j.at("repr").get<std::string>();
  DensityOperator d = [&] {
    if (repr == "dense") return validate_density(matrix_from_json(j.at("data")), tol);
    if (repr == "diag") return DensityOperator::diagonal(j.at("data").get<std::vector<double>>(), tol);
    if (repr == "product") {
      std::vector<DensityOperator> fs;
      for (const auto& f : j.at("factors")) fs.push_back(density_from_json(f, tol));
      return DensityOperator::product(std::move(fs));
    }
    throw Error(ErrorCode::kParse, "unknown operator repr '" + repr + "'");
  }();
  if (j.contains("qubits") && j.at("qubits").get<int>() != d.qubits()) {
    throw Error(ErrorCode::kDimensionMismatch, "declared qubits disagree with data");
  }
  return d;
}

inline Json to_json(const Projection& g) {
  Json j{{"qubits", g.qubits()}, {"rank", g.rank()}};
  if (g.is_dense()) {
    j["repr"] = "dense";
    j["data"] = matrix_to_json(g.matrix());
  } else if (g.is_subset()) {
    j["repr"] = "subset";
    j["indices"] = g.indices();
  } else {
    j["repr"] = "product";
    Json fs = Json::array();
    for (const auto& f : g.factors()) fs.push_back(to_json(f));
    j["factors"] = std::move(fs);
  }
  return j;
}

inline Projection projection_from_json(const Json& j) {
  const std::string repr = j.at("repr").get<std::string>();
  const int qubits = j.at("qubits").get<int>();
  if (repr == "subset") return Projection::basis_subset(qubits, j.at("indices").get<std::vector<BasisIndex>>());
  if (repr == "dense") return Projection::from_matrix(matrix_from_json(j.at("data")));
  if (repr == "product") {
    std::vector<Projection> fs;
    for (const auto& f : j.at("factors")) fs.push_back(projection_from_json(f));
    auto p = Projection::product(std::move(fs));
    if (p.qubits() != qubits) throw Error(ErrorCode::kDimensionMismatch, "declared qubits disagree with factors");
    return p;
  }
  throw Error(ErrorCode::kParse, "unknown projection repr '" + repr + "'");
}

// ---------------------------------------------------------------------------
// States

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline Json parse_param_value(const std::string& key, const std::string& v) {
  if (key == "bits" || key == "pattern" || key == "density") return v;
  if (key == "diag") {
    Json arr = Json::array();
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ';')) arr.push_back(std::stod(item));
    return arr;
  }
  try {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos == v.size()) return x;
  } catch (const std::logic_error&) {
  }
  return v;
}

}  // namespace detail

/// "builtin:block(N=44)" -> {"kind": "block", "N": 44}. Parameters:
/// N, bits, pattern, seed, diag (values separated by ';'), density.
inline Json parse_builtin(const std::string& text) {
  std::string body = text.rfind("builtin:", 0) == 0 ? text.substr(8) : text;
  Json j;
  const auto open = body.find('(');
  j["kind"] = detail::trim(body.substr(0, open));
  if (open != std::string::npos) {
    const auto close = body.rfind(')');
    if (close == std::string::npos || close < open) throw Error(ErrorCode::kParse, "unbalanced parentheses in " + text);
    std::stringstream ss(body.substr(open + 1, close - open - 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw Error(ErrorCode::kParse, "expected key=value, got '" + item + "'");
      const std::string key = detail::trim(item.substr(0, eq));
      j[key] = detail::parse_param_value(key, detail::trim(item.substr(eq + 1)));
    }
  }
  return j;
}

/// Builds a state from a constructor spec; `default_depth` is used when the
/// spec carries no N.
inline StateSequence make_state(const Json& ctor, int default_depth) {
  const std::string kind = ctor.at("kind").get<std::string>();
  const int depth = ctor.contains("N") ? ctor.at("N").get<int>() : default_depth;
  StateSequence s = [&] {
    if (kind == "tracial") return tracial_state(depth);
    if (kind == "block") return block_state(depth);
    if (kind == "pure") {
      if (ctor.contains("bits")) return pure_bitstring_state(BitSource::explicit_bits(ctor.at("bits").get<std::string>()), depth);
      if (ctor.contains("pattern")) return pure_bitstring_state(BitSource::periodic(ctor.at("pattern").get<std::string>()), depth);
      return pure_bitstring_state(BitSource::seeded(ctor.value("seed", std::uint64_t{0})), depth);
    }
    if (kind == "tensor_power") {
      const Json& base = ctor.contains("base") ? ctor.at("base") : Json{{"repr", "diag"}, {"data", ctor.at("diag")}};
      return tensor_power_state(density_from_json(base), depth);
    }
    if (kind == "measure") return measure_state(DensitySpec::builtin(ctor.value("density", std::string("f1"))), depth);
    throw Error(ErrorCode::kParse, "unknown state kind '" + kind + "'");
  }();
  Json full = ctor;
  full["N"] = depth;
  s.set_descriptor(full.dump());
  return s;
}

/// Accepts a state document ({"constructor": ...} or {"data": [...]}) or a
/// bare constructor spec.
inline StateSequence state_from_json(const Json& j, int default_depth) {
  if (j.contains("constructor")) {
    Json ctor = j.at("constructor");
    if (!ctor.contains("N") && j.contains("N_max")) ctor["N"] = j.at("N_max");
    return make_state(ctor, default_depth);
  }
  if (j.contains("data")) {
    std::vector<DensityOperator> ops;
    for (const auto& op : j.at("data")) ops.push_back(density_from_json(op));
    const int depth = static_cast<int>(ops.size());
    const auto hint = !ops.empty() && ops.front().is_dense() ? Representation::kDense : Representation::kDiagonal;
    auto shared = std::make_shared<const std::vector<DensityOperator>>(std::move(ops));
    StateSequence s(j.value("name", std::string("explicit")), depth, hint,
                    [shared](int n) { return (*shared)[static_cast<std::size_t>(n - 1)]; });
    s.set_descriptor(j.dump());
    return s;
  }
  return make_state(j, default_depth);
}

inline Json to_json(const StateSequence& s) {
  Json j{{"name", s.name()}, {"N_max", s.max_depth()}, {"repr", std::string(to_string(s.representation_hint()))}};
  if (!s.descriptor().empty()) {
    Json d = Json::parse(s.descriptor());
    if (d.contains("kind")) {
      j["constructor"] = std::move(d);
      return j;
    }
  }
  Json data = Json::array();
  for (int n = 1; n <= s.max_depth(); ++n) data.push_back(to_json(s.at(n)));
  j["data"] = std::move(data);
  return j;
}

/// --state value: inline JSON, "builtin:...", or a path to a JSON file.
inline StateSequence load_state(const std::string& arg, int default_depth) {
  if (arg.rfind("builtin:", 0) == 0) return make_state(parse_builtin(arg), default_depth);
  if (!arg.empty() && arg.front() == '{') return state_from_json(Json::parse(arg), default_depth);
  std::ifstream in(arg);
  if (!in) throw Error(ErrorCode::kParse, "cannot open state file " + arg);
  return state_from_json(Json::parse(in), default_depth);
}

// ---------------------------------------------------------------------------
// Tests

inline Json to_json(const BuildOutcome& b, const std::string& kind_override = {}) {
  Json j;
  j["kind"] = kind_override.empty() ? b.kind : kind_override;
  if (b.s) j["s"] = b.s->str();
  Json terms = Json::array();
  for (std::size_t i = 0; i < b.terms.size(); ++i) {
    const auto& t = b.terms[i];
    const auto& c = b.certificates[i];
    terms.push_back({{"m", t.m},
                     {"n_m", t.qubits},
                     {"projector", to_json(t.projector)},
                     {"certificate",
                      {{"rank", c.rank},
                       {"tau", c.tau},
                       {"budget", c.budget},
                       {"weight", c.weight},
                       {"budget_ok", c.budget_ok},
                       {"weight_ok", c.weight_ok}}}});
  }
  j["terms"] = std::move(terms);
  j["certificate"] = {{"type", b.kind == "s" ? "s_weights" : "geometric"}};
  j["exhausted_at"] = b.exhausted_at ? Json(*b.exhausted_at) : Json(nullptr);
  return j;
}

inline Json to_json(const ProjectionSequence& seq, const std::string& kind, int count) {
  Json terms = Json::array();
  for (const auto& t : seq.terms(count)) terms.push_back({{"m", t.m}, {"n_m", t.qubits}, {"projector", to_json(t.projector)}});
  return Json{{"kind", kind}, {"terms", std::move(terms)}, {"certificate", {{"type", "geometric"}}}};
}

struct LoadedTest {
  std::string kind;
  ProjectionSequence seq;
  BudgetCertificate certificate;
  std::optional<Rational> s;
};

inline LoadedTest test_from_json(const Json& j) {
  std::vector<TestTerm> terms;
  for (const auto& t : j.at("terms")) {
    terms.push_back(TestTerm{t.at("m").get<int>(), t.at("n_m").get<int>(), projection_from_json(t.at("projector"))});
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].m != static_cast<int>(i) + 1) throw Error(ErrorCode::kParse, "terms must be listed for m = 1, 2, ...");
  }
  LoadedTest out{j.at("kind").get<std::string>(), ProjectionSequence::from_terms(std::move(terms)), GeometricBudget{}, {}};
  if (out.kind != "qs" && out.kind != "s" && out.kind != "null") throw Error(ErrorCode::kParse, "unknown test kind " + out.kind);
  if (j.contains("s")) out.s = Rational::parse(j.at("s").get<std::string>());
  const std::string type = j.contains("certificate") ? j.at("certificate").value("type", "unverified") : "unverified";
  if (type == "geometric") {
    out.certificate = GeometricBudget{};
  } else if (type == "partial_sums") {
    out.certificate = PartialSumBudget{j.at("certificate").at("sums").get<std::vector<double>>()};
  } else {
    out.certificate = UnverifiedBudget{};
  }
  return out;
}

inline LoadedTest load_test(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') return test_from_json(Json::parse(arg));
  std::ifstream in(arg);
  if (!in) throw Error(ErrorCode::kParse, "cannot open test file " + arg);
  return test_from_json(Json::parse(in));
}

// ---------------------------------------------------------------------------
// CSV

/// Writes "# spec_hash=<hex> spec=<json>" then the column header, then rows.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const Json& spec, std::vector<std::string> columns) : out_(out), width_(columns.size()) {
    out_ << "# spec_hash=" << spec_hash(spec) << " spec=" << spec.dump() << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  struct Cell {
    std::string text;
    Cell(double v) : text(format_real(v)) {}                       // NOLINT
    Cell(int v) : text(std::to_string(v)) {}                       // NOLINT
    Cell(std::uint64_t v) : text(std::to_string(v)) {}             // NOLINT
    Cell(const std::string& s) : text(s) {}                        // NOLINT
    Cell(const char* s) : text(s) {}                               // NOLINT
    Cell(bool b) : text(b ? "1" : "0") {}                          // NOLINT
  };

  void row(std::initializer_list<Cell> cells) {
    if (cells.size() != width_) throw Error(ErrorCode::kPrecondition, "csv row width mismatch");
    bool first = true;
    for (const auto& c : cells) {
      out_ << (first ? "" : ",") << c.text;
      first = false;
    }
    out_ << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw Error(ErrorCode::kPrecondition, "csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

  void comment(const std::string& text) { out_ << "# " << text << "\n"; }

 private:
  std::ostream& out_;
  std::size_t width_;
};

}  // namespace qsrand::io
