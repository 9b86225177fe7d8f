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

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qsrand {

enum class ErrorCode {
  kBadDimension,
  kNotHermitian,
  kNotPsd,
  kWrongTrace,
  kMalformedOperator,
  kCapExceeded,
  kDimensionMismatch,
  kOutOfRange,
  kPrecondition,
  kDepthMismatch,
  kNotDescending,
  kQuadrature,
  kNormalization,
  kSourceExhausted,
  kParse,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadDimension: return "bad-dimension";
    case ErrorCode::kNotHermitian: return "not-hermitian";
    case ErrorCode::kNotPsd: return "not-psd";
    case ErrorCode::kWrongTrace: return "wrong-trace";
    case ErrorCode::kMalformedOperator: return "malformed-operator";
    case ErrorCode::kCapExceeded: return "cap-exceeded";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kDepthMismatch: return "depth-mismatch";
    case ErrorCode::kNotDescending: return "not-descending";
    case ErrorCode::kQuadrature: return "quadrature-non-convergence";
    case ErrorCode::kNormalization: return "normalization";
    case ErrorCode::kSourceExhausted: return "source-exhausted";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Representation caps, in qubits. The dense cap can be overridden with the
/// QSRAND_DENSE_MAX_QUBITS environment variable.
struct Limits {
  int dense_max_qubits = 12;
  int diagonal_max_qubits = 24;
  int product_max_qubits = 62;

  static Limits from_env() {
    Limits l;
    if (const char* v = std::getenv("QSRAND_DENSE_MAX_QUBITS")) {
      int q = std::atoi(v);
      if (q > 0 && q <= 16) l.dense_max_qubits = q;
    }
    return l;
  }
};

inline const Limits& limits() {
  static const Limits l = Limits::from_env();
  return l;
}

}  // namespace qsrand
