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

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "qsrand/error.hpp"

namespace qsrand {

/// Nonnegative-denominator rational used for the builder parameters, so that
/// ranks like ceil(2^{n p/q}) are computed without float boundary errors.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ == 0) throw Error(ErrorCode::kParse, "zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    auto g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  /// Accepts "3", "1/2", "0.25", "-0.5".
  static Rational parse(std::string_view text) {
    std::string s(text);
    if (s.empty()) throw Error(ErrorCode::kParse, "empty rational");
    try {
      if (auto slash = s.find('/'); slash != std::string::npos) {
        return Rational(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
      }
      if (auto dot = s.find('.'); dot != std::string::npos) {
        std::string frac = s.substr(dot + 1);
        if (frac.size() > 15) throw Error(ErrorCode::kParse, "too many decimals: " + s);
        bool neg = !s.empty() && s[0] == '-';
        std::string whole = s.substr(0, dot);
        std::int64_t w = (whole.empty() || whole == "-" || whole == "+") ? 0 : std::stoll(whole);
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
        std::int64_t num = (w < 0 ? -w : w) * den + f;
        return Rational(neg ? -num : num, den);
      }
      return Rational(std::stoll(s), 1);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kParse, "not a rational: " + s);
    }
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const {
    return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

namespace detail {

using BigInt = boost::multiprecision::cpp_int;
using BigFloat = boost::multiprecision::cpp_bin_float_50;

inline BigInt pow2(std::uint64_t e) { return BigInt(1) << e; }

inline BigInt ipow(BigInt base, std::int64_t e) {
  BigInt r = 1;
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

inline std::uint64_t to_u64(const BigInt& v) {
  if (v > BigInt(std::numeric_limits<std::uint64_t>::max() >> 1)) {
    throw Error(ErrorCode::kCapExceeded, "rank does not fit in 63 bits");
  }
  return v.convert_to<std::uint64_t>();
}

}  // namespace detail

/// Smallest integer k with k >= 2^{n*r}, i.e. k^q >= 2^{n p} for r = p/q >= 0.
inline std::uint64_t ceil_pow2(std::uint64_t n, const Rational& r) {
  if (r.num() < 0) throw Error(ErrorCode::kPrecondition, "negative exponent");
  using detail::BigInt;
  const auto q = r.den();
  const BigInt target = detail::pow2(n * static_cast<std::uint64_t>(r.num()));
  double guess = std::floor(std::exp2(static_cast<double>(n) * r.value()));
  BigInt k = guess < 1 ? BigInt(1) : BigInt(static_cast<std::uint64_t>(guess));
  if (k > 1) k -= 1;
  while (detail::ipow(k, q) < target) ++k;
  while (k > 1 && detail::ipow(k - 1, q) >= target) --k;
  return detail::to_u64(k);
}

/// Largest integer k with k <= 2^{n*r}.
inline std::uint64_t floor_pow2(std::uint64_t n, const Rational& r) {
  if (r.num() < 0) throw Error(ErrorCode::kPrecondition, "negative exponent");
  using detail::BigInt;
  const auto q = r.den();
  const BigInt target = detail::pow2(n * static_cast<std::uint64_t>(r.num()));
  double guess = std::floor(std::exp2(static_cast<double>(n) * r.value()));
  BigInt k = BigInt(static_cast<std::uint64_t>(guess)) + 1;
  while (detail::ipow(k, q) > target) --k;
  while (detail::ipow(k + 1, q) <= target) ++k;
  return detail::to_u64(k);
}

/// Decides (2^{n*theta} + 1) / 2^n < 2^{-m}, exactly.
inline bool schnorr_budget_ok(std::uint64_t n, const Rational& theta, std::uint64_t m) {
  if (n <= m) return false;
  using detail::BigInt;
  // 2^{n theta} < 2^{n-m} - 1  <=>  2^{n p} < (2^{n-m} - 1)^q
  const BigInt k = detail::pow2(n - m) - 1;
  const BigInt lhs = detail::pow2(n * static_cast<std::uint64_t>(theta.num()));
  return lhs < detail::ipow(k, theta.den());
}

/// Decides (2^{n*t} + 1) / 2^{n*s} < 2^{-m}. Exact when n*t and n*s are
/// integers; otherwise both sides are irrational and 50-digit binary floats
/// separate them.
inline bool s_budget_ok(std::uint64_t n, const Rational& t, const Rational& s, std::uint64_t m) {
  using detail::BigFloat;
  using detail::BigInt;
  const auto nt_num = static_cast<__int128>(n) * t.num();
  const auto ns_num = static_cast<__int128>(n) * s.num();
  if (nt_num % t.den() == 0 && ns_num % s.den() == 0) {
    const auto a = static_cast<std::int64_t>(nt_num / t.den());
    const auto b = static_cast<std::int64_t>(ns_num / s.den()) - static_cast<std::int64_t>(m);
    if (b < 0) return false;
    return detail::pow2(a) + 1 < detail::pow2(b);
  }
  const BigFloat two = 2;
  const BigFloat lhs = boost::multiprecision::pow(two, BigFloat(static_cast<double>(n)) * t.num() / t.den()) + 1;
  const BigFloat rhs = boost::multiprecision::pow(
      two, BigFloat(static_cast<double>(n)) * s.num() / s.den() - BigFloat(static_cast<double>(m)));
  return lhs < rhs * (1 - BigFloat("1e-40"));
}

}  // namespace qsrand
