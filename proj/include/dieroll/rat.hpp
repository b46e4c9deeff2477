// Exact rational arithmetic for the closed-form bounds and golden tables.
#pragma once

#include <boost/rational.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dieroll {

using Rational = boost::rational<long long>;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) /
         static_cast<double>(r.denominator());
}

/// floor(100 * r) for r >= 0, exact.
inline int floor_percent(const Rational& r) {
  if (r < 0) throw std::invalid_argument("floor_percent: negative value");
  return static_cast<int>((100 * r.numerator()) / r.denominator());
}

inline long long isqrt_floor(long long n) {
  if (n < 0) throw std::invalid_argument("isqrt_floor: negative argument");
  auto r = static_cast<long long>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

inline long long isqrt_ceil(long long n) {
  const long long f = isqrt_floor(n);
  return f * f == n ? f : f + 1;
}

inline std::string to_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

}  // namespace dieroll
