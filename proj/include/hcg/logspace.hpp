#pragma once

// Log-space accumulation helpers shared by the partition tables and the
// samplers.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace hcg::logspace {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Pairwise sum of exp(x_i - shift).
inline double pairwise_exp_sum(std::span<const double> xs, double shift) {
  if (xs.size() <= 8) {
    double s = 0.0;
    for (double x : xs) s += std::exp(x - shift);
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_exp_sum(xs.first(half), shift) + pairwise_exp_sum(xs.subspan(half), shift);
}

/// log(sum_i exp(x_i)); -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return kNegInf;
  const double m = *std::max_element(xs.begin(), xs.end());
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  return m + std::log(pairwise_exp_sum(xs, m));
}

inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

/// Rigorous-enough bound on the absolute error of log_sum_exp(xs) as
/// computed above: exp/log each within an ulp, pairwise summation error
/// growing with log2(N), plus the final rounding.
inline double log_sum_exp_error(std::size_t count, double value) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double depth = std::log2(static_cast<double>(std::max<std::size_t>(count, 1))) + 8.0;
  return depth * eps + 4.0 * eps * std::abs(value);
}

inline double round_down(double x) { return std::nextafter(x, kNegInf); }
inline double round_up(double x) { return std::nextafter(x, -kNegInf); }

}  // namespace hcg::logspace
