#pragma once

// Series evaluators for the tail estimates: truncated sums of n^alpha
// x^(n^beta), their gamma-function references, the damped hitting sum with
// limit a/(2Cc), and the block weights omega_m.

#include <cmath>
#include <vector>

#include "stoca/errors.hpp"

namespace stoca {

// Query for sum_{n >= 0} n^alpha x^(n^beta). The n = 0 term contributes 1
// when alpha = 0 and nothing otherwise.
struct SeriesQuery {
  double alpha = 0.0;  // > -1
  int beta = 1;        // >= 1
  double x = 0.5;      // in (0,1)
  double tol = 1e-14;  // relative tail tolerance
};

namespace detail {

// Compensated accumulator; terms near x -> 1 span many magnitudes.
struct Kahan {
  double sum = 0.0;
  double carry = 0.0;
  void add(double term) {
    const double y = term - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
};

inline double int_pow(double base, int e) {
  double r = 1.0;
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

}  // namespace detail

// Sums until the term drops below tol * partial past the integrand peak and
// the geometrically dominated tail is below 10 * tol * partial.
inline double truncated_power_sum(const SeriesQuery& q) {
  if (!(q.alpha > -1.0)) throw parameter_error("alpha must exceed -1");
  if (q.beta < 1) throw parameter_error("beta must be a positive integer");
  if (!(q.x > 0.0) || q.x >= 1.0) throw parameter_error("x must lie in (0,1)");
  if (!(q.tol > 0.0)) throw parameter_error("tolerance must be positive");

  const double lx = std::log(q.x);  // < 0
  const double peak =
      q.alpha <= 0.0 ? 0.0 : std::pow(q.alpha / (q.beta * -lx), 1.0 / q.beta);

  const bool a0 = q.alpha == 0.0;
  const bool a1 = q.alpha == 1.0;
  const bool a2 = q.alpha == 2.0;

  detail::Kahan acc;
  if (a0) acc.add(1.0);

  double px = 1.0;  // x^n when beta == 1, kept by one multiply per step
  for (long long n = 1;; ++n) {
    const double nd = static_cast<double>(n);
    double mag;
    if (q.beta == 1) {
      px *= q.x;
      if ((n & ((1 << 20) - 1)) == 0) px = std::exp(nd * lx);  // drift reset
      mag = px;
    } else {
      mag = std::exp(detail::int_pow(nd, q.beta) * lx);
    }
    const double weight = a0   ? 1.0
                          : a1 ? nd
                          : a2 ? nd * nd
                               : std::pow(nd, q.alpha);
    const double term = weight * mag;
    acc.add(term);
    if (nd <= peak || term >= q.tol * acc.sum) {
      if (n > 2'500'000'000LL) throw budget_error("series truncation budget");
      continue;
    }
    // Past the peak successive ratios only shrink, so the tail is dominated
    // by the geometric series with the current ratio r.
    const double grow = (nd + 1.0) / nd;
    const double wr = a0 ? 1.0 : a1 ? grow : a2 ? grow * grow : std::pow(grow, q.alpha);
    const double decay =
        q.beta == 1
            ? q.x
            : std::exp((detail::int_pow(nd + 1.0, q.beta) - detail::int_pow(nd, q.beta)) * lx);
    const double r = wr * decay;
    if (r < 1.0 && term * r / (1.0 - r) <= 10.0 * q.tol * acc.sum) break;
    if (n > 2'500'000'000LL) throw budget_error("series truncation budget");
  }
  return acc.sum;
}

// Gamma((1 + alpha) / beta) / (beta (1 - x)^((1 + alpha) / beta)).
inline double asymptotic_reference(double alpha, int beta, double x) {
  const double s = (1.0 + alpha) / beta;
  return std::tgamma(s) / (beta * std::pow(1.0 - x, s));
}

// Parameters shared by the damped hitting sum and the block weights.
// a <= 2c keeps the weight blocks [cn^2, cn^2 + an] disjoint.
struct BlockWeightQuery {
  double big_c = 1.0;  // > 0
  int a = 0;           // >= 0
  int c = 1;           // >= 1
  double eps = 1e-4;   // in (0,1)
};

namespace detail {

inline void validate(const BlockWeightQuery& q) {
  if (!(q.big_c > 0.0)) throw parameter_error("C must be positive");
  if (q.a < 0) throw parameter_error("a must be non-negative");
  if (q.c < 1) throw parameter_error("c must be a positive integer");
  if (q.a > 2 * q.c) throw parameter_error("a must not exceed 2c");
  if (!(q.eps > 0.0) || q.eps >= 1.0) throw parameter_error("eps must lie in (0,1)");
}

}  // namespace detail

// sum_{n >= 0} (1 - (1 - eps/C)^(an)) (1 - eps)^(cn^2).
inline double block_gap_sum(const BlockWeightQuery& q) {
  detail::validate(q);
  if (q.a == 0) return 0.0;
  const double lhit = std::log1p(-q.eps / q.big_c);
  const double lgau = std::log1p(-q.eps);
  detail::Kahan acc;
  for (long long n = 1;; ++n) {
    const double nd = static_cast<double>(n);
    const double gauss = std::exp(q.c * nd * nd * lgau);
    if (gauss < 1e-300) break;
    acc.add(-std::expm1(q.a * nd * lhit) * gauss);
    // The hitting factor is below 1, so the tail is at most the sum of the
    // remaining gaussian weights, itself geometrically dominated.
    const double g_next = std::exp(q.c * (nd + 1.0) * (nd + 1.0) * lgau);
    const double r = std::exp(q.c * (2.0 * nd + 3.0) * lgau);
    if (g_next / (1.0 - r) <= 1e-14 * acc.sum) break;
  }
  return acc.sum;
}

// Limit of block_gap_sum as eps -> 0.
inline double block_gap_limit(const BlockWeightQuery& q) {
  detail::validate(q);
  return q.a / (2.0 * q.big_c * q.c);
}

// omega_m = binom(an, k) (C-1)^(an-k) / C^an when m = cn^2 + k with
// 0 <= k <= an, and 0 elsewhere. Every complete block sums to 1; the
// function checks that identity itself.
inline std::vector<double> omega_weights(int a, int c, double big_c, int m_max) {
  if (a < 0) throw parameter_error("a must be non-negative");
  if (c < 1) throw parameter_error("c must be a positive integer");
  if (a > 2 * c) throw parameter_error("a must not exceed 2c: blocks would overlap");
  if (!(big_c > 0.0)) throw parameter_error("C must be positive");
  if (m_max < 0) throw parameter_error("m_max must be non-negative");

  std::vector<double> w(static_cast<std::size_t>(m_max) + 1, 0.0);
  const double log_c = std::log(big_c);
  const double log_cm1 = big_c == 1.0 ? 0.0 : std::log(std::fabs(big_c - 1.0));
  for (long long n = 0;; ++n) {
    const long long base = static_cast<long long>(c) * n * n;
    if (base > m_max) break;
    const long long an = static_cast<long long>(a) * n;
    double block = 0.0;
    for (long long k = 0; k <= an && base + k <= m_max; ++k) {
      const double lb = std::lgamma(an + 1.0) - std::lgamma(k + 1.0) -
                        std::lgamma(an - k + 1.0);
      double v;
      if (k == an) {
        v = std::exp(lb - an * log_c);
      } else if (big_c == 1.0) {
        v = 0.0;
      } else {
        v = std::exp(lb + (an - k) * log_cm1 - an * log_c);
        if (big_c < 1.0 && ((an - k) & 1)) v = -v;
      }
      w[static_cast<std::size_t>(base + k)] = v;
      block += v;
    }
    if (base + an <= m_max && std::fabs(block - 1.0) > 1e-9)
      throw std::logic_error("omega block failed to sum to one");
  }
  return w;
}

}  // namespace stoca
