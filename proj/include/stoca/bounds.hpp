#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stoca/errors.hpp"

namespace stoca {

// Inputs to the nilpotent-rule distance bound: the rule reaches a constant
// at step N, and C accumulates the iterated neighborhood sizes m_0..m_{N-1}.
struct NilpotentBoundParams {
  int nilpotency_index = 1;
  std::vector<int> neighborhood_sizes;  // m_0 .. m_{N-1}
  int window_size = 1;

  NilpotentBoundParams(int n, std::vector<int> m, int a)
      : nilpotency_index(n), neighborhood_sizes(std::move(m)), window_size(a) {
    if (n < 1 || a < 1) throw parameter_error("bound needs N >= 1 and |A| >= 1");
    if (static_cast<int>(neighborhood_sizes.size()) != n)
      throw parameter_error("need one neighborhood size per step");
    if (neighborhood_sizes[0] != 1)
      throw parameter_error("m_0 must be 1");
    for (int v : neighborhood_sizes)
      if (v < 1) throw parameter_error("neighborhood sizes must be positive");
    if (constant() < n) throw parameter_error("C must dominate N");
  }

  long long constant() const {
    long long c = 0;
    for (int v : neighborhood_sizes) c += v;
    return c;
  }
};

struct NilpotentBound {
  double bound = 0.0;
  double linear = 0.0;
};

inline NilpotentBound nilpotent_bound(const NilpotentBoundParams& params,
                                      double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw parameter_error("eps must lie in [0,1]");
  const double exponent =
      static_cast<double>(params.window_size) * params.constant();
  NilpotentBound out;
  out.bound = -std::expm1(exponent * std::log1p(-eps));
  if (eps == 1.0) out.bound = 1.0;
  out.linear = exponent * eps;
  if (out.bound > out.linear + 1e-12)
    throw std::logic_error("bound exceeded its own linearization");
  return out;
}

// Inputs to the one-dimensional spreading bound: interval neighborhood of
// length r, observation window of size m. The constant counts cells in the
// backward cone until it has m branches: C = sum_{t=1..t_m} (t(r-1)+1).
struct SpreadingBoundParams {
  int r = 2;
  int window_size = 1;

  SpreadingBoundParams(int r_, int m_) : r(r_), window_size(m_) {
    if (r < 2) throw parameter_error("spreading bound needs r >= 2");
    if (window_size < 1) throw parameter_error("window size must be positive");
  }

  int t_m() const { return (window_size - 1 + r - 2) / (r - 1); }

  long long big_c() const {
    long long c = 0;
    for (int t = 1; t <= t_m(); ++t)
      c += static_cast<long long>(t) * (r - 1) + 1;
    return c;
  }
};

struct SpreadingBound {
  double bound = 0.0;
  double asymptote = 0.0;
  bool vacuous = false;
};

inline SpreadingBound spreading1d_bound(const SpreadingBoundParams& params,
                                        double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw parameter_error("eps must lie in [0,1]");
  const double c = static_cast<double>(params.big_c());
  SpreadingBound out;
  out.asymptote = (c + 27.0) * eps;
  if (eps >= 1.0 / 27.0) {
    out.bound = 1.0;
    out.vacuous = true;
    return out;
  }
  const double percolation_factor = 1.0 - 27.0 * eps / (1.0 - 27.0 * eps);
  const double raw = 1.0 - std::pow(1.0 - eps, c) * percolation_factor;
  if (raw >= 1.0) {
    out.bound = 1.0;
    out.vacuous = true;
  } else {
    out.bound = raw;
  }
  return out;
}

inline double binary_spreading_bound(int window_size, int neighborhood_size,
                                     double p, double q) {
  if (window_size < 1 || neighborhood_size < 1)
    throw parameter_error("bound needs |A| >= 1 and |N| >= 1");
  if (q <= 0.0) throw parameter_error("bound needs q > 0");
  if (!(p >= 0.0 && p < 0.5 && q < 0.5))
    throw parameter_error("bound needs p, q in [0, 1/2)");
  const double cells = std::pow(2.0, window_size) - 1.0;
  return cells * std::pow(p, neighborhood_size) / q;
}

}  // namespace stoca
