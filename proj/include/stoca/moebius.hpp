#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "stoca/errors.hpp"
#include "stoca/measure.hpp"

namespace stoca {

// chi_A(x) = 1 iff x is 1 on every coordinate of A; chi of the empty set is
// the constant 1.
struct ChiFunction {
  std::vector<int> support;  // sorted, distinct

  bool evaluate(const std::set<int>& ones) const {
    for (int i : support)
      if (ones.count(i) == 0) return false;
    return true;
  }
};

// Finitely supported expansion h = sum_A hhat_A chi_A, keyed by sorted
// coordinate sets. The semi-norm ignores the constant term.
struct MoebiusObservable {
  std::map<std::vector<int>, double> coefficients;

  double constant_term() const {
    const auto it = coefficients.find({});
    return it == coefficients.end() ? 0.0 : it->second;
  }

  double seminorm() const {
    double s = 0.0;
    for (const auto& [key, c] : coefficients)
      if (!key.empty()) s += std::abs(c);
    return s;
  }

  double evaluate(const std::set<int>& ones) const {
    double v = 0.0;
    for (const auto& [key, c] : coefficients) {
      bool inside = true;
      for (int i : key)
        if (ones.count(i) == 0) {
          inside = false;
          break;
        }
      if (inside) v += c;
    }
    return v;
  }

  void drop_tiny(double tol = 0.0) {
    for (auto it = coefficients.begin(); it != coefficients.end();)
      it = std::abs(it->second) <= tol ? coefficients.erase(it) : std::next(it);
  }
};

// Indicator of the all-zero word on a window, by inclusion-exclusion:
// hhat_I = (-1)^{|I|} over every I inside the window.
inline MoebiusObservable moebius_decompose_zero_cylinder(const WindowSpec& window) {
  if (window.dimension != 1)
    throw parameter_error("chi machinery covers one-dimensional windows");
  const int m = window.size();
  if (m > 20) throw budget_error("zero cylinder expansion too large");
  std::vector<int> cells;
  for (const auto& c : window.cells) cells.push_back(c[0]);
  std::sort(cells.begin(), cells.end());
  MoebiusObservable h;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> key;
    for (int k = 0; k < m; ++k)
      if (mask & (1u << k)) key.push_back(cells[k]);
    h.coefficients[key] = (std::popcount(mask) % 2 == 0) ? 1.0 : -1.0;
  }
  return h;
}

namespace detail {

inline std::vector<int> minkowski_cells(const std::vector<int>& a,
                                        const std::vector<int>& nbhd) {
  std::set<int> out;
  for (int i : a)
    for (int k : nbhd) out.insert(i + k);
  return std::vector<int>(out.begin(), out.end());
}

// Channel expansion of chi over a fixed cell set J:
// sum over subsets S of J with weight p^{|J \ S|} (1-p-q)^{|S|}.
inline void expand_channel_subsets(const std::vector<int>& j_cells, double coeff,
                                   double p, double one_pq,
                                   std::map<std::vector<int>, double>& into) {
  const int n = static_cast<int>(j_cells.size());
  if (n > 26) throw budget_error("chi image support too large");
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> key;
    for (int k = 0; k < n; ++k)
      if (mask & (1u << k)) key.push_back(j_cells[k]);
    const int sz = std::popcount(mask);
    into[key] += coeff * std::pow(p, n - sz) * std::pow(one_pq, sz);
  }
}

}  // namespace detail

// Two candidate one-step images of chi_A under the noisy spreading dynamics.
// The narrow form expands over subsets of A alone; the spread form expands
// over subsets of A + N. Exhaustive enumeration (see the tests) confirms the
// spread form; chi_image below therefore uses it.
struct ChiImagePair {
  MoebiusObservable narrow;  // subsets of A
  MoebiusObservable spread;  // subsets of A + N
};

inline ChiImagePair apply_perturbed_to_chi(const std::vector<int>& support,
                                           const std::vector<int>& nbhd,
                                           double p, double q) {
  if (nbhd.empty()) throw parameter_error("neighborhood must be nonempty");
  if (!(p >= 0.0 && q >= 0.0 && p + q <= 1.0))
    throw parameter_error("need p, q >= 0 with p + q <= 1");
  std::vector<int> a = support;
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());

  ChiImagePair out;
  if (a.empty()) {
    // chi of the empty set is constant 1 and stays put in both forms.
    out.narrow.coefficients[{}] = 1.0;
    out.spread.coefficients[{}] = 1.0;
    return out;
  }
  detail::expand_channel_subsets(a, 1.0, p, 1.0 - p - q,
                                 out.narrow.coefficients);
  detail::expand_channel_subsets(detail::minkowski_cells(a, nbhd), 1.0, p,
                                 1.0 - p - q, out.spread.coefficients);
  return out;
}

// The arbitrated one-step image: noise hits the configuration, then the
// spreading rule reads the struck cells, so the support widens to A + N.
inline MoebiusObservable chi_image(const MoebiusObservable& h,
                                   const std::vector<int>& nbhd, double p,
                                   double q) {
  if (!(p >= 0.0 && q >= 0.0 && p + q <= 1.0))
    throw parameter_error("need p, q >= 0 with p + q <= 1");
  MoebiusObservable out;
  for (const auto& [key, c] : h.coefficients) {
    if (key.empty()) {
      out.coefficients[{}] += c;
      continue;
    }
    detail::expand_channel_subsets(detail::minkowski_cells(key, nbhd), c, p,
                                   1.0 - p - q, out.coefficients);
  }
  out.drop_tiny(0.0);
  return out;
}

struct MoebiusIterationRow {
  int t = 0;
  double seminorm = 0.0;
  double constant_term = 0.0;
  bool exact = true;
};

// Iterates the zero-cylinder observable under the arbitrated image map.
// Evaluating h^t at the all-zero configuration kills every nonconstant term,
// so the constant term IS the stay-probability of the all-zero window and
// 1 - constant_term bounds the observable distance at time t.
//
// Supports grow like A + tN, so exact iteration runs while the projected
// subset-enumeration work fits the budget; later rows carry the analytic
// envelope: seminorm decays by (1-q) per step and the constant term moves by
// at most p^{|N|} seminorm per step. The hot loop works on bitmasks relative
// to a sliding base cell; the map-keyed chi_image above is the readable twin
// the tests compare against.
inline std::vector<MoebiusIterationRow> iterate_moebius_bound(
    const WindowSpec& window, double p, double q, int t_max,
    const std::vector<int>& nbhd = {0, 1}, double op_budget = 1e8) {
  if (q <= 0.0) throw parameter_error("iteration needs q > 0");
  if (!(p >= 0.0 && p + q <= 1.0))
    throw parameter_error("need p >= 0 with p + q <= 1");
  if (t_max < 0) throw parameter_error("t_max must be nonnegative");
  if (nbhd.empty()) throw parameter_error("neighborhood must be nonempty");

  const int min_n = *std::min_element(nbhd.begin(), nbhd.end());
  std::vector<int> shifts;
  for (int k : nbhd) shifts.push_back(k - min_n);

  double pw_p[64], pw_pq[64];
  pw_p[0] = pw_pq[0] = 1.0;
  for (int k = 1; k < 64; ++k) {
    pw_p[k] = pw_p[k - 1] * p;
    pw_pq[k] = pw_pq[k - 1] * (1.0 - p - q);
  }
  const double pn = std::pow(p, static_cast<double>(nbhd.size()));

  // Zero-cylinder start, rebased so the leftmost window cell is bit 0.
  const MoebiusObservable h0 = moebius_decompose_zero_cylinder(window);
  int base = window.cells[0][0];
  for (const auto& c : window.cells) base = std::min(base, c[0]);
  std::unordered_map<std::uint64_t, double> cur;
  for (const auto& [key, c] : h0.coefficients) {
    std::uint64_t mask = 0;
    for (int i : key) mask |= std::uint64_t{1} << (i - base);
    cur[mask] = c;
  }

  auto seminorm_of = [](const std::unordered_map<std::uint64_t, double>& m) {
    double s = 0.0;
    for (const auto& [mask, c] : m)
      if (mask) s += std::abs(c);
    return s;
  };
  auto constant_of = [](const std::unordered_map<std::uint64_t, double>& m) {
    const auto it = m.find(0);
    return it == m.end() ? 0.0 : it->second;
  };

  std::vector<MoebiusIterationRow> rows;
  rows.push_back({0, seminorm_of(cur), constant_of(cur), true});

  double ops_used = 0.0;
  bool exact_phase = true;
  for (int t = 1; t <= t_max; ++t) {
    if (exact_phase) {
      double projected = 0.0;
      bool representable = true;
      for (const auto& [mask, c] : cur) {
        if (!mask) continue;
        std::uint64_t j = 0;
        for (int s : shifts) {
          if (s > 0 && (mask >> (63 - s)) != 0) representable = false;
          j |= mask << s;
        }
        projected += std::pow(2.0, static_cast<double>(std::popcount(j)));
      }
      if (!representable || ops_used + projected > op_budget)
        exact_phase = false;
      else
        ops_used += projected;
    }
    const auto& prev = rows.back();
    if (exact_phase) {
      std::unordered_map<std::uint64_t, double> next;
      next.reserve(cur.size() * 2);
      for (const auto& [mask, c] : cur) {
        if (!mask) {
          next[0] += c;
          continue;
        }
        std::uint64_t j = 0;
        for (int s : shifts) j |= mask << s;
        const int nj = std::popcount(j);
        std::uint64_t sub = j;
        while (true) {
          const int ns = std::popcount(sub);
          next[sub] += c * pw_p[nj - ns] * pw_pq[ns];
          if (sub == 0) break;
          sub = (sub - 1) & j;
        }
      }
      cur = std::move(next);
      base += min_n;
      MoebiusIterationRow row{t, seminorm_of(cur), constant_of(cur), true};
      if (row.seminorm > (1.0 - q) * prev.seminorm + 1e-9 * (1.0 + prev.seminorm))
        throw std::logic_error("seminorm contraction violated");
      if (std::abs(row.constant_term - prev.constant_term) >
          pn * prev.seminorm + 1e-12)
        throw std::logic_error("constant-term drift bound violated");
      rows.push_back(row);
    } else {
      rows.push_back({t, (1.0 - q) * prev.seminorm,
                      prev.constant_term - pn * prev.seminorm, false});
    }
  }
  return rows;
}

}  // namespace stoca
