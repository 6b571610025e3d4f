#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "stoca/errors.hpp"

namespace stoca {

using Symbol = std::uint8_t;

// Ordered finite alphabet. Symbols are dense indices 0..C-1; names are kept
// for rule files and CSV rendering only.
struct Alphabet {
  std::vector<std::string> names;

  Alphabet() = default;
  explicit Alphabet(std::vector<std::string> n) : names(std::move(n)) {
    if (names.empty()) throw config_error("alphabet must have at least one symbol");
    std::set<std::string> uniq(names.begin(), names.end());
    if (uniq.size() != names.size())
      throw config_error("alphabet symbols must be distinct");
    if (names.size() > 255) throw config_error("alphabet too large for Symbol");
  }

  int size() const { return static_cast<int>(names.size()); }

  std::optional<Symbol> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return static_cast<Symbol>(i);
    return std::nullopt;
  }

  bool operator==(const Alphabet& o) const { return names == o.names; }
};

inline Alphabet make_numeric_alphabet(int c) {
  std::vector<std::string> names;
  names.reserve(c);
  for (int i = 0; i < c; ++i) names.push_back(std::to_string(i));
  return Alphabet(std::move(names));
}

using Offset = std::vector<int>;

// Finite neighborhood in Z^d: distinct integer offsets, radius = max |coord|.
struct Neighborhood {
  int dimension = 1;
  std::vector<Offset> offsets;

  Neighborhood() = default;
  Neighborhood(int d, std::vector<Offset> offs)
      : dimension(d), offsets(std::move(offs)) {
    if (dimension < 1) throw config_error("neighborhood dimension must be >= 1");
    if (offsets.empty()) throw config_error("neighborhood must be nonempty");
    for (const auto& o : offsets)
      if (static_cast<int>(o.size()) != dimension)
        throw config_error("offset dimension mismatch");
    auto sorted = offsets;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw config_error("neighborhood offsets must be distinct");
  }

  int arity() const { return static_cast<int>(offsets.size()); }

  int radius() const {
    int r = 0;
    for (const auto& o : offsets)
      for (int c : o) r = std::max(r, std::abs(c));
    return r;
  }
};

inline Neighborhood make_interval_neighborhood(int lo, int hi) {
  std::vector<Offset> offs;
  for (int i = lo; i <= hi; ++i) offs.push_back({i});
  return Neighborhood(1, std::move(offs));
}

// Minkowski sum of two offset sets (deduplicated, sorted).
inline Neighborhood minkowski_sum(const Neighborhood& a, const Neighborhood& b) {
  if (a.dimension != b.dimension)
    throw config_error("minkowski_sum dimension mismatch");
  std::set<Offset> out;
  for (const auto& x : a.offsets)
    for (const auto& y : b.offsets) {
      Offset s(x.size());
      for (std::size_t k = 0; k < x.size(); ++k) s[k] = x[k] + y[k];
      out.insert(std::move(s));
    }
  return Neighborhood(a.dimension, std::vector<Offset>(out.begin(), out.end()));
}

// Dense-table CA. Tuple encoding is mixed-radix base C with the FIRST offset
// most significant, so table index = sum_k a_k * C^(r-1-k).
struct CellularAutomaton {
  Alphabet alphabet;
  Neighborhood neighborhood;
  std::vector<Symbol> table;

  CellularAutomaton() = default;
  CellularAutomaton(Alphabet a, Neighborhood n, std::vector<Symbol> t)
      : alphabet(std::move(a)), neighborhood(std::move(n)), table(std::move(t)) {
    const double want = std::pow(static_cast<double>(alphabet.size()),
                                 static_cast<double>(neighborhood.arity()));
    if (want > 1e8) throw budget_error("dense rule table too large");
    if (table.size() != static_cast<std::size_t>(want + 0.5))
      throw config_error("rule table length must be C^r");
    for (Symbol s : table)
      if (s >= alphabet.size()) throw config_error("rule table entry out of alphabet");
  }

  std::size_t tuple_index(const std::vector<Symbol>& tuple) const {
    std::size_t idx = 0;
    for (Symbol s : tuple) idx = idx * alphabet.size() + s;
    return idx;
  }

  Symbol apply(const std::vector<Symbol>& tuple) const {
    return table[tuple_index(tuple)];
  }
};

// Dense d-dimensional periodic configuration, row-major, wraps modulo sides.
struct TorusConfiguration {
  std::vector<int> sides;
  std::vector<Symbol> cells;

  TorusConfiguration() = default;
  TorusConfiguration(std::vector<int> shape, Symbol fill = 0)
      : sides(std::move(shape)) {
    std::size_t total = 1;
    for (int n : sides) {
      if (n < 1) throw config_error("torus side must be positive");
      total *= static_cast<std::size_t>(n);
    }
    cells.assign(total, fill);
  }

  int dimension() const { return static_cast<int>(sides.size()); }
  std::size_t size() const { return cells.size(); }

  std::size_t flat_index(const std::vector<int>& coord) const {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < sides.size(); ++k) {
      int c = coord[k] % sides[k];
      if (c < 0) c += sides[k];
      idx = idx * sides[k] + static_cast<std::size_t>(c);
    }
    return idx;
  }

  Symbol at(const std::vector<int>& coord) const { return cells[flat_index(coord)]; }
  void set(const std::vector<int>& coord, Symbol s) { cells[flat_index(coord)] = s; }

  bool operator==(const TorusConfiguration& o) const {
    return sides == o.sides && cells == o.cells;
  }
};

// Precomputed wrapped neighbor indices: plan[i*r + k] is the flat index of
// cell i's k-th neighborhood offset. Rebuilt per (shape, neighborhood) pair;
// stepping then touches only flat arrays.
struct StepPlan {
  std::vector<int> sides;
  int arity = 0;
  std::vector<std::uint32_t> neighbor;

  StepPlan() = default;
  StepPlan(const std::vector<int>& shape, const Neighborhood& nb) : sides(shape) {
    arity = nb.arity();
    if (static_cast<int>(shape.size()) != nb.dimension)
      throw config_error("step plan dimension mismatch");
    std::size_t total = 1;
    for (int n : shape) total *= static_cast<std::size_t>(n);
    neighbor.resize(total * static_cast<std::size_t>(arity));
    std::vector<int> coord(shape.size(), 0);
    for (std::size_t i = 0; i < total; ++i) {
      for (int k = 0; k < arity; ++k) {
        std::size_t idx = 0;
        for (std::size_t dmn = 0; dmn < shape.size(); ++dmn) {
          int c = (coord[dmn] + nb.offsets[k][dmn]) % shape[dmn];
          if (c < 0) c += shape[dmn];
          idx = idx * shape[dmn] + static_cast<std::size_t>(c);
        }
        neighbor[i * arity + k] = static_cast<std::uint32_t>(idx);
      }
      for (int dmn = static_cast<int>(shape.size()) - 1; dmn >= 0; --dmn) {
        if (++coord[dmn] < shape[dmn]) break;
        coord[dmn] = 0;
      }
    }
  }
};

inline void check_step_preconditions(const CellularAutomaton& ca,
                                     const TorusConfiguration& x) {
  if (x.dimension() != ca.neighborhood.dimension)
    throw config_error("configuration dimension does not match the rule");
  for (Symbol s : x.cells)
    if (s >= ca.alphabet.size())
      throw config_error("configuration symbol outside the rule's alphabet");
  const int need = 2 * ca.neighborhood.radius();
  for (int n : x.sides)
    if (n <= need)
      throw window_error("torus side must exceed twice the neighborhood radius");
}

inline TorusConfiguration step(const CellularAutomaton& ca,
                               const TorusConfiguration& x,
                               const StepPlan* plan = nullptr) {
  check_step_preconditions(ca, x);
  StepPlan local;
  if (plan == nullptr) {
    local = StepPlan(x.sides, ca.neighborhood);
    plan = &local;
  }
  TorusConfiguration out(x.sides);
  const int r = plan->arity;
  const int c = ca.alphabet.size();
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t idx = 0;
    const std::uint32_t* nb = &plan->neighbor[i * r];
    for (int k = 0; k < r; ++k) idx = idx * c + x.cells[nb[k]];
    out.cells[i] = ca.table[idx];
  }
  return out;
}

// Noiseless space-time diagram: configurations[t] for t = 0..T.
struct SpaceTimeDiagram {
  std::vector<TorusConfiguration> configurations;
};

inline SpaceTimeDiagram run_diagram(const CellularAutomaton& ca,
                                    TorusConfiguration x, int steps) {
  SpaceTimeDiagram d;
  d.configurations.push_back(x);
  StepPlan plan(x.sides, ca.neighborhood);
  for (int t = 0; t < steps; ++t) {
    x = step(ca, x, &plan);
    d.configurations.push_back(x);
  }
  return d;
}

// Neighborhood of F^t: Minkowski sum of t copies (t = 0 gives {0}).
inline Neighborhood iterated_neighborhood(const CellularAutomaton& ca, int t) {
  if (t < 0) throw parameter_error("iterated_neighborhood needs t >= 0");
  const int d = ca.neighborhood.dimension;
  Neighborhood acc(d, {Offset(d, 0)});
  for (int s = 0; s < t; ++s) acc = minkowski_sum(acc, ca.neighborhood);
  return acc;
}

namespace detail {

// Evaluates F^t at the origin from an assignment on the dependency window
// N^t, exactly (no wrap): simulate on the bounding box, shrinking each step.
inline Symbol iterate_on_window(const CellularAutomaton& ca, int t,
                                const std::vector<Offset>& window,
                                const std::vector<Symbol>& assignment) {
  const int d = ca.neighborhood.dimension;
  std::vector<int> lo(d, 0), hi(d, 0);
  for (const auto& off : ca.neighborhood.offsets)
    for (int k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], off[k]);
      hi[k] = std::max(hi[k], off[k]);
    }
  // Box at depth s (s steps remaining) spans [s*lo_k, s*hi_k] per axis.
  auto box_cells = [&](int s) {
    std::vector<Offset> cells;
    Offset cur(d);
    for (int k = 0; k < d; ++k) cur[k] = s * lo[k];
    while (true) {
      cells.push_back(cur);
      int k = d - 1;
      while (k >= 0) {
        if (++cur[k] <= s * hi[k]) break;
        cur[k] = s * lo[k];
        --k;
      }
      if (k < 0) break;
    }
    return cells;
  };
  std::map<Offset, Symbol> value;
  for (const auto& cell : box_cells(t)) value[cell] = 0;
  for (std::size_t i = 0; i < window.size(); ++i) value[window[i]] = assignment[i];
  for (int s = t; s >= 1; --s) {
    std::map<Offset, Symbol> next;
    for (const auto& cell : box_cells(s - 1)) {
      std::vector<Symbol> tuple;
      tuple.reserve(ca.neighborhood.arity());
      for (const auto& off : ca.neighborhood.offsets) {
        Offset p(d);
        for (int k = 0; k < d; ++k) p[k] = cell[k] + off[k];
        tuple.push_back(value.at(p));
      }
      next[cell] = ca.apply(tuple);
    }
    value = std::move(next);
  }
  return value.at(Offset(d, 0));
}

}  // namespace detail

struct NilpotencyResult {
  int index = 0;
  Symbol quiescent = 0;
};

// Least N <= horizon with F^N constant, certified by enumerating every
// assignment on the dependency window N^N. Enumeration size is C^{m_N};
// when that exceeds the budget the answer is undetermined (budget_error),
// which is distinct from "no such N <= horizon" (nullopt).
inline std::optional<NilpotencyResult> detect_nilpotency(
    const CellularAutomaton& ca, int horizon, double budget = 2e6) {
  if (horizon < 1) throw parameter_error("detect_nilpotency needs horizon >= 1");
  bool budget_hit = false;
  for (int n = 1; n <= horizon; ++n) {
    const Neighborhood win = iterated_neighborhood(ca, n);
    const double count = std::pow(static_cast<double>(ca.alphabet.size()),
                                  static_cast<double>(win.arity()));
    if (count > budget) {
      budget_hit = true;
      continue;
    }
    const auto total = static_cast<std::size_t>(count + 0.5);
    std::vector<Symbol> assignment(win.offsets.size(), 0);
    std::optional<Symbol> common;
    bool constant = true;
    for (std::size_t it = 0; it < total && constant; ++it) {
      const Symbol out =
          detail::iterate_on_window(ca, n, win.offsets, assignment);
      if (!common) common = out;
      else if (*common != out) constant = false;
      for (int k = static_cast<int>(assignment.size()) - 1; k >= 0; --k) {
        if (++assignment[k] < ca.alphabet.size()) break;
        assignment[k] = 0;
      }
    }
    if (constant) return NilpotencyResult{n, *common};
  }
  if (budget_hit)
    throw budget_error("nilpotency undetermined: dependency window exceeds budget");
  return std::nullopt;
}

// Built-in rules used across tests and experiments.

inline CellularAutomaton make_constant_rule(int c, Symbol value, int dimension = 1) {
  Alphabet a = make_numeric_alphabet(c);
  Neighborhood n(dimension, {Offset(dimension, 0)});
  return CellularAutomaton(a, n, std::vector<Symbol>(c, value));
}

inline CellularAutomaton make_identity_rule(int c, int dimension = 1) {
  Alphabet a = make_numeric_alphabet(c);
  Neighborhood n(dimension, {Offset(dimension, 0)});
  std::vector<Symbol> t(c);
  std::iota(t.begin(), t.end(), Symbol{0});
  return CellularAutomaton(a, n, t);
}

// Multiplicative rule on {-1,0,1}: F(x)_i = x_i * x_{i+1}. Symbol indices
// 0,1,2 stand for -1,0,+1; index 1 (the 0 of the product) is spreading.
inline CellularAutomaton make_product_rule() {
  Alphabet a({"-1", "0", "1"});
  Neighborhood n(1, {{0}, {1}});
  auto to_int = [](Symbol s) { return static_cast<int>(s) - 1; };
  auto to_sym = [](int v) { return static_cast<Symbol>(v + 1); };
  std::vector<Symbol> t(9);
  for (Symbol x = 0; x < 3; ++x)
    for (Symbol y = 0; y < 3; ++y) t[x * 3 + y] = to_sym(to_int(x) * to_int(y));
  return CellularAutomaton(a, n, t);
}

// Binary spreading rule on {0,1} with interval neighborhood of length r:
// output is 0 iff any neighbor is 0.
inline CellularAutomaton make_binary_spreading_rule(int r = 2) {
  if (r < 1) throw parameter_error("spreading rule needs r >= 1");
  Alphabet a({"0", "1"});
  Neighborhood n = make_interval_neighborhood(0, r - 1);
  std::vector<Symbol> t(std::size_t{1} << r);
  for (std::size_t idx = 0; idx < t.size(); ++idx) {
    bool any_zero = false;
    for (int k = 0; k < r; ++k) {
      const auto digit = (idx >> (r - 1 - k)) & 1u;
      if (digit == 0) any_zero = true;
    }
    t[idx] = any_zero ? 0 : 1;
  }
  return CellularAutomaton(a, n, t);
}

}  // namespace stoca
