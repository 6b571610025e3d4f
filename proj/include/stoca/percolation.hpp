#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "stoca/errors.hpp"
#include "stoca/rng.hpp"

namespace stoca {

// Truncated dependency graph of the 1d spreading rule, with the length-r
// neighborhood decomposed into r-1 elementary {0,1} steps. True level t holds
// (r-1)t + 1 cell vertices; every cell vertex carries one error edge (the
// in/out split). Intermediate sub-level vertices are pass-through, so only
// widths and counts are materialized.
struct SpreadGraph {
  int r = 2;
  int T = 1;

  int width(int t) const { return (r - 1) * t + 1; }
  int sub_steps() const { return (r - 1) * T; }

  long long cell_vertex_count() const {
    long long n = 0;
    for (int t = 0; t <= T; ++t) n += width(t);
    return n;
  }

  long long intermediate_vertex_count() const {
    // Sub-level rows strictly between true levels, r-2 of them per gap.
    long long n = 0;
    for (int t = 0; t < T; ++t)
      for (int s = 1; s <= r - 2; ++s) n += width(t) + s;
    return n;
  }

  long long error_edge_count() const { return cell_vertex_count(); }

  long long tilted_edge_count() const {
    // Each row transition adds one cell of width; every upper vertex takes
    // two lower neighbors.
    long long n = 0;
    for (int t = 0; t < T; ++t)
      for (int s = 0; s < r - 1; ++s) n += 2 * (width(t) + s);
    return n;
  }
};

inline SpreadGraph build_spread_graph(int r, int T) {
  if (r < 2) throw parameter_error("spread graph needs r >= 2");
  if (T < 1) throw parameter_error("spread graph needs T >= 1");
  return SpreadGraph{r, T};
}

// Error-edge states for one trial: open[t][i] for every cell vertex. Tilted
// edges are always passable in the upward direction and never sampled.
struct EdgeSample {
  int T = 0;
  std::vector<std::vector<bool>> open;
};

inline EdgeSample sample_edges(const SpreadGraph& g, double eps,
                               std::uint64_t seed, std::uint32_t trial) {
  if (!(eps >= 0.0 && eps < 1.0))
    throw parameter_error("edge sample needs eps in [0,1)");
  CounterRng rng{seed, Stream::kPercolation};
  EdgeSample s;
  s.T = g.T;
  s.open.resize(g.T + 1);
  for (int t = 0; t <= g.T; ++t) {
    s.open[t].resize(g.width(t));
    for (int i = 0; i < g.width(t); ++i)
      s.open[t][i] = rng.uniform(trial, static_cast<std::uint32_t>(t),
                                 static_cast<std::uint32_t>(i)) >= eps;
  }
  return s;
}

// True iff an open path runs from some depth-T cell vertex up to the root.
// A path enters each cell vertex from below and must cross that vertex's
// error edge to continue, so it consumes the error edges of levels T-1..0;
// the starting vertices at level T are entered on their outgoing side.
inline bool has_open_path_to_root(const SpreadGraph& g, const EdgeSample& s) {
  if (s.T < g.T) throw parameter_error("edge sample shallower than the graph");
  std::vector<char> reach(g.width(g.T), 1);
  for (int t = g.T - 1; t >= 0; --t) {
    std::vector<char> next(g.width(t), 0);
    for (int i = 0; i < g.width(t); ++i) {
      if (!s.open[t][i]) continue;
      for (int j = i; j <= i + g.r - 1; ++j)
        if (reach[j]) {
          next[i] = 1;
          break;
        }
    }
    reach = std::move(next);
  }
  return reach[0] != 0;
}

struct PathEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

inline PathEstimate estimate_path_probability(int r, int T, double eps,
                                              int trials, std::uint64_t seed) {
  if (trials < 1) throw parameter_error("need at least one trial");
  const SpreadGraph g = build_spread_graph(r, T);
  long long hits = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const auto s = sample_edges(g, eps, seed, static_cast<std::uint32_t>(trial));
    if (has_open_path_to_root(g, s)) ++hits;
  }
  PathEstimate out;
  out.estimate = static_cast<double>(hits) / trials;
  out.stderr_ =
      std::sqrt(std::max(out.estimate * (1.0 - out.estimate), 0.0) / trials);
  return out;
}

// Lower bound on the open-path probability from the contour-counting
// argument; meaningless (clamped to zero) once 27 eps reaches 1/2.
inline double path_probability_bound(double eps) {
  if (!(eps >= 0.0)) throw parameter_error("eps must be nonnegative");
  if (eps >= 1.0 / 27.0) return 0.0;
  return std::max(0.0, 1.0 - 27.0 * eps / (1.0 - 27.0 * eps));
}

// Dual contours for r = 2. Dual vertices sit at W(a,b), a >= 0, 0 <= b <= a;
// a circuit starts and finishes at the top cell W(0,0), oriented so the root
// stays on its left. Moves and their validity:
//   right:     (a,b) -> (a,b+1), needs b < a; crosses error edge (a-1, b)
//   down-left: (a,b) -> (a+1,b), always inside
//   up-left:   (a,b) -> (a-1,b-1), needs a >= 1, b >= 1
// Closing forces equal counts of the three moves, so length = 3k where k is
// the number of rightward moves.
struct Contour {
  enum Move : std::uint8_t { kRight = 0, kDownLeft = 1, kUpLeft = 2 };
  std::vector<Move> moves;

  // Error edges (level, position) the contour crosses, one per right move.
  std::vector<std::pair<int, int>> crossings() const {
    std::vector<std::pair<int, int>> out;
    int a = 0, b = 0;
    for (Move m : moves) {
      if (m == kRight) {
        out.emplace_back(a - 1, b);
        ++b;
      } else if (m == kDownLeft) {
        ++a;
      } else {
        --a;
        --b;
      }
    }
    return out;
  }
};

namespace detail {

inline void contour_dfs(int a, int b, int k, int row_cap,
                        std::vector<Contour::Move>& path,
                        std::vector<char>& visited, int stride, int nright,
                        int ndown, int nup, std::vector<Contour>* out,
                        long long& count) {
  // Any return to the top cell closes the circuit (displacement algebra makes
  // the move counts equal automatically); record only exact-k circuits.
  struct Try {
    Contour::Move m;
    int na, nb;
  };
  const Try tries[3] = {{Contour::kRight, a, b + 1},
                        {Contour::kDownLeft, a + 1, b},
                        {Contour::kUpLeft, a - 1, b - 1}};
  for (const auto& t : tries) {
    if (t.m == Contour::kRight && !(b < a)) continue;
    if (t.m == Contour::kUpLeft && !(a >= 1 && b >= 1)) continue;
    if (t.na > row_cap) continue;
    const int nr = nright + (t.m == Contour::kRight);
    const int nd = ndown + (t.m == Contour::kDownLeft);
    const int nu = nup + (t.m == Contour::kUpLeft);
    if (nr > k || nd > k || nu > k) continue;
    if (t.na == 0 && t.nb == 0) {
      if (nr == k && nd == k && nu == k) {
        ++count;
        if (out) {
          path.push_back(t.m);
          out->push_back(Contour{path});
          path.pop_back();
        }
      }
      continue;
    }
    const int id = t.na * stride + t.nb;
    if (visited[id]) continue;
    visited[id] = 1;
    path.push_back(t.m);
    contour_dfs(t.na, t.nb, k, row_cap, path, visited, stride, nr, nd, nu, out,
                count);
    path.pop_back();
    visited[id] = 0;
  }
}

}  // namespace detail

inline std::vector<Contour> enumerate_contours(int k, int row_cap) {
  if (k < 1) throw parameter_error("contours need k >= 1");
  std::vector<Contour> out;
  std::vector<Contour::Move> path;
  const int rows = k + 2;
  std::vector<char> visited(static_cast<std::size_t>(rows) * rows, 0);
  visited[0] = 1;
  long long count = 0;
  detail::contour_dfs(0, 0, k, std::min(row_cap, k), path, visited, rows, 0, 0,
                      0, &out, count);
  return out;
}

inline long long count_contours(int k, int budget = 6) {
  if (k < 1) throw parameter_error("contours need k >= 1");
  if (k > budget) throw budget_error("contour enumeration budget exceeded");
  std::vector<Contour::Move> path;
  const int rows = k + 2;
  std::vector<char> visited(static_cast<std::size_t>(rows) * rows, 0);
  visited[0] = 1;
  long long count = 0;
  detail::contour_dfs(0, 0, k, k, path, visited, rows, 0, 0, 0, nullptr, count);
  return count;
}

}  // namespace stoca
