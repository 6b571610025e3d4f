#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "stoca/core.hpp"
#include "stoca/errors.hpp"
#include "stoca/noise.hpp"
#include "stoca/rng.hpp"

namespace stoca {

// Finite set of cells whose joint symbol content we observe.
struct WindowSpec {
  int dimension = 1;
  std::vector<Offset> cells;

  WindowSpec() = default;
  WindowSpec(int d, std::vector<Offset> c) : dimension(d), cells(std::move(c)) {
    if (cells.empty()) throw window_error("window must contain a cell");
    for (const auto& o : cells)
      if (static_cast<int>(o.size()) != dimension)
        throw window_error("window cell dimension mismatch");
    std::set<Offset> uniq(cells.begin(), cells.end());
    if (uniq.size() != cells.size())
      throw window_error("window cells must be distinct");
  }

  int size() const { return static_cast<int>(cells.size()); }

  int span(int axis) const {
    int lo = cells[0][axis], hi = cells[0][axis];
    for (const auto& c : cells) {
      lo = std::min(lo, c[axis]);
      hi = std::max(hi, c[axis]);
    }
    return hi - lo;
  }
};

inline WindowSpec make_window1d(int length) {
  if (length < 1) throw window_error("window length must be positive");
  std::vector<Offset> cells;
  for (int i = 0; i < length; ++i) cells.push_back({i});
  return WindowSpec(1, std::move(cells));
}

// The observation must fit strictly inside the torus with room for one
// neighborhood radius of slack on both sides.
inline void check_window(const WindowSpec& w, const std::vector<int>& sides,
                         int radius) {
  if (static_cast<int>(sides.size()) != w.dimension)
    throw window_error("window dimension does not match the torus");
  for (int axis = 0; axis < w.dimension; ++axis)
    if (w.span(axis) + 2 * radius >= sides[axis])
      throw window_error("window plus radius margin does not fit the torus");
}

// Distribution over window words. Words are mixed-radix encoded with the
// first window cell most significant, matching the rule-table convention.
struct CylinderDistribution {
  WindowSpec window;
  Alphabet alphabet;
  std::vector<double> probs;
  std::vector<double> stderrs;  // empty for exact distributions
  double sample_count = 0.0;

  void validate(double tol = 1e-9) const {
    double sum = 0.0;
    for (double p : probs) {
      if (p < -tol) throw config_error("negative cylinder probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol)
      throw config_error("cylinder distribution does not sum to one");
  }

  std::string render_word(std::size_t idx) const {
    const int c = alphabet.size();
    std::vector<Symbol> word(window.size());
    for (int k = window.size() - 1; k >= 0; --k) {
      word[k] = static_cast<Symbol>(idx % c);
      idx /= c;
    }
    std::string out;
    for (int k = 0; k < window.size(); ++k) {
      if (k) out += "|";
      out += alphabet.names[word[k]];
    }
    return out;
  }
};

inline double tv_distance_on_window(const CylinderDistribution& a,
                                    const CylinderDistribution& b) {
  if (a.window.cells != b.window.cells || a.alphabet.size() != b.alphabet.size())
    throw window_error("total variation needs identical windows");
  double sum = 0.0;
  for (std::size_t k = 0; k < a.probs.size(); ++k)
    sum += std::abs(a.probs[k] - b.probs[k]);
  return 0.5 * sum;
}

// Distance to the point mass on the all-zero word; word 0 is all zeros.
inline double dirac_distance(const CylinderDistribution& mu) {
  return 1.0 - mu.probs[0];
}

inline int default_burn_in(int side, int radius) {
  return 50 * side * std::max(radius, 1);
}
inline int default_thinning(int side) { return side; }

// Runs independent chains and hands every retained sample to a callback.
// Stepper: (state, t, trial) -> state. Init: (trial) -> state.
template <class State, class Init, class Stepper, class OnSample>
void run_chains(Init&& initial, Stepper&& advance, int burn_in, int samples,
                int thinning, int trials, OnSample&& on_sample) {
  if (burn_in < 0 || samples < 1 || thinning < 1 || trials < 1)
    throw parameter_error("chain schedule must be positive");
  for (int trial = 0; trial < trials; ++trial) {
    State x = initial(trial);
    std::uint32_t t = 0;
    for (int b = 0; b < burn_in; ++b)
      x = advance(std::move(x), t++, static_cast<std::uint32_t>(trial));
    for (int s = 0; s < samples; ++s) {
      for (int k = 0; k < thinning; ++k)
        x = advance(std::move(x), t++, static_cast<std::uint32_t>(trial));
      on_sample(x, trial, s);
    }
  }
}

inline TorusConfiguration random_initial(const Alphabet& alphabet,
                                         const std::vector<int>& sides,
                                         std::uint64_t seed, std::uint32_t trial) {
  TorusConfiguration x(sides);
  CounterRng rng{seed, Stream::kInitial};
  for (std::size_t i = 0; i < x.size(); ++i)
    x.cells[i] = static_cast<Symbol>(
        std::min<int>(alphabet.size() - 1,
                      static_cast<int>(rng.uniform(trial, 0, static_cast<std::uint32_t>(i)) *
                                       alphabet.size())));
  return x;
}

// Generic Monte Carlo cylinder estimate; the embedding module reuses this
// with its own stepper. Effective sample size discounts correlated samples
// when the thinning gap is below one torus side.
template <class Init, class Stepper>
CylinderDistribution estimate_invariant_with(Init&& initial, Stepper&& advance,
                                             const Alphabet& alphabet,
                                             const WindowSpec& window,
                                             const std::vector<int>& sides,
                                             int burn_in, int samples,
                                             int thinning, int trials) {
  const int c = alphabet.size();
  std::size_t words = 1;
  for (int k = 0; k < window.size(); ++k) words *= static_cast<std::size_t>(c);
  std::vector<double> counts(words, 0.0);

  run_chains<TorusConfiguration>(
      initial, advance, burn_in, samples, thinning, trials,
      [&](const TorusConfiguration& x, int, int) {
        std::size_t idx = 0;
        for (const auto& cell : window.cells) idx = idx * c + x.at(cell);
        counts[idx] += 1.0;
      });

  const double total = static_cast<double>(samples) * trials;
  const int min_side = *std::min_element(sides.begin(), sides.end());
  const double n_eff =
      total * std::min(1.0, static_cast<double>(thinning) / min_side);

  CylinderDistribution out;
  out.window = window;
  out.alphabet = alphabet;
  out.probs.resize(words);
  out.stderrs.resize(words);
  out.sample_count = n_eff;
  for (std::size_t k = 0; k < words; ++k) {
    const double p = counts[k] / total;
    out.probs[k] = p;
    out.stderrs[k] = std::sqrt(std::max(p * (1.0 - p), 0.0) / n_eff);
  }
  out.validate();
  return out;
}

inline CylinderDistribution estimate_invariant(const PerturbedAutomaton& pa,
                                               const WindowSpec& window,
                                               const std::vector<int>& sides,
                                               int burn_in, int samples,
                                               int thinning, int trials,
                                               std::uint64_t seed) {
  check_window(window, sides, pa.automaton.neighborhood.radius());
  const auto field =
      make_error_field(seed, pa.epsilon, pa.automaton.alphabet.size());
  StepPlan plan(sides, pa.automaton.neighborhood);
  return estimate_invariant_with(
      [&](std::uint32_t trial) {
        return random_initial(pa.automaton.alphabet, sides, seed, trial);
      },
      [&](TorusConfiguration x, std::uint32_t t, std::uint32_t trial) {
        return sample_step(pa, x, field, t, trial, &plan);
      },
      pa.automaton.alphabet, window, sides, burn_in, samples, thinning, trials);
}

// Exact stationary distribution of the full finite chain, found by power
// iteration to an L1 residual of 1e-12 and cross-checked at 1e-10.
struct ExactChain {
  std::vector<int> sides;
  Alphabet alphabet;
  std::vector<double> pi;  // mixed-radix over cells, first cell most significant
  double residual = 0.0;
};

namespace detail {

// One sweep of the factored transition: deterministic pushforward, then an
// independent per-cell channel M (M[in * C + out]) applied axis by axis.
inline void factored_sweep(const std::vector<std::uint32_t>& forward,
                           const std::vector<double>& channel, int c,
                           std::size_t ncells, std::vector<double>& pi,
                           std::vector<double>& scratch) {
  const std::size_t states = pi.size();
  std::fill(scratch.begin(), scratch.end(), 0.0);
  for (std::size_t x = 0; x < states; ++x) scratch[forward[x]] += pi[x];
  pi.swap(scratch);
  // Apply the channel along each cell axis. Cell k has stride C^(n-1-k).
  std::size_t stride = states / c;
  for (std::size_t k = 0; k < ncells; ++k) {
    for (std::size_t base = 0; base < states; ++base) {
      const std::size_t digit = (base / stride) % c;
      if (digit != 0) continue;
      double in[16];
      for (int s = 0; s < c; ++s) in[s] = pi[base + s * stride];
      for (int out = 0; out < c; ++out) {
        double acc = 0.0;
        for (int s = 0; s < c; ++s) acc += in[s] * channel[s * c + out];
        pi[base + out * stride] = acc;
      }
    }
    stride /= c;
  }
}

// Dense fallback for kernels whose rows depend on the whole tuple: stream the
// product measure of each source state into the accumulator.
inline void dense_sweep(const std::vector<std::vector<std::size_t>>& tuples,
                        const StochasticLocalRule& kernel, int c,
                        std::vector<double>& pi, std::vector<double>& scratch) {
  const std::size_t states = pi.size();
  const std::size_t n = tuples.empty() ? 0 : tuples[0].size();
  std::fill(scratch.begin(), scratch.end(), 0.0);
  std::vector<Symbol> y(n, 0);
  std::vector<double> prefix(n + 1, 1.0);
  for (std::size_t x = 0; x < states; ++x) {
    if (pi[x] == 0.0) continue;
    std::fill(y.begin(), y.end(), 0);
    prefix[0] = pi[x];
    for (std::size_t k = 0; k < n; ++k)
      prefix[k + 1] = prefix[k] * kernel.prob(tuples[x][k], 0);
    std::size_t idx = 0;
    while (true) {
      scratch[idx] += prefix[n];
      int k = static_cast<int>(n) - 1;
      while (k >= 0 && y[k] == c - 1) --k;
      if (k < 0) break;
      ++y[k];
      for (std::size_t j = k + 1; j < n; ++j) y[j] = 0;
      idx = 0;
      for (std::size_t j = 0; j < n; ++j) idx = idx * c + y[j];
      for (std::size_t j = k; j < n; ++j)
        prefix[j + 1] = prefix[j] * kernel.prob(tuples[x][j], y[j]);
    }
  }
  pi.swap(scratch);
}

inline double l1_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s;
}

}  // namespace detail

inline ExactChain exact_stationary(const PerturbedAutomaton& pa,
                                   const std::vector<int>& sides,
                                   double budget = 2e6) {
  check_step_preconditions(pa.automaton, TorusConfiguration(sides));
  const int c = pa.automaton.alphabet.size();
  if (c > 16) throw budget_error("exact chain supports at most 16 symbols");
  std::size_t ncells = 1;
  for (int s : sides) ncells *= static_cast<std::size_t>(s);
  const double state_count = std::pow(static_cast<double>(c),
                                      static_cast<double>(ncells));
  const bool factored = pa.kind != PerturbationKind::kCustom;
  const double limit = factored ? budget : std::sqrt(budget) * 2.0;
  if (state_count > limit)
    throw budget_error("state space exceeds the exact-chain budget");
  const auto states = static_cast<std::size_t>(state_count + 0.5);

  // Tuple indices per (state, cell); for factored kinds collapse to the
  // deterministic image state.
  StepPlan plan(sides, pa.automaton.neighborhood);
  const int r = plan.arity;
  std::vector<std::uint32_t> forward;
  std::vector<std::vector<std::size_t>> tuples;
  {
    std::vector<Symbol> cells(ncells, 0);
    if (factored) forward.resize(states);
    else tuples.assign(states, std::vector<std::size_t>(ncells));
    for (std::size_t x = 0; x < states; ++x) {
      if (factored) {
        std::size_t img = 0;
        for (std::size_t j = 0; j < ncells; ++j) {
          std::size_t idx = 0;
          for (int k = 0; k < r; ++k) idx = idx * c + cells[plan.neighbor[j * r + k]];
          img = img * c + pa.automaton.table[idx];
        }
        forward[x] = static_cast<std::uint32_t>(img);
      } else {
        for (std::size_t j = 0; j < ncells; ++j) {
          std::size_t idx = 0;
          for (int k = 0; k < r; ++k) idx = idx * c + cells[plan.neighbor[j * r + k]];
          tuples[x][j] = idx;
        }
      }
      for (int j = static_cast<int>(ncells) - 1; j >= 0; --j) {
        if (++cells[j] < c) break;
        cells[j] = 0;
      }
    }
  }

  // Per-cell channel for the factored kinds.
  std::vector<double> channel;
  if (factored) {
    channel.assign(static_cast<std::size_t>(c) * c, 0.0);
    if (pa.kind == PerturbationKind::kUniform) {
      for (int in = 0; in < c; ++in)
        for (int out = 0; out < c; ++out)
          channel[in * c + out] = pa.epsilon / c + (in == out ? 1.0 - pa.epsilon : 0.0);
    } else {
      channel[0 * 2 + 0] = 1.0 - pa.p;
      channel[0 * 2 + 1] = pa.p;
      channel[1 * 2 + 0] = pa.q;
      channel[1 * 2 + 1] = 1.0 - pa.q;
    }
  }

  std::vector<double> pi(states, 1.0 / static_cast<double>(states));
  std::vector<double> prev, prev2, scratch(states);
  const int max_sweeps = 200000;
  double residual = 0.0;
  for (int sweep = 0;; ++sweep) {
    prev2 = prev;
    prev = pi;
    if (factored)
      detail::factored_sweep(forward, channel, c, ncells, pi, scratch);
    else
      detail::dense_sweep(tuples, pa.kernel, c, pi, scratch);
    residual = detail::l1_diff(pi, prev);
    if (residual <= 1e-12) break;
    if (!prev2.empty() && detail::l1_diff(pi, prev2) <= 1e-12 && residual > 1e-8)
      throw ergodicity_error("chain oscillates; no unique stationary limit");
    if (sweep >= max_sweeps)
      throw ergodicity_error("power iteration failed to converge");
  }

  // Independent check that pi really is a fixed point.
  std::vector<double> check = pi;
  if (factored)
    detail::factored_sweep(forward, channel, c, ncells, check, scratch);
  else
    detail::dense_sweep(tuples, pa.kernel, c, check, scratch);
  if (detail::l1_diff(check, pi) > 1e-10)
    throw ergodicity_error("stationarity check failed");

  ExactChain out;
  out.sides = sides;
  out.alphabet = pa.automaton.alphabet;
  out.pi = std::move(pi);
  out.residual = residual;
  return out;
}

// Projects the exact stationary law onto a window.
inline CylinderDistribution marginal_on_window(const ExactChain& chain,
                                               const WindowSpec& window) {
  const int c = chain.alphabet.size();
  std::size_t ncells = 1;
  for (int s : chain.sides) ncells *= static_cast<std::size_t>(s);
  // Flat indices of the window cells inside the torus.
  TorusConfiguration probe(chain.sides);
  std::vector<std::size_t> flat;
  for (const auto& cell : window.cells) flat.push_back(probe.flat_index(cell));
  // Cell j has place value C^(n-1-j) in the state index.
  std::vector<std::size_t> place(ncells, 1);
  for (int j = static_cast<int>(ncells) - 2; j >= 0; --j)
    place[j] = place[j + 1] * c;

  std::size_t words = 1;
  for (int k = 0; k < window.size(); ++k) words *= static_cast<std::size_t>(c);
  CylinderDistribution out;
  out.window = window;
  out.alphabet = chain.alphabet;
  out.probs.assign(words, 0.0);
  for (std::size_t x = 0; x < chain.pi.size(); ++x) {
    std::size_t w = 0;
    for (std::size_t k = 0; k < flat.size(); ++k)
      w = w * c + (x / place[flat[k]]) % c;
    out.probs[w] += chain.pi[x];
  }
  out.validate(1e-10);
  return out;
}

}  // namespace stoca
