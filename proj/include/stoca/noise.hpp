#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stoca/core.hpp"
#include "stoca/errors.hpp"
#include "stoca/rng.hpp"

namespace stoca {

// Row-stochastic kernel over the alphabet, one row per neighborhood tuple
// (mixed-radix order, same as the deterministic table).
struct StochasticLocalRule {
  int alphabet_size = 0;
  std::vector<double> rows;  // rows[tuple * C + symbol]

  StochasticLocalRule() = default;
  StochasticLocalRule(int c, std::vector<double> r)
      : alphabet_size(c), rows(std::move(r)) {
    if (c < 1 || rows.size() % static_cast<std::size_t>(c) != 0)
      throw config_error("stochastic rule shape mismatch");
    const std::size_t n = rows.size() / c;
    for (std::size_t t = 0; t < n; ++t) {
      double sum = 0.0;
      for (int a = 0; a < c; ++a) {
        const double v = rows[t * c + a];
        if (v < 0.0) throw config_error("negative probability in stochastic rule");
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw config_error("stochastic rule row does not sum to one");
    }
  }

  double prob(std::size_t tuple, Symbol a) const {
    return rows[tuple * alphabet_size + a];
  }
};

enum class PerturbationKind { kUniform, kZeroRange, kCustom };

// Deterministic rule plus a local stochastic kernel phi. The kernel must give
// the deterministic output probability at least 1 - epsilon on every tuple.
struct PerturbedAutomaton {
  CellularAutomaton automaton;
  StochasticLocalRule kernel;
  PerturbationKind kind = PerturbationKind::kCustom;
  double epsilon = 0.0;
  double p = 0.0;  // zero-range: P(0 -> 1) after the deterministic step
  double q = 0.0;  // zero-range: P(1 -> 0)

  void validate_contract() const {
    const int c = automaton.alphabet.size();
    for (std::size_t t = 0; t < automaton.table.size(); ++t)
      if (kernel.prob(t, automaton.table[t]) < 1.0 - epsilon - 1e-12)
        throw config_error("kernel underweights the deterministic output");
  }
};

// Diagonal 1 - eps + eps/C, off-diagonal eps/C: with probability eps the
// output is replaced by a uniform symbol (possibly the same one).
inline PerturbedAutomaton make_uniform_perturbation(CellularAutomaton ca,
                                                    double eps) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw parameter_error("uniform perturbation needs eps in [0,1]");
  const int c = ca.alphabet.size();
  std::vector<double> rows(ca.table.size() * c, eps / c);
  for (std::size_t t = 0; t < ca.table.size(); ++t)
    rows[t * c + ca.table[t]] += 1.0 - eps;
  PerturbedAutomaton pa;
  pa.automaton = std::move(ca);
  pa.kernel = StochasticLocalRule(c, std::move(rows));
  pa.kind = PerturbationKind::kUniform;
  pa.epsilon = eps;
  pa.validate_contract();
  return pa;
}

// Binary-only channel applied after the deterministic step: a 0 flips to 1
// with probability p, a 1 flips to 0 with probability q.
inline PerturbedAutomaton make_zero_range_perturbation(CellularAutomaton ca,
                                                       double p, double q) {
  if (ca.alphabet.size() != 2)
    throw alphabet_error("zero-range perturbation needs a binary alphabet");
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0))
    throw parameter_error("zero-range perturbation needs p, q in [0,1]");
  std::vector<double> rows(ca.table.size() * 2, 0.0);
  for (std::size_t t = 0; t < ca.table.size(); ++t) {
    if (ca.table[t] == 0) {
      rows[t * 2 + 0] = 1.0 - p;
      rows[t * 2 + 1] = p;
    } else {
      rows[t * 2 + 0] = q;
      rows[t * 2 + 1] = 1.0 - q;
    }
  }
  PerturbedAutomaton pa;
  pa.automaton = std::move(ca);
  pa.kernel = StochasticLocalRule(2, std::move(rows));
  pa.kind = PerturbationKind::kZeroRange;
  pa.epsilon = std::max(p, q);
  pa.p = p;
  pa.q = q;
  pa.validate_contract();
  return pa;
}

inline PerturbedAutomaton make_custom_perturbation(CellularAutomaton ca,
                                                   StochasticLocalRule kernel,
                                                   double eps) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw parameter_error("perturbation needs eps in [0,1]");
  if (kernel.alphabet_size != ca.alphabet.size() ||
      kernel.rows.size() != ca.table.size() * ca.alphabet.size())
    throw config_error("kernel shape does not match the rule");
  PerturbedAutomaton pa;
  pa.automaton = std::move(ca);
  pa.kernel = std::move(kernel);
  pa.kind = PerturbationKind::kCustom;
  pa.epsilon = eps;
  pa.validate_contract();
  return pa;
}

// Tightest epsilon the kernel actually satisfies.
inline double verify_epsilon_perturbation(const PerturbedAutomaton& pa) {
  double min_diag = 1.0;
  for (std::size_t t = 0; t < pa.automaton.table.size(); ++t)
    min_diag = std::min(min_diag, pa.kernel.prob(t, pa.automaton.table[t]));
  return 1.0 - min_diag;
}

// True when every tuple can emit symbol 0.
inline bool is_zero_positive(const PerturbedAutomaton& pa) {
  for (std::size_t t = 0; t < pa.automaton.table.size(); ++t)
    if (pa.kernel.prob(t, 0) <= 0.0) return false;
  return true;
}

// Per-site error outcomes, one Philox draw per (trial, t, site). With
// probability 1 - eps the site is clean (nullopt); otherwise each alphabet
// symbol is forced with probability eps / C. Forced modes pin the whole field
// for deterministic traces.
struct ErrorField {
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  int alphabet_size = 1;

  struct Pin {
    std::uint32_t trial = 0;
    std::uint32_t t = 0;
    std::uint32_t site = 0;
    Symbol symbol = 0;
  };
  bool force_clean = false;
  std::vector<Pin> pins;  // clean everywhere else when nonempty

  CounterRng rng() const { return CounterRng{seed, Stream::kErrorField}; }

  double uniform_at(std::uint32_t trial, std::uint32_t t, std::uint32_t site) const {
    return rng().uniform(trial, t, site);
  }

  std::optional<Symbol> at(std::uint32_t trial, std::uint32_t t,
                           std::uint32_t site) const {
    if (force_clean || !pins.empty()) {
      for (const auto& pin : pins)
        if (pin.trial == trial && pin.t == t && pin.site == site)
          return pin.symbol;
      return std::nullopt;
    }
    const double u = uniform_at(trial, t, site);
    if (u >= epsilon) return std::nullopt;
    const int k = static_cast<int>(u * alphabet_size / epsilon);
    return static_cast<Symbol>(std::min(k, alphabet_size - 1));
  }
};

inline ErrorField make_error_field(std::uint64_t seed, double eps, int c) {
  if (!(eps >= 0.0 && eps <= 1.0))
    throw parameter_error("error field needs eps in [0,1]");
  ErrorField f;
  f.seed = seed;
  f.epsilon = eps;
  f.alphabet_size = c;
  return f;
}

inline ErrorField make_clean_field(int c) {
  ErrorField f;
  f.alphabet_size = c;
  f.force_clean = true;
  return f;
}

// Inverse CDF of one kernel row in alphabet order: u lands in the exact
// half-open preimage interval of the returned symbol.
struct UpdateFunction {
  const StochasticLocalRule* kernel = nullptr;

  Symbol operator()(std::size_t tuple, double u) const {
    const int c = kernel->alphabet_size;
    double acc = 0.0;
    for (int a = 0; a < c; ++a) {
      acc += kernel->prob(tuple, static_cast<Symbol>(a));
      if (u < acc) return static_cast<Symbol>(a);
    }
    return static_cast<Symbol>(c - 1);
  }
};

// One synchronous noisy update. The uniform kind consumes the error field
// directly (clean site -> deterministic output, struck site -> the forced
// symbol); other kinds push the same per-site draw through the inverse CDF.
inline TorusConfiguration sample_step(const PerturbedAutomaton& pa,
                                      const TorusConfiguration& x,
                                      const ErrorField& field, std::uint32_t t,
                                      std::uint32_t trial,
                                      const StepPlan* plan = nullptr) {
  check_step_preconditions(pa.automaton, x);
  StepPlan local;
  if (plan == nullptr) {
    local = StepPlan(x.sides, pa.automaton.neighborhood);
    plan = &local;
  }
  TorusConfiguration out(x.sides);
  const int r = plan->arity;
  const int c = pa.automaton.alphabet.size();
  const UpdateFunction update{&pa.kernel};
  for (std::size_t j = 0; j < x.size(); ++j) {
    std::size_t idx = 0;
    const std::uint32_t* nb = &plan->neighbor[j * r];
    for (int k = 0; k < r; ++k) idx = idx * c + x.cells[nb[k]];
    if (pa.kind == PerturbationKind::kUniform) {
      const auto e = field.at(trial, t, static_cast<std::uint32_t>(j));
      out.cells[j] = e ? *e : pa.automaton.table[idx];
    } else {
      const double u = field.uniform_at(trial, t, static_cast<std::uint32_t>(j));
      out.cells[j] = update(idx, u);
    }
  }
  return out;
}

// Noise descriptors as they appear in config files.
struct NoiseSpec {
  PerturbationKind kind = PerturbationKind::kUniform;
  double eps = 0.0;
  double p = 0.0;
  double q = 0.0;
};

// Accepts uniform(eps=0.01) and zero_range(p=0.1, q=0.05).
inline NoiseSpec parse_noise_spec(const std::string& text) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw config_error("malformed noise spec: " + text);
  std::string name = text.substr(0, open);
  name.erase(0, name.find_first_not_of(" \t"));
  name.erase(name.find_last_not_of(" \t") + 1);
  NoiseSpec spec;
  std::vector<std::pair<std::string, double>> args;
  std::string body = text.substr(open + 1, close - open - 1);
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto comma = body.find(',', pos);
    if (comma == std::string::npos) comma = body.size();
    std::string part = body.substr(pos, comma - pos);
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw config_error("noise spec needs key=value");
    std::string key = part.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    try {
      args.emplace_back(key, std::stod(part.substr(eq + 1)));
    } catch (const std::exception&) {
      throw config_error("bad number in noise spec: " + part);
    }
    pos = comma + 1;
  }
  if (name == "uniform") {
    spec.kind = PerturbationKind::kUniform;
    bool saw_eps = false;
    for (const auto& [k, v] : args) {
      if (k == "eps") spec.eps = v, saw_eps = true;
      else throw config_error("unknown uniform parameter: " + k);
    }
    if (!saw_eps) throw config_error("uniform noise needs eps");
  } else if (name == "zero_range") {
    spec.kind = PerturbationKind::kZeroRange;
    bool saw_p = false, saw_q = false;
    for (const auto& [k, v] : args) {
      if (k == "p") spec.p = v, saw_p = true;
      else if (k == "q") spec.q = v, saw_q = true;
      else throw config_error("unknown zero_range parameter: " + k);
    }
    if (!saw_p || !saw_q) throw config_error("zero_range noise needs p and q");
    spec.eps = std::max(spec.p, spec.q);
  } else {
    throw config_error("unknown noise kind: " + name);
  }
  return spec;
}

inline PerturbedAutomaton make_perturbation(CellularAutomaton ca,
                                            const NoiseSpec& spec) {
  switch (spec.kind) {
    case PerturbationKind::kUniform:
      return make_uniform_perturbation(std::move(ca), spec.eps);
    case PerturbationKind::kZeroRange:
      return make_zero_range_perturbation(std::move(ca), spec.p, spec.q);
    default:
      throw config_error("custom noise cannot be built from a spec string");
  }
}

}  // namespace stoca
