// Experiment runner: binds the library modules behind subcommands and emits
// deterministic CSV (same config + seed => same bytes). Bound violations are
// reported as warnings; the exit status is nonzero only for hard failures
// (bad config, missing files, broken invariants propagated from the modules).

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stoca/asymptotics.hpp"
#include "stoca/bounds.hpp"
#include "stoca/core.hpp"
#include "stoca/embedding.hpp"
#include "stoca/errors.hpp"
#include "stoca/measure.hpp"
#include "stoca/moebius.hpp"
#include "stoca/noise.hpp"
#include "stoca/percolation.hpp"
#include "stoca/rule_io.hpp"
#include "stoca/turing.hpp"
#include "stoca/version.hpp"

namespace {

using namespace stoca;

// Shortest round-trip decimal form, independent of locale and stream state,
// so reruns stay byte-identical.
std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string fmt(long long x) { return std::to_string(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(std::uint64_t x) { return std::to_string(x); }

struct Csv {
  std::ostringstream body;

  void meta(const std::string& key, const std::string& value) {
    body << "# " << key << "=" << value << "\n";
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) body << ',';
      body << fields[k];
    }
    body << '\n';
  }
  std::string str() const { return body.str(); }
};

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("cannot open output file: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

// Rule arguments accept either a file path or a builtin constructor, so the
// canned experiments need no rule files on disk.
CellularAutomaton resolve_rule(const std::string& text) {
  if (text == "product") return make_product_rule();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    if (head == "spreading" || head == "constant" || head == "identity") {
      int arg = 0;
      try {
        arg = std::stoi(text.substr(colon + 1));
      } catch (const std::exception&) {
        throw config_error("bad builtin rule parameter: " + text);
      }
      if (head == "spreading") return make_binary_spreading_rule(arg);
      if (head == "constant") return make_constant_rule(arg, 0);
      return make_identity_rule(arg);
    }
  }
  return load_rule_file(text);
}

std::size_t repeated_word_index(int sym, int c, int m) {
  std::size_t idx = 0;
  for (int k = 0; k < m; ++k) idx = idx * static_cast<std::size_t>(c) +
                                     static_cast<std::size_t>(sym);
  return idx;
}

// A spreading state wins every tuple it appears in. Unique for arity >= 2
// (two such states cannot share a tuple); arity-1 rules can be ambiguous.
std::optional<int> find_spreading_symbol(const CellularAutomaton& ca) {
  const int c = ca.alphabet.size();
  const int r = ca.neighborhood.arity();
  std::optional<int> found;
  for (int s = 0; s < c; ++s) {
    bool ok = true;
    std::vector<Symbol> tuple(static_cast<std::size_t>(r), 0);
    for (std::size_t idx = 0; idx < ca.table.size() && ok; ++idx) {
      const bool has =
          std::find(tuple.begin(), tuple.end(), static_cast<Symbol>(s)) !=
          tuple.end();
      if (has && ca.table[idx] != s) ok = false;
      for (int k = r - 1; k >= 0; --k) {
        if (++tuple[static_cast<std::size_t>(k)] < c) break;
        tuple[static_cast<std::size_t>(k)] = 0;
      }
    }
    if (ok) {
      if (found) return std::nullopt;
      found = s;
    }
  }
  return found;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string rule, noise, init = "zero", out = "-";
  int n = 64;
  long long steps = 32;
  int center_symbol = -1;
  std::uint64_t seed = 0;
  bool has_seed = false;
};

void run_simulate(const SimulateArgs& a) {
  const CellularAutomaton ca = resolve_rule(a.rule);
  const bool noisy = !a.noise.empty();
  if ((noisy || a.init == "random") && !a.has_seed)
    throw config_error("--seed is required when the run draws randomness");

  TorusConfiguration x({a.n});
  if (a.init == "random")
    x = random_initial(ca.alphabet, {a.n}, a.seed, 0);
  else if (a.init == "center") {
    const int s = a.center_symbol < 0 ? ca.alphabet.size() - 1 : a.center_symbol;
    if (s >= ca.alphabet.size())
      throw config_error("--center-symbol outside the rule's alphabet");
    x.cells[static_cast<std::size_t>(a.n / 2)] = static_cast<Symbol>(s);
  }
  check_step_preconditions(ca, x);

  Csv csv;
  csv.meta("stoca", kVersion);
  csv.meta("command", "simulate");
  csv.meta("rule", a.rule);
  csv.meta("noise", noisy ? a.noise : "none");
  csv.meta("init", a.init);
  csv.meta("n", fmt(a.n));
  csv.meta("steps", fmt(a.steps));
  csv.meta("seed", a.has_seed ? fmt(a.seed) : "none");
  std::vector<std::string> head{"t"};
  for (int i = 0; i < a.n; ++i) head.push_back("c" + std::to_string(i));
  csv.row(head);

  StepPlan plan({a.n}, ca.neighborhood);
  PerturbedAutomaton pa;
  ErrorField field = make_clean_field(ca.alphabet.size());
  if (noisy) {
    pa = make_perturbation(ca, parse_noise_spec(a.noise));
    field = make_error_field(a.seed, pa.epsilon, ca.alphabet.size());
  }
  auto emit = [&](long long t, const TorusConfiguration& cfg) {
    std::vector<std::string> fields{fmt(t)};
    for (Symbol s : cfg.cells) fields.push_back(ca.alphabet.names[s]);
    csv.row(fields);
  };
  emit(0, x);
  for (long long t = 0; t < a.steps; ++t) {
    x = noisy ? sample_step(pa, x, field, static_cast<std::uint32_t>(t), 0, &plan)
              : step(ca, x, &plan);
    emit(t + 1, x);
  }
  write_output(a.out, csv.str());
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string experiment, rule, noise = "auto", out = "-";
  std::vector<double> eps;
  int n = 64, window = 1, burn_in = -1, samples = 2000, thinning = -1, trials = 8;
  int zero_symbol = -1;
  std::uint64_t seed = 0;
  bool has_seed = false, exact = false;
};

void run_estimate(const EstimateArgs& a) {
  const CellularAutomaton ca = resolve_rule(a.rule);
  if (!a.exact && !a.has_seed)
    throw config_error("--seed is required for Monte Carlo estimation");
  if (a.eps.empty()) throw config_error("the epsilon sweep must be nonempty");

  std::string noise = a.noise;
  if (noise == "auto")
    noise = a.experiment == "binary-spreading" ? "zero_range" : "uniform";
  if (a.experiment == "binary-spreading" && noise != "zero_range")
    throw config_error("binary-spreading compares against zero-range noise");

  const WindowSpec w = make_window1d(a.window);
  const int burn = a.burn_in >= 0
                       ? a.burn_in
                       : default_burn_in(a.n, ca.neighborhood.radius());
  const int thin = a.thinning >= 1 ? a.thinning : default_thinning(a.n);

  // Experiment-specific quiescent symbol, bound and linear reference.
  int zero_sym = a.zero_symbol;
  std::string reference_kind;
  std::optional<NilpotentBoundParams> nil;
  std::optional<SpreadingBoundParams> spread;
  if (a.experiment == "nilpotent") {
    const auto res = detect_nilpotency(ca, 8);
    if (!res) throw config_error("rule shows no nilpotency within the horizon");
    std::vector<int> sizes;
    for (int t = 0; t < res->index; ++t)
      sizes.push_back(iterated_neighborhood(ca, t).arity());
    nil.emplace(res->index, sizes, a.window);
    if (zero_sym < 0) zero_sym = res->quiescent;
    reference_kind = "linear";
  } else if (a.experiment == "spreading1d") {
    spread.emplace(ca.neighborhood.arity(), a.window);
    reference_kind = "asymptote";
  } else {
    reference_kind = "chi_drift";
  }
  if (zero_sym < 0) {
    const auto s = find_spreading_symbol(ca);
    if (!s)
      throw config_error(
          "no unique spreading state; pass --zero-symbol explicitly");
    zero_sym = *s;
  }
  if (zero_sym >= ca.alphabet.size())
    throw config_error("--zero-symbol outside the rule's alphabet");
  const std::size_t word =
      repeated_word_index(zero_sym, ca.alphabet.size(), a.window);

  Csv csv;
  csv.meta("stoca", kVersion);
  csv.meta("command", "estimate");
  csv.meta("experiment", a.experiment);
  csv.meta("rule", a.rule);
  csv.meta("noise", noise);
  csv.meta("method", a.exact ? "exact" : "mc");
  csv.meta("reference", reference_kind);
  csv.meta("zero_symbol", fmt(zero_sym));
  csv.meta("burn_in", fmt(burn));
  csv.meta("samples", fmt(a.samples));
  csv.meta("thinning", fmt(thin));
  csv.row({"eps", "measured", "stderr", "bound", "reference", "n_eff", "n",
           "window", "trials", "seed", "version"});

  for (double eps : a.eps) {
    NoiseSpec spec;
    if (noise == "uniform") {
      spec.kind = PerturbationKind::kUniform;
      spec.eps = eps;
    } else {
      spec.kind = PerturbationKind::kZeroRange;
      spec.p = spec.q = eps;
      spec.eps = eps;
    }
    const PerturbedAutomaton pa = make_perturbation(ca, spec);
    CylinderDistribution mu;
    if (a.exact)
      mu = marginal_on_window(exact_stationary(pa, {a.n}), w);
    else
      mu = estimate_invariant(pa, w, {a.n}, burn, a.samples, thin, a.trials,
                              a.seed);
    const double measured = 1.0 - mu.probs[word];
    const double se = a.exact ? 0.0 : mu.stderrs[word];

    double bound = 0.0, reference = 0.0;
    if (nil) {
      const NilpotentBound nb = nilpotent_bound(*nil, eps);
      bound = nb.bound;
      reference = nb.linear;
    } else if (spread) {
      const SpreadingBound sb = spreading1d_bound(*spread, eps);
      bound = sb.bound;
      reference = sb.asymptote;
    } else {
      bound = binary_spreading_bound(a.window, ca.neighborhood.arity(), eps, eps);
      reference = std::pow(eps, ca.neighborhood.arity()) / eps;
    }
    if (measured > bound + 3.0 * se)
      std::fprintf(stderr, "warning: measured %s exceeds bound %s at eps=%s\n",
                   fmt(measured).c_str(), fmt(bound).c_str(), fmt(eps).c_str());
    csv.row({fmt(eps), fmt(measured), fmt(se), fmt(bound), fmt(reference),
             fmt(a.exact ? 0.0 : mu.sample_count), fmt(a.n), fmt(a.window),
             fmt(a.trials), a.has_seed ? fmt(a.seed) : "none", kVersion});
  }
  write_output(a.out, csv.str());
}

// ------------------------------------------------------------------ bounds

struct BoundsArgs {
  std::string experiment, rule, out = "-";
  std::vector<double> eps;
  std::vector<int> nbhd{0, 1};
  int r = 2, window = 1, nbhd_size = 2, t_max = 16;
  double p = 0.0, q = 0.0;
};

void run_bounds(const BoundsArgs& a) {
  Csv csv;
  csv.meta("stoca", kVersion);
  csv.meta("command", "bounds");
  csv.meta("experiment", a.experiment);
  csv.meta("window", fmt(a.window));
  if (a.experiment == "chi") {
    csv.meta("p", fmt(a.p));
    csv.meta("q", fmt(a.q));
    csv.row({"t", "seminorm", "constant_term", "exact"});
    const auto rows =
        iterate_moebius_bound(make_window1d(a.window), a.p, a.q, a.t_max, a.nbhd);
    for (const auto& r : rows)
      csv.row({fmt(r.t), fmt(r.seminorm), fmt(r.constant_term),
               r.exact ? "1" : "0"});
    write_output(a.out, csv.str());
    return;
  }
  if (a.eps.empty()) throw config_error("the epsilon sweep must be nonempty");
  if (a.experiment == "nilpotent") {
    if (a.rule.empty()) throw config_error("nilpotent bounds need --rule");
    const CellularAutomaton ca = resolve_rule(a.rule);
    const auto res = detect_nilpotency(ca, 8);
    if (!res) throw config_error("rule shows no nilpotency within the horizon");
    std::vector<int> sizes;
    for (int t = 0; t < res->index; ++t)
      sizes.push_back(iterated_neighborhood(ca, t).arity());
    const NilpotentBoundParams params(res->index, sizes, a.window);
    csv.meta("rule", a.rule);
    csv.meta("nilpotency_index", fmt(res->index));
    csv.meta("constant", fmt(static_cast<long long>(params.constant())));
    csv.row({"eps", "bound", "linear"});
    for (double eps : a.eps) {
      const NilpotentBound nb = nilpotent_bound(params, eps);
      csv.row({fmt(eps), fmt(nb.bound), fmt(nb.linear)});
    }
  } else if (a.experiment == "spreading1d") {
    const SpreadingBoundParams params(a.r, a.window);
    csv.meta("r", fmt(a.r));
    csv.meta("constant", fmt(static_cast<long long>(params.big_c())));
    csv.row({"eps", "bound", "asymptote", "vacuous"});
    for (double eps : a.eps) {
      const SpreadingBound sb = spreading1d_bound(params, eps);
      csv.row({fmt(eps), fmt(sb.bound), fmt(sb.asymptote), sb.vacuous ? "1" : "0"});
    }
  } else if (a.experiment == "binary-spreading") {
    csv.meta("nbhd_size", fmt(a.nbhd_size));
    csv.row({"eps", "bound", "drift"});
    for (double eps : a.eps)
      csv.row({fmt(eps), fmt(binary_spreading_bound(a.window, a.nbhd_size, eps, eps)),
               fmt(std::pow(eps, a.nbhd_size) / eps)});
  } else {
    throw config_error("unknown bounds experiment: " + a.experiment);
  }
  write_output(a.out, csv.str());
}

// -------------------------------------------------------------- percolation

struct PercolationArgs {
  std::string out = "-";
  std::vector<double> eps;
  int r = 2, depth = 200, trials = 10000;
  std::uint64_t seed = 0;
};

void run_percolation(const PercolationArgs& a) {
  if (a.eps.empty()) throw config_error("the epsilon sweep must be nonempty");
  Csv csv;
  csv.meta("stoca", kVersion);
  csv.meta("command", "percolation");
  csv.meta("r", fmt(a.r));
  csv.meta("depth", fmt(a.depth));
  csv.row({"eps", "estimate", "stderr", "bound", "r", "depth", "trials", "seed",
           "version"});
  for (double eps : a.eps) {
    const PathEstimate est =
        estimate_path_probability(a.r, a.depth, eps, a.trials, a.seed);
    const double bound = path_probability_bound(eps);
    if (est.estimate < bound - 3.0 * est.stderr_)
      std::fprintf(stderr, "warning: estimate %s below bound %s at eps=%s\n",
                   fmt(est.estimate).c_str(), fmt(bound).c_str(),
                   fmt(eps).c_str());
    csv.row({fmt(eps), fmt(est.estimate), fmt(est.stderr_), fmt(bound), fmt(a.r),
             fmt(a.depth), fmt(a.trials), fmt(a.seed), kVersion});
  }
  write_output(a.out, csv.str());
}

// -------------------------------------------------------------- asymptotics

struct AsymptoticsArgs {
  std::string check, out = "-";
  std::vector<double> alpha{0.0, 0.5, 1.0, 2.0 / 3.0};
  std::vector<int> beta{1, 1, 1, 1};
  std::vector<double> x{0.999999};
  std::vector<double> big_c{18.0};
  std::vector<int> a_list{6};
  std::vector<int> c_list{20};
  std::vector<double> eps{1e-4};
};

void run_asymptotics(const AsymptoticsArgs& a) {
  Csv csv;
  csv.meta("stoca", kVersion);
  csv.meta("command", "asymptotics");
  csv.meta("check", a.check);
  if (a.check == "series") {
    if (a.alpha.size() != a.beta.size())
      throw config_error("--alpha and --beta must pair up");
    csv.row({"alpha", "beta", "x", "sum", "reference", "ratio"});
    for (std::size_t k = 0; k < a.alpha.size(); ++k)
      for (double x : a.x) {
        SeriesQuery q;
        q.alpha = a.alpha[k];
        q.beta = a.beta[k];
        q.x = x;
        const double sum = truncated_power_sum(q);
        const double ref = asymptotic_reference(q.alpha, q.beta, q.x);
        csv.row({fmt(q.alpha), fmt(q.beta), fmt(x), fmt(sum), fmt(ref),
                 fmt(sum / ref)});
      }
  } else if (a.check == "theta") {
    csv.row({"x", "sum", "lead", "constant"});
    for (double x : a.x) {
      SeriesQuery q;
      q.alpha = 0.0;
      q.beta = 2;
      q.x = x;
      const double sum = truncated_power_sum(q);
      const double lead = 0.5 * std::sqrt(std::numbers::pi / (1.0 - x));
      csv.row({fmt(x), fmt(sum), fmt(lead), fmt(sum - lead)});
    }
  } else if (a.check == "gap") {
    if (a.big_c.size() != a.a_list.size() || a.big_c.size() != a.c_list.size())
      throw config_error("--big-c, --a and --c must zip into parameter sets");
    csv.row({"big_c", "a", "c", "eps", "sum", "limit", "ratio"});
    for (std::size_t k = 0; k < a.big_c.size(); ++k)
      for (double eps : a.eps) {
        BlockWeightQuery q;
        q.big_c = a.big_c[k];
        q.a = a.a_list[k];
        q.c = a.c_list[k];
        q.eps = eps;
        const double sum = block_gap_sum(q);
        const double limit = block_gap_limit(q);
        csv.row({fmt(q.big_c), fmt(q.a), fmt(q.c), fmt(eps), fmt(sum),
                 fmt(limit), fmt(sum / limit)});
      }
  } else {
    throw config_error("unknown asymptotics check: " + a.check);
  }
  write_output(a.out, csv.str());
}

// ---------------------------------------------------------------- tm-build

struct TmBuildArgs {
  std::string tm, out = "-";
  int v = 20;
};

void run_tm_build(const TmBuildArgs& a) {
  const TuringMachine tm = load_tm_file(a.tm);
  const EmbeddedAutomaton e = build_embedding(tm, EmbeddingParams{a.v});
  nlohmann::ordered_json j;
  j["stoca"] = kVersion;
  j["tm"] = {{"file", a.tm},
             {"states", tm.states},
             {"tape_symbols", tm.tape_symbols},
             {"start", tm.states[tm.start_state]},
             {"halt", tm.states[tm.halt_state]}};
  j["v"] = e.v;
  j["radius"] = e.v;
  j["speeds"] = {{"outer", e.outer_speed()},
                 {"inner", e.inner_speed()},
                 {"probe", e.probe_speed()},
                 {"return", e.return_speed()},
                 {"stop_gap", e.stop_gap()}};
  j["alphabet_size"] = e.total;
  nlohmann::ordered_json table = nlohmann::ordered_json::array();
  for (int s = 0; s < e.total; ++s)
    table.push_back({{"index", s},
                     {"name", e.names[static_cast<std::size_t>(s)]},
                     {"class", symbol_class_name(e.cls(static_cast<ESym>(s)))}});
  j["symbols"] = std::move(table);
  write_output(a.out, j.dump(2) + "\n");
}

// ------------------------------------------------------------------ tm-run

struct TmRunArgs {
  std::string tm, mode = "trace", out = "-";
  int v = 20, n = 0, dt = 5, separation = 0;
  long long steps = 64, every = 1, tm_budget = 200000, ca_budget = 0;
};

std::string rle_row(const EmbeddedAutomaton& e, const ERow& row) {
  std::string out;
  std::size_t i = 0;
  while (i < row.size()) {
    std::size_t j = i;
    while (j < row.size() && row[j] == row[i]) ++j;
    if (!out.empty()) out += ' ';
    out += std::to_string(j - i);
    out += ':';
    out += e.names[row[i]];
    i = j;
  }
  return out;
}

void run_tm_run(const TmRunArgs& a) {
  const TuringMachine tm = load_tm_file(a.tm);
  const EmbeddedAutomaton e = build_embedding(tm, EmbeddingParams{a.v});
  Csv csv;
  csv.meta("stoca", kVersion);
  csv.meta("command", "tm-run");
  csv.meta("tm", a.tm);
  csv.meta("v", fmt(a.v));
  csv.meta("mode", a.mode);
  if (a.mode == "trace") {
    const int n = a.n > 0 ? a.n : 4 * e.v + 1;
    csv.meta("n", fmt(n));
    csv.meta("steps", fmt(a.steps));
    csv.row({"t", "row"});
    ERow row(static_cast<std::size_t>(n), 0);
    row[static_cast<std::size_t>(n / 2)] = EmbeddedAutomaton::kStar;
    EmbeddedStepper stepper(e, n);
    csv.row({fmt(0LL), rle_row(e, row)});
    for (long long t = 1; t <= a.steps; ++t) {
      row = stepper.step(row);
      if (t % a.every == 0 || t == a.steps) csv.row({fmt(t), rle_row(e, row)});
    }
  } else if (a.mode == "geometry") {
    const ConeGeometry g = compute_cone_geometry(e, a.tm_budget, a.ca_budget);
    csv.row({"halted", "tm_steps", "cone_height", "k_prime", "cone_cells", "v"});
    csv.row({g.halted ? "1" : "0", fmt(g.tm_steps), fmt(g.cone_height),
             fmt(g.k_prime), fmt(g.cone_cell_count()), fmt(g.v)});
  } else if (a.mode == "collide") {
    const CollisionOutcome c = collision_test(e, a.dt, a.separation);
    csv.meta("dt", fmt(a.dt));
    csv.row({"survivor", "stages_in_order", "stopped_at", "first_probe",
             "first_returner", "fired_at", "first_mark", "resolved_at"});
    csv.row({fmt(c.survivor), c.stages_in_order ? "1" : "0", fmt(c.stopped_at),
             fmt(c.first_probe), fmt(c.first_returner), fmt(c.fired_at),
             fmt(c.first_mark), fmt(c.resolved_at)});
  } else {
    throw config_error("unknown tm-run mode: " + a.mode);
  }
  write_output(a.out, csv.str());
}

// -------------------------------------------------------------- tm-density

struct TmDensityArgs {
  std::string tm, start = "random", out = "-";
  std::vector<double> eps;
  int v = 20, n = 128;
  long long horizon = 400, trials = 8;
  std::uint64_t seed = 0;
};

void run_tm_density(const TmDensityArgs& a) {
  if (a.eps.empty()) throw config_error("the epsilon sweep must be nonempty");
  const TuringMachine tm = load_tm_file(a.tm);
  const EmbeddedAutomaton e = build_embedding(tm, EmbeddingParams{a.v});
  const StartMode start =
      a.start == "zero" ? StartMode::kZero : StartMode::kRandom;
  if (a.start != "zero" && a.start != "random")
    throw config_error("--start must be random or zero");

  Csv csv;
  csv.meta("stoca", kVersion);
  csv.meta("command", "tm-density");
  csv.meta("tm", a.tm);
  csv.meta("v", fmt(a.v));
  csv.meta("start", a.start);
  csv.meta("horizon", fmt(a.horizon));
  std::vector<std::string> head{"eps"};
  for (int c = 0; c < kSymbolClassCount; ++c) {
    const std::string cls = symbol_class_name(static_cast<SymbolClass>(c));
    head.push_back(cls + "_mean");
    head.push_back(cls + "_se");
  }
  for (const char* extra : {"f_value", "f_limit", "n", "horizon", "trials",
                            "seed", "version"})
    head.push_back(extra);
  csv.row(head);

  for (double eps : a.eps) {
    const DensityEstimate d =
        estimate_symbol_density(e, eps, a.n, a.horizon, a.trials, a.seed, start);
    double f_value = 0.0, f_limit = 0.0;
    if (eps > 0.0) {
      const FBound f = nonhalting_lower_bound_f(eps, a.v, e.total);
      f_value = f.value;
      f_limit = f.limit;
    } else {
      f_limit = static_cast<double>(2 * (a.v / 5 - 1)) /
                (2.0 * e.total * a.v);
    }
    std::vector<std::string> fields{fmt(eps)};
    for (int c = 0; c < kSymbolClassCount; ++c) {
      fields.push_back(fmt(d.mean[static_cast<std::size_t>(c)]));
      fields.push_back(fmt(d.se[static_cast<std::size_t>(c)]));
    }
    fields.insert(fields.end(),
                  {fmt(f_value), fmt(f_limit), fmt(a.n), fmt(a.horizon),
                   fmt(a.trials), fmt(a.seed), kVersion});
    csv.row(fields);
  }
  write_output(a.out, csv.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic stability laboratory"};
  app.set_config("--config", "", "read options from a sectioned key=value file");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "emit a sampled trajectory");
  sim_cmd->add_option("--rule", sim.rule,
                      "rule file or builtin "
                      "(product | spreading:R | constant:C | identity:C)")
      ->required();
  sim_cmd->add_option("--noise", sim.noise,
                      "noise spec, e.g. uniform(eps=0.02); omit for noiseless");
  sim_cmd->add_option("--init", sim.init, "zero | random | center")
      ->check(CLI::IsMember({"zero", "random", "center"}));
  sim_cmd->add_option("--center-symbol", sim.center_symbol,
                      "symbol planted by --init center");
  sim_cmd->add_option("--n", sim.n, "torus side")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--steps", sim.steps, "steps to run")
      ->check(CLI::NonNegativeNumber);
  auto* sim_seed = sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--out", sim.out, "output path, - for stdout");
  sim_cmd->callback([&] {
    sim.has_seed = sim_seed->count() > 0;
    run_simulate(sim);
  });

  EstimateArgs est;
  auto* est_cmd =
      app.add_subcommand("estimate", "invariant-measure distance vs bound");
  est_cmd->add_option("--experiment", est.experiment,
                      "nilpotent | spreading1d | binary-spreading")
      ->required()
      ->check(CLI::IsMember({"nilpotent", "spreading1d", "binary-spreading"}));
  est_cmd->add_option("--rule", est.rule, "rule file or builtin")->required();
  est_cmd->add_option("--eps", est.eps, "epsilon sweep")
      ->required()
      ->delimiter(',');
  est_cmd->add_option("--noise", est.noise, "auto | uniform | zero_range")
      ->check(CLI::IsMember({"auto", "uniform", "zero_range"}));
  est_cmd->add_option("--n", est.n, "torus side")->check(CLI::PositiveNumber);
  est_cmd->add_option("--window", est.window, "observation window length")
      ->check(CLI::PositiveNumber);
  est_cmd->add_option("--burn-in", est.burn_in, "burn-in steps (-1 = default)");
  est_cmd->add_option("--samples", est.samples, "retained samples per trial")
      ->check(CLI::PositiveNumber);
  est_cmd->add_option("--thinning", est.thinning, "steps between samples (-1 = default)");
  est_cmd->add_option("--trials", est.trials, "independent chains")
      ->check(CLI::PositiveNumber);
  est_cmd->add_option("--zero-symbol", est.zero_symbol,
                      "alphabet index of the quiescent state (-1 = auto)");
  est_cmd->add_flag("--exact", est.exact, "exact chain instead of Monte Carlo");
  auto* est_seed = est_cmd->add_option("--seed", est.seed, "RNG seed");
  est_cmd->add_option("--out", est.out, "output path, - for stdout");
  est_cmd->callback([&] {
    est.has_seed = est_seed->count() > 0;
    run_estimate(est);
  });

  BoundsArgs bnd;
  auto* bnd_cmd = app.add_subcommand("bounds", "evaluate analytic bounds");
  bnd_cmd->add_option("--experiment", bnd.experiment,
                      "nilpotent | spreading1d | binary-spreading | chi")
      ->required()
      ->check(CLI::IsMember(
          {"nilpotent", "spreading1d", "binary-spreading", "chi"}));
  bnd_cmd->add_option("--rule", bnd.rule, "rule file or builtin (nilpotent)");
  bnd_cmd->add_option("--eps", bnd.eps, "epsilon sweep")->delimiter(',');
  bnd_cmd->add_option("--r", bnd.r, "neighborhood length (spreading1d)");
  bnd_cmd->add_option("--window", bnd.window, "observation window length")
      ->check(CLI::PositiveNumber);
  bnd_cmd->add_option("--nbhd-size", bnd.nbhd_size,
                      "neighborhood size (binary-spreading)");
  bnd_cmd->add_option("--nbhd", bnd.nbhd, "neighborhood offsets (chi)")
      ->delimiter(',');
  bnd_cmd->add_option("--p", bnd.p, "zero-range p (chi)");
  bnd_cmd->add_option("--q", bnd.q, "zero-range q (chi)");
  bnd_cmd->add_option("--t-max", bnd.t_max, "iteration depth (chi)");
  bnd_cmd->add_option("--out", bnd.out, "output path, - for stdout");
  bnd_cmd->callback([&] { run_bounds(bnd); });

  PercolationArgs perc;
  auto* perc_cmd =
      app.add_subcommand("percolation", "open-path probability vs bound");
  perc_cmd->add_option("--eps", perc.eps, "epsilon sweep")
      ->required()
      ->delimiter(',');
  perc_cmd->add_option("--r", perc.r, "spread graph arity");
  perc_cmd->add_option("--depth", perc.depth, "graph depth")
      ->check(CLI::PositiveNumber);
  perc_cmd->add_option("--trials", perc.trials, "Monte Carlo trials")
      ->check(CLI::PositiveNumber);
  perc_cmd->add_option("--seed", perc.seed, "RNG seed")->required();
  perc_cmd->add_option("--out", perc.out, "output path, - for stdout");
  perc_cmd->callback([&] { run_percolation(perc); });

  AsymptoticsArgs asy;
  auto* asy_cmd =
      app.add_subcommand("asymptotics", "series and block-weight checks");
  asy_cmd->add_option("--check", asy.check, "series | theta | gap")
      ->required()
      ->check(CLI::IsMember({"series", "theta", "gap"}));
  asy_cmd->add_option("--alpha", asy.alpha, "series exponents")->delimiter(',');
  asy_cmd->add_option("--beta", asy.beta, "series powers")->delimiter(',');
  asy_cmd->add_option("--x", asy.x, "evaluation points")->delimiter(',');
  asy_cmd->add_option("--big-c", asy.big_c, "alphabet sizes (gap)")
      ->delimiter(',');
  asy_cmd->add_option("--a", asy.a_list, "block widths (gap)")->delimiter(',');
  asy_cmd->add_option("--c", asy.c_list, "block quadratic costs (gap)")
      ->delimiter(',');
  asy_cmd->add_option("--eps", asy.eps, "epsilon sweep (gap)")->delimiter(',');
  asy_cmd->add_option("--out", asy.out, "output path, - for stdout");
  asy_cmd->callback([&] { run_asymptotics(asy); });

  TmBuildArgs tmb;
  auto* tmb_cmd =
      app.add_subcommand("tm-build", "embed a Turing machine, emit the manifest");
  tmb_cmd->add_option("--tm", tmb.tm, "machine file")->required();
  tmb_cmd->add_option("--v", tmb.v, "speed parameter (multiple of 20)");
  tmb_cmd->add_option("--out", tmb.out, "output path, - for stdout");
  tmb_cmd->callback([&] { run_tm_build(tmb); });

  TmRunArgs tmr;
  auto* tmr_cmd =
      app.add_subcommand("tm-run", "noiseless embedded runs and goldens");
  tmr_cmd->add_option("--tm", tmr.tm, "machine file")->required();
  tmr_cmd->add_option("--v", tmr.v, "speed parameter (multiple of 20)");
  tmr_cmd->add_option("--mode", tmr.mode, "trace | geometry | collide")
      ->check(CLI::IsMember({"trace", "geometry", "collide"}));
  tmr_cmd->add_option("--n", tmr.n, "torus side (trace; 0 = auto)");
  tmr_cmd->add_option("--steps", tmr.steps, "steps (trace)")
      ->check(CLI::NonNegativeNumber);
  tmr_cmd->add_option("--every", tmr.every, "row emission stride (trace)")
      ->check(CLI::PositiveNumber);
  tmr_cmd->add_option("--dt", tmr.dt, "birth delay of the younger zone (collide)");
  tmr_cmd->add_option("--separation", tmr.separation,
                      "zone separation (collide; 0 = default)");
  tmr_cmd->add_option("--tm-budget", tmr.tm_budget, "machine step budget (geometry)");
  tmr_cmd->add_option("--ca-budget", tmr.ca_budget,
                      "automaton step budget (geometry; 0 = default)");
  tmr_cmd->add_option("--out", tmr.out, "output path, - for stdout");
  tmr_cmd->callback([&] { run_tm_run(tmr); });

  TmDensityArgs tmd;
  auto* tmd_cmd =
      app.add_subcommand("tm-density", "symbol-class densities under noise");
  tmd_cmd->add_option("--tm", tmd.tm, "machine file")->required();
  tmd_cmd->add_option("--eps", tmd.eps, "epsilon sweep")
      ->required()
      ->delimiter(',');
  tmd_cmd->add_option("--v", tmd.v, "speed parameter (multiple of 20)");
  tmd_cmd->add_option("--n", tmd.n, "torus side")->check(CLI::PositiveNumber);
  tmd_cmd->add_option("--horizon", tmd.horizon, "steps per trial")
      ->check(CLI::PositiveNumber);
  tmd_cmd->add_option("--trials", tmd.trials, "independent trials")
      ->check(CLI::PositiveNumber);
  tmd_cmd->add_option("--start", tmd.start, "random | zero");
  tmd_cmd->add_option("--seed", tmd.seed, "RNG seed")->required();
  tmd_cmd->add_option("--out", tmd.out, "output path, - for stdout");
  tmd_cmd->callback([&] { run_tm_density(tmd); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
