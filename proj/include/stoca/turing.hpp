#pragma once

// Turing machines with an explicit blank symbol and a total transition
// table, plus the reference interpreter the embedding is checked against.

#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "stoca/errors.hpp"

namespace stoca {

struct TmAction {
  int state = 0;
  int write = 0;
  int move = 0;  // -1 left, +1 right
};

// tape_symbols[0] is always the blank "_". delta rows of the halting state
// stay empty; every other (state, symbol) pair must have an action.
struct TuringMachine {
  std::vector<std::string> states;
  std::vector<std::string> tape_symbols;
  int start_state = 0;
  int halt_state = 0;
  std::vector<std::vector<TmAction>> delta;
};

inline void validate_tm(const TuringMachine& tm) {
  if (tm.states.size() < 2) throw config_error("need at least start and halt states");
  if (tm.start_state == tm.halt_state)
    throw config_error("start and halt states must differ");
  if (tm.tape_symbols.empty() || tm.tape_symbols[0] != "_")
    throw config_error("tape symbol 0 must be the blank _");
  if (tm.delta.size() != tm.states.size())
    throw config_error("transition table must cover every state");
  for (std::size_t q = 0; q < tm.states.size(); ++q) {
    if (static_cast<int>(q) == tm.halt_state) {
      if (!tm.delta[q].empty())
        throw config_error("halting state must have no outgoing transitions");
      continue;
    }
    if (tm.delta[q].size() != tm.tape_symbols.size())
      throw config_error("transitions must be total on non-halting states");
    for (const auto& a : tm.delta[q]) {
      if (a.state < 0 || a.state >= static_cast<int>(tm.states.size()) ||
          a.write < 0 || a.write >= static_cast<int>(tm.tape_symbols.size()) ||
          (a.move != -1 && a.move != 1))
        throw config_error("transition action out of range");
    }
  }
}

namespace detail {

inline std::string tm_trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// Text format: `start: q0`, `halt: qh`, then one `q,g -> q',g',L|R` per
// line. `_` is the blank; states and symbols are named on first use.
inline TuringMachine parse_tm(std::istream& in) {
  std::string start_name, halt_name;
  struct Row {
    std::string q, g, q2, g2;
    int move;
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = detail::tm_trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("start:", 0) == 0) {
      if (!start_name.empty()) throw config_error("duplicate start directive");
      start_name = detail::tm_trim(line.substr(6));
      continue;
    }
    if (line.rfind("halt:", 0) == 0) {
      if (!halt_name.empty()) throw config_error("duplicate halt directive");
      halt_name = detail::tm_trim(line.substr(5));
      continue;
    }
    const auto arrow = line.find("->");
    if (arrow == std::string::npos)
      throw config_error("bad transition line: " + line);
    const std::string lhs = detail::tm_trim(line.substr(0, arrow));
    const std::string rhs = detail::tm_trim(line.substr(arrow + 2));
    const auto lc = lhs.find(',');
    if (lc == std::string::npos) throw config_error("bad transition lhs: " + line);
    const auto r1 = rhs.find(',');
    const auto r2 = rhs.find(',', r1 == std::string::npos ? r1 : r1 + 1);
    if (r1 == std::string::npos || r2 == std::string::npos)
      throw config_error("bad transition rhs: " + line);
    Row r;
    r.q = detail::tm_trim(lhs.substr(0, lc));
    r.g = detail::tm_trim(lhs.substr(lc + 1));
    r.q2 = detail::tm_trim(rhs.substr(0, r1));
    r.g2 = detail::tm_trim(rhs.substr(r1 + 1, r2 - r1 - 1));
    const std::string mv = detail::tm_trim(rhs.substr(r2 + 1));
    if (mv == "L")
      r.move = -1;
    else if (mv == "R")
      r.move = 1;
    else
      throw config_error("move must be L or R: " + line);
    if (r.q.empty() || r.g.empty() || r.q2.empty() || r.g2.empty())
      throw config_error("empty token in transition: " + line);
    rows.push_back(std::move(r));
  }
  if (start_name.empty()) throw config_error("missing start directive");
  if (halt_name.empty()) throw config_error("missing halt directive");

  TuringMachine tm;
  tm.tape_symbols.push_back("_");
  auto state_id = [&tm](const std::string& name) {
    for (std::size_t i = 0; i < tm.states.size(); ++i)
      if (tm.states[i] == name) return static_cast<int>(i);
    tm.states.push_back(name);
    return static_cast<int>(tm.states.size() - 1);
  };
  auto symbol_id = [&tm](const std::string& name) {
    for (std::size_t i = 0; i < tm.tape_symbols.size(); ++i)
      if (tm.tape_symbols[i] == name) return static_cast<int>(i);
    tm.tape_symbols.push_back(name);
    return static_cast<int>(tm.tape_symbols.size() - 1);
  };
  tm.start_state = state_id(start_name);
  tm.halt_state = state_id(halt_name);
  for (const auto& r : rows) {
    state_id(r.q);
    state_id(r.q2);
    symbol_id(r.g);
    symbol_id(r.g2);
  }
  tm.delta.assign(tm.states.size(), {});
  for (std::size_t q = 0; q < tm.states.size(); ++q)
    if (static_cast<int>(q) != tm.halt_state)
      tm.delta[q].assign(tm.tape_symbols.size(), TmAction{-1, -1, 0});
  for (const auto& r : rows) {
    const int q = state_id(r.q);
    const int g = symbol_id(r.g);
    if (q == tm.halt_state)
      throw config_error("halting state cannot have transitions");
    TmAction& slot = tm.delta[q][g];
    if (slot.move != 0) throw config_error("duplicate transition for " + r.q + "," + r.g);
    slot = TmAction{state_id(r.q2), symbol_id(r.g2), r.move};
  }
  for (std::size_t q = 0; q < tm.states.size(); ++q) {
    if (static_cast<int>(q) == tm.halt_state) continue;
    for (std::size_t g = 0; g < tm.tape_symbols.size(); ++g)
      if (tm.delta[q][g].move == 0)
        throw config_error("missing transition for " + tm.states[q] + "," +
                           tm.tape_symbols[g]);
  }
  validate_tm(tm);
  return tm;
}

inline TuringMachine parse_tm(const std::string& text) {
  std::istringstream in(text);
  return parse_tm(in);
}

inline TuringMachine load_tm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open machine file: " + path);
  return parse_tm(in);
}

inline std::string serialize_tm(const TuringMachine& tm) {
  std::ostringstream out;
  out << "start: " << tm.states[tm.start_state] << "\n";
  out << "halt: " << tm.states[tm.halt_state] << "\n";
  for (std::size_t q = 0; q < tm.states.size(); ++q) {
    if (static_cast<int>(q) == tm.halt_state) continue;
    for (std::size_t g = 0; g < tm.tape_symbols.size(); ++g) {
      const TmAction& a = tm.delta[q][g];
      out << tm.states[q] << "," << tm.tape_symbols[g] << " -> "
          << tm.states[a.state] << "," << tm.tape_symbols[a.write] << ","
          << (a.move < 0 ? 'L' : 'R') << "\n";
    }
  }
  return out.str();
}

// Reference interpreter on an unbounded blank tape.
struct TmSim {
  const TuringMachine* tm = nullptr;
  std::map<long long, int> tape;
  long long head = 0;
  int state = 0;

  explicit TmSim(const TuringMachine& m) : tm(&m), state(m.start_state) {}

  int read(long long pos) const {
    const auto it = tape.find(pos);
    return it == tape.end() ? 0 : it->second;
  }
  bool halted() const { return state == tm->halt_state; }
  // Applies one transition; returns false when already halted.
  bool step() {
    if (halted()) return false;
    const TmAction& a = tm->delta[state][read(head)];
    tape[head] = a.write;
    head += a.move;
    state = a.state;
    return true;
  }
};

struct TmRun {
  bool halted = false;
  long long steps = 0;
  std::vector<long long> head_trajectory;
};

inline TmRun run_tm(const TuringMachine& tm, long long max_steps) {
  if (max_steps < 0) throw parameter_error("max_steps must be non-negative");
  validate_tm(tm);
  TmSim sim(tm);
  TmRun out;
  out.head_trajectory.push_back(0);
  while (out.steps < max_steps && !sim.halted()) {
    sim.step();
    ++out.steps;
    out.head_trajectory.push_back(sim.head);
  }
  out.halted = sim.halted();
  return out;
}

}  // namespace stoca
