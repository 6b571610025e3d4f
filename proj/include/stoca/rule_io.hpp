#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stoca/core.hpp"
#include "stoca/errors.hpp"

namespace stoca {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

}  // namespace detail

// Text format, one directive or transition per line:
//   alphabet: a,b,c
//   neighborhood: (0),(1)
//   a b -> c
// Every tuple over the alphabet must appear exactly once.
inline CellularAutomaton parse_rule(std::istream& in) {
  std::string alphabet_line, neighborhood_line;
  std::vector<std::string> transition_lines;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.rfind("alphabet:", 0) == 0) {
      if (!alphabet_line.empty()) throw config_error("duplicate alphabet line");
      alphabet_line = detail::trim(t.substr(9));
    } else if (t.rfind("neighborhood:", 0) == 0) {
      if (!neighborhood_line.empty())
        throw config_error("duplicate neighborhood line");
      neighborhood_line = detail::trim(t.substr(13));
    } else {
      transition_lines.push_back(t);
    }
  }
  if (alphabet_line.empty()) throw config_error("rule file missing alphabet line");
  if (neighborhood_line.empty())
    throw config_error("rule file missing neighborhood line");

  Alphabet alphabet(detail::split(alphabet_line, ','));

  std::vector<Offset> offsets;
  int dimension = -1;
  std::size_t pos = 0;
  while (pos < neighborhood_line.size()) {
    const auto open = neighborhood_line.find('(', pos);
    if (open == std::string::npos) {
      if (detail::trim(neighborhood_line.substr(pos)).find_first_not_of(',') !=
          std::string::npos)
        throw config_error("malformed neighborhood line");
      break;
    }
    const auto close = neighborhood_line.find(')', open);
    if (close == std::string::npos)
      throw config_error("unbalanced parenthesis in neighborhood");
    Offset off;
    for (const auto& part :
         detail::split(neighborhood_line.substr(open + 1, close - open - 1), ',')) {
      try {
        off.push_back(std::stoi(part));
      } catch (const std::exception&) {
        throw config_error("bad coordinate in neighborhood: " + part);
      }
    }
    if (dimension < 0) dimension = static_cast<int>(off.size());
    offsets.push_back(std::move(off));
    pos = close + 1;
  }
  Neighborhood neighborhood(dimension, std::move(offsets));

  const int c = alphabet.size();
  const int r = neighborhood.arity();
  std::size_t total = 1;
  for (int k = 0; k < r; ++k) total *= static_cast<std::size_t>(c);
  std::vector<Symbol> table(total, 0);
  std::vector<bool> seen(total, false);
  for (const auto& t : transition_lines) {
    const auto arrow = t.find("->");
    if (arrow == std::string::npos)
      throw config_error("transition line missing '->': " + t);
    std::istringstream lhs(t.substr(0, arrow));
    std::vector<Symbol> tuple;
    std::string tok;
    while (lhs >> tok) {
      const auto s = alphabet.index_of(tok);
      if (!s) throw config_error("unknown symbol in transition: " + tok);
      tuple.push_back(*s);
    }
    if (static_cast<int>(tuple.size()) != r)
      throw config_error("transition arity mismatch: " + t);
    const std::string rhs = detail::trim(t.substr(arrow + 2));
    const auto out = alphabet.index_of(rhs);
    if (!out) throw config_error("unknown output symbol: " + rhs);
    std::size_t idx = 0;
    for (Symbol s : tuple) idx = idx * c + s;
    if (seen[idx]) throw config_error("duplicate transition: " + t);
    seen[idx] = true;
    table[idx] = *out;
  }
  for (std::size_t i = 0; i < total; ++i)
    if (!seen[i]) throw config_error("rule table not exhaustive");
  return CellularAutomaton(alphabet, neighborhood, std::move(table));
}

inline CellularAutomaton parse_rule(const std::string& text) {
  std::istringstream in(text);
  return parse_rule(in);
}

inline CellularAutomaton load_rule_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open rule file: " + path);
  return parse_rule(in);
}

inline std::string serialize_rule(const CellularAutomaton& ca) {
  std::ostringstream out;
  out << "alphabet: ";
  for (int i = 0; i < ca.alphabet.size(); ++i) {
    if (i) out << ",";
    out << ca.alphabet.names[i];
  }
  out << "\nneighborhood: ";
  for (std::size_t k = 0; k < ca.neighborhood.offsets.size(); ++k) {
    if (k) out << ",";
    out << "(";
    for (std::size_t j = 0; j < ca.neighborhood.offsets[k].size(); ++j) {
      if (j) out << ",";
      out << ca.neighborhood.offsets[k][j];
    }
    out << ")";
  }
  out << "\n";
  const int c = ca.alphabet.size();
  const int r = ca.neighborhood.arity();
  std::vector<Symbol> tuple(r, 0);
  for (std::size_t idx = 0; idx < ca.table.size(); ++idx) {
    for (int k = 0; k < r; ++k) {
      if (k) out << " ";
      out << ca.alphabet.names[tuple[k]];
    }
    out << " -> " << ca.alphabet.names[ca.table[idx]] << "\n";
    for (int k = r - 1; k >= 0; --k) {
      if (++tuple[k] < c) break;
      tuple[k] = 0;
    }
  }
  return out.str();
}

}  // namespace stoca
