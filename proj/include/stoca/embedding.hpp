#pragma once

// Machine embeddings: a radius-v local rule over an alphabet of zone
// symbols. A * seeds a computation zone in one step: a head over a blank
// tape, fenced by inner walls (speed v/5) and outer walls (speed v/4).
// The 0 symbol floods at speed v; each wall is transparent to floods
// coming from its interior side and opaque to floods from the exterior,
// so ambient zeros cannot enter a zone while a halting head, which
// writes 0, erases its own zone from within. When two zones touch, the
// opposing outer walls stop, a position signal is dropped at the contact
// cell and probe signals measure both buffer widths; the younger zone
// wins, the loser's contact wall is destroyed and the winner's outer
// wall rolls over the loser's content. Exact-tie contests keep the left
// zone.
//
// The step is organized as claim arbitration. Every structure offers
// next-step symbols for the cells it affects; claims are ranked by tier
// (star birth, halting write, wall moves, head moves, signal moves),
// then by an intra-tier priority, then leftmost-claimant. Flood marks
// carry their source cell so a wall claim survives exterior floods but
// dies to interior ones. Cells nobody claims keep their symbol, except
// that a tape symbol whose whole radius-v window is uniform toggles its
// prime flag, walls with no zone behind them decay to 0, and signals
// decay to blank tape. Every influence stays within radius v; the
// window driver below recomputes any cell from its window alone and is
// cross-checked against the row driver in the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stoca/asymptotics.hpp"
#include "stoca/errors.hpp"
#include "stoca/rng.hpp"
#include "stoca/turing.hpp"

namespace stoca {

using ESym = std::uint16_t;
using ERow = std::vector<ESym>;

struct EmbeddingParams {
  int v = 40;
};

inline void validate_embedding_params(const EmbeddingParams& p) {
  if (p.v < 20 || p.v % 20 != 0)
    throw parameter_error("speed parameter must be a positive multiple of 20");
}

enum class SymbolClass : std::uint8_t { kZero = 0, kStar, kWall, kB, kSignal };
inline constexpr int kSymbolClassCount = 5;

inline const char* symbol_class_name(SymbolClass c) {
  switch (c) {
    case SymbolClass::kZero: return "zero";
    case SymbolClass::kStar: return "star";
    case SymbolClass::kWall: return "wall";
    case SymbolClass::kB: return "b";
    case SymbolClass::kSignal: return "signal";
  }
  return "?";
}

// Signal roles, in intra-tier priority order: position signals first,
// then outbound probes, then inbound returners. Destruction marks make
// no claims of their own.
enum : int {
  kSigS1L = 0,
  kSigS1R,
  kSigS2L,
  kSigS2R,
  kSigDL,
  kSigDR,
  kSigPW,
  kSigPFL,
  kSigPFR,
  kSignalCount
};

struct EmbeddedAutomaton {
  TuringMachine tm;
  int v = 40;
  int n_tape = 0;   // tape symbols of the machine, blank first
  int n_heads = 0;  // (non-halting states) x tape symbols
  int total = 0;    // alphabet size

  static constexpr ESym kZero = 0;
  static constexpr ESym kStar = 1;
  static constexpr ESym kOL = 2;
  static constexpr ESym kIL = 3;
  static constexpr ESym kIR = 4;
  static constexpr ESym kOR = 5;
  ESym b_base = 6;
  ESym bp_base = 0;
  ESym h_base = 0;
  ESym sig_base = 0;

  std::vector<int> state_compact;  // state id -> head block row, -1 for halt
  std::vector<int> compact_state;  // head block row -> state id
  std::vector<std::string> names;
  std::vector<SymbolClass> classes;

  int outer_speed() const { return v / 4; }
  int inner_speed() const { return v / 5; }
  int probe_speed() const { return 4 * v / 5; }
  int return_speed() const { return v; }
  int stop_gap() const { return v / 2 + 1; }

  bool is_wall(ESym s) const { return s >= kOL && s <= kOR; }
  bool is_outer(ESym s) const { return s == kOL || s == kOR; }
  bool is_tape(ESym s) const { return s >= b_base && s < h_base; }
  bool is_head(ESym s) const { return s >= h_base && s < sig_base; }
  bool is_signal(ESym s) const { return s >= sig_base && s < total; }
  int tape_letter(ESym s) const {
    if (is_tape(s)) return (s - b_base) % n_tape;
    if (is_head(s)) return (s - h_base) % n_tape;
    throw parameter_error("symbol carries no tape letter");
  }
  int head_state(ESym s) const { return compact_state[(s - h_base) / n_tape]; }
  ESym b(int g) const { return static_cast<ESym>(b_base + g); }
  ESym bp(int g) const { return static_cast<ESym>(bp_base + g); }
  ESym head(int q, int g) const {
    return static_cast<ESym>(h_base + state_compact[q] * n_tape + g);
  }
  ESym sig(int k) const { return static_cast<ESym>(sig_base + k); }
  SymbolClass cls(ESym s) const { return classes[s]; }
};

inline EmbeddedAutomaton build_embedding(const TuringMachine& tm,
                                         const EmbeddingParams& params) {
  validate_embedding_params(params);
  validate_tm(tm);
  EmbeddedAutomaton e;
  e.tm = tm;
  e.v = params.v;
  e.n_tape = static_cast<int>(tm.tape_symbols.size());
  e.state_compact.assign(tm.states.size(), -1);
  for (std::size_t q = 0; q < tm.states.size(); ++q) {
    if (static_cast<int>(q) == tm.halt_state) continue;
    e.state_compact[q] = static_cast<int>(e.compact_state.size());
    e.compact_state.push_back(static_cast<int>(q));
  }
  e.n_heads = static_cast<int>(e.compact_state.size()) * e.n_tape;
  e.bp_base = static_cast<ESym>(e.b_base + e.n_tape);
  e.h_base = static_cast<ESym>(e.bp_base + e.n_tape);
  e.sig_base = static_cast<ESym>(e.h_base + e.n_heads);
  e.total = e.sig_base + kSignalCount;

  e.names.assign(e.total, "");
  e.classes.assign(e.total, SymbolClass::kZero);
  e.names[0] = "0";
  e.names[1] = "*";
  e.classes[1] = SymbolClass::kStar;
  const char* wall_names[] = {"OL", "IL", "IR", "OR"};
  for (int w = 0; w < 4; ++w) {
    e.names[2 + w] = wall_names[w];
    e.classes[2 + w] = SymbolClass::kWall;
  }
  for (int g = 0; g < e.n_tape; ++g) {
    e.names[e.b(g)] = "B_" + tm.tape_symbols[g];
    e.names[e.bp(g)] = "B'_" + tm.tape_symbols[g];
    e.classes[e.b(g)] = SymbolClass::kB;
    e.classes[e.bp(g)] = SymbolClass::kB;
  }
  for (int r = 0; r < static_cast<int>(e.compact_state.size()); ++r) {
    for (int g = 0; g < e.n_tape; ++g) {
      const ESym s = static_cast<ESym>(e.h_base + r * e.n_tape + g);
      e.names[s] =
          "H_" + tm.states[e.compact_state[r]] + "_" + tm.tape_symbols[g];
      e.classes[s] = SymbolClass::kB;
    }
  }
  const char* sig_names[] = {"S1L", "S1R", "S2L", "S2R", "DL",
                             "DR",  "PW",  "PFL", "PFR"};
  for (int k = 0; k < kSignalCount; ++k) {
    e.names[e.sig(k)] = sig_names[k];
    e.classes[e.sig(k)] = SymbolClass::kSignal;
  }
  return e;
}

namespace detail {

inline int floordiv2(int a) { return a >= 0 ? a / 2 : -((-a + 1) / 2); }

// One-step evaluator over a row segment. With torus=true the segment is
// the whole configuration and indices wrap; with torus=false it is a
// window of length 2v+1 and only the center cell of the result is
// meaningful.
class EmbedEngine {
 public:
  EmbedEngine(const EmbeddedAutomaton& e, int m, bool torus)
      : e_(e), m_(m), torus_(torus) {
    if (torus_ && m_ <= 2 * e_.v)
      throw window_error("torus must exceed twice the rule radius");
    if (!torus_ && m_ != 2 * e_.v + 1)
      throw parameter_error("window driver needs a 2v+1 segment");
    row_.resize(m_);
    next_.resize(m_);
    claims_.resize(m_);
    fsrc_r_.resize(m_);
    fsrc_l_.resize(m_);
    ext_l_.resize(m_);
    ext_r_.resize(m_);
    plan_at_.resize(m_);
  }

  const ERow& step(const ESym* row) {
    std::copy(row, row + m_, row_.begin());
    for (auto& c : claims_) c.clear();
    std::fill(fsrc_r_.begin(), fsrc_r_.end(), kNoFlood);
    std::fill(fsrc_l_.begin(), fsrc_l_.end(), kNoFlood);
    std::fill(plan_at_.begin(), plan_at_.end(), -1);
    walls_.clear();
    flood_scan();
    plan_walls();
    act_stars();
    act_heads();
    act_signals();
    resolve();
    return next_;
  }

 private:
  static constexpr int kNoFlood = 0x7fffffff;
  static constexpr ESym kOutside = 0xffff;

  struct Claim {
    int rel;  // claimant cell minus claimed cell
    ESym sym;
    std::uint8_t tier;  // 0 star, 1 halting write, 2 wall, 3 head, 4 signal
    std::uint8_t sub;
  };

  struct WallPlan {
    int pos;
    ESym sym;
    int target;
    bool to_d = false;
    ESym d_sym = 0;
    bool cancelled = false;
    bool spawn = false;
    int center = 0;  // stop midpoint when spawning
  };

  const EmbeddedAutomaton& e_;
  int m_;
  bool torus_;
  ERow row_, next_;
  std::vector<std::vector<Claim>> claims_;
  std::vector<int> fsrc_r_, fsrc_l_;
  std::vector<int> ext_l_, ext_r_;
  std::vector<int> plan_at_;
  std::vector<WallPlan> walls_;

  int wrap(int i) const {
    if (!torus_) return i;
    i %= m_;
    return i < 0 ? i + m_ : i;
  }
  bool known(int i) const { return torus_ || (i >= 0 && i < m_); }
  ESym peek(int i) const { return known(i) ? row_[wrap(i)] : kOutside; }

  void offer(int cell, int claimant, ESym sym, std::uint8_t tier,
             std::uint8_t sub) {
    if (!known(cell)) return;
    claims_[wrap(cell)].push_back(Claim{claimant - cell, sym, tier, sub});
  }

  // Directional flood marks. A scan carries the position of the feeding
  // zero; left-side wall symbols absorb rightward floods, right-side
  // ones absorb leftward floods, and each direction rolls over the other
  // pair. Zero cells themselves are never marked.
  void flood_scan() {
    const int v = e_.v;
    const int rounds = torus_ ? 2 * m_ : m_;
    int budget = 0, src = 0;
    for (int k = 0; k < rounds; ++k) {
      const int i = torus_ ? k % m_ : k;
      const ESym s = row_[i];
      if (s == EmbeddedAutomaton::kZero) {
        budget = v;
        src = k;
        continue;
      }
      if (s == EmbeddedAutomaton::kOL || s == EmbeddedAutomaton::kIL) {
        budget = 0;
        continue;
      }
      if (budget > 0) {
        fsrc_r_[i] = src - k;
        --budget;
      }
    }
    budget = 0;
    for (int k = rounds - 1; k >= 0; --k) {
      const int i = torus_ ? k % m_ : k;
      const ESym s = row_[i];
      if (s == EmbeddedAutomaton::kZero) {
        budget = v;
        src = k;
        continue;
      }
      if (s == EmbeddedAutomaton::kOR || s == EmbeddedAutomaton::kIR) {
        budget = 0;
        continue;
      }
      if (budget > 0) {
        fsrc_l_[i] = src - k;
        --budget;
      }
    }
  }

  bool p_like(ESym s) const {
    return s == e_.sig(kSigPW) || s == e_.sig(kSigPFL) || s == e_.sig(kSigPFR);
  }

  // A wall acts only with zone content behind it; a wall whose interior
  // neighbor is a zero, a star, or a copy of itself has nothing to
  // protect and decays.
  bool wall_supported(ESym sym, int pos) const {
    const bool left_side = (sym == EmbeddedAutomaton::kOL ||
                            sym == EmbeddedAutomaton::kIL);
    const ESym nb = peek(left_side ? pos + 1 : pos - 1);
    if (nb == kOutside) return true;
    return nb != EmbeddedAutomaton::kZero && nb != EmbeddedAutomaton::kStar &&
           nb != sym;
  }

  // A wall is caught by the erasure wave when a 0 sits on its interior
  // side, unshadowed by an opposing wall, close enough that hopping away
  // cannot outrun the flood. A caught wall makes no claims at all.
  bool wall_caught(ESym sym, int pos) const {
    const bool left_side = (sym == EmbeddedAutomaton::kOL ||
                            sym == EmbeddedAutomaton::kIL);
    const int dir = left_side ? +1 : -1;  // interior, toward the zone
    const int reach = e_.v - e_.outer_speed();
    for (int d = 1; d <= reach; ++d) {
      const ESym s = peek(pos + dir * d);
      if (s == kOutside) return false;
      if (s == EmbeddedAutomaton::kZero) return true;
      if (left_side) {
        if (s == EmbeddedAutomaton::kOR || s == EmbeddedAutomaton::kIR)
          return false;  // shadowed against leftward floods
      } else {
        if (s == EmbeddedAutomaton::kOL || s == EmbeddedAutomaton::kIL)
          return false;
      }
    }
    return false;
  }

  bool fire_aimed_at(int pos) const {
    return peek(pos - 1) == e_.sig(kSigPFR) || peek(pos + 1) == e_.sig(kSigPFL);
  }

  void plan_walls() {
    const int outer = e_.outer_speed();
    const int inner = e_.inner_speed();
    const int gap_max = e_.stop_gap();
    // Outer walls first: inner caps depend on their targets.
    for (int i = 0; i < m_; ++i) {
      const ESym s = row_[i];
      if (s != EmbeddedAutomaton::kOL && s != EmbeddedAutomaton::kOR) continue;
      if (!wall_supported(s, i) || wall_caught(s, i)) continue;
      WallPlan w;
      w.pos = i;
      w.sym = s;
      if (fire_aimed_at(i)) {
        w.to_d = true;
        w.target = i;
        w.d_sym = e_.sig(peek(i + 1) == e_.sig(kSigPFL) ? kSigDL : kSigDR);
        push_plan(w);
        continue;
      }
      const int dir = (s == EmbeddedAutomaton::kOL) ? -1 : +1;
      const ESym opposing = (s == EmbeddedAutomaton::kOL)
                                ? EmbeddedAutomaton::kOR
                                : EmbeddedAutomaton::kOL;
      int opp = kNoFlood;
      for (int d = 1; d <= gap_max; ++d) {
        const ESym t = peek(i + dir * d);
        if (t == kOutside) break;
        if (t == opposing) {
          opp = i + dir * d;
          break;
        }
      }
      if (opp != kNoFlood) {
        const int c = floordiv2(i + opp);
        w.target = (s == EmbeddedAutomaton::kOR) ? c - 1 : c + 1;
        const int gap = dir * (opp - i);
        if (!(gap == 2 && p_like(peek(c)))) {
          w.spawn = true;
          w.center = c;
        }
      } else {
        w.target = i + dir * outer;
      }
      push_plan(w);
    }
    // Inner walls, capped one cell inside their own outer wall.
    for (int i = 0; i < m_; ++i) {
      const ESym s = row_[i];
      if (s != EmbeddedAutomaton::kIL && s != EmbeddedAutomaton::kIR) continue;
      if (!wall_supported(s, i) || wall_caught(s, i)) continue;
      WallPlan w;
      w.pos = i;
      w.sym = s;
      if (fire_aimed_at(i)) {
        w.to_d = true;
        w.target = i;
        w.d_sym = e_.sig(peek(i + 1) == e_.sig(kSigPFL) ? kSigDL : kSigDR);
        push_plan(w);
        continue;
      }
      const int dir = (s == EmbeddedAutomaton::kIL) ? -1 : +1;
      const ESym own_outer = (s == EmbeddedAutomaton::kIL)
                                 ? EmbeddedAutomaton::kOL
                                 : EmbeddedAutomaton::kOR;
      int target = i + dir * inner;
      for (int d = 1; d <= inner + 1; ++d) {
        const int j = i + dir * d;
        if (peek(j) != own_outer) continue;
        const int slot = plan_at_[wrap(j)];
        // Rebuild the outer's landing relative to j: plan coordinates are
        // canonical and j may sit across the wrap.
        const int outer_next =
            j + (slot >= 0 ? walls_[slot].target - walls_[slot].pos : 0);
        if (dir < 0)
          target = std::max(target, outer_next + 1);
        else
          target = std::min(target, outer_next - 1);
        break;
      }
      if (dir < 0)
        target = std::min(target, i);
      else
        target = std::max(target, i);
      w.target = target;
      push_plan(w);
    }
    cancel_crossings();
    emit_wall_claims();
  }

  void push_plan(WallPlan w) {
    plan_at_[wrap(w.pos)] = static_cast<int>(walls_.size());
    walls_.push_back(w);
  }

  // An inner wall still shepherded by its own outer wall outranks an
  // orphan from a destroyed pair.
  bool inner_escorted(ESym sym, int pos) const {
    const int dir = (sym == EmbeddedAutomaton::kIL) ? -1 : +1;
    const ESym outer = (sym == EmbeddedAutomaton::kIL)
                           ? EmbeddedAutomaton::kOL
                           : EmbeddedAutomaton::kOR;
    for (int d = 1; d <= e_.outer_speed() + 1; ++d)
      if (peek(pos + dir * d) == outer) return true;
    return false;
  }

  // Two walls whose trajectories strictly swap order cannot both land:
  // outer beats inner, an escorted inner beats an orphaned one, and
  // otherwise the left wall survives. Only the loser's landing claim is
  // dropped; its trail still backfills.
  void cancel_crossings() {
    // A strict swap needs move_a - move_b > d; moves never exceed the
    // outer speed in magnitude, so farther pairs cannot cross.
    const int reach = 2 * e_.outer_speed() - 1;
    for (auto& b : walls_) {
      if (b.to_d) continue;
      for (int d = 1; d <= reach; ++d) {
        const int j = wrap(b.pos - d);
        if (!known(b.pos - d)) break;
        const int slot = plan_at_[j];
        if (slot < 0) continue;
        auto& a = walls_[slot];
        if (a.to_d) continue;
        const int move_a = a.target - a.pos;
        const int move_b = b.target - b.pos;
        if (move_a - move_b <= d) continue;  // order preserved
        const bool a_outer = e_.is_outer(a.sym);
        const bool b_outer = e_.is_outer(b.sym);
        bool cancel_b;
        if (a_outer != b_outer)
          cancel_b = a_outer;
        else if (a_outer)
          cancel_b = true;
        else {
          const bool ea = inner_escorted(a.sym, a.pos);
          const bool eb = inner_escorted(b.sym, b.pos);
          cancel_b = ea || !eb;
        }
        if (cancel_b)
          b.cancelled = true;
        else
          a.cancelled = true;
      }
    }
  }

  void emit_wall_claims() {
    for (const auto& w : walls_) {
      if (w.to_d) {
        offer(w.pos, w.pos, w.d_sym, 2, 0);
        continue;
      }
      const std::uint8_t act_sub = e_.is_outer(w.sym) ? 1 : 2;
      if (!w.cancelled) offer(w.target, w.pos, w.sym, 2, act_sub);
      const int lo = std::min(w.pos, w.target);
      const int hi = std::max(w.pos, w.target);
      for (int c = lo; c <= hi; ++c)
        if (c != w.target) offer(c, w.pos, e_.b(0), 2, 4);
      if (w.spawn) {
        if (w.sym == EmbeddedAutomaton::kOR) {
          offer(w.center, w.pos, e_.sig(kSigPW), 2, 3);
          offer(w.center - 2, w.pos, e_.sig(kSigS1L), 2, 3);
        } else {
          offer(w.center + 2, w.pos, e_.sig(kSigS1R), 2, 3);
        }
      }
    }
  }

  void act_stars() {
    const int outer = e_.outer_speed();
    const int inner = e_.inner_speed();
    for (int i = 0; i < m_; ++i) {
      if (row_[i] != EmbeddedAutomaton::kStar) continue;
      offer(i - outer, i, EmbeddedAutomaton::kOL, 0, 0);
      offer(i + outer, i, EmbeddedAutomaton::kOR, 0, 0);
      for (int off = -outer + 1; off <= outer - 1; ++off) {
        ESym s = e_.b(0);
        if (off == -inner)
          s = EmbeddedAutomaton::kIL;
        else if (off == inner)
          s = EmbeddedAutomaton::kIR;
        else if (off == 0)
          s = e_.head(e_.tm.start_state, 0);
        offer(i + off, i, s, 0, 0);
      }
    }
  }

  void act_heads() {
    for (int i = 0; i < m_; ++i) {
      const ESym s = row_[i];
      if (!e_.is_head(s)) continue;
      const int q = e_.head_state(s);
      const int g = e_.tape_letter(s);
      const TmAction& a = e_.tm.delta[q][g];
      if (a.state == e_.tm.halt_state) {
        offer(i, i, EmbeddedAutomaton::kZero, 1, 0);
        continue;
      }
      const int j = i + a.move;
      const ESym tj = peek(j);
      if (tj != kOutside && e_.is_head(tj)) {
        // Adjacent heads drop their state and melt back into tape.
        offer(i, i, e_.b(g), 3, 0);
        continue;
      }
      const int gj = (tj != kOutside && e_.is_tape(tj)) ? e_.tape_letter(tj) : 0;
      offer(i, i, e_.b(a.write), 3, 0);
      offer(j, i, e_.head(a.state, gj), 3, 0);
    }
  }

  // A signal whose next cell along its motion is another signal decays,
  // so no uniform signal configuration survives a step.
  bool signal_supported(int i, int dir) const {
    const ESym a = peek(i + dir);
    return a == kOutside || !e_.is_signal(a);
  }

  int wall_free_move(ESym s) const {
    switch (s) {
      case EmbeddedAutomaton::kOL: return -e_.outer_speed();
      case EmbeddedAutomaton::kOR: return +e_.outer_speed();
      case EmbeddedAutomaton::kIL: return -e_.inner_speed();
      default: return +e_.inner_speed();
    }
  }

  // Probe parking: the outbound probe stops one cell short of where the
  // first wall on its path will sit after this step, judged from that
  // wall's cruising speed, and turns into a returner. A wall past v
  // cannot yield a landing the probe can reach, so the scan ends there.
  void act_probe(int p, int dir) {
    const int cruise = p + dir * e_.probe_speed();
    int park = kNoFlood, park_off = kNoFlood;
    for (int d = 1; d <= e_.v; ++d) {
      const int x = p + dir * d;
      const ESym s = peek(x);
      if (s == kOutside) break;
      if (!e_.is_wall(s)) continue;
      const int cand = x + wall_free_move(s) - dir;
      const int off = dir * (cand - p);  // travel needed to sit at cand
      if (off < 0 || off > e_.probe_speed()) continue;
      if (park == kNoFlood || off < park_off) {
        park = cand;
        park_off = off;
      }
    }
    if (park != kNoFlood)
      offer(park, p, e_.sig(dir < 0 ? kSigS2L : kSigS2R), 4, 2);
    else
      offer(cruise, p, e_.sig(dir < 0 ? kSigS1L : kSigS1R), 4, 1);
  }

  void act_returner(int p, int dir) {
    for (int d = 1; d <= e_.return_speed(); ++d) {
      const int x = p + dir * d;
      if (!known(x)) break;
      if (peek(x) == e_.sig(kSigPW)) return;  // absorbed at the position signal
    }
    offer(p + dir * e_.return_speed(), p, e_.sig(dir < 0 ? kSigS2R : kSigS2L),
          4, 2);
  }

  void act_position(int c) {
    if (!(known(c - 1) && known(c + 1) && e_.is_wall(peek(c - 1)) &&
          e_.is_wall(peek(c + 1)))) {
      return;  // unsupported, decays
    }
    int dist_l = 0, dist_r = 0;
    for (int d = 1; d <= e_.return_speed(); ++d) {
      const ESym s = peek(c - d);
      if (s == kOutside || s == e_.sig(kSigPW)) break;
      if (s == e_.sig(kSigS2L)) {
        dist_l = d;
        break;
      }
    }
    for (int d = 1; d <= e_.return_speed(); ++d) {
      const ESym s = peek(c + d);
      if (s == kOutside || s == e_.sig(kSigPW)) break;
      if (s == e_.sig(kSigS2R)) {
        dist_r = d;
        break;
      }
    }
    if (dist_l == 0 && dist_r == 0) {
      offer(c, c, e_.sig(kSigPW), 4, 0);
      return;
    }
    // The nearer returner came back first, so its side is younger and
    // survives; the fire aims at the other side. Exact tie: left wins.
    bool left_survives;
    if (dist_l == 0)
      left_survives = false;
    else if (dist_r == 0)
      left_survives = true;
    else
      left_survives = dist_l <= dist_r;
    offer(c, c, e_.sig(left_survives ? kSigPFR : kSigPFL), 4, 0);
  }

  void act_signals() {
    for (int i = 0; i < m_; ++i) {
      const ESym s = row_[i];
      if (!e_.is_signal(s)) continue;
      const int k = s - e_.sig_base;
      if (k == kSigPW) {
        act_position(i);
        continue;
      }
      if (k == kSigDL || k == kSigDR || k == kSigPFL || k == kSigPFR)
        continue;  // one-step marks, decay via the default layer
      switch (k) {
        case kSigS1L:
          if (signal_supported(i, -1)) act_probe(i, -1);
          break;
        case kSigS1R:
          if (signal_supported(i, +1)) act_probe(i, +1);
          break;
        case kSigS2L:
          if (signal_supported(i, +1)) act_returner(i, +1);
          break;
        case kSigS2R:
          if (signal_supported(i, -1)) act_returner(i, -1);
          break;
        default: break;
      }
    }
  }

  static bool better(const Claim& a, const Claim& b) {
    if (a.sub != b.sub) return a.sub < b.sub;
    return a.rel < b.rel;
  }

  void resolve() {
    compute_uniform();
    for (int i = 0; i < m_; ++i) {
      const Claim* best[5] = {nullptr, nullptr, nullptr, nullptr, nullptr};
      for (const Claim& c : claims_[i]) {
        const Claim*& slot = best[c.tier];
        if (slot == nullptr || better(c, *slot)) slot = &c;
      }
      ESym out;
      if (best[0] != nullptr)
        out = best[0]->sym;
      else if (best[1] != nullptr)
        out = best[1]->sym;
      else if (best[2] != nullptr)
        out = best[2]->sym;
      else if (fsrc_r_[i] != kNoFlood || fsrc_l_[i] != kNoFlood)
        out = EmbeddedAutomaton::kZero;
      else if (best[3] != nullptr)
        out = best[3]->sym;
      else if (best[4] != nullptr)
        out = best[4]->sym;
      else
        out = fallback(i);
      next_[i] = out;
    }
  }

  ESym fallback(int i) const {
    const ESym s = row_[i];
    if (s == EmbeddedAutomaton::kZero) return s;
    if (e_.is_tape(s)) {
      if (ext_l_[i] >= e_.v && ext_r_[i] >= e_.v) {
        const int g = e_.tape_letter(s);
        return s < e_.bp_base ? e_.bp(g) : e_.b(g);
      }
      return s;
    }
    if (e_.is_head(s)) return e_.b(e_.tape_letter(s));
    if (e_.is_signal(s)) return e_.b(0);
    return EmbeddedAutomaton::kZero;  // unsupported walls and stray stars
  }

  // Run extents of equal symbols, capped; for the torus the second pass
  // of a doubled scan carries the wrap-around run in.
  void compute_uniform() {
    const int cap = 2 * e_.v + 2;
    const int rounds = torus_ ? 2 * m_ : m_;
    int carry = 0;
    for (int k = rounds - 1; k >= 0; --k) {
      const int i = torus_ ? k % m_ : k;
      const int j = k + 1;
      if (j < rounds && row_[i] == row_[torus_ ? j % m_ : j])
        carry = std::min(carry + 1, cap);
      else
        carry = 0;
      if (k < m_) ext_r_[i] = carry;
    }
    carry = 0;
    for (int k = 0; k < rounds; ++k) {
      const int i = torus_ ? k % m_ : k;
      const int j = k - 1;
      if (j >= 0 && row_[i] == row_[torus_ ? j % m_ : j])
        carry = std::min(carry + 1, cap);
      else
        carry = 0;
      if (k >= rounds - m_) ext_l_[i] = carry;
    }
  }
};

}  // namespace detail

// Reusable torus stepper.
class EmbeddedStepper {
 public:
  EmbeddedStepper(const EmbeddedAutomaton& e, int n) : eng_(e, n, true) {}
  ERow step(const ERow& row) { return eng_.step(row.data()); }

 private:
  detail::EmbedEngine eng_;
};

inline ERow step_row(const EmbeddedAutomaton& e, const ERow& row) {
  detail::EmbedEngine eng(e, static_cast<int>(row.size()), true);
  return eng.step(row.data());
}

// Canonical window form of the same rule: the next symbol of the center
// cell from its radius-v window alone.
inline ESym local_rule(const EmbeddedAutomaton& e, const ESym* window) {
  detail::EmbedEngine eng(e, 2 * e.v + 1, false);
  return eng.step(window)[e.v];
}

// Independent uniform initial rows and the noise channel, on counter
// streams so trials and times never share randomness. The channel hits
// a cell with probability eps and forces a symbol uniform over the
// alphabet, reusing the remaining bits of the same draw.
inline ERow random_row(const EmbeddedAutomaton& e, int n, std::uint64_t seed,
                       std::uint64_t trial) {
  CounterRng rng{seed, Stream::kInitial};
  ERow row(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(trial, 0, static_cast<std::uint64_t>(i));
    row[i] = static_cast<ESym>(
        std::min<int>(e.total - 1, static_cast<int>(u * e.total)));
  }
  return row;
}

inline void apply_noise(const EmbeddedAutomaton& e, ERow& row, double eps,
                        std::uint64_t seed, std::uint64_t trial,
                        std::uint64_t t) {
  if (eps <= 0.0) return;
  CounterRng rng{seed, Stream::kErrorField};
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double u = rng.uniform(trial, t, i);
    if (u >= eps) continue;
    row[i] = static_cast<ESym>(
        std::min<int>(e.total - 1, static_cast<int>(u * e.total / eps)));
  }
}

// Geometry of the halting cone: a lone * runs the machine for H steps
// and the zone then erases itself; T is the first step the torus is
// all-0 again. Space-time cones of height T with slope v/4 are what the
// halting-regime event bounds below integrate over.
struct ConeGeometry {
  bool halted = false;
  long long tm_steps = -1;
  long long cone_height = -1;
  int v = 0;
  double k_prime = 0.0;

  bool in_cone(long long j, long long t, long long i, long long s) const {
    const long long dt = s - t;
    if (dt <= 0 || dt > cone_height) return false;
    return std::llabs(i - j) <= (v / 4) * dt;
  }
  long long cone_cell_count() const {
    if (cone_height < 0) return 0;
    return cone_height + (v / 4) * cone_height * (cone_height + 1);
  }
};

inline double cone_aperture_constant(int v) {
  const double a = 4.0 / v;
  return std::sin(std::atan(a)) *
         (std::sqrt(1.0 + (v / 4.0) * (v / 4.0)) -
          (v / 8.0) * std::sqrt(1.0 + a * a));
}

inline ConeGeometry compute_cone_geometry(const EmbeddedAutomaton& e,
                                          long long tm_budget = 200000,
                                          long long ca_budget = 0) {
  ConeGeometry g;
  g.v = e.v;
  g.k_prime = cone_aperture_constant(e.v);
  const TmRun run = run_tm(e.tm, tm_budget);
  if (!run.halted) return g;
  g.halted = true;
  g.tm_steps = run.steps;
  const long long h = run.steps;
  if (ca_budget <= 0) ca_budget = 2 * h + 64;
  long long n = (e.v / 2) * (h + 6) + 4 * e.v;
  ERow row(static_cast<std::size_t>(n), 0);
  row[static_cast<std::size_t>(n / 2)] = EmbeddedAutomaton::kStar;
  EmbeddedStepper stepper(e, static_cast<int>(n));
  const auto all_zero = [](const ERow& r) {
    return std::all_of(r.begin(), r.end(), [](ESym s) { return s == 0; });
  };
  for (long long t = 1; t <= ca_budget; ++t) {
    row = stepper.step(row);
    if (all_zero(row)) {
      g.cone_height = t;
      row = stepper.step(row);
      if (!all_zero(row))
        throw ergodicity_error("all-0 configuration failed to persist");
      return g;
    }
  }
  throw budget_error("halting zone did not erase within the step budget");
}

// Two-zone contest. Zone A is seeded at time 0, zone B dt steps later
// and `separation` cells to the right; control runs with a single zone
// identify the survivor. Stage times record the first appearance of the
// position signal, the probes, the returners, the fire and the
// destruction mark.
struct CollisionOutcome {
  int survivor = -1;  // 0 = older/left zone, 1 = younger/right zone
  bool stages_in_order = false;
  long long stopped_at = -1;   // position signal dropped
  long long fired_at = -1;     // contest decided
  long long resolved_at = -1;  // no signal symbols remain
  long long first_probe = -1;
  long long first_returner = -1;
  long long first_mark = -1;
};

inline CollisionOutcome collision_test(const EmbeddedAutomaton& e,
                                       long long dt, int separation = 0,
                                       long long budget = 0) {
  if (dt < 0) throw parameter_error("second zone cannot predate the first");
  if (separation <= 0) separation = 8 * e.v + 1;
  if (budget <= 0)
    budget = 8 * separation / e.v + 10 * dt + 400;
  const int n = 3 * separation + 8 * e.v;
  const int pa = (n - separation) / 2;
  const int pb = pa + separation;

  ERow main_row(n, 0), ctl_a(n, 0), ctl_b(n, 0);
  EmbeddedStepper sm(e, n), sa(e, n), sb(e, n);
  CollisionOutcome out;

  const auto first_head = [&](const ERow& r) {
    for (int i = 0; i < n; ++i)
      if (e.is_head(r[i])) return i;
    return -1;
  };
  const auto head_count = [&](const ERow& r) {
    int c = 0;
    for (int i = 0; i < n; ++i)
      if (e.is_head(r[i])) ++c;
    return c;
  };

  for (long long t = 0; t <= budget; ++t) {
    if (t == 0) {
      main_row[pa] = EmbeddedAutomaton::kStar;
      ctl_a[pa] = EmbeddedAutomaton::kStar;
    }
    if (t == dt) {
      main_row[pb] = EmbeddedAutomaton::kStar;
      ctl_b[pb] = EmbeddedAutomaton::kStar;
    }
    bool any_signal = false;
    bool pw = false, s1 = false, s2 = false, fire = false, mark = false;
    for (int i = 0; i < n; ++i) {
      const ESym s = main_row[i];
      if (!e.is_signal(s)) continue;
      any_signal = true;
      const int k = s - e.sig_base;
      pw |= k == kSigPW;
      s1 |= k == kSigS1L || k == kSigS1R;
      s2 |= k == kSigS2L || k == kSigS2R;
      fire |= k == kSigPFL || k == kSigPFR;
      mark |= k == kSigDL || k == kSigDR;
    }
    if (pw && out.stopped_at < 0) out.stopped_at = t;
    if (s1 && out.first_probe < 0) out.first_probe = t;
    if (s2 && out.first_returner < 0) out.first_returner = t;
    if (fire && out.fired_at < 0) out.fired_at = t;
    if (mark && out.first_mark < 0) out.first_mark = t;
    if (out.fired_at >= 0 && !any_signal && out.resolved_at < 0)
      out.resolved_at = t;
    if (out.resolved_at >= 0 && head_count(main_row) == 1) {
      const int h = first_head(main_row);
      if (h == first_head(ctl_a))
        out.survivor = 0;
      else if (h == first_head(ctl_b))
        out.survivor = 1;
      if (out.survivor >= 0) {
        out.stages_in_order =
            out.stopped_at >= 0 && out.first_probe >= 0 &&
            out.first_returner >= 0 && out.fired_at >= 0 &&
            out.first_mark >= 0 && out.stopped_at <= out.first_probe &&
            out.first_probe < out.first_returner &&
            out.first_returner < out.fired_at &&
            out.fired_at < out.first_mark && out.first_mark <= out.resolved_at;
        return out;
      }
    }
    main_row = sm.step(main_row);
    ctl_a = sa.step(ctl_a);
    ctl_b = sb.step(ctl_b);
  }
  if (out.stopped_at < 0)
    throw inconclusive_error("zones never met within the step budget");
  throw inconclusive_error("contest did not resolve within the step budget");
}

// Lower bound on the invariant weight of non-0 symbols for a non-halting
// machine: block n has 2n(v/5 - 1) buffer cells that must all dodge a
// reset to 0 while the vn^2 cells of its history stay error free.
struct FBound {
  double value = 0.0;
  double limit = 0.0;
};

inline FBound nonhalting_lower_bound_f(double eps, int v, int alphabet_size) {
  validate_embedding_params(EmbeddingParams{v});
  if (!(eps > 0.0) || eps >= 1.0)
    throw parameter_error("noise rate must lie in (0,1)");
  if (alphabet_size < 2) throw parameter_error("alphabet too small");
  BlockWeightQuery q;
  q.big_c = static_cast<double>(alphabet_size);
  q.a = 2 * (v / 5 - 1);
  q.c = v;
  q.eps = eps;
  return FBound{block_gap_sum(q), block_gap_limit(q)};
}

// Monte Carlo symbol-class densities under noise, sampled after burn-in
// with per-trial scatter giving the standard errors.
enum class StartMode { kRandom, kZero };

struct DensityEstimate {
  std::array<double, kSymbolClassCount> mean{};
  std::array<double, kSymbolClassCount> se{};
  long long trials = 0;
  long long samples_per_trial = 0;
};

inline DensityEstimate estimate_symbol_density(
    const EmbeddedAutomaton& e, double eps, int n, long long horizon,
    long long trials, std::uint64_t seed, StartMode start = StartMode::kRandom) {
  if (eps < 0.0 || eps >= 1.0)
    throw parameter_error("noise rate must lie in [0,1)");
  if (n <= 2 * e.v) throw window_error("torus must exceed twice the radius");
  if (horizon < 4 || trials < 2)
    throw parameter_error("need a horizon of at least 4 and two trials");
  const long long burn = horizon / 2;
  const long long thin = 10;
  EmbeddedStepper stepper(e, n);
  std::vector<std::array<double, kSymbolClassCount>> freq(
      static_cast<std::size_t>(trials));
  long long samples = 0;
  for (long long trial = 0; trial < trials; ++trial) {
    ERow row = start == StartMode::kRandom
                   ? random_row(e, n, seed, static_cast<std::uint64_t>(trial))
                   : ERow(static_cast<std::size_t>(n), 0);
    std::array<long long, kSymbolClassCount> counts{};
    long long rows_sampled = 0;
    for (long long t = 1; t <= horizon; ++t) {
      row = stepper.step(row);
      apply_noise(e, row, eps, seed, static_cast<std::uint64_t>(trial),
                  static_cast<std::uint64_t>(t));
      if (t > burn && (t - burn) % thin == 0) {
        for (ESym s : row) ++counts[static_cast<int>(e.cls(s))];
        ++rows_sampled;
      }
    }
    samples = rows_sampled * n;
    for (int c = 0; c < kSymbolClassCount; ++c)
      freq[static_cast<std::size_t>(trial)][c] =
          static_cast<double>(counts[c]) / static_cast<double>(samples);
  }
  DensityEstimate out;
  out.trials = trials;
  out.samples_per_trial = samples;
  for (int c = 0; c < kSymbolClassCount; ++c) {
    double m = 0.0;
    for (const auto& f : freq) m += f[c];
    m /= static_cast<double>(trials);
    double var = 0.0;
    for (const auto& f : freq) var += (f[c] - m) * (f[c] - m);
    var /= static_cast<double>(trials - 1);
    out.mean[c] = m;
    out.se[c] = std::sqrt(var / static_cast<double>(trials));
  }
  return out;
}

// Halting regime: the weight of configurations that fail to look like a
// dead sea of zeros splits over where and when the responsible error
// struck, relative to the space-time cone of height T. The pieces decay
// geometrically in the cone aperture constant.
struct EventBounds {
  double omega0 = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double omega3 = 0.0;
  double omega0_prime = 0.0;
  double omega3_prime = 0.0;
  double total = 0.0;
  double k_prime = 0.0;
};

inline EventBounds halting_event_bounds(double eps, int v, int alphabet_size,
                                        long long cone_height,
                                        double pi_b = 0.0) {
  validate_embedding_params(EmbeddingParams{v});
  if (!(eps > 0.0) || eps >= 1.0)
    throw parameter_error("noise rate must lie in (0,1)");
  if (alphabet_size < 2 || cone_height < 1)
    throw parameter_error("need an alphabet and a positive cone height");
  EventBounds b;
  b.k_prime = cone_aperture_constant(v);
  const double c = static_cast<double>(alphabet_size);
  const double t2 = static_cast<double>(cone_height) *
                    static_cast<double>(cone_height);
  const double x = std::pow(1.0 - eps / c, b.k_prime);
  SeriesQuery half;
  half.alpha = 0.5;
  half.beta = 1;
  half.x = x;
  SeriesQuery two_thirds;
  two_thirds.alpha = 2.0 / 3.0;
  two_thirds.beta = 1;
  two_thirds.x = x;
  b.omega0 = eps / c;
  b.omega1 = (v / 2.0 + 1.0) * t2 * eps / c;
  b.omega2 = 2.0 * (eps / c) * (1.0 - std::pow(1.0 - eps, v * t2 / 4.0)) *
             std::pow(1.0 - eps / c, -v * t2 / 4.0) *
             truncated_power_sum(half);
  b.omega3 = 4.0 * eps * eps * std::sqrt(static_cast<double>(v)) *
             truncated_power_sum(two_thirds);
  b.omega0_prime = eps / c;
  b.omega3_prime = pi_b;
  b.total = b.omega0 + b.omega1 + b.omega2 + b.omega3 + b.omega0_prime +
            b.omega3_prime;
  return b;
}

}  // namespace stoca
