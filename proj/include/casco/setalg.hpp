#pragma once

// Symbolic sets of leaves over a cascade schema.
//
// The representable sets are boolean combinations of canonical base sets
// V(g) (leaf kept iff at every node on its path the choice clears the
// node's level: child index at internal nodes, remaining weight at
// flattened nodes) and explicit finite sets.  A set is stored as a tree
// mirroring the schema: per node finitely many exceptional children with
// their own descriptions, and for all remaining children a rule keyed by
// bands of the child index.  Rules are either theta-band patterns (a
// function of the threshold class of the remaining path, uniform over any
// child shape) or a shared description over a constant-shape tail.  This
// family is closed under union/intersection/complement, and emptiness,
// finiteness, containment and equality are decidable.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <variant>
#include <vector>

#include "casco/cascade.hpp"

namespace casco {

inline constexpr std::uint64_t kThetaInf = ~0ull;

// ---------------------------------------------------------------------------
// Theta-band patterns: membership depends only on the threshold class of
// the remaining path.  levels strictly increasing and >= 1; band j covers
// [levels[j-1], levels[j]) with implicit 0 below and infinity above; theta
// = infinity (a bare leaf) reads the top bit.
// ---------------------------------------------------------------------------

struct ThetaBands {
  std::vector<std::uint64_t> levels;
  std::vector<std::uint8_t> bits;  // levels.size() + 1

  static ThetaBands all(bool b) { return {{}, {static_cast<std::uint8_t>(b)}}; }
  static ThetaBands ray(std::uint64_t d) {
    if (d == 0) return all(true);
    return {{d}, {0, 1}};
  }

  std::size_t band_of(std::uint64_t v) const {
    if (v == kThetaInf) return levels.size();
    return static_cast<std::size_t>(
        std::upper_bound(levels.begin(), levels.end(), v) - levels.begin());
  }
  bool bit_for(std::uint64_t v) const { return bits[band_of(v)] != 0; }
  bool top() const { return bits.back() != 0; }
  std::uint64_t max_level() const { return levels.empty() ? 0 : levels.back(); }

  void normalize() {
    std::vector<std::uint64_t> nl;
    std::vector<std::uint8_t> nb{bits[0]};
    for (std::size_t j = 0; j < levels.size(); ++j) {
      if (bits[j + 1] != nb.back()) {
        nl.push_back(levels[j]);
        nb.push_back(bits[j + 1]);
      }
    }
    levels = std::move(nl);
    bits = std::move(nb);
  }

  // bands below `start` kept, everything from `start` on reads bit `top`
  ThetaBands collapsed(std::uint64_t start, bool topbit) const {
    ThetaBands r;
    for (std::size_t j = 0; j < levels.size() && levels[j] <= start; ++j) {
      if (levels[j] == 0) continue;
      r.levels.push_back(levels[j]);
      r.bits.push_back(bits[j]);
    }
    r.bits.push_back(bits[r.bits.size()]);
    // r now reproduces this pattern up to start; force the top bit
    r.bits.back() = static_cast<std::uint8_t>(topbit);
    r.normalize();
    return r;
  }

  friend bool operator==(const ThetaBands& a, const ThetaBands& b) {
    return a.levels == b.levels && a.bits == b.bits;
  }
};

enum class SetOp { unite, intersect, subtract };
inline bool apply_op(SetOp op, bool a, bool b) {
  switch (op) {
    case SetOp::unite: return a || b;
    case SetOp::intersect: return a && b;
    case SetOp::subtract: return a && !b;
  }
  return false;
}

inline ThetaBands tb_combine(SetOp op, const ThetaBands& a, const ThetaBands& b) {
  ThetaBands r;
  std::vector<std::uint64_t> lv;
  std::merge(a.levels.begin(), a.levels.end(), b.levels.begin(), b.levels.end(),
             std::back_inserter(lv));
  lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
  r.levels = lv;
  r.bits.resize(lv.size() + 1);
  for (std::size_t j = 0; j <= lv.size(); ++j) {
    std::uint64_t sample = (j == 0) ? 0 : lv[j - 1];
    r.bits[j] = apply_op(op, a.bit_for(sample), b.bit_for(sample));
  }
  // the top band probes theta = infinity separately
  r.bits.back() = apply_op(op, a.top(), b.top());
  // sample of top band by a finite value must agree with infinity: bands
  // are pure functions of theta, and both inputs are constant there
  r.normalize();
  return r;
}

inline ThetaBands tb_complement(const ThetaBands& a) {
  ThetaBands r = a;
  for (auto& b : r.bits) b = !b;
  return r;
}

// ---------------------------------------------------------------------------
// Set nodes
// ---------------------------------------------------------------------------

struct SetNode;
using SetNodePtr = std::shared_ptr<const SetNode>;
using BandRule = std::variant<ThetaBands, SetNodePtr>;

struct SetNode {
  enum class Kind { leaf, node, flat };
  Kind kind;

  // leaf
  bool in = false;

  // node: internal schema node; entries are exceptional children
  std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;  // sorted by index
  std::vector<std::uint64_t> levels;                          // child-index bands
  std::vector<BandRule> bands;                                // levels.size() + 1

  // flat: flattened schema node; exceptions are inner leaf paths
  std::vector<std::pair<Path, std::uint8_t>> exceptions;  // sorted
  ThetaBands wbands;  // over the weight of the inner leaf path
};

inline SetNodePtr make_leaf_set(bool in) {
  auto n = std::make_shared<SetNode>();
  n->kind = SetNode::Kind::leaf;
  n->in = in;
  return n;
}

inline SetNodePtr make_node_set(std::vector<std::pair<std::uint64_t, SetNodePtr>> entries,
                                std::vector<std::uint64_t> levels, std::vector<BandRule> bands) {
  auto n = std::make_shared<SetNode>();
  n->kind = SetNode::Kind::node;
  n->entries = std::move(entries);
  n->levels = std::move(levels);
  n->bands = std::move(bands);
  std::sort(n->entries.begin(), n->entries.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return n;
}

inline SetNodePtr make_flat_set(std::vector<std::pair<Path, std::uint8_t>> exceptions,
                                ThetaBands wbands) {
  auto n = std::make_shared<SetNode>();
  n->kind = SetNode::Kind::flat;
  n->exceptions = std::move(exceptions);
  n->wbands = std::move(wbands);
  std::sort(n->exceptions.begin(), n->exceptions.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return n;
}

// constant set over any schema node shape
inline SetNodePtr make_const_set(const Schema& s, bool in) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return make_leaf_set(in);
    case Schema::Kind::flattened:
      return make_flat_set({}, ThetaBands::all(in));
    case Schema::Kind::internal:
      return make_node_set({}, {}, {ThetaBands::all(in)});
  }
  throw error("make_const_set: bad schema");
}

// A theta-band pattern materialized over a concrete child schema.
inline SetNodePtr reify(const ThetaBands& tb, const Schema& s) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return make_leaf_set(tb.top());
    case Schema::Kind::flattened:
      return make_flat_set({}, tb);
    case Schema::Kind::internal: {
      // theta here is min(child index, deeper theta): within index band j
      // the deeper pattern keeps sub-start bands and collapses the rest to
      // the band's own bit.
      std::vector<BandRule> bands;
      for (std::size_t j = 0; j <= tb.levels.size(); ++j) {
        std::uint64_t start = (j == 0) ? 0 : tb.levels[j - 1];
        bands.emplace_back(tb.collapsed(start, tb.bits[j] != 0));
      }
      return make_node_set({}, tb.levels, std::move(bands));
    }
  }
  throw error("reify: bad schema");
}

inline SetNodePtr rule_to_node(const BandRule& r, const Schema& child) {
  if (const auto* tb = std::get_if<ThetaBands>(&r)) return reify(*tb, child);
  return std::get<SetNodePtr>(r);
}

namespace detail {
inline const BandRule& rule_at(const SetNode& n, std::uint64_t k) {
  std::size_t j = static_cast<std::size_t>(
      std::upper_bound(n.levels.begin(), n.levels.end(), k) - n.levels.begin());
  return n.bands[j];
}
inline const SetNodePtr* entry_at(const SetNode& n, std::uint64_t k) {
  auto it = std::lower_bound(n.entries.begin(), n.entries.end(), k,
                             [](const auto& e, std::uint64_t v) { return e.first < v; });
  if (it != n.entries.end() && it->first == k) return &it->second;
  return nullptr;
}

// shape constancy needed by shared rules over a band [lo, hi)
inline void assert_constant_shape(const Schema& u, std::uint64_t lo, std::uint64_t hi) {
  if (hi != kThetaInf && hi - lo <= 1) return;  // a single child: nothing to match
  std::uint64_t second = (hi == kThetaInf) ? lo + 7 : std::min(lo + 7, hi - 1);
  if (!(u.child(lo) == u.child(lo + 1) && u.child(lo + 1) == u.child(second)))
    throw internal_fault("shared band rule over a varying tail");
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Boolean algebra
// ---------------------------------------------------------------------------

inline SetNodePtr combine(SetOp op, const Schema& s, const SetNodePtr& a, const SetNodePtr& b);

inline BandRule combine_rule(SetOp op, const Schema& u, std::uint64_t band_lo,
                             std::uint64_t band_hi, const BandRule& a, const BandRule& b) {
  const auto* ta = std::get_if<ThetaBands>(&a);
  const auto* tb = std::get_if<ThetaBands>(&b);
  if (ta && tb) return tb_combine(op, *ta, *tb);
  detail::assert_constant_shape(u, band_lo, band_hi);
  Schema child = u.child(band_lo);
  SetNodePtr na = ta ? reify(*ta, child) : std::get<SetNodePtr>(a);
  SetNodePtr nb = tb ? reify(*tb, child) : std::get<SetNodePtr>(b);
  return combine(op, child, na, nb);
}

inline SetNodePtr combine(SetOp op, const Schema& s, const SetNodePtr& a, const SetNodePtr& b) {
  if (a->kind != b->kind) throw internal_fault("combine: set structure mismatch");
  switch (a->kind) {
    case SetNode::Kind::leaf:
      return make_leaf_set(apply_op(op, a->in, b->in));
    case SetNode::Kind::flat: {
      ThetaBands w = tb_combine(op, a->wbands, b->wbands);
      std::vector<std::pair<Path, std::uint8_t>> ex;
      auto value = [](const SetNode& n, const Path& p, std::uint64_t wt) {
        auto it = std::lower_bound(n.exceptions.begin(), n.exceptions.end(), p,
                                   [](const auto& e, const Path& q) { return e.first < q; });
        if (it != n.exceptions.end() && it->first == p) return it->second != 0;
        return n.wbands.bit_for(wt);
      };
      std::set<Path> keys;
      for (const auto& e : a->exceptions) keys.insert(e.first);
      for (const auto& e : b->exceptions) keys.insert(e.first);
      for (const Path& p : keys) {
        std::uint64_t wt = path_weight(p);
        bool v = apply_op(op, value(*a, p, wt), value(*b, p, wt));
        if (v != w.bit_for(wt)) ex.emplace_back(p, v);
      }
      return make_flat_set(std::move(ex), std::move(w));
    }
    case SetNode::Kind::node: {
      std::vector<std::uint64_t> lv;
      std::merge(a->levels.begin(), a->levels.end(), b->levels.begin(), b->levels.end(),
                 std::back_inserter(lv));
      lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
      std::vector<BandRule> bands;
      for (std::size_t j = 0; j <= lv.size(); ++j) {
        std::uint64_t lo = (j == 0) ? 0 : lv[j - 1];
        std::uint64_t hi = (j < lv.size()) ? lv[j] : kThetaInf;
        bands.push_back(
            combine_rule(op, s, lo, hi, detail::rule_at(*a, lo), detail::rule_at(*b, lo)));
      }
      std::set<std::uint64_t> keys;
      for (const auto& e : a->entries) keys.insert(e.first);
      for (const auto& e : b->entries) keys.insert(e.first);
      std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
      for (std::uint64_t k : keys) {
        Schema child = s.child(k);
        const SetNodePtr* ea = detail::entry_at(*a, k);
        const SetNodePtr* eb = detail::entry_at(*b, k);
        SetNodePtr na = ea ? *ea : rule_to_node(detail::rule_at(*a, k), child);
        SetNodePtr nb = eb ? *eb : rule_to_node(detail::rule_at(*b, k), child);
        entries.emplace_back(k, combine(op, child, na, nb));
      }
      return make_node_set(std::move(entries), std::move(lv), std::move(bands));
    }
  }
  throw error("combine: unreachable");
}

inline SetNodePtr complement_node(const Schema& s, const SetNodePtr& a) {
  switch (a->kind) {
    case SetNode::Kind::leaf:
      return make_leaf_set(!a->in);
    case SetNode::Kind::flat: {
      auto ex = a->exceptions;
      for (auto& e : ex) e.second = !e.second;
      return make_flat_set(std::move(ex), tb_complement(a->wbands));
    }
    case SetNode::Kind::node: {
      std::vector<BandRule> bands;
      for (std::size_t j = 0; j < a->bands.size(); ++j) {
        if (const auto* tb = std::get_if<ThetaBands>(&a->bands[j])) {
          bands.emplace_back(tb_complement(*tb));
        } else {
          std::uint64_t lo = (j == 0) ? 0 : a->levels[j - 1];
          std::uint64_t hi = (j < a->levels.size()) ? a->levels[j] : kThetaInf;
          detail::assert_constant_shape(s, lo, hi);
          bands.emplace_back(complement_node(s.child(lo), std::get<SetNodePtr>(a->bands[j])));
        }
      }
      std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
      for (const auto& [k, n] : a->entries) entries.emplace_back(k, complement_node(s.child(k), n));
      return make_node_set(std::move(entries), a->levels, std::move(bands));
    }
  }
  throw error("complement: unreachable");
}

// ---------------------------------------------------------------------------
// Decisions
// ---------------------------------------------------------------------------

// Which theta values do leaves of s achieve?
struct ThetaSupport {
  bool inf = false;                    // a bare-leaf schema contributes infinity
  std::optional<std::uint64_t> ray;    // all values >= ray occur
  std::set<std::uint64_t> vals;        // additional isolated values

  bool contains(std::uint64_t v) const {
    if (v == kThetaInf) return inf;
    if (ray && v >= *ray) return true;
    return vals.count(v) > 0;
  }
};

inline ThetaSupport theta_support(const Schema& s) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return {true, std::nullopt, {}};
    case Schema::Kind::flattened:
      return {false, min_leaf_weight(s.inner()), {}};
    case Schema::Kind::internal: {
      if (s.tail()) return {false, 0, {}};
      // finite branching: enumerate min(child index, deeper values)
      ThetaSupport r;
      for (std::uint64_t k = 0; k < s.explicit_children().size(); ++k) {
        ThetaSupport cs = theta_support(s.child(k));
        if (cs.inf) r.vals.insert(k);
        if (cs.ray)
          for (std::uint64_t v = std::min(*cs.ray, k);; ++v) {
            r.vals.insert(v);
            if (v >= k) break;
          }
        for (std::uint64_t v : cs.vals) r.vals.insert(std::min(v, k));
      }
      return r;
    }
  }
  throw error("theta_support: bad schema");
}

// Does the pattern pick up any leaf of s?
inline bool tb_nonempty_over(const ThetaBands& tb, const Schema& s) {
  ThetaSupport sup = theta_support(s);
  if (sup.inf && tb.top()) return true;
  if (sup.ray) {
    if (tb.top()) return true;  // top band always meets a ray
    for (std::size_t j = 0; j + 1 <= tb.levels.size(); ++j)
      if (tb.bits[j] && tb.levels[j] > *sup.ray) return true;  // band j ends past the ray start
  }
  for (std::uint64_t v : sup.vals)
    if (tb.bit_for(v)) return true;
  return false;
}

// Is the pattern's trace on s infinite?
inline bool tb_infinite_over(const ThetaBands& tb, const Schema& s);

namespace detail {

// Verdicts for a rule over the infinite part of a tail band starting at lo
// (entries excluded by the caller by scanning them separately).
struct TailVerdict {
  bool any = false;        // nonempty for at least one child
  bool cofinally = false;  // nonempty for infinitely many children
  std::vector<std::uint64_t> witnesses;  // children with nonempty trace in the scan window
};

inline TailVerdict rule_over_tail(const SetNode& n, const Schema& u, std::uint64_t lo,
                                  const BandRule& rule) {
  TailVerdict v;
  if (std::holds_alternative<SetNodePtr>(rule))
    throw internal_fault("rule_over_tail: shared rules handled by caller");
  const ThetaBands& tb = std::get<ThetaBands>(rule);
  const TailRule& t = *u.tail();
  std::uint64_t consts = t.base.finite_part() + t.step.finite_part() + t.destroy_base +
                         t.destroy_step + u.explicit_children().size();
  std::uint64_t scan_end = lo + tb.max_level() + consts + 4;
  for (std::uint64_t k = lo; k < scan_end; ++k) {
    if (entry_at(n, k)) continue;
    if (tb_nonempty_over(tb, u.child(k))) {
      v.any = true;
      v.witnesses.push_back(k);
    }
  }
  // Beyond the scan the child stream is in a stable regime: either the
  // shape parameters are constant in k, or the children are flattened
  // rank-1 stages whose minimal weight grows past every band level so only
  // the top bit can fire.
  Schema probe = u.child(scan_end);
  bool eventual;
  if (probe.kind() == Schema::Kind::flattened && !t.step.is_zero())
    eventual = tb.top();
  else
    eventual = tb_nonempty_over(tb, probe);
  v.cofinally = eventual;
  v.any = v.any || eventual;
  return v;
}

}  // namespace detail

inline bool is_empty_node(const Schema& s, const SetNodePtr& a);
inline bool is_finite_node(const Schema& s, const SetNodePtr& a);

// All leaves with weight < bound (finitely many, since every child step
// costs at least 1).
inline void collect_leaves_below_weight(const Schema& s, std::uint64_t bound, Path& at,
                                        std::vector<Path>& out) {
  if (bound == 0) return;
  switch (s.kind()) {
    case Schema::Kind::leaf:
      out.push_back(at);
      return;
    case Schema::Kind::flattened:
      collect_leaves_below_weight(s.inner(), bound, at, out);
      return;
    case Schema::Kind::internal: {
      for (std::uint64_t k = 0; k + 1 < bound; ++k) {
        if (!s.tail() && k >= s.explicit_children().size()) break;
        at.push_back(static_cast<std::uint32_t>(k));
        collect_leaves_below_weight(s.child(k), bound - (k + 1), at, out);
        at.pop_back();
      }
      return;
    }
  }
}

inline std::vector<Path> leaves_below_weight(const Schema& s, std::uint64_t bound) {
  std::vector<Path> out;
  Path at;
  collect_leaves_below_weight(s, bound, at, out);
  return out;
}

inline bool detail_has_exception(const SetNode& n, const Path& p) {
  auto it = std::lower_bound(n.exceptions.begin(), n.exceptions.end(), p,
                             [](const auto& e, const Path& q) { return e.first < q; });
  return it != n.exceptions.end() && it->first == p;
}

inline bool tb_infinite_over(const ThetaBands& tb, const Schema& s) {
  return !is_finite_node(s, reify(tb, s));
}

inline bool is_empty_node(const Schema& s, const SetNodePtr& a) {
  switch (a->kind) {
    case SetNode::Kind::leaf:
      return !a->in;
    case SetNode::Kind::flat: {
      for (const auto& e : a->exceptions)
        if (e.second) return false;
      // remaining exceptions only remove leaves; weight support of the
      // inner leaves is the ray from the minimum
      const ThetaBands& tb = a->wbands;
      std::uint64_t minw = min_leaf_weight(s.inner());
      if (tb.top()) return false;  // infinitely many leaves, finitely many removed
      for (std::size_t j = 0; j < tb.levels.size(); ++j) {
        if (!tb.bits[j] || tb.levels[j] <= minw) continue;
        // bounded band with support: survives unless the exceptions cover it
        std::uint64_t lo = (j == 0) ? 0 : tb.levels[j - 1];
        for (const Path& p : leaves_below_weight(s.inner(), tb.levels[j]))
          if (path_weight(p) >= lo && !detail_has_exception(*a, p)) return false;
      }
      return true;
    }
    case SetNode::Kind::node: {
      for (const auto& [k, en] : a->entries)
        if (!is_empty_node(s.child(k), en)) return false;
      std::uint64_t limit = s.tail() ? kThetaInf : s.explicit_children().size();
      for (std::size_t j = 0; j < a->bands.size(); ++j) {
        std::uint64_t lo = (j == 0) ? 0 : a->levels[j - 1];
        std::uint64_t hi = (j < a->levels.size()) ? a->levels[j] : kThetaInf;
        hi = std::min(hi, limit);
        if (lo >= hi) continue;
        const BandRule& rule = a->bands[j];
        if (hi != kThetaInf) {
          for (std::uint64_t k = lo; k < hi; ++k) {
            if (detail::entry_at(*a, k)) continue;
            if (const auto* tb = std::get_if<ThetaBands>(&rule)) {
              if (tb_nonempty_over(*tb, s.child(k))) return false;
            } else if (!is_empty_node(s.child(k), std::get<SetNodePtr>(rule))) {
              return false;
            }
          }
        } else {
          if (const auto* sh = std::get_if<SetNodePtr>(&rule)) {
            detail::assert_constant_shape(s, lo, kThetaInf);
            if (!is_empty_node(s.child(lo), *sh)) return false;
          } else if (detail::rule_over_tail(*a, s, lo, rule).any) {
            return false;
          }
        }
      }
      return true;
    }
  }
  throw error("is_empty: unreachable");
}

inline bool is_finite_node(const Schema& s, const SetNodePtr& a) {
  switch (a->kind) {
    case SetNode::Kind::leaf:
      return true;
    case SetNode::Kind::flat:
      // bounded weight bands are finite over any inner; only the top band
      // picks up infinitely many leaves
      return !a->wbands.top();
    case SetNode::Kind::node: {
      for (const auto& [k, en] : a->entries)
        if (!is_finite_node(s.child(k), en)) return false;
      std::uint64_t limit = s.tail() ? kThetaInf : s.explicit_children().size();
      for (std::size_t j = 0; j < a->bands.size(); ++j) {
        std::uint64_t lo = (j == 0) ? 0 : a->levels[j - 1];
        std::uint64_t hi = (j < a->levels.size()) ? a->levels[j] : kThetaInf;
        hi = std::min(hi, limit);
        if (lo >= hi) continue;
        const BandRule& rule = a->bands[j];
        if (hi != kThetaInf) {
          for (std::uint64_t k = lo; k < hi; ++k) {
            if (detail::entry_at(*a, k)) continue;
            if (!is_finite_node(s.child(k), rule_to_node(rule, s.child(k)))) return false;
          }
        } else {
          if (const auto* sh = std::get_if<SetNodePtr>(&rule)) {
            detail::assert_constant_shape(s, lo, kThetaInf);
            if (!is_empty_node(s.child(lo), *sh)) return false;  // same set at every tail child
          } else {
            detail::TailVerdict v = detail::rule_over_tail(*a, s, lo, rule);
            if (v.cofinally) return false;
            for (std::uint64_t k : v.witnesses) {
              const auto& tb = std::get<ThetaBands>(rule);
              if (!is_finite_node(s.child(k), reify(tb, s.child(k)))) return false;
            }
          }
        }
      }
      return true;
    }
  }
  throw error("is_finite: unreachable");
}

// ---------------------------------------------------------------------------
// Membership of a single leaf
// ---------------------------------------------------------------------------

inline bool member_node(const Schema& s, const SetNodePtr& a, const Path& p, std::size_t from) {
  switch (a->kind) {
    case SetNode::Kind::leaf:
      if (from != p.size()) throw error("member: path too long");
      return a->in;
    case SetNode::Kind::flat: {
      Path rest(p.begin() + static_cast<std::ptrdiff_t>(from), p.end());
      if (!is_leaf_path(s.inner(), rest)) throw error("member: not a leaf path");
      auto it = std::lower_bound(a->exceptions.begin(), a->exceptions.end(), rest,
                                 [](const auto& e, const Path& q) { return e.first < q; });
      if (it != a->exceptions.end() && it->first == rest) return it->second != 0;
      return a->wbands.bit_for(path_weight(rest));
    }
    case SetNode::Kind::node: {
      if (from == p.size()) throw error("member: path too short");
      std::uint64_t k = p[from];
      Schema child = s.child(k);
      if (const SetNodePtr* e = detail::entry_at(*a, k))
        return member_node(child, *e, p, from + 1);
      const BandRule& rule = detail::rule_at(*a, k);
      if (const auto* tb = std::get_if<ThetaBands>(&rule)) {
        Path rest(p.begin() + static_cast<std::ptrdiff_t>(from) + 1, p.end());
        return tb->bit_for(theta(child, rest));
      }
      return member_node(child, std::get<SetNodePtr>(rule), p, from + 1);
    }
  }
  throw error("member: unreachable");
}

// ---------------------------------------------------------------------------
// SymSet: schema + description
// ---------------------------------------------------------------------------

struct SymSet {
  Schema schema;
  SetNodePtr root;
};

inline SymSet sym_full(const Schema& s) { return {s, make_const_set(s, true)}; }
inline SymSet sym_empty(const Schema& s) { return {s, make_const_set(s, false)}; }

namespace detail {

inline std::uint64_t vof_value(const std::map<Path, std::uint64_t>& overrides, const Path& at,
                               std::uint64_t dflt) {
  auto it = overrides.find(at);
  return it == overrides.end() ? dflt : it->second;
}

inline SetNodePtr build_vof(const Schema& s, Path& at, std::uint64_t dflt,
                            const std::map<Path, std::uint64_t>& overrides) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return make_leaf_set(true);
    case Schema::Kind::flattened:
      return make_flat_set({}, ThetaBands::ray(vof_value(overrides, at, dflt)));
    case Schema::Kind::internal: {
      std::uint64_t g = vof_value(overrides, at, dflt);
      // children containing deeper overrides become entries
      std::set<std::uint64_t> touched;
      for (const auto& [p, v] : overrides) {
        (void)v;
        if (p.size() > at.size() && std::equal(at.begin(), at.end(), p.begin()))
          touched.insert(p[at.size()]);
      }
      std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
      for (std::uint64_t k : touched) {
        if (k < g) continue;  // excluded at this node regardless of deeper levels
        at.push_back(static_cast<std::uint32_t>(k));
        entries.emplace_back(k, build_vof(s.child(k), at, dflt, overrides));
        at.pop_back();
      }
      std::vector<std::uint64_t> levels;
      std::vector<BandRule> bands;
      if (g == 0) {
        bands.emplace_back(ThetaBands::ray(dflt));
      } else {
        levels.push_back(g);
        bands.emplace_back(ThetaBands::all(false));
        bands.emplace_back(ThetaBands::ray(dflt));
      }
      return make_node_set(std::move(entries), std::move(levels), std::move(bands));
    }
  }
  throw error("build_vof: bad schema");
}

// walk an ambient node path without descending into flattened regions
inline void check_node_path(const Schema& s, const Path& p) {
  Schema cur = s;
  for (std::uint32_t idx : p) {
    if (cur.kind() != Schema::Kind::internal)
      throw error("level function override at " + path_to_string(p) + " is not an ambient node");
    cur = cur.child(idx);
  }
}

inline SetNodePtr build_fin(const Schema& s, std::vector<Path> paths, std::size_t from) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      for (const Path& p : paths)
        if (p.size() != from) throw error("finite set: not a leaf path");
      return make_leaf_set(!paths.empty());
    case Schema::Kind::flattened: {
      std::vector<std::pair<Path, std::uint8_t>> ex;
      for (const Path& p : paths) {
        Path rest(p.begin() + static_cast<std::ptrdiff_t>(from), p.end());
        if (!is_leaf_path(s.inner(), rest))
          throw error("finite set: " + path_to_string(p) + " is not a leaf path");
        ex.emplace_back(std::move(rest), 1);
      }
      return make_flat_set(std::move(ex), ThetaBands::all(false));
    }
    case Schema::Kind::internal: {
      std::map<std::uint64_t, std::vector<Path>> groups;
      for (Path& p : paths) {
        if (p.size() <= from) throw error("finite set: path stops at an internal node");
        groups[p[from]].push_back(std::move(p));
      }
      std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
      for (auto& [k, ps] : groups)
        entries.emplace_back(k, build_fin(s.child(k), std::move(ps), from + 1));
      return make_node_set(std::move(entries), {}, {ThetaBands::all(false)});
    }
  }
  throw error("build_fin: bad schema");
}

}  // namespace detail

// V(g): g is a default level plus finitely many overrides at ambient nodes.
inline SymSet sym_vof(const Schema& s, std::uint64_t dflt,
                      const std::map<Path, std::uint64_t>& overrides = {}) {
  for (const auto& [p, v] : overrides) {
    (void)v;
    detail::check_node_path(s, p);
  }
  Path at;
  return {s, detail::build_vof(s, at, dflt, overrides)};
}

inline SymSet sym_fin(const Schema& s, std::vector<Path> paths) {
  for (const Path& p : paths)
    if (!is_leaf_path(s, p)) throw error("finite set: " + path_to_string(p) + " is not a leaf");
  return {s, detail::build_fin(s, std::move(paths), 0)};
}

namespace detail {
inline void check_same_schema(const SymSet& a, const SymSet& b) {
  if (!(a.schema == b.schema)) throw error("set operation across different schemas");
}
}  // namespace detail

inline SymSet sym_union(const SymSet& a, const SymSet& b) {
  detail::check_same_schema(a, b);
  return {a.schema, combine(SetOp::unite, a.schema, a.root, b.root)};
}
inline SymSet sym_inter(const SymSet& a, const SymSet& b) {
  detail::check_same_schema(a, b);
  return {a.schema, combine(SetOp::intersect, a.schema, a.root, b.root)};
}
inline SymSet sym_diff(const SymSet& a, const SymSet& b) {
  detail::check_same_schema(a, b);
  return {a.schema, combine(SetOp::subtract, a.schema, a.root, b.root)};
}
inline SymSet sym_compl(const SymSet& a) { return {a.schema, complement_node(a.schema, a.root)}; }

inline bool sym_is_empty(const SymSet& a) { return is_empty_node(a.schema, a.root); }
inline bool sym_is_finite(const SymSet& a) { return is_finite_node(a.schema, a.root); }
// a contains b?
inline bool sym_contains(const SymSet& a, const SymSet& b) {
  return sym_is_empty(sym_diff(b, a));
}
inline bool sym_equal(const SymSet& a, const SymSet& b) {
  return sym_contains(a, b) && sym_contains(b, a);
}
inline bool sym_member(const SymSet& a, const Path& p) {
  if (!is_leaf_path(a.schema, p)) throw error("member: " + path_to_string(p) + " is not a leaf");
  return member_node(a.schema, a.root, p, 0);
}

// ---------------------------------------------------------------------------
// Weight cuts and set transport between destruction stages
// ---------------------------------------------------------------------------

namespace detail {
inline SetNodePtr build_weight_cut(const Schema& s, std::uint64_t d) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return make_leaf_set(d == 0);
    case Schema::Kind::flattened:
      return make_flat_set({}, ThetaBands::ray(d));
    case Schema::Kind::internal: {
      if (d == 0) return make_node_set({}, {}, {ThetaBands::all(true)});
      // child k costs k+1; children with k+1 >= d are fully inside
      std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
      std::uint64_t hi = d >= 1 ? d - 1 : 0;  // first fully-inside child
      if (!s.tail()) hi = std::min<std::uint64_t>(hi, s.explicit_children().size());
      for (std::uint64_t k = 0; k < hi; ++k)
        entries.emplace_back(k, build_weight_cut(s.child(k), d - (k + 1)));
      if (hi == 0) return make_node_set({}, {}, {ThetaBands::all(true)});
      return make_node_set(std::move(entries), {hi},
                           {ThetaBands::all(false), ThetaBands::all(true)});
    }
  }
  throw error("weight_cut: bad schema");
}
}  // namespace detail

// {leaves with total weight >= d}; expressible over any schema shape.
inline SymSet weight_cut(const Schema& s, std::uint64_t d) {
  return {s, detail::build_weight_cut(s, d)};
}

namespace detail {

// Level-function set specified over a destruction stage `v`, re-expressed
// over an earlier stage `w` of the same underlying tree (same leaf space).
// Where v has a flattened node the level reads the remaining weight, which
// over w is a weight cut.
inline SetNodePtr build_transported_vof(const Schema& v, const Schema& w, Path& at,
                                        std::uint64_t dflt,
                                        const std::map<Path, std::uint64_t>& overrides) {
  if (v.kind() == Schema::Kind::leaf) {
    if (w.kind() != Schema::Kind::leaf) throw error("transport: leaf spaces disagree");
    return make_leaf_set(true);
  }
  if (v.kind() == Schema::Kind::flattened)
    return build_weight_cut(w, vof_value(overrides, at, dflt));
  if (w.kind() != Schema::Kind::internal)
    throw error("transport: target stage has fewer levels than source");
  std::uint64_t g = vof_value(overrides, at, dflt);

  // children that need their own node: deeper overrides, plus the window in
  // which the (source child, target child) pair has not yet stabilized
  std::set<std::uint64_t> touched;
  for (const auto& [p, val] : overrides) {
    (void)val;
    if (p.size() > at.size() && std::equal(at.begin(), at.end(), p.begin()))
      touched.insert(p[at.size()]);
  }
  std::uint64_t nv = v.explicit_children().size();
  std::uint64_t nw = w.explicit_children().size();
  if (!v.tail() || !w.tail()) {
    // finite branching on either side: materialize everything in range
    std::uint64_t n = v.tail() ? nw : nv;
    std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
    for (std::uint64_t k = g; k < n; ++k) {
      at.push_back(static_cast<std::uint32_t>(k));
      entries.emplace_back(k, build_transported_vof(v.child(k), w.child(k), at, dflt, overrides));
      at.pop_back();
    }
    return make_node_set(std::move(entries), {}, {ThetaBands::all(false)});
  }
  const TailRule& tv = *v.tail();
  const TailRule& tw = *w.tail();
  if (!tv.step.is_zero() || !tw.step.is_zero())
    throw error("transport over growing-rank tails is not supported");
  std::uint64_t stable = nv + nw + tv.destroy_base + tv.destroy_step + tw.destroy_base +
                         tw.destroy_step + tv.base.finite_part() + tw.base.finite_part() + 2;
  std::uint64_t start = std::max<std::uint64_t>(g, stable);
  for (std::uint64_t k : touched) start = std::max(start, k + 1);  // overrides need own nodes
  // beyond `start` both child streams are constant
  if (!(v.child(start) == v.child(start + 1) && w.child(start) == w.child(start + 1)))
    throw internal_fault("transport: tail failed to stabilize");
  std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
  for (std::uint64_t k = g; k < start; ++k) {
    at.push_back(static_cast<std::uint32_t>(k));
    entries.emplace_back(k, build_transported_vof(v.child(k), w.child(k), at, dflt, overrides));
    at.pop_back();
  }
  at.push_back(static_cast<std::uint32_t>(start));
  SetNodePtr shared = build_transported_vof(v.child(start), w.child(start), at, dflt, overrides);
  at.pop_back();
  std::vector<std::uint64_t> levels{start};
  std::vector<BandRule> bands{ThetaBands::all(false), BandRule(shared)};
  return make_node_set(std::move(entries), std::move(levels), std::move(bands));
}

}  // namespace detail

inline SymSet transported_vof(const Schema& v, const Schema& w, std::uint64_t dflt,
                              const std::map<Path, std::uint64_t>& overrides = {}) {
  for (const auto& [p, val] : overrides) {
    (void)val;
    detail::check_node_path(v, p);
  }
  Path at;
  return {w, detail::build_transported_vof(v, w, at, dflt, overrides)};
}

// ---------------------------------------------------------------------------
// Abstract set expressions: a tiny AST shared by the symbolic engine and
// the finite-model oracle.  The two evaluate it through disjoint code.
// ---------------------------------------------------------------------------

struct SetExpr;
using SetExprPtr = std::shared_ptr<const SetExpr>;

struct SetExpr {
  enum class Kind { full, empty, vof, fin, unite, intersect, complement };
  Kind kind;
  // vof
  std::uint64_t dflt = 0;
  std::map<Path, std::uint64_t> overrides;
  // fin
  std::vector<Path> paths;
  // boolean
  SetExprPtr a, b;
};

inline SetExprPtr se_full() {
  auto e = std::make_shared<SetExpr>();
  e->kind = SetExpr::Kind::full;
  return e;
}
inline SetExprPtr se_empty() {
  auto e = std::make_shared<SetExpr>();
  e->kind = SetExpr::Kind::empty;
  return e;
}
inline SetExprPtr se_vof(std::uint64_t dflt, std::map<Path, std::uint64_t> overrides = {}) {
  auto e = std::make_shared<SetExpr>();
  e->kind = SetExpr::Kind::vof;
  e->dflt = dflt;
  e->overrides = std::move(overrides);
  return e;
}
inline SetExprPtr se_fin(std::vector<Path> paths) {
  auto e = std::make_shared<SetExpr>();
  e->kind = SetExpr::Kind::fin;
  std::sort(paths.begin(), paths.end());
  paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
  e->paths = std::move(paths);
  return e;
}
inline SetExprPtr se_union(SetExprPtr a, SetExprPtr b) {
  auto e = std::make_shared<SetExpr>();
  e->kind = SetExpr::Kind::unite;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
inline SetExprPtr se_inter(SetExprPtr a, SetExprPtr b) {
  auto e = std::make_shared<SetExpr>();
  e->kind = SetExpr::Kind::intersect;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}
inline SetExprPtr se_compl(SetExprPtr a) {
  auto e = std::make_shared<SetExpr>();
  e->kind = SetExpr::Kind::complement;
  e->a = std::move(a);
  return e;
}
inline SetExprPtr se_diff(SetExprPtr a, SetExprPtr b) {
  return se_inter(std::move(a), se_compl(std::move(b)));
}

inline SymSet compile(const Schema& s, const SetExprPtr& e) {
  switch (e->kind) {
    case SetExpr::Kind::full: return sym_full(s);
    case SetExpr::Kind::empty: return sym_empty(s);
    case SetExpr::Kind::vof: return sym_vof(s, e->dflt, e->overrides);
    case SetExpr::Kind::fin: return sym_fin(s, e->paths);
    case SetExpr::Kind::unite: return sym_union(compile(s, e->a), compile(s, e->b));
    case SetExpr::Kind::intersect: return sym_inter(compile(s, e->a), compile(s, e->b));
    case SetExpr::Kind::complement: return sym_compl(compile(s, e->a));
  }
  throw error("compile: unreachable");
}

// ---------------------------------------------------------------------------
// Text format
//   (full) (empty) (vof N ((p,a,t,h) N)...) (fin (0,1) (2)...)
//   (union E E) (inter E E) (compl E)
// ---------------------------------------------------------------------------

namespace detail {

struct SetExprParser {
  std::string_view s;
  std::size_t i = 0;

  void skip_ws() {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\n' || s[i] == '\t' || s[i] == '\r')) ++i;
  }
  void expect(char c) {
    skip_ws();
    if (i >= s.size() || s[i] != c)
      throw parse_error(std::string("expected '") + c + "' in set expression", i);
    ++i;
  }
  bool peek(char c) {
    skip_ws();
    return i < s.size() && s[i] == c;
  }
  std::string word() {
    skip_ws();
    std::size_t b = i;
    while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
    if (b == i) throw parse_error("expected word in set expression", i);
    return std::string(s.substr(b, i - b));
  }
  std::uint64_t nat() {
    skip_ws();
    std::size_t b = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (b == i) throw parse_error("expected number in set expression", i);
    return std::stoull(std::string(s.substr(b, i - b)));
  }
  Path path() {
    expect('(');
    Path p;
    skip_ws();
    if (!peek(')')) {
      p.push_back(static_cast<std::uint32_t>(nat()));
      while (peek(',')) {
        ++i;
        p.push_back(static_cast<std::uint32_t>(nat()));
      }
    }
    expect(')');
    return p;
  }

  SetExprPtr parse() {
    expect('(');
    std::string head = word();
    SetExprPtr r;
    if (head == "full") {
      r = se_full();
    } else if (head == "empty") {
      r = se_empty();
    } else if (head == "vof") {
      std::uint64_t d = nat();
      std::map<Path, std::uint64_t> ov;
      while (!peek(')')) {
        expect('(');
        Path p = path();
        std::uint64_t v = nat();
        expect(')');
        ov[p] = v;
      }
      r = se_vof(d, std::move(ov));
    } else if (head == "fin") {
      std::vector<Path> ps;
      while (!peek(')')) ps.push_back(path());
      r = se_fin(std::move(ps));
    } else if (head == "union" || head == "inter") {
      SetExprPtr a = parse();
      SetExprPtr b = parse();
      r = head == "union" ? se_union(a, b) : se_inter(a, b);
    } else if (head == "compl") {
      r = se_compl(parse());
    } else {
      throw parse_error("unknown set form '" + head + "'", i);
    }
    expect(')');
    return r;
  }
};

}  // namespace detail

inline SetExprPtr parse_set_expr(std::string_view text) {
  detail::SetExprParser p{text};
  SetExprPtr e = p.parse();
  p.skip_ws();
  if (p.i != text.size()) throw parse_error("trailing input after set expression", p.i);
  return e;
}

inline std::string print_set_expr(const SetExprPtr& e) {
  switch (e->kind) {
    case SetExpr::Kind::full: return "(full)";
    case SetExpr::Kind::empty: return "(empty)";
    case SetExpr::Kind::vof: {
      std::string s = "(vof " + std::to_string(e->dflt);
      for (const auto& [p, v] : e->overrides)
        s += " (" + path_to_string(p) + " " + std::to_string(v) + ")";
      return s + ")";
    }
    case SetExpr::Kind::fin: {
      std::string s = "(fin";
      for (const Path& p : e->paths) s += " " + path_to_string(p);
      return s + ")";
    }
    case SetExpr::Kind::unite:
      return "(union " + print_set_expr(e->a) + " " + print_set_expr(e->b) + ")";
    case SetExpr::Kind::intersect:
      return "(inter " + print_set_expr(e->a) + " " + print_set_expr(e->b) + ")";
    case SetExpr::Kind::complement:
      return "(compl " + print_set_expr(e->a) + ")";
  }
  throw error("print_set_expr: unreachable");
}

}  // namespace casco
