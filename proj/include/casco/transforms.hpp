#pragma once

// Structure-lowering maps between cascades: the level-descent map on index
// vectors, block collapse, destruction stages, rank decrease, the obtainability
// order these induce, interpolation inside that order, and restriction of a
// cascade to a symbolic leaf set.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "casco/contour.hpp"

namespace casco {

// affine integer sequence  k |-> off + (num * k) / den  (floor division)
struct NatSeq {
  std::int64_t off = 0;
  std::int64_t num = 0;
  std::uint32_t den = 1;

  std::int64_t at(std::uint64_t k) const {
    if (den == 0) throw error("sequence denominator must be positive");
    return off + (num * static_cast<std::int64_t>(k)) / static_cast<std::int64_t>(den);
  }
};

// ---------------------------------------------------------------------------
// Level descent on index vectors
// ---------------------------------------------------------------------------

// position of the last nonzero entry, counted from 1; all-zero vectors give 0
inline std::uint32_t tail_support(const Path& p) {
  for (std::size_t i = p.size(); i > 0; --i)
    if (p[i - 1] != 0) return static_cast<std::uint32_t>(i);
  return 0;
}

// descent map on vectors of a fixed length: each application lowers
// tail_support by one until the all-zero vector is reached
struct DescentMap {
  std::uint32_t length = 0;

  Path apply(const Path& p) const {
    if (p.size() != length) throw error("descent map: wrong vector length");
    Path q(p.size(), 0);
    std::uint32_t m = tail_support(p);
    if (m <= 1) return q;  // only the head may be nonzero: drop to all-zero
    for (std::uint32_t l = 0; l + 2 < m; ++l) q[l] = p[l];
    q[m - 2] = p[m - 2] + 1;
    return q;
  }
};

inline DescentMap descent_map(std::uint32_t length) { return {length}; }

namespace detail {

// leaves of a complete cascade whose entries vanish from depth `cut` on
inline SetNodePtr build_support_below(const Schema& s, std::uint64_t depth, std::uint64_t cut) {
  if (s.kind() == Schema::Kind::leaf) return make_leaf_set(true);
  if (s.kind() != Schema::Kind::internal)
    throw error("descent image: schema must be a complete finite-rank cascade");
  SetNodePtr rec = build_support_below(s.child(0), depth + 1, cut);
  if (depth >= cut) return make_node_set({{0, rec}}, {}, {ThetaBands::all(false)});
  return make_node_set({}, {}, {BandRule(rec)});
}

}  // namespace detail

// image of the whole length-n vector space after stage+1 applications of the
// descent map: exactly the vectors with tail_support < n - stage
inline SymSet descent_image(std::uint32_t n, std::uint32_t stage) {
  if (n == 0 || stage >= n) throw error("descent image: need stage < n");
  Schema s = Schema::complete(Ordinal::nat(n));
  return {s, detail::build_support_below(s, 0, n - stage - 1)};
}

// ---------------------------------------------------------------------------
// Block collapse
// ---------------------------------------------------------------------------

// leftmost leaf below the ambient node `at`
inline Path first_leaf_path(const Schema& s, Path at = {}) {
  Schema cur = subcascade_up(s, at);
  while (true) {
    switch (cur.kind()) {
      case Schema::Kind::leaf:
        return at;
      case Schema::Kind::flattened:
        cur = cur.inner();
        break;
      case Schema::Kind::internal:
        at.push_back(0);
        cur = cur.child(0);
        break;
    }
  }
}

// sends every leaf inside a maximal rank-1 region to the region's leftmost
// leaf; leaves outside such regions are fixed points
struct CollapseMap {
  Schema source;

  Path apply(const Path& leaf) const {
    if (!is_leaf_path(source, leaf)) throw error("collapse map: not a leaf path");
    Schema cur = source;
    Path at;
    for (std::uint32_t idx : leaf) {
      if (cur.rank() == Ordinal::nat(1)) return first_leaf_path(source, std::move(at));
      at.push_back(idx);
      cur = cur.child(idx);
    }
    return leaf;
  }
};

inline CollapseMap block_collapse(const Schema& s) {
  if (s.rank() < Ordinal::nat(2)) throw error("collapse needs a cascade of rank >= 2");
  return {s};
}

namespace detail {

// explicit prefix plus anchored affine continuation of a tail's child ranks;
// prefix entries already on the continuation are folded into it
struct RankLine {
  std::vector<std::uint64_t> prefix;
  std::uint64_t base = 0;
  std::uint64_t step = 0;
};

inline RankLine finite_rank_line(const TailRule& t) {
  OrdinalSeq rs = tail_rank_seq(t);
  if (!rs.tail) throw internal_fault("tail rank stream ended");
  if (!rs.tail->base.is_finite() || !rs.tail->step.is_finite())
    throw error("tail children of infinite rank are not supported here");
  RankLine out;
  out.base = rs.tail->base.finite_value();
  out.step = rs.tail->step.finite_value();
  out.prefix.reserve(rs.prefix.size());
  for (const Ordinal& r : rs.prefix) {
    if (!r.is_finite()) throw error("tail children of infinite rank are not supported here");
    out.prefix.push_back(r.finite_value());
  }
  std::size_t p0 = out.prefix.size();
  std::size_t keep = p0;
  while (keep > 0) {
    std::uint64_t back = static_cast<std::uint64_t>(p0 - (keep - 1));
    if (out.step != 0 && out.base < out.step * back) break;
    if (out.prefix[keep - 1] != out.base - out.step * back) break;
    --keep;
  }
  out.base -= out.step * static_cast<std::uint64_t>(p0 - keep);
  out.prefix.resize(keep);
  return out;
}

inline Schema collapse_rec(const Schema& s) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return s;
    case Schema::Kind::flattened:
      return Schema::leaf();
    case Schema::Kind::internal: {
      if (s.rank() == Ordinal::nat(1)) return Schema::leaf();
      std::vector<Schema> children;
      children.reserve(s.explicit_children().size());
      for (const Schema& c : s.explicit_children()) children.push_back(collapse_rec(c));
      if (!s.tail()) return Schema::internal(std::move(children), std::nullopt);
      RankLine rl = finite_rank_line(*s.tail());
      for (std::uint64_t r : rl.prefix)
        children.push_back(r <= 1 ? Schema::leaf() : Schema::complete(Ordinal::nat(r - 1)));
      if (rl.base >= 1)
        return Schema::internal(std::move(children),
                                TailRule{Ordinal::nat(rl.base - 1), Ordinal::nat(rl.step), 0, 0});
      if (rl.step == 0)  // an all-leaf tail collapses leaf by leaf
        return Schema::internal(std::move(children), TailRule{Ordinal::nat(0), Ordinal::nat(0), 0, 0});
      children.push_back(Schema::leaf());
      return Schema::internal(std::move(children),
                              TailRule{Ordinal::nat(rl.step - 1), Ordinal::nat(rl.step), 0, 0});
    }
  }
  throw internal_fault("collapse: bad schema");
}

}  // namespace detail

// the cascade of collapse images: every rank-1 region becomes a single leaf
inline Schema collapse_cascade(const Schema& s) {
  if (s.rank() < Ordinal::nat(2)) throw error("collapse needs a cascade of rank >= 2");
  return detail::collapse_rec(s);
}

// ---------------------------------------------------------------------------
// Glued descent over a rank-w cascade
// ---------------------------------------------------------------------------

namespace detail {

// replace every child with the complete cascade of its rank
inline Schema completed_form(const Schema& s) {
  if (s.kind() != Schema::Kind::internal || !s.tail() || s.rank() != Ordinal::omega())
    throw error("gluing needs a sequential cascade of rank w");
  std::vector<Schema> children;
  children.reserve(s.explicit_children().size());
  for (const Schema& c : s.explicit_children()) {
    if (!c.rank().is_finite()) throw internal_fault("rank-w cascade with an infinite child");
    children.push_back(Schema::complete(c.rank()));
  }
  RankLine rl = finite_rank_line(*s.tail());
  for (std::uint64_t r : rl.prefix) children.push_back(Schema::complete(Ordinal::nat(r)));
  Schema out = Schema::internal(std::move(children),
                                TailRule{Ordinal::nat(rl.base), Ordinal::nat(rl.step), 0, 0});
  if (out.rank() != Ordinal::omega()) throw internal_fault("completion changed the rank");
  return out;
}

}  // namespace detail

// under child n the top heights(n) levels descend as one block, the levels
// above the block are preserved
struct GluedMap {
  Schema source;  // completed form the map acts on
  NatSeq heights;

  std::uint64_t child_rank(std::uint64_t n) const {
    Ordinal r = source.child(n).rank();
    if (!r.is_finite()) throw internal_fault("glued map: infinite child rank");
    return r.finite_value();
  }

  Path apply(const Path& p) const {
    if (p.empty() || !is_leaf_path(source, p)) throw error("glued map: not a leaf path");
    std::uint64_t rn = child_rank(p[0]);
    std::int64_t want = heights.at(p[0]);
    std::uint64_t an =
        want <= 0 ? 0 : std::min<std::uint64_t>(static_cast<std::uint64_t>(want), rn);
    std::size_t cut = 1 + static_cast<std::size_t>(rn - an);
    Path out(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(cut));
    if (an >= 1) {
      Path sub(p.begin() + static_cast<std::ptrdiff_t>(cut), p.end());
      Path moved = descent_map(static_cast<std::uint32_t>(an)).apply(sub);
      out.insert(out.end(), moved.begin(), moved.end());
    }
    return out;
  }
};

// validates the block heights: non-decreasing, within the block ranks,
// tending to infinity but leaving unbounded room below the ranks
inline GluedMap glued_descent(const Schema& s, const NatSeq& a) {
  Schema g = detail::completed_form(s);
  if (a.den == 0) throw error("glued map: height denominator must be positive");
  if (a.num < 1) throw error("glued map: heights must tend to infinity");
  std::uint64_t tstep = g.tail()->step.finite_value();
  if (static_cast<std::uint64_t>(a.num) >= tstep * a.den)
    throw error("glued map: heights must leave unbounded room below the block ranks");
  std::uint64_t window = g.explicit_children().size() + a.den + 8;
  GluedMap out{std::move(g), a};
  for (std::uint64_t n = 0; n < window; ++n) {
    std::int64_t an = a.at(n);
    if (an < 0 || static_cast<std::uint64_t>(an) > out.child_rank(n))
      throw error("glued map: height out of range at child " + std::to_string(n));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Destruction stages and rank decrease
// ---------------------------------------------------------------------------

namespace detail {

inline TailRule advance_tail(const TailRule& t, std::uint64_t j) {
  std::uint64_t d = t.destroy_base + static_cast<std::uint64_t>(t.destroy_step) * j;
  if (d > std::numeric_limits<std::uint32_t>::max()) throw error("tail destroy count overflow");
  return {add_scaled(t.base, t.step, j), t.step, static_cast<std::uint32_t>(d), t.destroy_step};
}

}  // namespace detail

// one stage of destruction: finite ranks drop by exactly one and the leaf
// order is untouched
inline Schema destroy_rank1(const Schema& s) {
  const Ordinal two = Ordinal::nat(2);
  if (s.rank() < two) throw error("destruction needs a cascade of rank >= 2");
  if (s.rank() == two) return Schema::flattened(s);
  std::vector<Schema> children;
  children.reserve(s.explicit_children().size());
  for (const Schema& c : s.explicit_children())
    children.push_back(c.rank() < two ? c : destroy_rank1(c));
  std::optional<TailRule> tail = s.tail();
  if (tail) {
    TailRule t = *tail;
    // children of untouched rank below 2 are unaffected; shift them into the
    // explicit prefix so the deeper destruction starts where it acts
    while (t.base.is_finite() && t.base.finite_value() < 2 && !t.step.is_zero()) {
      children.push_back(Schema::complete(t.base));
      t = detail::advance_tail(t, 1);
    }
    if (!(t.base.is_finite() && t.base.finite_value() < 2)) {
      if (t.destroy_base == std::numeric_limits<std::uint32_t>::max())
        throw error("tail destroy count overflow");
      t.destroy_base += 1;
    }
    tail = t;
  }
  return Schema::internal(std::move(children), std::move(tail));
}

namespace detail {

inline Schema decrease_to_finite(const Schema& s, std::uint64_t target) {
  if (!s.rank().is_finite()) throw error("decrease: child of infinite rank is not supported");
  std::uint64_t rv = s.rank().finite_value();
  if (target > rv) throw internal_fault("decrease: target above rank");
  if (rv == 0 || target == rv) return s;
  if (target == 0) throw internal_fault("decrease: positive rank cannot reach 0");
  Schema out = s;
  for (std::uint64_t j = rv; j > target; --j) out = destroy_rank1(out);
  return out;
}

}  // namespace detail

// lowers the rank to `target` (1 < target <= rank); finite ranks iterate
// destruction, rank-w cascades destroy child n down to rank beta(n)
inline Schema decrease_rank(const Schema& s, const Ordinal& target,
                            const std::optional<NatSeq>& beta = std::nullopt) {
  const Ordinal alpha = s.rank();
  if (!(Ordinal::nat(1) < target) || alpha < target)
    throw error("decrease: need 1 < target <= rank");
  if (target == alpha && !beta) return s;
  if (alpha.is_finite()) {
    if (beta) throw error("decrease: finite ranks admit no sequence choice");
    return detail::decrease_to_finite(s, target.finite_value());
  }
  if (alpha != Ordinal::omega())
    throw error("decrease: only rank-w cascades are supported beyond finite ranks");
  if (!s.tail()) throw internal_fault("decrease: rank-w cascade without a tail");
  const TailRule t0 = *s.tail();
  const bool to_omega = !target.is_finite();
  NatSeq b;
  if (beta) {
    b = *beta;
    if (b.den != 1) throw error("decrease: per-child depths must be integer-valued");
    if (b.num < 0) throw error("decrease: per-child depths must be non-decreasing");
    if (to_omega && b.num < 1) throw error("decrease: per-child depths must tend to infinity");
    if (!to_omega &&
        !(b.num == 0 && b.off == static_cast<std::int64_t>(target.finite_value()) - 1))
      throw error("decrease: per-child depths must level off one below the target");
  } else if (to_omega) {
    b = NatSeq{1, 1, 1};
  } else {
    b = NatSeq{static_cast<std::int64_t>(target.finite_value()) - 1, 0, 1};
  }
  if (!t0.base.is_finite() || !t0.step.is_finite())
    throw error("decrease over constant infinite tails is not supported");
  if (t0.step.is_zero())
    throw internal_fault("decrease: rank-w cascade with a constant finite tail");
  std::uint64_t e = s.explicit_children().size();
  detail::RankLine rl = detail::finite_rank_line(t0);
  std::uint64_t anchor = e + rl.prefix.size();
  // window large enough to pass the crossing between depth and rank regimes
  std::uint64_t window = static_cast<std::uint64_t>(std::llabs(b.off)) +
                         static_cast<std::uint64_t>(b.num) + rl.base +
                         (rl.step + 1) * (anchor + 1) + t0.base.finite_value() +
                         t0.step.finite_value() + t0.destroy_base + t0.destroy_step + 8;
  auto depth_at = [&b](std::uint64_t k) -> std::uint64_t {
    std::int64_t want = b.at(k);
    return want < 1 ? 1 : static_cast<std::uint64_t>(want);
  };
  std::vector<Schema> children;
  children.reserve(window);
  for (std::uint64_t k = 0; k < window; ++k) {
    Schema c = s.child(k);
    if (!c.rank().is_finite()) throw error("decrease over infinite children is not supported");
    std::uint64_t rk = c.rank().finite_value();
    children.push_back(detail::decrease_to_finite(c, std::min(rk, depth_at(k))));
  }
  auto eff_rank = [&rl, anchor](std::uint64_t k) { return rl.base + rl.step * (k - anchor); };
  bool rank_side = depth_at(window) >= eff_rank(window);
  for (std::uint64_t i = 1; i < 4; ++i)
    if ((depth_at(window + i) >= eff_rank(window + i)) != rank_side)
      throw internal_fault("decrease: depth regime failed to stabilize");
  TailRule nt{};
  if (rank_side) {
    nt = detail::advance_tail(t0, window - e);
  } else {
    std::uint64_t pristine = t0.base.finite_value() + t0.step.finite_value() * (window - e);
    std::int64_t m0 = static_cast<std::int64_t>(pristine) - b.at(window);
    std::int64_t ms = static_cast<std::int64_t>(t0.step.finite_value()) - b.num;
    if (m0 < 0 || ms < 0) throw internal_fault("decrease: negative destruction profile");
    if (m0 > std::numeric_limits<std::uint32_t>::max() ||
        ms > std::numeric_limits<std::uint32_t>::max())
      throw error("tail destroy count overflow");
    nt = TailRule{add_scaled(t0.base, t0.step, window - e), t0.step,
                  static_cast<std::uint32_t>(m0), static_cast<std::uint32_t>(ms)};
  }
  Schema out = Schema::internal(std::move(children), nt);
  if (out.rank() != target) throw internal_fault("decrease: rank recomputation mismatch");
  return out;
}

// ---------------------------------------------------------------------------
// The obtainability order and interpolation
// ---------------------------------------------------------------------------

// is `v` obtainable from `w` by choosing destruction depths (possibly none)?
inline bool rel_decrease(const Schema& v, const Schema& w) {
  if (v == w) return true;
  if (w.rank() < v.rank()) return false;
  if (w.kind() != Schema::Kind::internal) return false;  // below a leaf or a
                                                         // destroyed region only equality
  if (v.kind() == Schema::Kind::leaf) return false;
  if (v.kind() == Schema::Kind::flattened) {
    // v must be the fully destroyed form of w
    if (!w.rank().is_finite()) return false;
    Schema x = w;
    for (std::uint64_t j = w.rank().finite_value(); j > 1; --j) x = destroy_rank1(x);
    return v == x;
  }
  bool vt = v.tail().has_value(), wt = w.tail().has_value();
  if (vt != wt) return false;
  if (!vt) {
    const std::vector<Schema>& vc = v.explicit_children();
    const std::vector<Schema>& wc = w.explicit_children();
    if (vc.size() != wc.size()) return false;
    for (std::size_t i = 0; i < vc.size(); ++i)
      if (!rel_decrease(vc[i], wc[i])) return false;
    return true;
  }
  // childwise over a window past every regime change of either side
  std::uint64_t window = v.explicit_children().size() + w.explicit_children().size() +
                         v.tail()->destroy_base + v.tail()->destroy_step +
                         w.tail()->destroy_base + w.tail()->destroy_step +
                         v.tail()->base.finite_part() + v.tail()->step.finite_part() +
                         w.tail()->base.finite_part() + w.tail()->step.finite_part() + 6;
  // a constant tail repeats one pair along the whole window; skip the repeats,
  // otherwise the recursion multiplies into the window at every level
  Schema pa = v.child(0), pb = w.child(0);
  if (!rel_decrease(pa, pb)) return false;
  for (std::uint64_t k = 1; k < window; ++k) {
    Schema a = v.child(k), b = w.child(k);
    if (a == pa && b == pb) continue;
    if (!rel_decrease(a, b)) return false;
    pa = std::move(a);
    pb = std::move(b);
  }
  return true;
}

// given w obtainable from v and rank(w) < gamma < rank(v): a cascade of rank
// exactly gamma sitting between them in the obtainability order
inline Schema interpolate(const Schema& v, const Schema& w, const Ordinal& gamma) {
  if (!rel_decrease(w, v)) throw error("interpolation needs w obtainable from v");
  if (!(w.rank() < gamma) || !(gamma < v.rank()))
    throw error("interpolation needs rank(w) < gamma < rank(v)");
  Schema t = decrease_rank(v, gamma);
  if (t.rank() != gamma || !rel_decrease(w, t) || !rel_decrease(t, v))
    throw internal_fault("interpolation failed to nest");
  return t;
}

// ---------------------------------------------------------------------------
// Restriction to a symbolic leaf set
// ---------------------------------------------------------------------------

// all leaves below the ambient node `at`
inline SymSet subtree_set(const Schema& s, const Path& at) {
  detail::check_node_path(s, at);
  struct B {
    static SetNodePtr build(const Schema& cur, const Path& at, std::size_t i) {
      if (i == at.size()) return make_const_set(cur, true);
      return make_node_set({{at[i], build(cur.child(at[i]), at, i + 1)}}, {},
                           {ThetaBands::all(false)});
    }
  };
  return {s, B::build(s, at, 0)};
}

namespace detail {

inline bool flat_member_bit(const SetNode& fs, const Path& q, std::uint64_t w) {
  auto it = std::lower_bound(
      fs.exceptions.begin(), fs.exceptions.end(), q,
      [](const std::pair<Path, std::uint8_t>& e, const Path& p) { return e.first < p; });
  if (it != fs.exceptions.end() && it->first == q) return it->second != 0;
  return fs.wbands.bit_for(w);
}

// fold trailing kept children back into the tail when they match what the
// re-anchored tail would generate anyway
inline Schema assemble_pruned(std::vector<Schema> kept, const TailRule& t,
                              std::uint64_t advance_by) {
  while (!kept.empty() && advance_by > 0) {
    TailRule prev = advance_tail(t, advance_by - 1);
    if (!(kept.back() == Schema::destroyed_complete(prev.base, prev.destroy_base))) break;
    kept.pop_back();
    --advance_by;
  }
  return Schema::internal(std::move(kept), advance_tail(t, advance_by));
}

// restrict the inner tree of a destroyed region; members are judged by the
// weight of the full inner path
inline std::optional<Schema> prune_flat_inner(const Schema& t, const SetNode& fs, Path& q,
                                              std::uint64_t acc) {
  switch (t.kind()) {
    case Schema::Kind::leaf:
      return flat_member_bit(fs, q, acc) ? std::optional<Schema>(Schema::leaf()) : std::nullopt;
    case Schema::Kind::flattened: {
      // a deeper destroyed region shares the ambient path space of its host
      std::optional<Schema> rec = prune_flat_inner(t.inner(), fs, q, acc);
      if (!rec || rec->kind() != Schema::Kind::internal) return std::nullopt;
      return Schema::flattened(std::move(*rec));
    }
    case Schema::Kind::internal: {
      std::uint64_t e = t.explicit_children().size();
      std::uint64_t ml = fs.wbands.max_level();
      std::uint64_t scan = e + (ml > acc ? ml - acc : 0) + 4;
      if (t.tail())
        scan = std::max(scan, e + t.tail()->base.finite_part() + t.tail()->step.finite_part() +
                                  t.tail()->destroy_base + t.tail()->destroy_step + 4);
      for (const auto& [p, bit] : fs.exceptions) {
        (void)bit;
        if (p.size() > q.size() && std::equal(q.begin(), q.end(), p.begin()))
          scan = std::max(scan, static_cast<std::uint64_t>(p[q.size()]) + 5);
      }
      std::uint64_t upto = t.tail() ? scan : e;
      std::vector<std::optional<Schema>> win;
      win.reserve(upto);
      for (std::uint64_t k = 0; k < upto; ++k) {
        q.push_back(static_cast<std::uint32_t>(k));
        win.push_back(prune_flat_inner(t.child(k), fs, q, acc + k + 1));
        q.pop_back();
      }
      std::uint64_t first = upto;
      bool tail_keeps = t.tail() && fs.wbands.top();
      if (tail_keeps) {
        // past the scan every leaf weight clears every level and the
        // exceptions are spent, so the tail survives whole
        while (first > e && win[first - 1] && *win[first - 1] == t.child(first - 1)) --first;
      }
      std::vector<Schema> kept;
      for (std::uint64_t k = 0; k < first; ++k)
        if (win[k]) kept.push_back(std::move(*win[k]));
      if (tail_keeps) return assemble_pruned(std::move(kept), *t.tail(), first - e);
      if (kept.empty()) return std::nullopt;
      return Schema::internal(std::move(kept), std::nullopt);
    }
  }
  throw internal_fault("prune: bad schema");
}

inline std::optional<Schema> prune_node(const Schema& s, const SetNodePtr& u) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return u->in ? std::optional<Schema>(Schema::leaf()) : std::nullopt;
    case Schema::Kind::flattened: {
      if (is_finite_node(s, u)) return std::nullopt;
      Path q;
      std::optional<Schema> inner = prune_flat_inner(s.inner(), *u, q, 0);
      if (!inner || inner->rank().is_zero())
        throw internal_fault("subcascade: infinite region pruned to a point");
      return Schema::flattened(std::move(*inner));
    }
    case Schema::Kind::internal: {
      if (!s.tail())
        throw error("subcascade restriction over a node with finitely many children");
      const TailRule& t = *s.tail();
      const SetNode& n = *u;
      std::uint64_t e = s.explicit_children().size();
      std::uint64_t scan =
          e + t.base.finite_part() + t.step.finite_part() + t.destroy_base + t.destroy_step + 4;
      if (!n.levels.empty()) scan = std::max(scan, n.levels.back() + 4);
      if (!n.entries.empty()) scan = std::max(scan, n.entries.back().first + 5);
      std::vector<std::optional<Schema>> win;
      win.reserve(scan);
      Schema pc = s.child(0);
      win.push_back(prune_node(pc, slice_child(n, pc, 0)));
      for (std::uint64_t k = 1; k < scan; ++k) {
        Schema c = s.child(k);
        // an unchanged rule over equal children gives one verdict: reuse it,
        // otherwise a constant tail multiplies the recursion into the window
        bool reuse = c == pc && !entry_at(n, k) && !entry_at(n, k - 1) &&
                     &rule_at(n, k) == &rule_at(n, k - 1);
        win.push_back(reuse ? win.back() : prune_node(c, slice_child(n, c, k)));
        pc = std::move(c);
      }
      const BandRule& rule = n.bands.back();
      if (std::holds_alternative<SetNodePtr>(rule)) assert_constant_shape(s, scan, kThetaInf);
      bool kept_eventually = false;
      std::optional<Schema> pres = win.back();  // scan bounds put scan-1 in the final band
      for (std::uint64_t i = 0; i < 4; ++i) {
        Schema c = s.child(scan + i);
        std::optional<Schema> probe = c == pc ? pres : prune_node(c, rule_to_node(rule, c));
        if (i == 0) {
          kept_eventually = probe.has_value();
        } else if (probe.has_value() != kept_eventually) {
          throw internal_fault("subcascade: tail verdict failed to stabilize");
        }
        if (probe && !(*probe == c))
          throw error("subcascade restriction is not expressible in this schema language");
        pc = std::move(c);
        pres = std::move(probe);
      }
      if (!kept_eventually) return std::nullopt;  // finitely many children survive
      std::uint64_t first = scan;
      while (first > e && win[first - 1] && *win[first - 1] == s.child(first - 1)) --first;
      std::vector<Schema> kept;
      for (std::uint64_t k = 0; k < first; ++k)
        if (win[k]) kept.push_back(std::move(*win[k]));
      return assemble_pruned(std::move(kept), t, first - e);
    }
  }
  throw internal_fault("prune: bad schema");
}

}  // namespace detail

// largest sequential subcascade whose leaves lie in `u`; requires `u` to be
// large in the contour and the restriction to stay inside this schema language
inline Schema subcascade_down(const Schema& s, const SymSet& u) {
  if (!(u.schema == s)) throw error("subcascade: set ranges over a different schema");
  if (!contour_contains(u)) throw error("subcascade needs a set that is large in the contour");
  std::optional<Schema> r = detail::prune_node(s, u.root);
  if (!r) throw internal_fault("subcascade: a contour-large set died at the root");
  if (std::optional<Path> bad = monotone_counterexample(*r))
    throw error("subcascade restriction loses monotonicity at " + path_to_string(*bad));
  return *r;
}

// comparisons through a shared leaf set: restrict one side to `u`, then
// compare by obtainability
inline bool rel_restrict1(const Schema& v, const Schema& w,
                          const std::optional<SymSet>& u = std::nullopt) {
  SymSet uu = u ? *u : sym_full(v);
  if (!contour_contains(uu)) return false;
  return rel_decrease(subcascade_down(v, uu), w);
}

inline bool rel_restrict2(const Schema& v, const Schema& w,
                          const std::optional<SymSet>& u = std::nullopt) {
  SymSet uu = u ? *u : sym_full(w);
  if (!contour_contains(uu)) return false;
  return rel_decrease(v, subcascade_down(w, uu));
}

}  // namespace casco
