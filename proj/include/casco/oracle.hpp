#pragma once

// Finite-model oracle: evaluates abstract set expressions pointwise on the
// leaves of a width-truncated cascade, with no code shared with the
// symbolic engine's compiled representations.  Used by tests to
// cross-validate symbolic decisions on finite approximations.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "casco/setalg.hpp"

namespace casco {

namespace detail {
inline bool oracle_vof_walk(const Schema& s, const SetExpr& e, const Path& leaf, Path& at,
                            std::size_t i) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return true;
    case Schema::Kind::flattened: {
      auto it = e.overrides.find(at);
      std::uint64_t g = it == e.overrides.end() ? e.dflt : it->second;
      std::uint64_t w = 0;
      for (std::size_t j = i; j < leaf.size(); ++j) w += static_cast<std::uint64_t>(leaf[j]) + 1;
      return w >= g;
    }
    case Schema::Kind::internal: {
      auto it = e.overrides.find(at);
      std::uint64_t g = it == e.overrides.end() ? e.dflt : it->second;
      if (leaf[i] < g) return false;
      at.push_back(leaf[i]);
      bool r = oracle_vof_walk(s.child(leaf[i]), e, leaf, at, i + 1);
      at.pop_back();
      return r;
    }
  }
  throw error("oracle: bad schema");
}
}  // namespace detail

// Membership of one truncation leaf, by direct evaluation of the
// expression.  Exact (membership does not depend on the truncation).
inline bool oracle_point(const Schema& s, const SetExprPtr& e, const Path& leaf) {
  switch (e->kind) {
    case SetExpr::Kind::full:
      return true;
    case SetExpr::Kind::empty:
      return false;
    case SetExpr::Kind::vof: {
      Path at;
      return detail::oracle_vof_walk(s, *e, leaf, at, 0);
    }
    case SetExpr::Kind::fin:
      return std::find(e->paths.begin(), e->paths.end(), leaf) != e->paths.end();
    case SetExpr::Kind::unite:
      return oracle_point(s, e->a, leaf) || oracle_point(s, e->b, leaf);
    case SetExpr::Kind::intersect:
      return oracle_point(s, e->a, leaf) && oracle_point(s, e->b, leaf);
    case SetExpr::Kind::complement:
      return !oracle_point(s, e->a, leaf);
  }
  throw error("oracle: unreachable expression");
}

namespace detail {
// Majority vote through the truncation: a width-w stand-in for "cofinitely
// many children qualify".  Exact in the limit, noisy at any fixed width.
inline bool oracle_contour_at(const Schema& s, const SetExprPtr& e, const Schema& sub,
                              Path& prefix, std::uint32_t width) {
  switch (sub.kind()) {
    case Schema::Kind::leaf:
      return oracle_point(s, e, prefix);
    case Schema::Kind::flattened: {
      FiniteTruncation t = truncate(sub.inner(), width);
      std::size_t fails = 0;
      Path full = prefix;
      for (const Path& lp : t.leaves) {
        full.resize(prefix.size());
        full.insert(full.end(), lp.begin(), lp.end());
        if (!oracle_point(s, e, full)) ++fails;
      }
      return fails * 2 <= t.leaves.size();
    }
    case Schema::Kind::internal: {
      std::uint64_t n = width;
      if (!sub.tail()) n = std::min<std::uint64_t>(n, sub.explicit_children().size());
      std::size_t fails = 0;
      for (std::uint64_t k = 0; k < n; ++k) {
        prefix.push_back(static_cast<std::uint32_t>(k));
        if (!oracle_contour_at(s, e, sub.child(k), prefix, width)) ++fails;
        prefix.pop_back();
      }
      return fails * 2 <= n;
    }
  }
  throw error("oracle: bad schema");
}
}  // namespace detail

// Approximate contour membership, evaluated at two widths.  Agreement is a
// verdict; disagreement means the truncation is still too coarse and the
// case is reported as inconclusive rather than guessed.
inline std::optional<bool> oracle_contour(const Schema& s, const SetExprPtr& e,
                                          std::uint32_t width) {
  Path p;
  bool b1 = detail::oracle_contour_at(s, e, s, p, width);
  bool b2 = detail::oracle_contour_at(s, e, s, p, width * 2);
  if (b1 != b2) return std::nullopt;
  return b1;
}

// ---------------------------------------------------------------------------
// Exhaustive order witness on tiny explicit models
// ---------------------------------------------------------------------------

// a filter on the explicit point set 0..points-1, given by finitely many
// generating subsets: its members are the supersets of their intersection
struct TinyFilter {
  std::uint32_t points = 0;
  std::vector<std::uint64_t> gens;  // bitmasks over the points
};

namespace detail {
inline std::uint64_t tiny_meet(const TinyFilter& f) {
  if (f.points == 0 || f.points > 12) throw error("ambient too large for the exhaustive search");
  std::uint64_t all = (1ull << f.points) - 1;
  std::uint64_t m = all;
  for (std::uint64_t g : f.gens) {
    if (g & ~all) throw error("a generator names a point outside the ambient");
    m &= g;
  }
  return m;
}
}  // namespace detail

// Walks every map between the point sets, first by lexicographic order, and
// returns one whose pushforward of `u` is exactly `v`, if any map does it.
// The pushforward of a superset-generated filter is generated by the image
// of its core, so values outside the core cannot matter; they are pinned to
// zero and the enumeration runs over the core alone.
inline std::optional<std::vector<std::uint32_t>> oracle_rk_search(const TinyFilter& u,
                                                                  const TinyFilter& v) {
  std::uint64_t mu = detail::tiny_meet(u);
  std::uint64_t mv = detail::tiny_meet(v);
  std::vector<std::uint32_t> sup;
  for (std::uint32_t i = 0; i < u.points; ++i)
    if (mu & (1ull << i)) sup.push_back(i);
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < sup.size(); ++i) total *= v.points;
  if (total > (1ull << 24)) throw error("ambient too large for the exhaustive search");

  std::vector<std::uint32_t> pick(sup.size(), 0);
  for (std::uint64_t step = 0; step < total; ++step) {
    std::uint64_t image = 0;
    for (std::size_t i = 0; i < sup.size(); ++i) image |= 1ull << pick[i];
    if (image == mv) {
      std::vector<std::uint32_t> f(u.points, 0);
      for (std::size_t i = 0; i < sup.size(); ++i) f[sup[i]] = pick[i];
      return f;
    }
    std::size_t i = pick.size();
    while (i-- > 0) {
      if (++pick[i] < v.points) break;
      pick[i] = 0;
    }
  }
  return std::nullopt;
}

}  // namespace casco
