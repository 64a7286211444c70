#pragma once

// Contour membership and residual sets.
//
// The contour of a cascade is the filter obtained by iterating
// cofinite-index convergence through the tree: a leaf set belongs to the
// contour iff at every node cofinitely many children yield a verdict of
// "belongs", a flattened region demands all but finitely many of its inner
// leaves, and a bare leaf demands itself.
//
// Two deciders are kept on purpose.  The band reading exploits the normal
// form directly (only the eventual band rule can decide a cofinite
// verdict); the inductive route works from complements and an explicit
// stabilized scan over tail children.  `is_residual` runs both and faults
// on disagreement, so a bug in either side surfaces as an error rather
// than a wrong answer.

#include <cstdint>
#include <variant>

#include "casco/setalg.hpp"

namespace casco {

inline bool contour_contains_node(const Schema& s, const SetNodePtr& a) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return a->in;
    case Schema::Kind::flattened:
      // exceptions are always finite, so "cofinitely many inner leaves"
      // reduces to the eventual weight bit
      return a->wbands.top();
    case Schema::Kind::internal: {
      if (!s.tail()) throw error("contour over a node with finitely many children");
      // entries and bounded bands cover finitely many children; the
      // cofinite verdict is decided by the eventual rule alone.  For a
      // theta pattern the verdict of every child's trace equals the
      // pattern's top bit (induction over the child shapes), so no
      // recursion is needed.
      const BandRule& rule = a->bands.back();
      if (const auto* tb = std::get_if<ThetaBands>(&rule)) return tb->top();
      std::uint64_t lo = a->levels.empty() ? 0 : a->levels.back();
      detail::assert_constant_shape(s, lo, kThetaInf);
      std::uint64_t k = lo;
      while (detail::entry_at(*a, k)) ++k;
      return contour_contains_node(s.child(k), std::get<SetNodePtr>(rule));
    }
  }
  throw error("contour: unreachable");
}

inline bool contour_contains(const SymSet& a) { return contour_contains_node(a.schema, a.root); }

namespace detail {
inline SetNodePtr slice_child(const SetNode& n, const Schema& child, std::uint64_t k) {
  if (const SetNodePtr* e = entry_at(n, k)) return *e;
  return rule_to_node(rule_at(n, k), child);
}
}  // namespace detail

// A set is residual when it is negligible for the partition: finite trace
// at the rank-one stages, and inductively so at cofinitely many children
// of every node.  Decided here by direct induction — finiteness at the
// base shapes, and a scan over a window of tail children past every
// explicitly stored index.  All window verdicts must agree; by then the
// child stream is either shape-constant or in the flattened growing-weight
// regime, where the verdict is constant too.
inline bool residual_route2(const Schema& s, const SetNodePtr& a) {
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return is_empty_node(s, a);
    case Schema::Kind::flattened:
      return is_finite_node(s, a);
    case Schema::Kind::internal: {
      if (!s.tail()) throw error("contour over a node with finitely many children");
      std::uint64_t start = a->levels.empty() ? 0 : a->levels.back();
      if (!a->entries.empty()) start = std::max(start, a->entries.back().first + 1);
      const TailRule& t = *s.tail();
      std::uint64_t consts = t.base.finite_part() + t.step.finite_part() + t.destroy_base +
                             t.destroy_step + s.explicit_children().size();
      if (const auto* tb = std::get_if<ThetaBands>(&a->bands.back())) consts += tb->max_level();
      start += consts;
      bool verdict = false;
      for (std::uint64_t k = start; k < start + 4; ++k) {
        Schema child = s.child(k);
        bool v = residual_route2(child, detail::slice_child(*a, child, k));
        if (k == start)
          verdict = v;
        else if (v != verdict)
          throw internal_fault("residual verdict unstable over the tail");
      }
      return verdict;
    }
  }
  throw error("residual: unreachable");
}

// The dual reading: a set is residual iff its complement belongs to the
// contour.  Both deciders run on every query; disagreement is a fault.
inline bool is_residual(const SymSet& a) {
  bool r1 = contour_contains_node(a.schema, complement_node(a.schema, a.root));
  bool r2 = residual_route2(a.schema, a.root);
  if (r1 != r2) throw internal_fault("residual deciders disagree");
  return r1;
}

}  // namespace casco
