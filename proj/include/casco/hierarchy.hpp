#pragma once

// Classification machinery over filter presentations: a deterministic
// catalogue of small cascades, a budgeted search for the largest contour a
// filter contains, witnesses for constant / finite-to-one behaviour of chains
// of maps, and the block-or-selector dichotomy for flat partitions of a leaf
// space.  Every bounded verdict names the budget it spent; nothing here
// upgrades a sampled answer to a theorem.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "casco/filters.hpp"

namespace casco {

// ---------------------------------------------------------------------------
// A deterministic catalogue of small cascades
// ---------------------------------------------------------------------------
//
// Exhaustive checks below quantify over "all enumerated cascades of rank at
// most r".  The catalogue fixes what that means: completed forms, destroyed
// completed forms, and internal roots built from a small pool of prefixes and
// affine tails, filtered down to valid monotone sequential shapes and ordered
// by (rank, printed form) so that every run sees the same list.

inline std::vector<Schema> schema_family(std::uint32_t max_rank) {
  if (max_rank == 0) throw error("the catalogue starts at rank 1");
  std::vector<std::pair<std::pair<std::uint32_t, std::string>, Schema>> keyed;
  std::set<std::string> seen;
  auto keep = [&](const Schema& s) {
    if (Ordinal::nat(max_rank) < s.rank()) return;
    if (!s.rank().is_finite()) return;
    if (!is_monotone(s) || !is_sequential(s)) return;
    std::string key = print_schema(s);
    if (!seen.insert(key).second) return;
    keyed.push_back({{static_cast<std::uint32_t>(s.rank().finite_value()), std::move(key)}, s});
  };

  for (std::uint32_t r = 1; r <= max_rank; ++r) keep(Schema::complete(Ordinal::nat(r)));
  for (std::uint32_t n = 2; n <= max_rank + 2; ++n)
    for (std::uint32_t d = 1; d < n; ++d) {
      try {
        keep(Schema::destroyed_complete(Ordinal::nat(n), d));
      } catch (const error&) {
      }
    }

  std::vector<Schema> pieces = {Schema::leaf()};
  for (std::uint32_t r = 1; r < max_rank; ++r) pieces.push_back(Schema::complete(Ordinal::nat(r)));
  std::vector<std::vector<Schema>> prefixes;
  prefixes.push_back({});
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    prefixes.push_back({pieces[i]});
    for (std::size_t j = i; j < pieces.size(); ++j) {
      prefixes.push_back({pieces[i], pieces[j]});
      for (std::size_t l = j; l < pieces.size(); ++l)
        prefixes.push_back({pieces[i], pieces[j], pieces[l]});
    }
  }
  for (const auto& pre : prefixes)
    for (std::uint32_t b = 0; b < max_rank; ++b)
      for (std::uint32_t db : {0u, 1u, 2u})
        for (std::uint32_t ds : {0u, 1u}) {
          try {
            keep(Schema::internal(pre, TailRule{Ordinal::nat(b), Ordinal::nat(0), db, ds}));
          } catch (const error&) {
          }
        }

  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Schema> out;
  out.reserve(keyed.size());
  for (auto& [k, s] : keyed) out.push_back(std::move(s));
  return out;
}

// ---------------------------------------------------------------------------
// Stages of a chain of maps
// ---------------------------------------------------------------------------
//
// A chain is applied right to left: the last stage acts on the subject's
// space first.  Index-line stages and path stages cannot mix, because they
// act on different kinds of points.

struct StageMap {
  enum class Kind { line, descent, collapse, glued };
  Kind kind = Kind::line;
  OmegaMap line{};
  DescentMap descent{};
  std::optional<CollapseMap> collapse;
  std::optional<GluedMap> glued;

  static StageMap of(OmegaMap f) {
    StageMap m;
    m.kind = Kind::line;
    m.line = std::move(f);
    return m;
  }
  static StageMap of(DescentMap f) {
    StageMap m;
    m.kind = Kind::descent;
    m.descent = std::move(f);
    return m;
  }
  static StageMap of(CollapseMap f) {
    StageMap m;
    m.kind = Kind::collapse;
    m.collapse = std::move(f);
    return m;
  }
  static StageMap of(GluedMap f) {
    StageMap m;
    m.kind = Kind::glued;
    m.glued = std::move(f);
    return m;
  }

  Path apply(const Path& p) const {
    switch (kind) {
      case Kind::line: throw error("an index-line stage acts on indices, not paths");
      case Kind::descent: return descent.apply(p);
      case Kind::collapse: return collapse->apply(p);
      case Kind::glued: return glued->apply(p);
    }
    throw internal_fault("stage: unreachable kind");
  }
};

namespace detail {

// the intersection of all listed generators: the smallest member of a
// finitely based presentation, which decides universal questions exactly
inline std::optional<SymSet> smallest_member(const FilterBase& f) {
  if (!f.finitely_based()) return std::nullopt;
  const std::vector<SymSet>& gs = f.generators();
  SymSet m = gs.at(0);
  for (std::size_t i = 1; i < gs.size(); ++i) m = sym_inter(m, gs[i]);
  return m;
}

// every leaf of a finite set, in weight order; the scan is exact because it
// stops only once the set minus the collected leaves is provably empty
inline std::vector<Path> finite_leaves(const SymSet& a) {
  std::vector<Path> got;
  std::uint64_t w = min_leaf_weight(a.schema) + 1;
  for (std::uint64_t guard = 0;; ++guard, w += 4) {
    if (guard > 64) throw error("leaf enumeration stalled; the set is not finitely supported");
    got.clear();
    for (const Path& p : leaves_below_weight(a.schema, w))
      if (sym_member(a, p)) got.push_back(p);
    if (sym_is_empty(sym_diff(a, sym_fin(a.schema, got)))) return got;
  }
}

// does the set meet every maximal rank-one region of its space in a finite
// set; regions along a tail are probed past the declared window, which must
// agree because slices repeat their shape from there on
inline bool finite_on_blocks_node(const Schema& cur, const SetNodePtr& nd) {
  if (cur.kind() == Schema::Kind::leaf) return true;
  if (cur.rank() == Ordinal::nat(1)) return sym_is_finite(SymSet{cur, nd});
  if (cur.kind() != Schema::Kind::internal)
    throw error("block analysis needs explicit nodes above the rank-one regions");
  std::uint64_t w = tail_window_start(cur, *nd);
  for (std::uint64_t k = 0; k < w; ++k)
    if (!finite_on_blocks_node(cur.child(k), slice_child(*nd, cur.child(k), k))) return false;
  if (!cur.tail()) return true;
  bool v = finite_on_blocks_node(cur.child(w), slice_child(*nd, cur.child(w), w));
  for (std::uint64_t k = w + 1; k < w + 4; ++k)
    if (finite_on_blocks_node(cur.child(k), slice_child(*nd, cur.child(k), k)) != v)
      throw internal_fault("block finiteness failed to stabilise past the declared window");
  return v;
}

inline bool finite_on_blocks(const SymSet& u) { return finite_on_blocks_node(u.schema, u.root); }

// sampled threshold bases of the contour of c, expressed over `space`
inline std::vector<SymSet> certificate_bases(const Schema& c, const Schema& space,
                                             std::uint32_t samples, std::uint64_t seed) {
  if (c == space) return FilterBase::contour_of(space).sample_base(samples, seed);
  return FilterBase::transported_contour(c, space).sample_base(samples, seed);
}

// candidate cascades of rank t: each named core, destroyed down to rank t
inline std::vector<Schema> rank_candidates(const std::vector<Schema>& cores, std::uint32_t t) {
  std::vector<Schema> out;
  std::set<std::string> seen;
  for (const Schema& c : cores) {
    if (c.rank() < Ordinal::nat(t)) continue;
    Schema d = c;
    try {
      d = decrease_rank(c, Ordinal::nat(t));
    } catch (const error&) {
      continue;
    }
    if (seen.insert(print_schema(d)).second) out.push_back(d);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The largest contour a filter contains
// ---------------------------------------------------------------------------
//
// A certificate at rank t is a cascade of rank t, obtainable from a cascade
// the presentation names, all of whose sampled threshold bases belong to the
// subject.  The search walks candidate ranks downward from the bound; rank
// one is witnessed by the cofinite sets and certified by the flattened
// carrier.  Exact presentations refute a failing candidate outright; lazy
// meets spend the query budget and say so in the note.

struct ClassQuery {
  FilterBase subject;
  std::uint32_t bound = 1;      // highest rank the search will try
  std::uint64_t budget = 2000;  // membership checks allowed against lazy meets
  std::uint32_t samples = 25;   // base elements verified per candidate
  std::uint64_t seed = 1;
};

struct RankReport {
  std::uint32_t rank_found = 0;       // 0: not even the cofinite sets all belong
  std::optional<Schema> certificate;  // cascade whose sampled bases all passed
  std::string note;
  std::uint64_t budget_used = 0;
};

inline RankReport max_contour_rank(const ClassQuery& q) {
  if (q.bound == 0) throw error("rank search needs a positive bound");
  if (q.samples == 0) throw error("rank search verifies at least one sample per candidate");
  const FilterBase& s = q.subject;
  using K = FilterBase::Kind;
  const K k = s.kind();
  switch (k) {
    case K::contour:
    case K::relabel:
    case K::collapse_image:
    case K::transported_contour:
    case K::along_blocks:
    case K::meet:
      break;
    default:
      throw error(
          "rank search needs a contour-shaped presentation (contour, relabel, collapse "
          "image, transported contour, block iteration, or a meet of these)");
  }
  const bool lazy = (k == K::meet);
  // relabel carries a contour to the index line; its certificates are checked
  // on the carrier side, where the contour decider is exact
  const bool carrier_side = (k == K::relabel);
  const Schema space = carrier_side ? s.cascade() : s.ambient();

  RankReport r;
  bool starved = false;
  auto holds = [&](const SymSet& b) -> bool {
    if (lazy) {
      std::uint64_t left = (q.budget > r.budget_used) ? q.budget - r.budget_used : 0;
      if (left == 0) {
        starved = true;
        return false;
      }
      BoundedContains bc = s.contains_bounded(b, std::max<std::uint64_t>(1, left / q.samples),
                                              q.seed);
      r.budget_used += bc.checked;
      return bc.found;
    }
    ++r.budget_used;
    if (carrier_side) return contour_contains(b);
    return s.contains(b);
  };

  std::vector<Schema> cores;
  switch (k) {
    case K::contour:
    case K::relabel:
    case K::along_blocks:
      cores = {s.cascade()};
      break;
    case K::collapse_image:
      cores = {s.ambient()};
      break;
    case K::transported_contour:
      cores = {s.cascade(), s.ambient()};
      break;
    case K::meet: {
      cores.push_back(s.ambient());
      for (const FilterBase& p : s.parts()) switch (p.kind()) {
          case K::contour:
          case K::along_blocks:
          case K::transported_contour:
            cores.push_back(p.cascade());
            break;
          case K::collapse_image:
            cores.push_back(p.ambient());
            break;
          default:
            break;  // no cascade named over this leaf space
        }
      break;
    }
    default:
      break;
  }

  for (std::uint32_t t = q.bound; t >= 2; --t) {
    for (const Schema& c : detail::rank_candidates(cores, t)) {
      std::vector<SymSet> bases;
      try {
        bases = detail::certificate_bases(c, space, q.samples, q.seed + t);
      } catch (const error&) {
        continue;  // the candidate cannot be expressed over the subject's space
      }
      bool ok = true;
      for (const SymSet& b : bases)
        if (!holds(b)) {
          ok = false;
          break;
        }
      if (ok) {
        r.rank_found = t;
        r.certificate = c;
        if (t < q.bound)
          r.note = "no candidate of rank above " + std::to_string(t) + " verified" +
                   (starved ? "; the meet budget ran out during the search" : " within budget");
        return r;
      }
    }
  }

  std::vector<SymSet> cof = FilterBase::frechet(space).sample_base(q.samples, q.seed);
  bool ok = true;
  for (const SymSet& b : cof)
    if (!holds(b)) {
      ok = false;
      break;
    }
  if (ok) {
    r.rank_found = 1;
    try {
      r.certificate = Schema::flattened(space);
    } catch (const error&) {
    }
    r.note = (q.bound == 1)
                 ? "every sampled cofinite set belongs"
                 : "no candidate of rank above 1 verified" +
                       std::string(starved ? "; the meet budget ran out during the search"
                                           : " within budget");
  } else {
    r.rank_found = 0;
    r.note = starved ? "the budget ran out before the cofinite sets could be verified"
                     : "a sampled cofinite set fell outside the subject";
  }
  return r;
}

// ---------------------------------------------------------------------------
// Constant / finite-to-one witnesses for a chain of maps
// ---------------------------------------------------------------------------
//
// The question: does the subject hold a member on which the whole chain is
// constant, or a member whose image under the later stages the next map sends
// finitely-to-one?  Chains of index-line maps are decided by composing them.
// Chains of path stages only admit sound positives — a finite member settles
// everything, and a final block collapse is finite-to-one on members meeting
// every block finitely — so a miss is reported as a bounded failure, never as
// a refutation.

struct CompositionReport {
  enum class Branch { constant, finite_to_one, none_within_budget };
  Branch branch = Branch::none_within_budget;
  std::optional<SymSet> witness;             // the member the branch holds on
  std::optional<std::uint64_t> const_index;  // the constant value, on the index line
  std::optional<Path> const_leaf;            // the constant value, on a path space
  std::size_t stage = 0;                     // which map is finite-to-one, right to left
  std::string note;
  std::uint64_t budget_used = 0;
};

inline CompositionReport composition_witness(const FilterBase& subject,
                                             const std::vector<StageMap>& maps,
                                             std::uint32_t samples = 16, std::uint64_t seed = 1) {
  if (maps.empty()) throw error("a chain needs at least one map");
  bool all_line = true, any_line = false;
  for (const StageMap& m : maps) {
    if (m.kind == StageMap::Kind::line) any_line = true;
    else all_line = false;
  }
  if (any_line && !all_line) throw error("stages of one chain must act on the same kind of point");

  CompositionReport r;
  std::vector<SymSet> probes;
  if (auto m = detail::smallest_member(subject)) probes.push_back(*m);
  for (SymSet& b : subject.sample_base(samples, seed)) probes.push_back(std::move(b));

  if (all_line) {
    if (!(subject.ambient() == omega_line()))
      throw error("index-line stages need a subject on the index line");
    OmegaMap comp = maps.back().line;
    for (std::size_t i = maps.size() - 1; i-- > 0;) comp = compose(maps[i].line, comp);

    // constant on a finite member: push its points through the composition
    for (const SymSet& u : probes) {
      ++r.budget_used;
      if (!sym_is_finite(u) || sym_is_empty(u)) continue;
      std::vector<Path> pts = detail::finite_leaves(u);
      bool same = true;
      for (const Path& p : pts)
        if (comp.at(p.at(0)) != comp.at(pts.front().at(0))) {
          same = false;
          break;
        }
      if (same) {
        r.branch = CompositionReport::Branch::constant;
        r.witness = u;
        r.const_index = comp.at(pts.front().at(0));
        r.note = "the composition is constant on a finite member";
        return r;
      }
    }
    // an eventually constant composition has finitely many values; the class
    // of any achieved value is a candidate member
    if (comp.step == 0) {
      std::vector<std::uint64_t> vals = comp.table;
      vals.push_back(comp.base);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::uint64_t v : vals) {
        SymSet cls = omega_preimage(comp, omega_points({v}));
        ++r.budget_used;
        if (subject.contains(cls)) {
          r.branch = CompositionReport::Branch::constant;
          r.witness = cls;
          r.const_index = v;
          r.note = "a whole level set of the composition belongs to the subject";
          return r;
        }
      }
    }
    // finite-to-one stages
    for (std::size_t i = 0; i < maps.size(); ++i) {
      const OmegaMap& fi = maps[i].line;
      if (fi.step == 1) {
        r.branch = CompositionReport::Branch::finite_to_one;
        r.stage = i;
        r.witness = probes.empty() ? sym_full(omega_line()) : probes.front();
        r.note = "the stage is eventually one-to-one on the whole line";
        return r;
      }
      // fi is eventually constant: it is finite-to-one only on sets meeting
      // its constant tail finitely
      if (i + 1 < maps.size()) {
        OmegaMap suffix = maps.back().line;
        for (std::size_t j = maps.size() - 1; j-- > i + 1;) suffix = compose(maps[j].line, suffix);
        if (suffix.step == 0) {
          r.branch = CompositionReport::Branch::finite_to_one;
          r.stage = i;
          r.witness = probes.empty() ? sym_full(omega_line()) : probes.front();
          r.note = "the later stages have finite range, so the restriction acts on a finite set";
          return r;
        }
        SymSet bad = omega_preimage(suffix, omega_tail(fi.table.size()));
        for (const SymSet& u : probes) {
          ++r.budget_used;
          if (sym_is_finite(sym_inter(u, bad))) {
            r.branch = CompositionReport::Branch::finite_to_one;
            r.stage = i;
            r.witness = u;
            r.note = "the member meets the stage's constant fibre finitely";
            return r;
          }
        }
      } else {
        SymSet bad = omega_tail(fi.table.size());
        for (const SymSet& u : probes) {
          ++r.budget_used;
          if (sym_is_finite(sym_inter(u, bad))) {
            r.branch = CompositionReport::Branch::finite_to_one;
            r.stage = i;
            r.witness = u;
            r.note = "the member meets the stage's constant fibre finitely";
            return r;
          }
        }
      }
    }
    r.note = "no member made a stage constant or finite-to-one within budget";
    return r;
  }

  // path stages
  for (const SymSet& u : probes) {
    ++r.budget_used;
    if (sym_is_empty(u)) continue;
    if (sym_is_finite(u)) {
      std::vector<Path> pts = detail::finite_leaves(u);
      std::vector<Path> outs;
      outs.reserve(pts.size());
      for (const Path& p : pts) {
        Path cur = p;
        for (std::size_t j = maps.size(); j-- > 0;) cur = maps[j].apply(cur);
        outs.push_back(std::move(cur));
      }
      bool same = true;
      for (const Path& o : outs)
        if (o != outs.front()) {
          same = false;
          break;
        }
      if (same) {
        r.branch = CompositionReport::Branch::constant;
        r.witness = u;
        r.const_leaf = outs.front();
        r.note = "the chain is constant on a finite member";
        return r;
      }
      // the later stages map a finite member to a finite set, on which the
      // first stage is trivially finite-to-one
      r.branch = CompositionReport::Branch::finite_to_one;
      r.stage = 0;
      r.witness = u;
      r.note = "a finite member makes the image of the later stages finite";
      return r;
    }
    const StageMap& last = maps.back();
    if (last.kind == StageMap::Kind::collapse && last.collapse->source == subject.ambient() &&
        detail::finite_on_blocks(u)) {
      r.branch = CompositionReport::Branch::finite_to_one;
      r.stage = maps.size() - 1;
      r.witness = u;
      r.note = "the member meets every collapsed block finitely";
      return r;
    }
  }
  r.note = "no member made a stage constant or finite-to-one within budget; "
           "infinite members defeat the sound checks for these stages";
  return r;
}

// ---------------------------------------------------------------------------
// Flat partitions of a leaf space
// ---------------------------------------------------------------------------

class Partition {
 public:
  enum class Kind { finite_list, subtrees, weight_levels };

  // finitely many symbolic blocks; checked to be nonempty, disjoint and covering
  static Partition finite_list(Schema space, std::vector<SymSet> blocks) {
    if (blocks.empty()) throw error("a partition needs at least one block");
    for (const SymSet& b : blocks) {
      if (!(b.schema == space)) throw error("partition blocks live on the carrier space");
      if (sym_is_empty(b)) throw error("partition blocks must be nonempty");
    }
    for (std::size_t i = 0; i < blocks.size(); ++i)
      for (std::size_t j = i + 1; j < blocks.size(); ++j)
        if (!sym_is_empty(sym_inter(blocks[i], blocks[j]))) throw error("partition blocks overlap");
    SymSet all = blocks[0];
    for (std::size_t i = 1; i < blocks.size(); ++i) all = sym_union(all, blocks[i]);
    if (!sym_equal(all, sym_full(space))) throw error("partition blocks must cover the space");
    Partition d;
    d.kind_ = Kind::finite_list;
    d.space_ = std::move(space);
    d.blocks_ = std::move(blocks);
    return d;
  }

  // block n is the set of leaves below the root's n-th child
  static Partition subtrees(Schema space) {
    if (space.kind() != Schema::Kind::internal)
      throw error("subtree blocks need an internal root");
    Partition d;
    d.kind_ = Kind::subtrees;
    d.space_ = std::move(space);
    return d;
  }

  // block n is the n-th occupied leaf-weight class; finite because only
  // finitely many leaves sit below any weight
  static Partition weight_levels(Schema space) {
    if (space.kind() != Schema::Kind::internal || !space.tail())
      throw error("weight levels need an unbounded space");
    Partition d;
    d.kind_ = Kind::weight_levels;
    d.space_ = std::move(space);
    return d;
  }

  Kind kind() const { return kind_; }
  const Schema& space() const { return space_; }

  // the number of blocks, when it is finite
  std::optional<std::size_t> count() const {
    switch (kind_) {
      case Kind::finite_list: return blocks_.size();
      case Kind::subtrees:
        if (space_.tail()) return std::nullopt;
        return space_.explicit_children().size();
      case Kind::weight_levels: return std::nullopt;
    }
    throw internal_fault("partition: unreachable kind");
  }

  SymSet block(std::uint64_t n) const {
    switch (kind_) {
      case Kind::finite_list: return blocks_.at(static_cast<std::size_t>(n));
      case Kind::subtrees: {
        if (auto c = count(); c && n >= *c) throw error("subtree block index out of range");
        return subtree_set(space_, Path{static_cast<std::uint32_t>(n)});
      }
      case Kind::weight_levels: return sym_fin(space_, leaves_at(level_weight(n)));
    }
    throw internal_fault("partition: unreachable kind");
  }

  // one leaf of block n; larger `depth` moves the choice deeper into the block
  Path pick(std::uint64_t n, std::uint64_t depth) const {
    switch (kind_) {
      case Kind::finite_list: {
        const SymSet& b = blocks_.at(static_cast<std::size_t>(n));
        std::vector<Path> got;
        std::uint64_t w = min_leaf_weight(space_) + 1;
        for (std::uint64_t guard = 0; guard < 64; ++guard, w += 3) {
          got.clear();
          for (const Path& p : leaves_below_weight(space_, w))
            if (sym_member(b, p)) got.push_back(p);
          if (got.size() > depth) return got[static_cast<std::size_t>(depth)];
          if (!got.empty() && sym_is_empty(sym_diff(b, sym_fin(space_, got)))) return got.back();
        }
        throw error("no leaf of the block was found within the scan window");
      }
      case Kind::subtrees: {
        if (auto c = count(); c && n >= *c) throw error("subtree block index out of range");
        Schema ch = space_.child(n);
        Path p{static_cast<std::uint32_t>(n)};
        if (ch.kind() == Schema::Kind::leaf) return p;
        std::vector<Path> ls = leaves_in_weight_order(ch, static_cast<std::size_t>(depth) + 1);
        const Path& tailp = ls.at(std::min<std::size_t>(ls.size() - 1, depth));
        p.insert(p.end(), tailp.begin(), tailp.end());
        return p;
      }
      case Kind::weight_levels: {
        std::vector<Path> ls = leaves_at(level_weight(n));
        return ls.at(static_cast<std::size_t>(depth % ls.size()));
      }
    }
    throw internal_fault("partition: unreachable kind");
  }

 private:
  Partition() : space_(Schema::leaf()) {}

  std::vector<Path> leaves_at(std::uint64_t w) const {
    std::vector<Path> out;
    for (Path& p : leaves_below_weight(space_, w + 1))
      if (path_weight(p) == w) out.push_back(std::move(p));
    return out;
  }

  std::uint64_t level_weight(std::uint64_t n) const {
    std::uint64_t w = min_leaf_weight(space_);
    std::uint64_t found = 0;
    for (std::uint64_t guard = 0; guard < 4096; ++guard, ++w)
      if (!leaves_at(w).empty()) {
        if (found == n) return w;
        ++found;
      }
    throw error("weight levels ran dry during the scan");
  }

  Kind kind_ = Kind::finite_list;
  Schema space_;
  std::vector<SymSet> blocks_;
};

// ---------------------------------------------------------------------------
// The block-or-selector dichotomy
// ---------------------------------------------------------------------------
//
// Either some partition block belongs to the subject, or a set meeting every
// block at most once is exhibited.  A selector is strong when it is itself a
// member, weaker when it merely meets every sampled member; the report keeps
// the two apart.  For a contour examined against its own subtree blocks the
// negative is exact: the complement of any one-leaf-per-block selection stays
// in the contour, so no selection can meet every member.

struct PartitionReport {
  enum class Outcome { block, selector, none_within_budget };
  Outcome outcome = Outcome::none_within_budget;
  std::size_t block_index = 0;
  std::optional<SymSet> block;
  std::vector<Path> selector_picks;  // one leaf per inspected block
  std::optional<SymSet> selector;    // symbolic form, when the algebra has one
  bool member_verified = false;      // the selector itself belongs to the subject
  bool exhaustive = false;           // the verdict is a theorem, not a sample
  std::string note;
  std::uint64_t checked = 0;
};

inline PartitionReport selector_or_block(const FilterBase& subject, const Partition& d,
                                         std::size_t bound = 24, std::uint64_t seed = 1) {
  if (!(subject.ambient() == d.space()))
    throw error("the partition must cover the subject's leaf space");
  if (bound == 0) throw error("the dichotomy needs a positive search bound");
  PartitionReport r;
  const bool lazy = subject.kind() == FilterBase::Kind::meet;
  auto member = [&](const SymSet& u) -> bool {
    if (lazy) {
      BoundedContains bc = subject.contains_bounded(u, 8, seed);
      r.checked += bc.checked;
      return bc.found;
    }
    ++r.checked;
    return subject.contains(u);
  };

  std::size_t window = d.count() ? std::min<std::size_t>(*d.count(), bound) : bound;
  for (std::size_t n = 0; n < window; ++n) {
    SymSet b = d.block(n);
    if (member(b)) {
      r.outcome = PartitionReport::Outcome::block;
      r.block_index = n;
      r.block = b;
      r.exhaustive = !lazy;
      r.note = "a partition block belongs to the subject";
      return r;
    }
  }

  // exact refutation: a contour of rank at least two absorbs the complement
  // of any one-leaf-per-block selection over its own subtree blocks
  if (subject.kind() == FilterBase::Kind::contour && d.kind() == Partition::Kind::subtrees &&
      subject.cascade() == d.space() && !(d.space().rank() < Ordinal::nat(2))) {
    bool absorbs = true;
    std::uint64_t upto = d.count() ? static_cast<std::uint64_t>(*d.count())
                                   : static_cast<std::uint64_t>(window) + 4;
    for (std::uint64_t n = 0; n < upto && absorbs; ++n) {
      Schema ch = d.space().child(n);
      if (ch.kind() == Schema::Kind::leaf) {
        absorbs = false;
        break;
      }
      Path one = leaves_in_weight_order(ch, 1).at(0);
      ++r.checked;
      if (!contour_contains(sym_diff(sym_full(ch), sym_fin(ch, {one})))) absorbs = false;
    }
    if (absorbs) {
      r.outcome = PartitionReport::Outcome::none_within_budget;
      r.exhaustive = true;
      r.note = "no subtree block can belong, and each block keeps its near-full sets in its own "
               "contour: the complement of any one-leaf-per-block selection is itself a member, "
               "so no selection meets every member";
      return r;
    }
  }

  switch (d.kind()) {
    case Partition::Kind::finite_list: {
      std::size_t m = *d.count();
      std::optional<SymSet> tried;
      for (std::uint64_t depth : {0ull, 1ull, 2ull}) {
        std::vector<Path> picks;
        picks.reserve(m);
        for (std::size_t n = 0; n < m; ++n) picks.push_back(d.pick(n, depth));
        SymSet u = sym_fin(d.space(), picks);
        if (!tried) tried = u;
        if (member(u)) {
          r.outcome = PartitionReport::Outcome::selector;
          r.selector_picks = std::move(picks);
          r.selector = u;
          r.member_verified = true;
          r.exhaustive = !lazy;
          r.note = "a transversal of the blocks belongs to the subject";
          return r;
        }
      }
      MeshReport mr = mesh_bounded(FilterBase::principal(*tried), subject, bound, seed);
      r.checked += mr.checked;
      if (mr.verdict) {
        r.outcome = PartitionReport::Outcome::selector;
        r.selector = tried;
        r.exhaustive = mr.exhaustive;
        r.note = "a transversal meets every member that was examined";
        return r;
      }
      r.note = mr.exhaustive
                   ? "no block belongs, and the chosen transversal is refuted exactly: some "
                     "member misses it"
                   : "no block belongs and no transversal was confirmed within budget";
      return r;
    }
    case Partition::Kind::subtrees: {
      std::vector<Path> picks;
      picks.reserve(window);
      for (std::uint64_t n = 0; n < window; ++n) picks.push_back(d.pick(n, n));
      r.selector_picks = picks;
      std::vector<SymSet> ms = subject.sample_base(bound, seed + 1);
      bool allhit = !ms.empty();
      for (const SymSet& a : ms) {
        ++r.checked;
        bool hit = false;
        for (const Path& p : picks)
          if (sym_member(a, p)) {
            hit = true;
            break;
          }
        if (!hit) {
          allhit = false;
          break;
        }
      }
      if (allhit) {
        r.outcome = PartitionReport::Outcome::selector;
        r.note = "one leaf per subtree meets every sampled member; the selection is listed for "
                 "the inspected window";
        return r;
      }
      r.note = "no block belongs and a sampled member missed the selection";
      return r;
    }
    case Partition::Kind::weight_levels: {
      // canonical transversals first: the whole space when the inspected
      // levels are single leaves, else the first column when it crosses each
      // level at most once
      bool singletons = true;
      for (std::uint64_t n = 0; n < window && singletons; ++n) {
        ++r.checked;
        if (detail::finite_leaves(d.block(n)).size() != 1) singletons = false;
      }
      std::optional<SymSet> u;
      std::string shape;
      if (singletons) {
        u = sym_full(d.space());
        shape = "every level seen is a single leaf, so the whole space selects";
      } else {
        Schema c0 = d.space().child(0);
        if (c0.kind() == Schema::Kind::internal && c0.rank() == Ordinal::nat(1)) {
          u = subtree_set(d.space(), Path{0});
          shape = "the first column crosses each level at most once";
        }
      }
      if (u) {
        if (member(*u)) {
          r.outcome = PartitionReport::Outcome::selector;
          r.selector = u;
          r.member_verified = true;
          r.exhaustive = !lazy;
          r.note = shape + "; the transversal belongs to the subject";
          return r;
        }
        MeshReport mr = mesh_bounded(FilterBase::principal(*u), subject, bound, seed);
        r.checked += mr.checked;
        if (mr.verdict) {
          r.outcome = PartitionReport::Outcome::selector;
          r.selector = u;
          r.exhaustive = mr.exhaustive;
          r.note = shape + "; the transversal meets every member that was examined";
          return r;
        }
      }
      std::vector<Path> picks;
      picks.reserve(window);
      for (std::uint64_t n = 0; n < window; ++n) picks.push_back(d.pick(n, n));
      r.selector_picks = picks;
      std::vector<SymSet> ms = subject.sample_base(bound, seed + 1);
      bool allhit = !ms.empty();
      for (const SymSet& a : ms) {
        ++r.checked;
        bool hit = false;
        for (const Path& p : picks)
          if (sym_member(a, p)) {
            hit = true;
            break;
          }
        if (!hit) {
          allhit = false;
          break;
        }
      }
      if (allhit) {
        r.outcome = PartitionReport::Outcome::selector;
        r.note = "one leaf per level meets every sampled member; the selection is listed for the "
                 "inspected window";
        return r;
      }
      r.note = "no level belongs and no selection was confirmed within budget";
      return r;
    }
  }
  throw internal_fault("partition: unreachable kind");
}

// ---------------------------------------------------------------------------
// Residual members
// ---------------------------------------------------------------------------

// a member that is small for the level structure of its own space: its
// complement lies in the space's contour.  Finitely based subjects are
// decided exactly (smallness is inherited downward, so the smallest member
// decides); other presentations are sampled.
inline std::optional<SymSet> residual_witness(const FilterBase& subject, std::size_t samples = 24,
                                              std::uint64_t seed = 1) {
  if (auto m = detail::smallest_member(subject))
    return is_residual(*m) ? std::optional<SymSet>(*m) : std::nullopt;
  for (const SymSet& u : subject.sample_base(samples, seed))
    if (is_residual(u)) return u;
  return std::nullopt;
}

}  // namespace casco
