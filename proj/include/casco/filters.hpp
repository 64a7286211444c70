#pragma once

// Filters presented by bases over cascade leaf spaces.
//
// A filter here is always given by a presentation — a generator, a finite
// list of generators, a cascade whose contour is meant, or a construction
// over other presentations (images under maps of the index line, iterated
// limits along a filter, finite meets).  Membership queries are exact for
// every presentation except lazily generated meets, which only answer
// under an explicit search budget.  Sampling a base never promises
// exhaustion unless the presentation is finite, and every bounded verdict
// says so.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "casco/contour.hpp"
#include "casco/transforms.hpp"

namespace casco {

// ---------------------------------------------------------------------------
// The index line
// ---------------------------------------------------------------------------
//
// Sets of naturals are modelled over a fixed rank-1 schema whose leaves are
// the length-1 paths.  Every such set is finitely many exceptions over an
// eventually constant bit, which is exactly what the set algebra can say
// about a rank-1 space.

inline const Schema& omega_line() {
  static const Schema s = Schema::complete(Ordinal::nat(1));
  return s;
}

inline Path omega_leaf(std::uint64_t k) { return {static_cast<std::uint32_t>(k)}; }

inline bool omega_member(const SymSet& a, std::uint64_t k) {
  return sym_member(a, omega_leaf(k));
}

// {k : k >= t}
inline SymSet omega_tail(std::uint64_t t) { return sym_vof(omega_line(), t); }

inline SymSet omega_points(std::vector<std::uint64_t> ks) {
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  std::vector<Path> ps;
  ps.reserve(ks.size());
  for (std::uint64_t k : ks) ps.push_back(omega_leaf(k));
  return sym_fin(omega_line(), std::move(ps));
}

struct OmegaProfile {
  std::uint64_t start;  // every index >= start carries the eventual bit
  bool eventual;
};

inline OmegaProfile omega_profile(const SymSet& a) {
  if (!(a.schema == omega_line())) throw error("profile: not a set over the index line");
  const SetNode& n = *a.root;
  if (n.kind != SetNode::Kind::node) throw internal_fault("profile: bad index-line set shape");
  std::uint64_t start = n.levels.empty() ? 0 : n.levels.back();
  if (!n.entries.empty()) start = std::max(start, n.entries.back().first + 1);
  bool ev;
  if (const auto* tb = std::get_if<ThetaBands>(&n.bands.back()))
    ev = tb->top();
  else
    ev = std::get<SetNodePtr>(n.bands.back())->in;
  return {start, ev};
}

// finite exceptions over an eventual bit, the normal form of index-line sets
inline SymSet omega_from_profile(bool eventual, std::vector<std::uint64_t> diffs) {
  SymSet d = omega_points(std::move(diffs));
  return eventual ? sym_compl(d) : d;
}

// ---------------------------------------------------------------------------
// Maps of the index line
// ---------------------------------------------------------------------------
//
// Explicit values on a finite prefix, then an affine continuation with step
// 0 or 1.  The step restriction keeps images and preimages of index-line
// sets inside the set algebra: a faster arithmetic progression has no
// finite-exception normal form.

struct OmegaMap {
  std::vector<std::uint64_t> table;
  std::uint64_t base = 0;
  std::uint64_t step = 1;

  std::uint64_t at(std::uint64_t k) const {
    if (k < table.size()) return table[k];
    return base + step * (k - table.size());
  }
};

inline void require_affine_step(const OmegaMap& f) {
  if (f.step > 1) throw error("index maps must continue with step 0 or 1");
}

// f after g
inline OmegaMap compose(const OmegaMap& f, const OmegaMap& g) {
  require_affine_step(f);
  require_affine_step(g);
  OmegaMap r;
  if (g.step == 0) {
    for (std::uint64_t v : g.table) r.table.push_back(f.at(v));
    r.base = f.at(g.base);
    r.step = 0;
    return r;
  }
  // past W the inner value has cleared f's table, so the outer map is affine
  std::uint64_t W = g.table.size();
  if (g.base < f.table.size()) W += f.table.size() - g.base;
  for (std::uint64_t k = 0; k < W; ++k) r.table.push_back(f.at(g.at(k)));
  r.base = f.at(g.at(W));
  r.step = f.step;
  return r;
}

// {k : f(k) in a}
inline SymSet omega_preimage(const OmegaMap& f, const SymSet& a) {
  require_affine_step(f);
  OmegaProfile pr = omega_profile(a);
  bool ev;
  std::uint64_t W;
  if (f.step == 0) {
    ev = omega_member(a, f.base);
    W = f.table.size();
  } else {
    ev = pr.eventual;
    W = f.table.size();
    if (f.base < pr.start) W += pr.start - f.base;
  }
  std::vector<std::uint64_t> diffs;
  for (std::uint64_t k = 0; k < W; ++k)
    if (omega_member(a, f.at(k)) != ev) diffs.push_back(k);
  return omega_from_profile(ev, std::move(diffs));
}

// {f(k) : k in a}
inline SymSet omega_image(const OmegaMap& f, const SymSet& a) {
  require_affine_step(f);
  OmegaProfile pr = omega_profile(a);
  std::uint64_t W = std::max<std::uint64_t>(f.table.size(), pr.start);
  std::vector<std::uint64_t> pts;
  for (std::uint64_t k = 0; k < W; ++k)
    if (omega_member(a, k)) pts.push_back(f.at(k));
  if (!pr.eventual) return omega_points(std::move(pts));
  if (f.step == 0) {
    pts.push_back(f.base);
    return omega_points(std::move(pts));
  }
  // an increasing continuation over a cofinite set sweeps out a full tail
  return sym_union(omega_points(std::move(pts)), omega_tail(f.at(W)));
}

// distinct values of a map in order of first occurrence: `values` lists
// them, `index` sends each argument to the position of its value
struct ValueOrder {
  OmegaMap values;
  OmegaMap index;
};

inline ValueOrder first_occurrence_order(const OmegaMap& f) {
  require_affine_step(f);
  std::uint64_t W = f.table.size();
  if (f.step == 1) {
    // tail values may still revisit table values; past the largest table
    // value every new value is fresh and consecutive
    std::uint64_t top = f.base;
    for (std::uint64_t v : f.table) top = std::max(top, v);
    W += (top - f.base) + 1;
  }
  std::vector<std::uint64_t> vals;
  std::vector<std::uint64_t> idx;
  for (std::uint64_t k = 0; k <= W; ++k) {
    std::uint64_t v = f.at(k);
    std::uint64_t pos = vals.size();
    for (std::uint64_t i = 0; i < vals.size(); ++i)
      if (vals[i] == v) {
        pos = i;
        break;
      }
    if (pos == vals.size()) vals.push_back(v);
    idx.push_back(pos);
  }
  // the scan is long enough that the last step is already on the affine
  // continuation of both outputs
  ValueOrder out;
  out.index.table = std::move(idx);
  out.index.base = out.index.table.back();
  out.index.table.pop_back();
  out.index.step = f.step;
  out.values.table = std::move(vals);
  out.values.base = out.values.table.back();
  out.values.table.pop_back();
  out.values.step = f.step;
  return out;
}

// ---------------------------------------------------------------------------
// Weight-order leaf enumeration
// ---------------------------------------------------------------------------
//
// The canonical bijection between a leaf space and the index line: leaves
// ordered by total weight, ties broken lexicographically.

namespace detail {
inline bool weight_lex_less(const Path& x, const Path& y) {
  std::uint64_t wx = path_weight(x), wy = path_weight(y);
  if (wx != wy) return wx < wy;
  return x < y;
}
}  // namespace detail

inline std::vector<Path> leaves_in_weight_order(const Schema& s, std::size_t count) {
  std::vector<Path> out;
  if (count == 0) return out;
  std::uint64_t bound = min_leaf_weight(s) + 1;
  std::uint64_t cap = bound + 8 * static_cast<std::uint64_t>(count) + 64;
  out = leaves_below_weight(s, bound);
  while (out.size() < count) {
    if (++bound > cap) throw error("leaf enumeration stalled; the space is too thin");
    out = leaves_below_weight(s, bound);
  }
  std::sort(out.begin(), out.end(), detail::weight_lex_less);
  out.resize(count);
  return out;
}

inline Path leaf_at_index(const Schema& s, std::uint64_t idx) {
  return leaves_in_weight_order(s, static_cast<std::size_t>(idx) + 1).back();
}

inline std::uint64_t index_of_leaf(const Schema& s, const Path& p) {
  if (!is_leaf_path(s, p)) throw error("enumeration: " + path_to_string(p) + " is not a leaf");
  std::vector<Path> out = leaves_below_weight(s, path_weight(p) + 1);
  std::sort(out.begin(), out.end(), detail::weight_lex_less);
  auto it = std::lower_bound(out.begin(), out.end(), p, detail::weight_lex_less);
  if (it == out.end() || !(*it == p)) throw internal_fault("enumeration: leaf not collected");
  return static_cast<std::uint64_t>(it - out.begin());
}

// {leaf : index of leaf in a} for an index-line set a
inline SymSet pull_through_enumeration(const Schema& s, const SymSet& a) {
  OmegaProfile pr = omega_profile(a);
  std::vector<Path> lv = leaves_in_weight_order(s, pr.start);
  std::vector<Path> diffs;
  for (std::uint64_t k = 0; k < pr.start; ++k)
    if (omega_member(a, k) != pr.eventual) diffs.push_back(lv[k]);
  SymSet d = sym_fin(s, std::move(diffs));
  return pr.eventual ? sym_compl(d) : d;
}

// ---------------------------------------------------------------------------
// Pullback through the collapse map
// ---------------------------------------------------------------------------
//
// The collapse image keeps child indices at every node of rank >= 2 and
// sends each rank <= 1 region to a single leaf, so a set over the image
// pulls back by mirroring entries child for child and spreading each image
// leaf's verdict over the whole source region.

namespace detail {

inline SetNodePtr pull_collapse_node(const Schema& vs, const Schema& cs, const SetNodePtr& a) {
  if (cs.kind() == Schema::Kind::leaf) return make_const_set(vs, a->in);
  if (cs.kind() != Schema::Kind::internal || vs.kind() != Schema::Kind::internal)
    throw internal_fault("collapse pullback: image shape mismatch");
  const SetNode& n = *a;
  if (n.kind != SetNode::Kind::node) throw internal_fault("collapse pullback: bad set shape");
  if (!vs.tail()) {
    std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
    std::uint64_t m = vs.explicit_children().size();
    for (std::uint64_t k = 0; k < m; ++k) {
      Schema c = cs.child(k);
      entries.emplace_back(k, pull_collapse_node(vs.child(k), c, slice_child(n, c, k)));
    }
    return make_node_set(std::move(entries), {}, {ThetaBands::all(false)});
  }
  const TailRule& t = *vs.tail();
  if (!t.base.is_finite() || !t.step.is_zero())
    throw error("collapse pullback over growing-rank tails is not supported");
  std::uint64_t W = n.levels.empty() ? 0 : n.levels.back();
  if (!n.entries.empty()) W = std::max(W, n.entries.back().first + 1);
  W = std::max<std::uint64_t>(W, vs.explicit_children().size());
  W = std::max<std::uint64_t>(W, cs.explicit_children().size());
  W += 2 * t.base.finite_value() + t.destroy_base + 4;
  if (const auto* tb = std::get_if<ThetaBands>(&n.bands.back())) W += tb->max_level();
  std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
  for (std::uint64_t k = 0; k < W; ++k) {
    Schema c = cs.child(k);
    entries.emplace_back(k, pull_collapse_node(vs.child(k), c, slice_child(n, c, k)));
  }
  assert_constant_shape(vs, W, kThetaInf);
  assert_constant_shape(cs, W, kThetaInf);
  Schema cw = cs.child(W);
  SetNodePtr shared = pull_collapse_node(vs.child(W), cw, slice_child(n, cw, W));
  return make_node_set(std::move(entries), {W},
                       {ThetaBands::all(false), BandRule{std::move(shared)}});
}

}  // namespace detail

inline SymSet pullback_collapse(const Schema& source, const SymSet& a) {
  Schema image = collapse_cascade(source);
  if (!(a.schema == image)) throw error("pullback: the set does not live on the collapse image");
  return {source, detail::pull_collapse_node(source, image, a.root)};
}

// ---------------------------------------------------------------------------
// Filter presentations
// ---------------------------------------------------------------------------

struct BoundedContains {
  bool found = false;         // a certificate for membership was exhibited
  std::uint64_t checked = 0;  // candidate meets inspected
};

class FilterBase {
 public:
  enum class Kind {
    principal,      // supersets of one generator
    finite_meet,    // supersets of finite meets of listed generators
    frechet,        // cofinite subsets of the leaf space
    contour,        // iterated cofinite convergence through a cascade
    relabel,        // a contour carried to the index line by leaf enumeration
    collapse_image,      // pushforward of a contour along its block collapse
    transported_contour, // a coarser cascade's threshold bases over a finer space
    image,          // pushforward along a map of the index line
    along_points,   // principal family at moving points, along a filter
    along_sets,     // principal family at finite blocks, along a filter
    along_blocks,   // subcontours below each root child, along a filter
    node_iterated,  // iterated contour with per-node filters on child indices
    block_lift,     // a filter transported onto one block of a disjoint union
    meet            // finite meet of lazily presented filters
  };

  static FilterBase principal(SymSet gen);
  static FilterBase finite_meet(std::vector<SymSet> gens);
  static FilterBase frechet(Schema ambient);
  static FilterBase frechet_line();
  static FilterBase contour_of(Schema cascade);
  static FilterBase relabel_of(Schema cascade);
  static FilterBase image_of_collapse(Schema source);
  static FilterBase transported_contour(Schema coarse, Schema fine);
  static FilterBase image_of(OmegaMap f, FilterBase inner);
  static FilterBase along_points(FilterBase q, OmegaMap points);
  static FilterBase along_sets(FilterBase q, std::vector<std::vector<std::uint64_t>> blocks,
                               OmegaMap tail_points);
  static FilterBase along_blocks(FilterBase q, Schema cascade);
  static FilterBase iterated_contour(Schema cascade,
                                     std::vector<std::pair<Path, FilterBase>> at_nodes);
  static FilterBase lift_to_block(FilterBase inner, std::uint64_t block, Schema ambient);
  static FilterBase meet_of(std::vector<FilterBase> parts);

  Kind kind() const;
  const Schema& ambient() const;
  bool finitely_based() const;

  // exact for every kind but `meet`
  bool contains(const SymSet& u) const;
  // bounded certificate search; a false `found` is only "not found"
  BoundedContains contains_bounded(const SymSet& u, std::uint64_t budget,
                                   std::uint64_t seed) const;
  // elements of the filter, base elements when the presentation has them;
  // exhaustive only for finitely based kinds
  std::vector<SymSet> sample_base(std::size_t count, std::uint64_t seed) const;

  const std::vector<SymSet>& generators() const;
  const Schema& cascade() const;
  const OmegaMap& line_map() const;
  const std::vector<FilterBase>& parts() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> im_;
  explicit FilterBase(std::shared_ptr<const Impl> im);

  SymSet blocks_inside(const SymSet& u) const;
  SymSet subcontour_verdicts(const SymSet& u) const;
  bool iterated_verdict(const Schema& s, const Path& at, const SetNodePtr& a) const;
};

struct FilterBase::Impl {
  Kind kind;
  Schema ambient = Schema::leaf();
  Schema casc = Schema::leaf();  // defining cascade where the kind has one
  std::vector<SymSet> gens;
  std::optional<OmegaMap> map;
  std::vector<FilterBase> parts;
  std::vector<std::vector<std::uint64_t>> blocks;
  std::uint64_t block = 0;
  std::vector<std::pair<Path, FilterBase>> at_nodes;
};

inline FilterBase::FilterBase(std::shared_ptr<const Impl> im) : im_(std::move(im)) {}

inline FilterBase::Kind FilterBase::kind() const { return im_->kind; }
inline const Schema& FilterBase::ambient() const { return im_->ambient; }
inline const std::vector<SymSet>& FilterBase::generators() const { return im_->gens; }
inline const Schema& FilterBase::cascade() const { return im_->casc; }
inline const OmegaMap& FilterBase::line_map() const {
  if (!im_->map) throw error("this presentation has no index-line map");
  return *im_->map;
}
inline const std::vector<FilterBase>& FilterBase::parts() const { return im_->parts; }

inline bool FilterBase::finitely_based() const {
  return im_->kind == Kind::principal || im_->kind == Kind::finite_meet;
}

// --- constructors ---

inline FilterBase FilterBase::principal(SymSet gen) {
  auto im = std::make_shared<Impl>();
  im->kind = Kind::principal;
  im->ambient = gen.schema;
  im->gens.push_back(std::move(gen));
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::finite_meet(std::vector<SymSet> gens) {
  if (gens.empty()) throw error("a finitely generated base needs at least one generator");
  for (std::size_t i = 1; i < gens.size(); ++i)
    if (!(gens[i].schema == gens[0].schema))
      throw error("generators live on different leaf spaces");
  auto im = std::make_shared<Impl>();
  im->kind = Kind::finite_meet;
  im->ambient = gens[0].schema;
  im->gens = std::move(gens);
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::frechet(Schema ambient) {
  auto im = std::make_shared<Impl>();
  im->kind = Kind::frechet;
  im->ambient = std::move(ambient);
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::frechet_line() { return frechet(omega_line()); }

inline FilterBase FilterBase::contour_of(Schema cascade) {
  auto im = std::make_shared<Impl>();
  im->kind = Kind::contour;
  im->ambient = cascade;
  im->casc = std::move(cascade);
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::relabel_of(Schema cascade) {
  auto im = std::make_shared<Impl>();
  im->kind = Kind::relabel;
  im->ambient = omega_line();
  im->casc = std::move(cascade);
  return FilterBase(std::move(im));
}

// the filter {A : pullback of A through the block map lies in the contour of
// `source`}; its members are sets over the collapsed cascade
inline FilterBase FilterBase::image_of_collapse(Schema source) {
  if (source.rank() < Ordinal::nat(2)) throw error("collapse needs a cascade of rank >= 2");
  auto im = std::make_shared<Impl>();
  im->kind = Kind::collapse_image;
  im->ambient = collapse_cascade(source);
  im->casc = std::move(source);
  return FilterBase(std::move(im));
}

// the filter on `fine`'s leaf space generated by the uniform threshold bases
// of `coarse`, carried over by the destruction transport.  Members whose
// per-child thresholds grow without bound are not captured: the presentation
// is the base-generated trace of the coarser contour, not its full extension.
inline FilterBase FilterBase::transported_contour(Schema coarse, Schema fine) {
  if (!rel_decrease(coarse, fine))
    throw error("transport needs a cascade obtainable from the carrier by destruction");
  transported_vof(coarse, fine, 0);  // surface unsupported tail shapes now
  auto im = std::make_shared<Impl>();
  im->kind = Kind::transported_contour;
  im->ambient = std::move(fine);
  im->casc = std::move(coarse);
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::image_of(OmegaMap f, FilterBase inner) {
  require_affine_step(f);
  if (!(inner.ambient() == omega_line()))
    throw error("images along index maps need an index-line filter");
  auto im = std::make_shared<Impl>();
  im->kind = Kind::image;
  im->ambient = omega_line();
  im->map = std::move(f);
  im->parts.push_back(std::move(inner));
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::along_points(FilterBase q, OmegaMap points) {
  require_affine_step(points);
  if (!(q.ambient() == omega_line()))
    throw error("iterated limits are taken along an index-line filter");
  auto im = std::make_shared<Impl>();
  im->kind = Kind::along_points;
  im->ambient = omega_line();
  im->map = std::move(points);
  im->parts.push_back(std::move(q));
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::along_sets(FilterBase q,
                                         std::vector<std::vector<std::uint64_t>> blocks,
                                         OmegaMap tail_points) {
  require_affine_step(tail_points);
  if (!(q.ambient() == omega_line()))
    throw error("iterated limits are taken along an index-line filter");
  for (auto& b : blocks) {
    if (b.empty()) throw error("an empty block gives an improper member filter");
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
  }
  auto im = std::make_shared<Impl>();
  im->kind = Kind::along_sets;
  im->ambient = omega_line();
  im->map = std::move(tail_points);
  im->blocks = std::move(blocks);
  im->parts.push_back(std::move(q));
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::along_blocks(FilterBase q, Schema cascade) {
  if (!(q.ambient() == omega_line()))
    throw error("iterated limits are taken along an index-line filter");
  if (cascade.kind() != Schema::Kind::internal || !cascade.tail())
    throw error("block iteration needs a root with infinitely many children");
  auto im = std::make_shared<Impl>();
  im->kind = Kind::along_blocks;
  im->ambient = cascade;
  im->casc = std::move(cascade);
  im->parts.push_back(std::move(q));
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::iterated_contour(
    Schema cascade, std::vector<std::pair<Path, FilterBase>> at_nodes) {
  for (auto& [p, f] : at_nodes) {
    if (!(f.ambient() == omega_line()))
      throw error("node filters act on the child index line");
    Schema cur = cascade;
    for (std::uint32_t x : p) {
      if (cur.kind() != Schema::Kind::internal)
        throw error("node filter path " + path_to_string(p) + " leaves the tree");
      cur = cur.child(x);
    }
    if (cur.kind() == Schema::Kind::leaf)
      throw error("node filter path " + path_to_string(p) + " addresses a leaf");
  }
  auto im = std::make_shared<Impl>();
  im->kind = Kind::node_iterated;
  im->ambient = cascade;
  im->casc = std::move(cascade);
  im->at_nodes = std::move(at_nodes);
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::lift_to_block(FilterBase inner, std::uint64_t block,
                                            Schema ambient) {
  if (ambient.kind() != Schema::Kind::internal || ambient.tail())
    throw error("block lifts live on a finite disjoint union");
  if (block >= ambient.explicit_children().size()) throw error("block index out of range");
  if (!(ambient.child(block) == inner.ambient()))
    throw error("the filter does not live on the named block");
  auto im = std::make_shared<Impl>();
  im->kind = Kind::block_lift;
  im->ambient = std::move(ambient);
  im->block = block;
  im->parts.push_back(std::move(inner));
  return FilterBase(std::move(im));
}

inline FilterBase FilterBase::meet_of(std::vector<FilterBase> parts) {
  if (parts.empty()) throw error("a meet needs at least one part");
  // flatten nested meets so budgeted search sees every part
  std::vector<FilterBase> flat;
  for (FilterBase& p : parts) {
    if (p.kind() == Kind::meet)
      for (const FilterBase& q : p.parts()) flat.push_back(q);
    else
      flat.push_back(std::move(p));
  }
  for (std::size_t i = 1; i < flat.size(); ++i)
    if (!(flat[i].ambient() == flat[0].ambient()))
      throw error("meet across different leaf spaces");
  bool allfin = true;
  for (const FilterBase& p : flat) allfin = allfin && p.finitely_based();
  if (allfin) {
    std::vector<SymSet> gens;
    for (const FilterBase& p : flat)
      for (const SymSet& g : p.generators()) gens.push_back(g);
    return finite_meet(std::move(gens));
  }
  auto im = std::make_shared<Impl>();
  im->kind = Kind::meet;
  im->ambient = flat[0].ambient();
  im->parts = std::move(flat);
  return FilterBase(std::move(im));
}

// --- membership ---

namespace detail {
// eventual verdict of a child-indexed predicate: probe four children past
// `start` and demand agreement
template <class F>
bool stable_eventual(F&& pred, std::uint64_t start, const char* what) {
  bool v = pred(start);
  for (std::uint64_t i = 1; i < 4; ++i)
    if (pred(start + i) != v)
      throw internal_fault(std::string(what) + ": verdict failed to stabilize over the tail");
  return v;
}

inline std::uint64_t tail_window_start(const Schema& s, const SetNode& n) {
  std::uint64_t start = n.levels.empty() ? 0 : n.levels.back();
  if (!n.entries.empty()) start = std::max(start, n.entries.back().first + 1);
  start = std::max<std::uint64_t>(start, s.explicit_children().size());
  if (s.tail()) {
    const TailRule& t = *s.tail();
    start += t.base.finite_part() + t.destroy_base;
    if (t.destroy_step != 0) start += t.base.finite_part() + 2;
  }
  if (const auto* tb = std::get_if<ThetaBands>(&n.bands.back())) start += tb->max_level();
  return start;
}

// the largest child index, band level, or weight threshold appearing anywhere
// in a set's description; no structural feature of the set survives past it
inline std::uint64_t deep_threshold(const SetNode& n) {
  std::uint64_t m = 0;
  auto bump = [&m](std::uint64_t x) { m = std::max(m, x); };
  switch (n.kind) {
    case SetNode::Kind::leaf:
      return 0;
    case SetNode::Kind::flat:
      bump(n.wbands.max_level());
      for (const auto& [p, bit] : n.exceptions) bump(path_weight(p));
      return m;
    case SetNode::Kind::node:
      for (const auto& [k, c] : n.entries) {
        bump(k + 1);
        bump(deep_threshold(*c));
      }
      if (!n.levels.empty()) bump(n.levels.back());
      for (const BandRule& b : n.bands) {
        if (const auto* tb = std::get_if<ThetaBands>(&b))
          bump(tb->max_level());
        else
          bump(deep_threshold(**std::get_if<SetNodePtr>(&b)));
      }
      return m;
  }
  throw internal_fault("set: unreachable kind");
}

// explicit child count plus every finite tail parameter: child slices repeat
// their shape from here on
inline std::uint64_t shape_window(const Schema& s) {
  std::uint64_t w = 2;
  if (s.kind() == Schema::Kind::internal) {
    w += s.explicit_children().size();
    if (s.tail()) {
      const TailRule& t = *s.tail();
      w += t.base.finite_part() + t.step.finite_part() + t.destroy_base + t.destroy_step;
    }
  }
  return w;
}
}  // namespace detail

inline SymSet FilterBase::blocks_inside(const SymSet& u) const {
  const Impl& d = *im_;
  const OmegaMap& t = *d.map;
  OmegaProfile pr = omega_profile(u);
  std::uint64_t W = std::max<std::uint64_t>(d.blocks.size(), t.table.size());
  bool ev;
  if (t.step == 0) {
    ev = omega_member(u, t.base);
  } else {
    ev = pr.eventual;
    if (t.base < pr.start) W = std::max(W, t.table.size() + (pr.start - t.base));
  }
  std::vector<std::uint64_t> diffs;
  for (std::uint64_t n = 0; n < W; ++n) {
    bool in = true;
    if (n < d.blocks.size()) {
      for (std::uint64_t x : d.blocks[n])
        if (!omega_member(u, x)) {
          in = false;
          break;
        }
    } else {
      in = omega_member(u, t.at(n));
    }
    if (in != ev) diffs.push_back(n);
  }
  return omega_from_profile(ev, std::move(diffs));
}

inline SymSet FilterBase::subcontour_verdicts(const SymSet& u) const {
  const Schema& V = im_->casc;
  const SetNode& n = *u.root;
  if (n.kind != SetNode::Kind::node) throw internal_fault("block verdicts: bad set shape");
  auto verdict = [&](std::uint64_t k) {
    Schema c = V.child(k);
    return contour_contains_node(c, detail::slice_child(n, c, k));
  };
  std::uint64_t start = detail::tail_window_start(V, n);
  bool ev = detail::stable_eventual(verdict, start, "block verdicts");
  std::vector<std::uint64_t> diffs;
  for (std::uint64_t k = 0; k < start; ++k)
    if (verdict(k) != ev) diffs.push_back(k);
  return omega_from_profile(ev, std::move(diffs));
}

inline bool FilterBase::iterated_verdict(const Schema& s, const Path& at,
                                         const SetNodePtr& a) const {
  const Impl& d = *im_;
  const FilterBase* over = nullptr;
  bool deeper = false;
  std::uint64_t deep_max = 0;
  for (const auto& [p, f] : d.at_nodes) {
    if (p == at) over = &f;
    if (p.size() > at.size() && std::equal(at.begin(), at.end(), p.begin())) {
      deeper = true;
      deep_max = std::max<std::uint64_t>(deep_max, p[at.size()] + 1);
    }
  }
  switch (s.kind()) {
    case Schema::Kind::leaf:
      return a->in;
    case Schema::Kind::flattened: {
      if (deeper) throw error("node filters inside a flattened region are not supported");
      bool ev = a->wbands.top();
      // the default cofinite filter sees finitely many exceptional inner
      // leaves, so its verdict is the eventual weight bit either way
      if (!over) return ev;
      std::vector<std::uint64_t> diffs;
      std::uint64_t wl = a->wbands.max_level();
      for (const Path& leaf : leaves_below_weight(s.inner(), wl)) {
        bool bit = a->wbands.bit_for(path_weight(leaf));
        for (const auto& [q, b] : a->exceptions)
          if (q == leaf) {
            bit = b != 0;
            break;
          }
        if (bit != ev) diffs.push_back(index_of_leaf(s.inner(), leaf));
      }
      for (const auto& [q, b] : a->exceptions)
        if (!(path_weight(q) < wl) && ((b != 0) != ev))
          diffs.push_back(index_of_leaf(s.inner(), q));
      return over->contains(omega_from_profile(ev, std::move(diffs)));
    }
    case Schema::Kind::internal: {
      if (!s.tail()) throw error("iterated contour over a node with finitely many children");
      const SetNode& n = *a;
      if (n.kind != SetNode::Kind::node) throw internal_fault("iterated contour: bad set shape");
      std::uint64_t start = std::max(detail::tail_window_start(s, n), deep_max);
      auto verdict = [&](std::uint64_t k) {
        Path sub = at;
        sub.push_back(static_cast<std::uint32_t>(k));
        Schema c = s.child(k);
        return iterated_verdict(c, sub, detail::slice_child(n, c, k));
      };
      bool ev = detail::stable_eventual(verdict, start, "iterated contour");
      std::vector<std::uint64_t> diffs;
      for (std::uint64_t k = 0; k < start; ++k)
        if (verdict(k) != ev) diffs.push_back(k);
      if (!over) return ev;  // cofinite default: finitely many exceptions
      return over->contains(omega_from_profile(ev, std::move(diffs)));
    }
  }
  throw internal_fault("iterated contour: bad schema");
}

inline bool FilterBase::contains(const SymSet& u) const {
  const Impl& d = *im_;
  if (!(u.schema == d.ambient)) throw error("membership query across different leaf spaces");
  switch (d.kind) {
    case Kind::principal:
      return sym_contains(u, d.gens[0]);
    case Kind::finite_meet: {
      SymSet m = d.gens[0];
      for (std::size_t i = 1; i < d.gens.size(); ++i) m = sym_inter(m, d.gens[i]);
      return sym_contains(u, m);
    }
    case Kind::frechet:
      return sym_is_finite(sym_compl(u));
    case Kind::contour:
      return contour_contains(u);
    case Kind::relabel:
      return contour_contains({d.casc, pull_through_enumeration(d.casc, u).root});
    case Kind::collapse_image:
      return contour_contains(pullback_collapse(d.casc, u));
    case Kind::transported_contour: {
      // membership along the decreasing chain of transported bases: the
      // verdict of  base(g) subset-of u  is monotone in g, and every threshold
      // that could delay the flip is written somewhere in u's description
      std::uint64_t top = detail::deep_threshold(*u.root) + detail::shape_window(d.casc) +
                          detail::shape_window(d.ambient) + 4;
      for (std::uint64_t g = 0; g <= top; ++g)
        if (sym_contains(u, transported_vof(d.casc, d.ambient, g))) return true;
      return false;
    }
    case Kind::image:
    case Kind::along_points:
      return d.parts[0].contains(omega_preimage(*d.map, u));
    case Kind::along_sets:
      return d.parts[0].contains(blocks_inside(u));
    case Kind::along_blocks:
      return d.parts[0].contains(subcontour_verdicts(u));
    case Kind::node_iterated:
      return iterated_verdict(d.casc, {}, u.root);
    case Kind::block_lift: {
      Schema c = d.ambient.child(d.block);
      return d.parts[0].contains({c, detail::slice_child(*u.root, c, d.block)});
    }
    case Kind::meet:
      throw error("membership in a lazily generated meet needs a budget");
  }
  throw internal_fault("filter: unreachable kind");
}

// --- sampling ---

inline std::vector<SymSet> FilterBase::sample_base(std::size_t count, std::uint64_t seed) const {
  const Impl& d = *im_;
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull + 0x243f6a8885a308d3ull);
  std::vector<SymSet> out;
  switch (d.kind) {
    case Kind::principal:
      out.push_back(d.gens[0]);
      return out;
    case Kind::finite_meet: {
      out = d.gens;
      SymSet m = d.gens[0];
      for (std::size_t i = 1; i < d.gens.size(); ++i) m = sym_inter(m, d.gens[i]);
      out.push_back(std::move(m));
      if (out.size() > count) out.resize(std::max<std::size_t>(count, 1));
      return out;
    }
    case Kind::frechet: {
      std::vector<Path> pool = leaves_in_weight_order(d.ambient, 12);
      for (std::size_t i = 0; i < count; ++i) {
        std::vector<Path> drop;
        for (std::size_t j = 0; j < 1 + i % 3; ++j)
          drop.push_back(pool[rng() % pool.size()]);
        out.push_back(sym_compl(sym_fin(d.ambient, std::move(drop))));
      }
      return out;
    }
    case Kind::contour: {
      std::vector<Path> pool = leaves_in_weight_order(d.casc, 8);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t g = 1 + i % 4;
        std::map<Path, std::uint64_t> over;
        if (i % 3 == 1) {
          Path p = pool[rng() % pool.size()];
          if (!p.empty()) p.pop_back();
          over[p] = g + 1 + rng() % 3;
        }
        try {
          out.push_back(sym_vof(d.casc, g, over));
        } catch (const error&) {
          out.push_back(sym_vof(d.casc, g));
        }
      }
      return out;
    }
    case Kind::relabel: {
      // filter elements; the enumeration of a contour base has no
      // finite-exception form on the index line
      for (std::size_t i = 0; i < count; ++i) {
        if (i % 2 == 0) {
          out.push_back(omega_tail(i / 2));
        } else {
          std::vector<std::uint64_t> drop{rng() % 16, rng() % 16, rng() % 16};
          out.push_back(sym_compl(omega_points(std::move(drop))));
        }
      }
      return out;
    }
    case Kind::collapse_image: {
      // thresholds on the collapsed cascade; their pullbacks through the
      // block map swallow a uniform threshold set of the source
      std::vector<Path> pool = leaves_in_weight_order(d.ambient, 8);
      for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t g = 1 + i % 4;
        std::map<Path, std::uint64_t> over;
        if (i % 3 == 1) {
          Path p = pool[rng() % pool.size()];
          if (!p.empty()) p.pop_back();
          over[p] = g + 1 + rng() % 3;
        }
        try {
          out.push_back(sym_vof(d.ambient, g, over));
        } catch (const error&) {
          out.push_back(sym_vof(d.ambient, g));
        }
      }
      return out;
    }
    case Kind::transported_contour: {
      for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t g = 1 + i % 4;
        std::map<Path, std::uint64_t> over;
        if (i % 3 == 1) over[Path{static_cast<std::uint32_t>(rng() % 4)}] = g + 1 + rng() % 3;
        try {
          out.push_back(transported_vof(d.casc, d.ambient, g, over));
        } catch (const error&) {
          out.push_back(transported_vof(d.casc, d.ambient, g));
        }
      }
      return out;
    }
    case Kind::image:
    case Kind::along_points: {
      for (SymSet& b : d.parts[0].sample_base(count, seed + 1))
        out.push_back(omega_image(*d.map, b));
      return out;
    }
    case Kind::along_sets: {
      const OmegaMap& t = *d.map;
      for (const SymSet& q : d.parts[0].sample_base(count, seed + 1)) {
        OmegaProfile pr = omega_profile(q);
        std::uint64_t W = std::max<std::uint64_t>(pr.start, d.blocks.size());
        std::vector<std::uint64_t> pts;
        for (std::uint64_t s = 0; s < W; ++s) {
          if (!omega_member(q, s)) continue;
          if (s < d.blocks.size())
            for (std::uint64_t x : d.blocks[s]) pts.push_back(x);
          else
            pts.push_back(t.at(s));
        }
        SymSet b = omega_points(std::move(pts));
        if (pr.eventual) {
          if (t.step == 1)
            b = sym_union(b, omega_tail(t.at(W)));
          else
            b = sym_union(b, omega_points({t.base}));
        }
        out.push_back(std::move(b));
      }
      return out;
    }
    case Kind::along_blocks: {
      const Schema& V = d.casc;
      for (const SymSet& q : d.parts[0].sample_base(count, seed + 1)) {
        OmegaProfile pr = omega_profile(q);
        std::uint64_t g = 1 + (seed + out.size()) % 3;
        std::vector<std::pair<std::uint64_t, SetNodePtr>> entries;
        for (std::uint64_t k = 0; k < pr.start; ++k) {
          Schema c = V.child(k);
          entries.emplace_back(k, omega_member(q, k) ? sym_vof(c, g).root
                                                     : make_const_set(c, false));
        }
        ThetaBands evband = pr.eventual ? ThetaBands::ray(g) : ThetaBands::all(false);
        SetNodePtr root =
            pr.start == 0
                ? make_node_set({}, {}, {evband})
                : make_node_set(std::move(entries), {pr.start},
                                {ThetaBands::all(false), evband});
        out.push_back(SymSet{V, std::move(root)});
      }
      return out;
    }
    case Kind::node_iterated:
      throw error("no finite presentation of this base is available");
    case Kind::block_lift: {
      for (SymSet& b : d.parts[0].sample_base(count, seed + 1))
        out.push_back(SymSet{d.ambient, make_node_set({{d.block, b.root}}, {},
                                                      {ThetaBands::all(false)})});
      return out;
    }
    case Kind::meet: {
      std::size_t per = std::max<std::size_t>(1, count / (d.parts.size() + 1));
      std::vector<std::vector<SymSet>> all;
      for (std::size_t i = 0; i < d.parts.size(); ++i) {
        all.push_back(d.parts[i].sample_base(per, seed + 2 + i));
        for (const SymSet& b : all.back()) out.push_back(b);
      }
      for (std::size_t i = 0; out.size() < count && i < count; ++i) {
        const auto& xs = all[rng() % all.size()];
        const auto& ys = all[rng() % all.size()];
        out.push_back(sym_inter(xs[rng() % xs.size()], ys[rng() % ys.size()]));
      }
      return out;
    }
  }
  throw internal_fault("filter: unreachable kind");
}

inline BoundedContains FilterBase::contains_bounded(const SymSet& u, std::uint64_t budget,
                                                    std::uint64_t seed) const {
  if (im_->kind != Kind::meet) return {contains(u), 1};
  const std::vector<FilterBase>& ps = im_->parts;
  BoundedContains r;
  for (const FilterBase& p : ps) {
    ++r.checked;
    if (p.contains(u)) {
      r.found = true;
      return r;
    }
    if (r.checked >= budget) return r;
  }
  // meets of sampled elements across parts
  std::mt19937_64 rng(seed ^ 0x5bf0a8b1u);
  std::vector<std::vector<SymSet>> all;
  for (std::size_t i = 0; i < ps.size(); ++i) all.push_back(ps[i].sample_base(8, seed + i));
  while (r.checked < budget) {
    std::size_t take = 2 + rng() % 3;
    SymSet m = all[rng() % all.size()][0];
    for (std::size_t j = 0; j < take; ++j) {
      const auto& xs = all[rng() % all.size()];
      m = sym_inter(m, xs[rng() % xs.size()]);
    }
    ++r.checked;
    if (sym_contains(u, m)) {
      r.found = true;
      return r;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Mesh and the finite intersection property
// ---------------------------------------------------------------------------

constexpr std::size_t kDefaultSampleBound = 24;

struct MeshReport {
  bool verdict = false;
  bool exhaustive = false;  // the positive verdict is a theorem, not a sample
  std::uint64_t checked = 0;
  std::optional<std::pair<SymSet, SymSet>> witness;  // a disjoint pair when false
};

// do u and o mesh: does every element of one meet every element of the other
inline MeshReport mesh_bounded(const FilterBase& u, const FilterBase& o, std::size_t bound,
                               std::uint64_t seed) {
  if (!(u.ambient() == o.ambient())) throw error("mesh across different leaf spaces");
  // one finitely based side makes the question exact: the complement of its
  // total meet either belongs to the other filter or no disjoint pair exists
  auto total = [](const FilterBase& f) -> std::optional<SymSet> {
    if (!f.finitely_based()) return std::nullopt;
    SymSet m = f.generators()[0];
    for (std::size_t i = 1; i < f.generators().size(); ++i)
      m = sym_inter(m, f.generators()[i]);
    return m;
  };
  auto one_sided = [&](const FilterBase& a, const FilterBase& b) -> std::optional<MeshReport> {
    std::optional<SymSet> g = total(a);
    if (!g || b.kind() == FilterBase::Kind::meet) return std::nullopt;
    MeshReport r;
    r.checked = 1;
    r.exhaustive = true;
    SymSet c = sym_compl(*g);
    if (b.contains(c)) {
      r.verdict = false;
      r.witness = std::make_pair(*g, std::move(c));
    } else {
      r.verdict = true;
    }
    return r;
  };
  if (auto r = one_sided(u, o)) return *r;
  if (auto r = one_sided(o, u)) return *r;
  MeshReport r;
  std::vector<SymSet> as = u.sample_base(bound, seed);
  std::vector<SymSet> bs = o.sample_base(bound, seed + 1);
  for (const SymSet& a : as)
    for (const SymSet& b : bs) {
      ++r.checked;
      if (sym_is_empty(sym_inter(a, b))) {
        r.verdict = false;
        r.exhaustive = true;  // a disjoint pair refutes meshing outright
        r.witness = std::make_pair(a, b);
        return r;
      }
    }
  r.verdict = true;
  r.exhaustive = u.finitely_based() && o.finitely_based();
  return r;
}

inline bool mesh(const FilterBase& u, const FilterBase& o) {
  return mesh_bounded(u, o, kDefaultSampleBound, 1).verdict;
}

struct FipReport {
  bool verdict = false;
  bool exhaustive = false;
  std::uint64_t checked = 0;
  std::vector<SymSet> witness;  // an empty finite meet when the verdict is false
};

// finite intersection property of the union of the given bases
inline FipReport has_fip_bounded(const std::vector<FilterBase>& fs, std::size_t bound,
                                 std::uint64_t seed) {
  FipReport r;
  if (fs.empty()) {
    r.verdict = true;
    r.exhaustive = true;
    return r;
  }
  for (std::size_t i = 1; i < fs.size(); ++i)
    if (!(fs[i].ambient() == fs[0].ambient()))
      throw error("intersection property across different leaf spaces");
  bool allfin = true;
  for (const FilterBase& f : fs) allfin = allfin && f.finitely_based();
  if (allfin) {
    // every finite meet contains the meet of all generators
    std::vector<SymSet> gens;
    for (const FilterBase& f : fs)
      for (const SymSet& g : f.generators()) gens.push_back(g);
    SymSet m = gens[0];
    for (std::size_t i = 1; i < gens.size(); ++i) m = sym_inter(m, gens[i]);
    r.checked = 1;
    r.exhaustive = true;
    r.verdict = !sym_is_empty(m);
    if (!r.verdict) r.witness = std::move(gens);
    return r;
  }
  std::mt19937_64 rng(seed ^ 0x2545f4914f6cdd1dull);
  std::vector<std::vector<SymSet>> all;
  for (std::size_t i = 0; i < fs.size(); ++i)
    all.push_back(fs[i].sample_base(std::min<std::size_t>(bound, 8), seed + i));
  for (std::size_t trial = 0; trial < bound; ++trial) {
    std::size_t take = 2 + rng() % 3;
    std::vector<SymSet> sel;
    for (std::size_t j = 0; j < take; ++j) {
      const auto& xs = all[rng() % all.size()];
      sel.push_back(xs[rng() % xs.size()]);
    }
    SymSet m = sel[0];
    for (std::size_t j = 1; j < sel.size(); ++j) m = sym_inter(m, sel[j]);
    ++r.checked;
    if (sym_is_empty(m)) {
      r.verdict = false;
      r.exhaustive = true;  // an empty meet refutes the property outright
      r.witness = std::move(sel);
      return r;
    }
  }
  r.verdict = true;
  r.exhaustive = false;
  return r;
}

inline bool has_fip(const std::vector<FilterBase>& fs) {
  return has_fip_bounded(fs, 200, 1).verdict;
}

// ---------------------------------------------------------------------------
// Disjoint copies
// ---------------------------------------------------------------------------
//
// An arbitrary finite family becomes discrete after transport onto the
// blocks of a disjoint union: copy i lives on child i of a tailless root,
// and any base element of one copy misses every other block outright.

struct DisjointFamily {
  Schema ambient;
  std::vector<FilterBase> copies;
};

inline SymSet block_embed(const Schema& ambient, std::uint64_t block, const SymSet& u) {
  if (ambient.kind() != Schema::Kind::internal || ambient.tail())
    throw error("block embedding needs a finite disjoint union");
  if (block >= ambient.explicit_children().size()) throw error("block index out of range");
  if (!(u.schema == ambient.child(block))) throw error("the set does not live on this block");
  return {ambient, make_node_set({{block, u.root}}, {}, {ThetaBands::all(false)})};
}

inline DisjointFamily disjointify(const std::vector<FilterBase>& family) {
  if (family.empty()) throw error("nothing to make disjoint");
  std::vector<Schema> blocks;
  blocks.reserve(family.size());
  for (const FilterBase& f : family) blocks.push_back(f.ambient());
  Schema d = Schema::internal(std::move(blocks), std::nullopt);
  DisjointFamily out{d, {}};
  for (std::size_t i = 0; i < family.size(); ++i)
    out.copies.push_back(FilterBase::lift_to_block(family[i], i, d));
  return out;
}

// ---------------------------------------------------------------------------
// Hypotheses for exchanging a family against its image
// ---------------------------------------------------------------------------
//
// Replacing a family by its distinct values is sound when the values named
// by the index set admit pairwise disjoint elements and the value map is
// one-to-one where it matters.  The disjointness search is bounded: a
// negative only says no disjoint selection surfaced among the samples.

struct HypothesisReport {
  bool discrete = false;
  bool discrete_exhausted = false;  // the failed search ran out of samples
  std::optional<std::pair<std::uint64_t, std::uint64_t>> meshing_pair;
  std::vector<SymSet> disjoint_choice;
  bool one_to_one = false;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> collision;
  bool ok() const { return discrete && one_to_one; }
};

inline HypothesisReport check_discrete_hypothesis(const std::vector<FilterBase>& family,
                                                  const SymSet& index_set,
                                                  const SymSet& one_to_one_on,
                                                  const OmegaMap& f, std::uint64_t seed = 1) {
  require_affine_step(f);
  HypothesisReport rep;
  // indices beyond the listed family are vacuous: the family lists every
  // distinct member once
  std::vector<std::uint64_t> named;
  for (std::uint64_t i = 0; i < family.size(); ++i)
    if (omega_member(index_set, i)) named.push_back(i);
  std::vector<std::vector<SymSet>> cand;
  for (std::uint64_t i : named) cand.push_back(family[i].sample_base(4, seed + i));
  std::vector<std::size_t> pick(named.size(), 0);
  auto overlap = [&]() -> std::optional<std::pair<std::size_t, std::size_t>> {
    for (std::size_t i = 0; i < named.size(); ++i)
      for (std::size_t j = i + 1; j < named.size(); ++j)
        if (!sym_is_empty(sym_inter(cand[i][pick[i]], cand[j][pick[j]])))
          return std::make_pair(i, j);
    return std::nullopt;
  };
  bool solved = named.size() < 2;
  std::size_t repair = 0;
  while (!solved) {
    auto bad = overlap();
    if (!bad) {
      solved = true;
      break;
    }
    bool moved = false;
    if (repair++ < 32) {
      if (pick[bad->second] + 1 < cand[bad->second].size()) {
        ++pick[bad->second];
        moved = true;
      } else if (pick[bad->first] + 1 < cand[bad->first].size()) {
        ++pick[bad->first];
        moved = true;
      }
    }
    if (!moved) {
      rep.meshing_pair = std::make_pair(named[bad->first], named[bad->second]);
      rep.discrete_exhausted = true;
      break;
    }
  }
  if (solved) {
    rep.discrete = true;
    for (std::size_t i = 0; i < named.size(); ++i) rep.disjoint_choice.push_back(cand[i][pick[i]]);
  }
  // injectivity of the value map over the named window and its continuation
  OmegaProfile pr = omega_profile(one_to_one_on);
  std::uint64_t W = std::max<std::uint64_t>(pr.start, f.table.size());
  if (f.step == 0 && pr.eventual) {
    rep.collision = std::make_pair(W, W + 1);
  } else {
    std::map<std::uint64_t, std::uint64_t> seen;
    for (std::uint64_t k = 0; k < W && !rep.collision; ++k) {
      if (!omega_member(one_to_one_on, k)) continue;
      auto [it, fresh] = seen.emplace(f.at(k), k);
      if (!fresh) rep.collision = std::make_pair(it->second, k);
    }
    if (f.step == 1 && !rep.collision) {
      // a window value may be revisited by the increasing continuation
      std::uint64_t cut = f.table.size();
      for (const auto& [v, k] : seen) {
        if (v < f.base) continue;
        std::uint64_t t = cut + (v - f.base);
        if (t >= W && t != k && omega_member(one_to_one_on, t))
          rep.collision = std::make_pair(k, t);
      }
    }
  }
  rep.one_to_one = !rep.collision.has_value();
  return rep;
}

// ---------------------------------------------------------------------------
// Threshold functions and base refinement
// ---------------------------------------------------------------------------
//
// A node-indexed threshold with finite support over a default.  If g is
// eventually dominated by d, raising d's root threshold past every
// violation and past g's own root value puts the refined level set inside
// the one cut by g.

struct NodeFn {
  std::uint64_t dflt = 0;
  std::map<Path, std::uint64_t> overrides;

  std::uint64_t at(const Path& p) const {
    auto it = overrides.find(p);
    return it != overrides.end() ? it->second : dflt;
  }
};

inline SymSet threshold_set(const Schema& s, const NodeFn& g) {
  return sym_vof(s, g.dflt, g.overrides);
}

// g(v) <= d(v) off a finite set; the overrides are finite, so only the
// defaults decide
inline bool eventually_dominated(const NodeFn& g, const NodeFn& d) { return g.dflt <= d.dflt; }

inline std::vector<Path> domination_exceptions(const NodeFn& g, const NodeFn& d) {
  std::vector<Path> out;
  for (const auto& [p, v] : g.overrides)
    if (v > d.at(p)) out.push_back(p);
  for (const auto& [p, v] : d.overrides)
    if (g.at(p) > v && !g.overrides.count(p)) out.push_back(p);
  return out;
}

inline std::uint64_t refinement_root_index(const NodeFn& g, const NodeFn& d) {
  if (!eventually_dominated(g, d)) throw error("refinement requires eventual domination");
  std::uint64_t n0 = g.at({});
  for (const Path& p : domination_exceptions(g, d))
    if (!p.empty()) n0 = std::max<std::uint64_t>(n0, p[0] + 1);
  return n0;
}

inline NodeFn refined_at_root(const NodeFn& d, std::uint64_t n0) {
  NodeFn r = d;
  r.overrides[Path{}] = n0;
  return r;
}

}  // namespace casco
