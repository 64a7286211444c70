#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "casco/filters.hpp"

using namespace casco;

namespace {
const Schema& K1 = omega_line();

// the leaf of the collapse image holding a given source leaf: the path down
// to the first node of rank <= 1, whose whole region collapses to one point
Path image_coordinate(const Schema& v, const Path& leaf) {
  Schema cur = v;
  Path out;
  for (std::uint32_t x : leaf) {
    if (cur.rank() < Ordinal::nat(2)) break;
    out.push_back(x);
    cur = cur.child(x);
  }
  return out;
}
}  // namespace

TEST_CASE("index line sets are finite exceptions over a bit") {
  SymSet t3 = omega_tail(3);
  OmegaProfile p = omega_profile(t3);
  CHECK(p.start == 3);
  CHECK(p.eventual);
  CHECK_FALSE(omega_member(t3, 2));
  CHECK(omega_member(t3, 3));
  CHECK(omega_member(t3, 100));

  SymSet pts = omega_points({4, 1, 4});
  p = omega_profile(pts);
  CHECK(p.start == 5);
  CHECK_FALSE(p.eventual);
  CHECK(omega_member(pts, 1));
  CHECK(omega_member(pts, 4));
  CHECK_FALSE(omega_member(pts, 2));
  CHECK_FALSE(omega_member(pts, 9));

  SymSet co = sym_compl(pts);
  p = omega_profile(co);
  CHECK(p.eventual);
  CHECK(sym_equal(omega_from_profile(true, {1, 4}), co));
  CHECK(sym_equal(omega_from_profile(false, {1, 4}), pts));
}

TEST_CASE("index maps compose and act on sets") {
  OmegaMap f{{5, 2}, 10, 1};
  REQUIRE(f.at(0) == 5);
  REQUIRE(f.at(1) == 2);
  REQUIRE(f.at(2) == 10);
  REQUIRE(f.at(5) == 13);

  SymSet pre = omega_preimage(f, omega_tail(3));
  CHECK(sym_equal(pre, sym_compl(omega_points({1}))));

  SymSet img = omega_image(f, sym_compl(omega_points({0})));
  CHECK(omega_member(img, 2));
  CHECK_FALSE(omega_member(img, 5));
  CHECK_FALSE(omega_member(img, 9));
  CHECK(omega_member(img, 10));
  CHECK(omega_member(img, 37));

  OmegaMap id{{}, 0, 1};
  OmegaMap fid = compose(f, id);
  for (std::uint64_t k = 0; k < 9; ++k) CHECK(fid.at(k) == f.at(k));

  OmegaMap c{{7}, 3, 0};
  OmegaMap fc = compose(f, c);
  CHECK(fc.step == 0);
  for (std::uint64_t k = 0; k < 9; ++k) CHECK(fc.at(k) == f.at(c.at(k)));

  CHECK_THROWS_AS(require_affine_step(OmegaMap{{}, 0, 2}), error);
}

TEST_CASE("first occurrence order deduplicates map values") {
  OmegaMap f{{4, 7, 4, 9}, 7, 0};
  ValueOrder vo = first_occurrence_order(f);
  CHECK(vo.values.at(0) == 4);
  CHECK(vo.values.at(1) == 7);
  CHECK(vo.values.at(2) == 9);
  CHECK(vo.index.at(0) == 0);
  CHECK(vo.index.at(1) == 1);
  CHECK(vo.index.at(2) == 0);
  CHECK(vo.index.at(3) == 2);
  CHECK(vo.index.at(4) == 1);
  CHECK(vo.index.at(12) == 1);

  OmegaMap g{{5, 0, 7}, 4, 1};
  ValueOrder wo = first_occurrence_order(g);
  for (std::uint64_t k = 0; k < 30; ++k) CHECK(wo.values.at(wo.index.at(k)) == g.at(k));
  for (std::uint64_t i = 0; i < 12; ++i)
    for (std::uint64_t j = i + 1; j < 12; ++j) CHECK(wo.values.at(i) != wo.values.at(j));
}

TEST_CASE("leaves enumerate in weight order") {
  for (std::uint64_t k = 0; k < 8; ++k) CHECK(leaf_at_index(K1, k) == omega_leaf(k));
  CHECK(index_of_leaf(K1, omega_leaf(5)) == 5);

  Schema c2 = Schema::complete(Ordinal::nat(2));
  std::vector<Path> lead = leaves_in_weight_order(c2, 6);
  CHECK(lead[0] == Path{0, 0});
  CHECK(lead[1] == Path{0, 1});
  CHECK(lead[2] == Path{1, 0});
  CHECK(lead[3] == Path{0, 2});
  CHECK(lead[4] == Path{1, 1});
  CHECK(lead[5] == Path{2, 0});
  for (std::uint64_t i = 0; i < 12; ++i) CHECK(index_of_leaf(c2, leaf_at_index(c2, i)) == i);

  SymSet a = sym_compl(omega_points({0, 2}));
  SymSet pulled = pull_through_enumeration(c2, a);
  CHECK_FALSE(sym_member(pulled, {0, 0}));
  CHECK(sym_member(pulled, {0, 1}));
  CHECK_FALSE(sym_member(pulled, {1, 0}));
  CHECK(sym_member(pulled, {0, 2}));
  CHECK(sym_member(pulled, {7, 3}));
}

TEST_CASE("collapse pullbacks mirror membership through the block map") {
  std::vector<Schema> sources = {
      Schema::complete(Ordinal::nat(3)),
      Schema::complete(Ordinal::nat(4)),
      Schema::destroyed_complete(Ordinal::nat(4), 1),
      Schema::destroyed_complete(Ordinal::nat(4), 2),
      Schema::internal({Schema::complete(Ordinal::nat(2))},
                       TailRule{Ordinal::nat(1), Ordinal::nat(0), 0, 0}),
  };
  for (const Schema& v : sources) {
    Schema c = collapse_cascade(v);
    CollapseMap cm = block_collapse(v);
    std::vector<Path> drop = leaves_in_weight_order(c, 3);
    std::vector<SymSet> sets = {
        sym_vof(c, 1),
        sym_vof(c, 2),
        sym_compl(sym_fin(c, drop)),
        sym_union(sym_vof(c, 3), sym_fin(c, {leaf_at_index(c, 0)})),
    };
    for (const Path& leaf : leaves_in_weight_order(v, 40))
      REQUIRE(image_coordinate(v, cm.apply(leaf)) == image_coordinate(v, leaf));
    for (const SymSet& a : sets) {
      SymSet back = pullback_collapse(v, a);
      for (const Path& leaf : leaves_in_weight_order(v, 40))
        REQUIRE(sym_member(back, leaf) == sym_member(a, image_coordinate(v, leaf)));
      REQUIRE(contour_contains(a) == contour_contains(back));
    }
  }
  CHECK_THROWS_AS(
      pullback_collapse(Schema::complete(Ordinal::nat(3)),
                        sym_full(Schema::complete(Ordinal::nat(3)))),
      error);
}

TEST_CASE("filters answer membership by kind") {
  FilterBase pr = FilterBase::principal(omega_tail(2));
  CHECK(pr.contains(omega_tail(1)));
  CHECK(pr.contains(omega_tail(2)));
  CHECK_FALSE(pr.contains(omega_tail(3)));
  CHECK_FALSE(pr.contains(omega_points({2, 3})));

  FilterBase fm = FilterBase::finite_meet({omega_tail(2), sym_compl(omega_points({5}))});
  CHECK(fm.contains(sym_compl(omega_points({0, 5}))));
  CHECK_FALSE(fm.contains(omega_tail(6)));

  Schema c2 = Schema::complete(Ordinal::nat(2));
  FilterBase fr = FilterBase::frechet(c2);
  CHECK(fr.contains(sym_compl(sym_fin(c2, {{0, 0}, {3, 1}}))));
  CHECK_FALSE(fr.contains(sym_vof(c2, 1)));

  FilterBase ct = FilterBase::contour_of(c2);
  CHECK(ct.contains(sym_vof(c2, 1)));
  CHECK(ct.contains(sym_compl(sym_fin(c2, {{2, 2}}))));
  CHECK_FALSE(ct.contains(sym_fin(c2, {{0, 0}, {1, 1}})));

  FilterBase rl = FilterBase::relabel_of(c2);
  CHECK(rl.contains(omega_tail(4)));
  CHECK(rl.contains(sym_compl(omega_points({0, 7}))));
  CHECK_FALSE(rl.contains(omega_points({1, 2, 3})));

  CHECK_THROWS_AS(pr.contains(sym_full(c2)), error);
}

TEST_CASE("images replace a family by its distinct values") {
  FilterBase p = FilterBase::frechet_line();
  OmegaMap x{{}, 0, 1};
  FilterBase u = FilterBase::along_points(p, x);

  OmegaMap f{{3, 3, 8}, 5, 1};
  ValueOrder vo = first_occurrence_order(compose(f, x));
  FilterBase lhs = FilterBase::image_of(f, u);
  FilterBase rhs = FilterBase::along_points(FilterBase::image_of(vo.index, p), vo.values);

  CHECK(lhs.contains(omega_tail(4)));
  CHECK(rhs.contains(omega_tail(4)));
  std::vector<SymSet> probes = {omega_tail(4), sym_compl(omega_points({3})),
                                omega_points({3, 8}), sym_compl(omega_points({5, 6}))};
  for (const SymSet& a : probes) REQUIRE(lhs.contains(a) == rhs.contains(a));

  for (const SymSet& b : lhs.sample_base(10, 5)) REQUIRE(rhs.contains(b));
  for (const SymSet& b : rhs.sample_base(10, 6)) REQUIRE(lhs.contains(b));
}

TEST_CASE("iterated limits over finite blocks") {
  std::vector<std::vector<std::uint64_t>> blocks = {{0, 1}, {2}, {5, 6}};
  OmegaMap tail{{}, 7, 1};  // the n-th block past the prefix is {n + 4}
  FilterBase u = FilterBase::along_sets(FilterBase::frechet_line(), blocks, tail);
  CHECK(u.contains(omega_tail(2)));
  CHECK(u.contains(sym_compl(omega_points({8}))));
  std::vector<std::uint64_t> seg;
  for (std::uint64_t k = 0; k <= 20; ++k) seg.push_back(k);
  CHECK_FALSE(u.contains(omega_points(seg)));

  FilterBase q2 = FilterBase::principal(omega_points({0, 2}));
  FilterBase u2 = FilterBase::along_sets(q2, blocks, tail);
  CHECK_FALSE(u2.contains(sym_compl(omega_points({1}))));
  CHECK(u2.contains(sym_compl(omega_points({3}))));
  std::vector<SymSet> base = u2.sample_base(1, 3);
  REQUIRE(base.size() == 1);
  CHECK(sym_equal(base[0], omega_points({0, 1, 5, 6})));

  CHECK_THROWS_AS(FilterBase::along_sets(FilterBase::frechet_line(), {{1}, {}}, tail), error);
}

TEST_CASE("block iteration along the cofinite filter recovers the contour") {
  Schema c2 = Schema::complete(Ordinal::nat(2));
  FilterBase u = FilterBase::along_blocks(FilterBase::frechet_line(), c2);
  std::vector<SymSet> sets = {
      sym_vof(c2, 0),
      sym_vof(c2, 2),
      sym_vof(c2, 1, {{Path{}, 3}}),
      sym_compl(sym_fin(c2, {{0, 0}, {4, 4}})),
      sym_fin(c2, {{1, 1}}),
      weight_cut(c2, 3),
      sym_diff(sym_full(c2), subtree_set(c2, {1})),
  };
  for (const SymSet& a : sets) REQUIRE(u.contains(a) == contour_contains(a));

  FilterBase picky =
      FilterBase::along_blocks(FilterBase::principal(omega_points({0, 2})), c2);
  CHECK_FALSE(picky.contains(sym_diff(sym_full(c2), subtree_set(c2, {0}))));
  CHECK(picky.contains(sym_diff(sym_full(c2), subtree_set(c2, {1}))));

  for (const SymSet& b : picky.sample_base(6, 11)) REQUIRE(picky.contains(b));
  for (const SymSet& b : u.sample_base(6, 12)) REQUIRE(contour_contains(b));

  CHECK_THROWS_AS(
      FilterBase::along_blocks(FilterBase::frechet_line(),
                               Schema::internal({Schema::leaf(), Schema::leaf()}, std::nullopt)),
      error);
}

TEST_CASE("iterated contours specialize to the plain contour") {
  std::vector<Schema> pool = {
      Schema::complete(Ordinal::nat(2)),
      Schema::complete(Ordinal::nat(3)),
      Schema::destroyed_complete(Ordinal::nat(3), 1),
  };
  std::mt19937_64 rng(19);
  for (const Schema& s : pool) {
    FilterBase h = FilterBase::iterated_contour(s, {});
    std::vector<SymSet> sets = {
        sym_vof(s, 1),
        sym_vof(s, 2, {{Path{}, 4}}),
        sym_compl(sym_fin(s, leaves_in_weight_order(s, 4))),
        sym_fin(s, {leaf_at_index(s, static_cast<std::uint64_t>(rng() % 9))}),
        weight_cut(s, 2 + rng() % 3),
    };
    for (const SymSet& a : sets) REQUIRE(h.contains(a) == contour_contains(a));
  }
}

TEST_CASE("node filters sharpen the contour at chosen nodes") {
  Schema c2 = Schema::complete(Ordinal::nat(2));
  FilterBase root_picky = FilterBase::iterated_contour(
      c2, {{Path{}, FilterBase::principal(omega_points({2, 4}))}});
  CHECK(root_picky.contains(sym_vof(c2, 1)));
  SymSet cut2 = sym_diff(sym_full(c2), subtree_set(c2, {2}));
  CHECK(contour_contains(cut2));
  CHECK_FALSE(root_picky.contains(cut2));

  FilterBase two_level = FilterBase::iterated_contour(
      c2, {{Path{}, FilterBase::principal(omega_points({1, 5}))},
           {Path{1}, FilterBase::principal(omega_points({0, 2}))}});
  CHECK_FALSE(two_level.contains(sym_compl(sym_fin(c2, {{1, 0}}))));
  CHECK(two_level.contains(sym_compl(sym_fin(c2, {{1, 1}}))));

  Schema flat = Schema::flattened(Schema::complete(Ordinal::nat(2)));
  FilterBase region = FilterBase::iterated_contour(
      flat, {{Path{}, FilterBase::principal(omega_points({0, 3}))}});
  CHECK_FALSE(region.contains(sym_compl(sym_fin(flat, {{0, 0}}))));
  CHECK(region.contains(sym_compl(sym_fin(flat, {{1, 0}}))));

  CHECK_THROWS_AS(
      FilterBase::iterated_contour(c2, {{Path{0, 0}, FilterBase::frechet_line()}}), error);
  CHECK_THROWS_AS(
      FilterBase::iterated_contour(c2, {{Path{}, FilterBase::frechet(c2)}}), error);
  CHECK_THROWS_AS(
      FilterBase::iterated_contour(flat, {{Path{0}, FilterBase::frechet_line()}}), error);
}

TEST_CASE("mesh detects disjoint pairs exactly") {
  MeshReport r = mesh_bounded(FilterBase::principal(omega_tail(3)), FilterBase::frechet_line(),
                              kDefaultSampleBound, 1);
  CHECK(r.verdict);
  CHECK(r.exhaustive);

  r = mesh_bounded(FilterBase::principal(omega_points({4})), FilterBase::frechet_line(),
                   kDefaultSampleBound, 1);
  CHECK_FALSE(r.verdict);
  REQUIRE(r.witness.has_value());
  CHECK(sym_is_empty(sym_inter(r.witness->first, r.witness->second)));

  CHECK_FALSE(mesh(FilterBase::principal(omega_tail(3)),
                   FilterBase::principal(omega_points({1}))));

  Schema c2 = Schema::complete(Ordinal::nat(2));
  r = mesh_bounded(FilterBase::principal(sym_vof(c2, 3)), FilterBase::contour_of(c2),
                   kDefaultSampleBound, 1);
  CHECK(r.verdict);
  CHECK(r.exhaustive);

  CHECK_THROWS_AS(mesh(FilterBase::frechet_line(), FilterBase::frechet(c2)), error);
}

TEST_CASE("finite intersection detection over sampled bases") {
  FipReport ok = has_fip_bounded({FilterBase::frechet_line(),
                                  FilterBase::principal(omega_tail(5)),
                                  FilterBase::relabel_of(Schema::complete(Ordinal::nat(2)))},
                                 120, 7);
  CHECK(ok.verdict);
  CHECK_FALSE(ok.exhaustive);  // a lazy base keeps the positive answer sampled

  FipReport bad = has_fip_bounded(
      {FilterBase::principal(omega_points({1})), FilterBase::principal(omega_points({2}))}, 10,
      7);
  CHECK_FALSE(bad.verdict);
  CHECK(bad.exhaustive);
  CHECK(bad.witness.size() == 2);
}

TEST_CASE("disjoint copies never mesh") {
  Schema c2 = Schema::complete(Ordinal::nat(2));
  DisjointFamily fam = disjointify(
      {FilterBase::frechet_line(), FilterBase::contour_of(c2),
       FilterBase::principal(omega_tail(1))});
  REQUIRE(fam.copies.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      MeshReport r = mesh_bounded(fam.copies[i], fam.copies[j], 8, 3);
      CHECK_FALSE(r.verdict);
      CHECK(r.exhaustive);
      REQUIRE(r.witness.has_value());
    }
  CHECK(fam.copies[1].contains(block_embed(fam.ambient, 1, sym_vof(c2, 1))));
  CHECK_FALSE(fam.copies[1].contains(block_embed(fam.ambient, 0, sym_full(K1))));
  CHECK_THROWS_AS(block_embed(fam.ambient, 0, sym_full(c2)), error);
  CHECK_THROWS_AS(block_embed(fam.ambient, 9, sym_full(K1)), error);
}

TEST_CASE("discreteness and injectivity hypotheses") {
  Schema c2 = Schema::complete(Ordinal::nat(2));
  DisjointFamily fam = disjointify(
      {FilterBase::frechet_line(), FilterBase::contour_of(c2),
       FilterBase::principal(omega_tail(1))});
  OmegaMap id{{}, 0, 1};
  HypothesisReport h = check_discrete_hypothesis(fam.copies, omega_points({0, 1, 2}),
                                                 omega_tail(0), id);
  CHECK(h.discrete);
  CHECK(h.one_to_one);
  CHECK(h.ok());
  CHECK(h.disjoint_choice.size() == 3);

  h = check_discrete_hypothesis({FilterBase::frechet_line(), FilterBase::frechet_line()},
                                omega_points({0, 1}), omega_tail(0), id);
  CHECK_FALSE(h.discrete);
  REQUIRE(h.meshing_pair.has_value());

  OmegaMap squash{{5, 5}, 9, 0};
  h = check_discrete_hypothesis({}, omega_points({}), omega_tail(0), squash);
  REQUIRE(h.collision.has_value());
  // the constant continuation is reported first: f(2) == f(3)
  CHECK(h.collision->first == 2);
  CHECK(h.collision->second == 3);

  h = check_discrete_hypothesis({}, omega_points({}), omega_points({0, 3}), squash);
  CHECK(h.one_to_one);

  OmegaMap revisit{{6}, 3, 1};
  h = check_discrete_hypothesis({}, omega_points({}), omega_tail(0), revisit);
  REQUIRE(h.collision.has_value());
  CHECK(h.collision->first == 0);
  CHECK(h.collision->second == 4);
}

TEST_CASE("threshold refinement dives under an eventually dominated function") {
  Schema c2 = Schema::complete(Ordinal::nat(2));
  NodeFn g{1, {{Path{}, 5}, {Path{2}, 4}}};
  NodeFn d{2, {}};
  REQUIRE(eventually_dominated(g, d));
  std::uint64_t n0 = refinement_root_index(g, d);
  CHECK(n0 == 5);
  NodeFn fd = refined_at_root(d, n0);
  CHECK(sym_contains(threshold_set(c2, g), threshold_set(c2, fd)));
  CHECK_FALSE(sym_contains(threshold_set(c2, g), threshold_set(c2, d)));

  NodeFn too_big{3, {}};
  CHECK_THROWS_AS(refinement_root_index(too_big, d), error);

  std::vector<Schema> pool = {c2, Schema::complete(Ordinal::nat(3)),
                              Schema::destroyed_complete(Ordinal::nat(3), 1)};
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const Schema& s = pool[trial % pool.size()];
    NodeFn gg{rng() % 3, {}};
    NodeFn dd{gg.dflt + rng() % 3, {}};
    std::vector<Path> lv = leaves_in_weight_order(s, 10);
    for (int o = 0; o < 2; ++o) {
      Path p = lv[rng() % lv.size()];
      if (!p.empty()) p.pop_back();
      std::uint64_t val = rng() % 6;
      try {
        sym_vof(s, 0, {{p, val}});
      } catch (const error&) {
        continue;  // the prefix lands inside a flattened region
      }
      if (o == 0)
        gg.overrides[p] = val;
      else
        dd.overrides[p] = val;
    }
    NodeFn refined = refined_at_root(dd, refinement_root_index(gg, dd));
    REQUIRE(sym_contains(threshold_set(s, gg), threshold_set(s, refined)));
  }
}

TEST_CASE("bounded meet membership searches for certificates") {
  Schema c2 = Schema::complete(Ordinal::nat(2));
  FilterBase m = FilterBase::meet_of(
      {FilterBase::contour_of(c2), FilterBase::principal(weight_cut(c2, 4))});
  REQUIRE(m.kind() == FilterBase::Kind::meet);
  CHECK_THROWS_AS(m.contains(sym_full(c2)), error);

  SymSet u = sym_inter(sym_vof(c2, 1), weight_cut(c2, 2));
  BoundedContains bc = m.contains_bounded(u, 64, 9);
  CHECK(bc.found);
  bc = m.contains_bounded(sym_fin(c2, {{0, 0}}), 64, 9);
  CHECK_FALSE(bc.found);
  CHECK(bc.checked > 0);

  FilterBase flat = FilterBase::meet_of(
      {FilterBase::principal(omega_tail(2)),
       FilterBase::finite_meet({omega_tail(1), sym_compl(omega_points({4}))})});
  CHECK(flat.kind() == FilterBase::Kind::finite_meet);
  CHECK(flat.generators().size() == 3);

  FilterBase nested = FilterBase::meet_of(
      {FilterBase::meet_of({FilterBase::contour_of(c2), FilterBase::frechet(c2)}),
       FilterBase::principal(weight_cut(c2, 1))});
  CHECK(nested.parts().size() == 3);
}
