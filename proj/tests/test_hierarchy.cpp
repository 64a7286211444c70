#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "casco/hierarchy.hpp"

using namespace casco;

namespace {
Schema T(std::uint32_t n) { return Schema::complete(Ordinal::nat(n)); }

using Outcome = PartitionReport::Outcome;
using Branch = CompositionReport::Branch;
}  // namespace

TEST_CASE("the cascade catalogue is deterministic and spans the requested ranks") {
  std::vector<Schema> fam = schema_family(3);
  CHECK(fam.size() >= 40);

  std::set<std::string> printed;
  Ordinal prev = Ordinal::nat(0);
  for (const Schema& s : fam) {
    CHECK(s.valid());
    CHECK(is_monotone(s));
    CHECK(is_sequential(s));
    CHECK(!(Ordinal::nat(3) < s.rank()));
    CHECK(!(s.rank() < prev));  // ordered by rank, then by printed form
    prev = s.rank();
    CHECK(printed.insert(print_schema(s)).second);
  }

  std::vector<Schema> again = schema_family(3);
  REQUIRE(again.size() == fam.size());
  for (std::size_t i = 0; i < fam.size(); ++i) CHECK(again[i] == fam[i]);

  // each requested rank is represented, and a tighter bound gives a prefix
  for (std::uint32_t r = 1; r <= 3; ++r) {
    bool seen = false;
    for (const Schema& s : fam) seen = seen || s.rank() == Ordinal::nat(r);
    CHECK(seen);
  }
  std::vector<Schema> low = schema_family(1);
  CHECK(!low.empty());
  for (const Schema& s : low) CHECK(s.rank() == Ordinal::nat(1));

  CHECK_THROWS_AS(schema_family(0), error);
}

TEST_CASE("rank search certifies plain contours at their own rank") {
  for (std::uint32_t n = 1; n <= 3; ++n) {
    RankReport r = max_contour_rank({FilterBase::contour_of(T(n)), 4, 2000, 12, 7});
    CHECK(r.rank_found == n);
    REQUIRE(r.certificate.has_value());
    if (n >= 2) CHECK(print_schema(*r.certificate) == print_schema(T(n)));
  }

  // a bound below the true rank caps the certificate at the bound
  RankReport capped = max_contour_rank({FilterBase::contour_of(T(3)), 2, 2000, 12, 7});
  CHECK(capped.rank_found == 2);
  REQUIRE(capped.certificate.has_value());
  CHECK(capped.certificate->rank() == Ordinal::nat(2));
  CHECK(print_schema(*capped.certificate) ==
        print_schema(decrease_rank(T(3), Ordinal::nat(2))));

  // bound one only asks whether the cofinite sets belong
  RankReport one = max_contour_rank({FilterBase::contour_of(T(3)), 1, 2000, 12, 7});
  CHECK(one.rank_found == 1);
  CHECK(one.note == "every sampled cofinite set belongs");

  // same query, same report
  RankReport a = max_contour_rank({FilterBase::contour_of(T(2)), 3, 2000, 12, 9});
  RankReport b = max_contour_rank({FilterBase::contour_of(T(2)), 3, 2000, 12, 9});
  CHECK(a.rank_found == b.rank_found);
  CHECK(a.budget_used == b.budget_used);
  CHECK(a.note == b.note);
}

TEST_CASE("rank search follows collapse images and block iterations") {
  // collapsing a block structure loses exactly one level
  RankReport ci = max_contour_rank({FilterBase::image_of_collapse(T(3)), 4, 2000, 12, 7});
  CHECK(ci.rank_found == 2);
  RankReport ci2 = max_contour_rank({FilterBase::image_of_collapse(T(2)), 4, 2000, 12, 7});
  CHECK(ci2.rank_found == 1);

  // iterating block contours along the tail filter composes to the full rank
  RankReport ab =
      max_contour_rank({FilterBase::along_blocks(FilterBase::frechet_line(), T(2)), 3, 2000, 12, 7});
  CHECK(ab.rank_found == 2);

  // a principal outer filter keeps the uniform bases out, and only the
  // cofinite layer survives
  SymSet evens = omega_points({0, 2, 4, 6, 8, 10});
  RankReport pr = max_contour_rank(
      {FilterBase::along_blocks(FilterBase::principal(evens), T(2)), 3, 2000, 12, 7});
  CHECK(pr.rank_found == 1);

  // the carrier of a relabelled contour is certified on the carrier side
  RankReport rl = max_contour_rank({FilterBase::relabel_of(T(2)), 3, 2000, 12, 7});
  CHECK(rl.rank_found == 2);
  REQUIRE(rl.certificate.has_value());
  CHECK(print_schema(*rl.certificate) == print_schema(T(2)));
}

TEST_CASE("rank search on transported presentations stops at the carried rank") {
  Schema w4 = T(4);
  Schema d2 = decrease_rank(w4, Ordinal::nat(2));
  RankReport r = max_contour_rank({FilterBase::transported_contour(d2, w4), 4, 4000, 10, 5});
  CHECK(r.rank_found == 2);
  REQUIRE(r.certificate.has_value());
  CHECK(print_schema(*r.certificate) == print_schema(d2));
  CHECK(r.note.find("rank above 2") != std::string::npos);
  CHECK(r.budget_used > 0);
}

TEST_CASE("rank search rejects presentations without a contour shape") {
  CHECK_THROWS_AS(max_contour_rank({FilterBase::frechet_line(), 2, 100, 4, 1}), error);
  CHECK_THROWS_AS(max_contour_rank({FilterBase::principal(omega_tail(2)), 2, 100, 4, 1}), error);
  CHECK_THROWS_AS(
      max_contour_rank({FilterBase::image_of(OmegaMap{{}, 0, 1}, FilterBase::frechet_line()), 2,
                        100, 4, 1}),
      error);
  CHECK_THROWS_AS(max_contour_rank({FilterBase::contour_of(T(2)), 0, 100, 4, 1}), error);
}

TEST_CASE("a meet of transported contours reports its verified rank and spends budget") {
  Schema w4 = T(4);
  std::vector<FilterBase> parts = {
      FilterBase::transported_contour(decrease_rank(w4, Ordinal::nat(2)), w4),
      FilterBase::transported_contour(Schema::destroyed_complete(Ordinal::nat(4), 2), w4)};

  // the family is consistent: its finite meets are never empty
  FipReport fip = has_fip_bounded(parts, 12, 3);
  CHECK(fip.verdict);
  CHECK(fip.checked > 0);

  FilterBase joint = FilterBase::meet_of(parts);
  RankReport r = max_contour_rank({joint, 4, 6000, 8, 3});
  CHECK(r.rank_found == 2);
  REQUIRE(r.certificate.has_value());
  CHECK(r.certificate->rank() == Ordinal::nat(2));
  CHECK(r.note.find("rank above 2") != std::string::npos);
  CHECK(r.budget_used > 0);
  CHECK(r.budget_used <= 6000);
}

TEST_CASE("line chains: one-to-one and constant maps yield their branches") {
  OmegaMap id{{}, 0, 1};
  OmegaMap c5{{}, 5, 0};

  CompositionReport inj = composition_witness(FilterBase::frechet_line(), {StageMap::of(id)}, 8, 3);
  CHECK(inj.branch == Branch::finite_to_one);
  CHECK(inj.stage == 0);
  REQUIRE(inj.witness.has_value());

  CompositionReport cst = composition_witness(FilterBase::frechet_line(), {StageMap::of(c5)}, 8, 3);
  CHECK(cst.branch == Branch::constant);
  REQUIRE(cst.const_index.has_value());
  CHECK(*cst.const_index == 5);
  REQUIRE(cst.witness.has_value());
  CHECK(sym_equal(*cst.witness, sym_full(omega_line())));

  // a map constant past a finite table: the level set of the eventual value
  // is a tail, which the tail filter holds
  OmegaMap mixed{{7, 7, 7}, 9, 0};
  CompositionReport lv = composition_witness(FilterBase::frechet_line(), {StageMap::of(mixed)}, 8, 3);
  CHECK(lv.branch == Branch::constant);
  REQUIRE(lv.const_index.has_value());
  CHECK(*lv.const_index == 9);

  // two stages compose before the decision
  CompositionReport two =
      composition_witness(FilterBase::frechet_line(), {StageMap::of(c5), StageMap::of(id)}, 8, 3);
  CHECK(two.branch == Branch::constant);
  CHECK(*two.const_index == 5);

  // a member inside the variable table meets the constant fibre finitely
  OmegaMap g{{0, 1, 2, 3}, 9, 0};
  CompositionReport fin =
      composition_witness(FilterBase::principal(omega_points({0, 1, 2})), {StageMap::of(g)}, 8, 3);
  CHECK(fin.branch == Branch::finite_to_one);
  CHECK(fin.stage == 0);
  REQUIRE(fin.witness.has_value());
  CHECK(sym_equal(*fin.witness, omega_points({0, 1, 2})));

  CHECK_THROWS_AS(composition_witness(FilterBase::frechet_line(), {}, 8, 3), error);
  CHECK_THROWS_AS(composition_witness(FilterBase::frechet_line(),
                                      {StageMap::of(id), StageMap::of(descent_map(2))}, 8, 3),
                  error);
}

TEST_CASE("path chains: finite members decide, collapse stages need block-finite members") {
  Schema t2 = T(2);
  CollapseMap cm = block_collapse(t2);

  // two leaves of one block collapse to the same point
  CompositionReport same = composition_witness(
      FilterBase::principal(sym_fin(t2, {Path{3, 1}, Path{3, 4}})), {StageMap::of(cm)}, 8, 3);
  CHECK(same.branch == Branch::constant);
  REQUIRE(same.const_leaf.has_value());
  CHECK(*same.const_leaf == Path{3, 0});

  // leaves of different blocks do not, but a finite member is always tame
  CompositionReport diff = composition_witness(
      FilterBase::principal(sym_fin(t2, {Path{0, 0}, Path{1, 2}})), {StageMap::of(cm)}, 8, 3);
  CHECK(diff.branch == Branch::finite_to_one);
  CHECK(diff.stage == 0);

  // an infinite member with three leaves per block: the collapse is
  // finite-to-one on it
  SymSet low = sym_diff(sym_full(t2), sym_vof(t2, 3, {{Path{}, 0}}));
  CHECK(!sym_is_finite(low));
  CompositionReport blocks =
      composition_witness(FilterBase::principal(low), {StageMap::of(cm)}, 8, 3);
  CHECK(blocks.branch == Branch::finite_to_one);
  CHECK(blocks.stage == 0);
  CHECK(blocks.note.find("collapsed block") != std::string::npos);

  // the descent map's fibres are too fat for any sound positive on a contour
  CompositionReport none =
      composition_witness(FilterBase::contour_of(T(3)), {StageMap::of(descent_map(3))}, 8, 3);
  CHECK(none.branch == Branch::none_within_budget);
  CHECK(none.budget_used > 0);
}

TEST_CASE("the dichotomy finds member blocks before anything else") {
  // a split of the line into a finite piece and its complement
  SymSet head = omega_points({0, 1, 2});
  SymSet rest = sym_compl(head);
  Partition split = Partition::finite_list(omega_line(), {head, rest});

  PartitionReport fr = selector_or_block(FilterBase::frechet_line(), split, 12, 5);
  CHECK(fr.outcome == Outcome::block);
  CHECK(fr.block_index == 1);
  CHECK(fr.exhaustive);

  PartitionReport pr =
      selector_or_block(FilterBase::principal(head), split, 12, 5);
  CHECK(pr.outcome == Outcome::block);
  CHECK(pr.block_index == 0);

  Schema t2 = T(2);
  PartitionReport sub =
      selector_or_block(FilterBase::principal(subtree_set(t2, Path{3})), Partition::subtrees(t2),
                        12, 5);
  CHECK(sub.outcome == Outcome::block);
  CHECK(sub.block_index == 3);
}

TEST_CASE("the dichotomy exhibits selectors when no block belongs") {
  // a transversal of a two-block split is itself a member of its principal hull
  SymSet head = omega_points({0, 1, 2});
  Partition split = Partition::finite_list(omega_line(), {head, sym_compl(head)});
  SymSet picks = sym_fin(omega_line(), {split.pick(0, 0), split.pick(1, 0)});
  PartitionReport tr = selector_or_block(FilterBase::principal(picks), split, 12, 5);
  CHECK(tr.outcome == Outcome::selector);
  CHECK(tr.member_verified);
  CHECK(tr.exhaustive);

  // on the line every weight level is a single leaf, so the whole line selects
  PartitionReport ln = selector_or_block(FilterBase::contour_of(omega_line()),
                                         Partition::weight_levels(omega_line()), 12, 5);
  CHECK(ln.outcome == Outcome::selector);
  CHECK(ln.member_verified);
  CHECK(ln.exhaustive);

  // over a two-level space the first column crosses each level once; it is not
  // a member of the tail filter but provably meets all of it
  Schema t2 = T(2);
  PartitionReport col =
      selector_or_block(FilterBase::frechet(t2), Partition::weight_levels(t2), 12, 5);
  CHECK(col.outcome == Outcome::selector);
  CHECK(!col.member_verified);
  CHECK(col.exhaustive);
  REQUIRE(col.selector.has_value());
  CHECK(sym_equal(*col.selector, subtree_set(t2, Path{0})));

  // the tail filter also admits a one-leaf-per-subtree selection, sampled
  PartitionReport diag =
      selector_or_block(FilterBase::frechet(t2), Partition::subtrees(t2), 12, 5);
  CHECK(diag.outcome == Outcome::selector);
  CHECK(!diag.member_verified);
  CHECK(diag.selector_picks.size() == 12);
}

TEST_CASE("a contour refuses both branches over its own blocks, exactly") {
  Schema t2 = T(2);
  PartitionReport r =
      selector_or_block(FilterBase::contour_of(t2), Partition::subtrees(t2), 12, 5);
  CHECK(r.outcome == Outcome::none_within_budget);
  CHECK(r.exhaustive);
  CHECK(r.note.find("one-leaf-per-block") != std::string::npos);

  Schema t3 = T(3);
  PartitionReport r3 =
      selector_or_block(FilterBase::contour_of(t3), Partition::subtrees(t3), 12, 5);
  CHECK(r3.outcome == Outcome::none_within_budget);
  CHECK(r3.exhaustive);

  // against weight levels the bounded search refuses without claiming a theorem
  PartitionReport wl =
      selector_or_block(FilterBase::contour_of(t2), Partition::weight_levels(t2), 12, 5);
  CHECK(wl.outcome == Outcome::none_within_budget);
  CHECK(!wl.exhaustive);
}

TEST_CASE("partitions validate their blocks and index their leaves") {
  Schema t2 = T(2);
  SymSet head = omega_points({0, 1});
  CHECK_THROWS_AS(Partition::finite_list(omega_line(), {}), error);
  CHECK_THROWS_AS(Partition::finite_list(omega_line(), {head, sym_full(omega_line())}), error);
  CHECK_THROWS_AS(Partition::finite_list(omega_line(), {head}), error);
  CHECK_THROWS_AS(Partition::subtrees(Schema::leaf()), error);
  CHECK_THROWS_AS(Partition::weight_levels(Schema::leaf()), error);

  Partition sub = Partition::subtrees(t2);
  CHECK(!sub.count().has_value());
  CHECK(sym_equal(sub.block(2), subtree_set(t2, Path{2})));
  Path p = sub.pick(4, 2);
  REQUIRE(p.size() == 2);
  CHECK(p[0] == 4);

  Partition wl = Partition::weight_levels(t2);
  SymSet lvl0 = wl.block(0);
  CHECK(sym_equal(lvl0, sym_fin(t2, {Path{0, 0}})));
  SymSet lvl1 = wl.block(1);
  CHECK(detail::finite_leaves(lvl1).size() == 2);
  CHECK(sym_member(lvl1, wl.pick(1, 0)));
  CHECK(sym_member(lvl1, wl.pick(1, 1)));
}

TEST_CASE("residual members split by size") {
  Schema t2 = T(2);
  // a finite member is small: its complement swallows a threshold base
  auto fin = residual_witness(FilterBase::principal(sym_fin(t2, {Path{0, 0}, Path{1, 2}})), 8, 3);
  REQUIRE(fin.has_value());
  CHECK(is_residual(*fin));

  // a contour member never is, or the filter would trivialise
  CHECK(!residual_witness(FilterBase::contour_of(t2), 16, 3).has_value());

  // finitely based subjects are decided by their smallest member
  std::vector<SymSet> gens = {sym_compl(sym_fin(t2, {Path{0, 0}})), weight_cut(t2, 3)};
  CHECK(!residual_witness(FilterBase::finite_meet(gens), 8, 3).has_value());
}

TEST_CASE("collapse images of catalogued cascades sit one rank below their source") {
  std::size_t tried = 0;
  for (const Schema& s : schema_family(3)) {
    if (s.kind() != Schema::Kind::internal || !s.tail()) continue;
    if (s.rank() < Ordinal::nat(2)) continue;
    FilterBase img = FilterBase::image_of_collapse(s);
    std::uint32_t want = static_cast<std::uint32_t>(s.rank().finite_value()) - 1;
    RankReport r = max_contour_rank({img, want + 1, 2000, 6, 11});
    CHECK(r.rank_found == want);
    if (++tried == 10) break;
  }
  CHECK(tried == 10);
}
