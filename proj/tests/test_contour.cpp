#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>

#include "casco/contour.hpp"
#include "casco/oracle.hpp"

using namespace casco;

static Schema T(std::uint64_t v) { return Schema::complete(Ordinal::nat(v)); }

TEST_CASE("contour membership of canonical sets") {
  for (const Schema& s : {T(1), T(2), T(3), Schema::destroyed_complete(Ordinal::nat(3), 1),
                          Schema::flattened(T(2)), Schema::complete(Ordinal::omega())}) {
    CAPTURE(print_schema(s));
    CHECK(contour_contains(sym_full(s)));
    CHECK_FALSE(contour_contains(sym_empty(s)));
    // level sets are the base of the contour
    CHECK(contour_contains(sym_vof(s, 2)));
    // no proper filter holds a set and its complement
    CHECK_FALSE(contour_contains(sym_compl(sym_vof(s, 2))));
  }

  Schema t2 = T(2);
  // the contour is free: removing finitely many leaves stays inside
  CHECK(contour_contains(sym_diff(sym_vof(t2, 1), sym_fin(t2, {{1, 1}, {2, 5}}))));
  CHECK_FALSE(contour_contains(sym_fin(t2, {{1, 1}, {2, 5}})));
  // a theta slice misses every deeper level set
  CHECK_FALSE(contour_contains(sym_diff(sym_vof(t2, 1), sym_vof(t2, 2))));
  // upward closed
  CHECK(contour_contains(sym_union(sym_vof(t2, 3), sym_compl(sym_vof(t2, 2)))));
  // overrides change only finitely many nodes
  CHECK(contour_contains(sym_vof(t2, 1, {{Path{}, 4}, {Path{2}, 9}})));
  CHECK_FALSE(contour_contains(sym_compl(sym_vof(t2, 1, {{Path{2}, 9}}))));
}

TEST_CASE("residual sets are the negligible ones") {
  for (const Schema& s : {T(1), T(2), T(3), Schema::destroyed_complete(Ordinal::nat(3), 1),
                          Schema::flattened(T(2)), Schema::complete(Ordinal::omega())}) {
    CAPTURE(print_schema(s));
    CHECK(is_residual(sym_empty(s)));
    CHECK_FALSE(is_residual(sym_full(s)));
    CHECK_FALSE(is_residual(sym_vof(s, 2)));
    CHECK(is_residual(sym_compl(sym_vof(s, 2))));
  }

  Schema t2 = T(2);
  // finite sets are residual for every partition
  CHECK(is_residual(sym_fin(t2, {{1, 1}, {2, 5}})));
  // a theta slice is residual: its complement contains a deeper level set
  CHECK(is_residual(sym_diff(sym_vof(t2, 1), sym_vof(t2, 2))));
  // a level set minus finitely many points is still non-residual
  CHECK_FALSE(is_residual(sym_diff(sym_vof(t2, 1), sym_fin(t2, {{1, 1}}))));
  // residual sets form an ideal: finite unions stay residual
  CHECK(is_residual(sym_union(sym_diff(sym_vof(t2, 1), sym_vof(t2, 2)),
                              sym_fin(t2, {{0, 0}, {0, 7}}))));
  CHECK(is_residual(sym_compl(sym_vof(t2, 1, {{Path{2}, 9}}))));
}

TEST_CASE("contour and residual verdicts across destroyed shapes") {
  Schema d41 = Schema::destroyed_complete(Ordinal::nat(4), 1);
  Schema d42 = Schema::destroyed_complete(Ordinal::nat(4), 2);
  for (const Schema& s : {d41, d42}) {
    CAPTURE(print_schema(s));
    CHECK(contour_contains(sym_vof(s, 3)));
    CHECK(is_residual(sym_compl(sym_vof(s, 3))));
    CHECK(contour_contains(sym_diff(sym_vof(s, 1), sym_fin(s, {{2, 0, 0, 0}}))));
  }
  // growing-rank tail: children of the root climb through the finite ranks
  Schema w = Schema::complete(Ordinal::omega());
  CHECK(contour_contains(sym_diff(sym_vof(w, 2), sym_fin(w, {{3, 0, 0, 0}}))));
  CHECK(is_residual(sym_inter(sym_vof(w, 1), sym_compl(sym_vof(w, 2)))));
}

TEST_CASE("weight cuts") {
  for (const Schema& s :
       {T(2), T(3), Schema::destroyed_complete(Ordinal::nat(3), 1), Schema::flattened(T(2)),
        Schema::complete(Ordinal::omega())}) {
    CAPTURE(print_schema(s));
    for (std::uint64_t d : {0, 1, 2, 4, 7}) {
      SymSet wc = weight_cut(s, d);
      FiniteTruncation tr = truncate(s, 5);
      for (const Path& leaf : tr.leaves) {
        CAPTURE(path_to_string(leaf), d);
        REQUIRE(sym_member(wc, leaf) == (path_weight(leaf) >= d));
      }
      // cuts are nested, all belong to the contour, and their complements
      // are residual
      CHECK(sym_contains(wc, weight_cut(s, d + 1)));
      CHECK(contour_contains(wc));
      CHECK(is_residual(sym_compl(wc)));
    }
    CHECK(sym_equal(weight_cut(s, 0), sym_full(s)));
    // only finitely many leaves sit under any weight bound
    CHECK(sym_is_finite(sym_compl(weight_cut(s, 6))));
  }
}

TEST_CASE("level sets transported to an earlier destruction stage") {
  struct Pair {
    Schema v, w;
  };
  std::vector<Pair> pairs = {
      {Schema::flattened(T(2)), T(2)},
      {Schema::destroyed_complete(Ordinal::nat(3), 1), T(3)},
      {Schema::destroyed_complete(Ordinal::nat(4), 1), T(4)},
      {Schema::destroyed_complete(Ordinal::nat(4), 2),
       Schema::destroyed_complete(Ordinal::nat(4), 1)},
  };
  for (const auto& [v, w] : pairs) {
    CAPTURE(print_schema(v), print_schema(w));
    for (std::uint64_t g : {0, 1, 2, 3}) {
      SymSet tv = transported_vof(v, w, g);
      SetExprPtr e = se_vof(g);
      // same leaves, judged over the two presentations
      FiniteTruncation tr = truncate(w, 5);
      for (const Path& leaf : tr.leaves) {
        CAPTURE(path_to_string(leaf), g);
        REQUIRE(sym_member(tv, leaf) == oracle_point(v, e, leaf));
      }
      // the transported level set certifies contour refinement
      CHECK(contour_contains(tv));
    }
  }

  // overrides ride along with the walk
  Schema v = Schema::destroyed_complete(Ordinal::nat(3), 1);
  SymSet tv = transported_vof(v, T(3), 1, {{Path{}, 2}, {Path{2}, 3}});
  SetExprPtr e = se_vof(1, {{Path{}, 2}, {Path{2}, 3}});
  for (const Path& leaf : truncate(T(3), 5).leaves)
    REQUIRE(sym_member(tv, leaf) == oracle_point(v, e, leaf));

  // override paths must be ambient nodes of the source stage
  CHECK_THROWS_AS(transported_vof(v, T(3), 1, {{Path{0, 0}, 2}}), error);
  // tails whose rank grows along the node are out of scope
  Schema om = Schema::complete(Ordinal::omega());
  CHECK_THROWS_AS(transported_vof(om, om, 1), error);
}

TEST_CASE("cofinite verdicts through truncations agree with the engine") {
  std::vector<Schema> pool = {T(1), T(2), T(3), Schema::destroyed_complete(Ordinal::nat(3), 1),
                              Schema::flattened(T(2))};
  std::mt19937 rng(20260823);
  auto upto = [&](std::uint64_t n) { return rng() % (n + 1); };

  std::size_t conclusive = 0, inconclusive = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Schema& s = pool[upto(pool.size() - 1)];
    FiniteTruncation tr = truncate(s, 4);
    std::vector<Path> nodes;
    {
      Path tmp;
      nodes.push_back(tmp);
      if (s.kind() == Schema::Kind::internal)
        for (std::uint32_t k = 0; k < 4; ++k) nodes.push_back({k});
    }
    // small nested boolean expression over level sets and finite sets
    std::function<SetExprPtr(int)> mk = [&](int depth) -> SetExprPtr {
      std::uint64_t pick = upto(depth > 0 ? 6 : 3);
      switch (pick) {
        case 0:
          return se_full();
        case 1:
          return se_empty();
        case 2: {
          std::map<Path, std::uint64_t> ov;
          if (upto(1)) {
            Path p = nodes[upto(nodes.size() - 1)];
            if (is_leaf_path(s, p) || (p.size() == 1 && s.kind() != Schema::Kind::internal))
              p = {};
            ov[p] = upto(3);
          }
          return se_vof(upto(3), std::move(ov));
        }
        case 3: {
          std::vector<Path> ps;
          for (std::uint64_t i = 0, n = upto(2); i < n && !tr.leaves.empty(); ++i)
            ps.push_back(tr.leaves[upto(tr.leaves.size() - 1)]);
          return se_fin(std::move(ps));
        }
        case 4:
          return se_union(mk(depth - 1), mk(depth - 1));
        case 5:
          return se_inter(mk(depth - 1), mk(depth - 1));
        default:
          return se_compl(mk(depth - 1));
      }
    };
    SetExprPtr e = mk(2);
    SymSet c = compile(s, e);
    bool in_contour = contour_contains(c);
    bool resid = is_residual(c);  // cross-checks the two residual deciders
    // a proper filter never holds both a set and its complement
    CHECK_FALSE((in_contour && resid));
    std::optional<bool> orc = oracle_contour(s, e, 10);
    if (orc) {
      CAPTURE(print_set_expr(e), print_schema(s), in_contour);
      REQUIRE(*orc == in_contour);
      ++conclusive;
    } else {
      ++inconclusive;
    }
  }
  CHECK(conclusive + inconclusive == 400);
  // the truncation heuristic must stay usable: most verdicts conclusive
  CHECK(inconclusive * 20 <= conclusive + inconclusive);
}
