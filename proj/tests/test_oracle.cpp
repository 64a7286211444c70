#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "casco/oracle.hpp"

using namespace casco;

TEST_CASE("the pointwise oracle evaluates expressions literally") {
  Schema t2 = Schema::complete(Ordinal::nat(2));

  SetExprPtr v2 = se_vof(2);
  CHECK(oracle_point(t2, v2, Path{3, 5}));
  CHECK(oracle_point(t2, v2, Path{2, 2}));
  CHECK(!oracle_point(t2, v2, Path{1, 5}));
  CHECK(!oracle_point(t2, v2, Path{3, 0}));

  SetExprPtr f = se_fin({Path{0, 0}, Path{4, 1}});
  CHECK(oracle_point(t2, f, Path{4, 1}));
  CHECK(!oracle_point(t2, f, Path{4, 2}));

  SetExprPtr mix = se_union(se_compl(v2), f);
  CHECK(oracle_point(t2, mix, Path{0, 7}));   // fails the threshold
  CHECK(oracle_point(t2, mix, Path{4, 1}));   // listed
  CHECK(!oracle_point(t2, mix, Path{5, 5}));  // inside the threshold set only

  // overrides are read at the node the walk is visiting
  SetExprPtr ov = se_vof(1, {{Path{}, 3}});
  CHECK(oracle_point(t2, ov, Path{3, 1}));
  CHECK(!oracle_point(t2, ov, Path{2, 9}));
}

TEST_CASE("the truncated contour vote decides clear cases and flags coarse ones") {
  Schema t2 = Schema::complete(Ordinal::nat(2));

  CHECK(oracle_contour(t2, se_vof(1), 8) == std::optional<bool>(true));
  CHECK(oracle_contour(t2, se_full(), 6) == std::optional<bool>(true));
  CHECK(oracle_contour(t2, se_fin({Path{1, 1}}), 8) == std::optional<bool>(false));
  CHECK(oracle_contour(t2, se_empty(), 6) == std::optional<bool>(false));

  // a threshold at the truncation's own scale flips between widths: the
  // two-width protocol reports that instead of guessing
  CHECK(!oracle_contour(t2, se_vof(3), 5).has_value());
  CHECK(oracle_contour(t2, se_vof(3), 12) == std::optional<bool>(true));
}

TEST_CASE("the map search finds identity and constant witnesses") {
  TinyFilter pair{4, {0b0011}};
  auto idw = oracle_rk_search(pair, pair);
  REQUIRE(idw.has_value());
  CHECK(*idw == std::vector<std::uint32_t>{0, 1, 0, 0});

  TinyFilter at2{4, {0b0100}};
  TinyFilter at1{4, {0b0010}};
  auto cw = oracle_rk_search(at2, at1);
  REQUIRE(cw.has_value());
  CHECK(*cw == std::vector<std::uint32_t>{0, 0, 1, 0});

  // identical inputs, identical witness
  auto again = oracle_rk_search(at2, at1);
  REQUIRE(again.has_value());
  CHECK(*again == *cw);
}

TEST_CASE("the map search reports one-sided failures honestly") {
  TinyFilter small{4, {0b1000}};      // core {3}
  TinyFilter wide{4, {0b0101}};       // core {0, 2}
  CHECK(!oracle_rk_search(small, wide).has_value());

  auto back = oracle_rk_search(wide, small);
  REQUIRE(back.has_value());
  CHECK((*back)[0] == 3);
  CHECK((*back)[2] == 3);

  // improper cores only map onto improper cores
  TinyFilter improper{4, {0b0001, 0b0010}};
  CHECK(!oracle_rk_search(improper, small).has_value());
  CHECK(!oracle_rk_search(small, improper).has_value());
  CHECK(oracle_rk_search(improper, improper).has_value());
}

TEST_CASE("the map search intersects its generators before searching") {
  TinyFilter u{5, {0b00111, 0b01110}};  // core {1, 2}
  TinyFilter v{5, {0b11000, 0b01000}};  // core {3}
  auto w = oracle_rk_search(u, v);
  REQUIRE(w.has_value());
  CHECK(*w == std::vector<std::uint32_t>{0, 3, 3, 0, 0});
}

TEST_CASE("the map search guards its ambient size") {
  CHECK_THROWS_AS(oracle_rk_search(TinyFilter{13, {}}, TinyFilter{4, {}}), error);
  CHECK_THROWS_AS(oracle_rk_search(TinyFilter{4, {}}, TinyFilter{0, {}}), error);
  CHECK_THROWS_AS(oracle_rk_search(TinyFilter{4, {0b10000}}, TinyFilter{4, {}}), error);
  // a full twelve-point core makes the map space too big to walk
  CHECK_THROWS_AS(oracle_rk_search(TinyFilter{12, {}}, TinyFilter{12, {}}), error);
}
