#include "doctest.h"

#include "dytb/lattice.hpp"
#include "dytb/rng.hpp"

using namespace dytb;

namespace {
DyadicCube cube1(int level, unsigned i) { return DyadicCube::make(1, level, {i}); }
}  // namespace

TEST_CASE("children of the unit interval are its halves") {
  auto ch = children(DyadicCube::root(1));
  REQUIRE(ch.size() == 2);
  CHECK(ch[0] == cube1(1, 0));
  CHECK(ch[1] == cube1(1, 1));
}

TEST_CASE("unit square has four quadrants") {
  auto ch = children(DyadicCube::root(2));
  CHECK(ch.size() == 4);
  CubeSet s(ch);
  CHECK(s.size() == 4);
  CHECK(s.total_volume() == 1);
}

TEST_CASE("children of [1/2,1)") {
  auto ch = children(cube1(1, 1));
  CHECK(ch[0] == cube1(2, 2));
  CHECK(ch[1] == cube1(2, 3));
}

TEST_CASE("parent") {
  CHECK(parent(cube1(2, 1)) == cube1(1, 0));
  auto c = DyadicCube::make(2, 2, {1, 3});
  for (const auto& ch : children(c)) CHECK(parent(ch) == c);
  CHECK_THROWS_WITH_AS(parent(DyadicCube::root(1)), "no parent", std::domain_error);
}

TEST_CASE("relate") {
  CHECK(relate(cube1(1, 0), cube1(2, 1)) == Relation::contains);
  CHECK(relate(cube1(2, 1), cube1(1, 0)) == Relation::contained);
  CHECK(relate(cube1(1, 0), cube1(1, 1)) == Relation::disjoint);
  CHECK(relate(cube1(3, 5), cube1(3, 5)) == Relation::equal);
  CHECK_THROWS_AS(relate(DyadicCube::root(1), DyadicCube::root(2)), std::invalid_argument);
}

TEST_CASE("maximal cubes") {
  CHECK(maximal_cubes(CubeSet({DyadicCube::root(1), cube1(1, 0)})) == CubeSet({DyadicCube::root(1)}));
  CHECK(maximal_cubes(CubeSet({cube1(1, 0), cube1(1, 1)})).size() == 2);
  CHECK(maximal_cubes(CubeSet()).empty());
}

TEST_CASE("partition law and trichotomy on random cubes") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    int d = static_cast<int>(rng.uniform_int(1, 3));
    auto draw = [&] {
      int level = static_cast<int>(rng.uniform_int(0, 4));
      std::vector<std::uint32_t> idx;
      for (int t = 0; t < d; ++t) idx.push_back(static_cast<std::uint32_t>(rng.uniform_int(0, (1 << level) - 1)));
      return DyadicCube::make(d, level, idx);
    };
    DyadicCube a = draw(), b = draw();
    Rational sum = 0;
    for (const auto& ch : children(a)) {
      sum += ch.volume();
      CHECK(relate(a, ch) == Relation::contains);
    }
    CHECK(sum == a.volume());
    // independent interval-overlap oracle
    bool overlap = true;
    for (int t = 0; t < d; ++t) {
      Rational a0 = Rational(a.coord(t)) * two_pow(-a.level), a1 = Rational(a.coord(t) + 1) * two_pow(-a.level);
      Rational b0 = Rational(b.coord(t)) * two_pow(-b.level), b1 = Rational(b.coord(t) + 1) * two_pow(-b.level);
      if (a1 <= b0 || b1 <= a0) overlap = false;
    }
    Relation r = relate(a, b);
    if (!overlap) {
      CHECK(r == Relation::disjoint);
    } else {
      CHECK(r != Relation::disjoint);
      if (a.level == b.level) CHECK(r == Relation::equal);
      if (a.level < b.level) CHECK(r == Relation::contains);
      if (a.level > b.level) CHECK(r == Relation::contained);
    }
  }
}

TEST_CASE("maximal cubes form an antichain") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<DyadicCube> v;
    for (int i = 0; i < 8; ++i) {
      int level = static_cast<int>(rng.uniform_int(0, 3));
      v.push_back(cube1(level, static_cast<unsigned>(rng.uniform_int(0, (1 << level) - 1))));
    }
    CubeSet m = maximal_cubes(CubeSet(v));
    for (const auto& a : m)
      for (const auto& b : m)
        if (!(a == b)) CHECK(relate(a, b) == Relation::disjoint);
    for (const auto& c : v) CHECK(m.covers(c));
  }
}

TEST_CASE("tree ids round trip") {
  DyadicTree tree(2, 3);
  CHECK(tree.size() == 1 + 4 + 16 + 64);
  for (std::size_t id = 0; id < tree.size(); ++id) CHECK(tree.id(tree.cube(id)) == id);
  CHECK(tree.leaves_in(DyadicCube::root(2)).size() == 64);
  CHECK(tree.subtree(DyadicCube::make(2, 1, {1, 0})).size() == 1 + 4 + 16);
}

TEST_CASE("cube tokens") {
  auto c = DyadicCube::make(2, 3, {5, 2});
  CHECK(cube_token(c) == "3/5.2");
  CHECK(parse_cube_token(2, "3/5.2") == c);
}
