#include "doctest.h"

#include "dytb/paths.hpp"

using namespace dytb;

namespace {
Path P(int n, std::vector<int> v) { return Path::make(n, std::move(v)); }
DyadicCube c1(int level, unsigned i) { return DyadicCube::make(1, level, {i}); }
}  // namespace

TEST_CASE("admissibility conditions") {
  PathCollection missing(2, {P(2, {1}), P(2, {1, 2}), P(2, {2, 1})});
  auto r = validate_admissible(missing);
  CHECK_FALSE(r.pass);
  CHECK(r.failed_condition == 1);
  CHECK(*r.witness == P(2, {2}));

  PathCollection no_ext(2, {P(2, {1}), P(2, {2}), P(2, {1, 2})});
  r = validate_admissible(no_ext);
  CHECK_FALSE(r.pass);
  CHECK(r.failed_condition == 2);

  PathCollection no_swap(3, {P(3, {1}), P(3, {2}), P(3, {3}), P(3, {1, 2}), P(3, {2, 1}), P(3, {3, 1}), P(3, {1, 3}),
                             P(3, {1, 2, 3}), P(3, {2, 1, 3}), P(3, {3, 1, 2}), P(3, {1, 3, 2})});
  r = validate_admissible(no_swap);
  CHECK_FALSE(r.pass);
  CHECK(r.failed_condition == 3);

  for (int n = 2; n <= 5; ++n) CHECK(validate_admissible(all_paths(n)).pass);
}

TEST_CASE("example collection") {
  auto two = build_example_collection(2);
  CHECK(two.size() == 4);
  for (auto p : {P(2, {1}), P(2, {2}), P(2, {1, 2}), P(2, {2, 1})}) CHECK(two.contains(p));
  auto three = build_example_collection(3);
  CHECK(three.contains(P(3, {2, 1, 3})));
  CHECK_FALSE(three.contains(P(3, {3, 2})));
  for (int n = 2; n <= 5; ++n) {
    auto c = build_example_collection(n);
    CHECK(validate_admissible(c).pass);
    // closed under the last-two swap
    for (const auto& p : c.paths()) {
      if (p.length() < 2) continue;
      Path t = p;
      std::swap(t.values[t.values.size() - 2], t.values.back());
      CHECK(c.contains(t));
    }
  }
}

TEST_CASE("nested tuples") {
  auto root = DyadicCube::root(1);
  CHECK(validate_nested({P(3, {1}), {root, root, root}}));
  CHECK(validate_nested({P(3, {1, 2}), {root, c1(1, 0), c1(1, 0)}}));
  CHECK_FALSE(validate_nested({P(3, {1, 2}), {root, c1(1, 0), root}}));
  std::string why;
  CHECK_FALSE(validate_nested({P(2, {1, 2}), {root, c1(1, 0)}}, &why));
  CHECK(why.find("last two") != std::string::npos);
  for (const auto& t : nested_tuples(P(3, {2, 1}), 1, 2)) CHECK(validate_nested(t));
  // k = n forces equal last cubes: one tuple per cube
  CHECK(nested_tuples(P(2, {2, 1}), 1, 2).size() == 7);
  // chains Q1 ⊇ Q2 in a depth-2 binary tree: 1*7 + 2*3 + 4*1
  CHECK(nested_tuples(P(3, {1, 2}), 1, 2).size() == 17);
}

TEST_CASE("family hypotheses at insertion") {
  auto tuple = HolderTuple::make({2, 2});
  BFamily fam(tuple, 1, 1, 2);
  auto root = DyadicCube::root(1);
  BKey key{{1}, {root}};
  CHECK_NOTHROW(fam.insert(key, TestFunction::constant(1, 2, 1)));
  // 2 * 1_{left half}: mean fine, norm 2^(p-1) |Q| needs B >= 2
  TestFunction two_left = TestFunction::indicator(1, 2, c1(1, 0)) * Rational(2);
  CHECK(check_b(two_left, root, 2, 1) != "");
  CHECK(check_b(two_left, root, 2, 2) == "");
  TestFunction h(1, 1, {Rational(1), Rational(-1)});
  CHECK(check_b(h, root, 2, 4).find("mean") != std::string::npos);
  CHECK(check_b(TestFunction::indicator(1, 2, root), c1(1, 0), 2, 4).find("support") != std::string::npos);
}

TEST_CASE("family population and validation") {
  auto paths = build_example_collection(2);
  auto tuple = HolderTuple::make({2, 2});
  auto fam = populate_family(paths, 2, tuple, 2, 1, 3, 99);
  CHECK(validate_bfamily(fam, paths, 2).pass);
  // B = 1 with q = 2 forces indicators
  auto tight = populate_family(paths, 2, tuple, 1, 1, 3, 99);
  for (const auto& [k, b] : tight.entries()) {
    BKey key = parse_key(1, k);
    CHECK(b == TestFunction::indicator(1, 3, key.cube()));
  }
  // re-reading a key is bit-exact
  auto sigma = P(2, {2, 1});
  auto q = std::vector<DyadicCube>{c1(1, 1), c1(1, 1)};
  CHECK(fam.get(sigma, q, 1) == fam.get(sigma, q, 1));
}

TEST_CASE("reduced family") {
  auto paths = build_example_collection(3);
  auto tuple = HolderTuple::make({3, 3, 3});
  auto fam = populate_family(paths, 3, tuple, 2, 1, 2, 7);
  CHECK(validate_bfamily(fam, paths, 3).pass);
  auto red = derive_reduced_family(fam, paths, 3);
  CHECK(validate_bfamily(red, paths, 2).pass);
  auto red2 = derive_reduced_family(red, paths, 2);
  CHECK(red2.entries().empty());
  // every reduced entry is a prefix truncation of the original
  for (const auto& [k, b] : red.entries()) CHECK(fam.entries().at(k) == b);
}

TEST_CASE("permissive family exposes interdependence violations") {
  auto paths = build_example_collection(3);
  auto tuple = HolderTuple::make({3, 3, 3});
  BFamily fam(tuple, 4, 1, 1, BFamily::Mode::permissive);
  auto root = DyadicCube::root(1);
  for (const auto& s : paths.of_length(3))
    for (const auto& t : nested_tuples(s, 1, 1))
      for (int j = 1; j < 3; ++j) fam.insert_full(t, j, TestFunction::indicator(1, 1, t.slot(s(j))));
  CHECK(validate_bfamily(fam, paths, 3).pass);
  CHECK_NOTHROW(derive_reduced_family(fam, paths, 3));
  // two extensions of (1,2): (1,2,3) only; (2,1) extends to (2,1,3); use (1,3,2) vs (1,2,3) sharing prefix (1)
  NestedTuple t{P(3, {1, 3, 2}), {root, root, root}};
  TestFunction skew(1, 1, {Rational(3, 2), Rational(1, 2)});
  fam.insert_full(t, 1, skew);
  auto rep = validate_bfamily(fam, paths, 3);
  CHECK_FALSE(rep.pass);
  CHECK(rep.detail.find("interdependence") != std::string::npos);
}
