#include "doctest.h"

#include "dytb/outer.hpp"
#include "dytb/rng.hpp"

using namespace dytb;

namespace {

DyadicCube c1(int level, std::uint32_t i) { return DyadicCube::make(1, level, {i}); }

OuterFunction root_only(int depth) {
  OuterFunction F(1, depth);
  F.set(DyadicCube::root(1), 1);
  return F;
}

OuterFunction random_outer(Rng& rng, int dim, int depth) {
  OuterFunction F(dim, depth);
  for (std::size_t id = 0; id < F.size(); ++id)
    if (rng.uniform_int(0, 2) > 0) F.set_square(id, fraction(rng.uniform_int(0, 9), rng.uniform_int(1, 3)));
  return F;
}

TestFunction haar(int N) {
  std::vector<Rational> v(std::size_t{1} << N);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i < v.size() / 2 ? 1 : -1;
  return TestFunction(1, N, v);
}

TestFunction random_function(Rng& rng, int dim, int N) {
  std::vector<Rational> v(std::size_t{1} << (dim * N));
  for (auto& x : v) x = fraction(rng.uniform_int(-6, 6), rng.uniform_int(1, 3));
  return TestFunction(dim, N, v);
}

}  // namespace

TEST_CASE("outer measure examples") {
  CHECK(outer_measure(CubeSet({DyadicCube::root(1)}), 1, 2) == 1);
  CHECK(outer_measure(CubeSet({c1(2, 3)}), 1, 2) == Rational(1, 4));
  CHECK(outer_measure(CubeSet({c1(1, 0), c1(1, 1)}), 1, 2) == 1);
  CHECK(outer_measure(CubeSet(), 1, 2) == 0);
  // Three of four grandchildren: 3/4 beats the root.
  CHECK(outer_measure(CubeSet({c1(2, 0), c1(2, 1), c1(2, 2)}), 1, 2) == Rational(3, 4));
}

TEST_CASE("outer measure recursion against exhaustive coverings") {
  for (auto [d, N] : {std::pair{1, 3}, std::pair{2, 1}, std::pair{1, 2}}) {
    DyadicTree tree(d, N);
    std::size_t n = tree.size();
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << n); ++bits) {
      CubeSet E;
      for (std::size_t k = 0; k < n; ++k)
        if ((bits >> k) & 1) E.insert(tree.cube(k));
      REQUIRE(outer_measure(E, d, N) == outer_measure_exhaustive(E, d, N));
    }
    for (std::size_t k = 0; k < n; ++k) {
      auto T = tree.cube(k);
      CubeSet sub;
      for (auto s : tree.subtree(T)) sub.insert(tree.cube(s));
      CHECK(outer_measure(sub, d, N) == T.volume());
    }
  }
  CHECK(antichain_count(1, 3) == 677);
  CHECK(antichain_count(2, 1) == 17);
}

TEST_CASE("outer measure is monotone and subadditive") {
  Rng rng(7);
  DyadicTree tree(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    CubeSet a, b, ab;
    for (std::size_t k = 0; k < tree.size(); ++k) {
      int r = rng.uniform_int(0, 9);
      if (r == 0) a.insert(tree.cube(k));
      if (r == 1) b.insert(tree.cube(k));
      if (r <= 2) ab.insert(tree.cube(k));
    }
    Rational ma = outer_measure(a, 1, 4), mb = outer_measure(b, 1, 4), mab = outer_measure(set_union(a, b), 1, 4);
    CHECK(ma <= mab);
    CHECK(mab <= outer_measure(ab, 1, 4));
    CHECK(mab <= ma + mb);
  }
}

TEST_CASE("sizes") {
  OuterFunction zero(1, 2);
  for (const auto& kind : {SizeKind::infinity(), SizeKind::lp(1), SizeKind::lp(2), SizeKind::lp(Rational(3, 2))})
    CHECK(size(zero, DyadicCube::root(1), kind).is_zero());
  auto F = root_only(2);
  CHECK(size(F, DyadicCube::root(1), SizeKind::infinity()).value == 1);
  CHECK(*size(F, DyadicCube::root(1), SizeKind::lp(2)).power == 1);
  CHECK(size(F, c1(1, 0), SizeKind::lp(2)).is_zero());

  // Value 2 on one level-1 cube: S_2 at the root is (4 * 1/2)^(1/2).
  OuterFunction G(1, 2);
  G.set(c1(1, 1), 2);
  CHECK(*size(G, DyadicCube::root(1), SizeKind::lp(2)).power == 2);
  CHECK(*size(G, c1(1, 1), SizeKind::lp(2)).power == 4);
  CHECK(*size(G, DyadicCube::root(1), SizeKind::lp(1)).power == 1);
}

TEST_CASE("superlevel measure") {
  auto F = root_only(2);
  for (auto m : {SuperlevelMethod::greedy, SuperlevelMethod::exact}) {
    CHECK(superlevel(F, Rational(1, 2), SizeKind::infinity(), m) == 1);
    CHECK(superlevel(F, 1, SizeKind::infinity(), m) == 0);
    CHECK(superlevel(OuterFunction(1, 2), 0, SizeKind::lp(2), m) == 0);
  }

  // F = 1 on the three top cubes of a 3-node tree, S_2: removing one child suffices
  // between sqrt(3/2) and sqrt(2).
  OuterFunction G = OuterFunction::from_values(1, 1, {1, 1, 1});
  auto prof = level_profile(G, SizeKind::lp(2), SuperlevelMethod::exact);
  CHECK(prof.levels == std::vector<Rational>{0, Rational(3, 2), 2});
  CHECK(prof.measure == std::vector<Rational>{1, Rational(1, 2), 0});
  auto greedy = level_profile(G, SizeKind::lp(2), SuperlevelMethod::greedy);
  CHECK(greedy.at(Rational(3, 2)) == 1);

  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    auto H = random_outer(rng, 1, 3);
    auto ge = level_profile(H, SizeKind::lp(2), SuperlevelMethod::greedy);
    auto ex = level_profile(H, SizeKind::lp(2), SuperlevelMethod::exact);
    auto gs = level_profile(H, SizeKind::infinity(), SuperlevelMethod::greedy);
    auto es = level_profile(H, SizeKind::infinity(), SuperlevelMethod::exact);
    CHECK(gs.levels == es.levels);
    CHECK(gs.measure == es.measure);
    for (const auto& l : ex.levels) CHECK(ge.at(l) >= ex.at(l));
    for (const auto& l : ge.levels) CHECK(ge.at(l) >= ex.at(l));
    for (std::size_t i = 1; i < ex.measure.size(); ++i) CHECK(ex.measure[i] < ex.measure[i - 1]);
  }
}

TEST_CASE("level profile matches a dense grid of levels") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto H = random_outer(rng, 1, 3);
    auto prof = level_profile(H, SizeKind::lp(2), SuperlevelMethod::greedy);
    Rational top = prof.levels.back();
    for (int i = 0; i <= 200; ++i) {
      Rational t = top * fraction(i, 180);
      auto lam = exact_root(t, 2);
      if (!lam) continue;
      CHECK(prof.at(t) == superlevel(H, *lam, SizeKind::lp(2), SuperlevelMethod::greedy));
    }
    // Riemann sum of 2 lambda mu against the exact step integral.
    Real riemann = 0;
    Real hi = sqrt(to_real(top)) * 1.01;
    int steps = 20000;
    Real h = hi / steps;
    for (int i = 0; i < steps; ++i) {
      Real lam = h * (i + Real(0.5));
      Rational lr = round_to_dyadic(lam, 100);
      riemann += 2 * lam * to_real(prof.at(lr * lr)) * h;
    }
    Real exact = outer_lp_norm(prof, 2, false).value;
    CHECK(abs(sqrt(riemann) - exact) < 1e-2 * (1 + exact));
  }
}

TEST_CASE("outer Lp norms") {
  auto F = root_only(2);
  for (Rational p : {Rational(1), Rational(2), Rational(3), Rational(5, 2)}) {
    CHECK(outer_lp_norm(F, p, SizeKind::infinity(), false).value == 1);
    CHECK(outer_lp_norm(F, p, SizeKind::infinity(), true).value == 1);
  }
  CHECK(outer_lp_norm(OuterFunction(1, 2), 2, SizeKind::lp(2), false).is_zero());

  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto H = random_outer(rng, 1, 3);
    Rational c = fraction(rng.uniform_int(1, 7), rng.uniform_int(1, 5));
    for (auto kind : {SizeKind::infinity(), SizeKind::lp(2)}) {
      auto a = outer_lp_norm(H, 2, kind, false);
      auto b = outer_lp_norm(H.scaled(c), 2, kind, false);
      REQUIRE(a.power);
      REQUIRE(b.power);
      CHECK(*b.power == c * c * *a.power);
      auto w = outer_lp_norm(H, 2, kind, true);
      CHECK(*w.power <= *a.power);
      auto w3 = outer_lp_norm(H, 3, kind, true, SuperlevelMethod::exact);
      auto s3 = outer_lp_norm(H, 3, kind, false, SuperlevelMethod::exact);
      CHECK(w3.value <= s3.value * (1 + comparison_slack()));
    }
  }
}

TEST_CASE("embeddings") {
  auto one = TestFunction::constant(1, 2, 1);
  auto E = embed_E(one), D = embed_Delta(one);
  for (std::size_t id = 0; id < E.size(); ++id) {
    CHECK(E.square(id) == 1);
    CHECK(D.square(id) == 0);
  }
  auto h = haar(1);
  auto Eh = embed_E(h), Dh = embed_Delta(h);
  CHECK(Eh.square(0) == 0);
  CHECK(Dh.square(0) == 1);
  CHECK(Eh.square(1) == 1);
  CHECK(Eh.square(2) == 1);
  CHECK(Dh.square(1) == 0);
  // |.| breaks linearity: E(h) + E(-h) != E(0).
  auto sum = embed_E(h + h * Rational(-1));
  CHECK(sum.square(1) == 0);
  CHECK(Eh.square(1) + embed_E(h * Rational(-1)).square(1) != sum.square(1));
}

TEST_CASE("Carleson endpoints") {
  auto one = TestFunction::constant(1, 3, 1);
  auto r = carleson_check(one, std::nullopt, Embedding::average);
  CHECK(r.pass);
  CHECK(r.ratio == 1);
  auto rh = carleson_check(haar(3), std::nullopt, Embedding::difference);
  CHECK(rh.pass);
  CHECK(rh.ratio == 1);

  // Spike of mass 1 on a leaf: the weak bound is approached below the leaf average.
  std::vector<Rational> v(4, 0);
  v[2] = 4;
  TestFunction spike(1, 2, v);
  auto w = carleson_check(spike, Rational(1), Embedding::average);
  CHECK(w.pass);
  CHECK(w.ratio <= 1);
  CHECK(w.ratio == 1);
  auto wd = carleson_check(spike, Rational(1), Embedding::difference);
  CHECK(wd.pass);
  CHECK(wd.witness_feasible);

  Rng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    int d = 1 + trial % 2;
    int N = d == 1 ? 4 : 2;
    auto f = random_function(rng, d, N);
    for (auto which : {Embedding::average, Embedding::difference}) {
      CHECK(carleson_check(f, std::nullopt, which).pass);
      auto weak = carleson_check(f, Rational(1), which);
      CHECK(weak.pass);
      CHECK(weak.witness_feasible);
    }
    auto mid = carleson_check(f, Rational(2), Embedding::average);
    CHECK(mid.ratio > 0);
  }
}

TEST_CASE("first standard lemma") {
  auto h = haar(1);
  TestFunction zero(1, 1);
  auto r = lemma1_check(h, h, zero, 2);
  CHECK(r.hypothesis);
  CHECK(r.sum == 1);
  CHECK(r.rhs == 1);
  CHECK(r.constant == 1);
  CHECK(r.pass);

  DyadicTree tree(1, 1);
  auto z = lemma1_check(h, h, zero, 2, std::vector<Real>(tree.size(), 0));
  CHECK(z.constant == 0);
  CHECK(z.pass);

  auto bad = lemma1_check(h, h, zero, 2, std::vector<Real>(tree.size(), 5));
  CHECK_FALSE(bad.hypothesis);
  CHECK_FALSE(bad.pass);

  auto big = lemma1_check(h, h, TestFunction::constant(1, 1, 2), 2);
  CHECK_FALSE(big.hypothesis);

  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    auto f1 = random_function(rng, 1, 3), f2 = random_function(rng, 1, 3);
    auto f3 = random_function(rng, 1, 3) * Rational(1, 6);
    auto a = lemma1_check(f1, f2, f3, Rational(3, 2));
    auto b = lemma1_check(f1, f2, f3, Rational(3, 2));
    CHECK(a.hypothesis);
    CHECK(a.finite);
    CHECK(a.constant == b.constant);
    CHECK(a.steps.size() == 4);
  }
}

TEST_CASE("second standard lemma") {
  TestFunction zero(1, 2);
  auto one = TestFunction::constant(1, 2, 1);
  Rng rng(2);
  auto f1 = random_function(rng, 1, 2), f2 = random_function(rng, 1, 2);
  // f4 = f5 = 0 and f3 = 1 leave the differences term only.
  auto r = lemma2_check(f1, f2, one, zero, zero, 3, 3);
  auto l = lemma1_check(f1, f2, zero, 2);
  CHECK(abs(r.sum - l.steps[0].lhs) < 1e-30);
  CHECK(r.pass);
  DyadicTree tree(1, 2);
  CHECK(lemma2_check(f1, f2, one, zero, zero, 3, 3, std::vector<Real>(tree.size(), 0)).constant == 0);
  CHECK_THROWS(lemma2_check(f1, f2, one, zero, zero, Rational(3, 2), Rational(3, 2)));
  for (int trial = 0; trial < 10; ++trial) {
    auto g1 = random_function(rng, 1, 3), g2 = random_function(rng, 1, 3), g3 = random_function(rng, 1, 3);
    auto g4 = random_function(rng, 1, 3) * Rational(1, 6), g5 = random_function(rng, 1, 3) * Rational(1, 6);
    auto rep = lemma2_check(g1, g2, g3, g4, g5, 3, 4);
    CHECK(rep.hypothesis);
    CHECK(rep.finite);
  }
}
