#include "dytb/outer.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace dytb {

OuterFunction::OuterFunction(int dim, int depth) : dim_(dim), depth_(depth) {
  if (dim < 1 || dim > kMaxDim || depth < 0) throw std::invalid_argument("outer function shape out of range");
  sq_.assign(DyadicTree(dim, depth).size(), Rational(0));
}

OuterFunction OuterFunction::from_values(int dim, int depth, const std::vector<Rational>& values) {
  OuterFunction F(dim, depth);
  if (values.size() != F.size()) throw std::invalid_argument("outer function needs one value per cube");
  for (std::size_t i = 0; i < values.size(); ++i) F.sq_[i] = values[i] * values[i];
  return F;
}

Real OuterFunction::value(std::size_t id) const { return sqrt(to_real(sq_[id])); }

std::optional<Rational> OuterFunction::exact_value(std::size_t id) const { return exact_root(sq_[id], 2); }

void OuterFunction::set(const DyadicCube& c, const Rational& v) { sq_[DyadicTree(dim_, depth_).id(c)] = v * v; }

void OuterFunction::set_square(std::size_t id, const Rational& sq) {
  if (sq < 0) throw std::invalid_argument("negative square");
  sq_[id] = sq;
}

OuterFunction OuterFunction::scaled(const Rational& c) const {
  OuterFunction F = *this;
  Rational c2 = c * c;
  for (auto& s : F.sq_) s *= c2;
  return F;
}

bool OuterFunction::is_zero() const {
  return std::all_of(sq_.begin(), sq_.end(), [](const Rational& s) { return s == 0; });
}

SizeKind SizeKind::lp(const Rational& p) {
  if (p < 1) throw std::invalid_argument("size exponent must be at least 1");
  return {false, p};
}

std::string SizeKind::name() const { return sup ? "S_inf" : "S_" + to_string(p); }

namespace {

using Mask = std::uint64_t;

struct Removal {
  Mask mask;
  Rational cost;
};

void require_small(const DyadicTree& tree) {
  if (tree.size() > 64) throw std::length_error("tree too large for the exhaustive search");
}

Mask subtree_mask(const DyadicTree& tree, std::size_t id) {
  Mask m = 0;
  for (auto s : tree.subtree(tree.cube(id))) m |= Mask{1} << s;
  return m;
}

// Every down-closed union of subtrees, with its covering cost.
std::vector<Removal> removals(const DyadicTree& tree, std::size_t id) {
  auto cube = tree.cube(id);
  std::vector<Removal> out{{0, 0}};
  if (cube.level < tree.depth()) {
    for (unsigned i = 0; i < tree.child_count(); ++i) {
      auto sub = removals(tree, tree.child_id(id, i));
      std::vector<Removal> next;
      next.reserve(out.size() * sub.size());
      for (const auto& a : out)
        for (const auto& b : sub) next.push_back({a.mask | b.mask, a.cost + b.cost});
      out = std::move(next);
    }
  }
  out.push_back({subtree_mask(tree, id), cube.volume()});
  return out;
}

std::vector<Removal> all_removals(const DyadicTree& tree) {
  require_small(tree);
  if (antichain_count(tree.dim(), tree.depth()) > exhaustive_cap())
    throw std::length_error("exhaustive search over the cap");
  return removals(tree, 0);
}

// Per-cube contributions: t = |F|^2 (S_inf) or |F|^p |Q| (S_p).
struct Terms {
  DyadicTree tree;
  bool sup;
  Rational e;
  std::vector<Rational> t;
  std::vector<Rational> vol;
  bool exact = true;
};

Terms make_terms(const OuterFunction& F, const SizeKind& kind) {
  Terms T{DyadicTree(F.dim(), F.depth()), kind.sup, kind.exponent(), {}, {}};
  T.t.resize(F.size());
  T.vol.resize(F.size());
  for (std::size_t id = 0; id < F.size(); ++id) {
    T.vol[id] = T.tree.cube(id).volume();
    if (kind.sup) {
      T.t[id] = F.square(id);
      continue;
    }
    Rational half = kind.p / 2;
    if (auto v = exact_pow(F.square(id), half)) {
      T.t[id] = *v * T.vol[id];
    } else {
      T.exact = false;
      T.t[id] = round_to_dyadic(real_pow(F.square(id), half) * to_real(T.vol[id]), 160);
    }
  }
  return T;
}

// size^e on every cube after removing `mask`.
std::vector<Rational> sizes(const Terms& T, Mask mask = 0) {
  std::size_t n = T.t.size();
  std::vector<Rational> agg(n);
  for (std::size_t k = n; k-- > 0;) {
    Rational a = (mask >> k) & 1 ? Rational(0) : T.t[k];
    if (T.tree.level_of(k) < T.tree.depth()) {
      for (unsigned i = 0; i < T.tree.child_count(); ++i) {
        const Rational& c = agg[T.tree.child_id(k, i)];
        if (T.sup)
          a = std::max(a, c);
        else
          a += c;
      }
    }
    agg[k] = a;
  }
  if (!T.sup)
    for (std::size_t k = 0; k < n; ++k) agg[k] /= T.vol[k];
  return agg;
}

// Finest cubes first: remove D(T) whenever the surviving size at T is above `level`.
// `seen` collects every size that was compared.
Rational greedy_measure(const Terms& T, const Rational& level, std::vector<Rational>* seen = nullptr) {
  std::size_t n = T.t.size();
  std::vector<Rational> agg(n), cost(n);
  for (std::size_t k = n; k-- > 0;) {
    Rational a = T.t[k], c = 0;
    if (T.tree.level_of(k) < T.tree.depth())
      for (unsigned i = 0; i < T.tree.child_count(); ++i) {
        std::size_t ch = T.tree.child_id(k, i);
        if (T.sup)
          a = std::max(a, agg[ch]);
        else
          a += agg[ch];
        c += cost[ch];
      }
    Rational sz = T.sup ? a : a / T.vol[k];
    if (seen) seen->push_back(sz);
    if (sz > level) {
      agg[k] = 0;
      cost[k] = T.vol[k];
    } else {
      agg[k] = a;
      cost[k] = c;
    }
  }
  return cost[0];
}

Rational level_of(const Rational& lambda, const Rational& e, bool* exact) {
  if (lambda < 0) throw std::invalid_argument("level must be nonnegative");
  if (auto v = exact_pow(lambda, e)) return *v;
  if (exact) *exact = false;
  return round_to_dyadic(real_pow(lambda, e), 160);
}

void push_step(LevelProfile& prof, const Rational& level, const Rational& mu) {
  if (!prof.measure.empty() && prof.measure.back() == mu) return;
  prof.levels.push_back(level);
  prof.measure.push_back(mu);
}

}  // namespace

std::uint64_t antichain_count(int dim, int depth) {
  // a(leaf) = 2, a(v) = 1 + a(child)^(2^d)
  unsigned __int128 a = 2;
  const unsigned __int128 top = std::numeric_limits<std::uint64_t>::max();
  for (int l = depth - 1; l >= 0; --l) {
    unsigned __int128 prod = 1;
    for (int i = 0; i < (1 << dim); ++i) {
      prod *= a;
      if (prod > top) return std::numeric_limits<std::uint64_t>::max();
    }
    a = prod + 1;
    if (a > top) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(a);
}

std::uint64_t exhaustive_cap() {
  if (const char* env = std::getenv("DYTB_MAX_CELLS")) {
    long cells = std::atol(env);
    if (cells > 0) return static_cast<std::uint64_t>(cells) * 1024;
  }
  return 100000;
}

Rational outer_measure(const CubeSet& E, int dim, int depth) {
  DyadicTree tree(dim, depth);
  std::vector<char> in(tree.size(), 0);
  for (const auto& c : E) {
    if (c.dim != dim || c.level > depth) throw std::invalid_argument("cube outside the tree");
    in[tree.id(c)] = 1;
  }
  // f(v) = |v| if v in E, else min(|v|, sum over children)
  std::vector<Rational> f(tree.size());
  for (std::size_t k = tree.size(); k-- > 0;) {
    Rational vol = tree.cube(k).volume();
    if (in[k]) {
      f[k] = vol;
      continue;
    }
    Rational s = 0;
    if (tree.level_of(k) < depth)
      for (unsigned i = 0; i < tree.child_count(); ++i) s += f[tree.child_id(k, i)];
    f[k] = std::min(vol, s);
  }
  return f[0];
}

Rational outer_measure_exhaustive(const CubeSet& E, int dim, int depth) {
  DyadicTree tree(dim, depth);
  Mask need = 0;
  for (const auto& c : E) need |= Mask{1} << tree.id(c);
  std::optional<Rational> best;
  for (const auto& r : all_removals(tree))
    if ((r.mask & need) == need && (!best || r.cost < *best)) best = r.cost;
  return *best;
}

NormValue size(const OuterFunction& F, const DyadicCube& T, const SizeKind& kind) {
  Terms terms = make_terms(F, kind);
  auto sz = sizes(terms);
  Rational v = sz[terms.tree.id(T)];
  if (terms.exact) return NormValue::from_power(v, terms.e);
  return NormValue::from_real(real_pow(v, 1 / terms.e), kind.sup ? Rational(2) : kind.p);
}

NormValue outer_sup_norm(const OuterFunction& F, const SizeKind& kind) {
  Terms terms = make_terms(F, kind);
  auto sz = sizes(terms);
  Rational v = *std::max_element(sz.begin(), sz.end());
  if (terms.exact) return NormValue::from_power(v, terms.e);
  return NormValue::from_real(real_pow(v, 1 / terms.e), terms.e);
}

Rational LevelProfile::at(const Rational& level) const {
  auto it = std::upper_bound(levels.begin(), levels.end(), level);
  if (it == levels.begin()) throw std::invalid_argument("negative level");
  return measure[static_cast<std::size_t>(it - levels.begin() - 1)];
}

LevelProfile level_profile(const OuterFunction& F, const SizeKind& kind, SuperlevelMethod method) {
  Terms terms = make_terms(F, kind);
  LevelProfile prof;
  prof.exponent = terms.e;
  prof.method = method;
  prof.exact = terms.exact;
  if (method == SuperlevelMethod::greedy) {
    // Levels where some comparison of the greedy run flips, closed under rerunning.
    std::set<Rational> cand{Rational(0)};
    std::vector<Rational> todo{Rational(0)};
    std::map<Rational, Rational> mu;
    while (!todo.empty()) {
      Rational c = todo.back();
      todo.pop_back();
      std::vector<Rational> seen;
      mu[c] = greedy_measure(terms, c, &seen);
      for (const auto& s : seen)
        if (cand.insert(s).second) todo.push_back(s);
    }
    // A removal that works at a lower level works at every higher one.
    for (const auto& [c, m] : mu)
      if (prof.measure.empty() || m < prof.measure.back()) push_step(prof, c, m);
    return prof;
  }
  auto rem = all_removals(terms.tree);
  std::vector<std::pair<Rational, Rational>> thr;  // (largest remaining size, cost)
  thr.reserve(rem.size());
  for (const auto& r : rem) {
    auto sz = sizes(terms, r.mask);
    thr.emplace_back(*std::max_element(sz.begin(), sz.end()), r.cost);
  }
  std::sort(thr.begin(), thr.end());
  std::optional<Rational> best;
  for (std::size_t i = 0; i < thr.size(); ++i) {
    if (!best || thr[i].second < *best) best = thr[i].second;
    if (i + 1 < thr.size() && thr[i + 1].first == thr[i].first) continue;
    if (prof.measure.empty() || *best < prof.measure.back()) {
      if (prof.levels.empty() && thr[i].first != 0) throw std::logic_error("full removal must clear every size");
      push_step(prof, thr[i].first, *best);
    }
  }
  return prof;
}

Rational superlevel(const OuterFunction& F, const Rational& lambda, const SizeKind& kind, SuperlevelMethod method) {
  bool exact = true;
  Rational level = level_of(lambda, kind.exponent(), &exact);
  return level_profile(F, kind, method).at(level);
}

NormValue outer_lp_norm(const LevelProfile& prof, const Rational& p, bool weak) {
  if (p < 1) throw std::invalid_argument("outer norm exponent must be at least 1");
  Rational r = p / prof.exponent;
  bool exact = prof.exact;
  std::vector<std::optional<Rational>> lp;
  std::vector<Real> lr;
  for (const auto& l : prof.levels) {
    auto v = exact_pow(l, r);
    if (!v) exact = false;
    lp.push_back(v);
    lr.push_back(v ? to_real(*v) : real_pow(l, r));
  }
  Rational ex = 0;
  Real rx = 0;
  for (std::size_t i = 0; i + 1 < prof.levels.size(); ++i) {
    const Rational& mu = prof.measure[i];
    if (weak) {
      if (exact) ex = std::max(ex, Rational(mu * *lp[i + 1]));
      rx = std::max(rx, Real(to_real(mu) * lr[i + 1]));
    } else {
      if (exact) ex += mu * (*lp[i + 1] - *lp[i]);
      rx += to_real(mu) * (lr[i + 1] - lr[i]);
    }
  }
  if (exact) return NormValue::from_power(ex, p);
  return NormValue::from_real(real_pow(rx, 1 / p), p);
}

NormValue outer_lp_norm(const OuterFunction& F, const Rational& p, const SizeKind& kind, bool weak,
                        SuperlevelMethod method) {
  return outer_lp_norm(level_profile(F, kind, method), p, weak);
}

SuperlevelMethod best_method(const OuterFunction& F, const SizeKind& kind) {
  if (kind.sup) return SuperlevelMethod::greedy;  // maximal violating cubes are forced
  DyadicTree tree(F.dim(), F.depth());
  if (tree.size() <= 64 && antichain_count(F.dim(), F.depth()) <= exhaustive_cap()) return SuperlevelMethod::exact;
  return SuperlevelMethod::greedy;
}

namespace {

std::vector<Rational> tree_averages(const TestFunction& f) {
  DyadicTree tree(f.dim(), f.resolution());
  auto ints = cube_integrals(f);
  for (std::size_t id = 0; id < tree.size(); ++id) ints[id] /= tree.cube(id).volume();
  return ints;
}

}  // namespace

OuterFunction embed_E(const TestFunction& f) {
  OuterFunction F(f.dim(), f.resolution());
  auto avg = tree_averages(f);
  for (std::size_t id = 0; id < avg.size(); ++id) F.set_square(id, avg[id] * avg[id]);
  return F;
}

OuterFunction embed_Delta(const TestFunction& f) {
  OuterFunction F(f.dim(), f.resolution());
  DyadicTree tree(f.dim(), f.resolution());
  auto avg = tree_averages(f);
  Rational share = Rational(1) / tree.child_count();
  for (std::size_t id = 0; id < avg.size(); ++id) {
    if (tree.level_of(id) == tree.depth()) continue;
    Rational s = 0;
    for (unsigned i = 0; i < tree.child_count(); ++i) {
      Rational d = avg[tree.child_id(id, i)] - avg[id];
      s += d * d;
    }
    F.set_square(id, s * share);
  }
  return F;
}

CarlesonReport carleson_check(const TestFunction& f, const std::optional<Rational>& p, Embedding which) {
  CarlesonReport rep;
  rep.which = which;
  rep.p = p;
  bool average = which == Embedding::average;
  OuterFunction F = average ? embed_E(f) : embed_Delta(f);
  SizeKind kind = average ? SizeKind::infinity() : SizeKind::lp(2);

  if (!p) {
    // sup_T S(F)(D(T)) <= ||f||_inf, squared.
    rep.asserted = true;
    NormValue s = outer_sup_norm(F, kind);
    Rational fs = sup_norm(f);
    rep.pass = *s.power <= fs * fs;
    rep.ratio = fs == 0 ? Real(0) : Real(s.value / to_real(fs));
    if (!rep.pass) rep.detail = "outer sup norm above the sup norm of f";
    return rep;
  }

  NormValue fn = lp_norm(f, *p);
  if (*p != 1) {
    auto method = average ? SuperlevelMethod::greedy : best_method(F, kind);
    NormValue on = outer_lp_norm(F, *p, kind, false, method);
    rep.ratio = fn.value == 0 ? Real(0) : Real(on.value / fn.value);
    return rep;
  }

  // Weak type at p = 1. Levels are t = lambda^2.
  rep.weak = true;
  rep.asserted = true;
  Rational mass = *fn.power;
  rep.bound = average ? Rational(1) : two_pow(f.dim());
  LevelProfile prof = level_profile(F, kind, SuperlevelMethod::greedy);
  std::vector<Rational> levels = prof.levels;
  std::vector<Rational> cz_levels;  // t where the Calderon-Zygmund removal set changes
  std::vector<Rational> abs_avg;
  DyadicTree tree(f.dim(), f.resolution());
  if (!average) {
    TestFunction af = f;
    for (std::size_t i = 0; i < af.size(); ++i) af[i] = abs(af[i]);
    abs_avg = tree_averages(af);
    for (const auto& a : abs_avg) {
      Rational lam = rep.bound * a;
      cz_levels.push_back(lam * lam);
      levels.push_back(lam * lam);
    }
  }
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  // Removal set of maximal cubes with [|f|]_Q > lambda / 2^d, and its feasibility.
  Terms terms = make_terms(F, kind);
  auto cz_measure = [&](const Rational& t) -> std::optional<Rational> {
    Rational m = 0;
    std::vector<char> gone(tree.size(), 0);
    for (std::size_t k = 0; k < tree.size(); ++k) {
      if (k > 0 && gone[tree.parent_id(k)]) {
        gone[k] = 1;
        continue;
      }
      Rational a = abs_avg[k] * rep.bound;
      if (a * a > t) {
        gone[k] = 1;
        m += tree.cube(k).volume();
      }
    }
    // Surviving sizes: recompute with the removed cubes zeroed.
    std::vector<Rational> agg(tree.size());
    for (std::size_t k = tree.size(); k-- > 0;) {
      Rational a = gone[k] ? Rational(0) : terms.t[k];
      if (tree.level_of(k) < tree.depth())
        for (unsigned i = 0; i < tree.child_count(); ++i) a += agg[tree.child_id(k, i)];
      agg[k] = a;
    }
    for (std::size_t k = 0; k < tree.size(); ++k)
      if (agg[k] / terms.vol[k] > t) return std::nullopt;
    return m;
  };

  Rational worst_lhs = 0;
  Real worst = 0;
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) {
    Rational mu = prof.at(levels[i]);
    if (!average) {
      auto cz = cz_measure(levels[i]);
      if (!cz) {
        rep.witness_feasible = false;
        rep.detail = "removal set at level " + to_string(levels[i]) + " leaves a large size";
      } else {
        mu = std::min(mu, *cz);
      }
    }
    // lambda mu <= C ||f||_1 approached from below the next level.
    Rational lhs = levels[i + 1] * mu * mu;
    if (lhs > worst_lhs) worst_lhs = lhs;
    if (mass > 0) {
      Real r = sqrt(to_real(levels[i + 1])) * to_real(mu) / to_real(mass);
      if (r > worst) worst = r;
    }
  }
  rep.ratio = worst;
  Rational cap = rep.bound * mass;
  rep.pass = worst_lhs <= cap * cap && rep.witness_feasible;
  if (worst_lhs > cap * cap) rep.detail = "weak type bound fails";
  return rep;
}

Real holder_tolerance() { return Real(1) / Real(281474976710656.0); }  // 2^-48

namespace {

struct Embedded {
  std::vector<Real> E, D;  // by tree id
  OuterFunction FE, FD;
};

Embedded embed(const TestFunction& f) {
  Embedded e{{}, {}, embed_E(f), embed_Delta(f)};
  for (std::size_t id = 0; id < e.FE.size(); ++id) {
    e.E.push_back(e.FE.value(id));
    e.D.push_back(e.FD.value(id));
  }
  return e;
}

Real outer_norm(const OuterFunction& F, const Rational& p, bool sup_size, bool* exact) {
  SizeKind kind = sup_size ? SizeKind::infinity() : SizeKind::lp(2);
  auto method = best_method(F, kind);
  if (!sup_size && method != SuperlevelMethod::exact) *exact = false;
  return outer_lp_norm(F, p, kind, false, method).value;
}

void align_all(std::vector<TestFunction*> fs) {
  int res = 0;
  for (auto* f : fs) res = std::max(res, f->resolution());
  int d = fs[0]->dim();
  for (auto* f : fs) {
    if (f->dim() != d) throw std::invalid_argument("functions of different dimensions");
    *f = f->upsampled(res);
  }
}

void finish(LemmaReport& rep, const std::vector<Real>& bound, const std::vector<Real>& alpha,
            const std::vector<Rational>& vol) {
  const std::vector<Real>& a = alpha.empty() ? bound : alpha;
  if (a.size() != bound.size()) throw std::invalid_argument("one coefficient per cube is needed");
  for (std::size_t id = 0; id < a.size(); ++id) {
    if (abs(a[id]) > bound[id] * (1 + comparison_slack())) {
      rep.hypothesis = false;
      rep.detail = "coefficient above the admissible bound on cube " + std::to_string(id);
    }
    rep.sum += abs(a[id]);
  }
  (void)vol;
  if (rep.rhs > 0)
    rep.constant = rep.sum / rep.rhs;
  else
    rep.finite = rep.sum == 0;
  rep.pass = rep.hypothesis && rep.finite;
  for (const auto& s : rep.steps) rep.pass = rep.pass && s.pass;
}

}  // namespace

LemmaReport lemma1_check(const TestFunction& f1_, const TestFunction& f2_, const TestFunction& f3_, const Rational& p,
                         const std::vector<Real>& alpha) {
  if (p <= 1) throw std::invalid_argument("exponent must exceed 1");
  TestFunction f1 = f1_, f2 = f2_, f3 = f3_;
  align_all({&f1, &f2, &f3});
  LemmaReport rep;
  if (sup_norm(f3) > 1) {
    rep.hypothesis = false;
    rep.detail = "third function exceeds 1";
  }
  Rational pc = conjugate_exponent(p);
  auto e1 = embed(f1), e2 = embed(f2), e3 = embed(f3);
  DyadicTree tree(f1.dim(), f1.resolution());
  std::vector<Rational> vol;
  std::vector<Real> bound;
  Real s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (std::size_t id = 0; id < tree.size(); ++id) {
    vol.push_back(tree.cube(id).volume());
    Real v = to_real(vol.back());
    Real t1 = e1.D[id] * e2.D[id] * v;
    Real t2 = e2.E[id] * e1.D[id] * e3.D[id] * v;
    Real t3 = e1.E[id] * e3.D[id] * e2.D[id] * v;
    Real t4 = e1.E[id] * e2.E[id] * e3.D[id] * e3.D[id] * v;
    s1 += t1;
    s2 += t2;
    s3 += t3;
    s4 += t4;
    bound.push_back(t1 + t2 + t3 + t4);
  }
  rep.rhs = lp_norm(f1, p).value * lp_norm(f2, pc).value;

  bool exact = true;
  Real A = outer_norm(e1.FD, p, false, &exact);
  Real B = outer_norm(e2.FD, pc, false, &exact);
  Real Ea = outer_norm(e1.FE, p, true, &exact);
  Real Eb = outer_norm(e2.FE, pc, true, &exact);
  Real D3 = outer_sup_norm(e3.FD, SizeKind::lp(2)).value;
  auto step = [&](const std::string& name, const Real& lhs, const Real& rhs) {
    HolderStep s{name, lhs, rhs, exact, lhs <= rhs * (1 + holder_tolerance())};
    rep.steps.push_back(s);
  };
  step("differences", s1, A * B);
  step("average of f2", s2, Eb * A * D3);
  step("average of f1", s3, Ea * B * D3);
  step("both averages", s4, Ea * Eb * D3 * D3);
  finish(rep, bound, alpha, vol);
  return rep;
}

LemmaReport lemma2_check(const TestFunction& f1_, const TestFunction& f2_, const TestFunction& f3_,
                         const TestFunction& f4_, const TestFunction& f5_, const Rational& p, const Rational& q,
                         const std::vector<Real>& alpha) {
  if (p <= 1 || q <= 1) throw std::invalid_argument("exponents must exceed 1");
  Rational s = p * q / (p + q);
  if (s <= 1) throw std::invalid_argument("pq/(p+q) must exceed 1");
  TestFunction f1 = f1_, f2 = f2_, f3 = f3_, f4 = f4_, f5 = f5_;
  align_all({&f1, &f2, &f3, &f4, &f5});
  LemmaReport rep;
  if (sup_norm(f4) > 1 || sup_norm(f5) > 1) {
    rep.hypothesis = false;
    rep.detail = "bounded functions exceed 1";
  }
  auto e1 = embed(f1), e2 = embed(f2), e3 = embed(f3), e4 = embed(f4), e5 = embed(f5);
  DyadicTree tree(f1.dim(), f1.resolution());
  std::vector<Rational> vol;
  std::vector<Real> bound;
  for (std::size_t id = 0; id < tree.size(); ++id) {
    vol.push_back(tree.cube(id).volume());
    Real inner = e2.D[id] * e1.D[id] + e1.E[id] * e2.D[id] * e5.D[id] + e2.E[id] * e4.D[id] * e1.D[id] +
                 e2.E[id] * e1.E[id] * e4.D[id] * e5.D[id];
    bound.push_back(inner * e3.E[id] * to_real(vol.back()));
  }
  rep.rhs = lp_norm(f1, p).value * lp_norm(f2, q).value * lp_norm(f3, conjugate_exponent(s)).value;
  finish(rep, bound, alpha, vol);
  return rep;
}

}  // namespace dytb
