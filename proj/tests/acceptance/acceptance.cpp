// Acceptance run: one line per criterion. Each check compares the library against an
// oracle computed here from first principles.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>

#include <Eigen/Dense>

#include "dytb/outer.hpp"
#include "dytb/rng.hpp"
#include "dytb/scenario.hpp"
#include "dytb/stopping.hpp"
#include "dytb/testing.hpp"

using namespace dytb;

namespace {

// Pinned tolerances and budgets.
constexpr double kSpectralTol = 1e-9;
constexpr double kBracketSlack = 1e-12;  // relative, for float-valued bracket ends
constexpr int kStoppingInstances = 10000;
constexpr int kTelescopeInstances = 100;
constexpr int kCarlesonSamples = 1000;
constexpr int kLemmaEnsembles = 100;
const Real kHolderTol = real_pow(Rational(2), Rational(-48));

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0: no runtime limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

TestFunction random_function(Rng& rng, int d, int N) {
  std::vector<Rational> v(std::size_t{1} << (d * N));
  for (auto& x : v) x = fraction(rng.uniform_int(-6, 6), rng.uniform_int(1, 3));
  return TestFunction(d, N, std::move(v));
}

const std::vector<std::vector<Rational>> kTuples = {
    {2, 2}, {3, Rational(3, 2)}, {Rational(3, 2), 3}, {4, Rational(4, 3)}};

// ---------------------------------------------------------------- smoothness

// Leaf kernel straight from the block definition: a leaf indicator pairs with a profile
// as |leaf| times the profile value on the child holding the leaf.
std::vector<Rational> block_kernel(const PerfectForm& form) {
  int n = form.arity(), d = form.dim(), N = form.resolution();
  std::size_t L = form.leaf_count(), total = 1;
  for (int j = 0; j < n; ++j) total *= L;
  std::vector<Rational> K(total, Rational(0));
  Rational leaf = two_pow(-static_cast<long>(d) * N);
  for (const auto& b : form.blocks()) {
    const DyadicCube& Q = b.cube;
    Rational scale = b.coeff * ipow(Q.volume(), 1 - n);
    // pairing[j][x]
    std::vector<std::vector<Rational>> pair(static_cast<std::size_t>(n), std::vector<Rational>(L, Rational(0)));
    for (std::size_t x = 0; x < L; ++x) {
      DyadicCube c = DyadicCube::from_linear(d, N, x);
      if (!contains(Q, c) || c.level == Q.level) continue;
      unsigned pos = child_position(ancestor_at(c, Q.level + 1));
      for (int j = 0; j < n; ++j) pair[static_cast<std::size_t>(j)][x] = leaf * b.profiles[static_cast<std::size_t>(j)][pos];
    }
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      Rational term = scale;
      for (int j = n - 1; j >= 0 && term != 0; --j) {
        term *= pair[static_cast<std::size_t>(j)][rem % L];
        rem /= L;
      }
      K[idx] += term;
    }
  }
  return K;
}

Outcome smoothness() {
  int forms = 0, nonzero = 0, checks = 0, mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    int n = 2 + i % 2, N = 1 + (i / 2) % 3, d = 1;
    PerfectForm form = generate(n, d, N, 0.7, derive_seed(101, static_cast<std::uint64_t>(i)));
    ++forms;
    auto K = block_kernel(form);
    std::size_t L = form.leaf_count();
    // The evaluator agrees with the kernel on leaf tuples.
    for (std::size_t idx = 0; idx < K.size(); idx += 7) {
      std::vector<TestFunction> fs;
      std::size_t rem = idx;
      std::vector<std::size_t> at(static_cast<std::size_t>(n));
      for (int j = n - 1; j >= 0; --j) {
        at[static_cast<std::size_t>(j)] = rem % L;
        rem /= L;
      }
      for (int j = 0; j < n; ++j) {
        TestFunction e(d, N);
        e[at[static_cast<std::size_t>(j)]] = 1;
        fs.push_back(e);
      }
      if (eval(form, fs) != K[idx]) ++mismatches;
    }
    auto entry = [&](const std::vector<std::size_t>& at) {
      std::size_t idx = 0;
      for (auto a : at) idx = idx * L + a;
      return K[idx];
    };
    // Mean-zero slot j on P spanned by 1_{x0} - 1_x (x, x0 leaves of P); vanishing slot i
    // spanned by leaves outside P; other slots by leaves.
    DyadicTree tree(d, N);
    for (std::size_t id = 0; id < tree.size(); ++id) {
      DyadicCube P = tree.cube(id);
      if (P.level == N) continue;
      auto in = tree.leaves_in(P);
      std::vector<std::size_t> out;
      for (std::size_t x = 0; x < L; ++x)
        if (!std::binary_search(in.begin(), in.end(), x)) out.push_back(x);
      for (int j = 0; j < n; ++j)
        for (int s = 0; s < n; ++s) {
          if (s == j) continue;
          std::size_t others = 1;
          for (int m = 0; m < n - 2; ++m) others *= L;
          for (std::size_t a = 1; a < in.size(); ++a)
            for (auto x : out)
              for (std::size_t o = 0; o < others; ++o) {
                std::vector<std::size_t> at(static_cast<std::size_t>(n));
                std::size_t rem = o;
                for (int m = 0; m < n; ++m) {
                  if (m == j || m == s) continue;
                  at[static_cast<std::size_t>(m)] = rem % L;
                  rem /= L;
                }
                at[static_cast<std::size_t>(s)] = x;
                at[static_cast<std::size_t>(j)] = in[0];
                Rational v = entry(at);
                at[static_cast<std::size_t>(j)] = in[a];
                v -= entry(at);
                ++checks;
                if (v != 0) ++nonzero;
              }
        }
    }
    if (!validate_smoothness(form).pass) ++nonzero;
  }
  return {nonzero == 0 && mismatches == 0,
          fmt("%d forms, %d exact pairings, %d nonzero, %d kernel mismatches", forms, checks, nonzero, mismatches)};
}

// ---------------------------------------------------------------- stopping ensemble

// (1/8) min_j (7/8)^(p_j') B^(-1/(p_j-1)); for these tuples the minimum is a rational term.
Rational epsilon_oracle(const std::vector<Rational>& p, const Rational& B, bool* ok) {
  std::optional<Rational> best;
  double best_f = 1e300;
  for (const auto& pj : p) {
    Rational pc = pj / (pj - 1), e = 1 / (pj - 1);
    double f = std::pow(7.0 / 8.0, pc.get_d()) * std::pow(B.get_d(), -e.get_d());
    if (f < best_f) best_f = f;
    if (pc.get_den() == 1 && e.get_den() == 1) {
      Rational t = ipow(Rational(7, 8), pc.get_num().get_si()) / ipow(B, e.get_num().get_si());
      if (!best || t < *best) best = t;
    }
  }
  *ok = best && std::abs(best->get_d() - best_f) <= 1e-15 * best_f;
  return best ? *best / 8 : Rational(0);
}

Rational sum_volumes(const CubeSet& s) {
  Rational v = 0;
  for (const auto& c : s) v += c.volume();
  return v;
}

bool pairwise_disjoint(const CubeSet& s) {
  for (const auto& a : s)
    for (const auto& b : s)
      if (!(a == b) && relate(a, b) != Relation::disjoint) return false;
  return true;
}

int max_cover(const std::vector<std::pair<DyadicCube, TestFunction>>& xi, int d, int N) {
  std::vector<int> count(std::size_t{1} << (d * N), 0);
  DyadicTree tree(d, N);
  for (const auto& [c, _] : xi)
    for (auto x : tree.leaves_in(c)) ++count[x];
  return count.empty() ? 0 : *std::max_element(count.begin(), count.end());
}

struct StoppingTally {
  long instances = 0, eps_bad = 0, pack_bad = 0, disjoint_bad = 0, fired = 0;
  long acct_bad = 0, second_acct_bad = 0;
  long mean_bad = 0, buffer_bad = 0, overlap_bad = 0, violations = 0;
  Rational worst_ratio = 0;
  std::string first_failure;
  double seconds = 0;
};

const StoppingTally& stopping_ensemble() {
  static StoppingTally t = [] {
    StoppingTally t;
    auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < kStoppingInstances; ++i) {
      const auto& ex = kTuples[static_cast<std::size_t>(i % 4)];
      int N = 1 + (i / 4) % 4;
      Rational B = 1 + (i / 16) % 2;
      auto tuple = HolderTuple::make(ex);
      auto inst = make_step_instance(tuple, 1, N, B, derive_seed(202, static_cast<std::uint64_t>(i)), 0.7);
      auto rep = induction_step(inst.data);
      ++t.instances;
      auto note = [&](long& counter, const std::string& what) {
        ++counter;
        if (t.first_failure.empty()) t.first_failure = "instance " + std::to_string(i) + ": " + what;
      };
      if (!rep.violations.empty()) note(t.violations, rep.violations.front());

      bool ok = false;
      Rational eps = epsilon_oracle(ex, B, &ok);
      if (!ok || eps != rep.eps) note(t.eps_bad, "stopping parameter " + to_string(rep.eps));

      for (const auto* res : {&rep.first, &rep.second}) {
        Rational packed = sum_volumes(res->merged);
        if (!pairwise_disjoint(res->merged)) note(t.disjoint_bad, "overlapping stopping cubes");
        if (packed != res->packed || packed > (1 - eps) * res->base.volume())
          note(t.pack_bad, "packing " + to_string(packed / res->base.volume()));
        if (packed > 0) ++t.fired;
        t.worst_ratio = std::max(t.worst_ratio, Rational(packed / res->base.volume()));
      }
      // First stopping: collections 1, 3, 5 below eps|Q|, collection 4 below (1 - 8 eps)|Q|.
      const Rational Q = rep.first.base.volume();
      const Rational lim[5] = {eps * Q, 0, eps * Q, (1 - 8 * eps) * Q, eps * Q};
      for (int c : {0, 2, 3, 4}) {
        Rational m = sum_volumes(rep.first.parts[static_cast<std::size_t>(c)]);
        if (m != rep.first.accounting[static_cast<std::size_t>(c)].measure || m > lim[c])
          note(t.acct_bad, "collection " + std::to_string(c + 1) + " measure " + to_string(m / Q));
      }
      for (const auto& a : rep.second.accounting)
        if (!a.pass) ++t.second_acct_bad;

      // Pruned functions have mean zero on their base cubes.
      if (integral(rep.gfrak.value, rep.first.base) != 0) note(t.mean_bad, "[g]_Q nonzero");
      if (integral(rep.hfrak.value, rep.R.cube) != 0) note(t.mean_bad, "[h]_R nonzero");
      Rational cap = two_pow(1) / eps;  // d = 1
      for (const auto* b : {&rep.first_buffers, &rep.second_buffers}) {
        for (const auto& [c, xi] : b->xi)
          if (integral(xi) != 0 || integral(xi, c) != 0) note(t.buffer_bad, "buffer with nonzero mean");
        int cover = max_cover(b->xi, 1, inst.data.form.resolution());
        if (Rational(cover) > cap || Rational(b->parent_overlap) > cap || Rational(b->sibling_overlap) > cap)
          note(t.overlap_bad, "overlap " + std::to_string(cover));
      }
    }
    t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return t;
  }();
  return t;
}

Outcome packing() {
  const auto& t = stopping_ensemble();
  bool pass = t.eps_bad == 0 && t.pack_bad == 0 && t.disjoint_bad == 0 && t.violations == 0 && t.seconds < 600;
  std::string d = fmt("%ld instances, %ld nonempty stoppings, worst ratio %s, eps mismatches %ld, packing failures %ld, "
                      "contradictions %ld, %.1f s",
                      t.instances, t.fired, to_string(t.worst_ratio).c_str(), t.eps_bad, t.pack_bad, t.violations,
                      t.seconds);
  if (!pass && !t.first_failure.empty()) d += "; first: " + t.first_failure;
  return {pass, d};
}

Outcome accounting() {
  const auto& t = stopping_ensemble();
  return {t.acct_bad == 0,
          fmt("%ld instances, first-stopping ledger failures %ld (second-stopping derived ledger failures %ld)",
              t.instances, t.acct_bad, t.second_acct_bad)};
}

Outcome pruning() {
  const auto& t = stopping_ensemble();
  return {t.mean_bad == 0 && t.buffer_bad == 0 && t.overlap_bad == 0,
          fmt("%ld instances, nonzero means %ld, buffer means %ld, overlap excess %ld", t.instances, t.mean_bad,
              t.buffer_bad, t.overlap_bad)};
}

// ---------------------------------------------------------------- telescoping

Outcome telescoping() {
  int representable = 0, failures = 0, bad = 0;
  std::vector<std::string> reasons;
  for (int i = 0; i < kTelescopeInstances; ++i) {
    const auto& ex = kTuples[static_cast<std::size_t>(i % 4)];
    int N = 2 + i % 3;
    auto tuple = HolderTuple::make(ex);
    auto inst = make_step_instance(tuple, 1, N, 1 + i % 2, derive_seed(303, static_cast<std::uint64_t>(i)), 0.8);
    auto rep = induction_step(inst.data);
    if (!rep.representable) {
      ++failures;
      reasons.push_back(rep.telescope.detail.empty() ? "coefficient map" : rep.telescope.detail);
      continue;
    }
    ++representable;
    // Target recomputed on the dense kernel.
    auto ctx = make_context(inst.data);
    const DyadicCube& R = rep.R.cube;
    std::vector<TestFunction> fs;
    for (int j = 0; j < inst.data.form.arity(); ++j) {
      const TestFunction& f = j == ctx.slot_h ? rep.hfrak.value : j == ctx.slot_g ? rep.R.ghat : ctx.fs[static_cast<std::size_t>(j)];
      fs.push_back(restrict(f, R).upsampled(N));
    }
    Rational target = eval_dense(inst.data.form, fs);
    if (rep.telescope.residual != 0 || rep.telescope.reconstructed != target) ++bad;
  }
  std::string d = fmt("%d representable instances, %d nonzero residuals, %d representability failures reported",
                      representable, bad, failures);
  if (!reasons.empty()) d += " (" + reasons.front() + ")";
  return {bad == 0 && representable > 0, d};
}

// ---------------------------------------------------------------- outer measure

// Minimal covering cost for every subset by brute force over all sets of tree tops,
// followed by a superset-minimum transform.
std::vector<Rational> brute_outer_measures(int d, int N) {
  DyadicTree tree(d, N);
  std::size_t m = tree.size();
  std::vector<std::uint32_t> sub(m, 0);
  for (std::size_t id = 0; id < m; ++id)
    for (auto s : tree.subtree(tree.cube(id))) sub[id] |= 1u << s;
  std::size_t full = std::size_t{1} << m;
  std::vector<std::optional<Rational>> best(full);
  for (std::size_t tops = 0; tops < full; ++tops) {
    std::uint32_t cover = 0;
    Rational cost = 0;
    for (std::size_t id = 0; id < m; ++id)
      if (tops >> id & 1) {
        cover |= sub[id];
        cost += tree.cube(id).volume();
      }
    auto& b = best[cover];
    if (!b || cost < *b) b = cost;
  }
  for (std::size_t bit = 0; bit < m; ++bit)
    for (std::size_t mask = 0; mask < full; ++mask)
      if (!(mask >> bit & 1)) {
        auto& lo = best[mask];
        const auto& hi = best[mask | (std::size_t{1} << bit)];
        if (hi && (!lo || *hi < *lo)) lo = hi;
      }
  std::vector<Rational> out(full);
  for (std::size_t mask = 0; mask < full; ++mask) out[mask] = *best[mask];
  return out;
}

Outcome outer_oracle() {
  long subsets = 0, mismatches = 0, tents = 0, tent_bad = 0;
  const std::pair<int, int> small[] = {{1, 0}, {1, 1}, {1, 2}, {1, 3}, {2, 1}, {3, 1}};
  for (auto [d, N] : small) {
    DyadicTree tree(d, N);
    auto brute = brute_outer_measures(d, N);
    for (std::size_t mask = 0; mask < brute.size(); ++mask) {
      CubeSet E;
      for (std::size_t id = 0; id < tree.size(); ++id)
        if (mask >> id & 1) E.insert(tree.cube(id));
      ++subsets;
      if (outer_measure(E, d, N) != brute[mask]) ++mismatches;
    }
  }
  const std::pair<int, int> tent_trees[] = {{1, 3}, {1, 4}, {2, 2}, {3, 1}};
  for (auto [d, N] : tent_trees) {
    DyadicTree tree(d, N);
    for (std::size_t id = 0; id < tree.size(); ++id) {
      CubeSet tent;
      for (auto s : tree.subtree(tree.cube(id))) tent.insert(tree.cube(s));
      ++tents;
      if (outer_measure(tent, d, N) != tree.cube(id).volume()) ++tent_bad;
    }
  }
  return {mismatches == 0 && tent_bad == 0,
          fmt("%ld subsets on trees up to 15 nodes, %ld mismatches; %ld trees, %ld with mu(D(T)) != |T|", subsets,
              mismatches, tents, tent_bad)};
}

// ---------------------------------------------------------------- Carleson

Outcome carleson() {
  long samples = 0, fails = 0, oracle_bad = 0;
  Real worst_inf_E = 0, worst_inf_D = 0, worst_weak_E = 0, worst_weak_D = 0;
  const std::pair<int, int> grids[] = {{1, 4}, {2, 2}};
  for (auto [d, N] : grids) {
    Rng rng(derive_seed(404, static_cast<std::uint64_t>(d)));
    DyadicTree tree(d, N);
    for (int s = 0; s < kCarlesonSamples; ++s) {
      TestFunction f = random_function(rng, d, N);
      ++samples;
      Rational fsup = sup_norm(f);
      Rational f1 = 0;
      for (const auto& v : f.values()) f1 += abs(v) * f.leaf_volume();
      auto inf_E = carleson_check(f, std::nullopt, Embedding::average);
      auto inf_D = carleson_check(f, std::nullopt, Embedding::difference);
      auto weak_E = carleson_check(f, Rational(1), Embedding::average);
      auto weak_D = carleson_check(f, Rational(1), Embedding::difference);
      for (const auto* r : {&inf_E, &inf_D, &weak_E, &weak_D})
        if (!r->asserted || !r->pass || !r->witness_feasible) ++fails;
      worst_inf_E = std::max(worst_inf_E, inf_E.ratio);
      worst_inf_D = std::max(worst_inf_D, inf_D.ratio);
      worst_weak_E = std::max(worst_weak_E, weak_E.ratio);
      worst_weak_D = std::max(worst_weak_D, weak_D.ratio);

      // S_inf of the averages is at most sup |f|; S_2 of the differences on D(T) squares to
      // the variance of f on T.
      auto FE = embed_E(f), FD = embed_Delta(f);
      for (std::size_t id = 0; id < tree.size(); ++id) {
        DyadicCube T = tree.cube(id);
        Rational a = average(f, T);
        Rational var = 0;
        for (auto x : tree.leaves_in(T)) var += (f[x] - a) * (f[x] - a);
        var /= static_cast<long>(tree.leaves_in(T).size());
        auto sE = size(FE, T, SizeKind::infinity());
        auto sD = size(FD, T, SizeKind::lp(2));
        if (!sE.power || *sE.power > fsup * fsup) ++oracle_bad;
        if (!sD.power || *sD.power != var || var > fsup * fsup) ++oracle_bad;
      }
      // Weak (1,1) for the averages: the superlevel set of S_inf is covered exactly by the
      // maximal cubes with |[f]_T| > lambda.
      std::vector<Rational> levels;
      for (std::size_t id = 0; id < tree.size(); ++id) levels.push_back(abs(average(f, tree.cube(id))));
      for (const auto& lam : levels) {
        if (lam == 0) continue;
        Rational below = lam * Rational(1023, 1024);
        CubeSet over;
        for (std::size_t id = 0; id < tree.size(); ++id)
          if (abs(average(f, tree.cube(id))) > below) over.insert(tree.cube(id));
        Rational mu = maximal_cubes(over).total_volume();
        if (below * mu > f1) ++oracle_bad;
      }
    }
  }
  return {fails == 0 && oracle_bad == 0,
          fmt("%ld functions; worst ratios E/inf %.6f, Delta/inf %.6f, E/weak-1 %.6f, Delta/weak-1 %.6f "
              "(bound 2^d); %ld assertion failures, %ld oracle failures",
              samples, worst_inf_E.convert_to<double>(), worst_inf_D.convert_to<double>(),
              worst_weak_E.convert_to<double>(), worst_weak_D.convert_to<double>(), fails, oracle_bad)};
}

// ---------------------------------------------------------------- norm oracle

Outcome norm_oracle() {
  int instances = 0, spectral_bad = 0, bracket_bad = 0;
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    int N = 1 + i % 3;
    PerfectForm form = generate(2, 1, N, 0.8, derive_seed(505, static_cast<std::uint64_t>(i)));
    auto tuple = HolderTuple::make({2, 2});
    std::size_t L = form.leaf_count();
    Eigen::MatrixXd K(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));
    for (std::size_t x = 0; x < L; ++x)
      for (std::size_t y = 0; y < L; ++y) {
        TestFunction a(1, N), b(1, N);
        a[x] = 1;
        b[y] = 1;
        std::vector<TestFunction> fs{a, b};
        K(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(y)) = eval(form, fs).get_d();
      }
    // With ||f||_2^2 = sum f_x^2 / L the operator norm is L times the top singular value.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(K);
    double oracle = static_cast<double>(L) * svd.singularValues()(0);
    auto brute = full_norm_bruteforce(form, tuple);
    auto br = full_norm_bracket(form, tuple, derive_seed(506, static_cast<std::uint64_t>(i)));
    double diff = std::abs(brute.lower.convert_to<double>() - oracle);
    worst = std::max(worst, diff);
    ++instances;
    if (diff > kSpectralTol * std::max(1.0, oracle)) ++spectral_bad;
    if (br.lower.convert_to<double>() > oracle * (1 + kBracketSlack) ||
        br.upper.convert_to<double>() < oracle * (1 - kBracketSlack))
      ++bracket_bad;
  }
  return {spectral_bad == 0 && bracket_bad == 0,
          fmt("%d instances, worst |brute - spectral| %.3g, %d spectral failures, %d bracket failures", instances, worst,
              spectral_bad, bracket_bad)};
}

// ---------------------------------------------------------------- T(1) / T(b)

Outcome testing_consistency() {
  int forms = 0, t1_bad = 0, above = 0, infinite = 0;
  std::vector<double> ratios;
  for (int i = 0; i < 60; ++i) {
    int n = 2 + i % 2, N = 1 + (i / 2) % 3;
    std::uint64_t seed = derive_seed(606, static_cast<std::uint64_t>(i));
    PerfectForm form = generate(n, 1, N, 0.7, seed);
    std::vector<Rational> ex(static_cast<std::size_t>(n), Rational(n));
    if (n == 2) ex = kTuples[static_cast<std::size_t>(i / 2 % 4)];
    auto tuple = HolderTuple::make(ex);
    auto paths = build_example_collection(n);
    ++forms;
    auto t1 = t1_testing_constant(form, tuple);
    PopulateOptions plain;
    plain.perturb = false;
    auto ind = populate_family(paths, 1, tuple, 1, 1, N, seed, plain);
    auto tb1 = tb_testing_constant(form, paths, ind, tuple, 1);
    if (t1.value != tb1.value) ++t1_bad;
    auto br = full_norm_bracket(form, tuple, seed);
    Real upper = br.upper * (1 + comparison_slack());
    if (t1.value > upper) ++above;
    for (int k = 1; k <= n; ++k)
      for (Rational B : {Rational(1), Rational(2)}) {
        auto fam = populate_family(paths, k, tuple, B, 1, N, derive_seed(seed, static_cast<std::uint64_t>(k)));
        auto tb = tb_testing_constant(form, paths, fam, tuple, k);
        if (tb.value > upper) ++above;
      }
    if (t1.value > 0) {
      double r = (br.lower / t1.value).convert_to<double>();
      if (!std::isfinite(r)) ++infinite;
      ratios.push_back(r);
    }
  }
  std::sort(ratios.begin(), ratios.end());
  double lo = ratios.empty() ? 0 : ratios.front(), med = ratios.empty() ? 0 : ratios[ratios.size() / 2],
         hi = ratios.empty() ? 0 : ratios.back();
  return {t1_bad == 0 && above == 0 && infinite == 0,
          fmt("%d forms, %d T(b)/T(1) mismatches at k = 1, %d constants above the norm bound; norm/testing ratio "
              "min %.4f median %.4f max %.4f",
              forms, t1_bad, above, lo, med, hi)};
}

// ---------------------------------------------------------------- admissibility

Outcome admissibility() {
  int bad = 0;
  std::string detail;
  for (int n = 2; n <= 5; ++n) {
    auto coll = build_example_collection(n);
    // Membership re-derived from the two defining conditions.
    std::set<std::vector<int>> expect;
    auto every = all_paths(n);
    for (const auto& p : every.paths()) {
      int k = p.length();
      bool ok = true;
      std::set<int> range(p.values.begin(), p.values.end());
      for (int v = 1; v < k; ++v) ok = ok && range.count(v);
      for (int j = 1; j <= k && ok; ++j) {
        int hits = 0;
        for (int i = 0; i < j; ++i) hits += p.values[static_cast<std::size_t>(i)] <= j;
        ok = hits >= j - 1;
      }
      if (ok) expect.insert(p.values);
    }
    std::set<std::vector<int>> got;
    for (const auto& p : coll.paths()) got.insert(p.values);
    if (got != expect) ++bad;
    // (1) every slot starts a path; (2) short paths extend; (3) swap partners exist.
    for (int j = 1; j <= n; ++j)
      if (!got.count({j})) ++bad;
    for (const auto& p : got) {
      if (static_cast<int>(p.size()) < n) {
        bool ext = false;
        for (int v = 1; v <= n; ++v) {
          if (std::find(p.begin(), p.end(), v) != p.end()) continue;
          auto q = p;
          q.push_back(v);
          ext = ext || got.count(q);
        }
        if (!ext) ++bad;
      }
      if (p.size() >= 2) {
        auto q = p;
        std::swap(q[q.size() - 1], q[q.size() - 2]);
        if (!got.count(q)) ++bad;
      }
    }
    auto rep = validate_admissible(coll);
    if (!rep.pass) ++bad;
    detail += (detail.empty() ? "" : ", ") + fmt("n=%d: %zu paths", n, got.size());
  }
  if (build_example_collection(2).size() != 4) ++bad;
  return {bad == 0, detail + fmt("; %d defects", bad)};
}

// ---------------------------------------------------------------- lemmas

Outcome lemmas() {
  int ensembles = 0, fails = 0, unstable = 0, steps = 0, step_bad = 0, inexact = 0;
  Real worst1 = 0, worst2 = 0, worst_step = 0;
  const Rational ps[] = {Rational(3, 2), 2, 3};
  for (int i = 0; i < kLemmaEnsembles; ++i) {
    Rng rng(derive_seed(707, static_cast<std::uint64_t>(i)));
    int d = i % 5 == 4 ? 2 : 1;
    int N = d == 2 ? 1 + i % 2 : 1 + i % 4;
    Rational p = ps[i % 3];
    auto f1 = random_function(rng, d, N), f2 = random_function(rng, d, N);
    auto f3 = random_function(rng, d, N) * Rational(1, 6);
    auto l1 = lemma1_check(f1, f2, f3, p);
    auto again = lemma1_check(f1, f2, f3, p);
    auto scaled = lemma1_check(f1 * Rational(3), f2 * Rational(1, 2), f3, p);
    auto g3 = random_function(rng, d, N), g4 = random_function(rng, d, N) * Rational(1, 6),
         g5 = random_function(rng, d, N) * Rational(1, 6);
    Rational q1 = 2 * p, q2 = 2 * conjugate_exponent(p);
    auto l2 = lemma2_check(f1, f2, g3, g4, g5, q1, q2);
    auto l2s = lemma2_check(f1 * Rational(2), f2, g3, g4, g5, q1, q2);
    ++ensembles;
    if (!l1.finite || !l2.finite || !l1.hypothesis || !l2.hypothesis || !l2.pass) ++fails;
    if (l1.constant != again.constant) ++unstable;
    if (abs(l1.constant - scaled.constant) > 1e-30 * (1 + l1.constant)) ++unstable;
    if (abs(l2.constant - l2s.constant) > 1e-30 * (1 + l2.constant)) ++unstable;
    for (const auto& s : l1.steps) {
      ++steps;
      if (!s.exact_measure) ++inexact;
      if (s.lhs > s.rhs * (1 + kHolderTol)) ++step_bad;
      if (s.rhs > 0) worst_step = std::max(worst_step, s.lhs / s.rhs);
    }
    worst1 = std::max(worst1, l1.constant);
    worst2 = std::max(worst2, l2.constant);
  }
  return {fails == 0 && unstable == 0 && step_bad == 0,
          fmt("%d ensembles; measured C max %.6f (first) and %.6f (second); %d failures, %d unstable; %d Hoelder "
              "steps, %d above 2^-48 tolerance (worst lhs/rhs %.6f), %d with greedy measure",
              ensembles, worst1.convert_to<double>(), worst2.convert_to<double>(), fails, unstable, steps, step_bad,
              worst_step.convert_to<double>(), inexact)};
}

}  // namespace

// Optional arguments select criteria by number.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const Criterion criteria[] = {
      {1, "smoothness axiom", 60, smoothness},
      {2, "stopping packing", 600, packing},
      {3, "collection accounting", 0, accounting},
      {4, "pruning and buffers", 0, pruning},
      {5, "telescoping identity", 120, telescoping},
      {6, "outer measure oracle", 0, outer_oracle},
      {7, "Carleson endpoints", 300, carleson},
      {8, "norm oracle", 0, norm_oracle},
      {9, "T(1)/T(b) consistency", 0, testing_consistency},
      {10, "admissibility", 60, admissibility},
      {11, "lemma oracles", 0, lemmas},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s budget]", c.budget_s);
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s  %s: %s (%.1f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
