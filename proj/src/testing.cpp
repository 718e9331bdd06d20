#include "dytb/testing.hpp"

#include <cmath>
#include <stdexcept>

#include "dytb/rng.hpp"

namespace dytb {

Magnitude testing_ratio(const PerfectForm& form, const HolderTuple& tuple, std::span<const TestFunction> fixed,
                        int slot, const DyadicCube& support, TestFunction* extremizer) {
  int n = form.arity();
  Magnitude den = Magnitude::of(1);
  for (int j = 0; j < n; ++j) {
    if (j == slot) continue;
    NormValue nv = lp_norm(fixed[static_cast<std::size_t>(j)], tuple[j]);
    if (nv.is_zero()) return Magnitude::of(0);
    den = den * nv.magnitude();
  }
  TestFunction phi = restrict(partial_functional(form, slot, fixed), support);
  DualNorm dn = dual_norm(phi, tuple[slot]);
  if (extremizer) *extremizer = restrict(dn.extremizer, support);
  return dn.value.magnitude() * den.pow(-1);
}

namespace {

// First candidate wins ties so the witness is the earliest cube in tree order.
bool consider(TestingConstantReport& rep, const Magnitude& m, const TestFunction& ext) {
  ++rep.candidates;
  if (rep.candidates == 1 || m.value() > rep.value) {
    rep.constant = m;
    rep.value = m.value();
    rep.extremizer = ext;
    return true;
  }
  return false;
}

}  // namespace

TestingConstantReport t1_testing_constant(const PerfectForm& form, const HolderTuple& tuple) {
  int n = form.arity(), d = form.dim(), N = form.resolution();
  if (tuple.arity() != n) throw std::invalid_argument("Holder tuple arity differs from form");
  TestingConstantReport rep;
  DyadicTree tree(d, N);
  for (int j = 0; j < n; ++j) {
    for (std::size_t id = 0; id < tree.size(); ++id) {
      DyadicCube P = tree.cube(id);
      std::vector<TestFunction> fs(static_cast<std::size_t>(n), TestFunction::indicator(d, N, P));
      TestFunction ext;
      Magnitude m = testing_ratio(form, tuple, fs, j, P, &ext);
      if (consider(rep, m, ext)) {
        rep.cubes = {P};
        rep.slot = j;
      }
    }
  }
  return rep;
}

TestingConstantReport tb_testing_constant(const PerfectForm& form, const PathCollection& paths,
                                          const BFamily& family, const HolderTuple& tuple, int k) {
  int n = form.arity(), d = form.dim(), N = form.resolution();
  if (tuple.arity() != n || paths.n() != n) throw std::invalid_argument("arity mismatch in T(b) testing");
  TestingConstantReport rep;
  for (const auto& sigma : paths.of_length(k)) {
    for (const auto& t : nested_tuples(sigma, d, N)) {
      const DyadicCube& Qk = t.slot(sigma(k));
      TestFunction one = TestFunction::indicator(d, N, Qk);
      std::vector<TestFunction> fs(static_cast<std::size_t>(n), one);
      for (int l = 1; l < k; ++l) fs[static_cast<std::size_t>(sigma(l) - 1)] = one * family.get(sigma, t.cubes, l);
      TestFunction ext;
      Magnitude m = testing_ratio(form, tuple, fs, sigma(k) - 1, Qk, &ext);
      if (consider(rep, m, ext)) {
        rep.path = sigma;
        rep.cubes = t.cubes;
        rep.slot = sigma(k) - 1;
      }
    }
  }
  return rep;
}

Real certified_norm_bound(const PerfectForm& form) {
  std::optional<Real> best;
  int N = form.resolution();
  if (!form.is_dense()) {
    std::vector<Rational> level_max(static_cast<std::size_t>(N), Rational(0));
    for (const auto& b : form.blocks()) {
      auto& m = level_max[static_cast<std::size_t>(b.cube.level)];
      if (abs(b.coeff) > m) m = abs(b.coeff);
    }
    Rational s = 0;
    for (const auto& m : level_max) s += m;
    best = to_real(s);
  }
  // |form| <= max |K| prod ||f_j||_1 <= max |K| prod ||f_j||_p; only for small kernels.
  double entries = std::pow(static_cast<double>(form.leaf_count()), form.arity());
  if (form.is_dense() || entries <= static_cast<double>(dense_entry_cap())) {
    PerfectForm dense = form.densified();
    Rational m = 0;
    for (const auto& v : dense.kernel())
      if (abs(v) > m) m = abs(v);
    Real b = to_real(m);
    if (!best || b < *best) best = b;
  }
  return *best;
}

NormEstimate full_norm_bracket(const PerfectForm& form, const HolderTuple& tuple, std::uint64_t seed,
                               const BracketOptions& opts) {
  int n = form.arity(), d = form.dim(), N = form.resolution();
  NormEstimate est;
  est.seed = seed;
  est.upper = certified_norm_bound(form);
  std::vector<DyadicCube> supports(static_cast<std::size_t>(n), DyadicCube::root(d));
  auto run = [&](std::vector<TestFunction> start) {
    auto r = alternating_maximize(form, tuple, std::move(start), supports, opts.sweeps);
    est.iterations += static_cast<int>(r.history.size());
    if (!r.monotone) est.monotone = false;
    if (r.value > est.lower) {
      est.lower = r.value;
      est.witness = r.tuple;
    }
  };
  // Haar warm start from the block with the largest coefficient.
  const HaarBlock* top = nullptr;
  for (const auto& b : form.blocks())
    if (!top || abs(b.coeff) > abs(top->coeff)) top = &b;
  if (top) {
    std::vector<TestFunction> start;
    for (int j = 0; j < n; ++j) {
      TestFunction f(d, N);
      const auto& prof = top->profiles[static_cast<std::size_t>(j)];
      DyadicTree tree(d, N);
      for (unsigned c = 0; c < prof.size(); ++c)
        for (auto x : tree.leaves_in(child(top->cube, c))) f[x] = prof[c];
      if (f.is_zero()) f = TestFunction::indicator(d, N, top->cube);
      start.push_back(std::move(f));
    }
    run(std::move(start));
  } else {
    run(std::vector<TestFunction>(static_cast<std::size_t>(n), TestFunction::constant(d, N, 1)));
  }
  Rng rng(seed);
  for (int r = 0; r < opts.restarts; ++r) {
    std::vector<TestFunction> start;
    for (int j = 0; j < n; ++j) {
      TestFunction f(d, N);
      for (std::size_t x = 0; x < f.size(); ++x) f[x] = rng.dyadic(4, 2);
      if (f.is_zero()) f[0] = 1;
      start.push_back(std::move(f));
    }
    run(std::move(start));
  }
  if (est.lower > est.upper * (1 + comparison_slack()))
    throw std::logic_error("norm bracket inverted: search exceeds the certified bound");
  return est;
}

namespace {

using LD = long double;

LD lp_norm_ld(const std::vector<LD>& f, LD p, LD w) {
  LD s = 0;
  for (LD v : f) s += std::pow(std::fabs(v), p);
  return std::pow(s * w, 1 / p);
}

}  // namespace

NormEstimate full_norm_bruteforce(const PerfectForm& form, const HolderTuple& tuple, int max_sweeps) {
  int n = form.arity();
  std::size_t L = form.leaf_count();
  if (L > 8) throw std::invalid_argument("brute force needs at most 8 leaves per slot");
  PerfectForm dense = form.densified();
  std::vector<LD> K;
  K.reserve(dense.kernel().size());
  for (const auto& v : dense.kernel()) K.push_back(static_cast<LD>(v.get_d()));
  LD w = 1.0L / static_cast<LD>(L);
  std::vector<LD> p(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) p[static_cast<std::size_t>(j)] = static_cast<LD>(tuple[j].get_d());

  // Leaf kernel entries times w^n give the form; integrals are values times w.
  auto partial = [&](const std::vector<std::vector<LD>>& f, int slot) {
    std::vector<LD> phi(L, 0);
    for (std::size_t idx = 0; idx < K.size(); ++idx) {
      if (K[idx] == 0) continue;
      LD v = K[idx];
      std::size_t rem = idx, at = 0;
      for (int j = n - 1; j >= 0; --j) {
        std::size_t x = rem % L;
        rem /= L;
        if (j == slot)
          at = x;
        else
          v *= f[static_cast<std::size_t>(j)][x];
      }
      phi[at] += v;
    }
    for (auto& v : phi) v *= std::pow(w, static_cast<LD>(n - 1));
    return phi;
  };
  auto ratio = [&](const std::vector<std::vector<LD>>& f) {
    auto phi = partial(f, 0);
    LD val = 0;
    for (std::size_t x = 0; x < L; ++x) val += phi[x] * f[0][x] * w;
    LD den = 1;
    for (int j = 0; j < n; ++j) den *= lp_norm_ld(f[static_cast<std::size_t>(j)], p[static_cast<std::size_t>(j)], w);
    return den == 0 ? LD(0) : std::fabs(val) / den;
  };

  NormEstimate est;
  int free_slots = n - 1;
  std::size_t patterns_bits = L * static_cast<std::size_t>(free_slots);
  if (patterns_bits > 16) patterns_bits = L;  // sign patterns in slot 0 only
  std::size_t count = std::size_t{1} << patterns_bits;
  LD best = 0;
  for (std::size_t pat = 0; pat < count; ++pat) {
    std::vector<std::vector<LD>> f(static_cast<std::size_t>(n), std::vector<LD>(L, 1));
    for (std::size_t b = 0; b < patterns_bits; ++b)
      if (pat >> b & 1) f[b / L][b % L] = -1;
    LD prev = -1;
    for (int s = 0; s < max_sweeps; ++s) {
      // Update the unseeded slot first so the sign pattern drives the first step.
      for (int j = n - 1; j >= 0; --j) {
        auto phi = partial(f, j);
        LD e = 1 / (p[static_cast<std::size_t>(j)] - 1);
        bool any = false;
        for (std::size_t x = 0; x < L; ++x) {
          LD a = std::pow(std::fabs(phi[x]), e);
          f[static_cast<std::size_t>(j)][x] = phi[x] < 0 ? -a : a;
          if (a != 0) any = true;
        }
        if (!any) f[static_cast<std::size_t>(j)].assign(L, 1);
        LD nrm = lp_norm_ld(f[static_cast<std::size_t>(j)], p[static_cast<std::size_t>(j)], w);
        for (auto& v : f[static_cast<std::size_t>(j)]) v /= nrm;
      }
      ++est.iterations;
      LD cur = ratio(f);
      if (cur <= prev * (1 + 1e-18L)) break;
      prev = cur;
    }
    LD cur = ratio(f);
    if (cur > best) best = cur;
  }
  est.lower = est.upper = Real(static_cast<double>(best));
  return est;
}

GlobalTbReport global_tb_check(const PerfectForm& form, const std::vector<TestFunction>& bs) {
  int n = form.arity(), d = form.dim(), N = form.resolution();
  if (static_cast<int>(bs.size()) != n) throw std::invalid_argument("need one accretive function per slot");
  GlobalTbReport rep;
  std::vector<TestFunction> b;
  for (const auto& f : bs) {
    if (f.resolution() > N || f.dim() != d) throw std::invalid_argument("accretive function finer than the form");
    b.push_back(f.upsampled(N));
  }
  // Below level N every function is constant on cubes, so scanning the tree to N suffices.
  DyadicTree tree(d, N);
  bool first = true;
  for (int j = 0; j < n; ++j) {
    const auto& f = b[static_cast<std::size_t>(j)];
    rep.sup_norm = std::max(rep.sup_norm, sup_norm(f));
    auto ints = cube_integrals(f);
    for (std::size_t id = 0; id < tree.size(); ++id) {
      Rational a = abs(ints[id] / tree.cube(id).volume());
      if (first || a < rep.min_average) {
        rep.min_average = a;
        first = false;
      }
      if (a < 1 && rep.accretive) {
        rep.accretive = false;
        rep.accretivity_witness = tree.cube(id);
        rep.accretivity_slot = j;
      }
    }
  }
  // Weak boundedness; a cube below level N scales the leaf value by a power of its volume.
  const DyadicTree& coarse = tree;
  for (std::size_t id = 0; id < coarse.size(); ++id) {
    DyadicCube Q = coarse.cube(id);
    std::vector<TestFunction> fs;
    for (const auto& f : b) fs.push_back(restrict(f, Q));
    Rational v = abs(eval(form, fs));
    if (!rep.weak_witness || v > rep.weak_sup) {
      rep.weak_witness = Q;
      rep.weak_sup = v;
    }
  }
  // BMO condition tested on Haar functions 1_{child 0} - 1_{child i}.
  for (int j = 0; j < n; ++j) {
    std::vector<TestFunction> fixed = b;
    TestFunction phi = partial_functional(form, j, fixed);
    for (std::size_t id = 0; id < coarse.size(); ++id) {
      DyadicCube Q = coarse.cube(id);
      if (Q.level >= N) continue;
      for (unsigned i = 1; i < coarse.child_count(); ++i) {
        TestFunction g = TestFunction::indicator(d, N, child(Q, 0)) - TestFunction::indicator(d, N, child(Q, i));
        NormValue h1 = h1_norm(g);
        Real r = abs(to_real(inner(phi, g))) / h1.value;
        if (r > rep.bmo_sup) {
          rep.bmo_sup = r;
          rep.bmo_witness = Q;
          rep.bmo_slot = j;
        }
      }
    }
  }
  Real least = 1;
  least = std::max(least, to_real(rep.sup_norm));
  least = std::max(least, to_real(rep.weak_sup));
  least = std::max(least, rep.bmo_sup);
  rep.least_constant = least;
  return rep;
}

BFamily derived_local_family(const std::vector<TestFunction>& bs, const PathCollection& paths, int k,
                             const HolderTuple& tuple, int resolution) {
  if (bs.empty()) throw std::invalid_argument("no functions");
  int d = bs[0].dim();
  // Norm bound: |b 1_Q / [b]_Q| <= ||b||_inf since |[b]_Q| >= 1 is required.
  Rational sup = 1;
  for (const auto& f : bs) sup = std::max(sup, sup_norm(f));
  Rational bound = 1;
  for (const auto& p : tuple.exponents()) {
    mpz_class c;
    mpz_cdiv_q(c.get_mpz_t(), p.get_num_mpz_t(), p.get_den_mpz_t());
    bound = std::max(bound, ipow(sup, c.get_si()));
  }
  BFamily fam(tuple, bound, d, resolution);
  for (const auto& sigma : paths.of_length(k)) {
    for (const auto& t : nested_tuples(sigma, d, resolution)) {
      for (int l = 1; l < k; ++l) {
        BKey key = prefix_key(sigma, t.cubes, l);
        if (fam.find(key)) continue;
        const TestFunction& f = bs[static_cast<std::size_t>(key.slot() - 1)];
        Rational a = average(f, key.cube());
        if (a == 0) throw std::domain_error("vanishing average on " + cube_token(key.cube()));
        fam.insert(key, restrict(f, key.cube()).upsampled(std::max(resolution, f.resolution())) * (Rational(1) / a));
      }
    }
  }
  return fam;
}

}  // namespace dytb
