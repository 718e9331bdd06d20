#include "dytb/forms.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

#include "dytb/rng.hpp"

namespace dytb {

namespace {

std::size_t ipow_size(std::size_t b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

void check_block(const HaarBlock& b, int n, int d, int N) {
  if (b.cube.dim != d) throw std::invalid_argument("block cube dimension mismatch");
  if (b.cube.level >= N) throw std::invalid_argument("block cube " + cube_token(b.cube) + " has no children at resolution " + std::to_string(N));
  if (static_cast<int>(b.profiles.size()) != n) throw std::invalid_argument("block needs one profile per slot");
  bool any_meanzero = false;
  for (const auto& prof : b.profiles) {
    if (prof.size() != (std::size_t{1} << d)) throw std::invalid_argument("profile needs 2^d child values");
    Rational s = 0;
    for (const auto& v : prof) {
      if (abs(v) > 1) throw std::invalid_argument("profile values must lie in [-1, 1]");
      s += v;
    }
    if (s == 0) any_meanzero = true;
  }
  if (!any_meanzero) throw std::invalid_argument("block needs at least one mean-zero profile");
}

std::vector<TestFunction> aligned(const PerfectForm& form, std::span<const TestFunction> fs) {
  if (static_cast<int>(fs.size()) != form.arity())
    throw std::invalid_argument("expected " + std::to_string(form.arity()) + " functions, got " + std::to_string(fs.size()));
  std::vector<TestFunction> out;
  out.reserve(fs.size());
  for (const auto& f : fs) {
    if (f.dim() != form.dim()) throw std::invalid_argument("function dimension differs from form");
    if (f.resolution() > form.resolution()) throw std::invalid_argument("function finer than form resolution");
    out.push_back(f.upsampled(form.resolution()));
  }
  return out;
}

// <f, profile> over the children of the block cube, from node integrals.
Rational pairing(const DyadicTree& tree, const std::vector<Rational>& ints, const HaarBlock& b, int slot) {
  Rational s = 0;
  const auto& prof = b.profiles[static_cast<std::size_t>(slot)];
  for (unsigned i = 0; i < prof.size(); ++i) {
    if (prof[i] == 0) continue;
    s += prof[i] * ints[tree.id(child(b.cube, i))];
  }
  return s;
}

Rational block_scale(const HaarBlock& b, int n) { return b.coeff * ipow(b.cube.volume(), 1 - n); }

}  // namespace

std::size_t dense_entry_cap() {
  if (const char* env = std::getenv("DYTB_MAX_CELLS")) {
    long cells = std::atol(env);
    if (cells > 0) return static_cast<std::size_t>(cells) * static_cast<std::size_t>(cells) * 256;
  }
  return std::size_t{1} << 16;
}

PerfectForm::PerfectForm(int arity, int dim, int resolution)
    : arity_(arity), dim_(dim), resolution_(resolution) {
  if (arity < 2) throw std::invalid_argument("form arity must be at least 2");
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("form dimension out of range");
  if (resolution < 1 || dim * resolution > 20) throw std::invalid_argument("form resolution out of range");
}

PerfectForm PerfectForm::from_blocks(int arity, int dim, int resolution, std::vector<HaarBlock> blocks) {
  PerfectForm f(arity, dim, resolution);
  for (const auto& b : blocks) check_block(b, arity, dim, resolution);
  std::stable_sort(blocks.begin(), blocks.end(),
                   [](const HaarBlock& a, const HaarBlock& b) { return a.cube < b.cube; });
  f.blocks_ = std::move(blocks);
  return f;
}

PerfectForm PerfectForm::from_kernel(int arity, int dim, int resolution, std::vector<Rational> kernel) {
  PerfectForm f(arity, dim, resolution);
  std::size_t want = ipow_size(f.leaf_count(), arity);
  if (want > dense_entry_cap()) throw std::invalid_argument("dense kernel too large");
  if (kernel.size() != want)
    throw std::invalid_argument("kernel needs " + std::to_string(want) + " entries");
  f.kernel_ = std::move(kernel);
  return f;
}

PerfectForm PerfectForm::densified() const {
  if (kernel_) return *this;
  std::size_t L = leaf_count();
  std::size_t total = ipow_size(L, arity_);
  if (total > dense_entry_cap()) throw std::invalid_argument("dense kernel too large");
  std::vector<Rational> K(total, Rational(0));
  DyadicTree tree(dim_, resolution_);
  for (const auto& b : blocks_) {
    Rational s = block_scale(b, arity_);
    // leaves in the block cube, with the child each one falls in
    std::vector<std::pair<std::size_t, unsigned>> leaves;
    for (unsigned i = 0; i < tree.child_count(); ++i)
      for (auto leaf : tree.leaves_in(child(b.cube, i))) leaves.emplace_back(leaf, i);
    std::size_t m = leaves.size();
    std::vector<std::size_t> pos(static_cast<std::size_t>(arity_), 0);
    for (;;) {
      Rational v = s;
      for (int j = 0; j < arity_ && v != 0; ++j)
        v *= b.profiles[static_cast<std::size_t>(j)][leaves[pos[static_cast<std::size_t>(j)]].second];
      if (v != 0) {
        std::size_t idx = 0;
        for (int j = 0; j < arity_; ++j) idx = idx * L + leaves[pos[static_cast<std::size_t>(j)]].first;
        K[idx] += v;
      }
      int j = arity_ - 1;
      while (j >= 0 && ++pos[static_cast<std::size_t>(j)] == m) pos[static_cast<std::size_t>(j--)] = 0;
      if (j < 0) break;
    }
  }
  PerfectForm f(arity_, dim_, resolution_);
  f.kernel_ = std::move(K);
  return f;
}

PerfectForm PerfectForm::scaled(const Rational& s) const {
  PerfectForm f = *this;
  for (auto& b : f.blocks_) b.coeff *= s;
  if (f.kernel_)
    for (auto& k : *f.kernel_) k *= s;
  return f;
}

Rational eval_dense(const PerfectForm& form, std::span<const TestFunction> fs) {
  auto f = aligned(form, fs);
  PerfectForm dense = form.densified();
  const auto& K = dense.kernel();
  std::size_t L = form.leaf_count();
  int n = form.arity();
  Rational sum = 0;
  for (std::size_t idx = 0; idx < K.size(); ++idx) {
    if (K[idx] == 0) continue;
    Rational v = K[idx];
    std::size_t rem = idx;
    for (int j = n - 1; j >= 0 && v != 0; --j) {
      v *= f[static_cast<std::size_t>(j)][rem % L];
      rem /= L;
    }
    sum += v;
  }
  return sum * ipow(f[0].leaf_volume(), n);
}

Rational eval(const PerfectForm& form, std::span<const TestFunction> fs) {
  if (form.is_dense()) return eval_dense(form, fs);
  auto f = aligned(form, fs);
  DyadicTree tree(form.dim(), form.resolution());
  std::vector<std::vector<Rational>> ints;
  for (const auto& g : f) ints.push_back(cube_integrals(g));
  Rational sum = 0;
  for (const auto& b : form.blocks()) {
    Rational v = block_scale(b, form.arity());
    for (int j = 0; j < form.arity() && v != 0; ++j) v *= pairing(tree, ints[static_cast<std::size_t>(j)], b, j);
    sum += v;
  }
  return sum;
}

TestFunction partial_functional(const PerfectForm& form, int slot, std::span<const TestFunction> fixed) {
  int n = form.arity();
  if (slot < 0 || slot >= n) throw std::invalid_argument("slot out of range");
  if (static_cast<int>(fixed.size()) != n) throw std::invalid_argument("partial_functional needs n entries");
  std::vector<TestFunction> f;
  for (int j = 0; j < n; ++j) {
    const TestFunction& g = fixed[static_cast<std::size_t>(j)];
    if (j == slot) {
      f.emplace_back(form.dim(), form.resolution());
    } else {
      if (g.dim() != form.dim() || g.resolution() > form.resolution())
        throw std::invalid_argument("fixed function incompatible with form");
      f.push_back(g.upsampled(form.resolution()));
    }
  }
  TestFunction phi(form.dim(), form.resolution());
  Rational lv = phi.leaf_volume();
  if (form.is_dense()) {
    const auto& K = form.kernel();
    std::size_t L = form.leaf_count();
    for (std::size_t idx = 0; idx < K.size(); ++idx) {
      if (K[idx] == 0) continue;
      Rational v = K[idx];
      std::size_t rem = idx, at = 0;
      for (int j = n - 1; j >= 0; --j) {
        std::size_t x = rem % L;
        rem /= L;
        if (j == slot)
          at = x;
        else if (v != 0)
          v *= f[static_cast<std::size_t>(j)][x];
      }
      if (v != 0) phi[at] += v;
    }
    phi *= ipow(lv, n - 1);
    return phi;
  }
  DyadicTree tree(form.dim(), form.resolution());
  std::vector<std::vector<Rational>> ints(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    if (j != slot) ints[static_cast<std::size_t>(j)] = cube_integrals(f[static_cast<std::size_t>(j)]);
  for (const auto& b : form.blocks()) {
    Rational v = block_scale(b, n);
    for (int j = 0; j < n && v != 0; ++j)
      if (j != slot) v *= pairing(tree, ints[static_cast<std::size_t>(j)], b, j);
    if (v == 0) continue;
    const auto& prof = b.profiles[static_cast<std::size_t>(slot)];
    for (unsigned i = 0; i < prof.size(); ++i) {
      if (prof[i] == 0) continue;
      Rational w = v * prof[i];
      for (auto leaf : tree.leaves_in(child(b.cube, i))) phi[leaf] += w;
    }
  }
  return phi;
}

TestFunction dual_direction(const TestFunction& phi, const Rational& p, bool* exact) {
  Rational e = Rational(1) / (p - 1);  // p' - 1
  TestFunction g(phi.dim(), phi.resolution());
  bool ok = true;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const Rational& v = phi[i];
    if (v == 0) continue;
    Rational a = abs(v);
    Rational m;
    if (auto q = exact_pow(a, e)) {
      m = *q;
    } else {
      ok = false;
      m = round_to_dyadic(real_pow(a, e), 64);
    }
    g[i] = v < 0 ? Rational(-m) : m;
  }
  if (exact) *exact = ok;
  return g;
}

DualNorm dual_norm(const TestFunction& phi, const Rational& p) {
  if (p <= 1) throw std::invalid_argument("dual_norm needs p > 1");
  Rational q = conjugate_exponent(p);
  DualNorm out;
  out.value = lp_norm(phi, q);
  if (out.value.is_zero()) {
    out.extremizer = TestFunction::constant(phi.dim(), phi.resolution(), 1);
    out.exact = true;
    return out;
  }
  bool exact = false;
  TestFunction dir = dual_direction(phi, p, &exact);
  // ||phi||_{q}^{q-1} = (||phi||_q^q)^((q-1)/q)
  std::optional<Rational> scale;
  if (exact && out.value.power) scale = exact_pow(*out.value.power, (q - 1) / q);
  if (scale) {
    dir *= Rational(1) / *scale;
    out.extremizer = std::move(dir);
    out.exact = true;
    return out;
  }
  Real s = real_pow(out.value.value, q - 1);
  TestFunction g(phi.dim(), phi.resolution());
  for (std::size_t i = 0; i < phi.size(); ++i)
    if (dir[i] != 0) g[i] = round_to_dyadic(to_real(dir[i]) / s, 64);
  out.extremizer = std::move(g);
  out.exact = false;
  return out;
}

MeanZeroDual meanzero_dual_norm(const TestFunction& phi, const Rational& p, const DyadicCube& cube) {
  if (p <= 1) throw std::invalid_argument("meanzero_dual_norm needs p > 1");
  Rational q = conjugate_exponent(p);
  TestFunction f = phi.upsampled(std::max(phi.resolution(), cube.level));
  DyadicTree tree(f.dim(), f.resolution());
  auto leaves = tree.leaves_in(cube);
  Rational lv = f.leaf_volume();
  MeanZeroDual out;
  Rational lo = f[leaves[0]], hi = lo, sum = 0;
  for (auto i : leaves) {
    lo = std::min(lo, f[i]);
    hi = std::max(hi, f[i]);
    sum += f[i];
  }
  if (lo == hi) {
    out.value = NormValue::from_power(0, q);
    out.lower = 0;
    out.center = to_real(lo);
    out.exact = true;
    return out;
  }
  if (q == 2) {
    Rational c = sum / static_cast<long>(leaves.size());
    Rational s = 0;
    for (auto i : leaves) {
      Rational d = f[i] - c;
      s += d * d;
    }
    out.value = NormValue::from_power(s * lv, 2);
    out.lower = out.value.value;
    out.center = to_real(c);
    out.exact = true;
    return out;
  }
  std::vector<Real> v;
  v.reserve(leaves.size());
  for (auto i : leaves) v.push_back(to_real(f[i]));
  Real w = to_real(lv);
  Real qr = to_real(q);
  auto G = [&](const Real& c) {
    Real s = 0;
    for (const auto& x : v) s += real_pow(Real(abs(x - c)), q);
    return s * w;
  };
  auto dG = [&](const Real& c) {
    Real s = 0;
    for (const auto& x : v) {
      Real d = x - c;
      if (d == 0) continue;
      Real m = real_pow(Real(abs(d)), q - 1);
      s += d > 0 ? -m : m;
    }
    return s * w * qr;
  };
  Real a = to_real(lo), b = to_real(hi);
  for (unsigned it = 0; it < precision_bits() + 8; ++it) {
    Real m = (a + b) / 2;
    if (m == a || m == b) break;
    if (dG(m) < 0)
      a = m;
    else
      b = m;
  }
  Real m = (a + b) / 2;
  Real gm = G(m);
  Real slope = abs(dG(m));
  Real lower = gm - slope * (b - a);
  if (lower < 0) lower = 0;
  out.value = NormValue::from_real(real_pow(gm, Rational(1) / q), q);
  out.lower = real_pow(lower, Rational(1) / q);
  out.center = m;
  out.exact = false;
  return out;
}

// ---- validators -----------------------------------------------------------

ValidationReport validate_smoothness(const PerfectForm& form) {
  ValidationReport rep;
  rep.axiom = "smoothness";
  int n = form.arity(), d = form.dim(), N = form.resolution();
  std::size_t L = form.leaf_count();
  DyadicTree tree(d, N);
  auto leaf_fn = [&](std::size_t leaf) {
    TestFunction g(d, N);
    g[leaf] = 1;
    return g;
  };
  std::size_t checks = 0;
  for (int level = 0; level < N; ++level) {
    for (std::size_t k = 0; k < tree.level_count(level); ++k) {
      DyadicCube P = DyadicCube::from_linear(d, level, k);
      auto inside = tree.leaves_in(P);
      std::vector<std::size_t> outside;
      for (std::size_t x = 0; x < L; ++x)
        if (!std::binary_search(inside.begin(), inside.end(), x)) outside.push_back(x);
      if (outside.empty()) continue;
      for (unsigned c = 1; c < tree.child_count(); ++c) {
        TestFunction h = TestFunction::indicator(d, N, child(P, 0)) - TestFunction::indicator(d, N, child(P, c));
        for (int j = 0; j < n; ++j) {
          for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            std::vector<int> rest;
            for (int m = 0; m < n; ++m)
              if (m != i && m != j) rest.push_back(m);
            for (auto x : outside) {
              std::vector<TestFunction> fs(static_cast<std::size_t>(n), TestFunction(d, N));
              fs[static_cast<std::size_t>(j)] = h;
              fs[static_cast<std::size_t>(i)] = leaf_fn(x);
              if (rest.empty()) {
                ++checks;
                if (eval(form, fs) != 0) {
                  rep.pass = false;
                  rep.witness_cube = P;
                  rep.witness = fs;
                  rep.detail = "nonzero value with mean-zero slot " + std::to_string(j + 1) +
                               " and vanishing slot " + std::to_string(i + 1);
                  return rep;
                }
                continue;
              }
              int last = rest.back();
              std::size_t combos = ipow_size(L, static_cast<int>(rest.size()) - 1);
              for (std::size_t combo = 0; combo < combos; ++combo) {
                std::size_t rem = combo;
                for (std::size_t r = 0; r + 1 < rest.size(); ++r) {
                  fs[static_cast<std::size_t>(rest[r])] = leaf_fn(rem % L);
                  rem /= L;
                }
                ++checks;
                TestFunction phi = partial_functional(form, last, fs);
                if (!phi.is_zero()) {
                  std::size_t at = 0;
                  while (phi[at] == 0) ++at;
                  fs[static_cast<std::size_t>(last)] = leaf_fn(at);
                  rep.pass = false;
                  rep.witness_cube = P;
                  rep.witness = fs;
                  rep.detail = "nonzero value with mean-zero slot " + std::to_string(j + 1) +
                               " and vanishing slot " + std::to_string(i + 1);
                  return rep;
                }
              }
            }
          }
        }
      }
    }
  }
  rep.detail = std::to_string(checks) + " spanning checks, all exactly zero";
  return rep;
}

std::vector<DecayTerms> decay_terms(const PerfectForm& form) {
  std::vector<DecayTerms> out;
  int n = form.arity(), d = form.dim(), N = form.resolution();
  DyadicTree tree(d, N);
  for (int level = 0; level < N; ++level) {
    for (std::size_t k = 0; k < tree.level_count(level); ++k) {
      DecayTerms t{DyadicCube::from_linear(d, level, k), 0, 0};
      for (const auto& b : form.blocks()) {
        if (b.cube == t.cube) {
          t.here_sum += abs(b.coeff);
        } else if (strictly_contains(b.cube, t.cube)) {
          t.ancestor_sum += abs(b.coeff) * ipow(t.cube.volume() / b.cube.volume(), n - 1);
        }
      }
      out.push_back(std::move(t));
    }
  }
  return out;
}

namespace {

// Exponent e in 2^(-d e) for the two slots sitting on distinct children: the pair
// with the largest 1/p_a + 1/p_b.
Rational split_exponent(const HolderTuple& tuple) {
  std::vector<Rational> inv;
  for (const auto& p : tuple.exponents()) inv.push_back(Rational(1) / p);
  std::sort(inv.begin(), inv.end(), [](const Rational& a, const Rational& b) { return a > b; });
  return 2 - inv[0] - inv[1];
}

Magnitude holder_ratio_magnitude(const PerfectForm& form, const HolderTuple& tuple,
                                 std::span<const TestFunction> fs) {
  Rational v = abs(eval(form, fs));
  if (v == 0) return Magnitude::of(0);
  Magnitude den = Magnitude::of(1);
  for (int j = 0; j < form.arity(); ++j) {
    NormValue nv = lp_norm(fs[static_cast<std::size_t>(j)], tuple[j]);
    if (nv.is_zero()) return Magnitude::of(0);
    den = den * nv.magnitude();
  }
  return Magnitude::of(v) * den.pow(-1);
}

}  // namespace

Real holder_ratio(const PerfectForm& form, const HolderTuple& tuple, std::span<const TestFunction> fs) {
  return holder_ratio_magnitude(form, tuple, fs).value();
}

AlternatingResult alternating_maximize(const PerfectForm& form, const HolderTuple& tuple,
                                       std::vector<TestFunction> start,
                                       const std::vector<DyadicCube>& supports, int sweeps) {
  int n = form.arity();
  AlternatingResult res;
  std::vector<TestFunction> cur;
  for (int j = 0; j < n; ++j) cur.push_back(restrict(start[static_cast<std::size_t>(j)], supports[static_cast<std::size_t>(j)]).upsampled(form.resolution()));
  Magnitude val = holder_ratio_magnitude(form, tuple, cur);
  res.value = val.value();
  res.tuple = cur;
  res.history.push_back(res.value);
  Real tiny = ldexp(Real(1), -40);
  for (int s = 0; s < sweeps; ++s) {
    Real before = res.value;
    for (int j = 0; j < n; ++j) {
      TestFunction phi = restrict(partial_functional(form, j, cur), supports[static_cast<std::size_t>(j)]);
      if (phi.is_zero()) continue;
      bool exact = false;
      TestFunction g = dual_direction(phi, tuple[j], &exact);
      std::size_t bits = 0;
      for (const auto& x : g.values())
        bits = std::max(bits, mpz_sizeinbase(x.get_num_mpz_t(), 2) + mpz_sizeinbase(x.get_den_mpz_t(), 2));
      if (bits > 2048) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = round_to_dyadic(to_real(g[i]), 64);
        exact = false;
      }
      if (!exact) res.exact_steps = false;
      cur[static_cast<std::size_t>(j)] = std::move(g);
      Magnitude nv = holder_ratio_magnitude(form, tuple, cur);
      if (certified_ge(nv, val) == Certainty::no) res.monotone = false;
      val = nv;
      res.history.push_back(val.value());
      if (val.value() > res.value) {
        res.value = val.value();
        res.tuple = cur;
      }
    }
    if (res.value <= before * (1 + tiny)) break;
  }
  return res;
}

ValidationReport validate_decay(const PerfectForm& form, const HolderTuple& tuple, const DecayOptions& opts) {
  ValidationReport rep;
  rep.axiom = "decay";
  int n = form.arity(), d = form.dim(), N = form.resolution();
  if (tuple.arity() != n) throw std::invalid_argument("Holder tuple arity differs from form");
  Rational e = split_exponent(tuple);
  PowerProduct weight = PowerProduct::power(2, -d * e);
  auto w_exact = weight.rational();
  Real worst = 0;
  std::optional<Rational> worst_exact = w_exact ? std::optional<Rational>(0) : std::nullopt;
  DyadicTree tree(d, N);
  if (!form.is_dense()) {
    for (const auto& t : decay_terms(form)) {
      Real b = to_real(t.ancestor_sum) + to_real(t.here_sum) * weight.value();
      if (worst_exact) worst_exact = std::max(*worst_exact, Rational(t.ancestor_sum + t.here_sum * *w_exact));
      bool ok = t.ancestor_sum <= 1;
      if (ok) {
        auto o = try_compare(PowerProduct(t.here_sum) * weight, PowerProduct(1 - t.ancestor_sum));
        ok = o ? (*o <= 0) : (b <= 1 - comparison_slack());
      }
      if (b > worst) worst = b;
      if (!ok && rep.pass) {
        rep.pass = false;
        rep.witness_cube = t.cube;
      }
    }
  } else {
    // |form| <= max|K| prod ||f_j||_1 over the relevant region.
    const auto& K = form.kernel();
    std::size_t L = form.leaf_count();
    for (int level = 0; level < N; ++level) {
      for (std::size_t k = 0; k < tree.level_count(level); ++k) {
        DyadicCube P = DyadicCube::from_linear(d, level, k);
        Rational M = 0;
        auto inside = tree.leaves_in(P);
        std::vector<int> pos(L, -1);
        for (auto x : inside) pos[x] = static_cast<int>(child_position(ancestor_at(DyadicCube::from_linear(d, N, x), level + 1)));
        for (std::size_t idx = 0; idx < K.size(); ++idx) {
          if (K[idx] == 0) continue;
          std::size_t rem = idx;
          std::vector<int> cp(static_cast<std::size_t>(n));
          bool in = true;
          for (int j = n - 1; j >= 0; --j) {
            int c = pos[rem % L];
            rem /= L;
            if (c < 0) {
              in = false;
              break;
            }
            cp[static_cast<std::size_t>(j)] = c;
          }
          if (!in) continue;
          bool split = false;
          for (int a = 0; a < n && !split; ++a)
            for (int b = a + 1; b < n; ++b)
              if (cp[static_cast<std::size_t>(a)] != cp[static_cast<std::size_t>(b)]) split = true;
          if (split) M = std::max(M, Rational(abs(K[idx])));
        }
        PowerProduct bound = PowerProduct(M * ipow(P.volume(), n - 1)) * weight;
        Real b = bound.value();
        if (worst_exact) worst_exact = std::max(*worst_exact, Rational(M * ipow(P.volume(), n - 1) * *w_exact));
        auto o = try_compare(bound, PowerProduct(1));
        bool ok = o ? (*o <= 0) : (b <= 1 - comparison_slack());
        if (b > worst) worst = b;
        if (!ok && rep.pass) {
          rep.pass = false;
          rep.witness_cube = P;
        }
      }
    }
  }
  rep.certified_bound = worst;
  rep.certified_bound_exact = worst_exact;
  if (opts.empirical) {
    Real best = 0;
    for (int level = 0; level < N; ++level) {
      for (std::size_t k = 0; k < tree.level_count(level); ++k) {
        DyadicCube P = DyadicCube::from_linear(d, level, k);
        for (int a = 0; a < n; ++a) {
          for (int b = a + 1; b < n; ++b) {
            for (unsigned c1 = 0; c1 < tree.child_count(); ++c1) {
              for (unsigned c2 = 0; c2 < tree.child_count(); ++c2) {
                if (c1 == c2) continue;
                std::vector<DyadicCube> sup(static_cast<std::size_t>(n), P);
                sup[static_cast<std::size_t>(a)] = child(P, c1);
                sup[static_cast<std::size_t>(b)] = child(P, c2);
                std::vector<TestFunction> start;
                for (const auto& s : sup) start.push_back(TestFunction::indicator(d, N, s));
                auto r = alternating_maximize(form, tuple, start, sup, opts.sweeps);
                if (r.value > best) {
                  best = r.value;
                  if (rep.pass) {
                    rep.witness = r.tuple;
                  }
                }
              }
            }
          }
        }
      }
    }
    rep.empirical_lower = best;
  }
  rep.detail = rep.pass ? "certified decay bound at most 1" : "certified decay bound exceeds 1 at " + cube_token(*rep.witness_cube);
  return rep;
}

// ---- generator ------------------------------------------------------------

PerfectForm generate(int n, int d, int N, double density, std::uint64_t seed, const GenerateOptions& opts) {
  if (n < 2 || N < 1) throw std::invalid_argument("generate needs n >= 2 and N >= 1");
  Rng rng(seed);
  std::vector<HaarBlock> blocks;
  unsigned m = 1u << d;
  int min_mz = std::clamp(opts.min_meanzero, 1, n);
  for (int level = 0; level < N; ++level) {
    std::size_t count = std::size_t{1} << (d * level);
    for (std::size_t k = 0; k < count; ++k) {
      if (!rng.bernoulli(density)) continue;
      HaarBlock b;
      b.cube = DyadicCube::from_linear(d, level, k);
      long a = rng.uniform_int(1, opts.coeff_range);
      if (rng.bernoulli(0.5)) a = -a;
      b.coeff = Rational(a) * two_pow(-rng.uniform_int(0, 2));
      std::vector<int> slots(static_cast<std::size_t>(n));
      std::iota(slots.begin(), slots.end(), 0);
      for (int i = n - 1; i > 0; --i) std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(rng.uniform_int(0, i))]);
      int mz = static_cast<int>(rng.uniform_int(min_mz, n));
      b.profiles.assign(static_cast<std::size_t>(n), std::vector<Rational>(m));
      for (int t = 0; t < n; ++t) {
        auto& prof = b.profiles[static_cast<std::size_t>(slots[static_cast<std::size_t>(t)])];
        if (t < mz) {
          for (;;) {
            Rational mean = 0;
            for (auto& v : prof) {
              v = fraction(rng.uniform_int(-2, 2), 2);
              mean += v;
            }
            mean /= static_cast<long>(m);
            Rational mx = 0;
            for (auto& v : prof) {
              v -= mean;
              mx = std::max(mx, Rational(abs(v)));
            }
            if (mx == 0) continue;
            if (mx > 1)
              for (auto& v : prof) v /= mx;
            break;
          }
        } else {
          for (auto& v : prof) v = fraction(rng.uniform_int(-2, 2), 2);
        }
      }
      blocks.push_back(std::move(b));
    }
  }
  PerfectForm form = PerfectForm::from_blocks(n, d, N, std::move(blocks));
  // Q = P weight 2^-d covers every Holder tuple.
  Rational worst = 0, w = two_pow(-d);
  for (const auto& t : decay_terms(form)) worst = std::max(worst, Rational(t.ancestor_sum + t.here_sum * w));
  if (worst > 1) form = form.scaled(Rational(1) / worst);
  return form;
}

}  // namespace dytb
