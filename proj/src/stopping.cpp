#include "dytb/stopping.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace dytb {

namespace {

// floor(x 2^bits) / 2^bits
Rational floor_dyadic(const Real& x, unsigned bits) {
  Rational scaled = to_rational(x) * two_pow(bits);
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
  return Rational(f) * two_pow(-static_cast<long>(bits));
}

Rational ceil_dyadic(const Real& x, unsigned bits) {
  Rational scaled = to_rational(x) * two_pow(bits);
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
  return Rational(c) * two_pow(-static_cast<long>(bits));
}

// Integral of |f|^p over P.
Magnitude power_integral(const TestFunction& f, const Rational& p, const DyadicCube& P) {
  NormValue nv = lp_norm(f, p, P);
  if (nv.power) return Magnitude::of(*nv.power);
  return Magnitude::approx(real_pow(nv.value, p));
}

Magnitude mz_magnitude(const MeanZeroDual& m) {
  if (m.exact) return m.value.magnitude();
  return Magnitude::approx(m.lower);
}

bool fires(const Magnitude& lhs, const Magnitude& rhs) { return certified_ge(lhs, rhs) == Certainty::yes; }

// Maximal cubes inside base (down to `depth`) where pred holds, found top-down.
CubeSet maximal_where(const DyadicCube& base, int depth, const std::function<bool(const DyadicCube&)>& pred) {
  CubeSet out;
  std::vector<DyadicCube> stack{base};
  while (!stack.empty()) {
    DyadicCube c = stack.back();
    stack.pop_back();
    if (pred(c)) {
      out.insert(c);
      continue;
    }
    if (c.level < depth) {
      auto ch = children(c);
      for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
  }
  return out;
}

std::vector<DyadicCube> cubes_below(const DyadicCube& base, int depth) {
  DyadicTree tree(base.dim, depth);
  std::vector<DyadicCube> out;
  for (auto id : tree.subtree(base)) out.push_back(tree.cube(id));
  return out;
}

// Cubes inside the fifth collection: inside at least 2^d/eps parents of `mean_cubes`.
CubeSet parent_count_collection(const DyadicCube& base, int depth, const CubeSet& mean_cubes, const Rational& eps) {
  CubeSet parents;
  for (const auto& c : mean_cubes)
    if (c.level > 0) parents.insert(parent(c));
  Rational need = two_pow(base.dim) / eps;
  return maximal_where(base, depth, [&](const DyadicCube& c) {
    long count = 0;
    for (const auto& p : parents)
      if (contains(p, c)) ++count;
    return Rational(count) >= need;
  });
}

// Not strictly inside any merged cube.
bool outside_children(const CubeSet& merged, const DyadicCube& c) { return !merged.covers_strictly(c); }

void finish_packing(StoppingResult& res, const std::array<Rational, 5>& limits) {
  CubeSet all;
  for (const auto& part : res.parts)
    for (const auto& c : part) all.insert(c);
  res.merged = maximal_cubes(all);
  res.packed = res.merged.total_volume();
  res.ratio = res.packed / res.base.volume();
  for (std::size_t i = 0; i < 5; ++i) {
    auto& a = res.accounting[i];
    a.measure = res.parts[i].total_volume();
    a.limit = limits[i] * res.base.volume();
    a.pass = a.measure <= a.limit;
  }
}

Certificate norm_certificate(const std::string& name, const std::vector<DyadicCube>& cubes, const CubeSet& merged,
                             const TestFunction& f, const Rational& p, const DyadicCube& ref, const Rational& limit,
                             bool asserted = true) {
  Certificate cert;
  cert.name = name;
  cert.limit = to_real(limit);
  cert.asserted = asserted;
  Magnitude total = power_integral(f, p, ref);
  if (total.value() == 0) return cert;
  Real scale = total.value() / to_real(ref.volume());
  for (const auto& P : cubes) {
    if (!outside_children(merged, P)) continue;
    Real r = power_integral(f, p, P).value() / to_real(P.volume()) / scale;
    if (r > cert.measured) {
      cert.measured = r;
      cert.witness = P;
    }
  }
  cert.pass = !asserted || cert.measured <= cert.limit * (1 + comparison_slack());
  return cert;
}

Certificate mean_certificate(const std::string& name, const std::vector<DyadicCube>& cubes, const CubeSet& mean_part,
                             const TestFunction& special) {
  Certificate cert;
  cert.name = name;
  cert.limit = Real(1) / 8;
  bool first = true;
  for (const auto& P : cubes) {
    if (mean_part.covers(P)) continue;
    Real a = to_real(abs(average(special, P)));
    if (first || a < cert.measured) {
      cert.measured = a;
      cert.witness = P;
      first = false;
    }
  }
  cert.pass = first || cert.measured > cert.limit;
  return cert;
}

}  // namespace

Rational epsilon(const HolderTuple& tuple, const Rational& bound) {
  if (bound < 1) throw std::invalid_argument("testing bound must be at least 1");
  std::optional<Rational> best;
  for (const auto& p : tuple.exponents()) {
    Rational e1 = p / (p - 1);
    Rational e2 = Rational(-1) / (p - 1);
    auto a = exact_pow(Rational(7, 8), e1);
    auto b = exact_pow(bound, e2);
    Rational term;
    if (a && b) {
      term = *a * *b;
    } else {
      // 128-bit value floored to 64 bits, then one more unit down for safety.
      Real x = real_pow(Rational(7, 8), e1) * real_pow(bound, e2);
      term = floor_dyadic(x, 64) - two_pow(-64);
    }
    if (!best || term < *best) best = term;
  }
  return *best / 8;
}

StoppingContext make_context(const StepData& step) {
  int n = step.form.arity(), N = step.form.resolution(), k = step.k;
  if (step.tuple.arity() != n || step.paths.n() != n) throw std::invalid_argument("arity mismatch");
  if (k < 1 || k + 1 > n) throw std::invalid_argument("step needs 1 <= k < n");
  if (step.sigma.length() != k + 1 || step.tau.length() != k + 1) throw std::invalid_argument("paths must have length k+1");
  Path swapped = step.sigma;
  std::swap(swapped.values[static_cast<std::size_t>(k - 1)], swapped.values[static_cast<std::size_t>(k)]);
  if (!(swapped == step.tau)) throw std::invalid_argument("tau must swap the last two values of sigma");
  if (!step.paths.contains(step.sigma) || !step.paths.contains(step.tau))
    throw std::invalid_argument("paths not in the collection");
  std::string why;
  if (!validate_nested({step.sigma, step.cubes}, &why)) throw std::invalid_argument("cubes not nested: " + why);
  if (step.family.resolution() > N || step.g.resolution() > N)
    throw std::invalid_argument("data finer than the form");

  StoppingContext ctx;
  ctx.step = &step;
  ctx.eps = epsilon(step.tuple, step.bound);
  ctx.slot_g = step.sigma(k) - 1;
  ctx.slot_h = step.sigma(k + 1) - 1;
  ctx.resolution = N;
  ctx.base = step.cubes[static_cast<std::size_t>(ctx.slot_g)];
  if (!(step.cubes[static_cast<std::size_t>(ctx.slot_h)] == ctx.base))
    throw std::invalid_argument("the last two path cubes must agree");
  int d = step.form.dim();
  TestFunction one = TestFunction::indicator(d, N, ctx.base);
  ctx.fs.assign(static_cast<std::size_t>(n), one);
  for (int l = 1; l < k; ++l)
    ctx.fs[static_cast<std::size_t>(step.sigma(l) - 1)] = (one * step.family.get(step.sigma, step.cubes, l)).upsampled(N);
  ctx.fs[static_cast<std::size_t>(ctx.slot_g)] = restrict(step.g, ctx.base).upsampled(N);
  ctx.u = step.family.get(step.sigma, step.cubes, k).upsampled(N);
  ctx.F = Magnitude::of(1);
  for (int j = 0; j < n; ++j) {
    if (j == ctx.slot_g || j == ctx.slot_h) continue;
    ctx.F = ctx.F * lp_norm(ctx.fs[static_cast<std::size_t>(j)], step.tuple[j]).magnitude();
  }
  return ctx;
}

Rational local_form(const StoppingContext& ctx, const DyadicCube& P, const TestFunction& a, const TestFunction& b) {
  std::vector<TestFunction> fs;
  fs.reserve(ctx.fs.size());
  for (std::size_t j = 0; j < ctx.fs.size(); ++j) {
    int s = static_cast<int>(j);
    const TestFunction& f = s == ctx.slot_h ? a : s == ctx.slot_g ? b : ctx.fs[j];
    fs.push_back(restrict(f, P).upsampled(ctx.resolution));
  }
  return eval(ctx.step->form, fs);
}

std::vector<DyadicCube> chain_to(const StoppingContext& ctx, const DyadicCube& P) {
  const StepData& st = *ctx.step;
  std::vector<DyadicCube> cubes(st.cubes.size(), P);
  for (int l = 1; l < st.k; ++l) {
    auto s = static_cast<std::size_t>(st.sigma(l) - 1);
    cubes[s] = st.cubes[s];
  }
  return cubes;
}

namespace {

// Partial functional in `free_slot` with the other stopping slots fixed, everything cut to P.
TestFunction local_partial(const StoppingContext& ctx, const DyadicCube& P, int free_slot, const TestFunction& other) {
  std::vector<TestFunction> fs;
  for (std::size_t j = 0; j < ctx.fs.size(); ++j) {
    int s = static_cast<int>(j);
    if (s == free_slot) {
      fs.emplace_back(ctx.step->form.dim(), ctx.resolution);
      continue;
    }
    const TestFunction& f = (s == ctx.slot_g || s == ctx.slot_h) ? other : ctx.fs[j];
    fs.push_back(restrict(f, P).upsampled(ctx.resolution));
  }
  return partial_functional(ctx.step->form, free_slot, fs);
}

Rational nonzero_norms_n(const StoppingContext& ctx) { return Rational(static_cast<long>(ctx.fs.size())); }

}  // namespace

StoppingResult first_stopping(const StoppingContext& ctx) {
  const StepData& st = *ctx.step;
  const DyadicCube& Q = ctx.base;
  int N = ctx.resolution, d = st.form.dim();
  const Rational& eps = ctx.eps;
  Rational inv = 1 / eps;
  Rational q = st.tuple[ctx.slot_g], r = st.tuple[ctx.slot_h];
  Rational n = nonzero_norms_n(ctx);
  StoppingResult res;
  res.base = Q;
  res.special = ctx.u;
  Magnitude volQ = Magnitude::of(Q.volume());

  std::vector<Magnitude> totals;
  for (std::size_t j = 0; j < ctx.fs.size(); ++j)
    totals.push_back(power_integral(ctx.fs[j], st.tuple[static_cast<int>(j)], Q));
  Magnitude u_total = power_integral(ctx.u, q, Q);
  Magnitude u_norm = lp_norm(ctx.u, q).magnitude();

  res.parts[0] = maximal_where(Q, N, [&](const DyadicCube& P) {
    for (std::size_t j = 0; j < ctx.fs.size(); ++j) {
      if (totals[j].value() == 0) continue;
      Magnitude lhs = power_integral(ctx.fs[j], st.tuple[static_cast<int>(j)], P) * volQ;
      Magnitude rhs = Magnitude::of(n * inv * P.volume()) * totals[j];
      if (fires(lhs, rhs)) return true;
    }
    return false;
  });
  res.parts[1] = maximal_where(Q, N, [&](const DyadicCube& P) {
    if (u_total.value() == 0) return false;
    return fires(power_integral(ctx.u, q, P) * volQ, Magnitude::of(inv * P.volume()) * u_total);
  });
  bool F_zero = ctx.F.value() == 0;
  res.parts[2] = maximal_where(Q, N, [&](const DyadicCube& P) {
    if (F_zero || P.level >= N) return false;
    auto mz = meanzero_dual_norm(local_partial(ctx, P, ctx.slot_h, ctx.u), r, P);
    Magnitude rhs = Magnitude::of(st.bound * inv) * ctx.F *
                    Magnitude(PowerProduct::power(P.volume() / Q.volume(), 1 - 1 / r)) * u_norm;
    return fires(mz_magnitude(mz), rhs);
  });
  res.parts[3] = maximal_where(Q, N, [&](const DyadicCube& P) { return abs(average(ctx.u, P)) <= Rational(1, 8); });
  res.parts[4] = parent_count_collection(Q, N, res.parts[3], eps);
  finish_packing(res, {eps, eps, eps, 1 - 8 * eps, eps});
  res.packing_ok = res.packed <= (1 - eps) * Q.volume();

  // Derived bounds on the cubes that are not inside a child of a stopping cube.
  auto cubes = cubes_below(Q, N);
  Rational spread = two_pow(d);
  for (std::size_t j = 0; j < ctx.fs.size(); ++j)
    res.certificates.push_back(norm_certificate("norm_f[" + std::to_string(j + 1) + "]", cubes, res.merged,
                                                ctx.fs[j], st.tuple[static_cast<int>(j)], Q, spread * n * inv));
  res.certificates.push_back(norm_certificate("norm_u", cubes, res.merged, ctx.u, q, Q, spread * inv));
  {
    Certificate cert;
    cert.name = "dual_g";
    cert.limit = to_real(st.bound * inv);
    if (!F_zero) {
      Real unorm = u_norm.value();
      for (const auto& P : cubes) {
        if (res.merged.covers(P) || P.level >= N) continue;
        auto mz = meanzero_dual_norm(local_partial(ctx, P, ctx.slot_h, ctx.u), r, P);
        Real den = ctx.F.value() * real_pow(P.volume() / Q.volume(), 1 - 1 / r) * unorm;
        Real ratio = mz.value.value / den;
        if (ratio > cert.measured) {
          cert.measured = ratio;
          cert.witness = P;
        }
      }
    }
    cert.pass = cert.measured <= cert.limit * (1 + comparison_slack());
    res.certificates.push_back(cert);
  }
  res.certificates.push_back(mean_certificate("mean_u", cubes, res.parts[3], ctx.u));
  return res;
}

PrunedFunction prune(const TestFunction& f, const TestFunction& special, const DyadicCube& base,
                     const StoppingResult& res, const Rational& p) {
  PrunedFunction out;
  const CubeSet& mean_part = res.parts[3];
  auto ratio = [&](const DyadicCube& P) -> std::optional<Rational> {
    Rational a = average(special, P);
    if (a == 0) {
      out.detail = "vanishing average of the special function on " + cube_token(P);
      return std::nullopt;
    }
    return average(f, P) / a;
  };
  TestFunction fb = restrict(f, base);
  TestFunction value = fb - special * average(fb, base);
  CubeSet stopped_mean;
  for (const auto& P : res.merged) {
    if (mean_part.contains(P)) {
      stopped_mean.insert(P);
      value -= restrict(f, P);
    } else {
      value -= restrict(f, P);
      if (auto c = ratio(P)) value += restrict(special, P) * *c;
    }
  }
  for (const auto& P : stopped_mean) {
    if (P.level == 0 || P == base) continue;
    out.parents.insert(parent(P));
  }
  for (const auto& Pb : out.parents)
    for (const auto& c : children(Pb))
      if (!stopped_mean.contains(c)) out.siblings.insert(c);
  for (const auto& P : out.parents)
    if (auto c = ratio(P)) value += restrict(special, P) * *c;
  for (const auto& P : out.siblings)
    if (auto c = ratio(P)) value -= restrict(special, P) * *c;
  out.mean_zero = integral(value, base) == 0 && out.detail.empty();
  out.supported = restrict(value, base) == value;
  Real den = lp_norm(fb, p).value;
  if (den > 0) out.norm_ratio = real_pow(Real(lp_norm(value, p).value / den), p);
  out.value = std::move(value);
  return out;
}

PrunedFunction prune_g(const StoppingContext& ctx, const StoppingResult& first) {
  return prune(ctx.fs[static_cast<std::size_t>(ctx.slot_g)], ctx.u, ctx.base, first, ctx.step->tuple[ctx.slot_g]);
}

BufferReport buffer_functions(const StoppingContext& ctx, const StoppingResult& res, const PrunedFunction& pruned,
                              Side side, const TestFunction& data, const Path& path) {
  (void)side;
  const StepData& st = *ctx.step;
  int d = st.form.dim();
  BufferReport rep;
  rep.overlap_limit = two_pow(d) / ctx.eps;
  const TestFunction& s = res.special;
  for (const auto& P : pruned.parents) {
    Rational aP = average(s, P);
    TestFunction xi(d, ctx.resolution);
    if (aP != 0) xi -= restrict(s, P) * (average(data, P) / aP);
    for (const auto& c : children(P)) {
      if (pruned.siblings.contains(c)) {
        Rational ac = average(s, c);
        if (ac != 0) xi += restrict(s, c) * (average(data, c) / ac);
      } else if (res.merged.contains(c) && res.parts[3].contains(c)) {
        xi += st.family.get(path, chain_to(ctx, c), st.k).upsampled(ctx.resolution) * average(data, c);
      }
    }
    if (integral(xi) != 0) rep.mean_zero = false;
    if (!(restrict(xi, P) == xi)) rep.supported = false;
    rep.xi.emplace_back(P, std::move(xi));
  }
  DyadicTree tree(d, ctx.resolution);
  for (auto x : tree.leaves_in(res.base)) {
    DyadicCube leaf = DyadicCube::from_linear(d, ctx.resolution, x);
    int a = 0, b = 0;
    for (const auto& P : pruned.parents)
      if (contains(P, leaf)) ++a;
    for (const auto& P : pruned.siblings)
      if (contains(P, leaf)) ++b;
    rep.parent_overlap = std::max(rep.parent_overlap, a);
    rep.sibling_overlap = std::max(rep.sibling_overlap, b);
  }
  rep.overlap_ok = Rational(rep.parent_overlap) <= rep.overlap_limit && Rational(rep.sibling_overlap) <= rep.overlap_limit;
  return rep;
}

RChoice choose_R(const StoppingContext& ctx, const StoppingResult& first, const TestFunction& gfrak) {
  RChoice best;
  bool have = false;
  const TestFunction& h = ctx.fs[static_cast<std::size_t>(ctx.slot_h)];
  for (const auto& R : cubes_below(ctx.base, ctx.resolution)) {
    if (first.merged.covers(R)) continue;
    Rational a = average(ctx.u, R);
    if (a == 0) continue;
    Rational c = average(gfrak, R) / a;
    TestFunction ghat = restrict(gfrak - ctx.u * c, R);
    Rational score = abs(local_form(ctx, R, h, ghat)) / R.volume();
    if (!have || score > best.score) {
      best = {R, score, std::move(ghat), c};
      have = true;
    }
  }
  if (!have) throw std::logic_error("every cube lies in a first stopping cube");
  return best;
}

StoppingResult second_stopping(const StoppingContext& ctx, const StoppingResult& first, const TestFunction& gfrak,
                               const DyadicCube& R) {
  (void)first;
  const StepData& st = *ctx.step;
  int N = ctx.resolution, d = st.form.dim();
  const Rational& eps = ctx.eps;
  Rational inv = 1 / eps;
  Rational q = st.tuple[ctx.slot_g], r = st.tuple[ctx.slot_h];
  Rational n = nonzero_norms_n(ctx);
  StoppingResult res;
  res.base = R;
  TestFunction v = st.family.get(st.tau, chain_to(ctx, R), st.k).upsampled(N);
  res.special = v;
  Magnitude volR = Magnitude::of(R.volume());

  std::vector<Magnitude> totals;
  for (std::size_t j = 0; j < ctx.fs.size(); ++j)
    totals.push_back(power_integral(ctx.fs[j], st.tuple[static_cast<int>(j)], R));
  Magnitude g_total = power_integral(gfrak, q, R);
  Magnitude v_total = power_integral(v, r, R);
  Magnitude u_total = power_integral(ctx.u, q, R);
  Magnitude v_norm = lp_norm(v, r).magnitude();
  Magnitude uR_norm = lp_norm(ctx.u, q, R).magnitude();
  Magnitude FR = Magnitude::of(1);
  for (std::size_t j = 0; j < ctx.fs.size(); ++j) {
    int s = static_cast<int>(j);
    if (s == ctx.slot_g || s == ctx.slot_h) continue;
    FR = FR * lp_norm(ctx.fs[j], st.tuple[s], R).magnitude();
  }

  auto above = [&](const TestFunction& f, const Rational& p, const Magnitude& total, const Rational& factor,
                   const DyadicCube& S) {
    if (total.value() == 0) return false;
    return fires(power_integral(f, p, S) * volR, Magnitude::of(factor * S.volume()) * total);
  };
  res.parts[0] = maximal_where(R, N, [&](const DyadicCube& S) {
    for (std::size_t j = 0; j < ctx.fs.size(); ++j)
      if (above(ctx.fs[j], st.tuple[static_cast<int>(j)], totals[j], n * inv, S)) return true;
    return above(gfrak, q, g_total, inv, S);
  });
  res.parts[1] = maximal_where(R, N, [&](const DyadicCube& S) {
    return above(v, r, v_total, 2 * inv, S) || above(ctx.u, q, u_total, 2 * inv, S);
  });
  bool FR_zero = FR.value() == 0;
  res.parts[2] = maximal_where(R, N, [&](const DyadicCube& S) {
    if (FR_zero || S.level >= N) return false;
    Magnitude shrink_q(PowerProduct::power(S.volume() / R.volume(), 1 - 1 / q));
    Magnitude shrink_r(PowerProduct::power(S.volume() / R.volume(), 1 - 1 / r));
    auto a = meanzero_dual_norm(local_partial(ctx, S, ctx.slot_g, v), q, S);
    if (fires(mz_magnitude(a), Magnitude::of(st.bound * inv) * shrink_q * v_norm * FR)) return true;
    auto b = meanzero_dual_norm(local_partial(ctx, S, ctx.slot_h, ctx.u), r, S);
    return fires(mz_magnitude(b), Magnitude::of(st.bound * inv) * shrink_r * uR_norm * FR);
  });
  res.parts[3] = maximal_where(R, N, [&](const DyadicCube& S) { return abs(average(v, S)) <= Rational(1, 8); });
  res.parts[4] = parent_count_collection(R, N, res.parts[3], eps);
  finish_packing(res, {2 * eps, eps, 2 * eps, 1 - 8 * eps, eps});
  res.packing_ok = res.packed <= (1 - eps) * R.volume();

  auto cubes = cubes_below(R, N);
  Rational spread = two_pow(d);
  for (std::size_t j = 0; j < ctx.fs.size(); ++j) {
    Rational p = st.tuple[static_cast<int>(j)];
    res.certificates.push_back(norm_certificate("norm_f[" + std::to_string(j + 1) + "]", cubes, res.merged,
                                                ctx.fs[j], p, R, spread * n * inv));
    // Chained against Q through the first stopping time; the constant is only recorded.
    res.certificates.push_back(norm_certificate("norm_f_base[" + std::to_string(j + 1) + "]", cubes, res.merged,
                                                ctx.fs[j], p, ctx.base, spread * n * inv * n * inv, false));
  }
  res.certificates.push_back(norm_certificate("norm_gfrak", cubes, res.merged, gfrak, q, R, spread * inv));
  res.certificates.push_back(norm_certificate("norm_v", cubes, res.merged, v, r, R, 2 * spread * inv));
  res.certificates.push_back(norm_certificate("norm_u", cubes, res.merged, ctx.u, q, R, 2 * spread * inv));
  {
    Certificate c1, c2;
    c1.name = "dual_g_against_v";
    c2.name = "dual_h_against_u";
    c1.limit = c2.limit = to_real(st.bound * inv);
    if (!FR_zero) {
      for (const auto& S : cubes) {
        if (res.merged.covers(S) || S.level >= N) continue;
        auto a = meanzero_dual_norm(local_partial(ctx, S, ctx.slot_g, v), q, S);
        Real ra = a.value.value / (real_pow(S.volume() / R.volume(), 1 - 1 / q) * v_norm.value() * FR.value());
        if (ra > c1.measured) {
          c1.measured = ra;
          c1.witness = S;
        }
        auto b = meanzero_dual_norm(local_partial(ctx, S, ctx.slot_h, ctx.u), r, S);
        Real rb = b.value.value / (real_pow(S.volume() / R.volume(), 1 - 1 / r) * uR_norm.value() * FR.value());
        if (rb > c2.measured) {
          c2.measured = rb;
          c2.witness = S;
        }
      }
    }
    c1.pass = c1.measured <= c1.limit * (1 + comparison_slack());
    c2.pass = c2.measured <= c2.limit * (1 + comparison_slack());
    res.certificates.push_back(c1);
    res.certificates.push_back(c2);
  }
  res.certificates.push_back(mean_certificate("mean_v", cubes, res.parts[3], v));
  return res;
}

PrunedFunction prune_h(const StoppingContext& ctx, const StoppingResult& second, const DyadicCube& R) {
  return prune(restrict(ctx.fs[static_cast<std::size_t>(ctx.slot_h)], R), second.special, R, second,
               ctx.step->tuple[ctx.slot_h]);
}

const Rational& CoefficientMap::at(const DyadicCube& T) const {
  auto it = std::find(cubes.begin(), cubes.end(), T);
  if (it == cubes.end()) throw std::out_of_range("no coefficient for " + cube_token(T));
  return values[static_cast<std::size_t>(it - cubes.begin())];
}

CoefficientMap coefficient_map(const TestFunction& fn, const TestFunction& w, const DyadicCube& base, int resolution,
                               const Real& scale) {
  CoefficientMap map;
  TestFunction f = fn.upsampled(resolution), s = w.upsampled(resolution);
  DyadicTree tree(base.dim, resolution);
  for (const auto& T : cubes_below(base, resolution)) {
    Rational aw = average(s, T);
    Rational value = 0;
    CoefficientCase kind;
    if (aw != 0) {
      kind = CoefficientCase::ratio;
      value = average(f, T) / aw;
    } else {
      TestFunction sT = restrict(s, T), fT = restrict(f, T);
      if (sT.is_zero()) {
        kind = CoefficientCase::zero;
        if (!fT.is_zero() && map.representable) {
          map.representable = false;
          map.failure = T;
        }
      } else {
        kind = CoefficientCase::multiple;
        for (auto x : tree.leaves_in(T))
          if (s[x] != 0) {
            value = f[x] / s[x];
            break;
          }
        if (!(fT == sT * value) && map.representable) {
          map.representable = false;
          map.failure = T;
        }
      }
    }
    if (scale > 0) map.measured_bound = std::max(map.measured_bound, Real(to_real(abs(value)) / scale));
    map.cubes.push_back(T);
    map.values.push_back(value);
    map.cases.push_back(kind);
  }
  return map;
}

TelescopeReport telescope(const StoppingContext& ctx, const DyadicCube& R, const TestFunction& hfrak,
                          const TestFunction& ghat, const TestFunction& v, const CoefficientMap& phi,
                          const CoefficientMap& psi) {
  TelescopeReport rep;
  int N = ctx.resolution, d = ctx.step->form.dim();
  const TestFunction& u = ctx.u;
  TestFunction vN = v.upsampled(N);
  // Leaf expansion is the precondition of the identity.
  TestFunction hsum(d, N), gsum(d, N);
  for (std::size_t i = 0; i < phi.cubes.size(); ++i) {
    const auto& T = phi.cubes[i];
    if (T.level != N) continue;
    hsum += restrict(vN, T) * psi.values[i];
    gsum += restrict(u, T) * phi.values[i];
  }
  if (!(hsum == hfrak.upsampled(N))) {
    rep.precondition = false;
    rep.detail = "pruned h is not a leafwise multiple of v";
  }
  if (!(gsum == ghat.upsampled(N))) {
    rep.precondition = false;
    rep.detail += rep.detail.empty() ? "" : "; ";
    rep.detail += "ghat is not a leafwise multiple of u";
  }
  rep.top = local_form(ctx, R, vN * psi.at(R), u * phi.at(R));
  for (std::size_t i = 0; i < phi.cubes.size(); ++i) {
    const auto& T = phi.cubes[i];
    if (T.level >= N) continue;
    TestFunction hv = restrict(vN, T) * psi.values[i];
    TestFunction gu = restrict(u, T) * phi.values[i];
    TestFunction dh = hv, dg = gu;
    for (const auto& c : children(T)) {
      dh -= restrict(vN, c) * psi.at(c);
      dg -= restrict(u, c) * phi.at(c);
    }
    rep.diag_h += local_form(ctx, R, dh, gu);
    rep.diag_g += local_form(ctx, R, hv, dg);
    rep.diag_hg += local_form(ctx, R, dh, dg);
  }
  rep.reconstructed = rep.top - rep.diag_h - rep.diag_g + rep.diag_hg;
  rep.target = local_form(ctx, R, hfrak, ghat);
  rep.residual = rep.reconstructed - rep.target;
  return rep;
}

ThetaReport paraproduct_theta(const StoppingContext& ctx, const StoppingResult& second, const PrunedFunction& hprune,
                              const CoefficientMap& phi, const CoefficientMap& psi, const TestFunction& v) {
  ThetaReport rep;
  int N = ctx.resolution, d = ctx.step->form.dim();
  const StepData& st = *ctx.step;
  TestFunction sum(d, N);
  CubeSet stop_parents;
  for (const auto& S : second.merged)
    if (S.level > 0) stop_parents.insert(parent(S));
  for (std::size_t i = 0; i < phi.cubes.size(); ++i) {
    const auto& T = phi.cubes[i];
    if (T.level >= N) continue;
    TestFunction t = TestFunction::indicator(d, N, T) * psi.values[i];
    for (const auto& c : children(T)) t -= TestFunction::indicator(d, N, c) * psi.at(c);
    sum += t * phi.values[i];
    if (second.merged.covers(T)) continue;
    if (stop_parents.contains(T) && !hprune.parents.contains(T))
      ++rep.parent_cubes;
    else
      ++rep.tree_cubes;
  }
  rep.theta = v.upsampled(N) * sum;
  rep.integral = integral(rep.theta);
  rep.mean_zero = rep.integral == 0;
  Rational q = st.tuple[ctx.slot_g], r = st.tuple[ctx.slot_h];
  rep.norm = lp_norm(rep.theta, r).value;
  const DyadicCube& R = second.base;
  Real target = real_pow(R.volume(), 1 / r) * real_pow(ctx.base.volume(), -1 / r - 1 / q) *
                lp_norm(ctx.fs[static_cast<std::size_t>(ctx.slot_g)], q).value *
                lp_norm(ctx.fs[static_cast<std::size_t>(ctx.slot_h)], r).value;
  if (target > 0) rep.ratio = rep.norm / target;
  return rep;
}

Flattened flatten_on_partition(const TestFunction& w, const std::vector<DyadicCube>& partition, FlattenMode mode,
                               const Rational& p) {
  int depth = w.resolution();
  for (const auto& c : partition) depth = std::max(depth, c.level);
  Flattened out;
  TestFunction f = w.upsampled(depth);
  out.value = TestFunction(w.dim(), depth);
  DyadicTree tree(w.dim(), depth);
  for (const auto& P : partition) {
    Rational val;
    if (mode == FlattenMode::average) {
      val = average(f, P);
    } else {
      NormValue nv = lp_norm(f, p, P);
      if (nv.power) {
        val = *nv.power / P.volume();
      } else {
        out.exact = false;
        val = ceil_dyadic(real_pow(nv.value, p) / to_real(P.volume()), 64) + two_pow(-64);
      }
    }
    for (auto x : tree.leaves_in(P)) out.value[x] = val;
  }
  return out;
}

std::vector<DyadicCube> stopping_partition(const StoppingResult& res, int resolution) {
  std::vector<DyadicCube> out(res.merged.begin(), res.merged.end());
  DyadicTree tree(res.base.dim, resolution);
  for (auto x : tree.leaves_in(res.base)) {
    DyadicCube leaf = DyadicCube::from_linear(res.base.dim, resolution, x);
    if (!res.merged.covers(leaf)) out.push_back(leaf);
  }
  return out;
}

StepReport induction_step(const StepData& step) {
  StepReport rep;
  StoppingContext ctx = make_context(step);
  rep.eps = ctx.eps;
  auto& bad = rep.violations;
  auto check_stopping = [&](const StoppingResult& res, const std::string& tag) {
    if (!res.packing_ok) bad.push_back(tag + ": packing " + to_string(res.ratio) + " exceeds 1 - eps");
    for (std::size_t i = 0; i < 5; ++i)
      if (!res.accounting[i].pass)
        bad.push_back(tag + ": collection " + std::to_string(i + 1) + " measure " + to_string(res.accounting[i].measure) +
                      " above " + to_string(res.accounting[i].limit));
    for (const auto& c : res.certificates)
      if (c.asserted && !c.pass) bad.push_back(tag + ": certificate " + c.name + " fails");
  };
  auto check_pruned = [&](const PrunedFunction& p, const std::string& tag) {
    if (!p.detail.empty()) bad.push_back(tag + ": " + p.detail);
    if (!p.mean_zero) bad.push_back(tag + ": nonzero mean");
    if (!p.supported) bad.push_back(tag + ": support leaves the base cube");
  };
  auto check_buffers = [&](const BufferReport& b, const std::string& tag) {
    if (!b.mean_zero) bad.push_back(tag + ": buffer with nonzero mean");
    if (!b.supported) bad.push_back(tag + ": buffer support leaves its parent");
    if (!b.overlap_ok) bad.push_back(tag + ": buffer overlap above 2^d/eps");
  };

  rep.first = first_stopping(ctx);
  check_stopping(rep.first, "first stopping");
  rep.gfrak = prune_g(ctx, rep.first);
  check_pruned(rep.gfrak, "pruned g");
  rep.first_buffers = buffer_functions(ctx, rep.first, rep.gfrak, Side::first,
                                       ctx.fs[static_cast<std::size_t>(ctx.slot_g)], step.sigma);
  check_buffers(rep.first_buffers, "first buffers");

  rep.R = choose_R(ctx, rep.first, rep.gfrak.value);
  const DyadicCube& R = rep.R.cube;
  rep.second = second_stopping(ctx, rep.first, rep.gfrak.value, R);
  check_stopping(rep.second, "second stopping");
  rep.hfrak = prune_h(ctx, rep.second, R);
  check_pruned(rep.hfrak, "pruned h");
  rep.second_buffers = buffer_functions(ctx, rep.second, rep.hfrak, Side::second,
                                        ctx.fs[static_cast<std::size_t>(ctx.slot_h)], step.tau);
  check_buffers(rep.second_buffers, "second buffers");

  Rational q = step.tuple[ctx.slot_g], r = step.tuple[ctx.slot_h];
  const TestFunction& v = rep.second.special;
  Real gscale = real_pow(ctx.base.volume(), -1 / q) * lp_norm(ctx.fs[static_cast<std::size_t>(ctx.slot_g)], q).value;
  Real hscale = real_pow(R.volume(), -1 / r) * lp_norm(ctx.fs[static_cast<std::size_t>(ctx.slot_h)], r, R).value;
  rep.phi = coefficient_map(rep.R.ghat, ctx.u, R, ctx.resolution, gscale);
  rep.psi = coefficient_map(rep.hfrak.value, v, R, ctx.resolution, hscale);
  rep.representable = rep.phi.representable && rep.psi.representable;
  rep.telescope = telescope(ctx, R, rep.hfrak.value, rep.R.ghat, v, rep.phi, rep.psi);
  rep.representable = rep.representable && rep.telescope.precondition;
  if (rep.representable && rep.telescope.residual != 0)
    bad.push_back("telescope residual " + to_string(rep.telescope.residual));
  rep.theta = paraproduct_theta(ctx, rep.second, rep.hfrak, rep.phi, rep.psi, v);
  if (rep.representable && !rep.theta.mean_zero) bad.push_back("theta has nonzero mean");

  // Flattened majorants of v on the second stopping partition.
  auto part = stopping_partition(rep.second, ctx.resolution);
  Magnitude vtot = power_integral(v, r, R);
  Rational limit = two_pow(step.form.dim() + 1) / ctx.eps;
  auto flat_cert = [&](const std::string& name, FlattenMode mode) {
    Certificate c;
    c.name = name;
    c.limit = to_real(limit);
    Flattened fl = flatten_on_partition(v, part, mode, r);
    Real sup = to_real(sup_norm(fl.value));
    if (mode == FlattenMode::average) sup = real_pow(sup, r);
    if (vtot.value() > 0) c.measured = to_real(R.volume()) * sup / vtot.value();
    c.pass = c.measured <= c.limit * (1 + comparison_slack());
    if (!c.pass) bad.push_back("flattened v: " + name + " above 2^(d+1)/eps");
    return c;
  };
  rep.flatten_power = flat_cert("power", FlattenMode::power);
  rep.flatten_average = flat_cert("average", FlattenMode::average);
  return rep;
}

}  // namespace dytb
