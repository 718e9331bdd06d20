#include "dytb/funcspace.hpp"

#include <stdexcept>

namespace dytb {

TestFunction::TestFunction(int dim, int resolution)
    : dim_(dim), resolution_(resolution) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("function dimension out of range");
  if (resolution < 0 || dim * resolution > 24) throw std::invalid_argument("resolution out of range");
  values_.assign(std::size_t{1} << (dim * resolution), Rational(0));
}

TestFunction::TestFunction(int dim, int resolution, std::vector<Rational> values)
    : TestFunction(dim, resolution) {
  if (values.size() != values_.size())
    throw std::invalid_argument("expected " + std::to_string(values_.size()) + " values, got " +
                                std::to_string(values.size()));
  values_ = std::move(values);
}

TestFunction TestFunction::constant(int dim, int resolution, const Rational& c) {
  TestFunction f(dim, resolution);
  for (auto& v : f.values_) v = c;
  return f;
}

TestFunction TestFunction::indicator(int dim, int resolution, const DyadicCube& cube) {
  if (cube.dim != dim) throw std::invalid_argument("dimension mismatch");
  int res = std::max(resolution, cube.level);
  TestFunction f(dim, res);
  DyadicTree tree(dim, res);
  for (auto i : tree.leaves_in(cube)) f.values_[i] = 1;
  return f;
}

const Rational& TestFunction::value_at(const DyadicCube& c) const {
  if (c.dim != dim_ || c.level < resolution_) throw std::invalid_argument("cube coarser than resolution");
  return values_[ancestor_at(c, resolution_).linear_index()];
}

TestFunction TestFunction::upsampled(int resolution) const {
  if (resolution < resolution_) throw std::invalid_argument("cannot upsample to a coarser grid");
  if (resolution == resolution_) return *this;
  TestFunction f(dim_, resolution);
  for (std::size_t i = 0; i < f.values_.size(); ++i) {
    auto leaf = DyadicCube::from_linear(dim_, resolution, i);
    f.values_[i] = value_at(leaf);
  }
  return f;
}

bool TestFunction::is_zero() const {
  for (const auto& v : values_)
    if (v != 0) return false;
  return true;
}

void TestFunction::align(TestFunction& other) {
  if (dim_ != other.dim_) throw std::invalid_argument("dimension mismatch");
  if (resolution_ < other.resolution_) *this = upsampled(other.resolution_);
  if (other.resolution_ < resolution_) other = other.upsampled(resolution_);
}

TestFunction& TestFunction::operator+=(const TestFunction& o) {
  TestFunction b = o;
  align(b);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += b.values_[i];
  return *this;
}

TestFunction& TestFunction::operator-=(const TestFunction& o) {
  TestFunction b = o;
  align(b);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= b.values_[i];
  return *this;
}

TestFunction& TestFunction::operator*=(const TestFunction& o) {
  TestFunction b = o;
  align(b);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] *= b.values_[i];
  return *this;
}

TestFunction& TestFunction::operator*=(const Rational& s) {
  for (auto& v : values_) v *= s;
  return *this;
}

std::vector<Rational> cube_integrals(const TestFunction& f) {
  DyadicTree tree(f.dim(), f.resolution());
  std::vector<Rational> out(tree.size());
  Rational lv = f.leaf_volume();
  std::size_t off = tree.level_offset(f.resolution());
  for (std::size_t i = 0; i < f.size(); ++i) out[off + i] = f[i] * lv;
  for (int l = f.resolution() - 1; l >= 0; --l) {
    std::size_t base = tree.level_offset(l);
    for (std::size_t k = 0; k < tree.level_count(l); ++k) {
      auto c = DyadicCube::from_linear(f.dim(), l, k);
      Rational s = 0;
      for (unsigned i = 0; i < tree.child_count(); ++i) s += out[tree.id(child(c, i))];
      out[base + k] = s;
    }
  }
  return out;
}

Rational integral(const TestFunction& f) {
  Rational s = 0;
  for (const auto& v : f.values()) s += v;
  return s * f.leaf_volume();
}

Rational integral(const TestFunction& f, const DyadicCube& cube) {
  if (cube.dim != f.dim()) throw std::invalid_argument("dimension mismatch");
  if (cube.level >= f.resolution()) return f.value_at(cube) * cube.volume();
  DyadicTree tree(f.dim(), f.resolution());
  Rational s = 0;
  for (auto i : tree.leaves_in(cube)) s += f[i];
  return s * f.leaf_volume();
}

Rational average(const TestFunction& f, const DyadicCube& cube) {
  return integral(f, cube) / cube.volume();
}

Rational inner(const TestFunction& f, const TestFunction& g) { return integral(f * g); }

Rational sup_norm(const TestFunction& f) {
  Rational m = 0;
  for (const auto& v : f.values()) m = std::max(m, Rational(abs(v)));
  return m;
}

TestFunction restrict(const TestFunction& f, const DyadicCube& cube) {
  TestFunction g = f.upsampled(std::max(f.resolution(), cube.level));
  DyadicTree tree(g.dim(), g.resolution());
  TestFunction out(g.dim(), g.resolution());
  for (auto i : tree.leaves_in(cube)) out[i] = g[i];
  return out;
}

NormValue lp_norm(const TestFunction& f, const Rational& p) {
  if (p <= 0) throw std::invalid_argument("exponent must be positive");
  Rational exact_sum = 0;
  Real real_sum = 0;
  bool exact = true;
  for (const auto& v : f.values()) {
    if (v == 0) continue;
    Rational a = abs(v);
    if (exact) {
      if (auto q = exact_pow(a, p)) {
        exact_sum += *q;
        continue;
      }
      exact = false;
      real_sum = to_real(exact_sum);
    }
    real_sum += real_pow(a, p);
  }
  if (exact) return NormValue::from_power(exact_sum * f.leaf_volume(), p);
  return NormValue::from_real(real_pow(Real(real_sum * to_real(f.leaf_volume())), Rational(1) / p), p);
}

NormValue lp_norm(const TestFunction& f, const Rational& p, const DyadicCube& cube) {
  return lp_norm(restrict(f, cube), p);
}

MartingaleOps martingale_ops(const TestFunction& f, const DyadicCube& cube) {
  MartingaleOps m;
  m.average = average(f, cube);
  m.expectation = abs(m.average);
  Rational s = 0;
  for (const auto& ch : children(cube)) {
    Rational d = average(f, ch) - m.average;
    s += d * d * ch.volume();
  }
  m.difference_sq = s / cube.volume();
  return m;
}

NormValue h1_norm(const TestFunction& g) {
  DyadicTree tree(g.dim(), g.resolution());
  auto ints = cube_integrals(g);
  std::vector<Rational> avg(tree.size());
  for (std::size_t id = 0; id < tree.size(); ++id)
    avg[id] = ints[id] / tree.cube(id).volume();
  Rational exact_sum = 0;
  Real real_sum = 0;
  bool exact = true;
  int N = g.resolution();
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto leaf = DyadicCube::from_linear(g.dim(), N, i);
    Rational sq = avg[0] * avg[0];
    for (int l = 1; l <= N; ++l) {
      Rational d = avg[tree.id(ancestor_at(leaf, l))] - avg[tree.id(ancestor_at(leaf, l - 1))];
      sq += d * d;
    }
    if (exact) {
      if (auto r = exact_root(sq, 2)) {
        exact_sum += *r;
        continue;
      }
      exact = false;
      real_sum = to_real(exact_sum);
    }
    real_sum += sqrt(to_real(sq));
  }
  if (exact) return NormValue::from_power(exact_sum * g.leaf_volume(), 1);
  return NormValue::from_real(real_sum * to_real(g.leaf_volume()), 1);
}

HolderTuple HolderTuple::make(std::vector<Rational> exponents) {
  if (exponents.size() < 2) throw std::invalid_argument("Holder tuple needs at least two exponents");
  Rational s = 0;
  for (const auto& p : exponents) {
    if (p <= 1) throw std::invalid_argument("Holder exponent must exceed 1, got " + to_string(p));
    s += Rational(1) / p;
  }
  if (s != 1) throw std::invalid_argument("reciprocals of Holder exponents sum to " + to_string(s));
  HolderTuple t;
  t.p_ = std::move(exponents);
  return t;
}

HolderTuple HolderTuple::uniform(int n) {
  return make(std::vector<Rational>(static_cast<std::size_t>(n), Rational(n)));
}

Rational conjugate_exponent(const Rational& p) {
  if (p <= 1) throw std::invalid_argument("conjugate of exponent <= 1");
  return p / (p - 1);
}

Rational HolderTuple::conjugate(int j) const { return conjugate_exponent((*this)[j]); }

}  // namespace dytb
