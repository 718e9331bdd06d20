#pragma once

#include <span>
#include <vector>

#include "dytb/lattice.hpp"
#include "dytb/numeric.hpp"

namespace dytb {

// Function on [0,1)^d that is constant on the cubes of level N.
// Values are stored row-major over those cubes.
class TestFunction {
 public:
  TestFunction() = default;
  TestFunction(int dim, int resolution);
  TestFunction(int dim, int resolution, std::vector<Rational> values);

  static TestFunction constant(int dim, int resolution, const Rational& c);
  static TestFunction indicator(int dim, int resolution, const DyadicCube& cube);

  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  DyadicCube root() const { return DyadicCube::root(dim_); }
  std::size_t size() const { return values_.size(); }
  Rational leaf_volume() const { return two_pow(-static_cast<long>(dim_) * resolution_); }

  const std::vector<Rational>& values() const { return values_; }
  const Rational& operator[](std::size_t i) const { return values_[i]; }
  Rational& operator[](std::size_t i) { return values_[i]; }
  // Value on the level-N cube containing c (c must be at level >= N).
  const Rational& value_at(const DyadicCube& c) const;

  TestFunction upsampled(int resolution) const;
  bool is_zero() const;

  TestFunction& operator+=(const TestFunction& o);
  TestFunction& operator-=(const TestFunction& o);
  TestFunction& operator*=(const TestFunction& o);
  TestFunction& operator*=(const Rational& s);
  friend TestFunction operator+(TestFunction a, const TestFunction& b) { return a += b; }
  friend TestFunction operator-(TestFunction a, const TestFunction& b) { return a -= b; }
  friend TestFunction operator*(TestFunction a, const TestFunction& b) { return a *= b; }
  friend TestFunction operator*(TestFunction a, const Rational& s) { return a *= s; }
  friend TestFunction operator*(const Rational& s, TestFunction a) { return a *= s; }
  friend bool operator==(const TestFunction&, const TestFunction&) = default;

 private:
  void align(TestFunction& other);

  int dim_ = 1;
  int resolution_ = 0;
  std::vector<Rational> values_{Rational(0)};
};

// Integrals of f over every cube of DyadicTree(f.dim(), f.resolution()), by node id.
std::vector<Rational> cube_integrals(const TestFunction& f);

Rational integral(const TestFunction& f);
Rational integral(const TestFunction& f, const DyadicCube& cube);
Rational average(const TestFunction& f, const DyadicCube& cube);
Rational inner(const TestFunction& f, const TestFunction& g);
Rational sup_norm(const TestFunction& f);

TestFunction restrict(const TestFunction& f, const DyadicCube& cube);

// ||f||_p with the p-th power kept exact when every |f|^p is rational.
NormValue lp_norm(const TestFunction& f, const Rational& p);
NormValue lp_norm(const TestFunction& f, const Rational& p, const DyadicCube& cube);

struct MartingaleOps {
  Rational average;         // [f]_T
  Rational expectation;     // E_T f = |[f]_T|
  Rational difference_sq;   // (Delta_T f)^2
};
MartingaleOps martingale_ops(const TestFunction& f, const DyadicCube& cube);

// Dyadic H^1 norm through the square function, including the average over [0,1)^d.
NormValue h1_norm(const TestFunction& g);

// Exponents in (1, inf) whose reciprocals sum to 1.
class HolderTuple {
 public:
  static HolderTuple make(std::vector<Rational> exponents);
  static HolderTuple uniform(int n);

  int arity() const { return static_cast<int>(p_.size()); }
  const Rational& operator[](int j) const { return p_[static_cast<std::size_t>(j)]; }
  Rational conjugate(int j) const;
  const std::vector<Rational>& exponents() const { return p_; }
  friend bool operator==(const HolderTuple&, const HolderTuple&) = default;

 private:
  std::vector<Rational> p_;
};

Rational conjugate_exponent(const Rational& p);

}  // namespace dytb
