#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dytb/funcspace.hpp"

namespace dytb {

// Cube-indexed function on the tree of [0,1)^d down to `depth`. Only |F| matters, so the
// squares are stored: martingale differences are square roots of rationals.
class OuterFunction {
 public:
  OuterFunction() = default;
  OuterFunction(int dim, int depth);
  static OuterFunction from_values(int dim, int depth, const std::vector<Rational>& values);  // by tree id

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  std::size_t size() const { return sq_.size(); }
  const Rational& square(std::size_t id) const { return sq_[id]; }
  const std::vector<Rational>& squares() const { return sq_; }
  Real value(std::size_t id) const;
  // Rational |F| when the square is a perfect square.
  std::optional<Rational> exact_value(std::size_t id) const;

  void set(const DyadicCube& c, const Rational& v);
  void set_square(std::size_t id, const Rational& sq);
  OuterFunction scaled(const Rational& c) const;
  bool is_zero() const;

  friend bool operator==(const OuterFunction&, const OuterFunction&) = default;

 private:
  int dim_ = 1;
  int depth_ = 0;
  std::vector<Rational> sq_{Rational(0)};
};

struct SizeKind {
  bool sup = false;  // S_inf
  Rational p = 2;

  static SizeKind infinity() { return {true, 0}; }
  static SizeKind lp(const Rational& p);
  // Levels are handled through lambda^e.
  Rational exponent() const { return sup ? Rational(2) : p; }
  std::string name() const;
};

// Infimum over coverings of E by subtrees D(T) of the sum of |T|, by the tree recursion.
Rational outer_measure(const CubeSet& E, int dim, int depth);
// Same value by enumerating every antichain of the tree. Throws std::length_error past the cap.
Rational outer_measure_exhaustive(const CubeSet& E, int dim, int depth);

// Number of antichains (including the empty one) of the tree; saturates at UINT64_MAX.
std::uint64_t antichain_count(int dim, int depth);
// Default cap on exhaustive searches; DYTB_MAX_CELLS overrides it.
std::uint64_t exhaustive_cap();

// S(F)(D(T)); the p-th power (square for S_inf) kept exact when possible.
NormValue size(const OuterFunction& F, const DyadicCube& T, const SizeKind& kind);
// sup_T S(F)(D(T)).
NormValue outer_sup_norm(const OuterFunction& F, const SizeKind& kind);

enum class SuperlevelMethod { greedy, exact };

// mu(S(F) > lambda). Greedy removes the maximal cubes of size above lambda; exact searches
// all unions of subtrees.
Rational superlevel(const OuterFunction& F, const Rational& lambda, const SizeKind& kind, SuperlevelMethod method);

// Step function lambda -> mu(S(F) > lambda), recorded through t = lambda^e (e = kind.exponent()):
// measure[i] holds on [levels[i], levels[i+1]); levels[0] = 0 and measure.back() = 0.
struct LevelProfile {
  Rational exponent;
  std::vector<Rational> levels;
  std::vector<Rational> measure;
  SuperlevelMethod method = SuperlevelMethod::greedy;
  bool exact = true;  // false when some p-th power was rounded

  Rational at(const Rational& level) const;  // measure at t = lambda^e
};
LevelProfile level_profile(const OuterFunction& F, const SizeKind& kind, SuperlevelMethod method);

// (p int lambda^(p-1) mu dlambda)^(1/p), or (sup lambda^p mu)^(1/p) when weak.
NormValue outer_lp_norm(const LevelProfile& profile, const Rational& p, bool weak);
NormValue outer_lp_norm(const OuterFunction& F, const Rational& p, const SizeKind& kind, bool weak,
                        SuperlevelMethod method = SuperlevelMethod::greedy);

// Exact when the tree is small enough for the exhaustive search, greedy otherwise.
SuperlevelMethod best_method(const OuterFunction& F, const SizeKind& kind);

// |[f]_T| and Delta_T f (zero at the finest level).
OuterFunction embed_E(const TestFunction& f);
OuterFunction embed_Delta(const TestFunction& f);

enum class Embedding { average, difference };

struct CarlesonReport {
  Embedding which = Embedding::average;
  std::optional<Rational> p;  // empty for p = inf
  bool weak = false;          // p = 1
  Real ratio = 0;             // outer norm / ||f||_p (weak norm when p = 1)
  Rational bound = 1;         // asserted constant at the endpoints
  bool asserted = false;
  bool pass = true;
  bool witness_feasible = true;  // Delta, p = 1: the Calderon-Zygmund removal set works
  std::string detail;
};
// p = 1 checks lambda mu <= C ||f||_1 with C = 1 (averages) or 2^d (differences) on every
// step; p = inf checks sup sizes <= ||f||_inf. Intermediate p only report the ratio.
CarlesonReport carleson_check(const TestFunction& f, const std::optional<Rational>& p, Embedding which);

struct HolderStep {
  std::string name;
  Real lhs = 0;
  Real rhs = 0;
  bool exact_measure = true;  // outer norms from the exhaustive superlevel measure
  bool pass = true;
};

struct LemmaReport {
  bool hypothesis = true;
  std::string detail;
  Real sum = 0;       // sum of |alpha_T|
  Real rhs = 0;       // product of the L^p norms
  Real constant = 0;  // sum / rhs (0 when both vanish)
  bool finite = true;
  std::vector<HolderStep> steps;
  bool pass = true;
};

// Relative tolerance for the outer Hoelder steps.
Real holder_tolerance();

// alpha by tree id; empty means the largest admissible choice (the bound itself).
LemmaReport lemma1_check(const TestFunction& f1, const TestFunction& f2, const TestFunction& f3, const Rational& p,
                         const std::vector<Real>& alpha = {});
LemmaReport lemma2_check(const TestFunction& f1, const TestFunction& f2, const TestFunction& f3,
                         const TestFunction& f4, const TestFunction& f5, const Rational& p, const Rational& q,
                         const std::vector<Real>& alpha = {});

}  // namespace dytb
