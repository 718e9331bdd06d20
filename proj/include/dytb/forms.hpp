#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dytb/funcspace.hpp"
#include "dytb/lattice.hpp"
#include "dytb/numeric.hpp"

namespace dytb {

// c_Q |Q|^(1-n) prod_j <f_j, profile_j>, each profile constant on the children of Q.
struct HaarBlock {
  DyadicCube cube;
  Rational coeff;
  std::vector<std::vector<Rational>> profiles;  // one per slot, 2^d child values in child order

  friend bool operator==(const HaarBlock&, const HaarBlock&) = default;
};

// n-linear form on functions constant at level N. Either a list of Haar blocks or a
// dense leaf kernel K[i_1..i_n] (first slot most significant).
class PerfectForm {
 public:
  PerfectForm(int arity, int dim, int resolution);  // zero form
  static PerfectForm from_blocks(int arity, int dim, int resolution, std::vector<HaarBlock> blocks);
  static PerfectForm from_kernel(int arity, int dim, int resolution, std::vector<Rational> kernel);

  int arity() const { return arity_; }
  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  std::size_t leaf_count() const { return std::size_t{1} << (dim_ * resolution_); }

  bool is_dense() const { return kernel_.has_value(); }
  const std::vector<HaarBlock>& blocks() const { return blocks_; }
  const std::vector<Rational>& kernel() const { return *kernel_; }

  // Same form with a materialized dense kernel.
  PerfectForm densified() const;
  PerfectForm scaled(const Rational& s) const;

  friend bool operator==(const PerfectForm&, const PerfectForm&) = default;

 private:
  int arity_;
  int dim_;
  int resolution_;
  std::vector<HaarBlock> blocks_;
  std::optional<std::vector<Rational>> kernel_;
};

// Largest number of dense kernel entries we agree to build.
std::size_t dense_entry_cap();

Rational eval(const PerfectForm& form, std::span<const TestFunction> fs);
// Dense contraction for block forms too (materializes the kernel).
Rational eval_dense(const PerfectForm& form, std::span<const TestFunction> fs);

// phi with form(..., g in `slot`, ...) = integral of phi g. fixed[slot] is ignored.
TestFunction partial_functional(const PerfectForm& form, int slot, std::span<const TestFunction> fixed);

struct DualNorm {
  NormValue value;          // ||phi||_{p'}
  TestFunction extremizer;  // ||g||_p = 1 and integral phi g = ||phi||_{p'}
  bool exact = false;       // extremizer is exact rather than rounded
};
DualNorm dual_norm(const TestFunction& phi, const Rational& p);

// Unnormalized extremizer direction sign(phi)|phi|^(p'-1); exact when possible.
TestFunction dual_direction(const TestFunction& phi, const Rational& p, bool* exact = nullptr);

struct MeanZeroDual {
  NormValue value;  // min_c ||(phi - c) 1_P||_{p'}
  Real lower;       // certified lower bound for the minimum
  Real center;      // minimizing constant
  bool exact = false;
};
MeanZeroDual meanzero_dual_norm(const TestFunction& phi, const Rational& p, const DyadicCube& cube);

struct ValidationReport {
  std::string axiom;
  bool pass = true;
  Real certified_bound = 0;
  std::optional<Rational> certified_bound_exact;
  Real empirical_lower = 0;
  std::optional<DyadicCube> witness_cube;
  std::vector<TestFunction> witness;
  std::string detail;
};

ValidationReport validate_smoothness(const PerfectForm& form);

struct DecayOptions {
  bool empirical = true;
  int sweeps = 6;
};
ValidationReport validate_decay(const PerfectForm& form, const HolderTuple& tuple,
                                const DecayOptions& opts = {});

struct GenerateOptions {
  int min_meanzero = 2;
  long coeff_range = 4;
};
// Random block form, rescaled so the decay certificate holds for every Holder tuple.
PerfectForm generate(int n, int d, int N, double density, std::uint64_t seed,
                     const GenerateOptions& opts = {});

// Decay certificate with Q = P weight 2^(-d e); per cube P, the bound is
// ancestor_sum + here_sum * weight.
struct DecayTerms {
  DyadicCube cube;
  Rational ancestor_sum;
  Rational here_sum;
};
std::vector<DecayTerms> decay_terms(const PerfectForm& form);

struct AlternatingResult {
  Real value = 0;
  std::vector<TestFunction> tuple;
  std::vector<Real> history;
  bool exact_steps = true;
  bool monotone = true;
};
// Coordinate ascent on |form(f)| / prod ||f_j||_{p_j} with f_j supported on supports[j].
AlternatingResult alternating_maximize(const PerfectForm& form, const HolderTuple& tuple,
                                       std::vector<TestFunction> start,
                                       const std::vector<DyadicCube>& supports, int sweeps);

// |form(fs)| / prod ||f_j||_{p_j}, zero when some f_j vanishes.
Real holder_ratio(const PerfectForm& form, const HolderTuple& tuple, std::span<const TestFunction> fs);

}  // namespace dytb
