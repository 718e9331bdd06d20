#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dytb/forms.hpp"
#include "dytb/paths.hpp"

namespace dytb {

// (1/8) min_j (7/8)^(p_j/(p_j-1)) B^(-1/(p_j-1)); rounded down to a dyadic rational when
// some power is irrational.
Rational epsilon(const HolderTuple& tuple, const Rational& bound);

// Data of one induction step k -> k+1. `sigma` and `tau` have length k+1 and differ by
// swapping the last two values; `cubes` is sigma-nested. The free function g sits in slot
// sigma(k), h = 1_Q in slot sigma(k+1).
struct StepData {
  PerfectForm form;
  HolderTuple tuple;
  Rational bound;
  PathCollection paths;
  BFamily family;  // paths of length k+1
  int k = 1;
  Path sigma;
  Path tau;
  std::vector<DyadicCube> cubes;
  TestFunction g;
};

struct StoppingContext {
  const StepData* step = nullptr;
  Rational eps;
  int slot_g = 0;  // 0-based
  int slot_h = 1;
  DyadicCube base;             // Q
  std::vector<TestFunction> fs;  // f_j on Q with g and h in place
  TestFunction u;              // b_{sigma,Q,sigma(k)}
  Magnitude F;                 // product of the other norms
  int resolution = 0;
};

// Throws std::invalid_argument on inconsistent data.
StoppingContext make_context(const StepData& step);

// Form with slot h = a 1_P, slot g = b 1_P and every other slot f_j 1_P.
Rational local_form(const StoppingContext& ctx, const DyadicCube& P, const TestFunction& a, const TestFunction& b);

// Cubes of the family chain that keeps the first k-1 path cubes and stabilizes to P.
std::vector<DyadicCube> chain_to(const StoppingContext& ctx, const DyadicCube& P);

struct Certificate {
  std::string name;
  Real measured = 0;
  Real limit = 0;
  bool asserted = true;  // informational entries only record the measured constant
  bool pass = true;
  std::optional<DyadicCube> witness;
};

struct Accounting {
  Rational measure;  // sum of |P| over the collection
  Rational limit;    // proof bound, times |base|
  bool pass = true;
};

struct StoppingResult {
  DyadicCube base;
  std::array<CubeSet, 5> parts;
  CubeSet merged;
  Rational packed;  // sum over merged
  Rational ratio;   // packed / |base|
  bool packing_ok = true;
  std::array<Accounting, 5> accounting;
  std::vector<Certificate> certificates;
  TestFunction special;  // u (first) or v (second)
};

StoppingResult first_stopping(const StoppingContext& ctx);

struct PrunedFunction {
  TestFunction value;
  CubeSet parents;   // parents of merged cubes of the mean type
  CubeSet siblings;  // their siblings outside that collection
  bool mean_zero = true;
  bool supported = true;
  Real norm_ratio = 0;  // ||pruned||^p / ||original||^p
  std::string detail;   // set when a needed average of the special function vanishes
};

// Collects the stopped cubes of the mean type and their parents and siblings.
PrunedFunction prune(const TestFunction& f, const TestFunction& special, const DyadicCube& base,
                     const StoppingResult& res, const Rational& p);
PrunedFunction prune_g(const StoppingContext& ctx, const StoppingResult& first);

enum class Side { first, second };

struct BufferReport {
  std::vector<std::pair<DyadicCube, TestFunction>> xi;
  bool mean_zero = true;
  bool supported = true;
  int parent_overlap = 0;
  int sibling_overlap = 0;
  Rational overlap_limit;  // 2^d / eps
  bool overlap_ok = true;
};

// Buffer functions for the parent cubes; `data` is g (first side) or h (second side).
BufferReport buffer_functions(const StoppingContext& ctx, const StoppingResult& res, const PrunedFunction& pruned,
                              Side side, const TestFunction& data, const Path& path);

struct RChoice {
  DyadicCube cube;
  Rational score;  // |form_R(h, gfrak - [gfrak]_R [u]_R^{-1} u)| / |R|
  TestFunction ghat;
  Rational correction;  // [gfrak]_R / [u]_R
};
RChoice choose_R(const StoppingContext& ctx, const StoppingResult& first, const TestFunction& gfrak);

StoppingResult second_stopping(const StoppingContext& ctx, const StoppingResult& first, const TestFunction& gfrak,
                               const DyadicCube& R);
PrunedFunction prune_h(const StoppingContext& ctx, const StoppingResult& second, const DyadicCube& R);

enum class CoefficientCase { ratio, multiple, zero };

struct CoefficientMap {
  std::vector<DyadicCube> cubes;  // every T inside the base down to the resolution, tree order
  std::vector<Rational> values;
  std::vector<CoefficientCase> cases;
  bool representable = true;
  std::optional<DyadicCube> failure;
  Real measured_bound = 0;  // max |value| / scale

  const Rational& at(const DyadicCube& T) const;
};

// [fn]_T = c_T [w]_T when the average is nonzero; otherwise fn_T = c_T w_T, zero when w_T = 0.
// `scale` normalizes the reported bound.
CoefficientMap coefficient_map(const TestFunction& fn, const TestFunction& w, const DyadicCube& base, int resolution,
                               const Real& scale);

struct TelescopeReport {
  Rational top;       // form_R(psi_R v, phi_R u)
  Rational diag_h;    // first diagonal sum
  Rational diag_g;    // second diagonal sum
  Rational diag_hg;   // double difference
  Rational reconstructed;
  Rational target;    // form_R(hfrak, ghat)
  Rational residual;
  bool precondition = true;
  std::string detail;
};
TelescopeReport telescope(const StoppingContext& ctx, const DyadicCube& R, const TestFunction& hfrak,
                          const TestFunction& ghat, const TestFunction& v, const CoefficientMap& phi,
                          const CoefficientMap& psi);

struct ThetaReport {
  TestFunction theta;
  Rational integral;
  bool mean_zero = true;
  std::size_t tree_cubes = 0;    // cubes outside stopping cubes and their parents
  std::size_t parent_cubes = 0;  // parents of stopping cubes outside the mean-type parents
  Real norm = 0;                 // ||theta||_r
  Real ratio = 0;                // against |R|^{1/r} |Q|^{-1/r-1/q} ||g||_q ||h||_r
};
ThetaReport paraproduct_theta(const StoppingContext& ctx, const StoppingResult& second, const PrunedFunction& hprune,
                              const CoefficientMap& phi, const CoefficientMap& psi, const TestFunction& v);

enum class FlattenMode { power, average };

struct Flattened {
  TestFunction value;
  bool exact = true;  // false when power averages were rounded upward
};
// Constant on each partition cell: mean of |w|^p (power) or mean of w (average).
Flattened flatten_on_partition(const TestFunction& w, const std::vector<DyadicCube>& partition, FlattenMode mode,
                               const Rational& p);
// Stopping cubes plus the finest cubes outside them.
std::vector<DyadicCube> stopping_partition(const StoppingResult& res, int resolution);

struct StepReport {
  Rational eps;
  StoppingResult first;
  PrunedFunction gfrak;
  BufferReport first_buffers;
  RChoice R;
  StoppingResult second;
  PrunedFunction hfrak;
  BufferReport second_buffers;
  CoefficientMap phi;
  CoefficientMap psi;
  TelescopeReport telescope;
  ThetaReport theta;
  Certificate flatten_power;
  Certificate flatten_average;
  std::vector<std::string> violations;  // contradiction events
  bool representable = true;
};

// Runs every construction of the step in order and gathers assertion failures.
StepReport induction_step(const StepData& step);

}  // namespace dytb
