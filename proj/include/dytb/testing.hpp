#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dytb/forms.hpp"
#include "dytb/paths.hpp"

namespace dytb {

struct TestingConstantReport {
  Magnitude constant;  // exact when every norm involved is
  Real value = 0;
  std::optional<Path> path;         // T(b) only
  std::vector<DyadicCube> cubes;    // witness cube (T(1)) or nested tuple (T(b))
  int slot = -1;                    // 0-based slot carrying the free function
  TestFunction extremizer;
  std::size_t candidates = 0;
};

// sup over P and j of ||phi restricted to P||_{p_j'} / prod_{i != j} ||1_P||_{p_i}, phi the
// partial functional in slot j with 1_P elsewhere.
TestingConstantReport t1_testing_constant(const PerfectForm& form, const HolderTuple& tuple);

// Local T(b) testing constant for paths of length k, nested tuples down to the form's resolution.
TestingConstantReport tb_testing_constant(const PerfectForm& form, const PathCollection& paths,
                                          const BFamily& family, const HolderTuple& tuple, int k);

// One testing candidate: free slot `slot` supported on `support`, the other slots fixed.
// Zero when a fixed function vanishes.
Magnitude testing_ratio(const PerfectForm& form, const HolderTuple& tuple, std::span<const TestFunction> fixed,
                        int slot, const DyadicCube& support, TestFunction* extremizer = nullptr);

struct NormEstimate {
  Real lower = 0;
  Real upper = 0;
  std::vector<TestFunction> witness;
  int iterations = 0;
  std::uint64_t seed = 0;
  bool monotone = true;
};

struct BracketOptions {
  int restarts = 4;
  int sweeps = 12;
};
NormEstimate full_norm_bracket(const PerfectForm& form, const HolderTuple& tuple, std::uint64_t seed,
                               const BracketOptions& opts = {});

// Certified upper bound on the full norm: per-level coefficient maxima summed, or the
// largest kernel entry for dense forms; the smaller of what is available.
Real certified_norm_bound(const PerfectForm& form);

// Floating-point search from every sign pattern; at most 8 leaves per slot.
NormEstimate full_norm_bruteforce(const PerfectForm& form, const HolderTuple& tuple, int max_sweeps = 2000);

struct GlobalTbReport {
  bool accretive = true;
  std::optional<DyadicCube> accretivity_witness;
  int accretivity_slot = -1;
  Rational min_average;   // smallest |[b_j]_Q|
  Rational sup_norm;      // max_j ||b_j||_inf
  Rational weak_sup;      // max_Q |form(b_1 1_Q, ..., b_n 1_Q)|
  std::optional<DyadicCube> weak_witness;
  Real bmo_sup = 0;       // max over slots and Haar functions of |form(..g..)| / ||g||_H1
  std::optional<DyadicCube> bmo_witness;
  int bmo_slot = -1;
  Real least_constant = 1;  // smallest B >= 1 meeting the three upper conditions
};
GlobalTbReport global_tb_check(const PerfectForm& form, const std::vector<TestFunction>& bs);

// b_{sigma,Q,sigma(j)} = b_slot 1_Q / [b_slot]_Q for every path in `paths` of length k.
// Throws std::domain_error when an average on a needed cube vanishes.
BFamily derived_local_family(const std::vector<TestFunction>& bs, const PathCollection& paths, int k,
                             const HolderTuple& tuple, int resolution);

}  // namespace dytb
