#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dytb/forms.hpp"
#include "dytb/funcspace.hpp"
#include "dytb/lattice.hpp"

namespace dytb {

// Injective map {1..k} -> {1..n}; values are 1-based slot numbers.
struct Path {
  int n = 0;
  std::vector<int> values;

  static Path make(int n, std::vector<int> values);
  int length() const { return static_cast<int>(values.size()); }
  int operator()(int i) const { return values[static_cast<std::size_t>(i - 1)]; }  // 1-based
  bool in_range(int s) const;
  Path prefix(int j) const;

  friend bool operator==(const Path&, const Path&) = default;
  friend auto operator<=>(const Path& a, const Path& b) {
    if (a.values.size() != b.values.size()) return a.values.size() <=> b.values.size();
    return a.values <=> b.values;
  }
};

std::string to_string(const Path& p);  // "(2,1)"

class PathCollection {
 public:
  PathCollection() = default;
  PathCollection(int n, std::vector<Path> paths);

  int n() const { return n_; }
  const std::vector<Path>& paths() const { return paths_; }
  std::size_t size() const { return paths_.size(); }
  bool contains(const Path& p) const;
  std::vector<Path> of_length(int k) const;

 private:
  int n_ = 0;
  std::vector<Path> paths_;
};

struct AdmissibilityReport {
  bool pass = true;
  int failed_condition = 0;
  std::optional<Path> witness;
  std::string detail;
};
AdmissibilityReport validate_admissible(const PathCollection& paths);

PathCollection all_paths(int n);
// Paths whose range contains {1..k-1} and whose first j values hit at least j-1 of {1..j}.
PathCollection build_example_collection(int n);

// Cubes by slot (0-based vector, slot s at index s-1) together with the path.
struct NestedTuple {
  Path path;
  std::vector<DyadicCube> cubes;

  const DyadicCube& slot(int s) const { return cubes[static_cast<std::size_t>(s - 1)]; }
};
bool validate_nested(const NestedTuple& t, std::string* why = nullptr);
// All tuples nested for `path` with cubes down to level `depth`.
std::vector<NestedTuple> nested_tuples(const Path& path, int dim, int depth);

// Key of b_{sigma,Q,sigma(j)}: sigma on {1..j} and Q_{sigma(1)}..Q_{sigma(j)}.
struct BKey {
  std::vector<int> prefix;
  std::vector<DyadicCube> cubes;

  int slot() const { return prefix.back(); }
  const DyadicCube& cube() const { return cubes.back(); }
  friend bool operator==(const BKey&, const BKey&) = default;
};
BKey prefix_key(const Path& path, const std::vector<DyadicCube>& cubes, int j);
std::string key_string(const BKey& k);  // "σ:1,3|Q:0/0,1/1"
BKey parse_key(int dim, const std::string& s);

class BFamily {
 public:
  enum class Mode { prefix, permissive };

  BFamily(HolderTuple tuple, Rational bound, int dim, int resolution, Mode mode = Mode::prefix);

  const HolderTuple& tuple() const { return tuple_; }
  const Rational& bound() const { return bound_; }
  int dim() const { return dim_; }
  int resolution() const { return resolution_; }
  Mode mode() const { return mode_; }

  // Prefix mode. Enforces support, mean and norm bound; throws std::invalid_argument.
  void insert(const BKey& key, TestFunction b);
  // Permissive mode: one value per (sigma, Q, j); nothing enforced.
  void insert_full(const NestedTuple& t, int j, TestFunction b);

  // b_{sigma,Q,sigma(j)}; throws std::out_of_range when missing.
  const TestFunction& get(const Path& path, const std::vector<DyadicCube>& cubes, int j) const;
  const TestFunction* find(const BKey& key) const;
  const std::map<std::string, TestFunction>& entries() const { return entries_; }

 private:
  HolderTuple tuple_;
  Rational bound_;
  int dim_;
  int resolution_;
  Mode mode_;
  std::map<std::string, TestFunction> entries_;
};

std::string full_key_string(const NestedTuple& t, int j);

// Support, mean and norm-bound checks for one candidate b on cube Q and slot exponent p.
std::string check_b(const TestFunction& b, const DyadicCube& cube, const Rational& p, const Rational& bound);

ValidationReport validate_bfamily(const BFamily& family, const PathCollection& paths, int k);

// Family for paths of length k: b~_{s~,Q,s~(j)} := b_{s,Q,s(j)} for any extension s.
BFamily derive_reduced_family(const BFamily& family, const PathCollection& paths, int k_plus_one);

struct PopulateOptions {
  bool perturb = true;
  int max_halvings = 6;
};
// 1_Q plus a seeded mean-zero perturbation, shrunk until the norm bound holds.
BFamily populate_family(const PathCollection& paths, int k, const HolderTuple& tuple, const Rational& bound,
                        int dim, int resolution, std::uint64_t seed, const PopulateOptions& opts = {});

}  // namespace dytb
