#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "dytb/numeric.hpp"

namespace dytb {

inline constexpr int kMaxDim = 4;

// Dyadic subcube of [0,1)^d: prod [index_t 2^-level, (index_t+1) 2^-level).
struct DyadicCube {
  int dim = 1;
  int level = 0;
  std::array<std::uint32_t, kMaxDim> index{};

  static DyadicCube root(int dim);
  static DyadicCube make(int dim, int level, const std::vector<std::uint32_t>& index);

  Rational volume() const { return two_pow(-static_cast<long>(dim) * level); }
  std::uint32_t coord(int t) const { return index[static_cast<std::size_t>(t)]; }
  // Row-major position among cubes of the same level (first coordinate most significant).
  std::uint64_t linear_index() const;
  static DyadicCube from_linear(int dim, int level, std::uint64_t linear);

  friend bool operator==(const DyadicCube& a, const DyadicCube& b) = default;
  friend std::strong_ordering operator<=>(const DyadicCube& a, const DyadicCube& b);
};

enum class Relation { equal, contains, contained, disjoint };

std::vector<DyadicCube> children(const DyadicCube& c);
// i in [0, 2^d): bit (d-1-t) of i selects the upper half in coordinate t.
DyadicCube child(const DyadicCube& c, unsigned i);
// Which child of its parent `c` is.
unsigned child_position(const DyadicCube& c);
DyadicCube parent(const DyadicCube& c);
DyadicCube ancestor_at(const DyadicCube& c, int level);
Relation relate(const DyadicCube& a, const DyadicCube& b);
// a ⊇ b.
bool contains(const DyadicCube& a, const DyadicCube& b);
bool strictly_contains(const DyadicCube& a, const DyadicCube& b);

// Sorted, duplicate-free set of cubes of one dimension.
class CubeSet {
 public:
  CubeSet() = default;
  explicit CubeSet(std::vector<DyadicCube> cubes);

  bool insert(const DyadicCube& c);
  bool contains(const DyadicCube& c) const;
  bool empty() const { return cubes_.empty(); }
  std::size_t size() const { return cubes_.size(); }
  auto begin() const { return cubes_.begin(); }
  auto end() const { return cubes_.end(); }
  const std::vector<DyadicCube>& cubes() const { return cubes_; }
  Rational total_volume() const;
  // Some member contains c (not necessarily strictly).
  bool covers(const DyadicCube& c) const;
  bool covers_strictly(const DyadicCube& c) const;

  friend bool operator==(const CubeSet&, const CubeSet&) = default;

 private:
  std::vector<DyadicCube> cubes_;
};

CubeSet maximal_cubes(const CubeSet& s);
CubeSet set_union(const CubeSet& a, const CubeSet& b);

// All cubes of [0,1)^d down to level `depth`, indexed densely level by level.
class DyadicTree {
 public:
  DyadicTree(int dim, int depth);

  int dim() const { return dim_; }
  int depth() const { return depth_; }
  std::size_t size() const { return offsets_.back(); }
  std::size_t level_offset(int level) const { return offsets_[static_cast<std::size_t>(level)]; }
  std::size_t level_count(int level) const;
  std::size_t leaf_count() const { return level_count(depth_); }

  std::size_t id(const DyadicCube& c) const;
  DyadicCube cube(std::size_t id) const;
  int level_of(std::size_t id) const;
  std::size_t parent_id(std::size_t id) const;
  std::size_t child_id(std::size_t id, unsigned i) const;
  unsigned child_count() const { return 1u << dim_; }

  // Leaf positions (row-major at the deepest level) inside c.
  std::vector<std::size_t> leaves_in(const DyadicCube& c) const;
  // Node ids of c and all of its descendants within the tree.
  std::vector<std::size_t> subtree(const DyadicCube& c) const;

 private:
  int dim_;
  int depth_;
  std::vector<std::size_t> offsets_;
};

std::string cube_token(const DyadicCube& c);  // "level/i1.i2"
DyadicCube parse_cube_token(int dim, const std::string& token);

}  // namespace dytb
