#include "dytb/lattice.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace dytb {

namespace {
void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("cube dimension out of range");
}
void check_same_dim(const DyadicCube& a, const DyadicCube& b) {
  if (a.dim != b.dim) throw std::invalid_argument("dimension mismatch");
}
}  // namespace

DyadicCube DyadicCube::root(int dim) {
  check_dim(dim);
  DyadicCube c;
  c.dim = dim;
  return c;
}

DyadicCube DyadicCube::make(int dim, int level, const std::vector<std::uint32_t>& index) {
  check_dim(dim);
  if (level < 0 || level > 30) throw std::invalid_argument("cube level out of range");
  if (index.size() != static_cast<std::size_t>(dim))
    throw std::invalid_argument("cube index length differs from dimension");
  DyadicCube c;
  c.dim = dim;
  c.level = level;
  for (int t = 0; t < dim; ++t) {
    if (index[static_cast<std::size_t>(t)] >= (1u << level))
      throw std::invalid_argument("cube index outside [0, 2^level)");
    c.index[static_cast<std::size_t>(t)] = index[static_cast<std::size_t>(t)];
  }
  return c;
}

std::uint64_t DyadicCube::linear_index() const {
  std::uint64_t r = 0;
  for (int t = 0; t < dim; ++t) r = (r << level) | coord(t);
  return r;
}

DyadicCube DyadicCube::from_linear(int dim, int level, std::uint64_t linear) {
  DyadicCube c;
  c.dim = dim;
  c.level = level;
  std::uint64_t mask = (std::uint64_t{1} << level) - 1;
  for (int t = dim - 1; t >= 0; --t) {
    c.index[static_cast<std::size_t>(t)] = static_cast<std::uint32_t>(linear & mask);
    linear >>= level;
  }
  return c;
}

std::strong_ordering operator<=>(const DyadicCube& a, const DyadicCube& b) {
  if (auto o = a.dim <=> b.dim; o != 0) return o;
  if (auto o = a.level <=> b.level; o != 0) return o;
  for (int t = 0; t < a.dim; ++t)
    if (auto o = a.coord(t) <=> b.coord(t); o != 0) return o;
  return std::strong_ordering::equal;
}

DyadicCube child(const DyadicCube& c, unsigned i) {
  DyadicCube r = c;
  r.level = c.level + 1;
  for (int t = 0; t < c.dim; ++t) {
    unsigned bit = (i >> (c.dim - 1 - t)) & 1u;
    r.index[static_cast<std::size_t>(t)] = 2 * c.coord(t) + bit;
  }
  return r;
}

std::vector<DyadicCube> children(const DyadicCube& c) {
  std::vector<DyadicCube> out;
  unsigned m = 1u << c.dim;
  out.reserve(m);
  for (unsigned i = 0; i < m; ++i) out.push_back(child(c, i));
  return out;
}

unsigned child_position(const DyadicCube& c) {
  if (c.level == 0) throw std::domain_error("no parent");
  unsigned i = 0;
  for (int t = 0; t < c.dim; ++t) i = (i << 1) | (c.coord(t) & 1u);
  return i;
}

DyadicCube parent(const DyadicCube& c) {
  if (c.level == 0) throw std::domain_error("no parent");
  DyadicCube r = c;
  r.level = c.level - 1;
  for (int t = 0; t < c.dim; ++t) r.index[static_cast<std::size_t>(t)] = c.coord(t) >> 1;
  return r;
}

DyadicCube ancestor_at(const DyadicCube& c, int level) {
  if (level < 0 || level > c.level) throw std::domain_error("no ancestor at that level");
  DyadicCube r = c;
  int shift = c.level - level;
  r.level = level;
  for (int t = 0; t < c.dim; ++t) r.index[static_cast<std::size_t>(t)] = c.coord(t) >> shift;
  return r;
}

bool contains(const DyadicCube& a, const DyadicCube& b) {
  check_same_dim(a, b);
  return a.level <= b.level && ancestor_at(b, a.level) == a;
}

bool strictly_contains(const DyadicCube& a, const DyadicCube& b) {
  return a.level < b.level && contains(a, b);
}

Relation relate(const DyadicCube& a, const DyadicCube& b) {
  check_same_dim(a, b);
  if (a == b) return Relation::equal;
  if (contains(a, b)) return Relation::contains;
  if (contains(b, a)) return Relation::contained;
  return Relation::disjoint;
}

// ---- CubeSet --------------------------------------------------------------

CubeSet::CubeSet(std::vector<DyadicCube> cubes) : cubes_(std::move(cubes)) {
  std::sort(cubes_.begin(), cubes_.end());
  cubes_.erase(std::unique(cubes_.begin(), cubes_.end()), cubes_.end());
  for (std::size_t i = 1; i < cubes_.size(); ++i) check_same_dim(cubes_[0], cubes_[i]);
}

bool CubeSet::insert(const DyadicCube& c) {
  if (!cubes_.empty()) check_same_dim(cubes_.front(), c);
  auto it = std::lower_bound(cubes_.begin(), cubes_.end(), c);
  if (it != cubes_.end() && *it == c) return false;
  cubes_.insert(it, c);
  return true;
}

bool CubeSet::contains(const DyadicCube& c) const {
  return std::binary_search(cubes_.begin(), cubes_.end(), c);
}

Rational CubeSet::total_volume() const {
  Rational v = 0;
  for (const auto& c : cubes_) v += c.volume();
  return v;
}

bool CubeSet::covers(const DyadicCube& c) const {
  for (int l = 0; l <= c.level; ++l)
    if (contains(ancestor_at(c, l))) return true;
  return false;
}

bool CubeSet::covers_strictly(const DyadicCube& c) const {
  for (int l = 0; l < c.level; ++l)
    if (contains(ancestor_at(c, l))) return true;
  return false;
}

CubeSet maximal_cubes(const CubeSet& s) {
  std::vector<DyadicCube> out;
  for (const auto& c : s)
    if (!s.covers_strictly(c)) out.push_back(c);
  return CubeSet(std::move(out));
}

CubeSet set_union(const CubeSet& a, const CubeSet& b) {
  std::vector<DyadicCube> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  return CubeSet(std::move(all));
}

// ---- DyadicTree -----------------------------------------------------------

DyadicTree::DyadicTree(int dim, int depth) : dim_(dim), depth_(depth) {
  check_dim(dim);
  if (depth < 0 || dim * depth > 24) throw std::invalid_argument("tree too large");
  offsets_.push_back(0);
  for (int l = 0; l <= depth; ++l) offsets_.push_back(offsets_.back() + (std::size_t{1} << (dim * l)));
}

std::size_t DyadicTree::level_count(int level) const { return std::size_t{1} << (dim_ * level); }

std::size_t DyadicTree::id(const DyadicCube& c) const {
  if (c.dim != dim_ || c.level > depth_) throw std::invalid_argument("cube outside tree");
  return level_offset(c.level) + c.linear_index();
}

int DyadicTree::level_of(std::size_t id) const {
  int l = 0;
  while (offsets_[static_cast<std::size_t>(l) + 1] <= id) ++l;
  return l;
}

DyadicCube DyadicTree::cube(std::size_t id) const {
  int l = level_of(id);
  return DyadicCube::from_linear(dim_, l, id - level_offset(l));
}

std::size_t DyadicTree::parent_id(std::size_t id) const { return this->id(parent(cube(id))); }

std::size_t DyadicTree::child_id(std::size_t id, unsigned i) const { return this->id(child(cube(id), i)); }

std::vector<std::size_t> DyadicTree::leaves_in(const DyadicCube& c) const {
  if (c.dim != dim_ || c.level > depth_) throw std::invalid_argument("cube outside tree");
  int shift = depth_ - c.level;
  std::vector<std::size_t> out;
  std::size_t side = std::size_t{1} << shift;
  std::size_t total = std::size_t{1} << (dim_ * shift);
  out.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    // k enumerates offsets row-major within c
    DyadicCube leaf;
    leaf.dim = dim_;
    leaf.level = depth_;
    std::size_t rem = k;
    for (int t = dim_ - 1; t >= 0; --t) {
      leaf.index[static_cast<std::size_t>(t)] =
          static_cast<std::uint32_t>((c.coord(t) << shift) + (rem % side));
      rem /= side;
    }
    out.push_back(leaf.linear_index());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> DyadicTree::subtree(const DyadicCube& c) const {
  std::vector<std::size_t> out;
  std::vector<DyadicCube> frontier{c};
  while (!frontier.empty()) {
    std::vector<DyadicCube> next;
    for (const auto& q : frontier) {
      out.push_back(id(q));
      if (q.level < depth_)
        for (const auto& ch : children(q)) next.push_back(ch);
    }
    frontier = std::move(next);
  }
  return out;
}

std::string cube_token(const DyadicCube& c) {
  std::ostringstream os;
  os << c.level << '/';
  for (int t = 0; t < c.dim; ++t) os << (t ? "." : "") << c.coord(t);
  return os.str();
}

DyadicCube parse_cube_token(int dim, const std::string& token) {
  auto slash = token.find('/');
  if (slash == std::string::npos) throw std::invalid_argument("bad cube token '" + token + "'");
  int level = std::stoi(token.substr(0, slash));
  std::vector<std::uint32_t> idx;
  std::stringstream ss(token.substr(slash + 1));
  std::string part;
  while (std::getline(ss, part, '.')) idx.push_back(static_cast<std::uint32_t>(std::stoul(part)));
  return DyadicCube::make(dim, level, idx);
}

}  // namespace dytb
