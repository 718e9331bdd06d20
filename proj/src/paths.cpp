#include "dytb/paths.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dytb/rng.hpp"

namespace dytb {

Path Path::make(int n, std::vector<int> values) {
  if (n < 1) throw std::invalid_argument("path needs n >= 1");
  if (values.empty() || static_cast<int>(values.size()) > n) throw std::invalid_argument("path length must be in [1, n]");
  std::set<int> seen;
  for (int v : values) {
    if (v < 1 || v > n) throw std::invalid_argument("path value outside 1..n");
    if (!seen.insert(v).second) throw std::invalid_argument("path is not injective");
  }
  return Path{n, std::move(values)};
}

bool Path::in_range(int s) const { return std::find(values.begin(), values.end(), s) != values.end(); }

Path Path::prefix(int j) const {
  return Path{n, std::vector<int>(values.begin(), values.begin() + j)};
}

std::string to_string(const Path& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.values.size(); ++i) s += (i ? "," : "") + std::to_string(p.values[i]);
  return s + ")";
}

PathCollection::PathCollection(int n, std::vector<Path> paths) : n_(n), paths_(std::move(paths)) {
  for (const auto& p : paths_)
    if (p.n != n) throw std::invalid_argument("paths in a collection must share n");
  std::sort(paths_.begin(), paths_.end());
  paths_.erase(std::unique(paths_.begin(), paths_.end()), paths_.end());
}

bool PathCollection::contains(const Path& p) const { return std::binary_search(paths_.begin(), paths_.end(), p); }

std::vector<Path> PathCollection::of_length(int k) const {
  std::vector<Path> out;
  for (const auto& p : paths_)
    if (p.length() == k) out.push_back(p);
  return out;
}

AdmissibilityReport validate_admissible(const PathCollection& paths) {
  AdmissibilityReport r;
  int n = paths.n();
  for (int j = 1; j <= n; ++j) {
    Path p{n, {j}};
    if (!paths.contains(p)) {
      r.pass = false;
      r.failed_condition = 1;
      r.witness = p;
      r.detail = "no length-one path starting at " + std::to_string(j);
      return r;
    }
  }
  for (const auto& p : paths.paths()) {
    if (p.length() >= n) continue;
    bool found = false;
    for (const auto& q : paths.of_length(p.length() + 1))
      if (q.prefix(p.length()) == p) found = true;
    if (!found) {
      r.pass = false;
      r.failed_condition = 2;
      r.witness = p;
      r.detail = "path " + to_string(p) + " has no extension";
      return r;
    }
  }
  for (const auto& p : paths.paths()) {
    int k = p.length();
    if (k < 2) continue;
    Path t = p;
    std::swap(t.values[static_cast<std::size_t>(k - 2)], t.values[static_cast<std::size_t>(k - 1)]);
    if (!paths.contains(t)) {
      r.pass = false;
      r.failed_condition = 3;
      r.witness = p;
      r.detail = "path " + to_string(p) + " lacks its swapped partner " + to_string(t);
      return r;
    }
  }
  r.detail = "admissible";
  return r;
}

namespace {
void enumerate_paths(int n, const std::function<void(const Path&)>& visit) {
  std::vector<int> cur;
  std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
  std::function<void()> rec = [&] {
    if (!cur.empty()) visit(Path{n, cur});
    if (static_cast<int>(cur.size()) == n) return;
    for (int v = 1; v <= n; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = true;
      cur.push_back(v);
      rec();
      cur.pop_back();
      used[static_cast<std::size_t>(v)] = false;
    }
  };
  rec();
}
}  // namespace

PathCollection all_paths(int n) {
  if (n < 1 || n > 8) throw std::invalid_argument("path enumeration supports 1 <= n <= 8");
  std::vector<Path> out;
  enumerate_paths(n, [&](const Path& p) { out.push_back(p); });
  return PathCollection(n, std::move(out));
}

PathCollection build_example_collection(int n) {
  if (n < 2 || n > 8) throw std::invalid_argument("example collection supports 2 <= n <= 8");
  std::vector<Path> out;
  enumerate_paths(n, [&](const Path& p) {
    int k = p.length();
    for (int m = 1; m <= k - 1; ++m)
      if (!p.in_range(m)) return;
    for (int j = 1; j <= k; ++j) {
      int hits = 0;
      for (int i = 1; i <= j; ++i)
        if (p(i) <= j) ++hits;
      if (hits < j - 1) return;
    }
    out.push_back(p);
  });
  return PathCollection(n, std::move(out));
}

bool validate_nested(const NestedTuple& t, std::string* why) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  const Path& s = t.path;
  int n = s.n, k = s.length();
  if (static_cast<int>(t.cubes.size()) != n) return fail("tuple needs n cubes");
  for (int i = 1; i <= k; ++i)
    for (int j = i + 1; j <= k; ++j)
      if (!contains(t.slot(s(i)), t.slot(s(j))))
        return fail("Q_" + std::to_string(s(i)) + " does not contain Q_" + std::to_string(s(j)));
  for (int r = 1; r <= n; ++r)
    if (!s.in_range(r) && t.slot(r) != t.slot(s(k)))
      return fail("off-range Q_" + std::to_string(r) + " differs from Q_" + std::to_string(s(k)));
  if (k == n && n >= 2 && t.slot(s(n - 1)) != t.slot(s(n)))
    return fail("full-length path needs equal last two cubes");
  return true;
}

std::vector<NestedTuple> nested_tuples(const Path& path, int dim, int depth) {
  std::vector<NestedTuple> out;
  int n = path.n, k = path.length();
  std::vector<DyadicCube> chain;
  std::function<void(const DyadicCube&)> extend = [&](const DyadicCube& c) {
    chain.push_back(c);
    if (static_cast<int>(chain.size()) == k) {
      NestedTuple t{path, std::vector<DyadicCube>(static_cast<std::size_t>(n), c)};
      for (int l = 1; l <= k; ++l) t.cubes[static_cast<std::size_t>(path(l) - 1)] = chain[static_cast<std::size_t>(l - 1)];
      out.push_back(std::move(t));
    } else if (k == n && static_cast<int>(chain.size()) == n - 1) {
      extend(c);
    } else {
      DyadicTree tree(dim, depth);
      for (auto id : tree.subtree(c)) extend(tree.cube(id));
    }
    chain.pop_back();
  };
  DyadicTree tree(dim, depth);
  for (std::size_t id = 0; id < tree.size(); ++id) extend(tree.cube(id));
  return out;
}

BKey prefix_key(const Path& path, const std::vector<DyadicCube>& cubes, int j) {
  BKey key;
  for (int l = 1; l <= j; ++l) {
    key.prefix.push_back(path(l));
    key.cubes.push_back(cubes[static_cast<std::size_t>(path(l) - 1)]);
  }
  return key;
}

std::string key_string(const BKey& k) {
  std::string s = "σ:";
  for (std::size_t i = 0; i < k.prefix.size(); ++i) s += (i ? "," : "") + std::to_string(k.prefix[i]);
  s += "|Q:";
  for (std::size_t i = 0; i < k.cubes.size(); ++i) s += (i ? "," : "") + cube_token(k.cubes[i]);
  return s;
}

BKey parse_key(int dim, const std::string& s) {
  const std::string head = "σ:";
  auto bar = s.find("|Q:");
  if (s.rfind(head, 0) != 0 || bar == std::string::npos) throw std::invalid_argument("bad family key '" + s + "'");
  BKey k;
  std::stringstream a(s.substr(head.size(), bar - head.size()));
  std::string part;
  while (std::getline(a, part, ',')) k.prefix.push_back(std::stoi(part));
  std::stringstream b(s.substr(bar + 3));
  while (std::getline(b, part, ',')) k.cubes.push_back(parse_cube_token(dim, part));
  if (k.prefix.empty() || k.prefix.size() != k.cubes.size()) throw std::invalid_argument("bad family key '" + s + "'");
  return k;
}

std::string full_key_string(const NestedTuple& t, int j) {
  std::string s = "σ:";
  for (std::size_t i = 0; i < t.path.values.size(); ++i) s += (i ? "," : "") + std::to_string(t.path.values[i]);
  s += "|Q:";
  for (std::size_t i = 0; i < t.cubes.size(); ++i) s += (i ? "," : "") + cube_token(t.cubes[i]);
  return s + "|j:" + std::to_string(j);
}

std::string check_b(const TestFunction& b, const DyadicCube& cube, const Rational& p, const Rational& bound) {
  TestFunction inside = restrict(b, cube);
  if (!(inside == b.upsampled(inside.resolution())))
    return "support leaves " + cube_token(cube);
  if (integral(b) != cube.volume()) return "mean condition fails on " + cube_token(cube);
  NormValue nv = lp_norm(b, p);
  Rational cap = bound * cube.volume();
  if (nv.power) {
    if (*nv.power > cap) return "norm bound fails on " + cube_token(cube);
  } else {
    Real lhs = real_pow(nv.value, p);
    if (lhs * (1 + comparison_slack()) > to_real(cap)) return "norm bound not certified on " + cube_token(cube);
  }
  return "";
}

BFamily::BFamily(HolderTuple tuple, Rational bound, int dim, int resolution, Mode mode)
    : tuple_(std::move(tuple)), bound_(std::move(bound)), dim_(dim), resolution_(resolution), mode_(mode) {
  if (bound_ < 1) throw std::invalid_argument("family bound must be at least 1");
}

void BFamily::insert(const BKey& key, TestFunction b) {
  if (mode_ != Mode::prefix) throw std::logic_error("insert by prefix key needs prefix mode");
  if (b.dim() != dim_) throw std::invalid_argument("family function dimension mismatch");
  std::string err = check_b(b, key.cube(), tuple_[key.slot() - 1], bound_);
  if (!err.empty()) throw std::invalid_argument("b for " + key_string(key) + ": " + err);
  entries_[key_string(key)] = std::move(b);
}

void BFamily::insert_full(const NestedTuple& t, int j, TestFunction b) {
  if (mode_ != Mode::permissive) throw std::logic_error("insert_full needs permissive mode");
  entries_[full_key_string(t, j)] = std::move(b);
}

const TestFunction* BFamily::find(const BKey& key) const {
  auto it = entries_.find(key_string(key));
  return it == entries_.end() ? nullptr : &it->second;
}

const TestFunction& BFamily::get(const Path& path, const std::vector<DyadicCube>& cubes, int j) const {
  std::string key = mode_ == Mode::prefix ? key_string(prefix_key(path, cubes, j))
                                          : full_key_string(NestedTuple{path, cubes}, j);
  auto it = entries_.find(key);
  if (it == entries_.end()) throw std::out_of_range("family has no entry " + key);
  return it->second;
}

ValidationReport validate_bfamily(const BFamily& family, const PathCollection& paths, int k) {
  ValidationReport rep;
  rep.axiom = "bfamily";
  std::size_t checked = 0;
  std::map<std::string, const TestFunction*> by_prefix;
  for (const auto& sigma : paths.of_length(k)) {
    for (const auto& t : nested_tuples(sigma, family.dim(), family.resolution())) {
      for (int j = 1; j < k; ++j) {
        const TestFunction* b = nullptr;
        try {
          b = &family.get(sigma, t.cubes, j);
        } catch (const std::out_of_range& e) {
          rep.pass = false;
          rep.detail = e.what();
          return rep;
        }
        ++checked;
        const DyadicCube& cube = t.slot(sigma(j));
        std::string err = check_b(*b, cube, family.tuple()[sigma(j) - 1], family.bound());
        if (!err.empty()) {
          rep.pass = false;
          rep.witness_cube = cube;
          rep.witness = {*b};
          rep.detail = full_key_string(t, j) + ": " + err;
          return rep;
        }
        std::string pk = key_string(prefix_key(sigma, t.cubes, j));
        auto [it, fresh] = by_prefix.emplace(pk, b);
        if (!fresh && !(*it->second == *b)) {
          rep.pass = false;
          rep.witness_cube = cube;
          rep.witness = {*it->second, *b};
          rep.detail = "interdependence fails for prefix " + pk;
          return rep;
        }
      }
    }
  }
  rep.detail = std::to_string(checked) + " family entries satisfy support, mean, norm bound and interdependence";
  return rep;
}

BFamily derive_reduced_family(const BFamily& family, const PathCollection& paths, int k_plus_one) {
  int k = k_plus_one - 1;
  if (k < 1) throw std::invalid_argument("cannot reduce below length one");
  BFamily out(family.tuple(), family.bound(), family.dim(), family.resolution(), BFamily::Mode::prefix);
  for (const auto& st : paths.of_length(k)) {
    std::vector<Path> ext;
    for (const auto& s : paths.of_length(k_plus_one))
      if (s.prefix(k) == st) ext.push_back(s);
    if (ext.empty()) throw std::invalid_argument("collection defect: " + to_string(st) + " has no extension");
    for (const auto& t : nested_tuples(st, family.dim(), family.resolution())) {
      for (int j = 1; j < k; ++j) {
        const TestFunction& first = family.get(ext.front(), t.cubes, j);
        for (std::size_t e = 1; e < ext.size(); ++e) {
          const TestFunction& other = family.get(ext[e], t.cubes, j);
          if (!(other == first))
            throw std::invalid_argument("reduction not well defined: " + to_string(ext.front()) + " and " +
                                        to_string(ext[e]) + " disagree at " + full_key_string(t, j));
        }
        BKey key = prefix_key(st, t.cubes, j);
        if (!out.find(key)) out.insert(key, first);
      }
    }
  }
  return out;
}

BFamily populate_family(const PathCollection& paths, int k, const HolderTuple& tuple, const Rational& bound,
                        int dim, int resolution, std::uint64_t seed, const PopulateOptions& opts) {
  BFamily fam(tuple, bound, dim, resolution);
  Rng rng(seed);
  DyadicTree tree(dim, resolution);
  for (const auto& sigma : paths.of_length(k)) {
    for (const auto& t : nested_tuples(sigma, dim, resolution)) {
      for (int j = 1; j < k; ++j) {
        BKey key = prefix_key(sigma, t.cubes, j);
        if (fam.find(key)) continue;
        const DyadicCube& cube = key.cube();
        TestFunction one = TestFunction::indicator(dim, resolution, cube);
        TestFunction b = one;
        if (opts.perturb && cube.level < resolution) {
          auto leaves = tree.leaves_in(cube);
          TestFunction psi(dim, resolution);
          Rational mean = 0;
          for (auto x : leaves) {
            psi[x] = fraction(rng.uniform_int(-4, 4), 4);
            mean += psi[x];
          }
          mean /= static_cast<long>(leaves.size());
          for (auto x : leaves) psi[x] -= mean;
          Rational t_scale = 1;
          for (int h = 0; h <= opts.max_halvings; ++h, t_scale /= 2) {
            TestFunction cand = one + psi * t_scale;
            if (check_b(cand, cube, tuple[key.slot() - 1], bound).empty()) {
              b = std::move(cand);
              break;
            }
          }
        }
        fam.insert(key, std::move(b));
      }
    }
  }
  return fam;
}

}  // namespace dytb
