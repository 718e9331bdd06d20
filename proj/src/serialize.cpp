#include "dytb/serialize.hpp"

namespace dytb {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw SchemaError(what + (where.empty() ? "" : " at " + where), where.empty() ? "/" : where);
}

const Json& field(const Json& j, const char* name, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  auto it = j.find(name);
  if (it == j.end()) bad(where, std::string("missing field '") + name + "'");
  return *it;
}

int int_field(const Json& j, const char* name, const std::string& where) {
  const Json& v = field(j, name, where);
  if (!v.is_number_integer()) bad(where + "/" + name, "expected an integer");
  return v.get<int>();
}

const Json& array_field(const Json& j, const char* name, const std::string& where) {
  const Json& v = field(j, name, where);
  if (!v.is_array()) bad(where + "/" + name, "expected an array");
  return v;
}

std::string mode_name(SuperlevelMethod m) { return m == SuperlevelMethod::exact ? "exact" : "greedy"; }

}  // namespace

Json to_json(const Rational& q) { return to_string(q); }

Json to_json(const Real& x) { return to_string(x, 20); }

Json to_json(const DyadicCube& c) {
  Json idx = Json::array();
  for (int t = 0; t < c.dim; ++t) idx.push_back(c.coord(t));
  return Json{{"dim", c.dim}, {"level", c.level}, {"index", idx}};
}

Json to_json(const TestFunction& f) {
  Json vals = Json::array();
  for (const auto& v : f.values()) vals.push_back(to_json(v));
  return Json{{"root", to_json(f.root())}, {"N", f.resolution()}, {"values", vals}};
}

Json to_json(const PerfectForm& form) {
  Json j{{"n", form.arity()}, {"d", form.dim()}, {"N", form.resolution()}};
  if (form.is_dense()) {
    Json k = Json::array();
    for (const auto& v : form.kernel()) k.push_back(to_json(v));
    j["kernel"] = k;
    return j;
  }
  Json blocks = Json::array();
  for (const auto& b : form.blocks()) {
    Json profiles = Json::array();
    for (const auto& prof : b.profiles) {
      Json row = Json::array();
      for (const auto& v : prof) row.push_back(to_json(v));
      profiles.push_back(row);
    }
    blocks.push_back(Json{{"cube", to_json(b.cube)}, {"coeff", to_json(b.coeff)}, {"profiles", profiles}});
  }
  j["blocks"] = blocks;
  return j;
}

Json to_json(const Path& p) { return Json{{"n", p.n}, {"values", p.values}}; }

Json to_json(const HolderTuple& t) {
  Json a = Json::array();
  for (const auto& p : t.exponents()) a.push_back(to_json(p));
  return a;
}

Json to_json(const BFamily& family) {
  if (family.mode() != BFamily::Mode::prefix) throw std::invalid_argument("only prefix-keyed families serialize");
  Json entries = Json::object();
  for (const auto& [k, f] : family.entries()) entries[k] = to_json(f);
  return Json{{"tuple", to_json(family.tuple())},
              {"bound", to_json(family.bound())},
              {"d", family.dim()},
              {"N", family.resolution()},
              {"entries", entries}};
}

Json to_json(const OuterFunction& F) {
  DyadicTree tree(F.dim(), F.depth());
  Json cubes = Json::array();
  for (std::size_t id = 0; id < F.size(); ++id) {
    if (F.square(id) == 0) continue;
    Json e{{"cube", to_json(tree.cube(id))}};
    if (auto v = F.exact_value(id))
      e["value"] = to_json(*v);
    else
      e["square"] = to_json(F.square(id));
    cubes.push_back(e);
  }
  return Json{{"d", F.dim()}, {"N", F.depth()}, {"cubes", cubes}};
}

Json to_json(const LevelProfile& prof) {
  // Reported from the top level down: lambda^e and the measure just below it.
  Json steps = Json::array();
  for (std::size_t i = prof.levels.size(); i-- > 0;)
    steps.push_back(Json{{"level_power", to_json(prof.levels[i])}, {"measure", to_json(prof.measure[i])}});
  return Json{{"exponent", to_json(prof.exponent)},
              {"method", mode_name(prof.method)},
              {"exact", prof.exact},
              {"steps", steps}};
}

Json to_json(const CubeSet& s) {
  Json a = Json::array();
  for (const auto& c : s) a.push_back(cube_token(c));
  return a;
}

Json to_json(const NormValue& v) {
  Json j{{"p", to_json(v.p)}, {"value", to_json(v.value)}};
  if (v.power) j["power"] = to_json(*v.power);
  return j;
}

Json to_json(const Certificate& c) {
  Json j{{"name", c.name},
         {"measured", to_json(c.measured)},
         {"limit", to_json(c.limit)},
         {"asserted", c.asserted},
         {"pass", c.pass}};
  if (c.witness) j["witness"] = cube_token(*c.witness);
  return j;
}

Json to_json(const StoppingResult& r, bool collections) {
  Json acc = Json::array();
  for (const auto& a : r.accounting)
    acc.push_back(Json{{"measure", to_json(a.measure)}, {"limit", to_json(a.limit)}, {"pass", a.pass}});
  Json certs = Json::array();
  for (const auto& c : r.certificates) certs.push_back(to_json(c));
  Json j{{"base", cube_token(r.base)},
         {"packed", to_json(r.packed)},
         {"ratio", to_json(r.ratio)},
         {"packing_ok", r.packing_ok},
         {"accounting", acc},
         {"certificates", certs}};
  if (collections) {
    Json parts = Json::array();
    for (const auto& p : r.parts) parts.push_back(to_json(p));
    j["collections"] = parts;
    j["merged"] = to_json(r.merged);
  }
  return j;
}

Json to_json(const TelescopeReport& t) {
  return Json{{"top", to_json(t.top)},
              {"diag_h", to_json(t.diag_h)},
              {"diag_g", to_json(t.diag_g)},
              {"diag_hg", to_json(t.diag_hg)},
              {"reconstructed", to_json(t.reconstructed)},
              {"target", to_json(t.target)},
              {"residual", to_json(t.residual)},
              {"precondition", t.precondition},
              {"detail", t.detail}};
}

namespace {

Json pruned_json(const PrunedFunction& p, bool witness) {
  Json j{{"mean_zero", p.mean_zero},
         {"supported", p.supported},
         {"norm_ratio", to_json(p.norm_ratio)},
         {"parents", p.parents.size()},
         {"siblings", p.siblings.size()}};
  if (!p.detail.empty()) j["detail"] = p.detail;
  if (witness) j["function"] = to_json(p.value);
  return j;
}

Json buffers_json(const BufferReport& b) {
  return Json{{"count", b.xi.size()},
              {"mean_zero", b.mean_zero},
              {"supported", b.supported},
              {"parent_overlap", b.parent_overlap},
              {"sibling_overlap", b.sibling_overlap},
              {"overlap_limit", to_json(b.overlap_limit)},
              {"overlap_ok", b.overlap_ok}};
}

Json coefficients_json(const CoefficientMap& m) {
  Json j{{"representable", m.representable}, {"measured_bound", to_json(m.measured_bound)}};
  if (m.failure) j["failure"] = cube_token(*m.failure);
  return j;
}

}  // namespace

Json to_json(const StepReport& r, bool collections, bool witness) {
  Json theta{{"integral", to_json(r.theta.integral)},
             {"tree_cubes", r.theta.tree_cubes},
             {"parent_cubes", r.theta.parent_cubes},
             {"norm", to_json(r.theta.norm)},
             {"ratio", to_json(r.theta.ratio)}};
  Json j{{"eps", to_json(r.eps)},
         {"first", to_json(r.first, collections)},
         {"pruned_g", pruned_json(r.gfrak, witness)},
         {"first_buffers", buffers_json(r.first_buffers)},
         {"R", cube_token(r.R.cube)},
         {"R_score", to_json(r.R.score)},
         {"second", to_json(r.second, collections)},
         {"pruned_h", pruned_json(r.hfrak, witness)},
         {"second_buffers", buffers_json(r.second_buffers)},
         {"phi", coefficients_json(r.phi)},
         {"psi", coefficients_json(r.psi)},
         {"telescope", to_json(r.telescope)},
         {"theta", theta},
         {"flatten", Json::array({to_json(r.flatten_power), to_json(r.flatten_average)})},
         {"representable", r.representable},
         {"violations", r.violations}};
  return j;
}

Json to_json(const CarlesonReport& r) {
  return Json{{"embedding", r.which == Embedding::average ? "E" : "Delta"},
              {"p", r.p ? to_json(*r.p) : Json("inf")},
              {"weak", r.weak},
              {"ratio", to_json(r.ratio)},
              {"bound", to_json(r.bound)},
              {"asserted", r.asserted},
              {"pass", r.pass},
              {"witness_feasible", r.witness_feasible},
              {"detail", r.detail}};
}

Json to_json(const LemmaReport& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps)
    steps.push_back(Json{{"name", s.name},
                         {"lhs", to_json(s.lhs)},
                         {"rhs", to_json(s.rhs)},
                         {"exact_measure", s.exact_measure},
                         {"pass", s.pass}});
  return Json{{"hypothesis", r.hypothesis},
              {"sum", to_json(r.sum)},
              {"rhs", to_json(r.rhs)},
              {"constant", to_json(r.constant)},
              {"finite", r.finite},
              {"holder_steps", steps},
              {"pass", r.pass},
              {"detail", r.detail}};
}

Rational rational_from_json(const Json& j, ReadState* st, const std::string& where) {
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (!j.is_string()) bad(where, "expected a rational string");
  bool canonical = true;
  Rational q;
  try {
    q = parse_rational(j.get<std::string>(), &canonical);
  } catch (const std::exception& e) {
    bad(where, e.what());
  }
  if (st && !canonical) st->canonical = false;
  return q;
}

DyadicCube cube_from_json(const Json& j, const std::string& where) {
  int dim = int_field(j, "dim", where);
  int level = int_field(j, "level", where);
  const Json& idx = array_field(j, "index", where);
  std::vector<std::uint32_t> index;
  for (const auto& v : idx) {
    if (!v.is_number_unsigned() && !v.is_number_integer()) bad(where + "/index", "expected integers");
    index.push_back(v.get<std::uint32_t>());
  }
  try {
    return DyadicCube::make(dim, level, index);
  } catch (const std::exception& e) {
    bad(where, e.what());
  }
}

TestFunction function_from_json(const Json& j, ReadState* st, const std::string& where) {
  DyadicCube root = cube_from_json(field(j, "root", where), where + "/root");
  if (root.level != 0) bad(where + "/root", "functions live on the unit cube");
  int N = int_field(j, "N", where);
  const Json& vals = array_field(j, "values", where);
  std::vector<Rational> v;
  for (std::size_t i = 0; i < vals.size(); ++i)
    v.push_back(rational_from_json(vals[i], st, where + "/values/" + std::to_string(i)));
  try {
    return TestFunction(root.dim, N, std::move(v));
  } catch (const std::exception& e) {
    bad(where, e.what());
  }
}

PerfectForm form_from_json(const Json& j, ReadState* st) {
  int n = int_field(j, "n", ""), d = int_field(j, "d", ""), N = int_field(j, "N", "");
  try {
    if (j.contains("kernel")) {
      const Json& k = array_field(j, "kernel", "");
      std::vector<Rational> vals;
      for (std::size_t i = 0; i < k.size(); ++i) vals.push_back(rational_from_json(k[i], st, "/kernel/" + std::to_string(i)));
      return PerfectForm::from_kernel(n, d, N, std::move(vals));
    }
    const Json& blocks = array_field(j, "blocks", "");
    std::vector<HaarBlock> out;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      std::string w = "/blocks/" + std::to_string(b);
      HaarBlock hb;
      hb.cube = cube_from_json(field(blocks[b], "cube", w), w + "/cube");
      hb.coeff = rational_from_json(field(blocks[b], "coeff", w), st, w + "/coeff");
      const Json& profs = array_field(blocks[b], "profiles", w);
      for (std::size_t s = 0; s < profs.size(); ++s) {
        if (!profs[s].is_array()) bad(w + "/profiles/" + std::to_string(s), "expected an array");
        std::vector<Rational> row;
        for (std::size_t i = 0; i < profs[s].size(); ++i)
          row.push_back(rational_from_json(profs[s][i], st, w + "/profiles/" + std::to_string(s) + "/" + std::to_string(i)));
        hb.profiles.push_back(std::move(row));
      }
      out.push_back(std::move(hb));
    }
    return PerfectForm::from_blocks(n, d, N, std::move(out));
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    bad("", e.what());
  }
}

Path path_from_json(const Json& j) {
  int n = int_field(j, "n", "");
  const Json& vals = array_field(j, "values", "");
  std::vector<int> v;
  for (const auto& x : vals) {
    if (!x.is_number_integer()) bad("/values", "expected integers");
    v.push_back(x.get<int>());
  }
  try {
    return Path::make(n, v);
  } catch (const std::exception& e) {
    bad("", e.what());
  }
}

HolderTuple tuple_from_json(const Json& j, ReadState* st) {
  if (!j.is_array()) bad("", "expected an exponent array");
  std::vector<Rational> p;
  for (std::size_t i = 0; i < j.size(); ++i) p.push_back(rational_from_json(j[i], st, "/" + std::to_string(i)));
  return HolderTuple::make(p);
}

BFamily family_from_json(const Json& j, ReadState* st) {
  try {
    HolderTuple tuple = tuple_from_json(field(j, "tuple", ""), st);
    Rational bound = rational_from_json(field(j, "bound", ""), st, "/bound");
    int d = int_field(j, "d", ""), N = int_field(j, "N", "");
    BFamily fam(tuple, bound, d, N);
    const Json& entries = field(j, "entries", "");
    if (!entries.is_object()) bad("/entries", "expected an object");
    for (const auto& [k, v] : entries.items())
      fam.insert(parse_key(d, k), function_from_json(v, st, "/entries/" + k));
    return fam;
  } catch (const SchemaError&) {
    throw;
  } catch (const std::exception& e) {
    bad("", e.what());
  }
}

OuterFunction outer_from_json(const Json& j, ReadState* st) {
  int d = int_field(j, "d", ""), N = int_field(j, "N", "");
  OuterFunction F(d, N);
  DyadicTree tree(d, N);
  const Json& cubes = array_field(j, "cubes", "");
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    std::string w = "/cubes/" + std::to_string(i);
    DyadicCube c = cube_from_json(field(cubes[i], "cube", w), w + "/cube");
    if (c.dim != d || c.level > N) bad(w, "cube outside the tree");
    if (cubes[i].contains("value")) {
      Rational v = rational_from_json(cubes[i]["value"], st, w + "/value");
      F.set_square(tree.id(c), v * v);
    } else {
      Rational s = rational_from_json(field(cubes[i], "square", w), st, w + "/square");
      if (s < 0) bad(w, "negative square");
      if (exact_root(s, 2) && st) st->canonical = false;  // should have been a value
      F.set_square(tree.id(c), s);
    }
  }
  return F;
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("not valid JSON: ") + e.what(), "", e.byte > 0 ? e.byte - 1 : 0);
  }
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

DocumentKind detect_kind(const Json& j) {
  if (!j.is_object()) return DocumentKind::unknown;
  if (j.contains("schema")) return DocumentKind::report;
  if (j.contains("blocks") || j.contains("kernel")) return DocumentKind::form;
  if (j.contains("entries")) return DocumentKind::family;
  if (j.contains("root") && j.contains("values")) return DocumentKind::function;
  if (j.contains("values")) return DocumentKind::path;
  if (j.contains("cubes")) return DocumentKind::outer;
  return DocumentKind::unknown;
}

std::string kind_name(DocumentKind k) {
  switch (k) {
    case DocumentKind::form: return "form";
    case DocumentKind::function: return "function";
    case DocumentKind::path: return "path";
    case DocumentKind::family: return "family";
    case DocumentKind::outer: return "outer";
    case DocumentKind::report: return "report";
    default: return "unknown";
  }
}

RoundtripResult roundtrip_text(const std::string& text) {
  Json j = parse_json(text);
  RoundtripResult r;
  r.kind = detect_kind(j);
  ReadState st;
  Json out;
  switch (r.kind) {
    case DocumentKind::form: out = to_json(form_from_json(j, &st)); break;
    case DocumentKind::function: out = to_json(function_from_json(j, &st)); break;
    case DocumentKind::path: out = to_json(path_from_json(j)); break;
    case DocumentKind::family: out = to_json(family_from_json(j, &st)); break;
    case DocumentKind::outer: out = to_json(outer_from_json(j, &st)); break;
    case DocumentKind::report:
      if (j["schema"] != kReportSchema) bad("/schema", "unknown report schema");
      out = j;
      break;
    default: bad("", "unrecognized document");
  }
  r.canonical = st.canonical;
  r.normalized = dump(out);
  r.identical = r.normalized == text;
  return r;
}

}  // namespace dytb
