#include "dytb/scenario.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>

#include "dytb/rng.hpp"

namespace dytb {

namespace {

const std::pair<ScenarioMode, const char*> kModes[] = {
    {ScenarioMode::t1, "t1"},           {ScenarioMode::tb_local, "tb-local"},
    {ScenarioMode::tb_global, "tb-global"}, {ScenarioMode::stopping, "stopping"},
    {ScenarioMode::outer, "outer"},     {ScenarioMode::telescope, "telescope"},
    {ScenarioMode::carleson, "carleson"}, {ScenarioMode::lemmas, "lemmas"}};

TestFunction random_function(Rng& rng, int d, int N, long range = 6) {
  std::vector<Rational> v(std::size_t{1} << (d * N));
  for (auto& x : v) x = fraction(rng.uniform_int(-range, range), rng.uniform_int(1, 3));
  return TestFunction(d, N, std::move(v));
}

DyadicCube random_cube(Rng& rng, int d, int max_level) {
  int level = static_cast<int>(rng.uniform_int(0, max_level));
  std::vector<std::uint32_t> idx(static_cast<std::size_t>(d));
  for (auto& i : idx) i = static_cast<std::uint32_t>(rng.uniform_int(0, (1L << level) - 1));
  return DyadicCube::make(d, level, idx);
}

// Collects named measurements across instances for min/median/max.
class Aggregates {
 public:
  void add(const std::string& name, const Real& x) { data_[name].push_back(x); }
  void count(const std::string& name, bool hit) { counts_[name] += hit ? 1 : 0; }
  Json to_json(int digits) const {
    Json out = Json::object();
    for (const auto& [name, xs] : data_) {
      auto v = xs;
      std::sort(v.begin(), v.end());
      Real med = v.size() % 2 ? v[v.size() / 2] : (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2;
      out[name] = Json{{"count", v.size()},
                       {"min", to_string(v.front(), digits)},
                       {"median", to_string(med, digits)},
                       {"max", to_string(v.back(), digits)}};
    }
    for (const auto& [name, c] : counts_) out[name] = c;
    return out;
  }

 private:
  std::map<std::string, std::vector<Real>> data_;
  std::map<std::string, long> counts_;
};

struct Run {
  const ScenarioConfig& cfg;
  HolderTuple tuple;
  Aggregates agg;
  std::vector<std::string> failures;
  int digits;

  void fail(int index, const std::string& what) { failures.push_back("instance " + std::to_string(index) + ": " + what); }
  Json real(const Real& x) const { return to_string(x, digits); }
};

Json step_summary(Run& run, int index, const StepInstance& inst, const StepReport& rep) {
  const ScenarioConfig& cfg = run.cfg;
  for (const auto& v : rep.violations) run.fail(index, v);
  Rational limit = 1 - rep.eps;
  run.agg.add("first_packing", to_real(rep.first.ratio));
  run.agg.add("second_packing", to_real(rep.second.ratio));
  run.agg.add("packing_margin", to_real(limit - std::max(rep.first.ratio, rep.second.ratio)));
  run.agg.add("tb_constant", inst.tb_constant);
  run.agg.count("representability_failures", !rep.representable);
  Json j{{"sigma", to_string(inst.data.sigma)},
         {"base", cube_token(inst.data.cubes.front())},
         {"scale", to_json(inst.scale)},
         {"tb_constant", run.real(inst.tb_constant)},
         {"eps", to_json(rep.eps)},
         {"first_packing", to_json(rep.first.ratio)},
         {"second_packing", to_json(rep.second.ratio)},
         {"representable", rep.representable},
         {"residual", to_json(rep.telescope.residual)}};
  if (!rep.representable) j["representability"] = rep.telescope.detail.empty() ? "coefficient map" : rep.telescope.detail;
  if (cfg.mode == ScenarioMode::stopping || cfg.mode == ScenarioMode::tb_local)
    j["step"] = to_json(rep, cfg.dump_collections, cfg.emit_witness);
  if (cfg.mode == ScenarioMode::telescope) j["telescope"] = to_json(rep.telescope);
  if (cfg.emit_witness) {
    j["form"] = to_json(inst.data.form);
    j["g"] = to_json(inst.data.g);
  }
  return j;
}

Json run_t1(Run& run, int index, std::uint64_t seed) {
  const ScenarioConfig& cfg = run.cfg;
  PerfectForm form = cfg.zero_form ? PerfectForm(cfg.n, cfg.d, cfg.N) : generate(cfg.n, cfg.d, cfg.N, cfg.density, seed);
  auto t1 = t1_testing_constant(form, run.tuple);
  auto br = full_norm_bracket(form, run.tuple, seed);
  auto smooth = validate_smoothness(form);
  if (!smooth.pass) run.fail(index, "smoothness: " + smooth.detail);
  if (br.lower > br.upper * (1 + comparison_slack())) run.fail(index, "norm bracket inverted");
  if (t1.value > br.upper * (1 + comparison_slack())) run.fail(index, "testing constant above the norm bound");
  run.agg.add("t1_constant", t1.value);
  run.agg.add("norm_lower", br.lower);
  run.agg.add("norm_upper", br.upper);
  if (t1.value > 0) run.agg.add("norm_over_testing", br.lower / t1.value);
  Json j{{"t1_constant", run.real(t1.value)},
         {"norm_lower", run.real(br.lower)},
         {"norm_upper", run.real(br.upper)},
         {"slot", t1.slot}};
  if (!t1.cubes.empty()) j["witness_cube"] = cube_token(t1.cubes.front());
  if (cfg.emit_witness) {
    j["form"] = to_json(form);
    if (t1.slot >= 0) j["extremizer"] = to_json(t1.extremizer);
  }
  return j;
}

Json run_step(Run& run, int index, std::uint64_t seed) {
  const ScenarioConfig& cfg = run.cfg;
  StepInstance inst = make_step_instance(run.tuple, cfg.d, cfg.N, cfg.B, seed, cfg.density, cfg.zero_form);
  Json extra = Json::object();
  if (cfg.mode == ScenarioMode::tb_local) {
    // T(b) at k = 1 with indicator data reproduces T(1).
    PopulateOptions plain;
    plain.perturb = false;
    auto ind = populate_family(inst.data.paths, 1, run.tuple, cfg.B, cfg.d, cfg.N, seed, plain);
    auto tb1 = tb_testing_constant(inst.data.form, inst.data.paths, ind, run.tuple, 1);
    auto t1 = t1_testing_constant(inst.data.form, run.tuple);
    if (tb1.value != t1.value) run.fail(index, "T(b) at k = 1 differs from T(1)");
    auto valid = validate_bfamily(inst.data.family, inst.data.paths, 2);
    if (!valid.pass) run.fail(index, "family: " + valid.detail);
    if (inst.tb_constant > to_real(cfg.B) * (1 + comparison_slack())) run.fail(index, "scaled T(b) constant above B");
    run.agg.add("t1_constant", t1.value);
    extra = Json{{"t1_constant", run.real(t1.value)}, {"tb1_constant", run.real(tb1.value)}, {"family_valid", valid.pass}};
  }
  StepReport rep = induction_step(inst.data);
  Json j = step_summary(run, index, inst, rep);
  for (auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

Json run_global(Run& run, int index, std::uint64_t seed) {
  const ScenarioConfig& cfg = run.cfg;
  Rng rng(seed);
  PerfectForm form = cfg.zero_form ? PerfectForm(cfg.n, cfg.d, cfg.N) : generate(cfg.n, cfg.d, cfg.N, cfg.density, seed);
  std::vector<TestFunction> bs;
  for (int j = 0; j < cfg.n; ++j) {
    std::vector<Rational> v(std::size_t{1} << (cfg.d * cfg.N));
    for (auto& x : v) x = 1 + fraction(rng.uniform_int(0, 6), 8);  // averages stay at least 1
    bs.emplace_back(cfg.d, cfg.N, std::move(v));
  }
  auto rep = global_tb_check(form, bs);
  if (!rep.accretive) run.fail(index, "generated functions are not accretive");
  auto paths = build_example_collection(cfg.n);
  Json j{{"accretive", rep.accretive},
         {"min_average", to_json(rep.min_average)},
         {"sup_norm", to_json(rep.sup_norm)},
         {"weak_sup", to_json(rep.weak_sup)},
         {"bmo_sup", run.real(rep.bmo_sup)},
         {"least_constant", run.real(rep.least_constant)}};
  run.agg.add("least_constant", rep.least_constant);
  try {
    auto fam = derived_local_family(bs, paths, cfg.n, run.tuple, cfg.N);
    auto tb = tb_testing_constant(form, paths, fam, run.tuple, cfg.n);
    j["tb_constant"] = run.real(tb.value);
    run.agg.add("tb_constant", tb.value);
  } catch (const std::domain_error& e) {
    j["tb_constant"] = nullptr;
    j["detail"] = e.what();
  }
  if (cfg.emit_witness) j["form"] = to_json(form);
  return j;
}

Json run_outer(Run& run, int index, std::uint64_t seed) {
  const ScenarioConfig& cfg = run.cfg;
  Rng rng(seed);
  int d = cfg.d, N = cfg.N;
  DyadicTree tree(d, N);
  CubeSet E;
  for (std::size_t id = 0; id < tree.size(); ++id)
    if (rng.bernoulli(0.3)) E.insert(tree.cube(id));
  Rational mu = outer_measure(E, d, N);
  Json j{{"set_size", E.size()}, {"measure", to_json(mu)}};
  bool exhaustive = antichain_count(d, N) <= exhaustive_cap();
  j["exhaustive"] = exhaustive;
  if (exhaustive) {
    Rational ex = outer_measure_exhaustive(E, d, N);
    if (ex != mu) run.fail(index, "tree recursion " + to_string(mu) + " differs from enumeration " + to_string(ex));
  }
  DyadicCube T = random_cube(rng, d, N);
  CubeSet tent;
  for (auto id : tree.subtree(T)) tent.insert(tree.cube(id));
  if (outer_measure(tent, d, N) != T.volume()) run.fail(index, "measure of a tree differs from its top volume");

  TestFunction f = random_function(rng, d, N);
  Json profiles = Json::object();
  for (auto which : {Embedding::average, Embedding::difference}) {
    OuterFunction F = which == Embedding::average ? embed_E(f) : embed_Delta(f);
    SizeKind kind = which == Embedding::average ? SizeKind::infinity() : SizeKind::lp(2);
    const char* name = which == Embedding::average ? "E" : "Delta";
    auto greedy = level_profile(F, kind, SuperlevelMethod::greedy);
    NormValue g2 = outer_lp_norm(greedy, 2, false);
    Json pj{{"greedy", to_json(greedy)}, {"L2_greedy", run.real(g2.value)}};
    if (exhaustive) {
      auto exact = level_profile(F, kind, SuperlevelMethod::exact);
      NormValue e2 = outer_lp_norm(exact, 2, false);
      if (e2.value > g2.value * (1 + comparison_slack())) run.fail(index, std::string(name) + ": greedy below exact");
      run.agg.add(std::string("greedy_gap_") + name, g2.value - e2.value);
      pj["L2_exact"] = run.real(e2.value);
    }
    profiles[name] = pj;
  }
  j["profiles"] = profiles;
  if (cfg.emit_witness) j["function"] = to_json(f);
  return j;
}

Json run_carleson(Run& run, int index, std::uint64_t seed) {
  const ScenarioConfig& cfg = run.cfg;
  Rng rng(seed);
  TestFunction f = random_function(rng, cfg.d, cfg.N);
  auto rep = carleson_check(f, cfg.carleson_p, cfg.embedding);
  if (rep.asserted && !rep.pass) run.fail(index, "Carleson bound: " + rep.detail);
  if (!rep.witness_feasible) run.fail(index, "removal witness infeasible");
  run.agg.add("ratio", rep.ratio);
  Json j = to_json(rep);
  if (cfg.emit_witness) j["function"] = to_json(f);
  return j;
}

Json run_lemmas(Run& run, int index, std::uint64_t seed) {
  const ScenarioConfig& cfg = run.cfg;
  Rng rng(seed);
  int d = cfg.d, N = cfg.N;
  // Bounded entries scaled under 1.
  auto bounded = [&] { return random_function(rng, d, N) * Rational(1, 6); };
  Rational p = run.tuple[0];
  auto f1 = random_function(rng, d, N), f2 = random_function(rng, d, N), f3 = bounded();
  auto l1 = lemma1_check(f1, f2, f3, p);
  // Doubling a conjugate pair gives pq/(p+q) = 2.
  Rational q1 = 2 * p, q2 = 2 * conjugate_exponent(p);
  auto g3 = random_function(rng, d, N), g4 = bounded(), g5 = bounded();
  auto l2 = lemma2_check(f1, f2, g3, g4, g5, q1, q2);
  for (const auto* r : {&l1, &l2}) {
    const char* name = r == &l1 ? "first" : "second";
    if (!r->pass) run.fail(index, std::string(name) + " lemma: " + (r->detail.empty() ? "bound fails" : r->detail));
    run.agg.add(std::string(name) + "_constant", r->constant);
  }
  Json j{{"first", to_json(l1)}, {"second", to_json(l2)}};
  if (cfg.emit_witness) j["functions"] = Json::array({to_json(f1), to_json(f2), to_json(f3)});
  return j;
}

int env_cells() {
  if (const char* env = std::getenv("DYTB_MAX_CELLS")) {
    long cells = std::atol(env);
    if (cells > 0) return static_cast<int>(std::min<long>(cells, 1L << 30));
  }
  return 0;
}

Rational config_rational(const Json& v, const std::string& name) {
  try {
    return rational_from_json(v, nullptr, "/" + name);
  } catch (const SchemaError& e) {
    throw ConfigError(std::string("bad ") + name + ": " + e.what());
  }
}

}  // namespace

std::string mode_name(ScenarioMode m) {
  for (const auto& [mode, name] : kModes)
    if (mode == m) return name;
  return "?";
}

std::optional<ScenarioMode> parse_mode(const std::string& s) {
  for (const auto& [mode, name] : kModes)
    if (s == name) return mode;
  return std::nullopt;
}

ScenarioCaps default_caps() {
  ScenarioCaps caps;
  if (env_cells() > 0) {
    caps.max_n = 8;
    caps.max_N = 16;
    caps.max_d = 3;
  }
  return caps;
}

ScenarioConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  ScenarioConfig cfg;
  auto get_int = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    out = j[key].get<int>();
  };
  auto get_bool = [&](const char* key, bool& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_boolean()) throw ConfigError(std::string(key) + " must be a boolean");
    out = j[key].get<bool>();
  };
  static const char* known[] = {"mode", "n", "d", "N", "exponents", "B", "seed", "instances", "density",
                                "carleson_p", "embedding", "zero_form", "emit_witness", "dump_collections",
                                "precision"};
  for (const auto& [key, _] : j.items())
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw ConfigError("unknown configuration field '" + key + "'");

  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw ConfigError("mode must be a string");
    auto m = parse_mode(j["mode"].get<std::string>());
    if (!m) throw ConfigError("unknown mode '" + j["mode"].get<std::string>() + "'");
    cfg.mode = *m;
  }
  get_int("n", cfg.n);
  get_int("d", cfg.d);
  get_int("N", cfg.N);
  int instances = cfg.instances;
  get_int("instances", instances);
  cfg.instances = instances;
  if (j.contains("exponents")) {
    if (!j["exponents"].is_array()) throw ConfigError("exponents must be an array");
    cfg.exponents.clear();
    for (const auto& e : j["exponents"]) cfg.exponents.push_back(config_rational(e, "exponents"));
  } else {
    cfg.exponents.assign(static_cast<std::size_t>(std::max(cfg.n, 1)), Rational(cfg.n));
  }
  if (j.contains("B")) cfg.B = config_rational(j["B"], "B");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("density")) {
    if (!j["density"].is_number()) throw ConfigError("density must be a number");
    cfg.density = j["density"].get<double>();
  }
  if (j.contains("carleson_p")) {
    if (j["carleson_p"].is_string() && j["carleson_p"].get<std::string>() == "inf")
      cfg.carleson_p.reset();
    else
      cfg.carleson_p = config_rational(j["carleson_p"], "carleson_p");
  }
  if (j.contains("embedding")) {
    std::string e = j["embedding"].is_string() ? j["embedding"].get<std::string>() : "";
    if (e == "E")
      cfg.embedding = Embedding::average;
    else if (e == "Delta")
      cfg.embedding = Embedding::difference;
    else
      throw ConfigError("embedding must be \"E\" or \"Delta\"");
  }
  get_bool("zero_form", cfg.zero_form);
  get_bool("emit_witness", cfg.emit_witness);
  get_bool("dump_collections", cfg.dump_collections);
  if (j.contains("precision")) {
    if (!j["precision"].is_number_unsigned()) throw ConfigError("precision must be a positive integer");
    cfg.precision = j["precision"].get<unsigned>();
  }
  validate_config(cfg);
  return cfg;
}

Json config_to_json(const ScenarioConfig& cfg) {
  Json ex = Json::array();
  for (const auto& p : cfg.exponents) ex.push_back(to_json(p));
  return Json{{"mode", mode_name(cfg.mode)},
              {"n", cfg.n},
              {"d", cfg.d},
              {"N", cfg.N},
              {"exponents", ex},
              {"B", to_json(cfg.B)},
              {"seed", cfg.seed},
              {"instances", cfg.instances},
              {"density", cfg.density},
              {"carleson_p", cfg.carleson_p ? to_json(*cfg.carleson_p) : Json("inf")},
              {"embedding", cfg.embedding == Embedding::average ? "E" : "Delta"},
              {"zero_form", cfg.zero_form},
              {"emit_witness", cfg.emit_witness},
              {"dump_collections", cfg.dump_collections},
              {"precision", cfg.precision}};
}

void validate_config(const ScenarioConfig& cfg) {
  const auto& caps = cfg.caps;
  if (cfg.n < 2) throw ConfigError("n must be at least 2");
  if (cfg.d < 1 || cfg.N < 1) throw ConfigError("d and N must be positive");
  if (cfg.n > caps.max_n || cfg.N > caps.max_N || cfg.d > caps.max_d)
    throw ConfigError("request exceeds the caps n <= " + std::to_string(caps.max_n) + ", N <= " +
                      std::to_string(caps.max_N) + ", d <= " + std::to_string(caps.max_d) + " (raise with DYTB_MAX_CELLS)");
  if (int cells = env_cells(); cells > 0 && (cfg.d * cfg.N >= 31 || (1L << (cfg.d * cfg.N)) > cells))
    throw ConfigError("2^(dN) leaves exceed DYTB_MAX_CELLS");
  if (static_cast<int>(cfg.exponents.size()) != cfg.n) throw ConfigError("need one exponent per slot");
  try {
    HolderTuple::make(cfg.exponents);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid exponent tuple: ") + e.what());
  }
  if (cfg.B < 1) throw ConfigError("B must be at least 1");
  if (cfg.instances < 0) throw ConfigError("instances must be nonnegative");
  if (!(cfg.density > 0 && cfg.density <= 1)) throw ConfigError("density must lie in (0, 1]");
  if (cfg.carleson_p && *cfg.carleson_p < 1) throw ConfigError("carleson_p must be at least 1");
  if (cfg.precision < 64 || cfg.precision > 4096) throw ConfigError("precision must lie in [64, 4096]");
  if (cfg.mode == ScenarioMode::lemmas && cfg.exponents.front() <= 1) throw ConfigError("lemma exponent must exceed 1");
}

StepInstance make_step_instance(const HolderTuple& tuple, int d, int N, const Rational& B, std::uint64_t seed,
                                double density, bool zero_form) {
  int n = tuple.arity();
  Rng rng(derive_seed(seed, 0));
  PathCollection paths = build_example_collection(n);
  BFamily family = populate_family(paths, 2, tuple, B, d, N, derive_seed(seed, 1));
  PerfectForm form = zero_form ? PerfectForm(n, d, N) : generate(n, d, N, density, derive_seed(seed, 2));

  auto tb = tb_testing_constant(form, paths, family, tuple, 2);
  // The constant is homogeneous in the form: halve until certified below B.
  Rational scale = 1;
  while (certified_ge(Magnitude::of(B), tb.constant * Magnitude::of(scale)) != Certainty::yes) scale /= 2;
  if (scale != 1) form = form.scaled(scale);

  std::vector<Path> twos;
  for (const auto& p : paths.of_length(2)) {
    Path t = Path::make(n, {p(2), p(1)});
    if (paths.contains(t)) twos.push_back(p);
  }
  if (twos.empty()) throw std::logic_error("collection has no swappable pair");
  Path sigma = twos[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(twos.size()) - 1))];
  Path tau = Path::make(n, {sigma(2), sigma(1)});

  // Half the time start from the testing witness, where the data is least trivial.
  DyadicCube Q = random_cube(rng, d, N - 1);
  TestFunction g = random_function(rng, d, N, 4);
  if (rng.bernoulli(0.5) && !tb.cubes.empty() && tb.cubes.back().level < N) {
    Q = tb.cubes.back();
    if (tb.slot == sigma(1) - 1 && !tb.extremizer.is_zero()) g = tb.extremizer.upsampled(N);
  }
  return StepInstance{StepData{form, tuple, B, paths, family, 1, sigma, tau, {Q, Q}, g}, scale,
                      tb.value * to_real(scale), seed};
}

Report run_scenario(const ScenarioConfig& cfg) {
  validate_config(cfg);
  unsigned saved = precision_bits();
  set_precision_bits(cfg.precision);
  Run run{cfg, HolderTuple::make(cfg.exponents), {}, {}, std::max(6, static_cast<int>(cfg.precision * 3 / 10) - 8)};
  Json instances = Json::array();
  for (int i = 0; i < cfg.instances; ++i) {
    std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    Json j;
    switch (cfg.mode) {
      case ScenarioMode::t1: j = run_t1(run, i, seed); break;
      case ScenarioMode::tb_local:
      case ScenarioMode::stopping:
      case ScenarioMode::telescope: j = run_step(run, i, seed); break;
      case ScenarioMode::tb_global: j = run_global(run, i, seed); break;
      case ScenarioMode::outer: j = run_outer(run, i, seed); break;
      case ScenarioMode::carleson: j = run_carleson(run, i, seed); break;
      case ScenarioMode::lemmas: j = run_lemmas(run, i, seed); break;
    }
    Json head{{"index", i}, {"seed", seed}};
    head.update(j);
    instances.push_back(head);
  }
  Report rep;
  rep.failures = run.failures;
  rep.exit_code = rep.failures.empty() ? kExitOk : kExitViolation;
  rep.json = Json{{"schema", kReportSchema},
                  {"config", config_to_json(cfg)},
                  {"precision_bits", cfg.precision},
                  {"summary_digits", run.digits},
                  {"instances", instances},
                  {"aggregates", run.agg.to_json(run.digits)},
                  {"failures", rep.failures},
                  {"exit_code", rep.exit_code}};
  set_precision_bits(saved);
  return rep;
}

}  // namespace dytb
