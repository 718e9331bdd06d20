// Command-line front end: scenario runs, file generation, validation and round trips.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "dytb/rng.hpp"
#include "dytb/scenario.hpp"

using namespace dytb;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_out(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::vector<Rational> parse_exponents(const std::string& text) {
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_rational(item));
  return out;
}

// Flags shared by every scenario subcommand; set ones override the config file.
struct ScenarioFlags {
  std::string config, out, exponents, B, p, embedding;
  std::optional<std::uint64_t> seed;
  std::optional<int> instances, n, d, N;
  bool emit_witness = false, dump_collections = false, zero_form = false;
  std::optional<unsigned> precision;
};

void add_scenario_flags(CLI::App* sub, ScenarioFlags& f) {
  sub->add_option("--config", f.config, "scenario configuration (JSON)");
  sub->add_option("--seed", f.seed, "base seed");
  sub->add_option("--instances", f.instances, "number of instances");
  sub->add_option("--n", f.n, "form arity");
  sub->add_option("--d", f.d, "dimension");
  sub->add_option("--N", f.N, "resolution");
  sub->add_option("--exponents", f.exponents, "Holder exponents, comma separated");
  sub->add_option("--B", f.B, "testing bound");
  sub->add_option("--p", f.p, "Carleson exponent (rational or inf)");
  sub->add_option("--embedding", f.embedding, "Carleson embedding: E or Delta");
  sub->add_flag("--zero-form", f.zero_form, "use the zero form");
  sub->add_flag("--emit-witness", f.emit_witness, "inline functions and forms in the report");
  sub->add_flag("--dump-collections", f.dump_collections, "inline stopping collections");
  sub->add_option("--precision", f.precision, "working precision in bits");
  sub->add_option("-o,--out", f.out, "report file (default stdout)");
}

ScenarioConfig build_config(ScenarioMode mode, const ScenarioFlags& f) {
  Json j = Json::object();
  if (!f.config.empty()) {
    try {
      j = parse_json(read_file(f.config));
    } catch (const SchemaError& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
  }
  j["mode"] = mode_name(mode);
  if (f.seed) j["seed"] = *f.seed;
  if (f.instances) j["instances"] = *f.instances;
  if (f.n) j["n"] = *f.n;
  if (f.d) j["d"] = *f.d;
  if (f.N) j["N"] = *f.N;
  if (!f.exponents.empty()) {
    Json ex = Json::array();
    for (const auto& p : parse_exponents(f.exponents)) ex.push_back(to_json(p));
    j["exponents"] = ex;
  }
  if (!f.B.empty()) j["B"] = f.B;
  if (!f.p.empty()) j["carleson_p"] = f.p;
  if (!f.embedding.empty()) j["embedding"] = f.embedding;
  if (f.zero_form) j["zero_form"] = true;
  if (f.emit_witness) j["emit_witness"] = true;
  if (f.dump_collections) j["dump_collections"] = true;
  if (f.precision) j["precision"] = *f.precision;
  return config_from_json(j);
}

int run_mode(ScenarioMode mode, const ScenarioFlags& f) {
  Report rep = run_scenario(build_config(mode, f));
  write_out(f.out, dump(rep.json));
  for (const auto& msg : rep.failures) std::cerr << "violation: " << msg << "\n";
  return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dyadic multilinear forms: testing constants, stopping times and outer measures"};
  app.require_subcommand(1);

  const std::pair<const char*, ScenarioMode> scenario_cmds[] = {
      {"t1", ScenarioMode::t1},
      {"tb", ScenarioMode::tb_local},
      {"global-tb", ScenarioMode::tb_global},
      {"stop", ScenarioMode::stopping},
      {"telescope", ScenarioMode::telescope},
      {"outer", ScenarioMode::outer},
      {"carleson", ScenarioMode::carleson},
      {"lemmas", ScenarioMode::lemmas}};
  std::vector<ScenarioFlags> flags(std::size(scenario_cmds));
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(scenario_cmds); ++i) {
    auto* sub = app.add_subcommand(scenario_cmds[i].first, "run the " + mode_name(scenario_cmds[i].second) + " scenario");
    add_scenario_flags(sub, flags[i]);
    subs.push_back(sub);
  }

  // gen
  auto* gen = app.add_subcommand("gen", "generate a random form, function or family");
  std::string gen_kind = "form", gen_out, gen_exponents, gen_B = "1";
  int gen_n = 2, gen_d = 1, gen_N = 3, gen_k = 2;
  double gen_density = 0.6;
  std::uint64_t gen_seed = 1;
  gen->add_option("kind", gen_kind, "form | function | family")->check(CLI::IsMember({"form", "function", "family"}));
  gen->add_option("--n", gen_n, "arity");
  gen->add_option("--d", gen_d, "dimension");
  gen->add_option("--N", gen_N, "resolution");
  gen->add_option("--k", gen_k, "path length (family)");
  gen->add_option("--density", gen_density, "block density (form)");
  gen->add_option("--exponents", gen_exponents, "Holder exponents (family)");
  gen->add_option("--B", gen_B, "norm bound (family)");
  gen->add_option("--seed", gen_seed, "seed");
  gen->add_option("-o,--out", gen_out, "output file");

  // validate
  auto* val = app.add_subcommand("validate", "check a form or family file against its axioms");
  std::string val_file, val_exponents;
  int val_k = 0;
  val->add_option("file", val_file, "JSON file")->required();
  val->add_option("--exponents", val_exponents, "Holder exponents for the decay check");
  val->add_option("--k", val_k, "path length for families (default: longest key)");

  // eval
  auto* ev = app.add_subcommand("eval", "evaluate a form on function files");
  std::string ev_form;
  std::vector<std::string> ev_fns;
  ev->add_option("form", ev_form, "form file")->required();
  ev->add_option("functions", ev_fns, "one function file per slot")->required();

  // roundtrip
  auto* rt = app.add_subcommand("roundtrip", "read a file and write it back canonically");
  std::string rt_file;
  bool rt_print = false;
  rt->add_option("file", rt_file, "JSON file")->required();
  rt->add_flag("--print", rt_print, "print the normalized text instead of the verdict");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i)
      if (subs[i]->parsed()) return run_mode(scenario_cmds[i].second, flags[i]);

    if (gen->parsed()) {
      Json out;
      if (gen_kind == "form") {
        out = to_json(generate(gen_n, gen_d, gen_N, gen_density, gen_seed));
      } else if (gen_kind == "function") {
        Rng rng(gen_seed);
        std::vector<Rational> v(std::size_t{1} << (gen_d * gen_N));
        for (auto& x : v) x = rng.dyadic(8, 2);
        out = to_json(TestFunction(gen_d, gen_N, std::move(v)));
      } else {
        auto ex = gen_exponents.empty() ? std::vector<Rational>(static_cast<std::size_t>(gen_n), Rational(gen_n))
                                        : parse_exponents(gen_exponents);
        auto tuple = HolderTuple::make(ex);
        out = to_json(populate_family(build_example_collection(tuple.arity()), gen_k, tuple, parse_rational(gen_B),
                                      gen_d, gen_N, gen_seed));
      }
      write_out(gen_out, dump(out));
      return kExitOk;
    }

    if (val->parsed()) {
      Json j = parse_json(read_file(val_file));
      Json verdict{{"kind", kind_name(detect_kind(j))}};
      bool pass = true;
      switch (detect_kind(j)) {
        case DocumentKind::form: {
          PerfectForm form = form_from_json(j);
          auto ex = val_exponents.empty()
                        ? std::vector<Rational>(static_cast<std::size_t>(form.arity()), Rational(form.arity()))
                        : parse_exponents(val_exponents);
          auto smooth = validate_smoothness(form);
          auto decay = validate_decay(form, HolderTuple::make(ex));
          pass = smooth.pass && decay.pass;
          verdict["smoothness"] = Json{{"pass", smooth.pass}, {"detail", smooth.detail}};
          verdict["decay"] = Json{{"pass", decay.pass},
                                  {"certified_bound", to_json(decay.certified_bound)},
                                  {"empirical_lower", to_json(decay.empirical_lower)},
                                  {"detail", decay.detail}};
          break;
        }
        case DocumentKind::family: {
          BFamily fam = family_from_json(j);
          int k = val_k;
          if (k == 0)
            for (const auto& [key, _] : fam.entries()) k = std::max(k, static_cast<int>(parse_key(fam.dim(), key).prefix.size()));
          auto paths = build_example_collection(fam.tuple().arity());
          auto rep = validate_bfamily(fam, paths, k);
          pass = rep.pass;
          verdict["k"] = k;
          verdict["pass"] = rep.pass;
          verdict["detail"] = rep.detail;
          break;
        }
        case DocumentKind::function: function_from_json(j); break;
        case DocumentKind::path: path_from_json(j); break;
        case DocumentKind::outer: outer_from_json(j); break;
        default: throw UsageError("nothing to validate in this document");
      }
      verdict["valid"] = pass;
      std::cout << dump(verdict);
      return pass ? kExitOk : kExitViolation;
    }

    if (ev->parsed()) {
      PerfectForm form = form_from_json(parse_json(read_file(ev_form)));
      if (static_cast<int>(ev_fns.size()) != form.arity()) throw UsageError("need one function per slot");
      std::vector<TestFunction> fs;
      for (const auto& f : ev_fns) fs.push_back(function_from_json(parse_json(read_file(f))).upsampled(form.resolution()));
      std::cout << dump(Json{{"value", to_json(eval(form, fs))}});
      return kExitOk;
    }

    if (rt->parsed()) {
      auto r = roundtrip_text(read_file(rt_file));
      if (rt_print)
        std::cout << r.normalized;
      else
        std::cout << dump(Json{{"kind", kind_name(r.kind)}, {"canonical", r.canonical}, {"identical", r.identical}});
      return kExitOk;
    }
  } catch (const SchemaError& e) {
    std::cerr << "schema error";
    if (e.offset()) std::cerr << " at byte " << *e.offset();
    else if (!e.where().empty()) std::cerr << " at " << e.where();
    std::cerr << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
