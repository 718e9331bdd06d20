#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dytb/outer.hpp"
#include "dytb/serialize.hpp"
#include "dytb/stopping.hpp"
#include "dytb/testing.hpp"

namespace dytb {

enum class ScenarioMode { t1, tb_local, tb_global, stopping, outer, telescope, carleson, lemmas };

std::string mode_name(ScenarioMode m);
std::optional<ScenarioMode> parse_mode(const std::string& s);

// Bad configuration or a request past the resource caps; exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScenarioCaps {
  int max_n = 4;
  int max_N = 4;
  int max_d = 2;
};
// Defaults, lifted when DYTB_MAX_CELLS allows more leaves.
ScenarioCaps default_caps();

struct ScenarioConfig {
  ScenarioMode mode = ScenarioMode::stopping;
  int n = 2;
  int d = 1;
  int N = 3;
  std::vector<Rational> exponents{2, 2};
  Rational B = 1;
  std::uint64_t seed = 1;
  int instances = 10;
  double density = 0.6;
  std::optional<Rational> carleson_p;  // empty: p = inf
  Embedding embedding = Embedding::average;
  bool zero_form = false;
  bool emit_witness = false;
  bool dump_collections = false;
  unsigned precision = 128;
  ScenarioCaps caps = default_caps();
};

// Throws ConfigError.
ScenarioConfig config_from_json(const Json& j);
Json config_to_json(const ScenarioConfig& cfg);
void validate_config(const ScenarioConfig& cfg);

// One induction step at k = 1 for n = 2 on [0,1)^d. The generated form is scaled by a power
// of two until its T(b) constant over paths of length 2 is at most B.
struct StepInstance {
  StepData data;
  Rational scale = 1;
  Real tb_constant = 0;  // after scaling
  std::uint64_t seed = 0;
};
StepInstance make_step_instance(const HolderTuple& tuple, int d, int N, const Rational& B, std::uint64_t seed,
                                double density, bool zero_form = false);

struct Report {
  Json json;
  std::vector<std::string> failures;
  int exit_code = 0;
};
// Deterministic for a given configuration.
Report run_scenario(const ScenarioConfig& cfg);

// Exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

}  // namespace dytb
