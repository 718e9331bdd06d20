#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "dytb/forms.hpp"
#include "dytb/outer.hpp"
#include "dytb/paths.hpp"
#include "dytb/stopping.hpp"
#include "dytb/testing.hpp"

namespace dytb {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "dytb.report/v1";

// Malformed or truncated input. `offset` is a byte position when the text did not parse,
// `where` a JSON pointer when the structure is wrong.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::string where, std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(what), where_(std::move(where)), offset_(offset) {}
  const std::string& where() const { return where_; }
  const std::optional<std::size_t>& offset() const { return offset_; }

 private:
  std::string where_;
  std::optional<std::size_t> offset_;
};

// Tracks whether every rational read was already in lowest terms.
struct ReadState {
  bool canonical = true;
};

Json to_json(const Rational& q);
Json to_json(const Real& x);
Json to_json(const DyadicCube& c);
Json to_json(const TestFunction& f);
Json to_json(const PerfectForm& form);
Json to_json(const Path& p);
Json to_json(const HolderTuple& t);
Json to_json(const BFamily& family);
Json to_json(const OuterFunction& F);
Json to_json(const LevelProfile& prof);
Json to_json(const CubeSet& s);
Json to_json(const NormValue& v);
Json to_json(const Certificate& c);
Json to_json(const StoppingResult& r, bool collections);
Json to_json(const TelescopeReport& t);
Json to_json(const StepReport& r, bool collections, bool witness);
Json to_json(const CarlesonReport& r);
Json to_json(const LemmaReport& r);

Rational rational_from_json(const Json& j, ReadState* st = nullptr, const std::string& where = "");
DyadicCube cube_from_json(const Json& j, const std::string& where = "");
TestFunction function_from_json(const Json& j, ReadState* st = nullptr, const std::string& where = "");
PerfectForm form_from_json(const Json& j, ReadState* st = nullptr);
Path path_from_json(const Json& j);
HolderTuple tuple_from_json(const Json& j, ReadState* st = nullptr);
BFamily family_from_json(const Json& j, ReadState* st = nullptr);
OuterFunction outer_from_json(const Json& j, ReadState* st = nullptr);

// Parses text; SchemaError with the byte offset on syntax errors.
Json parse_json(const std::string& text);
// Canonical text: two-space indentation and a trailing newline.
std::string dump(const Json& j);

enum class DocumentKind { form, function, path, family, outer, report, unknown };
DocumentKind detect_kind(const Json& j);
std::string kind_name(DocumentKind k);

struct RoundtripResult {
  DocumentKind kind = DocumentKind::unknown;
  bool canonical = true;  // every rational in lowest terms
  bool identical = true;  // re-serialized text equals the input bytes
  std::string normalized;
};
// Reads a document, rebuilds the object and writes it back. Throws SchemaError.
RoundtripResult roundtrip_text(const std::string& text);

}  // namespace dytb
