#pragma once
/**
 * @file io.hpp
 * @brief JSON spec documents for structures, report documents for check results.
 *
 * Spec layout: {"chart": {"dim", "names", "box"}, "rank", "gamma": {"i,j,k": field}, "theta": {"i,m": field},
 * "lambda": {"m,i,j,l": field}, optional "metric": {"i,j": field}, optional "zoo": {"name", "params"}}.
 * A field is an infix expression string or a grid payload {"lattice": {"box", "nodes"}, "samples"} with
 * row-major samples. Zero entries are omitted. Documents are dumped with sorted keys and two-space indent.
 */

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lodaykit/courant.hpp"
#include "lodaykit/grid.hpp"

namespace lk {

using Json = nlohmann::json;

inline constexpr const char* kToolName = "lodaykit";
inline constexpr const char* kToolVersion = "0.1.0";

/// Expression string when printable, grid payload when a grid field, otherwise sampled on `fallback`.
/// Throws PreconditionError when the field is neither and no fallback is given.
Json fieldToJson(const ScalarField& f, const Chart& chart, const Lattice* fallback = nullptr);
/// `where` names the entry in error messages.
ScalarField fieldFromJson(const Json& j, const Chart& chart, const std::string& where);

Json chartToJson(const Chart& chart);
Chart chartFromJson(const Json& j);
Json latticeToJson(const Lattice& L);
Lattice latticeFromJson(const Json& j, const std::string& where);

Json specToJson(const LodayStructure& A, const Lattice* fallback = nullptr);
Json specToJson(const CourantStructure& C, const Lattice* fallback = nullptr);

struct LoadedSpec {
  LodayStructure loday;
  std::optional<CourantStructure> courant;
  /// Zoo entry name when the document referenced one.
  std::optional<std::string> zoo;
};

/// Validates indices, names and expressions; a "zoo" reference overrides the tensors.
LoadedSpec specFromJson(const Json& j);
/// JSON text to document; syntax errors become ParseError with line and column.
Json parseJsonText(const std::string& text);
/// Parse, build and re-serialize.
Json roundTrip(const Json& spec);

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string canonicalDump(const Json& j);
std::string sha256Hex(std::string_view data);

Json entryToJson(const CheckEntry& e, bool required = true);
Json reportEntries(const CheckReport& report, bool required = true);
/// {"error": {"kind", "message"[, "line", "column"]}} for the exception currently being handled.
Json errorObject(const std::exception& ex);

}  // namespace lk
