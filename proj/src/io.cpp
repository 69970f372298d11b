#include "lodaykit/io.hpp"

#include <cmath>
#include <sstream>

#include <openssl/evp.h>

#include "lodaykit/errors.hpp"
#include "lodaykit/zoo.hpp"

namespace lk {

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

std::string joinKey(std::initializer_list<int> idx) {
  std::string s;
  for (int i : idx) {
    if (!s.empty()) s += ',';
    s += std::to_string(i);
  }
  return s;
}

/// "i,j,k" with exactly `arity` non-negative integers, each below the matching bound.
std::vector<int> splitKey(const std::string& key, const std::vector<int>& bounds, const std::string& table) {
  std::vector<int> out;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw PreconditionError(table + " key '" + key + "': expected comma-separated non-negative integers");
    out.push_back(std::stoi(part));
  }
  if (!key.empty() && key.back() == ',')
    throw PreconditionError(table + " key '" + key + "': expected comma-separated non-negative integers");
  if (out.size() != bounds.size())
    throw PreconditionError(table + " key '" + key + "': expected " + std::to_string(bounds.size()) + " indices");
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] >= bounds[i]) throw PreconditionError(table + " key '" + key + "': index out of range");
  return out;
}

const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw PreconditionError(where + ": missing '" + key + "'");
  return j.at(key);
}

int requireInt(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw PreconditionError(where + ": expected an integer");
  return j.get<int>();
}

double requireNumber(const Json& j, const std::string& where) {
  if (!j.is_number()) throw PreconditionError(where + ": expected a number");
  return j.get<double>();
}

std::vector<Interval> boxFromJson(const Json& j, const std::string& where) {
  if (!j.is_array()) throw PreconditionError(where + ": box must be an array of [lo, hi] pairs");
  std::vector<Interval> box;
  for (const auto& iv : j) {
    if (!iv.is_array() || iv.size() != 2) throw PreconditionError(where + ": box must be an array of [lo, hi] pairs");
    box.push_back({requireNumber(iv[0], where), requireNumber(iv[1], where)});
  }
  return box;
}

Json boxToJson(const std::vector<Interval>& box) {
  Json out = Json::array();
  for (const auto& iv : box) out.push_back({iv.lo, iv.hi});
  return out;
}

void putField(Json& table, const std::string& key, const ScalarField& f, const Chart& chart, const Lattice* fallback,
              const std::string& name) {
  if (f.isZero()) return;
  try {
    table[key] = fieldToJson(f, chart, fallback);
  } catch (const PreconditionError& e) {
    throw PreconditionError(name + " '" + key + "': " + e.what());
  }
}

Json tensorsToJson(const LodayStructure& A, const Lattice* fallback) {
  const int r = A.rank(), n = A.dim();
  Json doc;
  doc["chart"] = chartToJson(A.chart());
  doc["rank"] = r;
  Json gamma = Json::object(), theta = Json::object(), lambda = Json::object();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) putField(gamma, joinKey({i, j, k}), A.gamma(i, j, k), A.chart(), fallback, "gamma");
  for (int i = 0; i < r; ++i)
    for (int m = 0; m < n; ++m) putField(theta, joinKey({i, m}), A.theta(i, m), A.chart(), fallback, "theta");
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int l = 0; l < r; ++l)
          putField(lambda, joinKey({m, i, j, l}), A.lambda(m, i, j, l), A.chart(), fallback, "lambda");
  doc["gamma"] = gamma;
  doc["theta"] = theta;
  doc["lambda"] = lambda;
  return doc;
}

template <class Setter>
void readTable(const Json& doc, const char* name, const std::vector<int>& bounds, const Chart& chart, Setter set) {
  if (!doc.contains(name)) return;
  const Json& table = doc.at(name);
  if (!table.is_object()) throw PreconditionError(std::string(name) + ": expected an object of index keys");
  for (const auto& [key, value] : table.items()) {
    const auto idx = splitKey(key, bounds, name);
    set(idx, fieldFromJson(value, chart, std::string(name) + " '" + key + "'"));
  }
}

std::string zooName(const Json& ref) {
  const std::string where = "zoo reference";
  const Json& name = require(ref, "name", where);
  if (!name.is_string()) throw PreconditionError(where + ": 'name' must be a string");
  std::string out = name.get<std::string>();
  if (ref.contains("params")) {
    const Json& params = ref.at("params");
    if (!params.is_array()) throw PreconditionError(where + ": 'params' must be an array");
    for (const auto& p : params) {
      if (p.is_string())
        out += "," + p.get<std::string>();
      else if (p.is_number())
        out += "," + p.dump();
      else
        throw PreconditionError(where + ": parameters must be strings or numbers");
    }
  }
  return out;
}

}  // namespace

Json chartToJson(const Chart& chart) {
  return {{"dim", chart.dim()}, {"names", chart.names()}, {"box", boxToJson(chart.box())}};
}

Chart chartFromJson(const Json& j) {
  const std::string where = "chart";
  const int dim = requireInt(require(j, "dim", where), where + ".dim");
  const Json& names = require(j, "names", where);
  if (!names.is_array()) throw PreconditionError("chart.names: expected an array of strings");
  std::vector<std::string> labels;
  for (const auto& s : names) {
    if (!s.is_string()) throw PreconditionError("chart.names: expected an array of strings");
    labels.push_back(s.get<std::string>());
  }
  auto box = boxFromJson(require(j, "box", where), "chart.box");
  if (static_cast<int>(labels.size()) != dim || static_cast<int>(box.size()) != dim)
    throw PreconditionError("chart: dim does not match names and box");
  return Chart(std::move(labels), std::move(box));
}

Json latticeToJson(const Lattice& L) { return {{"box", boxToJson(L.box())}, {"nodes", L.nodes()}}; }

Lattice latticeFromJson(const Json& j, const std::string& where) {
  auto box = boxFromJson(require(j, "box", where), where + " lattice box");
  const Json& nodes = require(j, "nodes", where);
  if (!nodes.is_array()) throw PreconditionError(where + ": lattice nodes must be an array");
  std::vector<int> counts;
  for (const auto& c : nodes) counts.push_back(requireInt(c, where + " lattice nodes"));
  try {
    return Lattice(std::move(box), std::move(counts));
  } catch (const PreconditionError& e) {
    throw PreconditionError(where + ": " + e.what());
  }
}

Json fieldToJson(const ScalarField& f, const Chart& chart, const Lattice* fallback) {
  if (f.isExpression()) return f.toString(chart.names());
  const GridNode* g = asGrid(f);
  if (!g) {
    if (!fallback) throw PreconditionError("field is neither an expression nor a grid field");
    const ScalarField s = sampleOnLattice(f, *fallback);
    if (s.isExpression()) return s.toString(chart.names());
    g = asGrid(s);
    return {{"lattice", latticeToJson(g->lattice())}, {"samples", g->table()}};
  }
  return {{"lattice", latticeToJson(g->lattice())}, {"samples", g->table()}};
}

ScalarField fieldFromJson(const Json& j, const Chart& chart, const std::string& where) {
  if (j.is_string()) {
    try {
      return ScalarField::parse(j.get<std::string>(), chart.names());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what(), e.line, e.column);
    }
  }
  if (j.is_number()) return ScalarField::constant(j.get<double>());
  if (!j.is_object()) throw PreconditionError(where + ": expected an expression string or a grid payload");
  const Lattice L = latticeFromJson(require(j, "lattice", where), where);
  if (L.dim() != chart.dim()) throw PreconditionError(where + ": grid lattice dimension does not match the chart");
  const Json& samples = require(j, "samples", where);
  if (!samples.is_array()) throw PreconditionError(where + ": samples must be an array");
  std::vector<double> table;
  table.reserve(samples.size());
  for (const auto& s : samples) table.push_back(requireNumber(s, where + " samples"));
  try {
    return gridField(L, std::move(table));
  } catch (const PreconditionError& e) {
    throw PreconditionError(where + ": " + e.what());
  }
}

Json specToJson(const LodayStructure& A, const Lattice* fallback) { return tensorsToJson(A, fallback); }

Json specToJson(const CourantStructure& C, const Lattice* fallback) {
  Json doc = tensorsToJson(C.base(), fallback);
  Json metric = Json::object();
  for (int i = 0; i < C.rank(); ++i)
    for (int j = 0; j < C.rank(); ++j) putField(metric, joinKey({i, j}), C.metric(i, j), C.chart(), fallback, "metric");
  doc["metric"] = metric;
  return doc;
}

LoadedSpec specFromJson(const Json& j) {
  if (!j.is_object()) throw PreconditionError("spec: expected a JSON object");
  static const char* known[] = {"chart", "rank", "gamma", "theta", "lambda", "metric", "zoo"};
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw PreconditionError("spec: unknown key '" + key + "'");
  }
  LoadedSpec out;
  if (j.contains("zoo")) {
    const std::string name = zooName(j.at("zoo"));
    ZooEntry e = zooEntry(name);
    out.loday = e.loday;
    out.courant = e.courant;
    out.zoo = name;
    return out;
  }
  const Chart chart = chartFromJson(require(j, "chart", "spec"));
  const int r = requireInt(require(j, "rank", "spec"), "spec.rank");
  if (r < 1) throw PreconditionError("spec.rank: must be at least 1");
  const int n = chart.dim();
  LodayStructure A(chart, r);
  readTable(j, "gamma", {r, r, r}, chart, [&](const std::vector<int>& i, ScalarField f) {
    A.setGamma(i[0], i[1], i[2], std::move(f));
  });
  readTable(j, "theta", {r, n}, chart, [&](const std::vector<int>& i, ScalarField f) { A.setTheta(i[0], i[1], std::move(f)); });
  readTable(j, "lambda", {n, r, r, r}, chart, [&](const std::vector<int>& i, ScalarField f) {
    A.setLambda(i[0], i[1], i[2], i[3], std::move(f));
  });
  out.loday = A;
  if (j.contains("metric")) {
    std::vector<ScalarField> g(u(r * r));
    readTable(j, "metric", {r, r}, chart, [&](const std::vector<int>& i, ScalarField f) { g[u(i[0] * r + i[1])] = std::move(f); });
    out.courant = CourantStructure(A, std::move(g));
  }
  return out;
}

Json parseJsonText(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Byte offset to line and column.
    const std::size_t pos = std::min(e.byte == 0 ? std::size_t{0} : e.byte - 1, text.size());
    int line = 1, column = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("invalid JSON", line, column);
  }
}

Json roundTrip(const Json& spec) {
  const LoadedSpec s = specFromJson(spec);
  return s.courant ? specToJson(*s.courant) : specToJson(s.loday);
}

std::string canonicalDump(const Json& j) { return j.dump(2) + "\n"; }

std::string sha256Hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Json entryToJson(const CheckEntry& e, bool required) {
  Json point = Json::array();
  for (double x : e.worstPoint) point.push_back(x);
  // Non-finite residuals have no JSON number form.
  Json residual = std::isfinite(e.maxResidual) ? Json(e.maxResidual) : Json(nullptr);
  return {{"name", e.name}, {"max_residual", residual}, {"tolerance", e.tolerance},
          {"worst_point", point}, {"pass", e.pass}, {"required", required}};
}

Json reportEntries(const CheckReport& report, bool required) {
  Json out = Json::array();
  for (const auto& e : report.entries) out.push_back(entryToJson(e, required));
  return out;
}

Json errorObject(const std::exception& ex) {
  Json err = {{"message", ex.what()}};
  if (const auto* p = dynamic_cast<const ParseError*>(&ex)) {
    err["kind"] = "parse";
    err["line"] = p->line;
    err["column"] = p->column;
  } else if (dynamic_cast<const PreconditionError*>(&ex)) {
    err["kind"] = "precondition";
  } else if (dynamic_cast<const DomainError*>(&ex)) {
    err["kind"] = "domain";
  } else if (dynamic_cast<const SingularEvaluation*>(&ex)) {
    err["kind"] = "singular-evaluation";
  } else if (dynamic_cast<const DegenerateMetric*>(&ex)) {
    err["kind"] = "degenerate-metric";
  } else if (dynamic_cast<const IndefinitePairing*>(&ex)) {
    err["kind"] = "indefinite-pairing";
  } else {
    err["kind"] = "error";
  }
  return {{"error", err}, {"tool", kToolName}, {"version", kToolVersion}};
}

}  // namespace lk
