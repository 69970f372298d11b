#include "lodaykit/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "lodaykit/errors.hpp"
#include "lodaykit/io.hpp"
#include "lodaykit/linearization.hpp"
#include "lodaykit/splitting.hpp"
#include "lodaykit/zoo.hpp"

namespace lk {

namespace {

constexpr int kDefaultSeed = 7;
constexpr int kDefaultSamples = 64;
constexpr int kDefaultNormPoints = 10;
constexpr int kNormDirections = 64;
constexpr int kDefaultSplitNodes = 33;
constexpr int kDefaultSampleNodes = 17;
constexpr double kDefaultZoomT = 0.5;
constexpr double kZoomStep = 1e-3;
constexpr double kZoomTol = 1e-6;

struct Options {
  std::string command;
  std::string spec, zoo, point, lattice, split, out;
  int seed = kDefaultSeed;
  std::optional<int> samples;
  double t = kDefaultZoomT;
  double toleranceScale = 1.0;
  bool table = false;
};

struct Input {
  LoadedSpec spec;
  Json document;
  std::optional<ZooEntry> entry;
  const Chart& chart() const { return spec.loday.chart(); }
};

std::vector<double> parseCsv(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || r.ec != std::errc() || r.ptr != item.data() + item.size() || !std::isfinite(v))
      throw PreconditionError(std::string(flag) + ": '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw PreconditionError(std::string(flag) + ": empty list");
  return out;
}

std::vector<int> parseIntCsv(const std::string& text, const char* flag) {
  std::vector<int> out;
  for (double v : parseCsv(text, flag)) {
    if (v != std::floor(v) || v < 0 || v > 1e6) throw PreconditionError(std::string(flag) + ": expected non-negative integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("--spec: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Input loadInput(const Options& o) {
  if (o.spec.empty() == o.zoo.empty()) throw PreconditionError("exactly one of --spec and --zoo is required");
  Input in;
  if (!o.zoo.empty()) {
    in.entry = zooEntry(o.zoo);
    in.spec.loday = in.entry->loday;
    in.spec.courant = in.entry->courant;
    in.spec.zoo = o.zoo;
    in.document = {{"zoo", o.zoo}};
  } else {
    const Json doc = parseJsonText(readFile(o.spec));
    in.spec = specFromJson(doc);
    if (in.spec.zoo) in.entry = zooEntry(*in.spec.zoo);
    in.document = doc;
  }
  return in;
}

Point basepoint(const Options& o, const Chart& chart) {
  if (o.point.empty()) return chart.center();
  Point p = parseCsv(o.point, "--point");
  if (static_cast<int>(p.size()) != chart.dim())
    throw PreconditionError("--point: expected " + std::to_string(chart.dim()) + " coordinates");
  chart.requireInside(p);
  return p;
}

std::vector<int> latticeNodes(const Options& o, int dim, int fallback) {
  if (o.lattice.empty()) return std::vector<int>(static_cast<std::size_t>(dim), fallback);
  auto nodes = parseIntCsv(o.lattice, "--lattice");
  if (static_cast<int>(nodes.size()) != dim)
    throw PreconditionError("--lattice: expected " + std::to_string(dim) + " node counts");
  return nodes;
}

SamplePlan plan(const Options& o, const Chart& chart, int fallback) {
  const int count = o.samples.value_or(fallback);
  if (count < 1) throw PreconditionError("--samples: must be positive");
  if (o.seed < 0) throw PreconditionError("--seed: must be non-negative");
  return SamplePlan(chart, static_cast<std::uint64_t>(o.seed), count);
}

/// Entries whose pass flag follows residual <= tolerance are re-judged against the scaled tolerance.
void scaleTolerances(CheckReport& r, double scale) {
  for (auto& e : r.entries) {
    const bool ruled = e.pass == (e.maxResidual <= e.tolerance);
    e.tolerance *= scale;
    if (ruled) e.pass = e.maxResidual <= e.tolerance;
  }
}

CheckEntry flagEntry(const std::string& name, bool ok) {
  CheckEntry e;
  e.name = name;
  e.maxResidual = ok ? 0.0 : 1.0;
  e.tolerance = 0.0;
  e.pass = ok;
  return e;
}

Json pointJson(std::span<const double> p) { return Json(std::vector<double>(p.begin(), p.end())); }

struct Outcome {
  CheckReport required;
  CheckReport informational;
  Json result = Json::object();
};

Outcome runCheck(const Options& o, const Input& in) {
  Outcome out;
  out.required = checkStructure(in.spec.loday, plan(o, in.chart(), kDefaultSamples));
  return out;
}

Outcome runCourantCheck(const Options& o, const Input& in) {
  if (!in.spec.courant) throw PreconditionError("courant-check: the input has no metric");
  Outcome out;
  out.required = checkCourant(*in.spec.courant, plan(o, in.chart(), kDefaultSamples));
  return out;
}

Outcome runSplit(const Options& o, const Input& in) {
  if (!in.spec.courant) throw PreconditionError("split: the input has no metric");
  const Point p = basepoint(o, in.chart());
  const auto nodes = latticeNodes(o, in.chart().dim(), kDefaultSplitNodes);
  if (o.seed < 0) throw PreconditionError("--seed: must be non-negative");
  const SplitResult s = courantSplit(*in.spec.courant, p, nodes, static_cast<std::uint64_t>(o.seed));
  Outcome out;
  out.required = s.report;
  const Lattice& L = s.box.lattice;
  Json frame = Json::array();
  const int r = in.spec.courant->rank();
  const int rows = static_cast<int>(s.frame.size()) / r;
  for (int a = 0; a < rows; ++a) {
    Json row = Json::array();
    for (int i = 0; i < r; ++i) row.push_back(fieldToJson(s.frame[static_cast<std::size_t>(a * r + i)], s.box.chart, &L));
    frame.push_back(row);
  }
  Json factor = nullptr;
  if (s.factor) {
    std::vector<Interval> box(L.box().begin() + 1, L.box().end());
    std::vector<int> counts(L.nodes().begin() + 1, L.nodes().end());
    const Lattice T(box, counts);
    factor = specToJson(*s.factor, &T);
  }
  out.result = {{"basepoint", pointJson(p)},
                {"v", s.v},
                {"axis", s.box.axis},
                {"shrinks", s.box.shrinks},
                {"lattice", latticeToJson(L)},
                {"classification", s.classification},
                {"frame", frame},
                {"structure", specToJson(s.induced, &L)},
                {"factor", factor}};
  return out;
}

Outcome runLinearize(const Options& o, const Input& in) {
  const Point p = basepoint(o, in.chart());
  Outcome out;
  out.required = isSingular(in.spec.loday, p);
  const LinearModel L = linearize(in.spec.loday, p);
  out.required.append(leibnizCheck(L));
  const EulerCandidate ec = findEulerCandidate(L);
  const Lattice grid(in.chart().box(), latticeNodes(o, in.chart().dim(), kDefaultSampleNodes));
  out.result = {{"basepoint", pointJson(p)},
                {"c", L.c},
                {"A", L.A},
                {"L", L.L},
                {"structure", specToJson(linearModelAlgebroid(L), &grid)},
                {"euler_candidate", {{"found", ec.found}, {"v", ec.v}, {"residual", ec.residual}}}};
  return out;
}

Outcome runZoom(const Options& o, const Input& in) {
  const Point p = basepoint(o, in.chart());
  if (!(o.t > 0.0) || o.t + kZoomStep > 1.0) throw PreconditionError("--t: zoom needs 0 < t <= 1 - 1e-3");
  Outcome out;
  CheckEntry e;
  e.name = "zoom-derivative";
  e.maxResidual = zoomDerivativeCheck(in.spec.loday, p, o.t, plan(o, in.chart(), kDefaultSamples), kZoomStep);
  e.tolerance = kZoomTol;
  e.pass = e.maxResidual <= e.tolerance;
  out.required.add(e);
  const Lattice grid(in.chart().box(), latticeNodes(o, in.chart().dim(), kDefaultSampleNodes));
  out.result = {{"basepoint", pointJson(p)},
                {"t", o.t},
                {"structure", specToJson(zoomStructure(in.spec.loday, p, o.t), &grid)}};
  return out;
}

Outcome runClassify(const Options& o, const Input& in) {
  FrameSplit split;
  if (!o.split.empty()) {
    const auto v = parseIntCsv(o.split, "--split");
    if (v.size() != 2) throw PreconditionError("--split: expected n1,r1");
    const int n = in.chart().dim(), r = in.spec.loday.rank();
    if (v[0] > n || v[1] > r) throw PreconditionError("--split: factor exceeds the chart dimension or rank");
    split = productSplit(v[0], v[1], n - v[0], r - v[1]);
  } else if (in.entry && in.entry->split) {
    split = *in.entry->split;
  } else {
    throw PreconditionError("classify: no --split given and the input carries no default split");
  }
  const Classification c = classifyDecomposition(in.spec.loday, split, plan(o, in.chart(), kDefaultSamples));
  Outcome out;
  out.informational = c.table;
  if (o.split.empty() && in.entry && !in.entry->expectedClass.empty())
    out.required.add(flagEntry("expected-class", c.label == in.entry->expectedClass));
  out.result = {{"classification", c.label}};
  return out;
}

Outcome runNormProfile(const Options& o, const Input& in) {
  if (!in.spec.courant) throw PreconditionError("norm-profile: the input has no metric");
  const CourantStructure& C = *in.spec.courant;
  const Point p = basepoint(o, in.chart());
  const double n0 = bracketOperatorNorm(C, p, kNormDirections);
  Json rows = Json::array();
  const SamplePlan points = plan(o, in.chart(), kDefaultNormPoints);
  for (const auto& q : points.points()) {
    const double nq = bracketOperatorNorm(C, q, kNormDirections);
    Json ratio = n0 > 0.0 ? Json(nq / n0) : Json(nullptr);
    rows.push_back({{"point", pointJson(q)}, {"norm", nq}, {"ratio", ratio}});
  }
  Outcome out;
  out.result = {{"basepoint", pointJson(p)}, {"base_norm", n0}, {"profile", rows}};
  return out;
}

Outcome runZoo(const Options& o, const Input* in) {
  Outcome out;
  if (!in) {
    out.result = {{"catalog", zooCatalog()}};
    return out;
  }
  const ZooEntry& e = *in->entry;
  out.informational = runChecks(e, plan(o, in->chart(), kDefaultSamples));
  for (const auto& [name, mustPass] : e.expected) {
    const CheckEntry* actual = out.informational.find(name);
    out.required.add(flagEntry("expected:" + name, actual && actual->pass == mustPass));
  }
  out.result = {{"name", e.name},
                {"description", e.description},
                {"expected_class", e.expectedClass},
                {"structure", e.courant ? specToJson(*e.courant) : specToJson(e.loday)}};
  return out;
}

void writeAtomically(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw PreconditionError("--out: cannot write '" + path + "'");
    f << text;
    if (!f) throw PreconditionError("--out: cannot write '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw PreconditionError("--out: cannot write '" + path + "'");
}

void printTable(std::ostream& err, const Json& report) {
  for (const auto& e : report.at("entries")) {
    char line[256];
    const double res = e.at("max_residual").is_null() ? NAN : e.at("max_residual").get<double>();
    std::snprintf(line, sizeof line, "%-4s %-28s %12.4e  tol %9.2e%s\n", e.at("pass").get<bool>() ? "ok" : "FAIL",
                  e.at("name").get<std::string>().c_str(), res, e.at("tolerance").get<double>(),
                  e.at("required").get<bool>() ? "" : "  (info)");
    err << line;
  }
}

void addFlags(CLI::App* sub, Options& o) {
  sub->add_option("--spec", o.spec, "Spec document (JSON)");
  sub->add_option("--zoo", o.zoo, "Zoo entry: NAME[,params]");
  sub->add_option("--point", o.point, "Base point, comma-separated");
  sub->add_option("--seed", o.seed, "Sample plan seed");
  sub->add_option("--samples", o.samples, "Sample plan size");
  sub->add_option("--lattice", o.lattice, "Nodes per axis, comma-separated");
  sub->add_option("--t", o.t, "Zoom parameter");
  sub->add_option("--out", o.out, "Write the report to this file");
  sub->add_option("--tolerance-scale", o.toleranceScale, "Multiply every tolerance");
  sub->add_flag("--table", o.table, "Human-readable summary on standard error");
}

}  // namespace

int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Loday and Courant algebroid structure checks", kToolName};
  app.require_subcommand(1, 1);
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"check", "Loday axioms and tensoriality"},
      {"courant-check", "Courant axioms"},
      {"split", "Local splitting at a regular point"},
      {"linearize", "Linear model at a singular point"},
      {"zoom", "Rescaled structure and its t-derivative check"},
      {"classify", "Decomposition type for a frame split"},
      {"norm-profile", "Bracket operator norm over sample points"},
      {"zoo", "Example catalog or one entry against its expected checks"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    addFlags(sub, o);
    if (std::string(name) == "classify") sub->add_option("--split", o.split, "First factor size: n1,r1");
    sub->callback([&o, sub] { o.command = sub->get_name(); });
  }

  auto emit = [&](const Json& doc) {
    const std::string text = canonicalDump(doc);
    if (o.out.empty())
      out << text;
    else
      writeAtomically(o.out, text);
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    Json doc = {{"error", {{"kind", "usage"}, {"message", e.what()}}}, {"tool", kToolName}, {"version", kToolVersion}};
    out << canonicalDump(doc);
    return kExitError;
  }

  try {
    if (!(o.toleranceScale > 0.0) || !std::isfinite(o.toleranceScale))
      throw PreconditionError("--tolerance-scale: must be positive");
    std::optional<Input> in;
    if (o.command != "zoo" || !o.zoo.empty() || !o.spec.empty()) in = loadInput(o);
    if (o.command == "zoo" && in && !in->entry) throw PreconditionError("zoo: the input is not a zoo entry");

    Outcome r;
    if (o.command == "check") r = runCheck(o, *in);
    else if (o.command == "courant-check") r = runCourantCheck(o, *in);
    else if (o.command == "split") r = runSplit(o, *in);
    else if (o.command == "linearize") r = runLinearize(o, *in);
    else if (o.command == "zoom") r = runZoom(o, *in);
    else if (o.command == "classify") r = runClassify(o, *in);
    else if (o.command == "norm-profile") r = runNormProfile(o, *in);
    else r = runZoo(o, in ? &*in : nullptr);

    scaleTolerances(r.required, o.toleranceScale);
    scaleTolerances(r.informational, o.toleranceScale);
    Json entries = reportEntries(r.required, true);
    for (const auto& e : reportEntries(r.informational, false)) entries.push_back(e);

    Json options = {{"seed", o.seed},      {"samples", o.samples ? Json(*o.samples) : Json(nullptr)},
                    {"point", o.point},    {"lattice", o.lattice},
                    {"t", o.t},            {"split", o.split},
                    {"tolerance_scale", o.toleranceScale}};
    Json digestInput = {{"command", o.command}, {"input", in ? in->document : Json(nullptr)}, {"options", options}};
    const bool pass = r.required.allPass();
    Json report = {{"tool", kToolName},
                   {"version", kToolVersion},
                   {"command", o.command},
                   {"input_digest", sha256Hex(canonicalDump(digestInput))},
                   {"entries", entries},
                   {"pass", pass},
                   {"result", r.result}};
    emit(report);
    if (o.table) printTable(err, report);
    return pass ? kExitPass : kExitCheckFailed;
  } catch (const std::exception& e) {
    try {
      emit(errorObject(e));
    } catch (const std::exception&) {
      out << canonicalDump(errorObject(e));
    }
    return kExitError;
  }
}

}  // namespace lk
