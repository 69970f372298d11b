#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "lodaykit/cli.hpp"
#include "lodaykit/io.hpp"
#include "lodaykit/zoo.hpp"

using namespace lk;

namespace {

struct Run {
  int code;
  std::string text;
  Json doc;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = runCli(args, out, err);
  Json doc;
  try {
    doc = Json::parse(out.str());
  } catch (const std::exception&) {
  }
  return {code, out.str(), doc};
}

const Json* entry(const Json& report, const std::string& name) {
  for (const auto& e : report.at("entries"))
    if (e.at("name") == name) return &e;
  return nullptr;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "lodaykit-cli-test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void writeText(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

TEST_CASE("exit status contract") {
  struct Case {
    std::vector<std::string> args;
    int code;
  };
  const std::vector<Case> cases = {
      {{"check", "--zoo", "standard-courant,2", "--seed", "7", "--samples", "64"}, 0},
      {{"check", "--zoo", "twisted-courant,4,nonclosed", "--seed", "7"}, 1},
      {{"check", "--zoo", "poisson-cotangent,non-poisson"}, 1},
      {{"courant-check", "--zoo", "standard-courant,3"}, 0},
      {{"courant-check", "--zoo", "poisson-cotangent,linear-so3"}, 2},
      {{"linearize", "--zoo", "quadratic-lie-bundle,3,1 + x1 + x2^2", "--point", "0,0,0"}, 0},
      {{"linearize", "--zoo", "standard-courant,1"}, 2},
      {{"zoom", "--zoo", "quadratic-lie-bundle,3,1 + x1", "--t", "0.5"}, 0},
      {{"zoom", "--zoo", "quadratic-lie-bundle,3,1 + x1", "--t", "1"}, 2},
      {{"classify", "--zoo", "product-standard,1,1"}, 0},
      {{"classify", "--zoo", "standard-courant,2", "--split", "1,2"}, 0},
      {{"classify", "--zoo", "poisson-cotangent,linear-so3"}, 2},
      {{"norm-profile", "--zoo", "quadratic-lie-bundle,3,1 + x1"}, 0},
      {{"norm-profile", "--zoo", "standard-courant,2"}, 2},
      {{"zoo"}, 0},
      {{"zoo", "--zoo", "twisted-courant,4,nonclosed"}, 0},
      {{"split", "--zoo", "quadratic-lie-bundle,3,1"}, 2},
      {{"frobnicate"}, 2},
      {{"check", "--zoo", "standard-courant,2", "--bogus"}, 2},
      {{"check"}, 2},
      {{"check", "--zoo", "standard-courant,2", "--spec", "x.json"}, 2},
      {{"check", "--zoo", "no-such-entry"}, 2},
      {{"check", "--zoo", "standard-courant,2", "--tolerance-scale", "0"}, 2},
      {{"split", "--zoo", "standard-courant,2", "--point", "0.1"}, 2},
  };
  for (const auto& c : cases) {
    std::string line;
    for (const auto& a : c.args) line += a + " ";
    CAPTURE(line);
    const Run r = run(c.args);
    CHECK(r.code == c.code);
    REQUIRE(r.doc.is_object());
    if (c.code == 2) {
      CHECK(r.doc.at("error").at("kind").is_string());
      CHECK(r.doc.at("error").at("message").is_string());
    } else {
      CHECK(r.doc.at("pass") == (c.code == 0));
      for (const auto& e : r.doc.at("entries"))
        for (const char* key : {"name", "max_residual", "tolerance", "worst_point", "pass"}) CHECK(e.contains(key));
    }
  }
}

TEST_CASE("reports are byte-identical across runs") {
  for (const std::vector<std::string>& args :
       {std::vector<std::string>{"check", "--zoo", "twisted-courant,3,closed", "--seed", "11"},
        std::vector<std::string>{"split", "--zoo", "standard-courant,1", "--lattice", "17"},
        std::vector<std::string>{"norm-profile", "--zoo", "quadratic-lie-bundle,3,1 + x1", "--samples", "4"}}) {
    const Run a = run(args), b = run(args);
    CHECK(a.code == b.code);
    CHECK(a.text == b.text);
    CHECK(a.doc.at("input_digest").get<std::string>().size() == 64);
  }
  const Run s7 = run({"check", "--zoo", "standard-courant,1", "--seed", "7"});
  const Run s8 = run({"check", "--zoo", "standard-courant,1", "--seed", "8"});
  CHECK(s7.doc.at("input_digest") != s8.doc.at("input_digest"));
}

TEST_CASE("check reports") {
  const Run r = run({"check", "--zoo", "twisted-courant,4,nonclosed", "--seed", "7"});
  REQUIRE(entry(r.doc, "jacobi"));
  CHECK(entry(r.doc, "jacobi")->at("pass") == false);
  CHECK(entry(r.doc, "jacobi")->at("max_residual").get<double>() >= 0.1);
  CHECK(entry(r.doc, "a")->at("pass") == true);
  CHECK(r.doc.at("tool") == kToolName);
  CHECK(r.doc.at("version") == kToolVersion);
  CHECK(r.doc.at("command") == "check");
}

TEST_CASE("split report") {
  const Run r = run({"split", "--zoo", "standard-courant,2", "--point", "0.1,-0.2", "--lattice", "33,33"});
  CHECK(r.code == 0);
  for (const char* item : {"item-a", "item-b", "item-c", "item-d", "item-e-bracket", "item-e-anchor"}) {
    REQUIRE(entry(r.doc, item));
    CHECK(entry(r.doc, item)->at("max_residual").get<double>() <= 1e-6);
  }
  const Json& res = r.doc.at("result");
  CHECK(res.at("classification") == "direct");
  CHECK(res.at("frame").size() == 4);
  const LoadedSpec factor = specFromJson(res.at("factor"));
  REQUIRE(factor.courant);
  CHECK(checkCourant(*factor.courant, SamplePlan(factor.loday.chart(), 7, 16)).allPass());
  const LoadedSpec induced = specFromJson(res.at("structure"));
  CHECK(induced.loday.rank() == 4);
  CHECK(induced.loday.dim() == 2);
}

TEST_CASE("classify and zoo commands") {
  const Run c = run({"classify", "--zoo", "poisson-cotangent,linear-so3", "--split", "1,1"});
  CHECK(c.code == 0);
  CHECK(c.doc.at("result").at("classification").is_string());
  for (const auto& e : c.doc.at("entries")) CHECK(e.at("required") == false);

  const Run z = run({"zoo"});
  CHECK(z.doc.at("result").at("catalog") == Json(zooCatalog()));
  const Run t = run({"zoo", "--zoo", "twisted-courant,4,nonclosed"});
  REQUIRE(entry(t.doc, "expected:jacobi"));
  CHECK(entry(t.doc, "expected:jacobi")->at("pass") == true);
  CHECK(entry(t.doc, "jacobi")->at("required") == false);
}

TEST_CASE("linearize report") {
  const Run r = run({"linearize", "--zoo", "quadratic-lie-bundle,3,1 + x1 + x2^2", "--point", "0,0,0"});
  REQUIRE(r.code == 0);
  const auto c = r.doc.at("result").at("c").get<std::vector<double>>();
  REQUIRE(c.size() == 27);
  CHECK(c[(0 * 3 + 1) * 3 + 2] == 1.0);
  CHECK(c[(1 * 3 + 0) * 3 + 2] == -1.0);
  const LoadedSpec model = specFromJson(r.doc.at("result").at("structure"));
  CHECK(model.loday.gamma(0, 1, 2).constantValue() == 1.0);
}

TEST_CASE("spec files") {
  const auto path = scratch("standard2.json");
  writeText(path, canonicalDump(specToJson(standardCourant(2))));
  const Run fromFile = run({"courant-check", "--spec", path.string()});
  const Run fromZoo = run({"courant-check", "--zoo", "standard-courant,2"});
  CHECK(fromFile.code == 0);
  CHECK(fromFile.doc.at("entries") == fromZoo.doc.at("entries"));

  SUBCASE("zoo reference inside a spec file") {
    writeText(path, R"({"zoo": {"name": "twisted-courant", "params": [4, "nonclosed"]}})");
    CHECK(run({"check", "--spec", path.string()}).code == 1);
    CHECK(run({"zoo", "--spec", path.string()}).code == 0);
  }
  SUBCASE("syntax error location") {
    writeText(path, "{\n  \"rank\": 2,\n  \"chart\": ]\n}");
    const Run r = run({"check", "--spec", path.string()});
    CHECK(r.code == 2);
    CHECK(r.doc.at("error").at("kind") == "parse");
    CHECK(r.doc.at("error").at("line") == 3);
    CHECK(r.doc.at("error").at("column") == 12);
  }
  SUBCASE("out-of-range index") {
    Json doc = specToJson(standardCourant(1));
    doc["gamma"]["0,0,2"] = "1";
    writeText(path, doc.dump());
    const Run r = run({"check", "--spec", path.string()});
    CHECK(r.code == 2);
    CHECK(r.doc.at("error").at("message").get<std::string>().find("'0,0,2'") != std::string::npos);
  }
}

TEST_CASE("--out writes the same report") {
  const auto path = scratch("report.json");
  std::filesystem::remove(path);
  std::ostringstream out, err;
  const int code = runCli({"check", "--zoo", "standard-courant,1", "--out", path.string()}, out, err);
  CHECK(code == 0);
  CHECK(out.str().empty());
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str() == run({"check", "--zoo", "standard-courant,1"}).text);
  CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
}

TEST_CASE("--tolerance-scale and --table") {
  const Run base = run({"check", "--zoo", "standard-courant,1"});
  const Run scaled = run({"check", "--zoo", "standard-courant,1", "--tolerance-scale", "4"});
  const auto& e0 = base.doc.at("entries")[0];
  const auto& e1 = scaled.doc.at("entries")[0];
  CHECK(e1.at("tolerance").get<double>() == 4 * e0.at("tolerance").get<double>());

  // A zoom residual of order dt^2 fails once the tolerance is scaled far below it.
  const Run tight = run({"zoom", "--zoo", "quadratic-lie-bundle,3,1 + x1^2", "--tolerance-scale", "1e-12"});
  CHECK(tight.code == 1);

  std::ostringstream out, err;
  runCli({"check", "--zoo", "standard-courant,1", "--table"}, out, err);
  CHECK(err.str().find("jacobi") != std::string::npos);
  std::ostringstream out2, err2;
  runCli({"check", "--zoo", "standard-courant,1"}, out2, err2);
  CHECK(err2.str().empty());
  CHECK(out.str() == out2.str());
}

TEST_CASE("help") {
  const Run r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.text.find("split") != std::string::npos);
}
