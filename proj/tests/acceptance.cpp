// One PASS/FAIL line per acceptance criterion; exit status 1 when any criterion fails.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lodaykit/errors.hpp"
#include "lodaykit/io.hpp"
#include "lodaykit/linearization.hpp"
#include "lodaykit/splitting.hpp"
#include "lodaykit/zoo.hpp"

using namespace lk;

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double fieldGap(const std::vector<ScalarField>& a, const std::vector<ScalarField>& b, const SamplePlan& plan) {
  double worst = 0.0;
  for (const auto& q : plan.points())
    for (std::size_t t = 0; t < a.size(); ++t) worst = std::max(worst, std::abs(a[t].value(q) - b[t].value(q)));
  return worst;
}

double sectionGap(const Section& a, const Section& b, const SamplePlan& plan) {
  double worst = 0.0;
  for (const auto& q : plan.points()) {
    double diff = 0.0, mag = 0.0;
    for (int k = 0; k < a.rank(); ++k) {
      const double x = a[k].value(q), y = b[k].value(q);
      diff = std::max(diff, std::abs(x - y));
      mag = std::max({mag, std::abs(x), std::abs(y)});
    }
    worst = std::max(worst, diff / (1.0 + mag));
  }
  return worst;
}

double worstResidual(const CheckReport& r) {
  double w = 0.0;
  for (const auto& e : r.entries) w = std::max(w, e.maxResidual);
  return w;
}

Verdict axiomSuite() {
  Verdict v;
  for (int n : {1, 2, 3}) {
    const auto start = std::chrono::steady_clock::now();
    const CourantStructure C = standardCourant(n);
    const SamplePlan plan(C.chart(), 7, 64);
    const CheckReport loday = checkStructure(C.base(), plan);
    const CheckReport courant = checkCourant(C, plan);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double worst = std::max(worstResidual(loday), worstResidual(courant));
    v.detail << " n=" << n << ": max residual " << worst << ", " << seconds << " s;";
    v.require(loday.allPass() && courant.allPass(), "entry failed for n=" + std::to_string(n));
    v.require(worst <= 1e-9, "residual above 1e-9 for n=" + std::to_string(n));
    v.require(seconds < 5.0, "wall time for n=" + std::to_string(n));
  }
  return v;
}

Verdict twistDiscrimination() {
  Verdict v;
  ThreeForm closed(3);
  closed.set(0, 1, 2, ScalarField::constant(1.0));
  const CourantStructure T3 = twistedCourant(3, closed);
  const double j3 = checkStructure(T3.base(), SamplePlan(T3.chart(), 7, 64)).at("jacobi").maxResidual;
  ThreeForm open(4);
  open.set(0, 1, 2, ScalarField::coordinate(3));
  const CourantStructure T4 = twistedCourant(4, open);
  const CheckReport r4 = checkStructure(T4.base(), SamplePlan(T4.chart(), 7, 64));
  v.detail << " closed jacobi " << j3 << "; x4 dx123 jacobi " << r4.at("jacobi").maxResidual << ", entry a "
           << r4.at("a").maxResidual;
  v.require(j3 <= 1e-9, "closed twist jacobi");
  v.require(r4.at("jacobi").maxResidual >= 0.1, "non-closed twist jacobi below 0.1");
  v.require(r4.at("a").pass && r4.at("a").maxResidual <= 1e-9, "tensoriality entry a");
  return v;
}

double oracleGap(const CourantStructure& C, const ThreeForm* eta, std::uint64_t seed) {
  const int n = C.dim();
  std::mt19937_64 gen(seed);
  const SamplePlan plan(C.chart(), seed, 8);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Section a = randomSection(2 * n, n, gen), b = randomSection(2 * n, n, gen);
    const DorfmanPair pa = fromSection(a), pb = fromSection(b);
    const DorfmanPair o = oracleDorfman(pa.X, pa.alpha, pb.X, pb.alpha, eta);
    worst = std::max(worst, sectionGap(bracketSections(C.base(), a, b), toSection(o.X, o.alpha), plan));
  }
  return worst;
}

Verdict oracleEquivalence() {
  Verdict v;
  for (int n : {1, 2, 3}) {
    const double plain = oracleGap(standardCourant(n), nullptr, 300 + u(n));
    v.detail << " n=" << n << " plain " << plain;
    v.require(plain <= 1e-9, "untwisted n=" + std::to_string(n));
    if (n == 3) {
      ThreeForm eta(3);
      eta.set(0, 1, 2, ScalarField::parse("1 + x1*x3 - x2^2", {"x1", "x2", "x3"}));
      const double twisted = oracleGap(twistedCourant(3, eta), &eta, 310);
      v.detail << ", twisted " << twisted;
      v.require(twisted <= 1e-9, "twisted n=3");
    }
    v.detail << ";";
  }
  return v;
}

Verdict invariantSectionOrder() {
  Verdict v;
  LodayStructure A(Chart({"t"}, {{-1.0, 1.0}}), 2);
  A.setTheta(0, 0, ScalarField::constant(1.0));
  for (int j = 0; j < 2; ++j) A.setGamma(0, j, j, ScalarField::constant(1.0));
  const std::vector<double> v0{0.3, -0.7};
  double previous = 0.0;
  for (int N : {9, 17, 33, 65}) {
    const GridSection b = solveInvariantSection(A, Section::frame(2, 0), v0, {N});
    double err = 0.0;
    for (std::size_t node = 0; node < b.lattice.total(); ++node) {
      const double t = b.lattice.point(node)[0];
      for (int k = 0; k < 2; ++k) err = std::max(err, std::abs(b.tables[u(k)][node] - std::exp(-t) * v0[u(k)]));
    }
    const double h = b.lattice.maxSpacing();
    v.detail << " h=" << h << " err=" << err;
    v.require(err <= 50 * std::pow(h, 4), "error above 50 h^4 at N=" + std::to_string(N));
    if (previous > 0.0) {
      v.detail << " (ratio " << previous / err << ")";
      v.require(previous / err >= 12.0, "ratio below 12 at N=" + std::to_string(N));
    }
    v.detail << ";";
    previous = err;
  }
  return v;
}

Verdict splittingAtDeskScale() {
  Verdict v;
  const SplitResult s = courantSplit(standardCourant(2), Point{0.1, -0.2}, {33, 33});
  double items = 0.0;
  for (const char* name : {"item-a", "item-b", "item-c", "item-d", "item-e-bracket", "item-e-anchor"}) {
    const CheckEntry* e = s.report.find(name);
    v.require(e != nullptr, std::string("missing ") + name);
    if (e) {
      items = std::max(items, e->maxResidual);
      v.require(e->pass && e->maxResidual <= 1e-6, name);
    }
  }
  v.require(s.accepted(), "split report");
  // Metric in the frame (alpha, Dt, beta...): antidiag(1, 1) on the first block, zero coupling, constant rest.
  const CourantStructure& I = s.induced;
  const int r = I.rank();
  const Lattice& L = s.box.lattice;
  const auto g0 = I.metricAt(L.point(0));
  double metricGap = 0.0;
  for (std::size_t node = 0; node < L.total(); ++node) {
    const auto g = I.metricAt(L.point(node));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        double want;
        if (i < 2 && j < 2) want = i == j ? 0.0 : 1.0;
        else if (i < 2 || j < 2) want = 0.0;
        else want = g0[u(i * r + j)];
        metricGap = std::max(metricGap, std::abs(g[u(i * r + j)] - want));
      }
  }
  v.require(metricGap <= 1e-6, "recovered metric");
  v.require(s.classification == "direct", "classification " + s.classification);
  bool factorOk = false;
  if (s.factor) {
    const LoadedSpec back = specFromJson(parseJsonText(canonicalDump(specToJson(*s.factor))));
    factorOk = back.courant && checkCourant(*back.courant, SamplePlan(back.loday.chart(), 7, 64)).allPass();
  }
  v.require(factorOk, "re-serialized factor checkCourant");
  v.detail << " max item residual " << items << "; metric gap " << metricGap << "; classification "
           << s.classification << "; factor " << (factorOk ? "passes" : "fails") << " checkCourant";
  return v;
}

LodayStructure linearSo3() {
  const ScalarField x1 = ScalarField::coordinate(0), x2 = ScalarField::coordinate(1), x3 = ScalarField::coordinate(2);
  const ScalarField z = ScalarField::constant(0.0);
  return poissonCotangent(Chart::cube(3, -1, 1, "y"), {z, x3, -x2, -x3, z, x1, x2, -x1, z});
}

Verdict productCorollaries() {
  Verdict v;
  const LodayStructure P = directProduct(centeredModel(), linearSo3());
  const CheckReport r = checkStructure(P, SamplePlan(P.chart(), 7, 32));
  v.detail << " centered x so3 jacobi " << r.at("jacobi").maxResidual << ";";
  v.require(r.at("jacobi").pass && r.at("jacobi").maxResidual <= 1e-9, "product jacobi");

  const CourantStructure Q =
      directProduct(standardCourant(Chart::cube(1)), standardCourant(Chart::cube(1, -1.0, 1.0, "y")));
  const CourantStructure S = standardCourant(2);
  // Product frame (d_x, dx, d_y, dy); standard frame (d_1, d_2, dx_1, dx_2).
  const CourantStructure R = permuteFrame(Q, {0, 2, 1, 3});
  const SamplePlan plan(S.chart(), 64, 64);
  const double gap = std::max({fieldGap(R.base().gammaFields(), S.base().gammaFields(), plan),
                               fieldGap(R.base().thetaFields(), S.base().thetaFields(), plan),
                               fieldGap(R.base().lambdaFields(), S.base().lambdaFields(), plan),
                               fieldGap(R.metricFields(), S.metricFields(), plan)});
  v.detail << " standard(1) x standard(1) vs standard(2) gap " << gap;
  v.require(gap <= 1e-12, "product of standard structures");
  return v;
}

Verdict linearizationOfBundle() {
  Verdict v;
  const Chart quarter({"x1", "x2"}, {{-0.25, 0.25}, {-0.25, 0.25}});
  const CourantStructure C = quadraticLieBundle(quarter, su2Data(), ScalarField::parse("1 + x1 + x2^2", quarter.names()));
  const Point o{0.0, 0.0};
  const LinearModel L = linearize(C.base(), o);
  const LieData su2 = su2Data();
  double cGap = 0.0;
  for (std::size_t t = 0; t < L.c.size(); ++t) cGap = std::max(cGap, std::abs(L.c[t] - su2.c[t]));
  v.detail << " |c - eps| " << cGap << ";";
  v.require(cGap <= 1e-12, "linear model constants");

  const LodayStructure Z0 = zoomStructure(C.base(), o, 0.0);
  const SamplePlan plan(quarter, 7, 64);
  for (double t : {1.0, 0.5, 0.25}) {
    const double gap = fieldGap(zoomStructure(C.base(), o, t).gammaFields(), Z0.gammaFields(), plan);
    v.detail << " t=" << t << " gap " << gap << " bound " << quarter.radius(o) * t << ";";
    v.require(gap <= quarter.radius(o) * t, "zoom convergence at t=" + std::to_string(t));
  }
  const double d = zoomDerivativeCheck(C.base(), o, 0.5, plan, 1e-3);
  v.detail << " derivative check " << d;
  v.require(d <= 1e-6, "zoom derivative");
  return v;
}

Verdict linearizationPrinciple() {
  Verdict v;
  const LodayStructure A = centeredModel();
  const Point o{0.0, 0.0, 0.0};
  const EulerCandidate e = findEulerCandidate(linearize(A, o));
  v.require(e.found, "candidate not found");
  v.require(e.residual <= 1e-12, "candidate residual");
  double lin = INFINITY;
  if (e.found) lin = linearizationResidual(A, sectionDerivation(A, Section::constant(e.v)), SamplePlan(A.chart(), 7, 32));
  v.detail << " candidate residual " << e.residual << "; linearization residual " << lin;
  v.require(lin <= 1e-9, "linearization residual");
  return v;
}

Verdict obstruction() {
  Verdict v;
  const Chart ch = Chart::cube(3);
  const ScalarField f = ScalarField::parse("1 + x1", ch.names());
  const CourantStructure C = quadraticLieBundle(ch, su2Data(), f);
  const Point o{0.0, 0.0, 0.0};
  const double n0 = bracketOperatorNorm(C, o, 64);
  double worst = 0.0;
  const SamplePlan plan(ch, 7, 10);
  for (const auto& q : plan.points())
    worst = std::max(worst, std::abs(bracketOperatorNorm(C, q, 64) / n0 - std::abs(f.value(q) / f.value(o))));
  v.detail << " max |N(q)/N(0) - |f(q)/f(0)|| " << worst;
  v.require(worst <= 0.01, "norm ratio");
  return v;
}

struct CliRun {
  int code;
  std::string out;
};

CliRun runCli(const std::vector<std::string>& args) {
  std::string cmd = "'" LODAYKIT_CLI "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

Verdict determinismAndInterface() {
  Verdict v;
  const std::vector<std::string> split{"split", "--zoo", "standard-courant,2", "--point", "0.1,-0.2", "--lattice", "33,33"};
  const CliRun a = runCli(split), b = runCli(split);
  v.require(a.code == 0 && a.out == b.out && !a.out.empty(), "split reports differ");
  bool itemsOk = false;
  try {
    const Json doc = Json::parse(a.out);
    itemsOk = doc.at("result").at("classification") == "direct";
    for (const auto& e : doc.at("entries"))
      if (e.at("name").get<std::string>().rfind("item-", 0) == 0)
        itemsOk = itemsOk && e.at("max_residual").get<double>() <= 1e-6;
  } catch (const std::exception&) {
    itemsOk = false;
  }
  v.require(itemsOk, "split report content");

  struct Case {
    std::vector<std::string> args;
    int code;
  };
  const std::vector<Case> matrix = {
      {{"check", "--zoo", "standard-courant,2", "--seed", "7", "--samples", "64"}, 0},
      {{"check", "--zoo", "twisted-courant,4,nonclosed", "--seed", "7"}, 1},
      {{"check", "--zoo", "poisson-cotangent,non-poisson"}, 1},
      {{"courant-check", "--zoo", "twisted-courant,3,closed"}, 0},
      {{"courant-check", "--zoo", "centered-model"}, 2},
      {{"linearize", "--zoo", "quadratic-lie-bundle,3,1 + x1 + x2^2"}, 0},
      {{"linearize", "--zoo", "standard-courant,1"}, 2},
      {{"zoom", "--zoo", "quadratic-lie-bundle,3,1 + x1", "--t", "0.5"}, 0},
      {{"classify", "--zoo", "product-standard,1,1"}, 0},
      {{"norm-profile", "--zoo", "quadratic-lie-bundle,3,1 + x1"}, 0},
      {{"norm-profile", "--zoo", "standard-courant,2"}, 2},
      {{"split", "--zoo", "quadratic-lie-bundle,3,1"}, 2},
      {{"zoo", "--zoo", "poisson-cotangent,non-poisson"}, 0},
      {{"zoo"}, 0},
      {{"frobnicate"}, 2},
      {{"check", "--zoo", "standard-courant,1", "--bogus-flag"}, 2},
  };
  int matched = 0;
  for (const auto& c : matrix) {
    const CliRun r = runCli(c.args), again = runCli(c.args);
    bool ok = r.code == c.code && r.out == again.out;
    try {
      const Json doc = Json::parse(r.out);
      ok = ok && (c.code == 2 ? doc.contains("error") : doc.at("pass") == (c.code == 0));
    } catch (const std::exception&) {
      ok = false;
    }
    if (ok) {
      ++matched;
    } else {
      std::string line;
      for (const auto& s : c.args) line += s + " ";
      v.require(false, "'" + line + "' exit " + std::to_string(r.code) + ", expected " + std::to_string(c.code));
    }
  }
  v.detail << " split report byte-identical: " << (a.out == b.out ? "yes" : "no") << "; exit matrix " << matched << "/"
           << matrix.size();
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"axiom suite on standard Courant structures", axiomSuite},
      {"twist discrimination", twistDiscrimination},
      {"bracket vs Dorfman oracle", oracleEquivalence},
      {"invariant-section solver order", invariantSectionOrder},
      {"splitting at desk scale", splittingAtDeskScale},
      {"direct-product corollaries", productCorollaries},
      {"linearization of the quadratic Lie bundle", linearizationOfBundle},
      {"linearization principle, centered model", linearizationPrinciple},
      {"norm obstruction invariant", obstruction},
      {"CLI determinism and exit statuses", determinismAndInterface},
  };
  int failures = 0;
  int index = 1;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    if (!v.pass) ++failures;
    std::cout << "CRITERION " << index++ << " " << (v.pass ? "PASS" : "FAIL") << " " << name << ":" << v.detail.str()
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
