#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "lodaykit/courant.hpp"
#include "lodaykit/errors.hpp"
#include "lodaykit/zoo.hpp"

using namespace lk;

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

// Standard Courant structure on the square seen through a non-constant frame, so the metric varies.
CourantStructure bentStandard() {
  const CourantStructure C = standardCourant(2);
  std::vector<ScalarField> F(16, ScalarField::constant(0.0));
  for (int a = 0; a < 4; ++a) F[u(a * 4 + a)] = ScalarField::constant(1.0);
  F[0 * 4 + 2] = ScalarField::coordinate(1);
  F[1 * 4 + 3] = 2.0 + sin(ScalarField::coordinate(0));
  F[3 * 4 + 0] = 0.3 * ScalarField::coordinate(0);
  return changeFrame(C, F);
}

std::vector<double> sectionAt(const Section& s, const Point& q) {
  std::vector<double> v;
  for (const auto& c : s.comps) v.push_back(c.value(q));
  return v;
}

std::vector<double> su2Gamma(double scale) {
  const LieData d = su2Data();
  std::vector<double> g(d.c);
  for (auto& x : g) x *= scale;
  return g;
}

std::vector<double> identity(int r, double s = 1.0) {
  std::vector<double> g(u(r * r), 0.0);
  for (int i = 0; i < r; ++i) g[u(i * r + i)] = s;
  return g;
}

}  // namespace

TEST_CASE("rhoStar on the standard structure picks out the cotangent frame") {
  for (int n : {1, 2, 3}) {
    const CourantStructure C = standardCourant(n);
    const Point q(u(n), 0.2);
    for (int m = 0; m < n; ++m) {
      const auto v = sectionAt(rhoStar(C, OneForm::coordinate(n, m)), q);
      for (int k = 0; k < 2 * n; ++k) CHECK(v[u(k)] == (k == n + m ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("rhoStar vanishes when the anchor does") {
  const CourantStructure C = quadraticLieBundle(Chart::cube(3), su2Data(), ScalarField::coordinate(0));
  const OneForm xi{{ScalarField::coordinate(1), ScalarField::constant(2.0), ScalarField::coordinate(2)}};
  const auto v = sectionAt(rhoStar(C, xi), Point{0.1, 0.2, 0.3});
  for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("rhoStar satisfies its defining identity with a varying metric") {
  const CourantStructure C = bentStandard();
  SamplePlan plan(C.chart(), 5, 24);
  std::mt19937_64 gen(5);
  for (int t = 0; t < 3; ++t) {
    const OneForm xi{{randomPolynomial(2, gen), randomPolynomial(2, gen)}};
    const Section b = randomSection(4, 2, gen);
    const Section rs = rhoStar(C, xi);
    const ScalarField lhs = pairing(C, rs, b);
    const VectorField rb = anchorApply(C.base(), b);
    const ScalarField rhs = xi[0] * rb[0] + xi[1] * rb[1];
    for (const auto& q : plan.points()) {
      const double l = lhs.value(q), r = rhs.value(q);
      CHECK(std::abs(l - r) <= 1e-12 * (1.0 + std::abs(l) + std::abs(r)));
      // The constant fast path and the lazy section agree.
      const std::vector<double> xv{xi[0].value(q), xi[1].value(q)};
      const auto direct = rhoStarAt(C, q, xv);
      const auto lazy = sectionAt(rs, q);
      for (int k = 0; k < 4; ++k) CHECK(direct[u(k)] == doctest::Approx(lazy[u(k)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("dFunction") {
  const CourantStructure C = standardCourant(2);
  const Point q{0.3, -0.2};
  for (double x : sectionAt(dFunction(C, ScalarField::constant(4.0)), q)) CHECK(x == 0.0);
  const auto v = sectionAt(dFunction(C, ScalarField::coordinate(0)), q);
  CHECK(v == std::vector<double>{0.0, 0.0, 1.0, 0.0});

  SamplePlan plan(C.chart(), 9, 16);
  std::mt19937_64 gen(9);
  const ScalarField f = randomPolynomial(2, gen);
  const VectorField a = anchorApply(C.base(), dFunction(C, f));
  for (const auto& p : plan.points())
    for (int m = 0; m < 2; ++m) CHECK(std::abs(a[m].value(p)) <= 1e-12);
}

TEST_CASE("checkCourant on exact models") {
  SUBCASE("standard structure in three dimensions") {
    const CourantStructure C = standardCourant(3);
    SamplePlan plan(C.chart(), 13, 16);
    const CheckReport rep = checkCourant(C, plan);
    CHECK(rep.entries.size() == 9);
    for (const auto& e : rep.entries) {
      CHECK_MESSAGE(e.pass, e.name);
      CHECK(e.maxResidual <= 1e-9);
    }
    CHECK(rep.entries[0].name == "pairing");
    CHECK(rep.entries[1].name == "symm");
    CHECK(rep.entries[2].name == "coanchor");
  }
  SUBCASE("quadratic Lie bundle for several f") {
    const Chart ch = Chart::cube(3);
    for (const char* text : {"1", "x1", "1 + x1*x2 - x3^2", "sin(x2)"}) {
      const CourantStructure C = quadraticLieBundle(ch, su2Data(), ScalarField::parse(text, ch.names()));
      SamplePlan plan(ch, 17, 16);
      for (const auto& e : checkCourant(C, plan).entries) {
        CHECK_MESSAGE(e.pass, text, " ", e.name);
        CHECK(e.maxResidual <= 1e-12);
      }
    }
  }
  SUBCASE("frame-changed standard structure") {
    const CourantStructure C = bentStandard();
    SamplePlan plan(C.chart(), 19, 12);
    CHECK(checkCourant(C, plan).allPass());
  }
  SUBCASE("twisted by a closed form") {
    SamplePlan plan(Chart::cube(3), 23, 12);
    CHECK(checkCourant(*zooEntry("twisted-courant,3,closed").courant, plan).allPass());
  }
}

TEST_CASE("checkCourant detects a broken co-anchor and pairing") {
  CourantStructure C = standardCourant(2);
  C.base().setLambda(0, 0, 2, 2, ScalarField::constant(0.0));
  SamplePlan plan(C.chart(), 29, 8);
  const CheckReport rep = checkCourant(C, plan);
  CHECK_FALSE(rep.at("coanchor").pass);
  CHECK_FALSE(rep.at("symm").pass);
}

TEST_CASE("a singular metric is a nondegeneracy error") {
  const CourantStructure S = standardCourant(2);
  std::vector<ScalarField> g(16, ScalarField::constant(0.0));
  g[0] = ScalarField::constant(1.0);
  const CourantStructure C(S.base(), g);
  SamplePlan plan(C.chart(), 1, 4);
  CHECK_THROWS_AS(checkCourant(C, plan), DegenerateMetric);
  CHECK_THROWS_AS(rhoStar(C, OneForm::coordinate(2, 0))[0].value(Point{0.0, 0.0}), DegenerateMetric);
}

TEST_CASE("asymmetric metric is rejected") {
  const CourantStructure S = standardCourant(1);
  std::vector<ScalarField> g{ScalarField::constant(0.0), ScalarField::constant(1.0), ScalarField::constant(2.0),
                             ScalarField::constant(0.0)};
  CHECK_THROWS_AS(CourantStructure(S.base(), g), PreconditionError);
}

TEST_CASE("rho composed with rhoStar vanishes on structures passing the checks") {
  const CourantStructure C = bentStandard();
  SamplePlan plan(C.chart(), 31, 12);
  const CheckReport rep = checkCourant(C, plan);
  REQUIRE(rep.at("symm").pass);
  REQUIRE(rep.at("a").pass);
  std::mt19937_64 gen(31);
  const OneForm xi{{randomPolynomial(2, gen), randomPolynomial(2, gen)}};
  const VectorField v = anchorApply(C.base(), rhoStar(C, xi));
  for (const auto& q : plan.points())
    for (int m = 0; m < 2; ++m) CHECK(std::abs(v[m].value(q)) <= 2e-9);
}

TEST_CASE("operator norm examples") {
  SUBCASE("zero bracket") { CHECK(bilinearNorm(std::vector<double>(27, 0.0), identity(3), 3, 8) == 0.0); }
  SUBCASE("cross product has norm one") {
    // sup |u x v| over unit u, v is 1.
    CHECK(bilinearNorm(su2Gamma(1.0), identity(3), 3, 16) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(bilinearNorm(su2Gamma(-2.5), identity(3), 3, 16) == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(bilinearNorm(su2Gamma(1.0), identity(3, -1.0), 3, 16) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("scaled metric") {
    // With g = s I, unit vectors have length 1/sqrt(s) and |w|_g = sqrt(s)|w|, so N = 1/sqrt(s).
    CHECK(bilinearNorm(su2Gamma(1.0), identity(3, 4.0), 3, 16) == doctest::Approx(0.5).epsilon(1e-9));
  }
  SUBCASE("rank one bracket") {
    // [e1, e2] = 3 e1 only: N = 3.
    std::vector<double> g(8, 0.0);
    g[(0 * 2 + 1) * 2 + 0] = 3.0;
    CHECK(bilinearNorm(g, identity(2), 2, 8) == doctest::Approx(3.0).epsilon(1e-9));
  }
  SUBCASE("indefinite pairing") {
    const CourantStructure C = standardCourant(2);
    try {
      bracketOperatorNorm(C, Point{0.0, 0.0}, 8);
      FAIL("expected an exception");
    } catch (const IndefinitePairing& e) {
      CHECK(std::string(e.what()) == "norm undefined for indefinite pairing");
    }
  }
  SUBCASE("bad sample count") { CHECK_THROWS_AS(bilinearNorm(su2Gamma(1.0), identity(3), 3, 0), PreconditionError); }
}

TEST_CASE("operator norm scales with the bracket function") {
  const Chart ch = Chart::cube(3);
  const ScalarField f = ScalarField::parse("1 + x1 + x2^2", ch.names());
  const CourantStructure C = quadraticLieBundle(ch, su2Data(), f);
  const Point o{0.0, 0.0, 0.0};
  const double n0 = bracketOperatorNorm(C, o, 64);
  SamplePlan plan(ch, 37, 16);
  for (const auto& q : plan.points()) {
    const double ratio = bracketOperatorNorm(C, q, 64) / n0;
    CHECK(ratio == doctest::Approx(std::abs(f.value(q) / f.value(o))).epsilon(0.01));
  }
}

TEST_CASE("property: operator norm is invariant under orthogonal frame changes") {
  std::mt19937_64 gen(43);
  std::normal_distribution<double> N(0.0, 1.0);
  for (int r : {2, 3, 4}) {
    std::vector<double> g(u(r * r * r));
    for (auto& x : g) x = N(gen);
    Eigen::MatrixXd M(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) M(i, j) = N(gen);
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(M).householderQ();
    // New frame e'_a = Q_ai e_i, so Gamma'_ab^c = Q_ai Q_bj Gamma_ij^k Q_ck.
    std::vector<double> h(u(r * r * r), 0.0);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b)
        for (int c = 0; c < r; ++c) {
          double s = 0.0;
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j)
              for (int k = 0; k < r; ++k) s += Q(a, i) * Q(b, j) * g[u((i * r + j) * r + k)] * Q(c, k);
          h[u((a * r + b) * r + c)] = s;
        }
    const double n1 = bilinearNorm(g, identity(r), r, 64);
    const double n2 = bilinearNorm(h, identity(r), r, 64);
    CHECK(n2 == doctest::Approx(n1).epsilon(0.01));
  }
}

TEST_CASE("property: operator norm is nondecreasing in the sample count") {
  std::mt19937_64 gen(47);
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> g(64);
  for (auto& x : g) x = N(gen);
  double prev = 0.0;
  for (int s = 1; s <= 32; ++s) {
    const double v = bilinearNorm(g, identity(4), 4, s);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("property: operator norm bounds every sampled value") {
  std::mt19937_64 gen(53);
  std::normal_distribution<double> N(0.0, 1.0);
  const int r = 3;
  std::vector<double> g(27);
  for (auto& x : g) x = N(gen);
  const double norm = bilinearNorm(g, identity(r), r, 64);
  for (int t = 0; t < 2000; ++t) {
    Eigen::Vector3d a(N(gen), N(gen), N(gen)), b(N(gen), N(gen), N(gen));
    a.normalize();
    b.normalize();
    Eigen::Vector3d w = Eigen::Vector3d::Zero();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int k = 0; k < r; ++k) w(k) += a(i) * b(j) * g[u((i * r + j) * r + k)];
    CHECK(w.norm() <= norm * (1.0 + 1e-12));
  }
}
