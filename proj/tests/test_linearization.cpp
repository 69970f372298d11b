#include <cmath>
#include <random>

#include "doctest.h"
#include "lodaykit/errors.hpp"
#include "lodaykit/linearization.hpp"
#include "lodaykit/zoo.hpp"

using namespace lk;

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

const Chart kQuarter({"x1", "x2"}, {{-0.25, 0.25}, {-0.25, 0.25}});

CourantStructure bundle(const Chart& chart, const std::string& f) {
  return quadraticLieBundle(chart, su2Data(), ScalarField::parse(f, chart.names()));
}

LodayStructure linearSo3() {
  const ScalarField x1 = ScalarField::coordinate(0), x2 = ScalarField::coordinate(1), x3 = ScalarField::coordinate(2);
  const ScalarField z = ScalarField::constant(0.0);
  return poissonCotangent(Chart::cube(3), {z, x3, -x2, -x3, z, x1, x2, -x1, z});
}

double fieldGap(const std::vector<ScalarField>& a, const std::vector<ScalarField>& b, const SamplePlan& plan) {
  double worst = 0.0;
  for (const auto& q : plan.points())
    for (std::size_t t = 0; t < a.size(); ++t) worst = std::max(worst, std::abs(a[t].value(q) - b[t].value(q)));
  return worst;
}

double structureGap(const LodayStructure& A, const LodayStructure& B, const SamplePlan& plan) {
  return std::max({fieldGap(A.gammaFields(), B.gammaFields(), plan), fieldGap(A.thetaFields(), B.thetaFields(), plan),
                   fieldGap(A.lambdaFields(), B.lambdaFields(), plan)});
}

double modelGap(const LinearModel& a, const LinearModel& b) {
  double worst = 0.0;
  for (std::size_t t = 0; t < a.c.size(); ++t) worst = std::max(worst, std::abs(a.c[t] - b.c[t]));
  for (std::size_t t = 0; t < a.A.size(); ++t) worst = std::max(worst, std::abs(a.A[t] - b.A[t]));
  for (std::size_t t = 0; t < a.L.size(); ++t) worst = std::max(worst, std::abs(a.L[t] - b.L[t]));
  return worst;
}

LinearModel su2Model(const std::vector<double>& A, int n) {
  LinearModel L;
  L.n = n;
  L.r = 3;
  L.basepoint.assign(u(n), 0.0);
  L.chart = Chart::cube(n);
  L.c = su2Data().c;
  L.A = A;
  L.L.assign(u(n * 27 * n), 0.0);
  return L;
}

}  // namespace

TEST_CASE("singular points") {
  const Point o{0.0, 0.0, 0.0};
  CHECK(isSingular(bundle(Chart::cube(3), "1 + x1").base(), Point{0.3, -0.2, 0.1}).allPass());
  const CheckReport s = isSingular(standardCourant(2).base(), Point{0.1, 0.2});
  CHECK_FALSE(s.allPass());
  CHECK(s.at("anchor").maxResidual == 1.0);
  CHECK(isSingular(linearSo3(), o).allPass());
  CHECK_FALSE(isSingular(linearSo3(), Point{0.1, 0.0, 0.0}).allPass());
  CHECK_THROWS_AS(linearize(standardCourant(2).base(), Point{0.0, 0.0}), PreconditionError);
  CHECK_THROWS_AS(isSingular(linearSo3(), Point{2.0, 0.0, 0.0}), DomainError);
}

TEST_CASE("linearization of the quadratic Lie bundle is the constant bracket") {
  const CourantStructure C = bundle(kQuarter, "1 + x1 + x2^2");
  const LinearModel L = linearize(C.base(), Point{0.0, 0.0});
  const LieData d = su2Data();
  for (std::size_t t = 0; t < L.c.size(); ++t) CHECK(std::abs(L.c[t] - d.c[t]) <= 1e-12);
  for (double a : L.A) CHECK(a == 0.0);
  for (double l : L.L) CHECK(l == 0.0);
  // Field-level equality with the bundle for the constant f(0).
  const LodayStructure M = linearModelAlgebroid(L);
  SamplePlan plan(kQuarter, 3, 16);
  CHECK(structureGap(M, bundle(kQuarter, "1").base(), plan) <= 1e-12);
}

TEST_CASE("linear Poisson structure linearizes to itself") {
  const LodayStructure A = linearSo3();
  const Point o{0.0, 0.0, 0.0};
  const LinearModel L = linearize(A, o);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const double eps = su2Data().C(i, j, k);
        CHECK(L.C(i, j, k) == eps);
        // theta_ij = sum_k eps_ijk x_k, so (A_i)_jk = eps_ijk.
        CHECK(L.Anchor(i, j, k) == eps);
      }
  SamplePlan plan(A.chart(), 5, 16);
  CHECK(structureGap(linearModelAlgebroid(L), A, plan) <= 1e-12);
  CHECK(modelGap(linearize(linearModelAlgebroid(L), o), L) == 0.0);
  CHECK(leibnizCheck(L).allPass());
}

TEST_CASE("abelian data give the zero structure") {
  const LodayStructure Z(Chart::cube(2), 2);
  const LodayStructure M = linearModelAlgebroid(linearize(Z, Point{0.1, 0.1}));
  const Point q{0.3, 0.4};
  for (const auto* v : {&M.gammaFields(), &M.thetaFields(), &M.lambdaFields()})
    for (const auto& f : *v) CHECK(f.value(q) == 0.0);
}

TEST_CASE("round trip through the linear model away from the origin") {
  // Build a structure singular at p with nonzero co-anchor derivatives.
  const Point p{0.2, -0.3};
  LodayStructure A(Chart::cube(2), 2);
  const ScalarField x = ScalarField::coordinate(0) - ScalarField::constant(0.2);
  const ScalarField y = ScalarField::coordinate(1) + ScalarField::constant(0.3);
  A.setGamma(0, 1, 0, 2.0 + x * y);
  A.setTheta(0, 1, 3.0 * x + x * x);
  A.setTheta(1, 0, y - 0.5 * x);
  A.setLambda(1, 0, 1, 1, x * y + 4.0 * y);
  const LinearModel L = linearize(A, p);
  CHECK(L.C(0, 1, 0) == doctest::Approx(2.0));
  CHECK(L.Anchor(0, 1, 0) == doctest::Approx(3.0));
  CHECK(L.Anchor(1, 0, 1) == doctest::Approx(1.0));
  CHECK(L.Co(1, 0, 1, 1, 1) == doctest::Approx(4.0));
  CHECK(modelGap(linearize(linearModelAlgebroid(L), p), L) <= 1e-15);
}

TEST_CASE("zoom family") {
  SUBCASE("t = 1 is the structure itself") {
    const CourantStructure C = bundle(Chart::cube(2), "1 + x1 + x2^2");
    SamplePlan plan(C.chart(), 7, 16);
    CHECK(structureGap(zoomStructure(C.base(), Point{0.0, 0.0}, 1.0), C.base(), plan) == 0.0);
  }
  SUBCASE("linear structures are fixed") {
    const LodayStructure A = linearSo3();
    SamplePlan plan(A.chart(), 8, 16);
    for (double t : {1.0, 0.5, 0.25, 0.0}) CHECK(structureGap(zoomStructure(A, Point{0, 0, 0}, t), A, plan) <= 1e-12);
  }
  SUBCASE("quadratic Lie bundle converges linearly") {
    const CourantStructure C = bundle(kQuarter, "1 + x1");
    const Point o{0.0, 0.0};
    const LodayStructure Z0 = zoomStructure(C.base(), o, 0.0);
    SamplePlan plan(kQuarter, 9, 64);
    for (double t : {1.0, 0.5, 0.25}) {
      const double gap = fieldGap(zoomStructure(C.base(), o, t).gammaFields(), Z0.gammaFields(), plan);
      // Gamma_t - Gamma_0 = t x1 eps, so the max over the plan is t max|x1|.
      double mx = 0.0;
      for (const auto& q : plan.points()) mx = std::max(mx, std::abs(q[0]));
      CHECK(gap == doctest::Approx(t * mx).epsilon(1e-12));
      CHECK(gap <= kQuarter.radius(o) * t);
    }
  }
  SUBCASE("the linear part is zoom invariant") {
    const LodayStructure A = centeredModel();
    LodayStructure B = A;
    B.setGamma(0, 1, 2, ScalarField::parse("1 + x1*x2 + sin(x3)", A.chart().names()));
    B.setTheta(3, 0, ScalarField::parse("x1 + x2^2 - x3*x1", A.chart().names()));
    const Point o{0.0, 0.0, 0.0};
    const LinearModel L = linearize(B, o);
    for (double t : {1.0, 0.5, 0.25, 0.0}) CHECK(modelGap(linearize(zoomStructure(B, o, t), o), L) <= 1e-12);
  }
  SUBCASE("zooming keeps Loday structures Loday") {
    const LodayStructure A = centeredModel();
    SamplePlan plan(A.chart(), 10, 8);
    const Point o{0.0, 0.0, 0.0};
    for (double t : {1.0, 0.5, 0.25, 0.0}) CHECK(checkStructure(zoomStructure(A, o, t), plan).at("jacobi").pass);
    const CourantStructure C = bundle(Chart::cube(2), "1 + x1 + x2^2");
    for (double t : {1.0, 0.5, 0.25, 0.0})
      CHECK(checkStructure(zoomStructure(C.base(), Point{0.0, 0.0}, t), SamplePlan(C.chart(), 10, 8)).at("jacobi").pass);
  }
  SUBCASE("bad parameters") {
    const LodayStructure A = linearSo3();
    CHECK_THROWS_AS(zoomStructure(A, Point{0, 0, 0}, 1.5), PreconditionError);
    CHECK_THROWS_AS(zoomStructure(A, Point{0, 0, 0}, -0.1), PreconditionError);
    CHECK_THROWS_AS(zoomStructure(standardCourant(1).base(), Point{0.0}, 0.5), PreconditionError);
  }
}

TEST_CASE("zoom derivative") {
  SUBCASE("linear structure") {
    const LodayStructure A = linearSo3();
    CHECK(zoomDerivativeCheck(A, Point{0, 0, 0}, 0.5, SamplePlan(A.chart(), 11, 16)) <= 1e-9);
  }
  SUBCASE("quadratic Lie bundle") {
    const CourantStructure C = bundle(kQuarter, "1 + x1");
    CHECK(zoomDerivativeCheck(C.base(), Point{0.0, 0.0}, 0.5, SamplePlan(kQuarter, 12, 16), 1e-3) <= 1e-6);
  }
  SUBCASE("nonlinear anchor and co-anchor") {
    LodayStructure A = centeredModel();
    A.setTheta(3, 0, ScalarField::parse("x1 + x2^2 - x3*x1 + x2^3", A.chart().names()));
    A.setLambda(0, 1, 2, 3, ScalarField::parse("x1*x2 + sin(x3)", A.chart().names()));
    A.setGamma(0, 1, 2, ScalarField::parse("exp(x1) + x2*x3", A.chart().names()));
    CHECK(zoomDerivativeCheck(A, Point{0, 0, 0}, 0.5, SamplePlan(A.chart(), 13, 16), 1e-3) <= 1e-5);
    // A wrong velocity would be caught: the central difference error scales like dt^2.
    const double coarse = zoomDerivativeCheck(A, Point{0, 0, 0}, 0.5, SamplePlan(A.chart(), 13, 16), 1e-1);
    const double fine = zoomDerivativeCheck(A, Point{0, 0, 0}, 0.5, SamplePlan(A.chart(), 13, 16), 5e-2);
    CHECK(coarse / fine == doctest::Approx(4.0).epsilon(0.1));
  }
  SUBCASE("t = 0 is rejected") {
    CHECK_THROWS_AS(zoomDerivativeCheck(linearSo3(), Point{0, 0, 0}, 0.0, SamplePlan(Chart::cube(3), 1, 2)),
                    PreconditionError);
  }
}

TEST_CASE("Euler-like checks") {
  const LodayStructure A = centeredModel();
  const Point o{0.0, 0.0, 0.0};
  const LinearModel L = linearize(A, o);
  const std::vector<double> v0{0.0, 0.0, 0.0, 1.0};
  CHECK(eulerLikeCheck(L, v0).allPass());
  const CheckReport zero = eulerLikeCheck(L, std::vector<double>(4, 0.0));
  CHECK_FALSE(zero.at("anchor").pass);
  CHECK(zero.at("anchor").maxResidual == 1.0);
  CHECK(eulerLikeCheck(A, o, Section::frame(4, 3)).allPass());
  CHECK_FALSE(eulerLikeCheck(A, o, Section::frame(4, 0)).allPass());

  Derivation D = Derivation::zero(4, 3);
  for (int k = 0; k < 3; ++k) D.symbol.comps[u(k)] = ScalarField::coordinate(k);
  CHECK(eulerLikeCheck(A, o, D).allPass());
  D.matrix[0] = ScalarField::constant(0.5);
  CHECK_FALSE(eulerLikeCheck(A, o, D).at("matrix").pass);
  CHECK_THROWS_AS(eulerLikeCheck(L, std::vector<double>(3, 0.0)), PreconditionError);
}

TEST_CASE("Euler candidates") {
  SUBCASE("centered model") {
    const EulerCandidate e = findEulerCandidate(linearize(centeredModel(), Point{0, 0, 0}));
    REQUIRE(e.found);
    CHECK(e.residual <= 1e-12);
    const std::vector<double> v0{0.0, 0.0, 0.0, 1.0};
    for (int i = 0; i < 4; ++i) CHECK(std::abs(e.v[u(i)] - v0[u(i)]) <= 1e-12);
  }
  SUBCASE("su(2) without an extra generator") {
    const EulerCandidate e = findEulerCandidate(su2Model(std::vector<double>(27, 0.0), 3));
    CHECK_FALSE(e.found);
    CHECK(e.residual >= 1.0);
  }
  SUBCASE("diagonal units") {
    LinearModel L;
    L.n = L.r = 3;
    L.basepoint.assign(3, 0.0);
    L.c.assign(27, 0.0);
    L.A.assign(27, 0.0);
    L.L.assign(3 * 27 * 3, 0.0);
    for (int i = 0; i < 3; ++i) L.A[u((i * 3 + i) * 3 + i)] = 1.0;
    const EulerCandidate e = findEulerCandidate(L);
    REQUIRE(e.found);
    for (double x : e.v) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("property: a found candidate passes the Euler-like check") {
    const LinearModel L = linearize(centeredModel(), Point{0, 0, 0});
    const EulerCandidate e = findEulerCandidate(L);
    CHECK(eulerLikeCheck(L, e.v, std::max(e.residual, 1e-15) * (1.0 + 1e-12)).allPass());
  }
}

TEST_CASE("linearization residual") {
  SUBCASE("centered model with the inner derivation of v0") {
    const LodayStructure A = centeredModel();
    const Derivation D = sectionDerivation(A, Section::frame(4, 3));
    SamplePlan plan(A.chart(), 17, 16);
    CHECK(linearizationResidual(A, D, plan) <= 1e-9);
    const LodayStructure M = linearModelAlgebroid(linearize(A, Point{0, 0, 0}));
    CHECK(linearizationResidual(M, sectionDerivation(M, Section::frame(4, 3)), plan) <= 1e-9);
  }
  SUBCASE("zero derivation") {
    const CourantStructure C = bundle(Chart::cube(2), "1 + x1");
    CHECK(linearizationResidual(C.base(), Derivation::zero(3, 2), SamplePlan(C.chart(), 18, 8)) == 0.0);
  }
  SUBCASE("Euler symbol on a non-constant bundle") {
    const CourantStructure C = bundle(Chart::cube(2), "1 + x1");
    Derivation D = Derivation::zero(3, 2);
    for (int k = 0; k < 2; ++k) D.symbol.comps[u(k)] = ScalarField::coordinate(k);
    SamplePlan plan(C.chart(), 19, 16);
    double expect = 0.0;
    for (const auto& q : plan.points()) expect = std::max(expect, std::abs(q[0]));
    const CheckReport rep = linearizationReport(C, D, plan);
    CHECK(rep.at("bracket").maxResidual == doctest::Approx(expect).epsilon(1e-12));
    CHECK(rep.at("anchor").maxResidual == 0.0);
    CHECK(rep.at("isometry").maxResidual == 0.0);
    CHECK(linearizationResidual(C.base(), D, plan) > 0.0);
  }
  SUBCASE("isometry entry sees a non-skew matrix") {
    const CourantStructure C = bundle(Chart::cube(2), "1");
    Derivation D = Derivation::zero(3, 2);
    D.matrix[0] = ScalarField::constant(1.0);
    const CheckReport rep = linearizationReport(C, D, SamplePlan(C.chart(), 20, 4));
    CHECK(rep.at("isometry").maxResidual == 2.0);
  }
}

TEST_CASE("Leibniz check on linear models") {
  const LieData d = su2Data();
  SUBCASE("su(2) acting on itself") {
    // e_i -> linear vector field x -> A_i x with A_i = -ad(e_i), (ad_i)_{kj} = c_ij^k.
    std::vector<double> A(27, 0.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) A[u((i * 3 + k) * 3 + j)] = -d.C(i, j, k);
    CHECK(leibnizCheck(su2Model(A, 3)).allPass());
  }
  SUBCASE("random anchors are not a representation") {
    std::mt19937_64 gen(3);
    std::vector<double> A(27);
    for (auto& x : A) x = uniformSigned(gen);
    const CheckReport rep = leibnizCheck(su2Model(A, 3));
    CHECK(rep.at("leibniz").pass);
    CHECK_FALSE(rep.at("representation").pass);
  }
  SUBCASE("zoo structures at singular points") {
    CHECK(leibnizCheck(linearize(centeredModel(), Point{0, 0, 0})).allPass());
    CHECK(leibnizCheck(linearize(linearSo3(), Point{0, 0, 0})).allPass());
    CHECK(leibnizCheck(linearize(bundle(Chart::cube(3), "1 + x1 + x2^2").base(), Point{0.1, 0.2, 0.3})).allPass());
  }
}
