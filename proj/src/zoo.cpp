#include "lodaykit/zoo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lodaykit/errors.hpp"

namespace lk {

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

const std::vector<std::string> kCourantChecks{"pairing", "symm", "coanchor", "jacobi", "a", "b", "c", "remark-rho-S",
                                              "remark-rho-lambda"};
const std::vector<std::string> kLodayChecks{"jacobi", "a", "b", "c", "remark-rho-S", "remark-rho-lambda"};

std::map<std::string, bool> allPass(const std::vector<std::string>& names) {
  std::map<std::string, bool> m;
  for (const auto& n : names) m[n] = true;
  return m;
}

std::vector<std::string> splitName(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(item);
  return parts;
}

int parseInt(const std::string& s, const std::string& entry) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw PreconditionError("zoo entry '" + entry + "': expected an integer, got '" + s + "'");
  }
}

double levi(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0.0;
  return ((j - i + 3) % 3 == 1) ? 1.0 : -1.0;
}

}  // namespace

CourantStructure standardCourant(int n) {
  if (n < 1) throw PreconditionError("standard Courant: n must be >= 1");
  return standardCourant(Chart::cube(n));
}

CourantStructure standardCourant(const Chart& chart) {
  const int n = chart.dim(), r = 2 * n;
  LodayStructure A(chart, r);
  const ScalarField one = ScalarField::constant(1.0);
  for (int i = 0; i < n; ++i) A.setTheta(i, i, one);
  std::vector<ScalarField> g(u(r * r));
  for (int i = 0; i < n; ++i) {
    g[u(i * r + n + i)] = one;
    g[u((n + i) * r + i)] = one;
  }
  // lambda(dx_m, e_i, e_j) = g_ij rho*(dx_m) = g_ij e_{n+m}
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < n; ++i) {
      A.setLambda(m, i, n + i, n + m, one);
      A.setLambda(m, n + i, i, n + m, one);
    }
  return CourantStructure(std::move(A), std::move(g));
}

CourantStructure twistedCourant(int n, const ThreeForm& eta) { return twistedCourant(Chart::cube(n), eta); }

CourantStructure twistedCourant(const Chart& chart, const ThreeForm& eta) {
  const int n = chart.dim();
  if (eta.dim() != n) throw PreconditionError("twisted Courant: three-form dimension does not match chart");
  CourantStructure C = standardCourant(chart);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int m = 0; m < n; ++m) {
        ScalarField c = eta.component(i, j, m);
        if (!c.isZero()) C.base().setGamma(i, j, n + m, c);
      }
  return C;
}

LodayStructure poissonCotangent(const Chart& chart, const std::vector<ScalarField>& pi) {
  const int n = chart.dim();
  if (pi.size() != u(n * n)) throw PreconditionError("Poisson cotangent: bivector must be n x n");
  SamplePlan probe(chart, 1, 8);
  for (const auto& q : probe.points())
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double a = pi[u(i * n + j)].value(q), b = pi[u(j * n + i)].value(q);
        if (std::abs(a + b) > 1e-12 * (1.0 + std::abs(a)))
          throw PreconditionError("Poisson cotangent: bivector is not antisymmetric at " + formatPoint(q));
      }
  LodayStructure A(chart, n);
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < n; ++m) A.setTheta(i, m, pi[u(i * n + m)]);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const ScalarField& p = pi[u(i * n + j)];
        ScalarField d = derivativeExpression(p, k).value_or(p.partial(k));
        if (!d.isZero()) A.setGamma(i, j, k, d);
      }
  return A;
}

LieData su2Data() {
  LieData d;
  d.rank = 3;
  d.c.assign(27, 0.0);
  d.g0.assign(9, 0.0);
  for (int i = 0; i < 3; ++i) {
    d.g0[u(i * 3 + i)] = 1.0;
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) d.c[u((i * 3 + j) * 3 + k)] = levi(i, j, k);
  }
  return d;
}

void requireQuadratic(const LieData& d, double tol) {
  const int r = d.rank;
  if (d.c.size() != u(r * r * r) || d.g0.size() != u(r * r)) throw PreconditionError("Lie data: shape mismatch");
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      if (std::abs(d.g0[u(i * r + j)] - d.g0[u(j * r + i)]) > tol) throw PreconditionError("Lie data: metric not symmetric");
      for (int k = 0; k < r; ++k)
        if (std::abs(d.C(i, j, k) + d.C(j, i, k)) > tol) throw PreconditionError("Lie data: constants not antisymmetric");
    }
  if (std::abs(determinant(d.g0, r)) < kDetThreshold) throw PreconditionError("Lie data: metric is degenerate");
  auto T = [&](int i, int j, int k) {
    double s = 0.0;
    for (int m = 0; m < r; ++m) s += d.C(i, j, m) * d.g0[u(m * r + k)];
    return s;
  };
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        if (std::abs(T(i, j, k) + T(i, k, j)) > tol)
          throw PreconditionError("Lie data: metric is not ad-invariant for the structure constants");
}

CourantStructure quadraticLieBundle(const Chart& chart, const LieData& d, const ScalarField& f) {
  requireQuadratic(d);
  const int r = d.rank;
  LodayStructure A(chart, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        if (d.C(i, j, k) != 0.0) A.setGamma(i, j, k, d.C(i, j, k) * f);
  std::vector<ScalarField> g(u(r * r));
  for (std::size_t t = 0; t < g.size(); ++t) g[t] = ScalarField::constant(d.g0[t]);
  return CourantStructure(std::move(A), std::move(g));
}

LodayStructure centeredModel() {
  LodayStructure A(Chart::cube(3), 4);
  const LieData d = su2Data();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        if (d.C(i, j, k) != 0.0) A.setGamma(i, j, k, ScalarField::constant(d.C(i, j, k)));
  for (int m = 0; m < 3; ++m) A.setTheta(3, m, ScalarField::coordinate(m));
  return A;
}

DorfmanPair oracleDorfman(const VectorField& X, const OneForm& alpha, const VectorField& Y, const OneForm& beta,
                          const ThreeForm* eta) {
  const int n = X.dim();
  DorfmanPair out{vfLieBracket(X, Y), lieDerivativeOneForm(X, beta)};
  const OneForm iy = iotaD(Y, alpha);
  for (int m = 0; m < n; ++m) out.alpha.comps[u(m)] = out.alpha[m] - iy[m];
  if (eta) {
    const OneForm tw = contract2(*eta, X, Y);
    for (int m = 0; m < n; ++m) out.alpha.comps[u(m)] = out.alpha[m] + tw[m];
  }
  return out;
}

Section toSection(const VectorField& X, const OneForm& alpha) {
  Section s;
  s.comps = X.comps;
  s.comps.insert(s.comps.end(), alpha.comps.begin(), alpha.comps.end());
  return s;
}

DorfmanPair fromSection(const Section& s) {
  const std::size_t n = s.comps.size() / 2;
  DorfmanPair p;
  p.X.comps.assign(s.comps.begin(), s.comps.begin() + static_cast<std::ptrdiff_t>(n));
  p.alpha.comps.assign(s.comps.begin() + static_cast<std::ptrdiff_t>(n), s.comps.end());
  return p;
}

std::vector<std::string> zooCatalog() {
  return {"standard-courant,1",
          "standard-courant,2",
          "standard-courant,3",
          "twisted-courant,3,closed",
          "twisted-courant,4,nonclosed",
          "twisted-courant,3,zero",
          "poisson-cotangent,linear-so3",
          "poisson-cotangent,constant",
          "poisson-cotangent,non-poisson",
          "quadratic-lie-bundle,3,1",
          "quadratic-lie-bundle,3,1 + x1 + x2^2",
          "centered-model",
          "product-standard,1,1",
          "product-standard,1,2"};
}

ZooEntry zooEntry(const std::string& name) {
  const auto parts = splitName(name);
  if (parts.empty()) throw PreconditionError("empty zoo entry name");
  const std::string& fam = parts[0];
  auto need = [&](std::size_t k) {
    if (parts.size() != k) throw PreconditionError("zoo entry '" + name + "': wrong number of parameters");
  };
  ZooEntry e;
  e.name = name;
  if (fam == "standard-courant") {
    need(2);
    const int n = parseInt(parts[1], name);
    e.courant = standardCourant(n);
    e.description = "standard Courant algebroid on [-1,1]^" + parts[1];
    e.expected = allPass(kCourantChecks);
    FrameSplit s;
    for (int i = 0; i < n; ++i) {
      s.first.push_back(i);
      s.second.push_back(n + i);
    }
    e.split = s;
    e.expectedClass = "matching";
  } else if (fam == "twisted-courant") {
    need(3);
    const int n = parseInt(parts[1], name);
    ThreeForm eta(n);
    e.expected = allPass(kCourantChecks);
    if (parts[2] == "closed") {
      if (n < 3) throw PreconditionError("zoo entry '" + name + "': needs n >= 3");
      eta.set(0, 1, 2, ScalarField::constant(1.0));
      e.description = "twisted by the closed form dx1^dx2^dx3";
    } else if (parts[2] == "nonclosed") {
      if (n < 4) throw PreconditionError("zoo entry '" + name + "': needs n >= 4");
      eta.set(0, 1, 2, ScalarField::coordinate(3));
      e.description = "twisted by x4 dx1^dx2^dx3, which is not closed";
      e.expected["jacobi"] = false;
    } else if (parts[2] == "zero") {
      e.description = "twisted by the zero form";
    } else {
      throw PreconditionError("zoo entry '" + name + "': twist must be closed, nonclosed or zero");
    }
    if (n < 1) throw PreconditionError("zoo entry '" + name + "': n must be >= 1");
    e.courant = twistedCourant(n, eta);
  } else if (fam == "poisson-cotangent") {
    need(2);
    const Chart chart = Chart::cube(3);
    std::vector<ScalarField> pi(9);
    auto set = [&](int i, int j, const ScalarField& f) {
      pi[u(i * 3 + j)] = f;
      pi[u(j * 3 + i)] = -f;
    };
    e.expected = allPass(kLodayChecks);
    const auto x = [](int i) { return ScalarField::coordinate(i); };
    if (parts[1] == "linear-so3") {
      set(0, 1, x(2));
      set(0, 2, -x(1));
      set(1, 2, x(0));
      e.description = "linear Poisson structure pi^{ij} = eps_ijk x_k";
    } else if (parts[1] == "constant") {
      set(0, 1, ScalarField::constant(1.0));
      set(0, 2, ScalarField::constant(0.5));
      set(1, 2, ScalarField::constant(-2.0));
      e.description = "constant bivector";
    } else if (parts[1] == "non-poisson") {
      set(0, 1, x(2));
      set(1, 2, x(1));
      e.description = "bivector pi^12 = x3, pi^23 = x2, which violates the Jacobi identity";
      e.expected["jacobi"] = false;
      e.expected["a"] = false;
    } else {
      throw PreconditionError("zoo entry '" + name + "': bivector must be linear-so3, constant or non-poisson");
    }
    e.loday = poissonCotangent(chart, pi);
  } else if (fam == "quadratic-lie-bundle") {
    if (parts.size() < 3) throw PreconditionError("zoo entry '" + name + "': expected quadratic-lie-bundle,DIM,EXPR");
    const int n = parseInt(parts[1], name);
    std::string expr = parts[2];
    for (std::size_t k = 3; k < parts.size(); ++k) expr += "," + parts[k];
    const Chart chart = Chart::cube(n);
    e.courant = quadraticLieBundle(chart, su2Data(), ScalarField::parse(expr, chart.names()));
    e.description = "su(2) bundle with bracket scaled by " + expr + " (metric = identity, positive definite)";
    e.expected = allPass(kCourantChecks);
  } else if (fam == "centered-model") {
    need(1);
    e.loday = centeredModel();
    e.description = "su(2) plus a central generator acting by the Euler field";
    e.expected = allPass(kLodayChecks);
  } else if (fam == "product-standard") {
    need(3);
    const int n1 = parseInt(parts[1], name), n2 = parseInt(parts[2], name);
    if (n1 < 1 || n2 < 1) throw PreconditionError("zoo entry '" + name + "': dimensions must be >= 1");
    e.courant = directProduct(standardCourant(Chart::cube(n1, -1.0, 1.0, "x")), standardCourant(Chart::cube(n2, -1.0, 1.0, "y")));
    e.description = "direct product of standard Courant algebroids";
    e.expected = allPass(kCourantChecks);
    e.split = productSplit(n1, 2 * n1, n2, 2 * n2);
    e.expectedClass = "direct";
  } else {
    throw PreconditionError("unknown zoo entry '" + name + "'");
  }
  if (e.courant) e.loday = e.courant->base();
  return e;
}

CheckReport runChecks(const ZooEntry& e, const SamplePlan& plan, const CheckOptions& opt) {
  return e.courant ? checkCourant(*e.courant, plan, opt) : checkStructure(e.loday, plan, opt);
}

}  // namespace lk
