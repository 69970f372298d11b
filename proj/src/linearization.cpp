#include "lodaykit/linearization.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "lodaykit/errors.hpp"

namespace lk {

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

Point toPoint(std::span<const double> p) { return Point(p.begin(), p.end()); }

void requireBasepoint(const LodayStructure& A, std::span<const double> p) {
  if (static_cast<int>(p.size()) != A.dim()) throw PreconditionError("basepoint dimension does not match the chart");
  A.chart().requireInside(p);
}

void requireSingular(const LodayStructure& A, std::span<const double> p) {
  const CheckReport rep = isSingular(A, p);
  if (!rep.allPass())
    throw PreconditionError("point " + formatPoint(toPoint(p)) + " is not singular (|theta| = " +
                            std::to_string(rep.at("anchor").maxResidual) +
                            ", |lambda| = " + std::to_string(rep.at("coanchor").maxResidual) + ")");
}

CheckEntry single(const std::string& name, double residual, double tol, std::span<const double> p) {
  ResidualTracker t(name, tol);
  t.observe(residual, p);
  return t.entry();
}

// x -> p + t (x - p), coordinatewise.
std::vector<ScalarField> zoomMap(std::span<const double> p, double t) {
  std::vector<ScalarField> s(p.size());
  for (std::size_t m = 0; m < p.size(); ++m)
    s[m] = ScalarField::constant((1.0 - t) * p[m]) + t * ScalarField::coordinate(static_cast<int>(m));
  return s;
}

double fieldValue(const ScalarField& f, std::span<const double> q) { return f.isZero() ? 0.0 : f.value(q); }

}  // namespace

CheckReport isSingular(const LodayStructure& A, std::span<const double> p, double tolerance) {
  requireBasepoint(A, p);
  double th = 0.0, la = 0.0;
  for (const auto& f : A.thetaFields()) th = std::max(th, std::abs(fieldValue(f, p)));
  for (const auto& f : A.lambdaFields()) la = std::max(la, std::abs(fieldValue(f, p)));
  CheckReport rep;
  rep.add(single("anchor", th, tolerance, p));
  rep.add(single("coanchor", la, tolerance, p));
  return rep;
}

LinearModel linearize(const LodayStructure& A, std::span<const double> p) {
  requireSingular(A, p);
  const int n = A.dim(), r = A.rank();
  LinearModel L;
  L.n = n;
  L.r = r;
  L.basepoint = toPoint(p);
  L.chart = A.chart();
  L.c.assign(u(r * r * r), 0.0);
  L.A.assign(u(r * n * n), 0.0);
  L.L.assign(u(n * r * r * r * n), 0.0);
  for (std::size_t t = 0; t < L.c.size(); ++t)
    if (!A.gammaFields()[t].isZero()) L.c[t] = A.gammaFields()[t].value(p);
  for (std::size_t t = 0; t < A.thetaFields().size(); ++t) {
    if (A.thetaFields()[t].isZero()) continue;
    const EvalResult e = evalWithPartials(A.thetaFields()[t], p);
    for (int k = 0; k < n; ++k) L.A[t * u(n) + u(k)] = e.gradient[u(k)];
  }
  for (std::size_t t = 0; t < A.lambdaFields().size(); ++t) {
    if (A.lambdaFields()[t].isZero()) continue;
    const EvalResult e = evalWithPartials(A.lambdaFields()[t], p);
    for (int s = 0; s < n; ++s) L.L[t * u(n) + u(s)] = e.gradient[u(s)];
  }
  return L;
}

LodayStructure linearModelAlgebroid(const LinearModel& L) {
  const int n = L.n, r = L.r;
  LodayStructure A(L.chart.dim() == n ? L.chart : Chart::cube(n), r);
  std::vector<ScalarField> dx(u(n));
  for (int k = 0; k < n; ++k)
    dx[u(k)] = ScalarField::coordinate(k) - ScalarField::constant(L.basepoint.empty() ? 0.0 : L.basepoint[u(k)]);
  auto linear = [&](const double* coef) {
    ScalarField f;
    bool any = false;
    for (int k = 0; k < n; ++k) {
      if (coef[k] == 0.0) continue;
      f = any ? f + coef[k] * dx[u(k)] : coef[k] * dx[u(k)];
      any = true;
    }
    return f;
  };
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        if (L.C(i, j, k) != 0.0) A.setGamma(i, j, k, ScalarField::constant(L.C(i, j, k)));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < n; ++j) A.setTheta(i, j, linear(&L.A[u((i * n + j) * n)]));
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int l = 0; l < r; ++l) A.setLambda(m, i, j, l, linear(&L.L[u((((m * r + i) * r + j) * r + l) * n)]));
  return A;
}

LodayStructure zoomStructure(const LodayStructure& A, std::span<const double> p, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("zoom parameter must lie in [0, 1]");
  requireSingular(A, p);
  if (t == 0.0) return linearModelAlgebroid(linearize(A, p));
  const int n = A.dim(), r = A.rank();
  const std::vector<ScalarField> subs = zoomMap(p, t);
  const double inv = 1.0 / t;
  LodayStructure Z(A.chart(), r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        if (!A.gamma(i, j, k).isZero()) Z.setGamma(i, j, k, A.gamma(i, j, k).substitute(subs));
  for (int i = 0; i < r; ++i)
    for (int m = 0; m < n; ++m)
      if (!A.theta(i, m).isZero()) Z.setTheta(i, m, inv * A.theta(i, m).substitute(subs));
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int l = 0; l < r; ++l)
          if (!A.lambda(m, i, j, l).isZero()) Z.setLambda(m, i, j, l, inv * A.lambda(m, i, j, l).substitute(subs));
  return Z;
}

double zoomDerivativeCheck(const LodayStructure& A, std::span<const double> p, double t, const SamplePlan& plan,
                           double dt) {
  if (!(dt > 0.0 && dt < t && t + dt <= 1.0))
    throw PreconditionError("zoom derivative check needs 0 < dt < t and t + dt <= 1");
  requireSingular(A, p);
  const int n = A.dim();
  const LodayStructure Zp = zoomStructure(A, p, t + dt), Zm = zoomStructure(A, p, t - dt);
  double worst = 0.0;
  for (const auto& x : plan.points()) {
    Point y(u(n));
    for (int k = 0; k < n; ++k) y[u(k)] = p[u(k)] + t * (x[u(k)] - p[u(k)]);
    // Velocity at t = 1: Gamma-dot = (y-p).dGamma, theta-dot = (y-p).dtheta - theta; pulled back with the
    // zoom scaling and divided by t.
    auto compare = [&](const std::vector<ScalarField>& orig, const std::vector<ScalarField>& plus,
                       const std::vector<ScalarField>& minus, bool scaled) {
      for (std::size_t a = 0; a < orig.size(); ++a) {
        if (orig[a].isZero()) continue;
        const double fd = (plus[a].value(x) - minus[a].value(x)) / (2.0 * dt);
        const EvalResult e = evalWithPartials(orig[a], y);
        double vel = 0.0;
        for (int k = 0; k < n; ++k) vel += (y[u(k)] - p[u(k)]) * e.gradient[u(k)];
        if (scaled) vel = (vel - e.value) / t;
        worst = std::max(worst, std::abs(fd - vel / t));
      }
    };
    compare(A.gammaFields(), Zp.gammaFields(), Zm.gammaFields(), false);
    compare(A.thetaFields(), Zp.thetaFields(), Zm.thetaFields(), true);
    compare(A.lambdaFields(), Zp.lambdaFields(), Zm.lambdaFields(), true);
  }
  return worst;
}

CheckReport eulerLikeCheck(const LinearModel& L, std::span<const double> v, double tolerance) {
  const int n = L.n, r = L.r;
  if (static_cast<int>(v.size()) != r) throw PreconditionError("Euler-like check: candidate has the wrong rank");
  double br = 0.0, an = 0.0;
  for (int j = 0; j < r; ++j)
    for (int k = 0; k < r; ++k) {
      double s = 0.0;
      for (int i = 0; i < r; ++i) s += v[u(i)] * L.C(i, j, k);
      br = std::max(br, std::abs(s));
    }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = (a == b) ? -1.0 : 0.0;
      for (int i = 0; i < r; ++i) s += v[u(i)] * L.Anchor(i, a, b);
      an = std::max(an, std::abs(s));
    }
  CheckReport rep;
  rep.add(single("bracket", br, tolerance, L.basepoint));
  rep.add(single("anchor", an, tolerance, L.basepoint));
  return rep;
}

CheckReport eulerLikeCheck(const LodayStructure& A, std::span<const double> p, const Section& sigma,
                           double tolerance) {
  requireSameChart(A, sigma);
  const LinearModel L = linearize(A, p);
  std::vector<double> v(u(A.rank()));
  for (int i = 0; i < A.rank(); ++i) v[u(i)] = fieldValue(sigma[i], p);
  return eulerLikeCheck(L, v, tolerance);
}

CheckReport eulerLikeCheck(const LodayStructure& A, std::span<const double> p, const Derivation& D,
                           double tolerance) {
  const int n = A.dim(), r = A.rank();
  if (D.rank() != r || D.symbol.dim() != n) throw PreconditionError("Euler-like check: derivation shape mismatch");
  requireSingular(A, p);
  double sym = 0.0, mat = 0.0;
  for (int j = 0; j < n; ++j) {
    if (D.symbol[j].isZero()) {
      sym = std::max(sym, 1.0);
      continue;
    }
    const EvalResult e = evalWithPartials(D.symbol[j], p);
    sym = std::max(sym, std::abs(e.value));
    for (int k = 0; k < n; ++k) sym = std::max(sym, std::abs(e.gradient[u(k)] - (j == k ? 1.0 : 0.0)));
  }
  for (const auto& f : D.matrix) mat = std::max(mat, std::abs(fieldValue(f, p)));
  CheckReport rep;
  rep.add(single("symbol", sym, tolerance, p));
  rep.add(single("matrix", mat, tolerance, p));
  return rep;
}

EulerCandidate findEulerCandidate(const LinearModel& L) {
  const int n = L.n, r = L.r;
  EulerCandidate out;
  if (r == 0) {
    out.residual = n > 0 ? 1.0 : 0.0;
    out.found = out.residual <= kEulerFoundTol;
    return out;
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(r * r + n * n, r);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(r * r + n * n);
  for (int j = 0; j < r; ++j)
    for (int k = 0; k < r; ++k)
      for (int i = 0; i < r; ++i) M(j * r + k, i) = L.C(i, j, k);
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c) {
      const int row = r * r + a * n + c;
      for (int i = 0; i < r; ++i) M(row, i) = L.Anchor(i, a, c);
      b(row) = (a == c) ? 1.0 : 0.0;
    }
  const Eigen::VectorXd v = M.completeOrthogonalDecomposition().solve(b);
  out.v.assign(v.data(), v.data() + r);
  out.residual = (M * v - b).cwiseAbs().maxCoeff();
  out.found = out.residual <= kEulerFoundTol;
  return out;
}

CheckReport linearizationReport(const LodayStructure& A, const Derivation& D, const SamplePlan& plan,
                                double tolerance) {
  const int n = A.dim(), r = A.rank();
  if (D.rank() != r || D.symbol.dim() != n) throw PreconditionError("linearization residual: derivation shape mismatch");
  ResidualTracker tb("bracket", tolerance), ta("anchor", tolerance);
  std::vector<Section> frames, images;
  std::vector<VectorField> anchors, anchorImages;
  for (int j = 0; j < r; ++j) {
    frames.push_back(Section::frame(r, j));
    images.push_back(applyDerivation(D, frames.back()));
    anchors.push_back(anchorApply(A, frames.back()));
    anchorImages.push_back(anchorApply(A, images.back()));
  }
  std::vector<Section> lie;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) lie.push_back(lieDerivativeOfBracket(A, D, frames[u(i)], frames[u(j)]));
  std::vector<VectorField> comm;
  for (int j = 0; j < r; ++j) comm.push_back(vfLieBracket(D.symbol, anchors[u(j)]));
  for (const auto& q : plan.points()) {
    double b = 0.0, a = 0.0;
    for (const auto& s : lie)
      for (const auto& f : s.comps) b = std::max(b, std::abs(fieldValue(f, q)));
    for (int j = 0; j < r; ++j)
      for (int m = 0; m < n; ++m)
        a = std::max(a, std::abs(fieldValue(comm[u(j)][m], q) - fieldValue(anchorImages[u(j)][m], q)));
    tb.observe(b, q);
    ta.observe(a, q);
  }
  CheckReport rep;
  rep.add(tb.entry());
  rep.add(ta.entry());
  return rep;
}

CheckReport linearizationReport(const CourantStructure& C, const Derivation& D, const SamplePlan& plan,
                                double tolerance) {
  CheckReport rep = linearizationReport(C.base(), D, plan, tolerance);
  const int r = C.rank();
  std::vector<Section> images;
  for (int j = 0; j < r; ++j) images.push_back(applyDerivation(D, Section::frame(r, j)));
  ResidualTracker ti("isometry", tolerance);
  for (const auto& q : plan.points()) {
    double worst = 0.0;
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        double x = 0.0;
        if (!C.metric(i, j).isZero()) {
          const EvalResult e = evalWithPartials(C.metric(i, j), q);
          for (int m = 0; m < C.dim(); ++m) x += fieldValue(D.symbol[m], q) * e.gradient[u(m)];
        }
        for (int k = 0; k < r; ++k)
          x -= fieldValue(images[u(i)][k], q) * fieldValue(C.metric(k, j), q) +
               fieldValue(images[u(j)][k], q) * fieldValue(C.metric(i, k), q);
        worst = std::max(worst, std::abs(x));
      }
    ti.observe(worst, q);
  }
  rep.add(ti.entry());
  return rep;
}

double linearizationResidual(const LodayStructure& A, const Derivation& D, const SamplePlan& plan) {
  double worst = 0.0;
  for (const auto& e : linearizationReport(A, D, plan).entries) worst = std::max(worst, e.maxResidual);
  return worst;
}

CheckReport leibnizCheck(const LinearModel& L, double tolerance) {
  const int n = L.n, r = L.r;
  // c(x, y) for basis vectors, composed through the structure constants.
  auto bracketVec = [&](const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> z(u(r), 0.0);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        if (x[u(i)] == 0.0 || y[u(j)] == 0.0) continue;
        for (int k = 0; k < r; ++k) z[u(k)] += x[u(i)] * y[u(j)] * L.C(i, j, k);
      }
    return z;
  };
  auto basis = [&](int i) {
    std::vector<double> e(u(r), 0.0);
    e[u(i)] = 1.0;
    return e;
  };
  double jac = 0.0;
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      for (int c = 0; c < r; ++c) {
        const auto x = basis(a), y = basis(b), z = basis(c);
        const auto t1 = bracketVec(bracketVec(x, y), z), t2 = bracketVec(y, bracketVec(x, z)),
                   t3 = bracketVec(x, bracketVec(y, z));
        for (int k = 0; k < r; ++k) jac = std::max(jac, std::abs(t1[u(k)] + t2[u(k)] - t3[u(k)]));
      }
  double rep = 0.0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          double s = 0.0;
          for (int k = 0; k < r; ++k) s += L.C(i, j, k) * L.Anchor(k, a, b);
          for (int m = 0; m < n; ++m) s += L.Anchor(i, a, m) * L.Anchor(j, m, b) - L.Anchor(j, a, m) * L.Anchor(i, m, b);
          rep = std::max(rep, std::abs(s));
        }
  CheckReport out;
  out.add(single("leibniz", jac, tolerance, L.basepoint));
  out.add(single("representation", rep, tolerance, L.basepoint));
  return out;
}

}  // namespace lk
