#include "lodaykit/splitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>

#include "lodaykit/errors.hpp"
#include "lodaykit/product.hpp"
#include "lodaykit/zoo.hpp"

namespace lk {

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

using State = std::vector<double>;
using Rhs = std::function<State(double, const State&)>;

State axpy(const State& y, const State& k, double s) {
  State out(y);
  for (std::size_t i = 0; i < y.size(); ++i) out[i] += s * k[i];
  return out;
}

State rk4Step(const Rhs& f, double t, const State& y, double h) {
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, axpy(y, k1, 0.5 * h));
  const State k3 = f(t + 0.5 * h, axpy(y, k2, 0.5 * h));
  const State k4 = f(t + h, axpy(y, k3, h));
  State out(y);
  for (std::size_t i = 0; i < y.size(); ++i) out[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

/// Integrates y' = f(t, y), y(0) = y0, one RK4 step per lattice spacing, storing y at every t-node.
std::vector<State> marchLine(const Lattice& L, const Rhs& f, const State& y0) {
  const int N = L.nodes()[0];
  const double lo = L.box()[0].lo, h = L.spacing(0);
  if (lo > 0.0 || L.box()[0].hi < 0.0) throw PreconditionError("t = 0 must lie inside the lattice");
  const int i0 = std::clamp(static_cast<int>(std::lround(-lo / h)), 0, N - 1);
  std::vector<State> out(u(N));
  const double t0 = L.coord(0, i0);
  out[u(i0)] = t0 == 0.0 ? y0 : rk4Step(f, 0.0, y0, t0);
  for (int i = i0 + 1; i < N; ++i)
    out[u(i)] = rk4Step(f, L.coord(0, i - 1), out[u(i - 1)], L.coord(0, i) - L.coord(0, i - 1));
  for (int i = i0 - 1; i >= 0; --i)
    out[u(i)] = rk4Step(f, L.coord(0, i + 1), out[u(i + 1)], L.coord(0, i) - L.coord(0, i + 1));
  return out;
}

/// Nodes per t-line: node(i, rest) = i * stride + rest.
std::size_t lineStride(const Lattice& L) { return L.total() / u(L.nodes()[0]); }

Point withT(double t, std::span<const double> rest) {
  Point q{t};
  q.insert(q.end(), rest.begin(), rest.end());
  return q;
}

std::vector<double> tDerivative(const Lattice& L, const std::vector<double>& table) {
  const int N = L.nodes()[0];
  const std::size_t stride = lineStride(L);
  std::vector<double> out(table.size()), line(u(N));
  for (std::size_t rest = 0; rest < stride; ++rest) {
    for (int i = 0; i < N; ++i) line[u(i)] = table[u(i) * stride + rest];
    const auto d = differentiate1d(line, L.spacing(0));
    for (int i = 0; i < N; ++i) out[u(i) * stride + rest] = d[u(i)];
  }
  return out;
}

void requireNodes(const std::vector<int>& nodes, int dim, const char* who) {
  if (static_cast<int>(nodes.size()) != dim)
    throw PreconditionError(std::string(who) + ": need one node count per coordinate");
  for (int k : nodes)
    if (k < kMinSplitNodes) throw PreconditionError(std::string(who) + ": need at least 8 lattice nodes per axis");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double pairAt(const std::vector<double>& g, std::span<const double> a, std::span<const double> b) {
  const std::size_t r = a.size();
  double s = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) s += a[i] * g[i * r + j] * b[j];
  return s;
}

/// rho(v) t at q: the d/dt component of the anchor.
double rhoT(const LodayStructure& A, std::span<const double> q, std::span<const double> v) {
  double s = 0.0;
  for (int i = 0; i < A.rank(); ++i)
    if (v[u(i)] != 0.0 && !A.theta(i, 0).isZero()) s += v[u(i)] * A.theta(i, 0).value(q);
  return s;
}

std::vector<double> sectionValues(const Section& s, std::span<const double> q) {
  std::vector<double> v(u(s.rank()));
  for (int k = 0; k < s.rank(); ++k) v[u(k)] = s[k].isZero() ? 0.0 : s[k].value(q);
  return v;
}

std::vector<double> unit(int r, int i) {
  std::vector<double> e(u(r), 0.0);
  e[u(i)] = 1.0;
  return e;
}

/// Smallest eps in {2^-k} (k = 40..0, then 2..64) with min_j |base_j + eps * shift| >= floor.
double perturbation(const std::vector<double>& base, double shift, double floor, const char* who) {
  auto ok = [&](double eps) {
    for (double b : base)
      if (std::abs(b + eps * shift) < floor) return false;
    return true;
  };
  if (ok(0.0)) return 0.0;
  for (int k = 40; k >= -6; --k) {
    const double eps = std::ldexp(1.0, -k);
    if (ok(eps)) return eps;
  }
  throw PreconditionError(std::string(who) + ": no basis perturbation reaches the transversality floor");
}

/// Greedy completion of `start` by unit vectors to a basis of R^dim.
std::vector<std::vector<double>> completeBasis(std::vector<std::vector<double>> start, int dim) {
  auto rankOf = [dim](const std::vector<std::vector<double>>& vs) {
    Eigen::MatrixXd M(dim, static_cast<int>(vs.size()));
    for (std::size_t c = 0; c < vs.size(); ++c)
      for (int i = 0; i < dim; ++i) M(i, static_cast<int>(c)) = vs[c][u(i)];
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    lu.setThreshold(1e-9);
    return static_cast<int>(lu.rank());
  };
  if (rankOf(start) != static_cast<int>(start.size())) throw PreconditionError("basis completion: dependent start vectors");
  for (int k = 0; k < dim && static_cast<int>(start.size()) < dim; ++k) {
    start.push_back(unit(dim, k));
    if (rankOf(start) != static_cast<int>(start.size())) start.pop_back();
  }
  return start;
}

/// Values of [alpha, e_j] at q as G[j*r+k].
std::vector<double> bracketCoefficients(const LodayStructure& A, const Section& alpha, std::span<const double> q) {
  const int r = A.rank(), n = A.dim();
  const StructureJets S = StructureJets::at(A, q, 0);
  const SectionJet a = sectionJet(alpha, q, 1);
  std::vector<double> G(u(r * r), 0.0);
  for (int j = 0; j < r; ++j) {
    const auto e = unit(r, j);
    const auto br = values(bracketJet(S, a, constantSectionJet(e, n, 1)));
    for (int k = 0; k < r; ++k) G[u(j * r + k)] = br[u(k)];
  }
  return G;
}

/// Structure functions in a new frame, tabulated at the lattice nodes.
struct FrameTables {
  std::vector<std::vector<double>> gamma, theta, lambda, metric;
};

FrameTables inducedTables(const LodayStructure& A, const CourantStructure* C, const std::vector<Section>& frame,
                          const Lattice& L) {
  const int r = A.rank(), n = A.dim();
  const std::size_t N = L.total();
  FrameTables T;
  T.gamma.assign(u(r * r * r), std::vector<double>(N));
  T.theta.assign(u(r * n), std::vector<double>(N));
  T.lambda.assign(u(n * r * r * r), std::vector<double>(N));
  if (C) T.metric.assign(u(r * r), std::vector<double>(N));
  for (std::size_t node = 0; node < N; ++node) {
    const Point q = L.point(node);
    const StructureJets S = StructureJets::at(A, q, 0);
    std::vector<SectionJet> Fj;
    Eigen::MatrixXd Ft(r, r);
    for (int a = 0; a < r; ++a) {
      Fj.push_back(sectionJet(frame[u(a)], q, 1));
      for (int i = 0; i < r; ++i) Ft(i, a) = Fj.back()[u(i)].value();
    }
    if (std::abs(Ft.determinant()) < kDetThreshold)
      throw PreconditionError("frame is singular at " + formatPoint(q));
    const auto lu = Ft.partialPivLu();
    auto solve = [&](const std::vector<double>& w) {
      Eigen::VectorXd y = lu.solve(Eigen::Map<const Eigen::VectorXd>(w.data(), r));
      return y;
    };
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) {
        const Eigen::VectorXd y = solve(values(bracketJet(S, Fj[u(a)], Fj[u(b)])));
        for (int c = 0; c < r; ++c) T.gamma[u((a * r + b) * r + c)][node] = y(c);
      }
    for (int a = 0; a < r; ++a)
      for (int m = 0; m < n; ++m) {
        double s = 0.0;
        for (int i = 0; i < r; ++i) s += Ft(i, a) * S.T(i, m).value();
        T.theta[u(a * n + m)][node] = s;
      }
    for (int m = 0; m < n; ++m)
      for (int a = 0; a < r; ++a)
        for (int b = 0; b < r; ++b) {
          std::vector<double> w(u(r), 0.0);
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
              const double fab = Ft(i, a) * Ft(j, b);
              if (fab == 0.0) continue;
              for (int l = 0; l < r; ++l) w[u(l)] += fab * S.L(m, i, j, l).value();
            }
          const Eigen::VectorXd y = solve(w);
          for (int c = 0; c < r; ++c) T.lambda[u(((m * r + a) * r + b) * r + c)][node] = y(c);
        }
    if (C) {
      const auto g = C->metricAt(q);
      for (int a = 0; a < r; ++a)
        for (int b = a; b < r; ++b) {
          double s = 0.0;
          for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) s += Ft(i, a) * g[u(i * r + j)] * Ft(j, b);
          T.metric[u(a * r + b)][node] = s;
          T.metric[u(b * r + a)][node] = s;
        }
    }
  }
  return T;
}

std::vector<ScalarField> toFields(const Lattice& L, const std::vector<std::vector<double>>& tables) {
  std::vector<ScalarField> out;
  out.reserve(tables.size());
  for (const auto& t : tables) out.push_back(gridField(L, t));
  return out;
}

LodayStructure structureFrom(const Chart& chart, int r, const Lattice& L, const FrameTables& T) {
  LodayStructure B(chart, r);
  const int n = chart.dim();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) B.setGamma(i, j, k, gridField(L, T.gamma[u((i * r + j) * r + k)]));
  for (int i = 0; i < r; ++i)
    for (int m = 0; m < n; ++m) B.setTheta(i, m, gridField(L, T.theta[u(i * n + m)]));
  for (int m = 0; m < n; ++m)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int l = 0; l < r; ++l) B.setLambda(m, i, j, l, gridField(L, T.lambda[u(((m * r + i) * r + j) * r + l)]));
  return B;
}

GridSection gridSection(const Lattice& L, int r) {
  GridSection s;
  s.lattice = L;
  s.tables.assign(u(r), std::vector<double>(L.total()));
  return s;
}

}  // namespace

double gridTolerance(const Lattice& L) { return 50.0 * std::pow(L.maxSpacing(), 4); }

Section GridSection::section() const {
  Section s = Section::zero(rank());
  for (int k = 0; k < rank(); ++k) s.comps[u(k)] = gridField(lattice, tables[u(k)]);
  return s;
}

std::vector<double> GridSection::at(std::size_t node) const {
  std::vector<double> v;
  v.reserve(tables.size());
  for (const auto& t : tables) v.push_back(t[node]);
  return v;
}

// ---------------------------------------------------------------------------
// Flow boxes

Point FlowBox::origin() const {
  Point o{0.0};
  for (int m : transversal) o.push_back(basepoint[u(m)]);
  return o;
}

Point FlowBox::toOriginal(std::span<const double> z) const {
  Point x;
  for (const auto& f : psi) x.push_back(f.value(z));
  return x;
}

Point FlowBox::toBox(std::span<const double> x) const {
  const int n = original.dim();
  auto jacAt = [&](const Point& z) {
    Eigen::MatrixXd J(n, n);
    for (int m = 0; m < n; ++m)
      for (int a = 0; a < n; ++a) J(m, a) = jacobian[u(m * n + a)].value(z);
    return J;
  };
  Point z = origin();
  const Eigen::VectorXd dx0 = Eigen::Map<const Eigen::VectorXd>(x.data(), n) - Eigen::Map<const Eigen::VectorXd>(basepoint.data(), n);
  const Eigen::VectorXd step0 = jacAt(z).partialPivLu().solve(dx0);
  for (int a = 0; a < n; ++a) z[u(a)] += step0(a);
  double scale = 1.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  for (int it = 0; it < 50; ++it) {
    if (!lattice.contains(z, 1e-9)) throw DomainError("flow box: point " + formatPoint(Point(x.begin(), x.end())) + " is outside the sub-box");
    const Point xz = toOriginal(z);
    Eigen::VectorXd res(n);
    for (int m = 0; m < n; ++m) res(m) = xz[u(m)] - x[u(m)];
    if (res.cwiseAbs().maxCoeff() <= 1e-13 * scale) return z;
    const Eigen::VectorXd d = jacAt(z).partialPivLu().solve(res);
    for (int a = 0; a < n; ++a) z[u(a)] -= d(a);
  }
  throw DomainError("flow box: Newton inversion did not converge at " + formatPoint(Point(x.begin(), x.end())));
}

FlowBox numericFlowBox(const VectorField& X, const Chart& chart, std::span<const double> p, const std::vector<int>& nodes) {
  const int n = chart.dim();
  if (X.dim() != n) throw PreconditionError("numericFlowBox: vector field dimension does not match the chart");
  requireNodes(nodes, n, "numericFlowBox");
  chart.requireInside(p);
  std::vector<double> Xp(u(n));
  for (int m = 0; m < n; ++m) Xp[u(m)] = X[m].isZero() ? 0.0 : X[m].value(p);
  int c = 0;
  for (int m = 1; m < n; ++m)
    if (std::abs(Xp[u(m)]) > std::abs(Xp[u(c)])) c = m;
  if (std::abs(Xp[u(c)]) < kAnchorTol) throw PreconditionError("numericFlowBox: X vanishes at p");
  double dist = 1e300;
  for (int m = 0; m < n; ++m) {
    const auto& iv = chart.box()[u(m)];
    dist = std::min({dist, p[u(m)] - iv.lo, iv.hi - p[u(m)]});
  }
  if (!(dist > 0.0)) throw PreconditionError("numericFlowBox: p must be an interior point");

  FlowBox fb;
  fb.original = chart;
  fb.basepoint.assign(p.begin(), p.end());
  fb.axis = c;
  for (int m = 0; m < n; ++m)
    if (m != c) fb.transversal.push_back(m);
  std::string tName = "t";
  for (bool clash = true; clash;) {
    clash = std::find(chart.names().begin(), chart.names().end(), tName) != chart.names().end();
    if (clash) tName += "_";
  }
  std::vector<std::string> names{tName};
  for (int m : fb.transversal) names.push_back(chart.names()[u(m)]);

  // State: x (n values) then d x / d y_a for each transversal a (n values each).
  const int nt = n - 1;
  Rhs rhs = [&](double, const State& s) {
    const Point x(s.begin(), s.begin() + n);
    chart.requireInside(x);
    State ds(s.size(), 0.0);
    for (int m = 0; m < n; ++m) {
      if (X[m].isZero()) continue;
      const Jet j = X[m].jet(x, 1);
      ds[u(m)] = j.value();
      for (int a = 0; a < nt; ++a) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += j.partial(k) * s[u(n + a * n + k)];
        ds[u(n + a * n + m)] = acc;
      }
    }
    return ds;
  };

  double w = 0.5 * dist;
  for (int shrink = 0; shrink < 30; ++shrink, w *= 0.5) {
    const double tau = w / std::abs(Xp[u(c)]);
    std::vector<Interval> box{{-tau, tau}};
    for (int m : fb.transversal) box.push_back({p[u(m)] - w, p[u(m)] + w});
    const Lattice L(box, nodes);
    const std::size_t N = L.total(), stride = lineStride(L);
    std::vector<std::vector<double>> psiT(u(n), std::vector<double>(N)), jacT(u(n * n), std::vector<double>(N)),
        invT(u(n * n), std::vector<double>(N));
    try {
      for (std::size_t rest = 0; rest < stride; ++rest) {
        const Point y0 = L.point(rest);
        State s0(u(n + nt * n), 0.0);
        for (int m = 0; m < n; ++m) s0[u(m)] = p[u(m)];
        for (int a = 0; a < nt; ++a) {
          s0[u(fb.transversal[u(a)])] = y0[u(a + 1)];
          s0[u(n + a * n + fb.transversal[u(a)])] = 1.0;
        }
        const auto line = marchLine(L, rhs, s0);
        for (int i = 0; i < L.nodes()[0]; ++i) {
          const std::size_t node = u(i) * stride + rest;
          const State& s = line[u(i)];
          const State ds = rhs(0.0, s);
          Eigen::MatrixXd J(n, n);
          for (int m = 0; m < n; ++m) {
            J(m, 0) = ds[u(m)];
            for (int a = 0; a < nt; ++a) J(m, a + 1) = s[u(n + a * n + m)];
          }
          if (std::abs(J.determinant()) < 1e-12) throw PreconditionError("numericFlowBox: degenerate flow map");
          const Eigen::MatrixXd Ji = J.inverse();
          for (int m = 0; m < n; ++m) {
            psiT[u(m)][node] = s[u(m)];
            for (int a = 0; a < n; ++a) {
              jacT[u(m * n + a)][node] = J(m, a);
              invT[u(a * n + m)][node] = Ji(a, m);
            }
          }
        }
      }
    } catch (const DomainError&) {
      ++fb.shrinks;
      continue;
    } catch (const SingularEvaluation&) {
      ++fb.shrinks;
      continue;
    }
    fb.chart = Chart(names, box);
    fb.lattice = L;
    fb.psi = toFields(L, psiT);
    fb.jacobian = toFields(L, jacT);
    fb.inverseJacobian = toFields(L, invT);
    return fb;
  }
  throw PreconditionError("numericFlowBox: the flow leaves the chart on every sub-box");
}

LodayStructure pullBack(const LodayStructure& A, const FlowBox& box) {
  const int r = A.rank(), n = A.dim();
  if (!(A.chart() == box.original)) throw PreconditionError("pullBack: structure and flow box use different charts");
  const Lattice& L = box.lattice;
  const std::size_t N = L.total();
  FrameTables T;
  T.gamma.assign(A.gammaFields().size(), std::vector<double>(N));
  T.theta.assign(A.thetaFields().size(), std::vector<double>(N));
  T.lambda.assign(A.lambdaFields().size(), std::vector<double>(N));
  for (std::size_t node = 0; node < N; ++node) {
    const Point z = L.point(node);
    const Point x = box.toOriginal(z);
    std::vector<double> inv(u(n * n));
    for (std::size_t t = 0; t < inv.size(); ++t) inv[t] = box.inverseJacobian[t].value(z);
    auto val = [&](const ScalarField& f) { return f.isZero() ? 0.0 : f.value(x); };
    for (std::size_t t = 0; t < T.gamma.size(); ++t) T.gamma[t][node] = val(A.gammaFields()[t]);
    for (int i = 0; i < r; ++i) {
      std::vector<double> th(u(n));
      for (int m = 0; m < n; ++m) th[u(m)] = val(A.theta(i, m));
      for (int a = 0; a < n; ++a) T.theta[u(i * n + a)][node] = dot(std::span(inv).subspan(u(a * n), u(n)), th);
    }
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int l = 0; l < r; ++l) {
          std::vector<double> la(u(n));
          for (int m = 0; m < n; ++m) la[u(m)] = val(A.lambda(m, i, j, l));
          for (int a = 0; a < n; ++a)
            T.lambda[u(((a * r + i) * r + j) * r + l)][node] = dot(std::span(inv).subspan(u(a * n), u(n)), la);
        }
  }
  return structureFrom(box.chart, r, L, T);
}

CourantStructure pullBack(const CourantStructure& C, const FlowBox& box) {
  const Lattice& L = box.lattice;
  std::vector<std::vector<double>> g(C.metricFields().size(), std::vector<double>(L.total()));
  for (std::size_t node = 0; node < L.total(); ++node) {
    const Point x = box.toOriginal(L.point(node));
    for (std::size_t t = 0; t < g.size(); ++t) g[t][node] = C.metricFields()[t].isZero() ? 0.0 : C.metricFields()[t].value(x);
  }
  return CourantStructure(pullBack(C.base(), box), toFields(L, g));
}

// ---------------------------------------------------------------------------
// Invariant sections and adapted frames

GridSection solveInvariantSection(const LodayStructure& A, const Section& alpha, std::span<const double> v,
                                  const std::vector<int>& nodes) {
  const int r = A.rank(), n = A.dim();
  requireNodes(nodes, n, "solveInvariantSection");
  requireSameChart(A, alpha);
  if (static_cast<int>(v.size()) != r) throw PreconditionError("solveInvariantSection: initial value has the wrong rank");
  const Lattice L(A.chart().box(), nodes);
  const double flowTol = std::max(1e-9, gridTolerance(L));
  double worst = 0.0;
  const SamplePlan plan(A.chart(), 1, 16);
  for (const auto& q : plan.points()) {
    const auto a = sectionValues(alpha, q);
    for (int m = 0; m < n; ++m) {
      double s = 0.0;
      for (int i = 0; i < r; ++i)
        if (a[u(i)] != 0.0 && !A.theta(i, m).isZero()) s += a[u(i)] * A.theta(i, m).value(q);
      worst = std::max(worst, std::abs(s - (m == 0 ? 1.0 : 0.0)));
    }
  }
  if (worst > flowTol)
    throw PreconditionError("solveInvariantSection: the chart is not a flow box for alpha (anchor residual " +
                            std::to_string(worst) + ")");

  const double h = L.maxSpacing();
  GridSection out = gridSection(L, r);
  const std::size_t stride = lineStride(L);
  for (std::size_t rest = 0; rest < stride; ++rest) {
    const Point y = L.point(rest);
    const std::vector<double> ytail(y.begin() + 1, y.end());
    Rhs rhs = [&](double t, const State& b) {
      const auto G = bracketCoefficients(A, alpha, withT(t, ytail));
      double mag = 0.0;
      for (double g : G) mag = std::max(mag, std::abs(g));
      if (mag * h > kStiffnessGuard)
        throw PreconditionError("solveInvariantSection: step rejected, coefficient magnitude times h exceeds 10");
      State db(u(r), 0.0);
      for (int j = 0; j < r; ++j)
        for (int k = 0; k < r; ++k) db[u(k)] -= b[u(j)] * G[u(j * r + k)];
      return db;
    };
    const auto line = marchLine(L, rhs, State(v.begin(), v.end()));
    for (int i = 0; i < L.nodes()[0]; ++i)
      for (int k = 0; k < r; ++k) out.tables[u(k)][u(i) * stride + rest] = line[u(i)][u(k)];
  }
  return out;
}

AdaptedFrame adaptedFrame(const LodayStructure& A, const Section& alpha, std::span<const double> p,
                          const std::vector<int>& nodes) {
  const int r = A.rank(), n = A.dim();
  requireNodes(nodes, n, "adaptedFrame");
  requireSameChart(A, alpha);
  A.chart().requireInside(p);
  const Lattice L(A.chart().box(), nodes);
  const double tol = std::max(1e-9, gridTolerance(L));

  double jac = 0.0;
  const SamplePlan plan(A.chart(), 3, 16);
  for (const auto& q : plan.points()) {
    const StructureJets S1 = StructureJets::at(A, q, 1);
    const SectionJet a = sectionJet(alpha, q, 2);
    std::vector<SectionJet> e;
    for (int i = 0; i < r; ++i) e.push_back(constantSectionJet(unit(r, i), n, 2));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        const auto t1 = values(bracketJet(S1, bracketJet(S1, a, e[u(i)]), e[u(j)]));
        const auto t2 = values(bracketJet(S1, e[u(i)], bracketJet(S1, a, e[u(j)])));
        const auto t3 = values(bracketJet(S1, a, bracketJet(S1, e[u(i)], e[u(j)])));
        for (int k = 0; k < r; ++k) jac = std::max(jac, std::abs(t1[u(k)] + t2[u(k)] - t3[u(k)]));
      }
  }
  if (jac > std::max(1e-8, tol))
    throw PreconditionError("adaptedFrame: the jacobiator of alpha does not vanish (residual " + std::to_string(jac) + ")");
  CheckOptions opt;
  opt.tolerance = tol;
  if (!checkStructure(A, SamplePlan(A.chart(), 2, 4), opt).at("a").pass)
    throw PreconditionError("adaptedFrame: structure fails the involutivity entry (a)");

  AdaptedFrame out;
  const auto ap = sectionValues(alpha, p);
  auto basis = completeBasis({ap}, r);
  const double rtA = rhoT(A, p, ap);
  std::vector<double> rt;
  double scale = std::abs(rtA);
  for (int i = 1; i < r; ++i) {
    rt.push_back(rhoT(A, p, basis[u(i)]));
    scale = std::max(scale, std::abs(rt.back()));
  }
  out.epsilon = perturbation(rt, rtA, 0.1 * scale, "adaptedFrame");
  for (int i = 1; i < r; ++i)
    for (int k = 0; k < r; ++k) basis[u(i)][u(k)] += out.epsilon * ap[u(k)];
  out.basis = basis;

  std::vector<GridSection> raw;
  for (const auto& v : basis) raw.push_back(solveInvariantSection(A, alpha, v, nodes));
  const std::size_t N = L.total();
  std::vector<std::vector<double>> rho(u(r), std::vector<double>(N));
  for (int i = 0; i < r; ++i)
    for (std::size_t node = 0; node < N; ++node) {
      rho[u(i)][node] = rhoT(A, L.point(node), raw[u(i)].at(node));
      if (std::abs(rho[u(i)][node]) < 1e-9 || (rho[u(i)][node] > 0) != (rho[u(i)][0] > 0))
        throw PreconditionError("adaptedFrame: transversality lost, shrink box");
    }
  for (int i = 0; i < r; ++i) {
    GridSection b = gridSection(L, r);
    for (std::size_t node = 0; node < N; ++node)
      for (int k = 0; k < r; ++k) {
        double val = raw[u(i)].tables[u(k)][node] / rho[u(i)][node];
        if (i > 0) val -= raw[0].tables[u(k)][node] / rho[0][node];
        b.tables[u(k)][node] = val;
      }
    out.beta.push_back(std::move(b));
  }

  std::vector<Section> frame;
  for (const auto& b : out.beta) frame.push_back(b.section());
  ResidualTracker commute("commute", tol), transverse("transverse", 1e-9), tind("t-independent", tol);
  for (std::size_t node = 0; node < N; ++node) {
    const Point q = L.point(node);
    const StructureJets S = StructureJets::at(A, q, 0);
    const SectionJet a = sectionJet(alpha, q, 1);
    for (int i = 0; i < r; ++i) {
      commute.observe(maxAbs(values(bracketJet(S, a, sectionJet(frame[u(i)], q, 1)))), q);
      transverse.observe(std::abs(rhoT(A, q, out.beta[u(i)].at(node)) - (i == 0 ? 1.0 : 0.0)), q);
    }
  }
  const FrameTables T = inducedTables(A, nullptr, frame, L);
  auto observeT = [&](const std::vector<double>& table) {
    const auto d = tDerivative(L, table);
    for (std::size_t node = 0; node < N; ++node) tind.observe(std::abs(d[node]), L.point(node));
  };
  for (int i = 1; i < r; ++i) {
    for (int j = 1; j < r; ++j)
      for (int k = 0; k < r; ++k) observeT(T.gamma[u((i * r + j) * r + k)]);
    for (int m = 0; m < n; ++m) observeT(T.theta[u(i * n + m)]);
  }
  out.report.add(commute.entry());
  out.report.add(transverse.entry());
  out.report.add(tind.entry());
  return out;
}

// ---------------------------------------------------------------------------
// Good sections and the splitting

GoodSection goodSection(const CourantStructure& C, std::span<const double> p, const std::vector<int>& nodes) {
  const int r = C.rank(), n = C.dim();
  C.chart().requireInside(p);
  const auto g = C.metricAt(p);
  std::vector<double> th(u(r * n));
  double anchorMax = 0.0;
  for (int i = 0; i < r; ++i)
    for (int m = 0; m < n; ++m) {
      th[u(i * n + m)] = C.base().theta(i, m).isZero() ? 0.0 : C.base().theta(i, m).value(p);
      anchorMax = std::max(anchorMax, std::abs(th[u(i * n + m)]));
    }
  if (anchorMax < kAnchorTol) throw PreconditionError("goodSection: anchor vanishes at p");

  std::vector<std::vector<double>> candidates;
  for (int i = 0; i < r; ++i) candidates.push_back(unit(r, i));
  for (int i = 0; i < r; ++i)
    for (int j = i + 1; j < r; ++j) {
      auto v = unit(r, i);
      v[u(j)] = 1.0;
      candidates.push_back(v);
    }
  GoodSection out;
  for (const auto& v : candidates) {
    double rho = 0.0;
    for (int m = 0; m < n; ++m) {
      double s = 0.0;
      for (int i = 0; i < r; ++i) s += v[u(i)] * th[u(i * n + m)];
      rho = std::max(rho, std::abs(s));
    }
    const double nn = pairAt(g, v, v);
    if (rho >= kAnchorTol && std::abs(nn) >= kAnchorTol) {
      out.v = v;
      out.normSquared = nn;
      break;
    }
  }
  if (out.v.empty()) throw PreconditionError("goodSection: no frame vector or pair sum has rho(v) != 0 and <v,v> != 0");
  const double sign = out.normSquared > 0 ? 1.0 : -1.0;

  ScalarField gvv;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (out.v[u(i)] != 0.0 && out.v[u(j)] != 0.0 && !C.metric(i, j).isZero())
        gvv += (out.v[u(i)] * out.v[u(j)]) * C.metric(i, j);
  const ScalarField inv = ScalarField::constant(1.0) / sqrt(abs(gvv));
  VectorField X = VectorField::zero(n);
  for (int m = 0; m < n; ++m) {
    ScalarField s;
    for (int i = 0; i < r; ++i)
      if (out.v[u(i)] != 0.0 && !C.base().theta(i, m).isZero()) s += out.v[u(i)] * C.base().theta(i, m);
    if (!s.isZero()) X.comps[u(m)] = s * inv;
  }
  out.box = numericFlowBox(X, C.chart(), p, nodes);
  out.pulled = pullBack(C, out.box);

  const Lattice& L = out.box.lattice;
  const std::size_t N = L.total();
  out.alpha = gridSection(L, r);
  out.Dt = gridSection(L, r);
  std::vector<double> dt(u(n), 0.0);
  dt[0] = 1.0;
  for (std::size_t node = 0; node < N; ++node) {
    const Point q = L.point(node);
    const double nn = pairAt(out.pulled.metricAt(q), out.v, out.v);
    if (std::abs(nn) < kDetThreshold || (nn > 0) != (sign > 0))
      throw PreconditionError("goodSection: <v,v> vanishes on the box, shrink box");
    const double s = 1.0 / std::sqrt(std::abs(nn));
    const auto D = rhoStarAt(out.pulled, q, dt);
    for (int k = 0; k < r; ++k) {
      out.Dt.tables[u(k)][node] = D[u(k)];
      out.alpha.tables[u(k)][node] = out.v[u(k)] * s - 0.5 * sign * D[u(k)];
    }
  }

  const double tol = std::max(1e-9, gridTolerance(L));
  ResidualTracker anchor("anchor", 1e-9), null("null", 1e-9), self("self-bracket", tol);
  const Section alpha = out.alpha.section();
  const LodayStructure& B = out.pulled.base();
  for (std::size_t node = 0; node < N; ++node) {
    const Point q = L.point(node);
    const auto a = out.alpha.at(node);
    for (int m = 0; m < n; ++m) {
      double s = 0.0;
      for (int i = 0; i < r; ++i)
        if (!B.theta(i, m).isZero()) s += a[u(i)] * B.theta(i, m).value(q);
      anchor.observe(std::abs(s - (m == 0 ? 1.0 : 0.0)), q);
    }
    null.observe(std::abs(pairAt(out.pulled.metricAt(q), a, a)), q);
    const SectionJet aj = sectionJet(alpha, q, 1);
    self.observe(maxAbs(values(bracketJet(StructureJets::at(B, q, 0), aj, aj))), q);
  }
  out.report.add(anchor.entry());
  out.report.add(null.entry());
  out.report.add(self.entry());
  return out;
}

SplitResult courantSplit(const CourantStructure& C, std::span<const double> p, const std::vector<int>& nodes,
                         std::uint64_t seed) {
  const int R = C.rank(), n = C.dim();
  GoodSection gs = goodSection(C, p, nodes);
  SplitResult out;
  out.box = gs.box;
  out.v = gs.v;
  const Lattice& L = gs.box.lattice;
  const std::size_t N = L.total();
  const CourantStructure& Ct = gs.pulled;
  const double tol = std::max(1e-9, gridTolerance(L));
  out.report.append(gs.report, "good-section:");

  const Section alpha = gs.alpha.section();
  const Point o = gs.box.origin();
  AdaptedFrame af = adaptedFrame(Ct.base(), alpha, o, nodes);
  out.report.append(af.report, "adapted-frame:");

  // Dt in the frame (alpha, beta_1 .. beta_r).
  const int r = R - 1;
  auto dtCoefficients = [&](const std::vector<double>& a, const std::vector<std::vector<double>>& betas,
                            const std::vector<double>& D) {
    Eigen::MatrixXd Mt(R, R);
    for (int i = 0; i < R; ++i) {
      Mt(i, 0) = a[u(i)];
      for (int k = 1; k <= r; ++k) Mt(i, k) = betas[u(k)][u(i)];
    }
    Eigen::VectorXd c = Mt.partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(D.data(), R));
    return std::vector<double>(c.data(), c.data() + R);
  };
  std::vector<std::vector<double>> coef(u(R), std::vector<double>(N));
  for (std::size_t node = 0; node < N; ++node) {
    std::vector<std::vector<double>> betas;
    for (const auto& b : af.beta) betas.push_back(b.at(node));
    const auto c = dtCoefficients(gs.alpha.at(node), betas, gs.Dt.at(node));
    for (int k = 0; k < R; ++k) coef[u(k)][node] = c[u(k)];
  }
  ResidualTracker dtAlpha("dt-alpha-component", tol), dtT("dt-t-independent", tol);
  for (std::size_t node = 0; node < N; ++node) dtAlpha.observe(std::abs(coef[0][node]), L.point(node));
  for (int k = 1; k < R; ++k) {
    const auto d = tDerivative(L, coef[u(k)]);
    for (std::size_t node = 0; node < N; ++node) dtT.observe(std::abs(d[node]), L.point(node));
  }
  out.report.add(dtAlpha.entry());
  out.report.add(dtT.entry());

  // Basis of E''_p: Dt_p plus coordinate vectors in the beta_1..beta_r frame, pushed toward Dt_p.
  std::vector<Section> betaS;
  for (const auto& b : af.beta) betaS.push_back(b.section());
  const auto aP = sectionValues(alpha, o), dP = sectionValues(gs.Dt.section(), o);
  std::vector<std::vector<double>> betaP;
  for (const auto& b : betaS) betaP.push_back(sectionValues(b, o));
  const auto gP = Ct.metricAt(o);
  const auto cP = dtCoefficients(aP, betaP, dP);
  const std::vector<double> dtE(cP.begin() + 1, cP.end());
  auto basis = completeBasis({dtE}, r);
  const int s = R - 2;
  auto inOldFrame = [&](const std::vector<double>& w, const std::vector<std::vector<double>>& betas) {
    std::vector<double> x(u(R), 0.0);
    for (int k = 0; k < r; ++k)
      for (int i = 0; i < R; ++i) x[u(i)] += w[u(k)] * betas[u(k + 1)][u(i)];
    return x;
  };
  const double aD = pairAt(gP, aP, dP);
  std::vector<double> pairs;
  double scale = std::abs(aD);
  for (int j = 1; j <= s; ++j) {
    pairs.push_back(pairAt(gP, aP, inOldFrame(basis[u(j)], betaP)));
    scale = std::max(scale, std::abs(pairs.back()));
  }
  const double eps = perturbation(pairs, aD, 0.1 * scale, "courantSplit");
  for (int j = 1; j <= s; ++j)
    for (int k = 0; k < r; ++k) basis[u(j)][u(k)] += eps * dtE[u(k)];

  std::vector<GridSection> newBeta;
  for (int j = 1; j <= s; ++j) {
    GridSection b = gridSection(L, R);
    for (std::size_t node = 0; node < N; ++node) {
      const auto g = Ct.metricAt(L.point(node));
      std::vector<std::vector<double>> betas;
      for (const auto& bb : af.beta) betas.push_back(bb.at(node));
      const auto bar = inOldFrame(basis[u(j)], betas);
      const auto a = gs.alpha.at(node), D = gs.Dt.at(node);
      const double ab = pairAt(g, a, bar), db = pairAt(g, D, bar);
      if (std::abs(ab) < 1e-9) throw PreconditionError("courantSplit: transversality lost, shrink box");
      for (int i = 0; i < R; ++i) b.tables[u(i)][node] = (bar[u(i)] - db * a[u(i)]) / ab - D[u(i)];
    }
    newBeta.push_back(std::move(b));
  }

  std::vector<Section> frame{alpha, gs.Dt.section()};
  for (const auto& b : newBeta) frame.push_back(b.section());
  out.frame.clear();
  for (const auto& f : frame)
    for (const auto& c : f.comps) out.frame.push_back(c);
  const FrameTables T = inducedTables(Ct.base(), &Ct, frame, L);
  out.induced = CourantStructure(structureFrom(gs.box.chart, R, L, T), toFields(L, T.metric));

  auto G = [&](int a, int b, int c) -> const std::vector<double>& { return T.gamma[u((a * R + b) * R + c)]; };
  auto M = [&](int a, int b) -> const std::vector<double>& { return T.metric[u(a * R + b)]; };
  ResidualTracker ia("item-a", kSplitTol), ib("item-b", kSplitTol), ic("item-c", kSplitTol), id("item-d", kSplitTol),
      ieb("item-e-bracket", kSplitTol), iea("item-e-anchor", kSplitTol), na("null-alpha", kSplitTol),
      nd("null-dt", kSplitTol), adt("alpha-dt", kSplitTol);
  auto observe = [&](ResidualTracker& t, const std::vector<double>& table, double target = 0.0) {
    for (std::size_t node = 0; node < N; ++node) t.observe(std::abs(table[node] - target), L.point(node));
  };
  auto observeT = [&](ResidualTracker& t, const std::vector<double>& table) { observe(t, tDerivative(L, table)); };
  for (int j = 2; j < R; ++j) {
    for (int k = 0; k < R; ++k) observe(ia, G(0, j, k));
    observe(ib, M(0, j));
    observe(ic, M(1, j));
    observe(iea, T.theta[u(j * n)]);
    for (int m = 0; m < n; ++m) observeT(iea, T.theta[u(j * n + m)]);
    for (int i = 2; i < R; ++i) {
      observeT(id, M(i, j));
      observe(ieb, G(i, j, 0));
      observe(ieb, G(i, j, 1));
      for (int k = 0; k < R; ++k) observeT(ieb, G(i, j, k));
    }
  }
  observe(na, M(0, 0));
  observe(nd, M(1, 1));
  observe(adt, M(0, 1), 1.0);
  for (auto* t : {&ia, &ib, &ic, &id, &ieb, &iea, &na, &nd, &adt}) out.report.add(t->entry());

  // E' at t = 0 over the transversal chart.
  const Chart tChart({gs.box.chart.names()[0]}, {gs.box.chart.box()[0]});
  CourantStructure model;
  if (n == 1) {
    if (s > 0) throw PreconditionError("courantSplit: a 0-dimensional transversal cannot carry a factor of positive rank");
    model = standardCourant(tChart);
  } else {
    std::vector<std::string> names(gs.box.chart.names().begin() + 1, gs.box.chart.names().end());
    std::vector<Interval> box(gs.box.chart.box().begin() + 1, gs.box.chart.box().end());
    const Chart yChart(names, box);
    const Lattice yL(box, std::vector<int>(nodes.begin() + 1, nodes.end()));
    auto slice = [&](const ScalarField& f) {
      std::vector<double> t(yL.total());
      for (std::size_t k = 0; k < t.size(); ++k) {
        const Point y = yL.point(k);
        t[k] = f.value(withT(0.0, y));
      }
      return gridField(yL, std::move(t));
    };
    const LodayStructure& I = out.induced.base();
    LodayStructure E(yChart, s);
    std::vector<ScalarField> g(u(s * s));
    for (int i = 0; i < s; ++i) {
      for (int j = 0; j < s; ++j) {
        g[u(i * s + j)] = slice(out.induced.metric(i + 2, j + 2));
        for (int k = 0; k < s; ++k) E.setGamma(i, j, k, slice(I.gamma(i + 2, j + 2, k + 2)));
      }
      for (int m = 1; m < n; ++m) E.setTheta(i, m - 1, slice(I.theta(i + 2, m)));
    }
    for (int m = 1; m < n; ++m)
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
          for (int l = 0; l < s; ++l) E.setLambda(m - 1, i, j, l, slice(I.lambda(m, i + 2, j + 2, l + 2)));
    out.factor = CourantStructure(std::move(E), std::move(g));
    model = directProduct(standardCourant(tChart), *out.factor);
  }

  ResidualTracker gap("product-gap", kSplitTol);
  const LodayStructure& I = out.induced.base();
  const LodayStructure& P = model.base();
  auto cmp = [&](const std::vector<ScalarField>& a, const std::vector<ScalarField>& b, const Point& q) {
    for (std::size_t t = 0; t < a.size(); ++t) {
      const double x = a[t].isZero() ? 0.0 : a[t].value(q), y = b[t].isZero() ? 0.0 : b[t].value(q);
      gap.observe(std::abs(x - y), q);
    }
  };
  for (std::size_t node = 0; node < N; ++node) {
    const Point q = L.point(node);
    cmp(I.gammaFields(), P.gammaFields(), q);
    cmp(I.thetaFields(), P.thetaFields(), q);
    cmp(I.lambdaFields(), P.lambdaFields(), q);
    cmp(out.induced.metricFields(), model.metricFields(), q);
  }
  out.report.add(gap.entry());

  if (s > 0) {
    const Classification cl =
        classifyDecomposition(I, productSplit(1, 2, n - 1, s), SamplePlan(gs.box.chart, seed, 16));
    out.classification = cl.label;
    CheckEntry e = cl.table.at("direct");
    e.name = "classification";
    e.pass = cl.label == "direct";
    out.report.add(e);
  } else {
    // Nothing beside the standard factor: the decomposition is trivially direct.
    out.classification = "direct";
  }
  return out;
}

}  // namespace lk
