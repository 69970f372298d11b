#include "lodaykit/courant.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "lodaykit/errors.hpp"

namespace lk {

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

Eigen::MatrixXd toMatrix(std::span<const double> G, int r) {
  Eigen::MatrixXd M(r, r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) M(i, j) = G[u(i * r + j)];
  return M;
}

}  // namespace

CourantStructure::CourantStructure(LodayStructure base, std::vector<ScalarField> metric)
    : base_(std::move(base)), metric_(std::move(metric)) {
  const int r = base_.rank();
  if (metric_.size() != u(r * r)) throw PreconditionError("courant structure: metric must be rank x rank");
  if (r == 0) return;
  SamplePlan probe(base_.chart(), 1, 8);
  for (const auto& q : probe.points())
    for (int i = 0; i < r; ++i)
      for (int j = i + 1; j < r; ++j) {
        const double a = this->metric(i, j).value(q), b = this->metric(j, i).value(q);
        if (std::abs(a - b) > 1e-12 * (1.0 + std::max(std::abs(a), std::abs(b))))
          throw PreconditionError("courant structure: metric is not symmetric at " + formatPoint(q));
      }
}

std::vector<double> CourantStructure::metricAt(std::span<const double> q) const {
  std::vector<double> G(metric_.size());
  for (std::size_t t = 0; t < G.size(); ++t) G[t] = metric_[t].value(q);
  return G;
}

std::vector<Jet> CourantStructure::metricJets(std::span<const double> q, int order) const {
  const JetLayout& L = JetLayout::get(dim(), order);
  std::vector<Jet> G(metric_.size(), Jet(L));
  for (std::size_t t = 0; t < G.size(); ++t)
    if (!metric_[t].isZero()) G[t] = metric_[t].jet(q, order);
  return G;
}

void CourantStructure::requireNondegenerate(std::span<const double> q) const {
  if (rank() == 0) return;
  const double d = determinant(metricAt(q), rank());
  if (!(std::abs(d) >= kDetThreshold))
    throw DegenerateMetric("metric is degenerate at " + formatPoint(std::vector<double>(q.begin(), q.end())) +
                           " (|det g| = " + std::to_string(std::abs(d)) + ")");
}

double determinant(std::span<const double> G, int r) {
  if (r == 0) return 1.0;
  return toMatrix(G, r).partialPivLu().determinant();
}

Jet pairingJet(const std::vector<Jet>& g, const SectionJet& a, const SectionJet& b) {
  const int r = static_cast<int>(a.size());
  int K = 1 << 20;
  for (const auto& x : a) K = std::min(K, x.order());
  for (const auto& x : b) K = std::min(K, x.order());
  for (const auto& x : g) K = std::min(K, x.order());
  if (r == 0) return Jet();
  Jet out(JetLayout::get(a[0].vars(), K)), t(JetLayout::get(a[0].vars(), K));
  for (int i = 0; i < r; ++i) {
    if (a[u(i)].isZero()) continue;
    for (int j = 0; j < r; ++j) {
      const Jet& gij = g[u(i * r + j)];
      if (gij.isZero() || b[u(j)].isZero()) continue;
      t = Jet(out.layout());
      t.addProduct(a[u(i)], b[u(j)]);
      out.addProduct(t, gij);
    }
  }
  return out;
}

ScalarField pairing(const CourantStructure& C, const Section& a, const Section& b) {
  requireSameChart(C.base(), a);
  requireSameChart(C.base(), b);
  ScalarField s;
  for (int i = 0; i < C.rank(); ++i)
    for (int j = 0; j < C.rank(); ++j)
      if (!a[i].isZero() && !b[j].isZero() && !C.metric(i, j).isZero()) s += C.metric(i, j) * a[i] * b[j];
  return s;
}

Section rhoStar(const CourantStructure& C, const OneForm& xi) {
  if (xi.dim() != C.dim()) throw PreconditionError("rho*: one-form dimension does not match chart");
  const int r = C.rank(), n = C.dim();
  Section out = Section::zero(r);
  bool zeroAnchor = true;
  for (const auto& t : C.base().thetaFields()) zeroAnchor = zeroAnchor && t.isZero();
  bool zeroXi = true;
  for (const auto& c : xi.comps) zeroXi = zeroXi && c.isZero();
  if (zeroAnchor || zeroXi || r == 0) return out;
  bool constant = true;
  for (const auto& t : C.base().thetaFields()) constant = constant && t.constantValue().has_value();
  for (const auto& c : xi.comps) constant = constant && c.constantValue().has_value();
  for (const auto& g : C.metricFields()) constant = constant && g.constantValue().has_value();
  if (constant) {
    const Point q = C.chart().center();
    std::vector<double> w(u(n));
    for (int m = 0; m < n; ++m) w[u(m)] = *xi[m].constantValue();
    return Section::constant(rhoStarAt(C, q, w));
  }
  auto shared = std::make_shared<const std::pair<CourantStructure, OneForm>>(C, xi);
  auto fn = std::make_shared<std::function<std::vector<Jet>(std::span<const double>, int)>>(
      [shared, r, n](std::span<const double> q, int order) {
        const auto& [Cs, w] = *shared;
        Cs.requireNondegenerate(q);
        const JetLayout& L = JetLayout::get(n, order);
        std::vector<Jet> xiJ(u(n), Jet(L));
        for (int m = 0; m < n; ++m)
          if (!w[m].isZero()) xiJ[u(m)] = w[m].jet(q, order);
        std::vector<Jet> rhs(u(r), Jet(L));
        for (int l = 0; l < r; ++l)
          for (int m = 0; m < n; ++m) {
            const ScalarField& th = Cs.base().theta(l, m);
            if (th.isZero() || xiJ[u(m)].isZero()) continue;
            rhs[u(l)].addProduct(th.jet(q, order), xiJ[u(m)]);
          }
        return solveJets(Cs.metricJets(q, order), std::move(rhs), r);
      });
  for (int k = 0; k < r; ++k)
    out.comps[u(k)] = ScalarField(std::make_shared<LambdaNode>(
        [fn, k](std::span<const double> q, int order) { return (*fn)(q, order)[u(k)]; }));
  return out;
}

Section dFunction(const CourantStructure& C, const ScalarField& f) { return rhoStar(C, OneForm::exact(f, C.dim())); }

std::vector<double> rhoStarAt(const CourantStructure& C, std::span<const double> q, std::span<const double> xi) {
  const int r = C.rank(), n = C.dim();
  C.requireNondegenerate(q);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(r);
  for (int l = 0; l < r; ++l)
    for (int m = 0; m < n; ++m)
      if (!C.base().theta(l, m).isZero()) w(l) += C.base().theta(l, m).value(q) * xi[u(m)];
  Eigen::VectorXd y = toMatrix(C.metricAt(q), r).partialPivLu().solve(w);
  return {y.data(), y.data() + r};
}

CourantStructure changeFrame(const CourantStructure& C, const std::vector<ScalarField>& F) {
  const int r = C.rank();
  LodayStructure B = changeFrame(C.base(), F);
  std::vector<ScalarField> g(u(r * r));
  for (int a = 0; a < r; ++a)
    for (int b = a; b < r; ++b) {
      ScalarField s;
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
          if (!F[u(a * r + i)].isZero() && !F[u(b * r + j)].isZero() && !C.metric(i, j).isZero())
            s += F[u(a * r + i)] * F[u(b * r + j)] * C.metric(i, j);
      g[u(a * r + b)] = s;
      g[u(b * r + a)] = s;
    }
  return CourantStructure(std::move(B), std::move(g));
}

CourantStructure permuteFrame(const CourantStructure& C, const std::vector<int>& perm) {
  const int r = C.rank();
  LodayStructure B = permuteFrame(C.base(), perm);
  std::vector<ScalarField> g(u(r * r));
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) g[u(a * r + b)] = C.metric(perm[u(a)], perm[u(b)]);
  return CourantStructure(std::move(B), std::move(g));
}

CheckReport checkCourant(const CourantStructure& C, const SamplePlan& plan, const CheckOptions& opt) {
  const int r = C.rank(), n = C.dim();
  const LodayStructure& A = C.base();
  const double tol = opt.tolerance;
  ResidualTracker tp("pairing", tol), ts("symm", tol), tc("coanchor", tol);

  std::mt19937_64 gen(plan.seed() ^ 0x5bd1e9955bd1e995ULL);
  std::vector<std::array<Section, 3>> randomTriples;
  for (int t = 0; t < opt.randomTriples && r > 0; ++t)
    randomTriples.push_back({randomSection(r, n, gen), randomSection(r, n, gen), randomSection(r, n, gen)});
  const bool exhaustive = static_cast<long long>(r) * r * r <= opt.maxFrameTriples;

  for (const auto& q : plan.points()) {
    C.requireNondegenerate(q);
    if (r == 0) {
      for (auto* t : {&tp, &ts, &tc}) t->observe(0.0, q);
      continue;
    }
    const StructureJets S = StructureJets::at(A, q, 1);
    const std::vector<Jet> g = C.metricJets(q, 1);
    auto G = toMatrix(C.metricAt(q), r);
    auto lu = G.partialPivLu();
    auto rhoStarVal = [&](const std::vector<double>& xi) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(r);
      for (int idx : S.thetaNZ) w(idx / n) += S.theta[u(idx)].value() * xi[u(idx % n)];
      Eigen::VectorXd y = lu.solve(w);
      return std::vector<double>(y.data(), y.data() + r);
    };
    std::vector<SectionJet> E;
    for (int i = 0; i < r; ++i) {
      std::vector<double> v(u(r), 0.0);
      v[u(i)] = 1.0;
      E.push_back(constantSectionJet(v, n, 2));
    }
    std::vector<std::vector<double>> B(u(r * r));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) B[u(i * r + j)] = values(bracketJet(S, E[u(i)], E[u(j)]));
    auto gv = [&](int i, int j) { return g[u(i * r + j)].value(); };

    // pairing: rho(a)<b,c> = <[a,b],c> + <b,[a,c]>
    double worst = 0.0;
    auto framePairing = [&](int i, int j, int k) {
      double lhs = 0.0;
      for (int m = 0; m < n; ++m) lhs += S.T(i, m).value() * g[u(j * r + k)].partial(m);
      double r1 = 0.0, r2 = 0.0;
      for (int p = 0; p < r; ++p) {
        r1 += B[u(i * r + j)][u(p)] * gv(p, k);
        r2 += gv(j, p) * B[u(i * r + k)][u(p)];
      }
      const double d = lhs - r1 - r2;
      worst = std::max(worst, std::abs(d) / (1.0 + std::max({std::abs(lhs), std::abs(r1), std::abs(r2)})));
    };
    if (exhaustive) {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
          for (int k = 0; k < r; ++k) framePairing(i, j, k);
    } else {
      std::uniform_int_distribution<int> pick(0, r - 1);
      for (int t = 0; t < opt.maxFrameTriples; ++t) {
        const int i = pick(gen), j = pick(gen), k = pick(gen);
        framePairing(i, j, k);
      }
    }
    for (const auto& tri : randomTriples) {
      auto a = sectionJet(tri[0], q, 2), b = sectionJet(tri[1], q, 2), c = sectionJet(tri[2], q, 2);
      const Jet bc = pairingJet(g, b, c);
      auto ra = anchorJet(S, a);
      double lhs = 0.0;
      for (int m = 0; m < n; ++m) lhs += ra[u(m)].value() * bc.partial(m);
      auto ab = bracketJet(S, a, b), ac = bracketJet(S, a, c);
      const double r1 = pairingJet(g, ab, c).value(), r2 = pairingJet(g, b, ac).value();
      const double d = lhs - r1 - r2;
      worst = std::max(worst, std::abs(d) / (1.0 + std::max({std::abs(lhs), std::abs(r1), std::abs(r2)})));
    }
    tp.observe(worst, q);

    // symm: [a,b] + [b,a] = rho* d<a,b>
    worst = 0.0;
    std::vector<double> xi(u(n)), lhs(u(r)), diff(u(r));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        for (int m = 0; m < n; ++m) xi[u(m)] = g[u(i * r + j)].partial(m);
        auto rhs = rhoStarVal(xi);
        for (int l = 0; l < r; ++l) {
          lhs[u(l)] = B[u(i * r + j)][u(l)] + B[u(j * r + i)][u(l)];
          diff[u(l)] = lhs[u(l)] - rhs[u(l)];
        }
        worst = std::max(worst, relativeResidual(diff, {lhs, rhs}));
      }
    for (const auto& tri : randomTriples) {
      auto a = sectionJet(tri[0], q, 2), b = sectionJet(tri[1], q, 2);
      const Jet ab = pairingJet(g, a, b);
      for (int m = 0; m < n; ++m) xi[u(m)] = ab.partial(m);
      auto rhs = rhoStarVal(xi);
      auto x1 = values(bracketJet(S, a, b)), x2 = values(bracketJet(S, b, a));
      for (int l = 0; l < r; ++l) {
        lhs[u(l)] = x1[u(l)] + x2[u(l)];
        diff[u(l)] = lhs[u(l)] - rhs[u(l)];
      }
      worst = std::max(worst, relativeResidual(diff, {lhs, rhs}));
    }
    ts.observe(worst, q);

    // coanchor: lambda(dx_m, e_i, e_j) = <e_i, e_j> rho*(dx_m)
    worst = 0.0;
    for (int m = 0; m < n; ++m) {
      std::fill(xi.begin(), xi.end(), 0.0);
      xi[u(m)] = 1.0;
      auto rs = rhoStarVal(xi);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          std::vector<double> rhs(u(r));
          for (int l = 0; l < r; ++l) {
            lhs[u(l)] = S.L(m, i, j, l).value();
            rhs[u(l)] = gv(i, j) * rs[u(l)];
            diff[u(l)] = lhs[u(l)] - rhs[u(l)];
          }
          worst = std::max(worst, relativeResidual(diff, {lhs, rhs}));
        }
    }
    tc.observe(worst, q);
  }

  CheckReport rep;
  for (auto* t : {&tp, &ts, &tc}) rep.add(t->entry());
  rep.append(checkStructure(A, plan, opt));
  return rep;
}

double bilinearNorm(std::span<const double> gamma, std::span<const double> metric, int r, int samples, std::uint64_t seed) {
  if (samples < 1) throw PreconditionError("operator norm: sample count must be positive");
  if (r == 0) return 0.0;
  const Eigen::MatrixXd G = toMatrix(metric, r);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const auto& ev = es.eigenvalues();
  const double floor = 1e-12 * (1.0 + ev.cwiseAbs().maxCoeff());
  double sign = 0.0;
  if (ev.minCoeff() > floor) sign = 1.0;
  else if (ev.maxCoeff() < -floor) sign = -1.0;
  else throw IndefinitePairing();

  // Orthonormal coordinates: u = P ut with P = L^{-T}, output norm |L^T w|.
  Eigen::LLT<Eigen::MatrixXd> llt(sign * G);
  const Eigen::MatrixXd Lm = llt.matrixL();
  const Eigen::MatrixXd P = Lm.transpose().inverse();
  const Eigen::MatrixXd Lt = Lm.transpose();

  // T[c](a, b) = sum_k Lt(c,k) sum_ij Gamma_ij^k P(i,a) P(j,b)
  std::vector<Eigen::MatrixXd> Gk(u(r), Eigen::MatrixXd::Zero(r, r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) Gk[u(k)](i, j) = gamma[u((i * r + j) * r + k)];
  std::vector<Eigen::MatrixXd> T(u(r), Eigen::MatrixXd::Zero(r, r));
  for (int k = 0; k < r; ++k) {
    const Eigen::MatrixXd Mk = P.transpose() * Gk[u(k)] * P;
    for (int c = 0; c < r; ++c) T[u(c)] += Lt(c, k) * Mk;
  }
  double total = 0.0;
  for (const auto& Tc : T) total += Tc.squaredNorm();
  if (total == 0.0) return 0.0;

  std::mt19937_64 gen(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  auto randomUnit = [&]() {
    Eigen::VectorXd v(r);
    for (int i = 0; i < r; ++i) v(i) = N(gen);
    const double s = v.norm();
    return s > 0.0 ? Eigen::VectorXd(v / s) : Eigen::VectorXd(Eigen::VectorXd::Unit(r, 0));
  };
  // A_v(c, a) = sum_b T[c](a, b) v_b ; A_u(c, b) = sum_a T[c](a, b) u_a
  Eigen::MatrixXd A(r, r);
  auto topSingular = [&](Eigen::VectorXd& out) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    out = svd.matrixV().col(0);
    return svd.singularValues()(0);
  };
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    Eigen::VectorXd uu = randomUnit(), vv = randomUnit();
    Eigen::VectorXd w(r);
    for (int c = 0; c < r; ++c) w(c) = uu.dot(T[u(c)] * vv);
    double val = w.norm();
    for (int it = 0; it < 100; ++it) {
      for (int c = 0; c < r; ++c) A.row(c) = (T[u(c)] * vv).transpose();
      topSingular(uu);
      for (int c = 0; c < r; ++c) A.row(c) = (T[u(c)].transpose() * uu).transpose();
      const double next = topSingular(vv);
      const bool done = next - val <= 1e-15 * (1.0 + next);
      val = std::max(val, next);
      if (done) break;
    }
    best = std::max(best, val);
  }
  return best;
}

double bracketOperatorNorm(const CourantStructure& C, std::span<const double> q, int samples, std::uint64_t seed) {
  C.chart().requireInside(q);
  const int r = C.rank();
  std::vector<double> gamma(u(r * r * r), 0.0);
  for (std::size_t t = 0; t < gamma.size(); ++t)
    if (!C.base().gammaFields()[t].isZero()) gamma[t] = C.base().gammaFields()[t].value(q);
  return bilinearNorm(gamma, C.metricAt(q), r, samples, seed);
}

}  // namespace lk
