#include "lodaykit/loday.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <mutex>

#include "lodaykit/errors.hpp"

namespace lk {

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

void requireRank(int expected, int got, const char* what) {
  if (expected != got) throw PreconditionError(std::string(what) + ": section rank does not match structure rank");
}

int minOrder(const SectionJet& s) {
  int k = 1 << 20;
  for (const auto& j : s) k = std::min(k, j.order());
  return k;
}

/// Section whose components are computed together by one pointwise callback.
Section lazySection(int r, std::function<SectionJet(std::span<const double>, int)> fn) {
  // Components are usually requested one after another at the same point; keep the last result.
  struct State {
    std::function<SectionJet(std::span<const double>, int)> fn;
    std::mutex mutex;
    std::vector<double> q;
    int order = -1;
    SectionJet value;
  };
  auto shared = std::make_shared<State>();
  shared->fn = std::move(fn);
  Section s = Section::zero(r);
  for (int k = 0; k < r; ++k)
    s.comps[u(k)] = ScalarField(std::make_shared<LambdaNode>([shared, k](std::span<const double> q, int order) {
      std::lock_guard lock(shared->mutex);
      if (order != shared->order || !std::equal(q.begin(), q.end(), shared->q.begin(), shared->q.end())) {
        shared->value = shared->fn(q, order);
        shared->q.assign(q.begin(), q.end());
        shared->order = order;
      }
      return shared->value[u(k)];
    }));
  return s;
}

}  // namespace

LodayStructure::LodayStructure(Chart chart, int rank) : chart_(std::move(chart)), rank_(rank) {
  if (rank < 0) throw PreconditionError("loday structure: negative rank");
  const std::size_t r = u(rank), n = u(chart_.dim());
  gamma_.resize(r * r * r);
  theta_.resize(r * n);
  lambda_.resize(n * r * r * r);
}

std::size_t LodayStructure::gi(int i, int j, int k) const { return u((i * rank_ + j) * rank_ + k); }
std::size_t LodayStructure::ti(int i, int m) const { return u(i * dim() + m); }
std::size_t LodayStructure::li(int m, int i, int j, int l) const { return u(((m * rank_ + i) * rank_ + j) * rank_ + l); }

Section Section::frame(int r, int i) {
  Section s = zero(r);
  s.comps[u(i)] = ScalarField::constant(1.0);
  return s;
}

Section Section::constant(const std::vector<double>& v) {
  Section s = zero(static_cast<int>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k) s.comps[k] = ScalarField::constant(v[k]);
  return s;
}

Section Section::scaled(const ScalarField& f) const {
  Section s = *this;
  for (auto& c : s.comps) c = f * c;
  return s;
}

Section operator+(const Section& a, const Section& b) {
  if (a.rank() != b.rank()) throw PreconditionError("section sum: rank mismatch");
  Section s = a;
  for (std::size_t k = 0; k < s.comps.size(); ++k) s.comps[k] = a.comps[k] + b.comps[k];
  return s;
}

Section operator-(const Section& a, const Section& b) {
  if (a.rank() != b.rank()) throw PreconditionError("section difference: rank mismatch");
  Section s = a;
  for (std::size_t k = 0; k < s.comps.size(); ++k) s.comps[k] = a.comps[k] - b.comps[k];
  return s;
}

int Derivation::rank() const { return static_cast<int>(std::lround(std::sqrt(static_cast<double>(matrix.size())))); }

Derivation Derivation::zero(int r, int n) { return {std::vector<ScalarField>(u(r * r)), VectorField::zero(n)}; }

void requireSameChart(const LodayStructure& A, const Section& s) { requireRank(A.rank(), s.rank(), "section"); }

// ---------------------------------------------------------------------------

StructureJets StructureJets::at(const LodayStructure& A, std::span<const double> q, int order) {
  StructureJets S;
  S.n = A.dim();
  S.r = A.rank();
  S.order = order;
  const JetLayout& L = JetLayout::get(S.n, order);
  auto fill = [&](const std::vector<ScalarField>& src, std::vector<Jet>& dst, std::vector<int>& nz) {
    dst.assign(src.size(), Jet(L));
    for (std::size_t t = 0; t < src.size(); ++t) {
      if (src[t].isZero()) continue;
      dst[t] = src[t].jet(q, order);
      if (!dst[t].isZero()) nz.push_back(static_cast<int>(t));
    }
  };
  fill(A.gammaFields(), S.gamma, S.gammaNZ);
  fill(A.thetaFields(), S.theta, S.thetaNZ);
  fill(A.lambdaFields(), S.lambda, S.lambdaNZ);
  return S;
}

SectionJet sectionJet(const Section& s, std::span<const double> q, int order) {
  const JetLayout& L = JetLayout::get(static_cast<int>(q.size()), order);
  SectionJet out(s.comps.size(), Jet(L));
  for (std::size_t k = 0; k < s.comps.size(); ++k)
    if (!s.comps[k].isZero()) out[k] = s.comps[k].jet(q, order);
  return out;
}

SectionJet constantSectionJet(std::span<const double> v, int n, int order) {
  const JetLayout& L = JetLayout::get(n, order);
  SectionJet out;
  out.reserve(v.size());
  for (double x : v) out.push_back(x == 0.0 ? Jet(L) : Jet::constant(L, x));
  return out;
}

SectionJet bracketJet(const StructureJets& S, const SectionJet& a, const SectionJet& b) {
  const int r = S.r, n = S.n;
  requireRank(r, static_cast<int>(a.size()), "bracket");
  requireRank(r, static_cast<int>(b.size()), "bracket");
  if (r == 0) return {};
  const int K = std::min({minOrder(a), minOrder(b), S.order + 1}) - 1;
  if (K < 0) throw std::logic_error("bracket: input jets must have order >= 1");
  const JetLayout& L = JetLayout::get(n, K);
  SectionJet out(u(r), Jet(L));

  // Gamma term
  std::vector<Jet> ab(u(r * r));
  std::vector<char> abDone(u(r * r), 0);
  for (int idx : S.gammaNZ) {
    const int k = idx % r, ij = idx / r, i = ij / r, j = ij % r;
    if (a[u(i)].isZero() || b[u(j)].isZero()) continue;
    if (!abDone[u(ij)]) {
      ab[u(ij)] = Jet(L);
      ab[u(ij)].addProduct(a[u(i)], b[u(j)]);
      abDone[u(ij)] = 1;
    }
    out[u(k)].addProduct(ab[u(ij)], S.gamma[u(idx)]);
  }

  // Anchor terms
  std::vector<Jet> ra(u(n), Jet(L)), rb(u(n), Jet(L));
  for (int idx : S.thetaNZ) {
    const int i = idx / n, m = idx % n;
    if (!a[u(i)].isZero()) ra[u(m)].addProduct(a[u(i)], S.theta[u(idx)]);
    if (!b[u(i)].isZero()) rb[u(m)].addProduct(b[u(i)], S.theta[u(idx)]);
  }
  std::vector<Jet> da(u(r * n));
  std::vector<char> daDone(u(r * n), 0);
  auto dA = [&](int i, int m) -> const Jet& {
    const std::size_t t = u(i * n + m);
    if (!daDone[t]) {
      da[t] = a[u(i)].derivative(m);
      daDone[t] = 1;
    }
    return da[t];
  };
  for (int k = 0; k < r; ++k)
    for (int m = 0; m < n; ++m) {
      if (!ra[u(m)].isZero() && !b[u(k)].isZero()) out[u(k)].addProduct(ra[u(m)], b[u(k)].derivative(m));
      if (!rb[u(m)].isZero() && !a[u(k)].isZero()) out[u(k)].addProduct(rb[u(m)], dA(k, m), -1.0);
    }

  // Co-anchor term: b^j (d_m a^i) lambda_{mij}^l
  Jet tmp(L);
  for (int idx : S.lambdaNZ) {
    const int l = idx % r, j = (idx / r) % r, i = (idx / (r * r)) % r, m = idx / (r * r * r);
    if (b[u(j)].isZero() || a[u(i)].isZero()) continue;
    const Jet& d = dA(i, m);
    if (d.isZero()) continue;
    tmp = Jet(L);
    tmp.addProduct(b[u(j)], d);
    out[u(l)].addProduct(tmp, S.lambda[u(idx)]);
  }
  return out;
}

std::vector<Jet> anchorJet(const StructureJets& S, const SectionJet& a) {
  requireRank(S.r, static_cast<int>(a.size()), "anchor");
  const int K = std::min(minOrder(a), S.order);
  const JetLayout& L = JetLayout::get(S.n, K);
  std::vector<Jet> X(u(S.n), Jet(L));
  for (int idx : S.thetaNZ) {
    const int i = idx / S.n, m = idx % S.n;
    X[u(m)].addProduct(a[u(i)], S.theta[u(idx)]);
  }
  return X;
}

SectionJet coanchorJet(const StructureJets& S, const std::vector<Jet>& xi, const SectionJet& a, const SectionJet& b) {
  const int r = S.r;
  requireRank(r, static_cast<int>(a.size()), "co-anchor");
  requireRank(r, static_cast<int>(b.size()), "co-anchor");
  if (r == 0) return {};
  const int K = std::min({minOrder(a), minOrder(b), minOrder(xi), S.order});
  const JetLayout& L = JetLayout::get(S.n, K);
  SectionJet out(u(r), Jet(L));
  Jet t1(L), t2(L);
  for (int idx : S.lambdaNZ) {
    const int l = idx % r, j = (idx / r) % r, i = (idx / (r * r)) % r, m = idx / (r * r * r);
    if (xi[u(m)].isZero() || a[u(i)].isZero() || b[u(j)].isZero()) continue;
    t1 = Jet(L);
    t1.addProduct(xi[u(m)], a[u(i)]);
    t2 = Jet(L);
    t2.addProduct(t1, b[u(j)]);
    out[u(l)].addProduct(t2, S.lambda[u(idx)]);
  }
  return out;
}

SectionJet applyDerivationJet(const std::vector<Jet>& D, const std::vector<Jet>& X, const SectionJet& c) {
  const int r = static_cast<int>(c.size());
  if (D.size() != u(r * r)) throw PreconditionError("derivation: matrix size does not match section rank");
  if (r == 0) return {};
  const int n = c[0].vars();
  const int K = std::min({minOrder(c) - 1, minOrder(D), minOrder(X)});
  if (K < 0) throw std::logic_error("derivation: section jet must have order >= 1");
  const JetLayout& L = JetLayout::get(n, K);
  SectionJet out(u(r), Jet(L));
  for (int j = 0; j < r; ++j) {
    if (c[u(j)].isZero()) continue;
    for (int k = 0; k < r; ++k) out[u(k)].addProduct(c[u(j)], D[u(j * r + k)]);
  }
  for (int k = 0; k < r; ++k) {
    if (c[u(k)].isZero()) continue;
    for (int m = 0; m < n; ++m)
      if (!X[u(m)].isZero()) out[u(k)].addProduct(X[u(m)], c[u(k)].derivative(m));
  }
  return out;
}

std::vector<Jet> solveJets(std::vector<Jet> G, std::vector<Jet> rhs, int r) {
  auto at = [&](int i, int j) -> Jet& { return G[u(i * r + j)]; };
  for (int c = 0; c < r; ++c) {
    int p = c;
    for (int i = c + 1; i < r; ++i)
      if (std::abs(at(i, c).value()) > std::abs(at(p, c).value())) p = i;
    if (std::abs(at(p, c).value()) < kEpsGuard) throw PreconditionError("linear solve: singular matrix");
    if (p != c) {
      for (int j = 0; j < r; ++j) std::swap(at(p, j), at(c, j));
      std::swap(rhs[u(p)], rhs[u(c)]);
    }
    const Jet inv = reciprocal(at(c, c));
    for (int i = c + 1; i < r; ++i) {
      if (at(i, c).isZero()) continue;
      const Jet f = at(i, c) * inv;
      for (int j = c; j < r; ++j)
        if (!at(c, j).isZero()) at(i, j).addProduct(f, at(c, j), -1.0);
      if (!rhs[u(c)].isZero()) rhs[u(i)].addProduct(f, rhs[u(c)], -1.0);
    }
  }
  std::vector<Jet> y(u(r));
  for (int i = r - 1; i >= 0; --i) {
    Jet s = rhs[u(i)];
    for (int j = i + 1; j < r; ++j)
      if (!at(i, j).isZero() && !y[u(j)].isZero()) s.addProduct(at(i, j), y[u(j)], -1.0);
    y[u(i)] = s * reciprocal(at(i, i));
  }
  return y;
}

std::vector<double> values(const SectionJet& s) {
  std::vector<double> v;
  v.reserve(s.size());
  for (const auto& j : s) v.push_back(j.value());
  return v;
}

SectionJet truncate(const SectionJet& s, int order) {
  SectionJet out;
  out.reserve(s.size());
  for (const auto& j : s) out.push_back(j.truncated(order));
  return out;
}

// ---------------------------------------------------------------------------

Section bracketSections(const LodayStructure& A, const Section& alpha, const Section& beta) {
  requireSameChart(A, alpha);
  requireSameChart(A, beta);
  auto SA = std::make_shared<const LodayStructure>(A);
  return lazySection(A.rank(), [SA, alpha, beta](std::span<const double> q, int order) {
    StructureJets S = StructureJets::at(*SA, q, order);
    return bracketJet(S, sectionJet(alpha, q, order + 1), sectionJet(beta, q, order + 1));
  });
}

Section jacobiator(const LodayStructure& A, const Section& alpha, const Section& beta, const Section& gamma) {
  return bracketSections(A, bracketSections(A, alpha, beta), gamma) +
         bracketSections(A, beta, bracketSections(A, alpha, gamma)) -
         bracketSections(A, alpha, bracketSections(A, beta, gamma));
}

Section symmetrization(const LodayStructure& A, const Section& alpha, const Section& beta) {
  return bracketSections(A, alpha, beta) + bracketSections(A, beta, alpha);
}

VectorField anchorApply(const LodayStructure& A, const Section& alpha) {
  requireSameChart(A, alpha);
  VectorField X = VectorField::zero(A.dim());
  for (int m = 0; m < A.dim(); ++m) {
    ScalarField s;
    for (int i = 0; i < A.rank(); ++i) s += alpha[i] * A.theta(i, m);
    X.comps[u(m)] = s;
  }
  return X;
}

Section coanchorApply(const LodayStructure& A, const OneForm& xi, const Section& alpha, const Section& beta) {
  requireSameChart(A, alpha);
  requireSameChart(A, beta);
  if (xi.dim() != A.dim()) throw PreconditionError("co-anchor: one-form dimension does not match chart");
  Section out = Section::zero(A.rank());
  for (int m = 0; m < A.dim(); ++m) {
    if (xi[m].isZero()) continue;
    for (int i = 0; i < A.rank(); ++i) {
      if (alpha[i].isZero()) continue;
      for (int j = 0; j < A.rank(); ++j) {
        if (beta[j].isZero()) continue;
        ScalarField w = xi[m] * alpha[i] * beta[j];
        for (int l = 0; l < A.rank(); ++l)
          if (!A.lambda(m, i, j, l).isZero()) out.comps[u(l)] += w * A.lambda(m, i, j, l);
      }
    }
  }
  return out;
}

Derivation sectionDerivation(const LodayStructure& A, const Section& sigma) {
  const int r = A.rank();
  Derivation D = Derivation::zero(r, A.dim());
  for (int j = 0; j < r; ++j) {
    Section col = bracketSections(A, sigma, Section::frame(r, j));
    for (int k = 0; k < r; ++k) D.matrix[u(j * r + k)] = col[k];
  }
  D.symbol = anchorApply(A, sigma);
  return D;
}

Section applyDerivation(const Derivation& D, const Section& c) {
  const int r = c.rank();
  if (D.matrix.size() != u(r * r)) throw PreconditionError("derivation: matrix size does not match section rank");
  Section out = Section::zero(r);
  for (int k = 0; k < r; ++k) {
    ScalarField s;
    for (int j = 0; j < r; ++j)
      if (!c[j].isZero()) s += c[j] * D.at(j, k);
    if (!c[k].isZero())
      for (int m = 0; m < D.symbol.dim(); ++m)
        if (!D.symbol[m].isZero()) s += D.symbol[m] * c[k].partial(m);
    out.comps[u(k)] = s;
  }
  return out;
}

Section lieDerivativeOfBracket(const LodayStructure& A, const Derivation& D, const Section& alpha, const Section& beta) {
  return applyDerivation(D, bracketSections(A, alpha, beta)) - bracketSections(A, applyDerivation(D, alpha), beta) -
         bracketSections(A, alpha, applyDerivation(D, beta));
}

// ---------------------------------------------------------------------------

double uniformSigned(std::mt19937_64& gen) { return std::uniform_real_distribution<double>(-1.0, 1.0)(gen); }

ScalarField randomPolynomial(int n, std::mt19937_64& gen, int degree) {
  ScalarField f = ScalarField::constant(uniformSigned(gen));
  if (degree >= 1)
    for (int i = 0; i < n; ++i) f += uniformSigned(gen) * ScalarField::coordinate(i);
  if (degree >= 2)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) f += uniformSigned(gen) * (ScalarField::coordinate(i) * ScalarField::coordinate(j));
  return f;
}

Section randomSection(int r, int n, std::mt19937_64& gen, int degree) {
  Section s = Section::zero(r);
  for (auto& c : s.comps) c = randomPolynomial(n, gen, degree);
  return s;
}

CheckReport checkStructure(const LodayStructure& A, const SamplePlan& plan, const CheckOptions& opt) {
  const int r = A.rank(), n = A.dim();
  const double tol = opt.tolerance;
  ResidualTracker jac("jacobi", tol), ta("a", tol), tb("b", tol), tc("c", tol), trs("remark-rho-S", tol),
      trl("remark-rho-lambda", tol);

  std::mt19937_64 gen(plan.seed() ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::array<Section, 3>> randomTriples;
  for (int t = 0; t < opt.randomTriples && r > 0; ++t)
    randomTriples.push_back({randomSection(r, n, gen), randomSection(r, n, gen), randomSection(r, n, gen)});

  const long long allTriples = static_cast<long long>(r) * r * r;
  const bool exhaustive = allTriples <= opt.maxFrameTriples;

  std::vector<double> diff, t1, t2, t3;
  for (const auto& q : plan.points()) {
    if (r == 0) {
      for (auto* t : {&jac, &ta, &tb, &tc, &trs, &trl}) t->observe(0.0, q);
      continue;
    }
    const StructureJets S = StructureJets::at(A, q, 1);
    std::vector<SectionJet> E;
    for (int i = 0; i < r; ++i) {
      std::vector<double> v(u(r), 0.0);
      v[u(i)] = 1.0;
      E.push_back(constantSectionJet(v, n, 2));
    }
    // B[i][j] = [e_i, e_j] to order 1
    std::vector<SectionJet> B(u(r * r));
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) B[u(i * r + j)] = bracketJet(S, E[u(i)], E[u(j)]);
    auto Bv = [&](int i, int j, int k) { return B[u(i * r + j)][u(k)].value(); };

    // jacobi on frame triples
    double worst = 0.0;
    auto frameJacobi = [&](int i, int j, int k) {
      auto x1 = values(bracketJet(S, B[u(i * r + j)], E[u(k)]));
      auto x2 = values(bracketJet(S, E[u(j)], B[u(i * r + k)]));
      auto x3 = values(bracketJet(S, E[u(i)], B[u(j * r + k)]));
      diff.assign(u(r), 0.0);
      for (int l = 0; l < r; ++l) diff[u(l)] = x1[u(l)] + x2[u(l)] - x3[u(l)];
      worst = std::max(worst, relativeResidual(diff, {x1, x2, x3}));
    };
    if (exhaustive) {
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
          for (int k = 0; k < r; ++k) frameJacobi(i, j, k);
    } else {
      std::uniform_int_distribution<int> pick(0, r - 1);
      for (int t = 0; t < opt.maxFrameTriples; ++t) {
        const int i = pick(gen), j = pick(gen), k = pick(gen);
        frameJacobi(i, j, k);
      }
    }
    for (const auto& tri : randomTriples) {
      auto a = sectionJet(tri[0], q, 2), b = sectionJet(tri[1], q, 2), c = sectionJet(tri[2], q, 2);
      auto x1 = values(bracketJet(S, bracketJet(S, a, b), c));
      auto x2 = values(bracketJet(S, b, bracketJet(S, a, c)));
      auto x3 = values(bracketJet(S, a, bracketJet(S, b, c)));
      diff.assign(u(r), 0.0);
      for (int l = 0; l < r; ++l) diff[u(l)] = x1[u(l)] + x2[u(l)] - x3[u(l)];
      worst = std::max(worst, relativeResidual(diff, {x1, x2, x3}));
    }
    jac.observe(worst, q);

    // (a) rho([e_i,e_j]) = [rho e_i, rho e_j]
    worst = 0.0;
    t1.assign(u(n), 0.0);
    t2.assign(u(n), 0.0);
    diff.assign(u(n), 0.0);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        for (int m = 0; m < n; ++m) {
          double lhs = 0.0, rhs = 0.0;
          for (int k = 0; k < r; ++k) lhs += Bv(i, j, k) * S.T(k, m).value();
          for (int l = 0; l < n; ++l) rhs += S.T(i, l).value() * S.T(j, m).partial(l) - S.T(j, l).value() * S.T(i, m).partial(l);
          t1[u(m)] = lhs;
          t2[u(m)] = rhs;
          diff[u(m)] = lhs - rhs;
        }
        worst = std::max(worst, relativeResidual(diff, {t1, t2}));
      }
    ta.observe(worst, q);

    // (b) [e_i, lambda(dx_m, e_j, e_k)] = lambda(L_{rho e_i} dx_m, e_j, e_k) + lambda(dx_m, [e_i,e_j], e_k)
    //     + lambda(dx_m, e_j, [e_i,e_k])
    worst = 0.0;
    const JetLayout& L1 = JetLayout::get(n, 1);
    t1.assign(u(r), 0.0);
    t2.assign(u(r), 0.0);
    diff.assign(u(r), 0.0);
    for (int m = 0; m < n; ++m)
      for (int j = 0; j < r; ++j)
        for (int k = 0; k < r; ++k) {
          SectionJet Lam(u(r), Jet(L1));
          for (int l = 0; l < r; ++l) Lam[u(l)] = S.L(m, j, k, l);
          for (int i = 0; i < r; ++i) {
            auto lhs = values(bracketJet(S, E[u(i)], Lam));
            for (int l = 0; l < r; ++l) {
              double rhs = 0.0;
              for (int s = 0; s < n; ++s) rhs += S.T(i, m).partial(s) * S.L(s, j, k, l).value();
              for (int p = 0; p < r; ++p)
                rhs += Bv(i, j, p) * S.L(m, p, k, l).value() + Bv(i, k, p) * S.L(m, j, p, l).value();
              t1[u(l)] = lhs[u(l)];
              t2[u(l)] = rhs;
              diff[u(l)] = lhs[u(l)] - rhs;
            }
            worst = std::max(worst, relativeResidual(diff, {t1, t2}));
          }
        }
    tb.observe(worst, q);

    // (c) [lambda(dx_m, e_i, e_j), e_k] = (rho(e_k) x_m) S(e_i,e_j) - lambda(dx_m, S(e_i,e_j), e_k)
    worst = 0.0;
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          SectionJet Lam(u(r), Jet(L1));
          for (int l = 0; l < r; ++l) Lam[u(l)] = S.L(m, i, j, l);
          std::vector<double> Sij(u(r));
          for (int p = 0; p < r; ++p) Sij[u(p)] = Bv(i, j, p) + Bv(j, i, p);
          for (int k = 0; k < r; ++k) {
            auto lhs = values(bracketJet(S, Lam, E[u(k)]));
            const double th = S.T(k, m).value();
            for (int l = 0; l < r; ++l) {
              double rhs = th * Sij[u(l)];
              for (int p = 0; p < r; ++p) rhs -= Sij[u(p)] * S.L(m, p, k, l).value();
              t1[u(l)] = lhs[u(l)];
              t2[u(l)] = rhs;
              diff[u(l)] = lhs[u(l)] - rhs;
            }
            worst = std::max(worst, relativeResidual(diff, {t1, t2}));
          }
        }
    tc.observe(worst, q);

    // remarks: rho(S(e_i,e_j)) = 0 and rho o lambda = 0
    worst = 0.0;
    diff.assign(u(n), 0.0);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        for (int m = 0; m < n; ++m) {
          double v = 0.0;
          for (int k = 0; k < r; ++k) v += (Bv(i, j, k) + Bv(j, i, k)) * S.T(k, m).value();
          diff[u(m)] = v;
        }
        worst = std::max(worst, relativeResidual(diff, {diff}));
      }
    trs.observe(worst, q);
    worst = 0.0;
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          for (int s = 0; s < n; ++s) {
            double v = 0.0;
            for (int l = 0; l < r; ++l) v += S.L(m, i, j, l).value() * S.T(l, s).value();
            diff[u(s)] = v;
          }
          worst = std::max(worst, relativeResidual(diff, {diff}));
        }
    trl.observe(worst, q);
  }

  CheckReport rep;
  for (auto* t : {&jac, &ta, &tb, &tc, &trs, &trl}) rep.add(t->entry());
  return rep;
}

// ---------------------------------------------------------------------------

LodayStructure permuteFrame(const LodayStructure& A, const std::vector<int>& perm) {
  const int r = A.rank(), n = A.dim();
  if (static_cast<int>(perm.size()) != r) throw PreconditionError("permuteFrame: permutation size does not match rank");
  std::vector<int> inv(u(r), -1);
  for (int a = 0; a < r; ++a) {
    if (perm[u(a)] < 0 || perm[u(a)] >= r || inv[u(perm[u(a)])] >= 0) throw PreconditionError("permuteFrame: not a permutation");
    inv[u(perm[u(a)])] = a;
  }
  LodayStructure B(A.chart(), r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b)
      for (int c = 0; c < r; ++c) B.setGamma(a, b, c, A.gamma(perm[u(a)], perm[u(b)], perm[u(c)]));
  for (int a = 0; a < r; ++a)
    for (int m = 0; m < n; ++m) B.setTheta(a, m, A.theta(perm[u(a)], m));
  for (int m = 0; m < n; ++m)
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b)
        for (int c = 0; c < r; ++c) B.setLambda(m, a, b, c, A.lambda(m, perm[u(a)], perm[u(b)], perm[u(c)]));
  return B;
}

LodayStructure changeFrame(const LodayStructure& A, const std::vector<ScalarField>& F) {
  const int r = A.rank(), n = A.dim();
  if (F.size() != u(r * r)) throw PreconditionError("changeFrame: frame matrix must be rank x rank");
  LodayStructure B(A.chart(), r);
  std::vector<Section> E;
  for (int a = 0; a < r; ++a) {
    Section s = Section::zero(r);
    for (int i = 0; i < r; ++i) s.comps[u(i)] = F[u(a * r + i)];
    E.push_back(std::move(s));
  }
  for (int a = 0; a < r; ++a)
    for (int m = 0; m < n; ++m) {
      ScalarField s;
      for (int i = 0; i < r; ++i)
        if (!F[u(a * r + i)].isZero()) s += F[u(a * r + i)] * A.theta(i, m);
      B.setTheta(a, m, s);
    }
  // Components in the new frame: old-frame vector w = F^T y.
  auto Fshared = std::make_shared<const std::vector<ScalarField>>(F);
  auto newComponents = [Fshared, r](std::span<const double> q, int order, SectionJet w) {
    const JetLayout& L = JetLayout::get(static_cast<int>(q.size()), order);
    std::vector<Jet> Ft(u(r * r), Jet(L));
    for (int a = 0; a < r; ++a)
      for (int i = 0; i < r; ++i)
        if (!(*Fshared)[u(a * r + i)].isZero()) Ft[u(i * r + a)] = (*Fshared)[u(a * r + i)].jet(q, order);
    return solveJets(std::move(Ft), truncate(w, order), r);
  };
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) {
      Section br = bracketSections(A, E[u(a)], E[u(b)]);
      Section out = lazySection(r, [br, newComponents](std::span<const double> q, int order) {
        return newComponents(q, order, sectionJet(br, q, order));
      });
      for (int c = 0; c < r; ++c) B.setGamma(a, b, c, out[c]);
    }
  auto SA = std::make_shared<const LodayStructure>(A);
  for (int m = 0; m < n; ++m)
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) {
        Section out = lazySection(r, [SA, Fshared, newComponents, m, a, b, r](std::span<const double> q, int order) {
          const JetLayout& L = JetLayout::get(static_cast<int>(q.size()), order);
          SectionJet w(u(r), Jet(L));
          for (int i = 0; i < r; ++i) {
            const ScalarField& fa = (*Fshared)[u(a * r + i)];
            if (fa.isZero()) continue;
            const Jet ja = fa.jet(q, order);
            for (int j = 0; j < r; ++j) {
              const ScalarField& fb = (*Fshared)[u(b * r + j)];
              if (fb.isZero()) continue;
              const Jet jab = ja * fb.jet(q, order);
              for (int l = 0; l < r; ++l)
                if (!SA->lambda(m, i, j, l).isZero()) w[u(l)].addProduct(jab, SA->lambda(m, i, j, l).jet(q, order));
            }
          }
          return newComponents(q, order, std::move(w));
        });
        for (int c = 0; c < r; ++c) B.setLambda(m, a, b, c, out[c]);
      }
  return B;
}

}  // namespace lk
