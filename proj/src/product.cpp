#include "lodaykit/product.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "lodaykit/errors.hpp"

namespace lk {

namespace {

std::size_t u(int i) { return static_cast<std::size_t>(i); }

std::vector<int> range(int from, int count) {
  std::vector<int> v(u(count));
  for (int i = 0; i < count; ++i) v[u(i)] = from + i;
  return v;
}

ScalarField polynomialIn(const std::vector<int>& coords, std::mt19937_64& gen) {
  ScalarField f = ScalarField::constant(uniformSigned(gen));
  for (int c : coords) f += uniformSigned(gen) * ScalarField::coordinate(c);
  for (std::size_t a = 0; a < coords.size(); ++a)
    for (std::size_t b = a; b < coords.size(); ++b)
      f += uniformSigned(gen) * (ScalarField::coordinate(coords[a]) * ScalarField::coordinate(coords[b]));
  return f;
}

}  // namespace

Chart productChart(const Chart& c1, const Chart& c2) {
  std::vector<std::string> names = c1.names();
  std::set<std::string> seen(names.begin(), names.end());
  for (const auto& s : c2.names())
    if (seen.count(s)) throw PreconditionError("direct product: coordinate label collision '" + s + "'");
  names.insert(names.end(), c2.names().begin(), c2.names().end());
  std::vector<Interval> box = c1.box();
  box.insert(box.end(), c2.box().begin(), c2.box().end());
  return Chart(std::move(names), std::move(box));
}

void FrameSplit::validate(int rank, int dim) const {
  auto partition = [](const std::vector<int>& a, const std::vector<int>& b, int total, const char* what) {
    std::vector<int> seen(u(total), 0);
    for (const auto* v : {&a, &b})
      for (int i : *v) {
        if (i < 0 || i >= total) throw PreconditionError(std::string("frame split: ") + what + " index out of range");
        if (seen[u(i)]++) throw PreconditionError(std::string("frame split: ") + what + " index repeated");
      }
    for (int s : seen)
      if (!s) throw PreconditionError(std::string("frame split: ") + what + " partition does not cover all indices");
  };
  partition(first, second, rank, "frame");
  if (hasCoordinateSplit()) partition(coords1, coords2, dim, "coordinate");
}

FrameSplit productSplit(int n1, int r1, int n2, int r2) {
  return {range(0, r1), range(r1, r2), range(0, n1), range(n1, n2)};
}

MixedCoanchor MixedCoanchor::zero(int n1, int r1, int n2, int r2) {
  MixedCoanchor L;
  L.n1 = n1;
  L.n2 = n2;
  L.r1 = r1;
  L.r2 = r2;
  const int r = r1 + r2;
  L.L1.resize(u(n1 * r2 * r1 * r));
  L.L2.resize(u(n1 * r2 * r2 * r));
  L.L3.resize(u(n2 * r1 * r1 * r));
  L.L4.resize(u(n2 * r1 * r2 * r));
  return L;
}

ScalarField& MixedCoanchor::at(int block, int m, int i, int j, int l) {
  const int r = r1 + r2;
  switch (block) {
    case 1: return L1[u(((m * r2 + i) * r1 + j) * r + l)];
    case 2: return L2[u(((m * r2 + i) * r2 + j) * r + l)];
    case 3: return L3[u(((m * r1 + i) * r1 + j) * r + l)];
    case 4: return L4[u(((m * r1 + i) * r2 + j) * r + l)];
    default: throw PreconditionError("mixed co-anchor: block must be 1..4");
  }
}

const ScalarField& MixedCoanchor::at(int block, int m, int i, int j, int l) const {
  return const_cast<MixedCoanchor*>(this)->at(block, m, i, j, l);
}

LodayStructure directProduct(const LodayStructure& A1, const LodayStructure& A2) {
  const int n1 = A1.dim(), n2 = A2.dim(), r1 = A1.rank(), r2 = A2.rank();
  LodayStructure A(productChart(A1.chart(), A2.chart()), r1 + r2);
  const std::vector<int> map1 = range(0, n1), map2 = range(n1, n2);
  auto block = [&](const LodayStructure& F, const std::vector<int>& map, int off, int moff) {
    const int r = F.rank(), n = F.dim();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        for (int k = 0; k < r; ++k)
          if (!F.gamma(i, j, k).isZero()) A.setGamma(off + i, off + j, off + k, F.gamma(i, j, k).embed(map));
    for (int i = 0; i < r; ++i)
      for (int m = 0; m < n; ++m)
        if (!F.theta(i, m).isZero()) A.setTheta(off + i, moff + m, F.theta(i, m).embed(map));
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j)
          for (int l = 0; l < r; ++l)
            if (!F.lambda(m, i, j, l).isZero())
              A.setLambda(moff + m, off + i, off + j, off + l, F.lambda(m, i, j, l).embed(map));
  };
  block(A1, map1, 0, 0);
  block(A2, map2, r1, n1);
  return A;
}

LodayStructure directDecomposition(const LodayStructure& A1, const LodayStructure& A2, const MixedCoanchor& L) {
  const int n1 = A1.dim(), n2 = A2.dim(), r1 = A1.rank(), r2 = A2.rank(), r = r1 + r2;
  if (L.n1 != n1 || L.n2 != n2 || L.r1 != r1 || L.r2 != r2 || L.L1.size() != u(n1 * r2 * r1 * r) ||
      L.L2.size() != u(n1 * r2 * r2 * r) || L.L3.size() != u(n2 * r1 * r1 * r) || L.L4.size() != u(n2 * r1 * r2 * r))
    throw PreconditionError("direct decomposition: mixed co-anchor shape does not match the factors");
  LodayStructure A = directProduct(A1, A2);
  for (int l = 0; l < r; ++l) {
    for (int m = 0; m < n1; ++m) {
      for (int i = 0; i < r2; ++i) {
        for (int j = 0; j < r1; ++j) A.setLambda(m, r1 + i, j, l, L.at(1, m, i, j, l));
        for (int j = 0; j < r2; ++j) A.setLambda(m, r1 + i, r1 + j, l, L.at(2, m, i, j, l));
      }
    }
    for (int m = 0; m < n2; ++m) {
      for (int i = 0; i < r1; ++i) {
        for (int j = 0; j < r1; ++j) A.setLambda(n1 + m, i, j, l, L.at(3, m, i, j, l));
        for (int j = 0; j < r2; ++j) A.setLambda(n1 + m, i, r1 + j, l, L.at(4, m, i, j, l));
      }
    }
  }
  return A;
}

CourantStructure directProduct(const CourantStructure& C1, const CourantStructure& C2) {
  const int n1 = C1.dim(), n2 = C2.dim(), r1 = C1.rank(), r2 = C2.rank(), r = r1 + r2;
  const std::vector<int> map1 = range(0, n1), map2 = range(n1, n2);
  MixedCoanchor L = MixedCoanchor::zero(n1, r1, n2, r2);
  for (int m = 0; m < n1; ++m) {
    Section rs = rhoStar(C1, OneForm::coordinate(n1, m));
    for (int i = 0; i < r2; ++i)
      for (int j = 0; j < r2; ++j) {
        if (C2.metric(i, j).isZero()) continue;
        const ScalarField g = C2.metric(i, j).embed(map2);
        for (int l = 0; l < r1; ++l)
          if (!rs[l].isZero()) L.at(2, m, i, j, l) = g * rs[l].embed(map1);
      }
  }
  for (int m = 0; m < n2; ++m) {
    Section rs = rhoStar(C2, OneForm::coordinate(n2, m));
    for (int i = 0; i < r1; ++i)
      for (int j = 0; j < r1; ++j) {
        if (C1.metric(i, j).isZero()) continue;
        const ScalarField g = C1.metric(i, j).embed(map1);
        for (int l = 0; l < r2; ++l)
          if (!rs[l].isZero()) L.at(3, m, i, j, r1 + l) = g * rs[l].embed(map2);
      }
  }
  LodayStructure A = directDecomposition(C1.base(), C2.base(), L);
  std::vector<ScalarField> g(u(r * r));
  for (int i = 0; i < r1; ++i)
    for (int j = 0; j < r1; ++j) g[u(i * r + j)] = C1.metric(i, j).embed(map1);
  for (int i = 0; i < r2; ++i)
    for (int j = 0; j < r2; ++j) g[u((r1 + i) * r + r1 + j)] = C2.metric(i, j).embed(map2);
  return CourantStructure(std::move(A), std::move(g));
}

Classification classifyDecomposition(const LodayStructure& A, const FrameSplit& split, const SamplePlan& plan,
                                     double tolerance, int randomPairs) {
  const int r = A.rank(), n = A.dim();
  split.validate(r, n);
  const std::vector<int> all = range(0, n);
  const std::vector<int>& c1 = split.hasCoordinateSplit() ? split.coords1 : all;
  const std::vector<int>& c2 = split.hasCoordinateSplit() ? split.coords2 : all;

  std::mt19937_64 gen(plan.seed() ^ 0x2545f4914f6cdd1dULL);
  auto factorSections = [&](const std::vector<int>& frames, const std::vector<int>& coords) {
    std::vector<Section> out;
    for (int i : frames) out.push_back(Section::frame(r, i));
    for (int t = 0; t < randomPairs * 2 && !frames.empty(); ++t) {
      Section s = Section::zero(r);
      for (int i : frames) s.comps[u(i)] = polynomialIn(coords, gen);
      out.push_back(std::move(s));
    }
    return out;
  };
  const std::vector<Section> S1 = factorSections(split.first, c1), S2 = factorSections(split.second, c2);

  ResidualTracker t1("cond-semi-matching-1", tolerance), t2("cond-semi-matching-2", tolerance),
      t12("cond-E1-E2", tolerance), t21("cond-E2-E1", tolerance);
  // Within-factor residual: components outside the factor, plus dependence on the other factor's coordinates.
  auto outside = [&](const SectionJet& w, const std::vector<int>& own, const std::vector<int>& other,
                     const std::vector<int>& otherCoords) {
    double res = 0.0;
    for (int l : other) res = std::max(res, std::abs(w[u(l)].value()));
    if (split.hasCoordinateSplit())
      for (int l : own)
        for (int m : otherCoords) res = std::max(res, std::abs(w[u(l)].partial(m)));
    return res;
  };
  for (const auto& q : plan.points()) {
    const StructureJets S = StructureJets::at(A, q, 1);
    std::vector<SectionJet> J1, J2;
    for (const auto& s : S1) J1.push_back(sectionJet(s, q, 2));
    for (const auto& s : S2) J2.push_back(sectionJet(s, q, 2));
    double a1 = 0.0, a2 = 0.0, a12 = 0.0, a21 = 0.0;
    for (const auto& x : J1)
      for (const auto& y : J1) a1 = std::max(a1, outside(bracketJet(S, x, y), split.first, split.second, c2));
    for (const auto& x : J2)
      for (const auto& y : J2) a2 = std::max(a2, outside(bracketJet(S, x, y), split.second, split.first, c1));
    for (const auto& x : J1)
      for (const auto& y : J2) {
        a12 = std::max(a12, maxAbs(values(bracketJet(S, x, y))));
        a21 = std::max(a21, maxAbs(values(bracketJet(S, y, x))));
      }
    t1.observe(a1, q);
    t2.observe(a2, q);
    t12.observe(a12, q);
    t21.observe(a21, q);
  }

  const CheckEntry e1 = t1.entry(), e2 = t2.entry(), e12 = t12.entry(), e21 = t21.entry();
  auto cumulative = [&](const std::string& name, std::initializer_list<const CheckEntry*> parts) {
    CheckEntry e{name, -1.0, tolerance, {}, true};
    for (const auto* p : parts) {
      const bool worse = std::isnan(p->maxResidual) || p->maxResidual > e.maxResidual;
      if (worse && !std::isnan(e.maxResidual)) {
        e.maxResidual = p->maxResidual;
        e.worstPoint = p->worstPoint;
      }
      e.pass = e.pass && p->pass;
    }
    return e;
  };
  Classification out;
  out.table.add(cumulative("semi-matching-1", {&e1}));
  out.table.add(cumulative("semi-matching-2", {&e2}));
  out.table.add(cumulative("matching", {&e1, &e2}));
  out.table.add(cumulative("semi-direct", {&e1, &e2, &e12}));
  out.table.add(cumulative("direct", {&e1, &e2, &e12, &e21}));
  for (const auto* e : {&e1, &e2, &e12, &e21}) out.table.add(*e);

  out.label = "none";
  for (const char* l : {"direct", "semi-direct", "matching", "semi-matching-1", "semi-matching-2"})
    if (out.table.at(l).pass) {
      out.label = l;
      break;
    }
  return out;
}

}  // namespace lk
