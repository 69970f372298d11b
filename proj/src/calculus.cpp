#include "lodaykit/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "lodaykit/errors.hpp"

namespace lk {

namespace {
void sameDim(int a, int b) {
  if (a != b) throw PreconditionError("fields live on charts of different dimension");
}
std::size_t u(int i) { return static_cast<std::size_t>(i); }
}  // namespace

VectorField VectorField::coordinate(int n, int m) {
  VectorField v = zero(n);
  v.comps[u(m)] = ScalarField::constant(1.0);
  return v;
}

OneForm OneForm::coordinate(int n, int m) {
  OneForm w = zero(n);
  w.comps[u(m)] = ScalarField::constant(1.0);
  return w;
}

OneForm OneForm::exact(const ScalarField& f, int n) {
  OneForm w = zero(n);
  for (int m = 0; m < n; ++m) w.comps[u(m)] = f.partial(m);
  return w;
}

ThreeForm::ThreeForm(int n) : n_(n) {}

void ThreeForm::set(int i, int j, int k, const ScalarField& f) {
  if (!(0 <= i && i < j && j < k && k < n_)) throw PreconditionError("three-form: indices must be strictly increasing and in range");
  if (f.isZero()) {
    comps_.erase({i, j, k});
  } else {
    comps_[{i, j, k}] = f;
  }
}

ScalarField ThreeForm::component(int i, int j, int k) const {
  if (i == j || j == k || i == k) return ScalarField::constant(0.0);
  std::array<int, 3> idx{i, j, k};
  int sign = 1;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b + 1 < 3 - a; ++b)
      if (idx[u(b)] > idx[u(b + 1)]) {
        std::swap(idx[u(b)], idx[u(b + 1)]);
        sign = -sign;
      }
  auto it = comps_.find(idx);
  if (it == comps_.end()) return ScalarField::constant(0.0);
  return sign > 0 ? it->second : -it->second;
}

VectorField vfLieBracket(const VectorField& X, const VectorField& Y) {
  sameDim(X.dim(), Y.dim());
  const int n = X.dim();
  VectorField Z = VectorField::zero(n);
  for (int m = 0; m < n; ++m) {
    ScalarField s;
    for (int j = 0; j < n; ++j) {
      s = s + X[j] * Y[m].partial(j);
      s = s - Y[j] * X[m].partial(j);
    }
    Z.comps[u(m)] = s;
  }
  return Z;
}

OneForm lieDerivativeOneForm(const VectorField& X, const OneForm& beta) {
  sameDim(X.dim(), beta.dim());
  const int n = X.dim();
  OneForm out = OneForm::zero(n);
  for (int j = 0; j < n; ++j) {
    ScalarField s;
    for (int m = 0; m < n; ++m) {
      s = s + X[m] * beta[j].partial(m);
      s = s + beta[m] * X[m].partial(j);
    }
    out.comps[u(j)] = s;
  }
  return out;
}

OneForm iotaD(const VectorField& Y, const OneForm& alpha) {
  sameDim(Y.dim(), alpha.dim());
  const int n = Y.dim();
  OneForm out = OneForm::zero(n);
  for (int j = 0; j < n; ++j) {
    ScalarField s;
    for (int m = 0; m < n; ++m) s = s + Y[m] * (alpha[j].partial(m) - alpha[m].partial(j));
    out.comps[u(j)] = s;
  }
  return out;
}

OneForm contract2(const ThreeForm& eta, const VectorField& X, const VectorField& Y) {
  sameDim(X.dim(), eta.dim());
  sameDim(Y.dim(), eta.dim());
  const int n = eta.dim();
  OneForm out = OneForm::zero(n);
  for (int k = 0; k < n; ++k) {
    ScalarField s;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        ScalarField c = eta.component(i, j, k);
        if (!c.isZero()) s = s + X[i] * Y[j] * c;
      }
    out.comps[u(k)] = s;
  }
  return out;
}

CheckEntry isClosed(const OneForm& omega, const SamplePlan& plan, double tolerance) {
  const int n = omega.dim();
  ResidualTracker tr("closed", tolerance);
  for (const auto& q : plan.points()) {
    std::vector<Jet> J;
    for (int i = 0; i < n; ++i) J.push_back(omega[i].jet(q, 1));
    double r = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) r = std::max(r, std::abs(J[u(j)].partial(i) - J[u(i)].partial(j)));
    tr.observe(r, q);
  }
  return tr.entry();
}

CheckEntry isClosed(const ThreeForm& eta, const SamplePlan& plan, double tolerance) {
  const int n = eta.dim();
  ResidualTracker tr("closed", tolerance);
  for (const auto& q : plan.points()) {
    std::map<std::array<int, 3>, Jet> J;
    for (const auto& [idx, f] : eta.stored()) J.emplace(idx, f.jet(q, 1));
    auto d = [&](int m, int i, int j, int k) {
      std::array<int, 3> idx{i, j, k};
      auto it = J.find(idx);
      return it == J.end() ? 0.0 : it->second.partial(m);
    };
    double r = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        for (int k = j + 1; k < n; ++k)
          for (int l = k + 1; l < n; ++l)
            r = std::max(r, std::abs(d(i, j, k, l) - d(j, i, k, l) + d(k, i, j, l) - d(l, i, j, k)));
    tr.observe(r, q);
  }
  return tr.entry();
}

}  // namespace lk
