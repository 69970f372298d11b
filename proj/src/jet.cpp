#include "lodaykit/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace lk {

namespace {

void enumerate(int vars, int deg, std::vector<int>& cur, int pos, std::vector<std::vector<int>>& out) {
  if (pos == vars - 1) {
    cur[static_cast<std::size_t>(pos)] = deg;
    out.push_back(cur);
    return;
  }
  for (int k = deg; k >= 0; --k) {
    cur[static_cast<std::size_t>(pos)] = k;
    enumerate(vars, deg - k, cur, pos + 1, out);
  }
}

std::unique_ptr<JetLayout> build(int vars, int order) {
  auto L = std::make_unique<JetLayout>();
  L->vars = vars;
  L->order = order;
  for (int d = 0; d <= order; ++d) {
    if (vars == 0) {
      if (d == 0) L->exps.emplace_back();
      continue;
    }
    std::vector<int> cur(static_cast<std::size_t>(vars), 0);
    enumerate(vars, d, cur, 0, L->exps);
  }
  for (int d = 0; d <= order; ++d) {
    std::size_t c = 0;
    for (const auto& e : L->exps) {
      int s = 0;
      for (int v : e) s += v;
      if (s <= d) ++c;
    }
    L->sizeUpTo.push_back(static_cast<int>(c));
  }
  L->size = static_cast<int>(L->exps.size());
  for (const auto& e : L->exps) {
    int s = 0;
    for (int v : e) s += v;
    L->degree.push_back(s);
  }
  std::map<std::vector<int>, int> index;
  for (int i = 0; i < L->size; ++i) index[L->exps[static_cast<std::size_t>(i)]] = i;
  for (int d = 0; d <= order; ++d) {
    for (int a = 0; a < L->size; ++a) {
      for (int b = 0; b < L->size; ++b) {
        if (L->degree[static_cast<std::size_t>(a)] + L->degree[static_cast<std::size_t>(b)] != d) continue;
        std::vector<int> e(static_cast<std::size_t>(vars));
        for (int v = 0; v < vars; ++v)
          e[static_cast<std::size_t>(v)] = L->exps[static_cast<std::size_t>(a)][static_cast<std::size_t>(v)] +
                                           L->exps[static_cast<std::size_t>(b)][static_cast<std::size_t>(v)];
        L->products.push_back({a, b, index.at(e)});
      }
    }
    L->productsUpTo.push_back(L->products.size());
  }
  L->deriv.resize(static_cast<std::size_t>(vars));
  if (order >= 1) {
    for (int m = 0; m < vars; ++m) {
      for (int s = 0; s < L->size; ++s) {
        auto e = L->exps[static_cast<std::size_t>(s)];
        int k = e[static_cast<std::size_t>(m)];
        if (k == 0) continue;
        e[static_cast<std::size_t>(m)] -= 1;
        L->deriv[static_cast<std::size_t>(m)].push_back({s, index.at(e), static_cast<double>(k)});
      }
    }
  }
  return L;
}

}  // namespace

int JetLayout::indexOf(std::span<const int> e) const {
  for (int i = 0; i < size; ++i) {
    const auto& x = exps[static_cast<std::size_t>(i)];
    if (std::equal(x.begin(), x.end(), e.begin(), e.end())) return i;
  }
  return -1;
}

const JetLayout& JetLayout::get(int vars, int order) {
  if (vars < 0 || order < 0) throw std::invalid_argument("jet layout: negative size");
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<JetLayout>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{vars, order}];
  if (!slot) slot = build(vars, order);
  return *slot;
}

Jet::Jet(const JetLayout& layout) : layout_(&layout), c_(static_cast<std::size_t>(layout.size), 0.0), deg_(-1) {}

Jet Jet::constant(const JetLayout& layout, double v) {
  Jet j(layout);
  j.c_[0] = v;
  j.deg_ = v == 0.0 ? -1 : 0;
  return j;
}

Jet Jet::variable(const JetLayout& layout, int m, double v) {
  Jet j = constant(layout, v);
  if (layout.order >= 1) {
    j.c_[static_cast<std::size_t>(layout.unit(m))] = 1.0;
    j.deg_ = 1;
  }
  return j;
}

void Jet::recomputeDegree() {
  deg_ = -1;
  for (int i = layout_->size - 1; i >= 0; --i) {
    if (c_[static_cast<std::size_t>(i)] != 0.0) {
      deg_ = layout_->degree[static_cast<std::size_t>(i)];
      return;
    }
  }
}

double Jet::partial(int m) const {
  if (order() < 1) throw std::logic_error("jet: partial needs order >= 1");
  return c_[static_cast<std::size_t>(layout_->unit(m))];
}

Jet Jet::derivative(int m) const {
  if (order() < 1) throw std::logic_error("jet: derivative needs order >= 1");
  Jet out(JetLayout::get(vars(), order() - 1));
  if (deg_ <= 0) return out;
  for (const auto& t : layout_->deriv[static_cast<std::size_t>(m)])
    out.c_[static_cast<std::size_t>(t.dst)] += t.factor * c_[static_cast<std::size_t>(t.src)];
  out.deg_ = std::min(deg_ - 1, out.order());
  return out;
}

Jet Jet::truncated(int ord) const {
  if (ord >= order()) return *this;
  Jet out(JetLayout::get(vars(), ord));
  std::copy_n(c_.begin(), out.layout_->size, out.c_.begin());
  out.deg_ = std::min(deg_, ord);
  return out;
}

std::vector<double> Jet::gradient() const {
  std::vector<double> g(static_cast<std::size_t>(vars()));
  for (int m = 0; m < vars(); ++m) g[static_cast<std::size_t>(m)] = partial(m);
  return g;
}

Jet& Jet::operator+=(const Jet& o) { return addScaled(o, 1.0); }
Jet& Jet::operator-=(const Jet& o) { return addScaled(o, -1.0); }

Jet& Jet::operator*=(double s) {
  if (s == 0.0) {
    std::fill(c_.begin(), c_.end(), 0.0);
    deg_ = -1;
    return *this;
  }
  for (auto& v : c_) v *= s;
  return *this;
}

Jet& Jet::addScaled(const Jet& o, double s) {
  if (o.deg_ < 0 || s == 0.0) return *this;
  const int top = std::min(o.deg_, order());
  const std::size_t n = static_cast<std::size_t>(top < 0 ? 0 : layout_->sizeUpTo[static_cast<std::size_t>(top)]);
  for (std::size_t i = 0; i < n; ++i) c_[i] += s * o.c_[i];
  deg_ = std::max(deg_, top);
  return *this;
}

Jet& Jet::addProduct(const Jet& a, const Jet& b) { return addProduct(a, b, 1.0); }

Jet& Jet::addProduct(const Jet& a, const Jet& b, double s) {
  if (a.deg_ < 0 || b.deg_ < 0 || s == 0.0) return *this;
  if (a.deg_ == 0) return addScaled(b, s * a.c_[0]);
  if (b.deg_ == 0) return addScaled(a, s * b.c_[0]);
  const int top = std::min(order(), a.deg_ + b.deg_);
  const auto& P = layout_->products;
  const std::size_t end = layout_->productsUpTo[static_cast<std::size_t>(top)];
  const auto& D = layout_->degree;
  for (std::size_t t = 0; t < end; ++t) {
    const auto& tr = P[t];
    if (D[static_cast<std::size_t>(tr.a)] > a.deg_ || D[static_cast<std::size_t>(tr.b)] > b.deg_) continue;
    c_[static_cast<std::size_t>(tr.c)] += s * a.c_[static_cast<std::size_t>(tr.a)] * b.c_[static_cast<std::size_t>(tr.b)];
  }
  deg_ = std::max(deg_, top);
  return *this;
}

Jet operator*(const Jet& a, const Jet& b) {
  const JetLayout& L = a.order() <= b.order() ? a.layout() : b.layout();
  Jet out(L);
  out.addProduct(a, b);
  return out;
}

Jet Jet::operator-() const {
  Jet out = *this;
  for (auto& v : out.c_) v = -v;
  return out;
}

Jet Jet::compose(std::span<const double> taylor) const {
  const int K = order();
  if (deg_ <= 0) return constant(*layout_, taylor[0]);
  Jet h = *this;
  h.c_[0] = 0.0;
  Jet r = constant(*layout_, taylor[static_cast<std::size_t>(K)]);
  for (int k = K - 1; k >= 0; --k) {
    Jet next = constant(*layout_, taylor[static_cast<std::size_t>(k)]);
    next.addProduct(r, h);
    r = std::move(next);
  }
  return r;
}

Jet reciprocal(const Jet& a) {
  const double x = a.value();
  std::vector<double> t(static_cast<std::size_t>(a.order() + 1));
  double p = 1.0 / x;
  for (auto& v : t) {
    v = p;
    p *= -1.0 / x;
  }
  return a.compose(t);
}

Jet sqrt(const Jet& a) {
  const double x = a.value();
  std::vector<double> t(static_cast<std::size_t>(a.order() + 1));
  double binom = 1.0;
  const double root = std::sqrt(x);
  double xp = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    t[k] = root * binom / xp;
    binom *= (0.5 - static_cast<double>(k)) / static_cast<double>(k + 1);
    xp *= x;
  }
  return a.compose(t);
}

namespace {
Jet trig(const Jet& a, int shift) {
  const double x = a.value();
  const double cyc[4] = {std::sin(x), std::cos(x), -std::sin(x), -std::cos(x)};
  std::vector<double> t(static_cast<std::size_t>(a.order() + 1));
  double fact = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    t[k] = cyc[(k + static_cast<std::size_t>(shift)) % 4] / fact;
  }
  return a.compose(t);
}
}  // namespace

Jet sin(const Jet& a) { return trig(a, 0); }
Jet cos(const Jet& a) { return trig(a, 1); }

Jet exp(const Jet& a) {
  const double e = std::exp(a.value());
  std::vector<double> t(static_cast<std::size_t>(a.order() + 1));
  double fact = 1.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    t[k] = e / fact;
  }
  return a.compose(t);
}

Jet powi(const Jet& a, int k) {
  if (k < 0) return reciprocal(powi(a, -k));
  Jet result = Jet::constant(a.layout(), 1.0);
  Jet base = a;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

}  // namespace lk
