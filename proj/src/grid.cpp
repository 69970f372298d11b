#include "lodaykit/grid.hpp"

#include <algorithm>
#include <cmath>

#include "lodaykit/errors.hpp"

namespace lk {

std::vector<double> differentiate1d(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  std::vector<double> d(n, 0.0);
  if (n < 4) throw PreconditionError("grid derivative needs at least 4 nodes");
  if (n == 4) {
    const double s = 1.0 / (6.0 * h);
    d[0] = s * (-11 * f[0] + 18 * f[1] - 9 * f[2] + 2 * f[3]);
    d[1] = s * (-2 * f[0] - 3 * f[1] + 6 * f[2] - f[3]);
    d[2] = s * (f[0] - 6 * f[1] + 3 * f[2] + 2 * f[3]);
    d[3] = s * (-2 * f[0] + 9 * f[1] - 18 * f[2] + 11 * f[3]);
    return d;
  }
  const double s = 1.0 / (12.0 * h);
  d[0] = s * (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]);
  d[1] = s * (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]);
  for (std::size_t i = 2; i + 2 < n; ++i) d[i] = s * (f[i - 2] - 8 * f[i - 1] + 8 * f[i + 1] - f[i + 2]);
  const std::size_t a = n - 1;
  d[a - 1] = s * (3 * f[a] + 10 * f[a - 1] - 18 * f[a - 2] + 6 * f[a - 3] - f[a - 4]);
  d[a] = s * (25 * f[a] - 48 * f[a - 1] + 36 * f[a - 2] - 16 * f[a - 3] + 3 * f[a - 4]);
  return d;
}

namespace {

std::vector<double> differentiateAxis(const Lattice& L, const std::vector<double>& t, int axis) {
  const auto& nodes = L.nodes();
  std::size_t stride = 1;
  for (int a = L.dim() - 1; a > axis; --a) stride *= static_cast<std::size_t>(nodes[static_cast<std::size_t>(a)]);
  const std::size_t len = static_cast<std::size_t>(nodes[static_cast<std::size_t>(axis)]);
  const std::size_t block = stride * len;
  std::vector<double> out(t.size());
  std::vector<double> line(len);
  const double h = L.spacing(axis);
  for (std::size_t base = 0; base < t.size(); base += block) {
    for (std::size_t off = 0; off < stride; ++off) {
      for (std::size_t i = 0; i < len; ++i) line[i] = t[base + off + i * stride];
      const auto d = differentiate1d(line, h);
      for (std::size_t i = 0; i < len; ++i) out[base + off + i * stride] = d[i];
    }
  }
  return out;
}

}  // namespace

GridNode::GridNode(Lattice lattice, std::vector<double> table) : lattice_(std::move(lattice)), table_(std::move(table)) {
  if (table_.size() != lattice_.total()) throw PreconditionError("grid field: table size does not match lattice");
  for (int n : lattice_.nodes())
    if (n < kMinGridNodes) throw PreconditionError("grid field: need at least 4 nodes per axis");
  for (double v : table_)
    if (!std::isfinite(v)) throw PreconditionError("grid field: non-finite sample");
}

const std::vector<double>& GridNode::derivativeTable(std::span<const int> e) const {
  std::vector<int> key(e.begin(), e.end());
  bool zero = true;
  for (int k : key) zero = zero && k == 0;
  if (zero) return table_;
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& [k, t] : cache_)
    if (k == key) return *t;
  std::vector<double> cur = table_;
  for (int a = 0; a < static_cast<int>(key.size()); ++a)
    for (int r = 0; r < key[static_cast<std::size_t>(a)]; ++r) cur = differentiateAxis(lattice_, cur, a);
  cache_.emplace_back(key, std::make_shared<const std::vector<double>>(std::move(cur)));
  return *cache_.back().second;
}

double GridNode::interpolate(const std::vector<double>& t, std::span<const double> q) const {
  const int n = lattice_.dim();
  std::vector<int> base(static_cast<std::size_t>(n));
  std::vector<std::array<double, 4>> w(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    const auto& iv = lattice_.box()[static_cast<std::size_t>(a)];
    const int N = lattice_.nodes()[static_cast<std::size_t>(a)];
    const double h = lattice_.spacing(a);
    const double s = (q[static_cast<std::size_t>(a)] - iv.lo) / h;
    int i0 = static_cast<int>(std::floor(s)) - 1;
    i0 = std::clamp(i0, 0, N - 4);
    const double u = s - i0;
    // Lagrange weights on nodes 0..3 at local coordinate u.
    auto& wa = w[static_cast<std::size_t>(a)];
    wa[0] = -(u - 1) * (u - 2) * (u - 3) / 6.0;
    wa[1] = u * (u - 2) * (u - 3) / 2.0;
    wa[2] = -u * (u - 1) * (u - 3) / 2.0;
    wa[3] = u * (u - 1) * (u - 2) / 6.0;
    base[static_cast<std::size_t>(a)] = i0;
  }
  const std::size_t corners = std::size_t{1} << (2 * n);
  double sum = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < corners; ++c) {
    double weight = 1.0;
    std::size_t cc = c;
    for (int a = 0; a < n; ++a) {
      const int k = static_cast<int>(cc & 3u);
      cc >>= 2;
      weight *= w[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
      idx[static_cast<std::size_t>(a)] = base[static_cast<std::size_t>(a)] + k;
    }
    if (weight != 0.0) sum += weight * t[lattice_.flat(idx)];
  }
  return sum;
}

Jet GridNode::jet(std::span<const double> q, int order) const {
  if (static_cast<int>(q.size()) != lattice_.dim()) throw DomainError("grid field: point dimension mismatch");
  if (!lattice_.contains(q, 1e-9)) throw DomainError("grid field: point " + formatPoint(Point(q.begin(), q.end())) + " outside lattice hull");
  if (order > kGridMaxOrder) throw PreconditionError("grid field: derivative order above 3 requested");
  const JetLayout& L = JetLayout::get(lattice_.dim(), order);
  Jet j(L);
  for (int m = 0; m < L.size; ++m) {
    const auto& e = L.exps[static_cast<std::size_t>(m)];
    double fact = 1.0;
    for (int k : e)
      for (int i = 2; i <= k; ++i) fact *= i;
    j[m] = interpolate(derivativeTable(e), q) / fact;
  }
  j.touch();
  return j;
}

ScalarField gridField(const Lattice& lattice, std::vector<double> table) {
  if (table.size() != lattice.total()) throw PreconditionError("grid field: table size does not match lattice");
  for (int n : lattice.nodes())
    if (n < kMinGridNodes) throw PreconditionError("grid field: need at least 4 nodes per axis");
  bool uniform = !table.empty();
  for (double v : table) uniform = uniform && v == table.front();
  if (uniform) return ScalarField::constant(table.front());
  return ScalarField(std::make_shared<GridNode>(lattice, std::move(table)));
}

ScalarField sampleOnLattice(const ScalarField& f, const Lattice& lattice) {
  if (auto c = f.constantValue(); c && *c == 0.0) return f;
  std::vector<double> t(lattice.total());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = f.value(lattice.point(i));
  return gridField(lattice, std::move(t));
}

const GridNode* asGrid(const ScalarField& f) { return dynamic_cast<const GridNode*>(f.node().get()); }

}  // namespace lk
