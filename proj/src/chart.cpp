#include "lodaykit/chart.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "lodaykit/errors.hpp"

namespace lk {

SingularEvaluation::SingularEvaluation(const std::string& n, const std::vector<double>& p)
    : std::runtime_error("singular evaluation at " + n + " near " + formatPoint(p)), node(n), point(p) {}

ParseError::ParseError(const std::string& msg, int l, int c)
    : std::runtime_error(msg + " (line " + std::to_string(l) + ", column " + std::to_string(c) + ")"), line(l), column(c) {}

std::string formatPoint(const std::vector<double>& q) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (std::size_t i = 0; i < q.size(); ++i) os << (i ? ", " : "") << q[i];
  os << ')';
  return os.str();
}

Chart::Chart(std::vector<std::string> names, std::vector<Interval> box) : names_(std::move(names)), box_(std::move(box)) {
  if (names_.empty()) throw PreconditionError("chart: dimension must be at least 1");
  if (names_.size() != box_.size()) throw PreconditionError("chart: names and box differ in length");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw PreconditionError("chart: empty coordinate label");
    if (!seen.insert(n).second) throw PreconditionError("chart: duplicate coordinate label '" + n + "'");
  }
  for (const auto& iv : box_)
    if (!(iv.hi > iv.lo) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
      throw PreconditionError("chart: every interval needs positive finite length");
}

Chart Chart::cube(int n, double lo, double hi, const std::string& prefix) {
  std::vector<std::string> names;
  for (int i = 1; i <= n; ++i) names.push_back(prefix + std::to_string(i));
  return Chart(std::move(names), std::vector<Interval>(static_cast<std::size_t>(n), Interval{lo, hi}));
}

bool Chart::contains(std::span<const double> q, double slack) const {
  if (q.size() != box_.size()) return false;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double s = slack * (1.0 + box_[i].width());
    if (!(q[i] >= box_[i].lo - s && q[i] <= box_[i].hi + s)) return false;
  }
  return true;
}

void Chart::requireInside(std::span<const double> q) const {
  if (q.size() != box_.size())
    throw DomainError("point has " + std::to_string(q.size()) + " coordinates, chart has " + std::to_string(box_.size()));
  if (!contains(q)) throw DomainError("point " + formatPoint(Point(q.begin(), q.end())) + " outside chart box");
}

Point Chart::center() const {
  Point c;
  for (const auto& iv : box_) c.push_back(iv.mid());
  return c;
}

double Chart::radius(std::span<const double> p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < box_.size(); ++i) {
    const double d = std::max(std::abs(box_[i].lo - p[i]), std::abs(box_[i].hi - p[i]));
    s += d * d;
  }
  return std::sqrt(s);
}

bool Chart::operator==(const Chart& o) const {
  if (names_ != o.names_ || box_.size() != o.box_.size()) return false;
  for (std::size_t i = 0; i < box_.size(); ++i)
    if (box_[i].lo != o.box_[i].lo || box_[i].hi != o.box_[i].hi) return false;
  return true;
}

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

double radicalInverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

double unitDouble(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

}  // namespace

SamplePlan::SamplePlan(const Chart& chart, std::uint64_t seed, int count) : seed_(seed) {
  if (count <= 0) throw PreconditionError("sample plan: count must be positive");
  const int n = chart.dim();
  if (n > static_cast<int>(std::size(kPrimes))) throw PreconditionError("sample plan: dimension too large");
  std::mt19937_64 gen(seed);
  std::vector<double> shift(static_cast<std::size_t>(n));
  for (auto& s : shift) s = unitDouble(gen);
  const std::uint64_t skip = 1 + (gen() % 1024);
  for (int k = 0; k < count; ++k) {
    Point q(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
      double u = radicalInverse(skip + static_cast<std::uint64_t>(k), kPrimes[d]) + shift[static_cast<std::size_t>(d)];
      u -= std::floor(u);
      const auto& iv = chart.box()[static_cast<std::size_t>(d)];
      q[static_cast<std::size_t>(d)] = iv.lo + iv.width() * (kInset + (1.0 - 2.0 * kInset) * u);
    }
    points_.push_back(std::move(q));
  }
}

Lattice::Lattice(std::vector<Interval> box, std::vector<int> nodes) : box_(std::move(box)), nodes_(std::move(nodes)) {
  if (box_.size() != nodes_.size() || box_.empty()) throw PreconditionError("lattice: box and node counts differ");
  for (std::size_t i = 0; i < box_.size(); ++i) {
    if (nodes_[i] < 2) throw PreconditionError("lattice: need at least 2 nodes per axis");
    if (!(box_[i].hi > box_[i].lo)) throw PreconditionError("lattice: empty interval");
  }
}

std::size_t Lattice::total() const {
  std::size_t t = 1;
  for (int n : nodes_) t *= static_cast<std::size_t>(n);
  return t;
}

double Lattice::spacing(int axis) const {
  const auto a = static_cast<std::size_t>(axis);
  return box_[a].width() / (nodes_[a] - 1);
}

double Lattice::maxSpacing() const {
  double h = 0.0;
  for (int a = 0; a < dim(); ++a) h = std::max(h, spacing(a));
  return h;
}

double Lattice::coord(int axis, int i) const {
  const auto a = static_cast<std::size_t>(axis);
  if (i == nodes_[a] - 1) return box_[a].hi;
  return box_[a].lo + i * spacing(axis);
}

std::vector<int> Lattice::multiIndex(std::size_t f) const {
  std::vector<int> idx(nodes_.size());
  for (std::size_t a = nodes_.size(); a-- > 0;) {
    idx[a] = static_cast<int>(f % static_cast<std::size_t>(nodes_[a]));
    f /= static_cast<std::size_t>(nodes_[a]);
  }
  return idx;
}

std::size_t Lattice::flat(std::span<const int> idx) const {
  std::size_t f = 0;
  for (std::size_t a = 0; a < nodes_.size(); ++a) f = f * static_cast<std::size_t>(nodes_[a]) + static_cast<std::size_t>(idx[a]);
  return f;
}

Point Lattice::point(std::size_t f) const {
  const auto idx = multiIndex(f);
  Point q(idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a) q[a] = coord(static_cast<int>(a), idx[a]);
  return q;
}

bool Lattice::contains(std::span<const double> q, double slack) const {
  if (q.size() != box_.size()) return false;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double s = slack * (1.0 + box_[i].width());
    if (!(q[i] >= box_[i].lo - s && q[i] <= box_[i].hi + s)) return false;
  }
  return true;
}

bool Lattice::sameBox(const Lattice& o) const {
  for (std::size_t i = 0; i < box_.size(); ++i)
    if (box_[i].lo != o.box_[i].lo || box_[i].hi != o.box_[i].hi) return false;
  return true;
}

}  // namespace lk
