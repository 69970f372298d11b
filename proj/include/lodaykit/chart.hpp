#pragma once
/**
 * @file chart.hpp
 * @brief Coordinate boxes, deterministic sample plans and regular lattices.
 */

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lk {

using Point = std::vector<double>;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

class Chart {
 public:
  Chart() = default;
  Chart(std::vector<std::string> names, std::vector<Interval> box);
  /// Coordinates x1..xn on [lo, hi]^n.
  static Chart cube(int n, double lo = -1.0, double hi = 1.0, const std::string& prefix = "x");

  int dim() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Interval>& box() const { return box_; }
  bool contains(std::span<const double> q, double slack = 1e-12) const;
  /// Throws DomainError when q is outside the box.
  void requireInside(std::span<const double> q) const;
  Point center() const;
  /// Largest Euclidean distance from p to a corner of the box.
  double radius(std::span<const double> p) const;
  bool operator==(const Chart& o) const;

 private:
  std::vector<std::string> names_;
  std::vector<Interval> box_;
};

/// Scrambled Halton points mapped into the box with a 5% inset from each face.
class SamplePlan {
 public:
  static constexpr double kInset = 0.05;
  SamplePlan(const Chart& chart, std::uint64_t seed, int count);
  const std::vector<Point>& points() const { return points_; }
  std::uint64_t seed() const { return seed_; }
  int count() const { return static_cast<int>(points_.size()); }

 private:
  std::uint64_t seed_;
  std::vector<Point> points_;
};

/// Regular lattice over a box; row-major with the first axis slowest.
class Lattice {
 public:
  Lattice() = default;
  Lattice(std::vector<Interval> box, std::vector<int> nodes);
  int dim() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Interval>& box() const { return box_; }
  const std::vector<int>& nodes() const { return nodes_; }
  std::size_t total() const;
  double spacing(int axis) const;
  double maxSpacing() const;
  double coord(int axis, int i) const;
  std::vector<int> multiIndex(std::size_t flat) const;
  std::size_t flat(std::span<const int> idx) const;
  Point point(std::size_t flat) const;
  bool contains(std::span<const double> q, double slack = 1e-12) const;
  bool operator==(const Lattice& o) const { return box_.size() == o.box_.size() && nodes_ == o.nodes_ && sameBox(o); }

 private:
  bool sameBox(const Lattice& o) const;
  std::vector<Interval> box_;
  std::vector<int> nodes_;
};

}  // namespace lk
