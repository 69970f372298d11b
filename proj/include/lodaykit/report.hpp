#pragma once

#include <span>
#include <string>
#include <vector>

#include "lodaykit/chart.hpp"

namespace lk {

struct CheckEntry {
  std::string name;
  double maxResidual = 0.0;
  double tolerance = 0.0;
  Point worstPoint;
  bool pass = true;
};

class CheckReport {
 public:
  std::vector<CheckEntry> entries;

  bool allPass() const;
  const CheckEntry* find(const std::string& name) const;
  const CheckEntry& at(const std::string& name) const;
  void add(CheckEntry e) { entries.push_back(std::move(e)); }
  void append(const CheckReport& other, const std::string& prefix = "");
};

/// Running maximum of a residual over evaluation points.
class ResidualTracker {
 public:
  ResidualTracker(std::string name, double tolerance) : name_(std::move(name)), tol_(tolerance) {}
  void observe(double residual, std::span<const double> q);
  CheckEntry entry() const;
  double max() const { return max_; }

 private:
  std::string name_;
  double tol_;
  double max_ = 0.0;
  Point worst_;
  bool nan_ = false;
};

/// max|diff| / (1 + max magnitude over the compared terms).
double relativeResidual(std::span<const double> diff, std::initializer_list<std::span<const double>> terms);
double maxAbs(std::span<const double> v);

}  // namespace lk
