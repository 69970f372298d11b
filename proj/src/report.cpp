#include "lodaykit/report.hpp"

#include <cmath>
#include <stdexcept>

namespace lk {

bool CheckReport::allPass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

const CheckEntry* CheckReport::find(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

const CheckEntry& CheckReport::at(const std::string& name) const {
  if (const auto* e = find(name)) return *e;
  throw std::out_of_range("report has no entry '" + name + "'");
}

void CheckReport::append(const CheckReport& other, const std::string& prefix) {
  for (auto e : other.entries) {
    e.name = prefix + e.name;
    entries.push_back(std::move(e));
  }
}

void ResidualTracker::observe(double r, std::span<const double> q) {
  if (std::isnan(r)) {
    if (!nan_) worst_.assign(q.begin(), q.end());
    nan_ = true;
    return;
  }
  if (worst_.empty() || r > max_) {
    max_ = std::max(max_, r);
    worst_.assign(q.begin(), q.end());
  }
}

CheckEntry ResidualTracker::entry() const {
  CheckEntry e;
  e.name = name_;
  e.maxResidual = nan_ ? std::nan("") : max_;
  e.tolerance = tol_;
  e.worstPoint = worst_;
  e.pass = !nan_ && max_ <= tol_;
  return e;
}

double maxAbs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double relativeResidual(std::span<const double> diff, std::initializer_list<std::span<const double>> terms) {
  double scale = 0.0;
  for (auto t : terms) scale = std::max(scale, maxAbs(t));
  return maxAbs(diff) / (1.0 + scale);
}

}  // namespace lk
