#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lk {

/// A guarded operation (division, sqrt, abs, sgn) hit an argument below kEpsGuard.
class SingularEvaluation : public std::runtime_error {
 public:
  SingularEvaluation(const std::string& node, const std::vector<double>& point);
  std::string node;
  std::vector<double> point;
};

/// Evaluation point outside a chart box or a grid hull.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called on inputs that violate its stated requirements.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Metric determinant below the nondegeneracy threshold at some point.
class DegenerateMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operator norm requested for a metric that is not definite.
class IndefinitePairing : public std::runtime_error {
 public:
  IndefinitePairing() : std::runtime_error("norm undefined for indefinite pairing") {}
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line, int column);
  int line;
  int column;
};

std::string formatPoint(const std::vector<double>& q);

}  // namespace lk
