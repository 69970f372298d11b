#pragma once
/**
 * @file field.hpp
 * @brief Scalar fields on a chart: expression trees, grids and derived nodes, all evaluated as jets.
 */

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lodaykit/chart.hpp"
#include "lodaykit/jet.hpp"

namespace lk {

/// Divisors and sqrt/abs/sgn arguments smaller than this raise SingularEvaluation.
constexpr double kEpsGuard = 1e-12;

class FieldNode {
 public:
  virtual ~FieldNode() = default;
  /// Taylor jet of the field at q, in q.size() variables, up to `order`.
  virtual Jet jet(std::span<const double> q, int order) const = 0;
  virtual bool isGridNode() const { return false; }
};

enum class Op { Const, Coord, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Sqrt, Abs, Sgn };

class ExprNode;

class ScalarField {
 public:
  ScalarField();
  explicit ScalarField(std::shared_ptr<const FieldNode> node);

  static ScalarField constant(double v);
  static ScalarField coordinate(int i);
  /// Infix grammar over `names`: + - * / ^int, sin cos exp sqrt abs sgn, numeric literals.
  static ScalarField parse(const std::string& text, const std::vector<std::string>& names);

  Jet jet(std::span<const double> q, int order) const { return node_->jet(q, order); }
  double value(std::span<const double> q) const { return jet(q, 0).value(); }

  /// True when the whole tree is made of grammar nodes (printable).
  bool isExpression() const;
  bool isGrid() const;
  bool isZero() const;
  std::optional<double> constantValue() const;
  std::string toString(const std::vector<std::string>& names) const;
  const std::shared_ptr<const FieldNode>& node() const { return node_; }
  const ExprNode* expr() const;

  ScalarField pow(int k) const;
  /// Lazy partial derivative d/dx_m.
  ScalarField partial(int m) const;
  /// Replace coordinate i by subs[i]; the result lives wherever subs live.
  ScalarField substitute(const std::vector<ScalarField>& subs) const;
  /// Re-express on a chart of dimension newDim where old coordinate i is new coordinate map[i].
  ScalarField embed(const std::vector<int>& map) const;

  ScalarField operator-() const;
  friend ScalarField operator+(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator-(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b);
  friend ScalarField operator/(const ScalarField& a, const ScalarField& b);
  ScalarField& operator+=(const ScalarField& o) { return *this = *this + o; }
  ScalarField& operator-=(const ScalarField& o) { return *this = *this - o; }
  ScalarField& operator*=(const ScalarField& o) { return *this = *this * o; }

 private:
  std::shared_ptr<const FieldNode> node_;
};

ScalarField operator*(double s, const ScalarField& f);
ScalarField operator+(double s, const ScalarField& f);
ScalarField sin(const ScalarField& f);
ScalarField cos(const ScalarField& f);
ScalarField exp(const ScalarField& f);
ScalarField sqrt(const ScalarField& f);
ScalarField abs(const ScalarField& f);
ScalarField sgn(const ScalarField& f);

/// d f / d x_m as a printable expression; empty unless f is an expression. Used where a derived field must stay
/// serializable; evaluation elsewhere goes through the lazy partial.
std::optional<ScalarField> derivativeExpression(const ScalarField& f, int m);

/// Node computing its jet from a callback; used for derived quantities.
class LambdaNode : public FieldNode {
 public:
  using Fn = std::function<Jet(std::span<const double>, int)>;
  explicit LambdaNode(Fn fn) : fn_(std::move(fn)) {}
  Jet jet(std::span<const double> q, int order) const override { return fn_(q, order); }

 private:
  Fn fn_;
};

class ExprNode : public FieldNode {
 public:
  ExprNode(Op op, double value, int index, std::vector<ScalarField> kids);
  Jet jet(std::span<const double> q, int order) const override;
  Op op;
  double value;  // Const value
  int index;     // Coord index or Pow exponent
  std::vector<ScalarField> kids;
  bool pure;  // subtree contains only ExprNodes
};

struct EvalResult {
  double value;
  std::vector<double> gradient;
};

/// Value and gradient at q; expression partials are exact to rounding.
EvalResult evalWithPartials(const ScalarField& f, std::span<const double> q);
/// Same, but first checks that q lies in the chart box.
EvalResult evalWithPartials(const Chart& chart, const ScalarField& f, std::span<const double> q);

}  // namespace lk
