#pragma once
/**
 * @file calculus.hpp
 * @brief Vector fields, 1-forms and 3-forms on a chart, with the Cartan primitives used by the Dorfman bracket.
 */

#include <array>
#include <map>
#include <vector>

#include "lodaykit/field.hpp"
#include "lodaykit/report.hpp"

namespace lk {

struct VectorField {
  std::vector<ScalarField> comps;
  static VectorField zero(int n) { return {std::vector<ScalarField>(static_cast<std::size_t>(n))}; }
  static VectorField coordinate(int n, int m);
  int dim() const { return static_cast<int>(comps.size()); }
  const ScalarField& operator[](int i) const { return comps[static_cast<std::size_t>(i)]; }
};

struct OneForm {
  std::vector<ScalarField> comps;
  static OneForm zero(int n) { return {std::vector<ScalarField>(static_cast<std::size_t>(n))}; }
  /// dx_m
  static OneForm coordinate(int n, int m);
  /// df
  static OneForm exact(const ScalarField& f, int n);
  int dim() const { return static_cast<int>(comps.size()); }
  const ScalarField& operator[](int i) const { return comps[static_cast<std::size_t>(i)]; }
};

/// Antisymmetric 3-form; only strictly increasing index triples are stored.
class ThreeForm {
 public:
  explicit ThreeForm(int n);
  int dim() const { return n_; }
  /// Sets eta_{ijk} for i<j<k.
  void set(int i, int j, int k, const ScalarField& f);
  /// eta_{ijk} for any index order, with the antisymmetry sign.
  ScalarField component(int i, int j, int k) const;
  const std::map<std::array<int, 3>, ScalarField>& stored() const { return comps_; }

 private:
  int n_;
  std::map<std::array<int, 3>, ScalarField> comps_;
};

VectorField vfLieBracket(const VectorField& X, const VectorField& Y);
OneForm lieDerivativeOneForm(const VectorField& X, const OneForm& beta);
/// i_Y d(alpha)
OneForm iotaD(const VectorField& Y, const OneForm& alpha);
/// eta(X, Y, .)
OneForm contract2(const ThreeForm& eta, const VectorField& X, const VectorField& Y);

/// Max absolute coefficient of d(omega) over the plan.
CheckEntry isClosed(const OneForm& omega, const SamplePlan& plan, double tolerance = 1e-9);
CheckEntry isClosed(const ThreeForm& eta, const SamplePlan& plan, double tolerance = 1e-9);

}  // namespace lk
