#pragma once
/**
 * @file splitting.hpp
 * @brief Flow boxes, invariant sections, adapted frames, good sections and the Courant splitting pipeline.
 *
 * Everything after numericFlowBox works in flow-box coordinates (t, y): t is the first coordinate and
 * the remaining ones are the original coordinates transversal to the flow. Pipeline residuals are
 * measured at lattice nodes.
 */

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lodaykit/courant.hpp"
#include "lodaykit/grid.hpp"

namespace lk {

/// Tolerance for the splitting items and the product comparison.
constexpr double kSplitTol = 1e-6;
/// RK4 steps with max |coefficient| * h above this are rejected.
constexpr double kStiffnessGuard = 10.0;
constexpr int kMinSplitNodes = 8;
/// Anchor values below this count as zero.
constexpr double kAnchorTol = 1e-6;

/// 50 h^4 with h the largest lattice spacing.
double gridTolerance(const Lattice& L);

struct GridSection {
  Lattice lattice;
  /// tables[k] holds component k at every lattice node.
  std::vector<std::vector<double>> tables;
  int rank() const { return static_cast<int>(tables.size()); }
  /// Components as grid fields (uniform tables become constants).
  Section section() const;
  std::vector<double> at(std::size_t node) const;
};

struct FlowBox {
  Chart original;
  Point basepoint;
  /// Original coordinate replaced by t.
  int axis = 0;
  /// Original indices of the transversal coordinates, in order.
  std::vector<int> transversal;
  /// (t, transversal names) on the sub-box.
  Chart chart;
  Lattice lattice;
  /// Number of times the sub-box was halved.
  int shrinks = 0;
  /// psi[m](t, y) = original coordinate m.
  std::vector<ScalarField> psi;
  /// d psi_m / d z_a at m*n+a.
  std::vector<ScalarField> jacobian;
  /// d z_a / d x_m at a*n+m.
  std::vector<ScalarField> inverseJacobian;

  /// Flow-box coordinates of the base point: (0, p transversal).
  Point origin() const;
  Point toOriginal(std::span<const double> z) const;
  /// Newton inversion of psi; throws DomainError when x is not reached inside the lattice hull.
  Point toBox(std::span<const double> x) const;
};

/// Coordinates (t, y) with X = d/dt, by RK4 from the hyperplane x_c = p_c where |X^c(p)| is largest.
/// The sub-box starts at half the distance from p to the chart faces and is halved until the flow stays inside.
FlowBox numericFlowBox(const VectorField& X, const Chart& chart, std::span<const double> p, const std::vector<int>& nodes);

/// Structure functions re-expressed in flow-box coordinates, sampled on the flow-box lattice.
LodayStructure pullBack(const LodayStructure& A, const FlowBox& box);
CourantStructure pullBack(const CourantStructure& C, const FlowBox& box);

/// Solves d b^k/dt + sum_j b^j G_j^k = 0, b(0, y) = v, where [alpha, e_j] = sum_k G_j^k e_k, on the lattice over
/// A's chart with the given nodes. Requires anchorApply(A, alpha) = d/dt.
GridSection solveInvariantSection(const LodayStructure& A, const Section& alpha, std::span<const double> v,
                                  const std::vector<int>& nodes);

struct AdaptedFrame {
  /// beta_0 .. beta_r, with rho(beta_i) t = delta_i0 and [alpha, beta_i] = 0.
  std::vector<GridSection> beta;
  /// Initial values at p after perturbation.
  std::vector<std::vector<double>> basis;
  double epsilon = 0.0;
  /// Entries: commute, transverse, t-independent.
  CheckReport report;
};

/// Requires a flow box for alpha, vanishing jacobiator(alpha, ., .) and a passing involutivity entry (a).
AdaptedFrame adaptedFrame(const LodayStructure& A, const Section& alpha, std::span<const double> p,
                          const std::vector<int>& nodes);

struct GoodSection {
  /// Constant vector at p with rho(v) != 0 and <v, v> != 0.
  std::vector<double> v;
  double normSquared = 0.0;
  FlowBox box;
  /// C in flow-box coordinates.
  CourantStructure pulled;
  /// alpha = v/sqrt|<v,v>| - sgn<v,v> Dt / 2 and Dt = rho*(dt), as grid sections over box.lattice.
  GridSection alpha, Dt;
  /// Entries: anchor, null, self-bracket.
  CheckReport report;
};

GoodSection goodSection(const CourantStructure& C, std::span<const double> p, const std::vector<int>& nodes);

struct SplitResult {
  FlowBox box;
  std::vector<double> v;
  /// Rows alpha, Dt, beta_1 .. beta_s in the original frame: e'_a = sum_i frame[a*r+i] e_i.
  std::vector<ScalarField> frame;
  /// Structure in the frame above, over the flow-box chart.
  CourantStructure induced;
  /// E' over the transversal chart; absent when the transversal has dimension 0.
  std::optional<CourantStructure> factor;
  std::string classification;
  CheckReport report;
  bool accepted() const { return report.allPass(); }
};

/// goodSection, adaptedFrame, then the frame (alpha, Dt, beta_1..beta_s) and its checks.
SplitResult courantSplit(const CourantStructure& C, std::span<const double> p, const std::vector<int>& nodes,
                         std::uint64_t seed = 7);

}  // namespace lk
