#pragma once
/**
 * @file product.hpp
 * @brief Direct products, direct decompositions with mixed co-anchors, and the decomposition classifier.
 *
 * Product frames list E1 first, then E2; product coordinates list M1 first, then M2.
 */

#include <string>
#include <vector>

#include "lodaykit/courant.hpp"

namespace lk {

constexpr double kClassifyTol = 1e-8;

/// Concatenated chart; throws on a coordinate label collision.
Chart productChart(const Chart& c1, const Chart& c2);

/// Partition of frame indices, plus an optional partition of coordinates (both empty = none).
struct FrameSplit {
  std::vector<int> first, second;
  std::vector<int> coords1, coords2;
  bool hasCoordinateSplit() const { return !coords1.empty() || !coords2.empty(); }
  void validate(int rank, int dim) const;
};

/// The split that a product of ranks r1, r2 over dimensions n1, n2 comes with.
FrameSplit productSplit(int n1, int r1, int n2, int r2);

/**
 * Free mixed co-anchor components, each indexed [m][i][j][l] with l over all r1+r2 product frames:
 * L1: m in M1, i in E2, j in E1;  L2: m in M1, i in E2, j in E2;
 * L3: m in M2, i in E1, j in E1;  L4: m in M2, i in E1, j in E2.
 */
struct MixedCoanchor {
  int n1 = 0, n2 = 0, r1 = 0, r2 = 0;
  std::vector<ScalarField> L1, L2, L3, L4;
  static MixedCoanchor zero(int n1, int r1, int n2, int r2);
  /// block in 1..4; indices are local to the block's domain factors.
  ScalarField& at(int block, int m, int i, int j, int l);
  const ScalarField& at(int block, int m, int i, int j, int l) const;
};

LodayStructure directProduct(const LodayStructure& A1, const LodayStructure& A2);
/// Block metric; the co-anchor blocks on T*M1 x E2 x E2 and T*M2 x E1 x E1 are the ones forced by
/// lambda(xi, a, b) = <a, b> rho* xi.
CourantStructure directProduct(const CourantStructure& C1, const CourantStructure& C2);
LodayStructure directDecomposition(const LodayStructure& A1, const LodayStructure& A2, const MixedCoanchor& L);

struct Classification {
  std::string label;
  CheckReport table;
};

/// Label in {direct, semi-direct, matching, semi-matching-1, semi-matching-2, none}. Factor sections
/// have coefficients in their own factor's coordinates when a coordinate split is given.
Classification classifyDecomposition(const LodayStructure& A, const FrameSplit& split, const SamplePlan& plan,
                                     double tolerance = kClassifyTol, int randomPairs = 4);

}  // namespace lk
