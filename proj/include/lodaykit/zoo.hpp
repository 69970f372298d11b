#pragma once
/**
 * @file zoo.hpp
 * @brief Named example structures, the independent Dorfman oracle and the example registry.
 *
 * Twist convention: i_X i_Y eta means eta(X, Y, .), so with eta = dx1^dx2^dx3 the twisted
 * bracket of d/dx1 and d/dx2 gains +dx3.
 */

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lodaykit/courant.hpp"
#include "lodaykit/product.hpp"

namespace lk {

/// Rank 2n on [-1,1]^n, frame (d/dx_1..d/dx_n, dx_1..dx_n), metric antidiag(I, I).
CourantStructure standardCourant(int n);
CourantStructure standardCourant(const Chart& chart);
/// Standard structure plus Gamma_{ij}^{n+m} = eta_{ijm}.
CourantStructure twistedCourant(int n, const ThreeForm& eta);
CourantStructure twistedCourant(const Chart& chart, const ThreeForm& eta);
/// Cotangent Lie algebroid of a bivector pi (n*n row-major), frame dx_1..dx_n.
LodayStructure poissonCotangent(const Chart& chart, const std::vector<ScalarField>& pi);

/// Structure constants c_{ij}^k at (i*r+j)*r+k and a constant metric g0 (r*r).
struct LieData {
  int rank = 0;
  std::vector<double> c;
  std::vector<double> g0;
  double C(int i, int j, int k) const { return c[static_cast<std::size_t>((i * rank + j) * rank + k)]; }
};
/// c = Levi-Civita symbol, g0 = identity (positive definite; the Killing form is a negative multiple).
LieData su2Data();
/// Throws unless c is antisymmetric in (i,j) and sum_m c_{ij}^m g0_{mk} is totally antisymmetric.
void requireQuadratic(const LieData& d, double tol = 1e-12);
/// Gamma = f(x) c, theta = lambda = 0, metric g0.
CourantStructure quadraticLieBundle(const Chart& chart, const LieData& d, const ScalarField& f);
/// su(2) plus a central generator acting by the Euler field: rank 4 over [-1,1]^3.
LodayStructure centeredModel();

struct DorfmanPair {
  VectorField X;
  OneForm alpha;
};
/// [X+alpha, Y+beta] = [X,Y] + L_X beta - i_Y d alpha (+ eta(X,Y,.)), from the Cartan primitives.
DorfmanPair oracleDorfman(const VectorField& X, const OneForm& alpha, const VectorField& Y, const OneForm& beta,
                          const ThreeForm* eta = nullptr);
Section toSection(const VectorField& X, const OneForm& alpha);
DorfmanPair fromSection(const Section& s);

struct ZooEntry {
  std::string name;
  std::string description;
  LodayStructure loday;
  std::optional<CourantStructure> courant;
  /// Check name -> whether it must pass.
  std::map<std::string, bool> expected;
  std::optional<FrameSplit> split;
  std::string expectedClass;
};

/// Representative entry names, one per constructor family.
std::vector<std::string> zooCatalog();
/// Parse "family,arg,..." and build the entry; throws PreconditionError on unknown names.
ZooEntry zooEntry(const std::string& name);
/// checkCourant for Courant entries, checkStructure otherwise.
CheckReport runChecks(const ZooEntry& e, const SamplePlan& plan, const CheckOptions& opt = {});

}  // namespace lk
