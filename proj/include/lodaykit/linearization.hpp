#pragma once
/**
 * @file linearization.hpp
 * @brief Singular points, linear models, the zoom family and Euler-like derivations.
 *
 * A linear model keeps the coordinates of the structure it came from: its anchor and co-anchor are
 * linear in x - p, so at p = 0 this is the structure on T_pM x E_p.
 */

#include <optional>
#include <vector>

#include "lodaykit/courant.hpp"

namespace lk {

constexpr double kSingularTol = 1e-9;
constexpr double kEulerTol = 1e-9;
/// findEulerCandidate reports a candidate as found when its residual is at most this.
constexpr double kEulerFoundTol = 1e-8;

struct LinearModel {
  int n = 0, r = 0;
  Point basepoint;
  Chart chart;
  /// c_{ij}^k = Gamma_ij^k(p) at (i*r+j)*r+k
  std::vector<double> c;
  /// (A_i)_{jk} = d theta_ij / dx_k (p) at (i*n+j)*n+k
  std::vector<double> A;
  /// d lambda_mij^l / dx_s (p) at (((m*r+i)*r+j)*r+l)*n+s
  std::vector<double> L;

  double C(int i, int j, int k) const { return c[static_cast<std::size_t>((i * r + j) * r + k)]; }
  double Anchor(int i, int j, int k) const { return A[static_cast<std::size_t>((i * n + j) * n + k)]; }
  double Co(int m, int i, int j, int l, int s) const {
    return L[static_cast<std::size_t>((((m * r + i) * r + j) * r + l) * n + s)];
  }
};

/// Entries: anchor (max |theta(p)|), coanchor (max |lambda(p)|).
CheckReport isSingular(const LodayStructure& A, std::span<const double> p, double tolerance = kSingularTol);
/// Throws PreconditionError unless p is singular.
LinearModel linearize(const LodayStructure& A, std::span<const double> p);
/// Constant Gamma = c, theta and lambda linear in x - p, on the model's chart.
LodayStructure linearModelAlgebroid(const LinearModel& L);

/// Gamma(p + t(x-p)), theta(p + t(x-p))/t, lambda(p + t(x-p))/t on A's chart; t = 0 gives the linear model.
LodayStructure zoomStructure(const LodayStructure& A, std::span<const double> p, double t);
/// Max |central difference in t of the zoom family - (1/t) pullback of its t = 1 velocity| over the plan.
/// Requires 0 < dt < t and t + dt <= 1.
double zoomDerivativeCheck(const LodayStructure& A, std::span<const double> p, double t, const SamplePlan& plan,
                           double dt = 1e-3);

/// Entries: bracket (max |a^L(v, e_j)|), anchor (max |rho^L(v) - Id|).
CheckReport eulerLikeCheck(const LinearModel& L, std::span<const double> v, double tolerance = kEulerTol);
/// Section form: the check on linearize(A, p) with v = sigma(p).
CheckReport eulerLikeCheck(const LodayStructure& A, std::span<const double> p, const Section& sigma,
                           double tolerance = kEulerTol);
/// Derivation form. Entries: symbol (X(p) = 0 and dX(p) = Id), matrix (D(p) = 0).
CheckReport eulerLikeCheck(const LodayStructure& A, std::span<const double> p, const Derivation& D,
                           double tolerance = kEulerTol);

struct EulerCandidate {
  bool found = false;
  std::vector<double> v;
  double residual = 0.0;
};
/// Least-squares solution of sum_i v^i c_ij^k = 0 and sum_i v^i A_i = Id; residual is the max equation error.
EulerCandidate findEulerCandidate(const LinearModel& L);

/// Entries: bracket (max |D[e_i,e_j] - [De_i,e_j] - [e_i,De_j]|), anchor (max |[X, rho e_j] - rho(D e_j)|).
CheckReport linearizationReport(const LodayStructure& A, const Derivation& D, const SamplePlan& plan,
                                double tolerance = kEulerTol);
/// Adds isometry: max |X<e_i,e_j> - <De_i,e_j> - <e_i,De_j>|.
CheckReport linearizationReport(const CourantStructure& C, const Derivation& D, const SamplePlan& plan,
                                double tolerance = kEulerTol);
/// Max over the entries of linearizationReport.
double linearizationResidual(const LodayStructure& A, const Derivation& D, const SamplePlan& plan);

/// Entries: leibniz (Jacobi residual of c on basis triples), representation
/// (sum_k c_ij^k A_k + A_i A_j - A_j A_i, i.e. e_i -> linear vector field A_i x is a homomorphism).
CheckReport leibnizCheck(const LinearModel& L, double tolerance = kEulerTol);

}  // namespace lk
