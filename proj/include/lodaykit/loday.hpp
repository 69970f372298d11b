#pragma once
/**
 * @file loday.hpp
 * @brief Almost-Loday structures given by structure functions, their bracket, Jacobiator and checks.
 *
 * Frame conventions: [e_i, e_j] = sum_k G(i,j,k) e_k, rho(e_i) = sum_m theta(i,m) d/dx_m,
 * lambda(dx_m (x) e_i (x) e_j) = sum_l L(m,i,j,l) e_l. Indices are zero-based.
 */

#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "lodaykit/calculus.hpp"
#include "lodaykit/field.hpp"
#include "lodaykit/report.hpp"

namespace lk {

constexpr double kIdentityTol = 1e-9;

class LodayStructure {
 public:
  LodayStructure() = default;
  /// All structure functions zero.
  LodayStructure(Chart chart, int rank);

  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  int rank() const { return rank_; }

  const ScalarField& gamma(int i, int j, int k) const { return gamma_[gi(i, j, k)]; }
  const ScalarField& theta(int i, int m) const { return theta_[ti(i, m)]; }
  const ScalarField& lambda(int m, int i, int j, int l) const { return lambda_[li(m, i, j, l)]; }
  void setGamma(int i, int j, int k, ScalarField f) { gamma_[gi(i, j, k)] = std::move(f); }
  void setTheta(int i, int m, ScalarField f) { theta_[ti(i, m)] = std::move(f); }
  void setLambda(int m, int i, int j, int l, ScalarField f) { lambda_[li(m, i, j, l)] = std::move(f); }
  const std::vector<ScalarField>& gammaFields() const { return gamma_; }
  const std::vector<ScalarField>& thetaFields() const { return theta_; }
  const std::vector<ScalarField>& lambdaFields() const { return lambda_; }

 private:
  Chart chart_;
  int rank_ = 0;
  std::vector<ScalarField> gamma_, theta_, lambda_;
  std::size_t gi(int i, int j, int k) const;
  std::size_t ti(int i, int m) const;
  std::size_t li(int m, int i, int j, int l) const;
};

struct Section {
  std::vector<ScalarField> comps;
  static Section zero(int r) { return {std::vector<ScalarField>(static_cast<std::size_t>(r))}; }
  static Section frame(int r, int i);
  /// Constant section with the given components.
  static Section constant(const std::vector<double>& v);
  int rank() const { return static_cast<int>(comps.size()); }
  const ScalarField& operator[](int k) const { return comps[static_cast<std::size_t>(k)]; }
  Section scaled(const ScalarField& f) const;
  friend Section operator+(const Section& a, const Section& b);
  friend Section operator-(const Section& a, const Section& b);
};

struct Derivation {
  /// matrix[j*r + k] = D_j^k with D(e_j) = sum_k D_j^k e_k.
  std::vector<ScalarField> matrix;
  VectorField symbol;
  int rank() const;
  const ScalarField& at(int j, int k) const { return matrix[static_cast<std::size_t>(j * rank() + k)]; }
  static Derivation zero(int r, int n);
};

// ---------------------------------------------------------------------------
// Pointwise jet engine

using SectionJet = std::vector<Jet>;

/// Jets of all structure functions at one point, with sparsity lists.
struct StructureJets {
  int n = 0, r = 0, order = 0;
  std::vector<Jet> gamma, theta, lambda;
  std::vector<int> gammaNZ, thetaNZ, lambdaNZ;
  static StructureJets at(const LodayStructure& A, std::span<const double> q, int order);
  const Jet& G(int i, int j, int k) const { return gamma[static_cast<std::size_t>((i * r + j) * r + k)]; }
  const Jet& T(int i, int m) const { return theta[static_cast<std::size_t>(i * n + m)]; }
  const Jet& L(int m, int i, int j, int l) const { return lambda[static_cast<std::size_t>(((m * r + i) * r + j) * r + l)]; }
};

SectionJet sectionJet(const Section& s, std::span<const double> q, int order);
SectionJet constantSectionJet(std::span<const double> v, int n, int order);
/// Bracket at a point; output order is min(order a, order b, order S + 1) - 1.
SectionJet bracketJet(const StructureJets& S, const SectionJet& a, const SectionJet& b);
std::vector<Jet> anchorJet(const StructureJets& S, const SectionJet& a);
SectionJet coanchorJet(const StructureJets& S, const std::vector<Jet>& xi, const SectionJet& a, const SectionJet& b);
/// (D c)^k = sum_j c^j D_j^k + X(c^k); output order is one less than c's.
SectionJet applyDerivationJet(const std::vector<Jet>& D, const std::vector<Jet>& X, const SectionJet& c);
std::vector<double> values(const SectionJet& s);
/// Solve G y = rhs (G row-major r*r) on jets by Gaussian elimination with partial pivoting on values.
std::vector<Jet> solveJets(std::vector<Jet> G, std::vector<Jet> rhs, int r);
SectionJet truncate(const SectionJet& s, int order);

// ---------------------------------------------------------------------------
// Field-level operations

Section bracketSections(const LodayStructure& A, const Section& alpha, const Section& beta);
Section jacobiator(const LodayStructure& A, const Section& alpha, const Section& beta, const Section& gamma);
Section symmetrization(const LodayStructure& A, const Section& alpha, const Section& beta);
VectorField anchorApply(const LodayStructure& A, const Section& alpha);
Section coanchorApply(const LodayStructure& A, const OneForm& xi, const Section& alpha, const Section& beta);
Derivation sectionDerivation(const LodayStructure& A, const Section& sigma);
Section applyDerivation(const Derivation& D, const Section& c);
/// D[a,b] - [Da,b] - [a,Db]
Section lieDerivativeOfBracket(const LodayStructure& A, const Derivation& D, const Section& alpha, const Section& beta);

/// Degree <= 2 polynomial in the chart coordinates with coefficients uniform in [-1, 1].
ScalarField randomPolynomial(int n, std::mt19937_64& gen, int degree = 2);
Section randomSection(int r, int n, std::mt19937_64& gen, int degree = 2);
double uniformSigned(std::mt19937_64& gen);

struct CheckOptions {
  double tolerance = kIdentityTol;
  /// Frame triples are exhaustive up to this count, otherwise sampled.
  int maxFrameTriples = 512;
  /// Random polynomial-section triples per plan point.
  int randomTriples = 2;
};

/// Entries: jacobi, a, b, c, remark-rho-S, remark-rho-lambda.
CheckReport checkStructure(const LodayStructure& A, const SamplePlan& plan, const CheckOptions& opt = {});

void requireSameChart(const LodayStructure& A, const Section& s);

/// Structure in the frame e'_a = sum_i F[a*r+i] e_i; F must be invertible wherever it is evaluated.
LodayStructure changeFrame(const LodayStructure& A, const std::vector<ScalarField>& F);
/// Frame reordering: new e_a = old e_{perm[a]}.
LodayStructure permuteFrame(const LodayStructure& A, const std::vector<int>& perm);

}  // namespace lk
