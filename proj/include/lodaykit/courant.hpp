#pragma once
/**
 * @file courant.hpp
 * @brief Courant structures: a Loday structure together with a symmetric pairing g_ij = <e_i, e_j>.
 */

#include <cstdint>
#include <vector>

#include "lodaykit/loday.hpp"

namespace lk {

/// |det g| below this at an evaluation point is a nondegeneracy failure.
constexpr double kDetThreshold = 1e-9;

class CourantStructure {
 public:
  CourantStructure() = default;
  /// metric is r*r row-major; symmetry is checked on a small plan.
  CourantStructure(LodayStructure base, std::vector<ScalarField> metric);

  const LodayStructure& base() const { return base_; }
  LodayStructure& base() { return base_; }
  const Chart& chart() const { return base_.chart(); }
  int rank() const { return base_.rank(); }
  int dim() const { return base_.dim(); }
  const ScalarField& metric(int i, int j) const { return metric_[static_cast<std::size_t>(i * rank() + j)]; }
  const std::vector<ScalarField>& metricFields() const { return metric_; }

  /// g(q) row-major.
  std::vector<double> metricAt(std::span<const double> q) const;
  std::vector<Jet> metricJets(std::span<const double> q, int order) const;
  /// Throws DegenerateMetric when |det g(q)| < kDetThreshold.
  void requireNondegenerate(std::span<const double> q) const;

 private:
  LodayStructure base_;
  std::vector<ScalarField> metric_;
};

double determinant(std::span<const double> G, int r);

Jet pairingJet(const std::vector<Jet>& g, const SectionJet& a, const SectionJet& b);
ScalarField pairing(const CourantStructure& C, const Section& a, const Section& b);

/// (rho* xi)^k = sum g^{kl} theta_{lm} xi_m
Section rhoStar(const CourantStructure& C, const OneForm& xi);
/// rho*(df)
Section dFunction(const CourantStructure& C, const ScalarField& f);
/// Pointwise rho* of a covector value.
std::vector<double> rhoStarAt(const CourantStructure& C, std::span<const double> q, std::span<const double> xi);

/// Frame change e'_a = sum_i F[a*r+i] e_i, including g'_ab = F_a^i F_b^j g_ij.
CourantStructure changeFrame(const CourantStructure& C, const std::vector<ScalarField>& F);
CourantStructure permuteFrame(const CourantStructure& C, const std::vector<int>& perm);

/// Entries: pairing, symm, coanchor, then the checkStructure entries.
CheckReport checkCourant(const CourantStructure& C, const SamplePlan& plan, const CheckOptions& opt = {});

/// Seed used by bracketOperatorNorm when none is given.
constexpr std::uint64_t kNormSeed = 20240607;

/// Sup over metric-unit u, v of |sum Gamma_ij^k(q) u^i v^j e_k|, by seeded sphere sampling plus
/// alternating singular-vector ascent. Nondecreasing in `samples`.
double bracketOperatorNorm(const CourantStructure& C, std::span<const double> q, int samples, std::uint64_t seed = kNormSeed);
/// Same for a bare bracket tensor (r*r*r, index (i*r+j)*r+k) and metric (r*r).
double bilinearNorm(std::span<const double> gamma, std::span<const double> metric, int r, int samples, std::uint64_t seed = kNormSeed);

}  // namespace lk
