#pragma once
/**
 * @file grid.hpp
 * @brief Lattice-sampled scalar fields with cubic interpolation and 4th-order difference partials.
 */

#include <array>
#include <memory>
#include <mutex>
#include <vector>

#include "lodaykit/field.hpp"

namespace lk {

/// Minimum nodes per axis for a grid field.
constexpr int kMinGridNodes = 4;
/// Highest partial-derivative order tabulated for grid fields.
constexpr int kGridMaxOrder = 3;

class GridNode : public FieldNode {
 public:
  GridNode(Lattice lattice, std::vector<double> table);
  Jet jet(std::span<const double> q, int order) const override;
  bool isGridNode() const override { return true; }
  const Lattice& lattice() const { return lattice_; }
  const std::vector<double>& table() const { return table_; }
  /// Partial derivative table for multi-index e, cached after the first request.
  const std::vector<double>& derivativeTable(std::span<const int> e) const;

 private:
  Lattice lattice_;
  std::vector<double> table_;
  mutable std::mutex mu_;
  mutable std::vector<std::pair<std::vector<int>, std::shared_ptr<const std::vector<double>>>> cache_;
  double interpolate(const std::vector<double>& t, std::span<const double> q) const;
};

/// Grid field from samples; uniform tables collapse to a constant expression.
ScalarField gridField(const Lattice& lattice, std::vector<double> table);
/// Sample any field at every lattice node.
ScalarField sampleOnLattice(const ScalarField& f, const Lattice& lattice);
const GridNode* asGrid(const ScalarField& f);

/// 4th-order first derivative of equally spaced samples (3rd order when only 4 nodes).
std::vector<double> differentiate1d(std::span<const double> f, double h);

}  // namespace lk
