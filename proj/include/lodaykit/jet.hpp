#pragma once
/**
 * @file jet.hpp
 * @brief Truncated multivariate Taylor polynomials (forward-mode jets).
 */

#include <cstddef>
#include <span>
#include <vector>

namespace lk {

/// Monomial bookkeeping for jets in `vars` variables up to total degree `order`.
struct JetLayout {
  int vars = 0;
  int order = 0;
  int size = 0;
  std::vector<std::vector<int>> exps;
  std::vector<int> degree;
  /// Number of monomials of degree <= d, for d = 0..order.
  std::vector<int> sizeUpTo;
  struct Triple {
    int a, b, c;
  };
  /// All (a, b) with deg a + deg b <= order, sorted by deg a + deg b.
  std::vector<Triple> products;
  /// First index in `products` whose total degree exceeds d, for d = 0..order.
  std::vector<std::size_t> productsUpTo;
  struct DerivTerm {
    int src, dst;
    double factor;
  };
  /// deriv[m]: terms mapping this layout into the layout of order-1.
  std::vector<std::vector<DerivTerm>> deriv;
  /// Index of the monomial with exponents e, or -1.
  int indexOf(std::span<const int> e) const;
  /// Index of x_m (degree one); only valid when order >= 1.
  int unit(int m) const { return 1 + m; }

  static const JetLayout& get(int vars, int order);
};

/// Taylor coefficients c_e of f(q + h) = sum_e c_e h^e, truncated at a total degree.
class Jet {
 public:
  Jet() = default;
  explicit Jet(const JetLayout& layout);
  static Jet constant(const JetLayout& layout, double v);
  static Jet variable(const JetLayout& layout, int m, double v);

  const JetLayout& layout() const { return *layout_; }
  int order() const { return layout_->order; }
  int vars() const { return layout_->vars; }
  double value() const { return c_[0]; }
  double operator[](int i) const { return c_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) { return c_[static_cast<std::size_t>(i)]; }
  std::span<const double> coeffs() const { return c_; }
  /// Highest degree with a possibly nonzero coefficient; -1 for the zero jet.
  int degreeBound() const { return deg_; }
  bool isZero() const { return deg_ < 0; }
  void touch() { deg_ = layout_->order; }

  /// dF/dx_m at the expansion point.
  double partial(int m) const;
  /// Jet of dF/dx_m, one order lower.
  Jet derivative(int m) const;
  Jet truncated(int order) const;
  /// First partials at the expansion point (needs order >= 1).
  std::vector<double> gradient() const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  Jet& addScaled(const Jet& o, double s);
  /// this += a * b, truncated to this jet's order.
  Jet& addProduct(const Jet& a, const Jet& b);
  Jet& addProduct(const Jet& a, const Jet& b, double s);

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator*(const Jet& a, const Jet& b);
  Jet operator-() const;

  /// Compose with a scalar function given f^(k)(value)/k! for k = 0..order.
  Jet compose(std::span<const double> taylor) const;

 private:
  const JetLayout* layout_ = nullptr;
  std::vector<double> c_;
  int deg_ = -1;
  void recomputeDegree();
};

/// Elementary functions on jets; domain guards are the caller's job.
Jet reciprocal(const Jet& a);
Jet sqrt(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet exp(const Jet& a);
Jet powi(const Jet& a, int k);

}  // namespace lk
