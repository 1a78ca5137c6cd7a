#pragma once

#include "dspl/types.hpp"

#include <span>
#include <string>
#include <vector>

namespace dspl {

/// One term  p * ||x||^k  of a polynomial bound on a squared subgradient norm.
struct GrowthTerm {
  int degree = 0;
  double coefficient = 0.0;
};

/// One monomial  c * ||x||^D  of a radial kernel, D >= 2.
struct Monomial {
  int degree = 2;
  double coefficient = 0.0;
};

/// Radial polynomial Bregman kernel  d(x) = sum_D c_D ||x||^D.
///
/// Every kernel built through the public factories is 1-strongly convex: the
/// quadratic coefficient is at least 1/2.
class PolynomialKernel {
 public:
  static PolynomialKernel euclidean();

  /// Kernel relative to which a function with  ||h'(x)||^2 <= sum p_k ||x||^k
  /// is 1-relatively Lipschitz:  d(x) = sum p_k/(k+2) ||x||^(k+2),  with the
  /// quadratic part raised to (1/2)||x||^2 when it falls short.
  static PolynomialKernel from_growth(std::span<const GrowthTerm> growth);

  /// Builds directly from monomials; the strong-convexity floor is applied.
  static PolynomialKernel from_monomials(std::span<const Monomial> monomials);

  const std::vector<Monomial>& monomials() const { return monomials_; }
  double strong_convexity_floor() const { return floor_; }

  double value(const Vector& x) const;
  double value_radial(double r) const;
  /// zeta(r) with  grad d(x) = zeta(||x||) x.
  double gradient_scale(double r) const;
  Vector gradient(const Vector& x) const;
  /// V_d(x, y) = d(x) - d(y) - <grad d(y), x - y>.
  double divergence(const Vector& x, const Vector& y) const;

  /// Solves  r * zeta(r) = target  for r >= 0 (the radial part of
  /// grad d(x) = q with ||q|| = target).
  double invert_radial_gradient(double target) const;
  /// The point x with grad d(x) = q.
  Vector gradient_inverse(const Vector& q) const;

  std::string describe() const;

 private:
  std::vector<Monomial> monomials_;  // sorted by degree, unique degrees
  double floor_ = 1.0;
};

/// Growth bound for the phase-retrieval inner map:
/// ||grad c(x)||^2 = 4 <a,x>^2 ||a||^2 <= 4 max||a_i||^4 ||x||^2.
std::vector<GrowthTerm> phase_retrieval_growth(double max_row_norm);

/// Parses "k:p,k:p,..." into growth terms.
std::vector<GrowthTerm> parse_growth_spec(const std::string& text);

}  // namespace dspl
