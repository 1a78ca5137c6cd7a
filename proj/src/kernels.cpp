#include "dspl/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace dspl {

namespace {

std::vector<Monomial> normalize(std::map<int, double> by_degree, double floor) {
  // The quadratic coefficient c_2 gives a strong-convexity modulus of 2 c_2.
  double& quadratic = by_degree[2];
  quadratic = std::max(quadratic, 0.5 * floor);
  std::vector<Monomial> out;
  for (const auto& [degree, coefficient] : by_degree)
    if (coefficient > 0.0) out.push_back({degree, coefficient});
  return out;
}

}  // namespace

PolynomialKernel PolynomialKernel::euclidean() {
  PolynomialKernel k;
  k.monomials_ = {{2, 0.5}};
  return k;
}

PolynomialKernel PolynomialKernel::from_growth(std::span<const GrowthTerm> growth) {
  std::map<int, double> by_degree;
  for (const auto& term : growth) {
    require(term.degree >= 0, "growth degree must be nonnegative");
    require(term.coefficient >= 0.0 && std::isfinite(term.coefficient),
            "growth coefficients must be nonnegative");
    by_degree[term.degree + 2] += term.coefficient / (term.degree + 2);
  }
  PolynomialKernel k;
  k.monomials_ = normalize(std::move(by_degree), k.floor_);
  return k;
}

PolynomialKernel PolynomialKernel::from_monomials(std::span<const Monomial> monomials) {
  std::map<int, double> by_degree;
  for (const auto& mono : monomials) {
    require(mono.degree >= 2, "kernel monomial degree must be at least 2");
    require(mono.coefficient >= 0.0 && std::isfinite(mono.coefficient),
            "kernel coefficients must be nonnegative");
    by_degree[mono.degree] += mono.coefficient;
  }
  PolynomialKernel k;
  k.monomials_ = normalize(std::move(by_degree), k.floor_);
  return k;
}

double PolynomialKernel::value_radial(double r) const {
  double total = 0.0;
  for (const auto& mono : monomials_) total += mono.coefficient * std::pow(r, mono.degree);
  return total;
}

double PolynomialKernel::value(const Vector& x) const { return value_radial(x.norm()); }

double PolynomialKernel::gradient_scale(double r) const {
  double total = 0.0;
  for (const auto& mono : monomials_)
    total += mono.coefficient * mono.degree * (mono.degree == 2 ? 1.0 : std::pow(r, mono.degree - 2));
  return total;
}

Vector PolynomialKernel::gradient(const Vector& x) const { return gradient_scale(x.norm()) * x; }

double PolynomialKernel::divergence(const Vector& x, const Vector& y) const {
  const double v = value(x) - value(y) - gradient(y).dot(x - y);
  return std::max(v, 0.0);
}

double PolynomialKernel::invert_radial_gradient(double target) const {
  require(target >= 0.0 && std::isfinite(target), "radial gradient target must be finite");
  if (target == 0.0) return 0.0;
  // r * zeta(r) is strictly increasing with slope >= zeta(0) >= 1.
  double lo = 0.0;
  double hi = target / gradient_scale(0.0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (mid * gradient_scale(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Vector PolynomialKernel::gradient_inverse(const Vector& q) const {
  const double norm = q.norm();
  if (norm == 0.0) return Vector::Zero(q.size());
  return (invert_radial_gradient(norm) / norm) * q;
}

std::string PolynomialKernel::describe() const {
  std::ostringstream out;
  out << "d(x) =";
  bool first = true;
  for (const auto& mono : monomials_) {
    out << (first ? " " : " + ") << mono.coefficient << "*||x||^" << mono.degree;
    first = false;
  }
  return out.str();
}

std::vector<GrowthTerm> phase_retrieval_growth(double max_row_norm) {
  const double a2 = max_row_norm * max_row_norm;
  return {{2, 4.0 * a2 * a2}};
}

std::vector<GrowthTerm> parse_growth_spec(const std::string& text) {
  std::vector<GrowthTerm> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    require(colon != std::string::npos, "kernel term '" + item + "' must look like degree:coefficient");
    try {
      out.push_back({std::stoi(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    } catch (const std::logic_error&) {
      throw InvalidArgument("kernel term '" + item + "' is not numeric");
    }
  }
  require(!out.empty(), "kernel specification is empty");
  return out;
}

}  // namespace dspl
