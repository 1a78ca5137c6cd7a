#include "dspl/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace dspl {

Vector ball_project(const Vector& x, double radius) {
  require(radius > 0.0, "ball radius must be positive");
  return Ball{radius, 0}.project(x);
}

namespace {

// w + clip(-delta/||zeta||^2, [-1, 1]) zeta, then the ball fallback.
ProxStep clipped_step(const Vector& center, double delta, const Vector& zeta, const Ball& ball) {
  const double zz = zeta.squaredNorm();
  Vector x = zz > 0.0 ? Vector(center + std::clamp(-delta / zz, -1.0, 1.0) * zeta) : center;
  if (ball.contains(x, 0.0)) return {std::move(x), false};
  // Projecting the center itself is not a boundary event of the closed form.
  const bool hit = zz > 0.0 || !ball.contains(center, 0.0);
  return {ball.project(x), hit};
}

void check_gamma(double gamma) { require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive"); }

}  // namespace

ProxStep prox_linear_model(const Vector& gradient, double intercept, const Vector& center,
                           double gamma, const Ball& ball) {
  check_gamma(gamma);
  const double delta = (gradient.dot(center) + intercept) / gamma;
  return clipped_step(center, delta, gradient / gamma, ball);
}

ProxStep prox_linear_pr(const Vector& a, double b, const Vector& base, const Vector& center,
                        double gamma, double radius) {
  check_gamma(gamma);
  require(radius > 0.0, "ball radius must be positive");
  const double az = a.dot(base);
  const double delta = (az * az + 2.0 * az * a.dot(center - base) - b) / gamma;
  const Vector zeta = (2.0 * az / gamma) * a;
  return clipped_step(center, delta, zeta, Ball{radius, 0});
}

ProxStep prox_linear_bd(const Vector& u, const Vector& v, double b, const Vector& base,
                        const Vector& center, double gamma, double radius) {
  check_gamma(gamma);
  require(radius > 0.0, "ball radius must be positive");
  const Index n = u.size();
  require(v.size() == n && base.size() == 2 * n && center.size() == 2 * n,
          "blind deconvolution vectors have inconsistent sizes");
  const double uz = u.dot(base.head(n));
  const double vz = v.dot(base.tail(n));
  const double delta = (uz * vz + vz * u.dot(center.head(n) - base.head(n)) +
                        uz * v.dot(center.tail(n) - base.tail(n)) - b) /
                       gamma;
  Vector zeta(2 * n);
  zeta.head(n) = (vz / gamma) * u;
  zeta.tail(n) = (uz / gamma) * v;
  return clipped_step(center, delta, zeta, Ball{radius, n});
}

ProxStep prox_sgd_step(const Vector& g, const Vector& center, double gamma, const Ball& ball) {
  check_gamma(gamma);
  Vector x = center - g / gamma;
  if (ball.contains(x, 0.0)) return {std::move(x), false};
  return {ball.project(x), true};
}

double pw_linear_objective(const Vector& a1, double b1, const Vector& a2, double b2,
                           const PolynomialKernel& kernel, const Vector& x) {
  return std::max(a1.dot(x) + b1, a2.dot(x) + b2) + kernel.value(x);
}

double poly_root_residual(const PolynomialKernel& kernel, const Vector& u, const Vector& v,
                          double alpha) {
  return alpha * kernel.gradient_scale((u + alpha * v).norm()) - 1.0;
}

double poly_root_positive(const PolynomialKernel& kernel, const Vector& u, const Vector& v) {
  require(!kernel.monomials().empty(), "kernel has no positive coefficient");
  auto phi = [&](double alpha) { return poly_root_residual(kernel, u, v, alpha); };
  double lo = 0.0;
  double hi = 1.0;
  int expansions = 0;
  while (phi(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > 1000 || !std::isfinite(hi))
      throw std::runtime_error("poly_root_positive: no sign change found; malformed kernel");
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (phi(mid) <= 0.0 ? lo : hi) = mid;
  }
  return std::abs(phi(lo)) <= std::abs(phi(hi)) ? lo : hi;
}

BregmanProxResult bregman_pw_linear_prox(const Vector& a1, double b1, const Vector& a2,
                                         double b2, const PolynomialKernel& kernel) {
  require(a1.size() == a2.size(), "piece slopes must have equal dimension");
  struct Candidate {
    Vector x;
    PieceCandidate tag;
  };
  std::vector<Candidate> candidates;

  // Single-piece minimizers: grad d(x) = -a.
  const Vector x1 = kernel.gradient_inverse(-a1);
  if (a1.dot(x1) + b1 >= a2.dot(x1) + b2) candidates.push_back({x1, PieceCandidate::First});
  const Vector x2 = kernel.gradient_inverse(-a2);
  if (a2.dot(x2) + b2 >= a1.dot(x2) + b1) candidates.push_back({x2, PieceCandidate::Second});

  const Vector diff = a1 - a2;
  const double diff2 = diff.squaredNorm();
  if (diff2 > 0.0) {
    const Vector u = -(b1 - b2) / diff2 * diff;
    const Vector v = (a1.squaredNorm() - a2.squaredNorm()) / (2.0 * diff2) * diff - 0.5 * (a1 + a2);
    const double alpha = poly_root_positive(kernel, u, v);
    candidates.push_back({u + alpha * v, PieceCandidate::Kink});
  }
  require(!candidates.empty(), "bregman_pw_linear_prox: no admissible candidate");

  std::optional<BregmanProxResult> best;
  for (auto& c : candidates) {
    const double obj = pw_linear_objective(a1, b1, a2, b2, kernel, c.x);
    if (!best) {
      best = BregmanProxResult{std::move(c.x), obj, c.tag};
      continue;
    }
    const double tol = 1e-12 * std::max(1.0, std::abs(best->objective));
    const bool better = obj < best->objective - tol;
    const bool tie_smaller = std::abs(obj - best->objective) <= tol && c.x.norm() < best->x.norm();
    if (better || tie_smaller) best = BregmanProxResult{std::move(c.x), obj, c.tag};
  }
  return *best;
}

}  // namespace dspl
