#pragma once

#include "dspl/ball.hpp"
#include "dspl/kernels.hpp"
#include "dspl/types.hpp"

namespace dspl {

/// Output of a Euclidean proximal step. `boundary_hit` is set when the
/// unconstrained closed form left the ball and was projected back.
struct ProxStep {
  Vector x;
  bool boundary_hit = false;
};

/// x if ||x|| <= radius, else (radius/||x||) x.
Vector ball_project(const Vector& x, double radius);

/// argmin_x |<g, x> + c| + (gamma/2)||x - w||^2 over the ball:
///   x = w + clip(-delta/||zeta||^2, [-1, 1]) zeta,
///   delta = (<g, w> + c)/gamma,  zeta = g/gamma.
ProxStep prox_linear_model(const Vector& gradient, double intercept, const Vector& center,
                           double gamma, const Ball& ball);

/// Phase-retrieval prox-linear step with the model built at base point z:
///   min_x |<a,z>^2 + 2<a,z><a, x - z> - b| + (gamma/2)||x - w||^2.
ProxStep prox_linear_pr(const Vector& a, double b, const Vector& base, const Vector& center,
                        double gamma, double radius);

/// Blind-deconvolution prox-linear step over the pair (x, y) (stacked as
/// [x; y]) with per-block balls of the given radius.
ProxStep prox_linear_bd(const Vector& u, const Vector& v, double b, const Vector& base,
                        const Vector& center, double gamma, double radius);

/// argmin_x <g, x> + (gamma/2)||x - w||^2 + I_ball(x) = Proj(w - g/gamma).
ProxStep prox_sgd_step(const Vector& g, const Vector& center, double gamma, const Ball& ball);

/// Which closed-form candidate produced the Bregman prox solution.
enum class PieceCandidate { First, Second, Kink };

struct BregmanProxResult {
  Vector x;
  double objective = 0.0;
  PieceCandidate candidate = PieceCandidate::First;
};

/// Exact minimizer of  max{<a1,x> + b1, <a2,x> + b2} + d(x)  for a radial
/// polynomial kernel d. Each single-piece minimizer is kept only when its own
/// piece is active there; the kink candidate is x = u + alpha v with alpha
/// from poly_root_positive. Ties within 1e-12 resolve to the smaller norm.
BregmanProxResult bregman_pw_linear_prox(const Vector& a1, double b1, const Vector& a2,
                                         double b2, const PolynomialKernel& kernel);

/// Objective of the two-piece subproblem at x.
double pw_linear_objective(const Vector& a1, double b1, const Vector& a2, double b2,
                           const PolynomialKernel& kernel, const Vector& x);

/// Positive root of  phi(alpha) = alpha * zeta(||u + alpha v||) - 1,  the
/// scalar equation fixing the kink candidate (zeta from the kernel gradient).
/// Brackets by doubling from alpha = 1, then bisects the first sign change.
double poly_root_positive(const PolynomialKernel& kernel, const Vector& u, const Vector& v);

/// phi(alpha) as above; exposed for residual checks.
double poly_root_residual(const PolynomialKernel& kernel, const Vector& u, const Vector& v,
                          double alpha);

}  // namespace dspl
