#include "helpers.hpp"
#include "oracles.hpp"

#include "dspl/model.hpp"
#include "dspl/prox.hpp"

#include <doctest.h>

#include <cmath>

using namespace dspl;
using namespace dspl::testing;

TEST_SUITE("prox") {

TEST_CASE("ball projection") {
  Vector x(2);
  x << 3, 4;
  const Vector p = ball_project(x, 1.0);
  CHECK(p(0) == doctest::Approx(0.6));
  CHECK(p(1) == doctest::Approx(0.8));
  CHECK(bit_equal(ball_project(x, 5.0), x));
  CHECK(bit_equal(ball_project(x, 6.0), x));
  CHECK_THROWS_AS(ball_project(x, 0.0), InvalidArgument);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    const Vector y = random_vector(5, rng, 10.0);
    CHECK(ball_project(y, 2.5).norm() <= 2.5 * (1 + 1e-12));
  }
}

TEST_CASE("per-block ball projection") {
  Vector x(4);
  x << 3, 4, 0.1, 0.1;
  const Ball ball{1.0, 2};
  const Vector p = ball.project(x);
  CHECK(p.head(2).norm() == doctest::Approx(1.0));
  CHECK(p(2) == 0.1);
  CHECK(ball.max_norm(x) == doctest::Approx(5.0));
}

TEST_CASE("prox_linear_pr: zero model residual and flat model") {
  std::mt19937_64 rng(2);
  const Vector a = random_vector(4, rng), z = random_vector(4, rng), w = random_vector(4, rng);
  const double az = a.dot(z);
  const double b = az * az + 2 * az * a.dot(w - z);
  const ProxStep s = prox_linear_pr(a, b, z, w, 3.0, 1e6);
  CHECK((s.x - w).norm() <= 1e-12 * (1 + w.norm()));
  CHECK_FALSE(s.boundary_hit);

  Vector orth = z;
  orth -= a * (a.dot(z) / a.squaredNorm());
  const ProxStep flat = prox_linear_pr(a, 1.0, orth, w, 3.0, 1e6);
  CHECK(bit_equal(flat.x, w));
  const ProxStep flat_outside = prox_linear_pr(a, 1.0, orth, w, 3.0, 0.5 * w.norm());
  CHECK(flat_outside.x.norm() == doctest::Approx(0.5 * w.norm()));

  CHECK_THROWS_AS(prox_linear_pr(a, b, z, w, 0.0, 1.0), InvalidArgument);
  CHECK_THROWS_AS(prox_linear_pr(a, b, z, w, -1.0, 1.0), InvalidArgument);
}

TEST_CASE("prox_linear_pr beats the segment grid and agrees with the generic form") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Index n = 1 + t % 6;
    const Vector a = random_vector(n, rng), z = random_vector(n, rng), w = random_vector(n, rng);
    const double b = uniform(rng, -5.0, 20.0);
    const double gamma = std::exp(uniform(rng, std::log(0.1), std::log(100.0)));
    const ProxStep s = prox_linear_pr(a, b, z, w, gamma, 1e8);
    const double az = a.dot(z);
    const Vector g = 2 * az * a;
    const double c = az * az - b - g.dot(z);
    const double obj = linear_model_objective(g, c, w, gamma, s.x);
    CHECK(obj <= segment_grid_min(g, c, w, gamma, g / gamma, 10001) + 1e-8);

    const ProxStep generic = prox_linear_model(g, c, w, gamma, Ball{1e8, 0});
    CHECK((generic.x - s.x).norm() <= 1e-9 * (1 + s.x.norm()));
  }
}

TEST_CASE("prox_linear_bd: special cases and grid oracle") {
  std::mt19937_64 rng(4);
  const Index n = 3;
  const Vector u = random_vector(n, rng), v = random_vector(n, rng);
  const Vector z = random_vector(2 * n, rng), w = random_vector(2 * n, rng);
  const double uz = u.dot(z.head(n)), vz = v.dot(z.tail(n));
  const double b = uz * vz + vz * u.dot(w.head(n) - z.head(n)) + uz * v.dot(w.tail(n) - z.tail(n));
  CHECK((prox_linear_bd(u, v, b, z, w, 2.0, 1e6).x - w).norm() <= 1e-12 * (1 + w.norm()));

  Vector flat_base = z;
  flat_base.head(n) -= u * (u.dot(z.head(n)) / u.squaredNorm());
  flat_base.tail(n) -= v * (v.dot(z.tail(n)) / v.squaredNorm());
  CHECK((prox_linear_bd(u, v, 1.0, flat_base, w, 2.0, 1e6).x - w).norm() <= 1e-12 * (1 + w.norm()));
  const double small = 0.5 * std::min(w.head(n).norm(), w.tail(n).norm());
  const Vector projected = prox_linear_bd(u, v, 1.0, flat_base, w, 2.0, small).x;
  CHECK(projected.head(n).norm() == doctest::Approx(small));
  CHECK(projected.tail(n).norm() == doctest::Approx(small));

  for (int t = 0; t < 200; ++t) {
    const Vector uu = random_vector(n, rng), vv = random_vector(n, rng);
    const Vector zz = random_vector(2 * n, rng), ww = random_vector(2 * n, rng);
    const double bb = uniform(rng, -5.0, 5.0);
    const double gamma = std::exp(uniform(rng, std::log(0.1), std::log(100.0)));
    const ProxStep s = prox_linear_bd(uu, vv, bb, zz, ww, gamma, 1e8);
    const double uzz = uu.dot(zz.head(n)), vzz = vv.dot(zz.tail(n));
    Vector g(2 * n);
    g << vzz * uu, uzz * vv;
    const double c = uzz * vzz - bb - g.dot(zz);
    CHECK(linear_model_objective(g, c, ww, gamma, s.x) <= segment_grid_min(g, c, ww, gamma, g / gamma, 10001) + 1e-8);
  }
}

TEST_CASE("boundary fallback projects and flags") {
  Vector g(2), w(2);
  g << 10, 0;
  w << 0.9, 0;
  const ProxStep s = prox_linear_model(g, -20.0, w, 1.0, Ball{1.0, 0});
  CHECK(s.boundary_hit);
  CHECK(s.x.norm() == doctest::Approx(1.0));
  const ProxStep inside = prox_linear_model(g, -20.0, w, 1.0, Ball{100.0, 0});
  CHECK_FALSE(inside.boundary_hit);
}

TEST_CASE("prox_linear_model is invariant under a consistent rescale") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const Vector g = random_vector(4, rng), w = random_vector(4, rng);
    const double c = uniform(rng, -3, 3), gamma = uniform(rng, 0.5, 50);
    // 2|l(x)| + gamma ||x - w||^2 has the same minimizer as |l(x)| + gamma/2 ||x - w||^2.
    const ProxStep once = prox_linear_model(g, c, w, gamma, Ball{1e6, 0});
    const ProxStep twice = prox_linear_model(2 * g, 2 * c, w, 2 * gamma, Ball{1e6, 0});
    CHECK(bit_equal(once.x, twice.x));
  }
}

TEST_CASE("prox_sgd_step") {
  std::mt19937_64 rng(6);
  const Vector w = random_vector(3, rng);
  CHECK(bit_equal(prox_sgd_step(Vector::Zero(3), w, 2.0, Ball{1e6, 0}).x, w));
  for (double gamma : {1.0, 1e2, 1e4, 1e6}) {
    const Vector g = random_vector(3, rng);
    CHECK((prox_sgd_step(g, w, gamma, Ball{1e6, 0}).x - w).norm() <= g.norm() / gamma * (1 + 1e-12));
  }
  CHECK_THROWS_AS(prox_sgd_step(w, w, 0.0, Ball{}), InvalidArgument);

  for (int t = 0; t < 50; ++t) {
    const Vector g = random_vector(2, rng, 3.0), c = random_vector(2, rng);
    const double gamma = uniform(rng, 0.5, 5.0), radius = uniform(rng, 0.3, 3.0);
    const ProxStep s = prox_sgd_step(g, c, gamma, Ball{radius, 0});
    CHECK(s.x.norm() <= radius * (1 + 1e-12));
    CHECK(sgd_objective(g, c, gamma, s.x) <= disc_grid_min(g, c, gamma, radius, 801) + 1e-8);
  }
}

TEST_CASE("stability of the prox-linear step across samples") {
  const ProblemInstance inst = small_pr(40, 6, 2, 1.0, 0.2);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const Vector z = random_vector(6, rng), w = random_vector(6, rng);
    const double gamma = uniform(rng, 1.0, 100.0);
    double lf = 0.0;
    for (Index i = 0; i < inst.m(); ++i)
      lf = std::max(lf, 2 * std::abs(inst.sensing.row(i).dot(z)) * inst.sensing.row(i).norm());
    const Index i = t % 40, j = (t * 7 + 3) % 40;
    const Vector xi = prox_linear_pr(inst.sensing.row(i).transpose(), inst.measurements(i), z, w, gamma, 1e6).x;
    const Vector xj = prox_linear_pr(inst.sensing.row(j).transpose(), inst.measurements(j), z, w, gamma, 1e6).x;
    CHECK((xi - xj).norm() <= 4 * lf / gamma * (1 + 1e-12));
  }
}

TEST_CASE("bregman prox: hand cases") {
  std::mt19937_64 rng(8);
  const auto euclid = PolynomialKernel::euclidean();
  const Vector a = random_vector(3, rng);
  const BregmanProxResult same = bregman_pw_linear_prox(a, 0.7, a, 0.7, euclid);
  CHECK((same.x + a).norm() <= 1e-12);
  const BregmanProxResult sym = bregman_pw_linear_prox(a, 0.0, -a, 0.0, euclid);
  CHECK(sym.x.norm() <= 1e-12);
  CHECK(sym.candidate == PieceCandidate::Kink);
}

TEST_CASE("bregman prox matches the dual oracle and the kink is stationary") {
  std::mt19937_64 rng(9);
  const std::vector<GrowthTerm> quartic_growth{{0, 1.0}, {2, 2.0}};
  const auto quartic = PolynomialKernel::from_growth(quartic_growth);
  int kinks = 0;
  for (int t = 0; t < 100; ++t) {
    const auto& kernel = t % 2 == 0 ? PolynomialKernel::euclidean() : quartic;
    const Index n = 2 + t % 4;
    const Vector a1 = random_vector(n, rng), a2 = random_vector(n, rng);
    const double b1 = uniform(rng, -1, 1), b2 = uniform(rng, -1, 1);
    const BregmanProxResult r = bregman_pw_linear_prox(a1, b1, a2, b2, kernel);
    const DualBracket oracle = pw_linear_dual_oracle(a1, b1, a2, b2, kernel);
    CHECK(r.objective >= oracle.lower - 1e-6);
    CHECK(r.objective <= oracle.upper + 1e-6);
    CHECK(r.objective == doctest::Approx(pw_linear_objective(a1, b1, a2, b2, kernel, r.x)));
    if (r.candidate == PieceCandidate::Kink) {
      ++kinks;
      const auto [residual, lambda] = kink_kkt_residual(a1, a2, kernel, r.x);
      CHECK(residual <= 1e-8);
      CHECK(std::abs(a1.dot(r.x) + b1 - a2.dot(r.x) - b2) <= 1e-10);
      CHECK(std::abs(lambda) <= 0.5 + 1e-9);
    }
  }
  CHECK(kinks > 10);
}

TEST_CASE("poly_root_positive") {
  const auto euclid = PolynomialKernel::euclidean();
  CHECK(poly_root_positive(euclid, Vector::Zero(2), Vector::Unit(2, 0)) == doctest::Approx(1.0).epsilon(1e-14));
  // zeta == 1 for the Euclidean kernel, so alpha = 1 on every ray.
  Vector v(3);
  v << 2.0, -1.0, 5.0;
  CHECK(poly_root_positive(euclid, Vector::Zero(3), v) == doctest::Approx(1.0).epsilon(1e-14));

  std::mt19937_64 rng(10);
  for (int t = 0; t < 50; ++t) {
    const std::vector<GrowthTerm> growth{{0, uniform(rng, 0.5, 3)}, {2, uniform(rng, 0, 3)}, {4, uniform(rng, 0, 1)}};
    const auto kernel = PolynomialKernel::from_growth(growth);
    const Vector u = random_vector(3, rng), w = random_vector(3, rng);
    const double alpha = poly_root_positive(kernel, u, w);
    CHECK(alpha > 0.0);
    CHECK(std::abs(poly_root_residual(kernel, u, w, alpha)) <= 1e-10);
    const double hi = 2 * alpha + 1;
    const double scanned = root_scan(kernel, u, w, hi, 1000001);
    CHECK(std::abs(scanned - alpha) <= hi / 1000000 * 1.01);
  }
}

}  // TEST_SUITE
