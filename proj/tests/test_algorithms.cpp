#include "helpers.hpp"

#include "dspl/algorithms.hpp"
#include "dspl/delay.hpp"
#include "dspl/prox.hpp"
#include "dspl/sweep.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace dspl;
using namespace dspl::testing;

namespace {

AlgoConfig experiment(Algorithm algo, double alpha, Index horizon, double beta = 0.0) {
  AlgoConfig c;
  c.algorithm = algo;
  c.schedule = ExperimentSchedule{alpha};
  c.horizon = horizon;
  c.beta = beta;
  return c;
}

}  // namespace

TEST_SUITE("algorithms") {

TEST_CASE("stepsize schedules") {
  AlgoConfig theory;
  theory.schedule = TheorySchedule{1.0, 0.0, 1.0};
  theory.horizon = 10000;
  CHECK(stepsize(theory, 1) == 102.0);
  CHECK(stepsize(theory, 10000) == 102.0);

  CHECK(stepsize(experiment(Algorithm::DSPL, 4.0, 400), 7) == 10.0);

  theory.schedule = TheorySchedule{1.0, 0.5, 1e15};
  CHECK(stepsize(theory, 1) == doctest::Approx(2.5).epsilon(1e-12));

  CHECK_THROWS_AS(stepsize(theory, 0), InvalidArgument);
  CHECK_THROWS_AS(stepsize(theory, 10001), InvalidArgument);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(experiment(Algorithm::DSPL, 0.0, 10).validate(), InvalidArgument);
  CHECK_THROWS_AS(experiment(Algorithm::DSPL, -1.0, 10).validate(), InvalidArgument);
  CHECK_THROWS_AS(experiment(Algorithm::DSPL, 1.0, 10, 0.3).validate(), InvalidArgument);
  CHECK_THROWS_AS(experiment(Algorithm::DSGD, 1.0, 10, 0.3).validate(), InvalidArgument);
  CHECK_THROWS_AS(experiment(Algorithm::DSEPL, 1.0, 10, 1.0).validate(), InvalidArgument);
  CHECK_NOTHROW(experiment(Algorithm::DSEPL, 1.0, 10, 0.6).validate());
  CHECK_THROWS_AS(parse_algorithm("adam"), InvalidArgument);
  for (Algorithm a : {Algorithm::DSPL, Algorithm::DSEPL, Algorithm::DSGD, Algorithm::DSEGD})
    CHECK(parse_algorithm(to_string(a)) == a);
}

TEST_CASE("theory schedule uses the weak-convexity estimate") {
  const ProblemInstance inst = small_pr(20, 4, 3);
  const AlgoConfig c = make_config(inst, Algorithm::DSPL, 2.0, 0.0, 100, ScheduleKind::Theory);
  CHECK(stepsize(c, 1) == doctest::Approx(2 * weak_convexity_estimate(inst) + 5.0));
  CHECK(stepsize(make_config(inst, Algorithm::DSPL, 2.0, 0.0), 1) == doctest::Approx(std::sqrt(400.0 * 20 / 2.0)));
}

TEST_CASE("extrapolation") {
  AlgoState s = AlgoState::start(Vector::Unit(2, 0));
  CHECK(bit_equal(extrapolate(s, 0.7), s.x_curr));
  s.x_prev = Vector::Zero(2);
  const Vector y = extrapolate(s, 0.5);
  CHECK(y(0) == 1.5);
  CHECK(y(1) == 0.0);
  CHECK(bit_equal(extrapolate(s, 0.0), s.x_curr));
}

TEST_CASE("one DSGD step by hand") {
  RowMatrix a(1, 2);
  a << 1, 0;
  Vector b(1);
  b << 1;
  const ProblemInstance inst = pr_instance(a, b);
  // gamma = sqrt(16 / 1) = 4.
  const AlgoConfig c = experiment(Algorithm::DSGD, 1.0, 16);
  AlgoState s = AlgoState::start(Vector::Unit(2, 0) * 2.0);
  const DelayedInfo info = make_info(Algorithm::DSGD, inst, s.x_curr, 0, 1);
  CHECK(std::get<SubgradientInfo>(info.payload).g(0) == 4.0);
  s = step(c, std::move(s), info, inst);
  CHECK(s.x_curr(0) == 1.0);
  CHECK(s.x_curr(1) == 0.0);
  CHECK(s.x_prev(0) == 2.0);
  CHECK(s.k == 2);
}

TEST_CASE("step rejects mismatched or future information and flags divergence") {
  const ProblemInstance inst = small_pr(10, 3, 1);
  const AlgoConfig c = experiment(Algorithm::DSPL, 1.0, 100);
  AlgoState s = AlgoState::start(inst.initial);
  CHECK_THROWS_AS(step(c, s, make_info(Algorithm::DSGD, inst, s.x_curr, 0, 1), inst), InvalidArgument);
  CHECK_THROWS_AS(step(c, s, make_info(Algorithm::DSPL, inst, s.x_curr, 0, 2), inst), InvalidArgument);
  DelayedInfo bad;
  bad.payload = LinearModel{Vector::Constant(3, std::numeric_limits<double>::quiet_NaN()), 1.0};
  bad.issued_at = 1;
  CHECK_THROWS_AS(step(c, s, bad, inst), DivergenceError);
}

TEST_CASE("beta = 0 reduces the extrapolated variants bit-exactly") {
  const ProblemInstance inst = small_pr(30, 5, 2, 10.0, 0.2);
  const DelayModel delay = DelayModel::poisson(3.0);
  SimulationOptions opt;
  opt.keep_iterates = true;
  opt.stop_early = false;
  for (auto [plain, momentum] : {std::pair{Algorithm::DSPL, Algorithm::DSEPL}, std::pair{Algorithm::DSGD, Algorithm::DSEGD}}) {
    const RunRecord a = run_simulated(inst, experiment(plain, 0.5, 100), delay, 5, opt);
    const RunRecord b = run_simulated(inst, experiment(momentum, 0.5, 100), delay, 5, opt);
    REQUIRE(a.iterates.size() == 101);
    REQUIRE(b.iterates.size() == 101);
    for (std::size_t k = 0; k < a.iterates.size(); ++k) CHECK(bit_equal(a.iterates[k], b.iterates[k]));
  }
}

TEST_CASE("momentum changes the trajectory") {
  const ProblemInstance inst = small_pr(30, 5, 2);
  SimulationOptions opt;
  opt.keep_iterates = true;
  opt.stop_early = false;
  const RunRecord a = run_simulated(inst, experiment(Algorithm::DSPL, 0.5, 50), DelayModel::constant(0), 5, opt);
  const RunRecord b =
      run_simulated(inst, experiment(Algorithm::DSEPL, 0.5, 50, 0.6), DelayModel::constant(0), 5, opt);
  CHECK_FALSE(bit_equal(a.iterates.back(), b.iterates.back()));
}

TEST_CASE("zero-delay DSPL is the serial stochastic prox-linear method") {
  for (const ProblemInstance& inst : {small_pr(40, 6, 9, 10.0, 0.3), small_bd(40, 4, 9, 0.2)}) {
    const AlgoConfig c = experiment(Algorithm::DSPL, 1.0, 200);
    SimulationOptions opt;
    opt.keep_iterates = true;
    opt.stop_early = false;
    const RunRecord run = run_simulated(inst, c, DelayModel::constant(0), 13, opt);

    // Reference: x^{k+1} = argmin |c(x^k) + <grad c(x^k), x - x^k>| + gamma/2 ||x - x^k||^2.
    auto rng = sample_stream(13);
    std::uniform_int_distribution<Index> pick(0, inst.m() - 1);
    const double gamma = std::sqrt(200.0);
    Vector x = inst.initial;
    Vector via_closed_form = inst.initial;
    for (Index k = 1; k <= 200; ++k) {
      const Index i = pick(rng);
      const InnerValue v = inner_eval(inst, x, i);
      x = prox_linear_model(v.gradient, v.value - v.gradient.dot(x), x, gamma, inst.ball()).x;
      CHECK(bit_equal(run.iterates[static_cast<std::size_t>(k)], x));

      // Same step through the problem-specific closed forms.
      const Vector prev = via_closed_form;
      if (inst.kind == ProblemKind::PhaseRetrieval)
        via_closed_form = prox_linear_pr(inst.sensing.row(i).transpose(), inst.measurements(i), prev, prev,
                                         gamma, inst.radius).x;
      else
        via_closed_form = prox_linear_bd(inst.sensing.row(i).transpose(), inst.sensing_aux.row(i).transpose(),
                                         inst.measurements(i), prev, prev, gamma, inst.radius).x;
      CHECK((via_closed_form - x).norm() <= 1e-9 * (1 + x.norm()));
    }
  }
}

TEST_CASE("iterates stay in the ball and respect the movement bound") {
  const ProblemInstance inst = small_pr(20, 4, 3, 1.0, 0.2);
  for (Algorithm algo : {Algorithm::DSPL, Algorithm::DSGD}) {
    // Aggressive stepsize so the ball is actually reached by DSGD.
    const AlgoConfig c = experiment(algo, 50.0, 300);
    const double gamma = stepsize(c, 1);
    AlgoState s = AlgoState::start(inst.initial);
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<Index> pick(0, 19);
    for (Index k = 1; k <= 300; ++k) {
      const Vector before = s.x_curr;
      double lipschitz = 0.0;
      for (Index i = 0; i < 20; ++i) lipschitz = std::max(lipschitz, inner_eval(inst, before, i).gradient.norm());
      s = step(c, std::move(s), make_info(algo, inst, before, pick(rng), k), inst);
      CHECK(s.x_curr.norm() <= inst.radius * (1 + 1e-12));
      CHECK((s.x_curr - before).norm() <= 2 * lipschitz / gamma * (1 + 1e-12));
    }
  }
}

TEST_CASE("deterministic single-sample DSPL decreases the objective") {
  RowMatrix a(1, 3);
  a << 1.0, -2.0, 0.5;
  const Vector truth = Vector::Unit(3, 1);
  Vector b(1);
  b << std::pow(a.row(0).dot(truth), 2);
  const ProblemInstance inst = pr_instance(a, b);
  // gamma >= 2||a||^2 makes the model step a majorization step.
  const double gamma = 2 * a.squaredNorm() + 1;
  AlgoConfig c = experiment(Algorithm::DSPL, 1.0, 1000);
  c.schedule = TheorySchedule{a.squaredNorm(), 0.0, std::sqrt(1000.0)};
  CHECK(stepsize(c, 1) == doctest::Approx(gamma));
  AlgoState s = AlgoState::start(Vector::Constant(3, 0.3));
  double previous = full_objective(inst, s.x_curr);
  for (Index k = 1; k <= 50; ++k) {
    const Vector before = s.x_curr;
    const DelayedInfo info = make_info(Algorithm::DSPL, inst, before, 0, k);
    s = step(c, std::move(s), info, inst);
    const double model_total = model_value(info, s.x_curr) + 0.5 * gamma * (s.x_curr - before).squaredNorm();
    CHECK(model_total <= model_value(info, before) + 1e-9);
    const double now = full_objective(inst, s.x_curr);
    CHECK(now <= previous + 1e-9);
    previous = now;
  }
  CHECK(previous < 1e-6);
}

}  // TEST_SUITE
