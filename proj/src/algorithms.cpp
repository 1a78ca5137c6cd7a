#include "dspl/algorithms.hpp"

#include "dspl/prox.hpp"

#include <cmath>

namespace dspl {

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::DSPL: return "dspl";
    case Algorithm::DSEPL: return "dsepl";
    case Algorithm::DSGD: return "dsgd";
    case Algorithm::DSEGD: return "dsegd";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "dspl") return Algorithm::DSPL;
  if (text == "dsepl") return Algorithm::DSEPL;
  if (text == "dsgd") return Algorithm::DSGD;
  if (text == "dsegd") return Algorithm::DSEGD;
  throw InvalidArgument("unknown algorithm '" + text + "' (expected dspl, dsepl, dsgd, dsegd)");
}

bool uses_linear_model(Algorithm algo) { return algo == Algorithm::DSPL || algo == Algorithm::DSEPL; }

bool uses_momentum(Algorithm algo) { return algo == Algorithm::DSEPL || algo == Algorithm::DSEGD; }

void AlgoConfig::validate() const {
  require(horizon >= 1, "horizon K must be at least 1");
  require(beta >= 0.0 && beta < 1.0, "beta must lie in [0, 1)");
  require(uses_momentum(algorithm) || beta == 0.0,
          "beta > 0 requires an extrapolated algorithm (dsepl or dsegd)");
  const double alpha = std::visit([](const auto& s) { return s.alpha; }, schedule);
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  if (const auto* t = std::get_if<TheorySchedule>(&schedule))
    require(t->weak_convexity >= 0.0 && t->omega_modulus >= 0.0, "lambda and kappa must be nonnegative");
}

TheorySchedule theory_schedule_for(const ProblemInstance& instance, double alpha) {
  return TheorySchedule{weak_convexity_estimate(instance), 0.0, alpha};
}

double stepsize(const AlgoConfig& config, Index k) {
  require(k >= 1 && k <= config.horizon, "iteration index outside [1, K]");
  const double root_k = std::sqrt(static_cast<double>(config.horizon));
  if (const auto* t = std::get_if<TheorySchedule>(&config.schedule)) {
    require(t->alpha > 0.0, "alpha must be positive");
    return 2.0 * t->weak_convexity + t->omega_modulus + root_k / t->alpha;
  }
  const auto& e = std::get<ExperimentSchedule>(config.schedule);
  require(e.alpha > 0.0, "alpha must be positive");
  return std::sqrt(static_cast<double>(config.horizon) / e.alpha);
}

Vector extrapolate(const AlgoState& state, double beta) {
  return state.x_curr + beta * (state.x_curr - state.x_prev);
}

AlgoState step(const AlgoConfig& config, AlgoState state, const DelayedInfo& info,
               const ProblemInstance& instance, StepTelemetry* telemetry) {
  const bool linear = uses_linear_model(config.algorithm);
  if (linear != info.is_prox_linear())
    throw InvalidArgument("delayed information does not match algorithm " + to_string(config.algorithm));
  if (info.issued_at > state.k)
    throw InvalidArgument("delayed information issued after the current iteration");

  const bool finite_info = linear ? std::get<LinearModel>(info.payload).gradient.allFinite() &&
                                        std::isfinite(std::get<LinearModel>(info.payload).intercept)
                                  : std::get<SubgradientInfo>(info.payload).g.allFinite();
  if (!finite_info)
    throw DivergenceError("non-finite oracle information at k = " + std::to_string(state.k));

  const double gamma = stepsize(config, std::min(state.k, config.horizon));
  const Vector center = uses_momentum(config.algorithm) ? extrapolate(state, config.beta) : state.x_curr;
  const Ball ball = instance.ball();

  ProxStep next = linear ? [&] {
    const auto& model = std::get<LinearModel>(info.payload);
    return prox_linear_model(model.gradient, model.intercept, center, gamma, ball);
  }()
                         : prox_sgd_step(std::get<SubgradientInfo>(info.payload).g, center, gamma, ball);

  if (!next.x.allFinite())
    throw DivergenceError("non-finite iterate at k = " + std::to_string(state.k) + " (" +
                          to_string(config.algorithm) + ", gamma = " + std::to_string(gamma) + ")");
  if (telemetry) {
    telemetry->boundary_hits += next.boundary_hit ? 1 : 0;
    telemetry->last_step_norm = (next.x - state.x_curr).norm();
  }
  state.x_prev = std::move(state.x_curr);
  state.x_curr = std::move(next.x);
  ++state.k;
  return state;
}

DelayedInfo make_info(Algorithm algo, const ProblemInstance& instance, const Vector& base,
                      Index sample, Index issued_at) {
  return uses_linear_model(algo) ? make_prox_linear_info(instance, base, sample, issued_at)
                                 : make_subgradient_info(instance, base, sample, issued_at);
}

}  // namespace dspl
