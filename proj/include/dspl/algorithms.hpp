#pragma once

#include "dspl/model.hpp"
#include "dspl/types.hpp"

#include <string>
#include <variant>

namespace dspl {

enum class Algorithm { DSPL, DSEPL, DSGD, DSEGD };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& text);

/// True for the prox-linear family (DSPL, DSEPL).
bool uses_linear_model(Algorithm algo);
/// True for the extrapolated variants (DSEPL, DSEGD).
bool uses_momentum(Algorithm algo);

/// gamma = 2 lambda + kappa + sqrt(K)/alpha.
struct TheorySchedule {
  double weak_convexity = 0.0;  // lambda
  double omega_modulus = 0.0;   // kappa of the regularizer
  double alpha = 1.0;
};

/// gamma = sqrt(K/alpha).
struct ExperimentSchedule {
  double alpha = 1.0;
};

struct AlgoConfig {
  Algorithm algorithm = Algorithm::DSPL;
  std::variant<TheorySchedule, ExperimentSchedule> schedule = ExperimentSchedule{};
  double beta = 0.0;
  Index horizon = 1;  // K
  double rho = 1.0;   // envelope parameter used for reporting

  void validate() const;
};

/// Theory schedule with lambda = weak_convexity_estimate(instance), kappa = 0.
TheorySchedule theory_schedule_for(const ProblemInstance& instance, double alpha);

struct AlgoState {
  Vector x_curr;
  Vector x_prev;
  Index k = 1;

  static AlgoState start(const Vector& x1) { return {x1, x1, 1}; }
};

/// Constant in k; k must lie in [1, K].
double stepsize(const AlgoConfig& config, Index k);

/// y = x_curr + beta (x_curr - x_prev).
Vector extrapolate(const AlgoState& state, double beta);

struct StepTelemetry {
  Index boundary_hits = 0;
  double last_step_norm = 0.0;
};

/// One master update. Prox-linear information drives DSPL/DSEPL and
/// subgradient information drives DSGD/DSEGD; the proximal center is the
/// extrapolated point for the momentum variants.
AlgoState step(const AlgoConfig& config, AlgoState state, const DelayedInfo& info,
               const ProblemInstance& instance, StepTelemetry* telemetry = nullptr);

/// Worker-side message for the configured family at a (possibly stale) point.
DelayedInfo make_info(Algorithm algo, const ProblemInstance& instance, const Vector& base,
                      Index sample, Index issued_at);

}  // namespace dspl
