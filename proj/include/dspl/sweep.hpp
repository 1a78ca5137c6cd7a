#pragma once

#include "dspl/algorithms.hpp"
#include "dspl/delay.hpp"
#include "dspl/metrics.hpp"
#include "dspl/model.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace dspl {

enum class ScheduleKind { Experiment, Theory };

ScheduleKind parse_schedule_kind(const std::string& text);
std::string to_string(ScheduleKind kind);

/// Run configuration for one instance. A zero horizon means 400 epochs.
AlgoConfig make_config(const ProblemInstance& instance, Algorithm algo, double alpha, double beta,
                       Index horizon = 0, ScheduleKind schedule = ScheduleKind::Experiment);

struct SweepGrid {
  std::vector<Algorithm> algos;
  std::string delay_family = "poisson";
  std::vector<double> delay_means;
  std::vector<double> alphas;
  std::vector<double> betas{0.0};
  Index seeds = 20;
  std::uint64_t first_seed = 1;
  Index horizon = 0;
  ScheduleKind schedule = ScheduleKind::Experiment;
  SimulationOptions options;
};

struct SweepJob {
  Algorithm algo = Algorithm::DSPL;
  double tau_mean = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
};

/// Cartesian product algo x delay mean x alpha x beta x seed, seeds innermost.
/// Momentum with a plain algorithm is rejected, as is an empty grid.
std::vector<SweepJob> expand_grid(const SweepGrid& grid);

/// Instance used by every job with the given seed.
using InstanceFactory = std::function<ProblemInstance(std::uint64_t seed)>;

struct SweepResult {
  std::vector<SweepJob> jobs;
  std::vector<RunOutcome> outcomes;  // aligned with jobs
  Index diverged = 0;
};

/// Runs every job with up to `threads` workers. When `per_seed_instances` is
/// false the factory is called once (with first_seed) and the instance is
/// shared. `on_record`, if set, is called from worker threads with each
/// finished record.
SweepResult run_sweep(const SweepGrid& grid, const InstanceFactory& factory, bool per_seed_instances,
                      Index threads,
                      const std::function<void(std::size_t, const SweepJob&, const RunRecord&)>& on_record = {});

}  // namespace dspl
