#include "dspl/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace dspl {

ScheduleKind parse_schedule_kind(const std::string& text) {
  if (text == "experiment") return ScheduleKind::Experiment;
  if (text == "theory") return ScheduleKind::Theory;
  throw InvalidArgument("unknown schedule '" + text + "' (expected experiment or theory)");
}

std::string to_string(ScheduleKind kind) { return kind == ScheduleKind::Experiment ? "experiment" : "theory"; }

AlgoConfig make_config(const ProblemInstance& instance, Algorithm algo, double alpha, double beta, Index horizon,
                       ScheduleKind schedule) {
  AlgoConfig config;
  config.algorithm = algo;
  config.beta = beta;
  config.horizon = horizon > 0 ? horizon : 400 * instance.m();
  if (schedule == ScheduleKind::Experiment)
    config.schedule = ExperimentSchedule{alpha};
  else
    config.schedule = theory_schedule_for(instance, alpha);
  config.rho = default_rho(instance);
  config.validate();
  return config;
}

namespace {

std::string delay_text(const std::string& family, double mean) {
  std::ostringstream out;
  out.precision(17);
  out << family << ':' << mean;
  return out.str();
}

}  // namespace

std::vector<SweepJob> expand_grid(const SweepGrid& grid) {
  require(!grid.algos.empty() && !grid.delay_means.empty() && !grid.alphas.empty() && !grid.betas.empty() &&
              grid.seeds >= 1,
          "sweep grid is empty");
  for (double b : grid.betas)
    if (b != 0.0)
      for (Algorithm a : grid.algos)
        require(uses_momentum(a), "beta " + std::to_string(b) + " conflicts with " + to_string(a) +
                                      " (use dsepl or dsegd for momentum)");
  for (double mean : grid.delay_means) DelayModel::parse(delay_text(grid.delay_family, mean));
  std::vector<SweepJob> jobs;
  for (Algorithm a : grid.algos)
    for (double mean : grid.delay_means)
      for (double alpha : grid.alphas)
        for (double beta : grid.betas)
          for (Index s = 0; s < grid.seeds; ++s)
            jobs.push_back({a, mean, alpha, beta, grid.first_seed + static_cast<std::uint64_t>(s)});
  return jobs;
}

SweepResult run_sweep(const SweepGrid& grid, const InstanceFactory& factory, bool per_seed_instances, Index threads,
                      const std::function<void(std::size_t, const SweepJob&, const RunRecord&)>& on_record) {
  SweepResult result;
  result.jobs = expand_grid(grid);
  require(threads >= 1, "thread count must be at least 1");

  // Parse every delay up front so grammar errors surface before any work.
  std::vector<DelayModel> delays;
  for (double mean : grid.delay_means) delays.push_back(DelayModel::parse(delay_text(grid.delay_family, mean)));

  std::map<std::uint64_t, ProblemInstance> instances;
  if (per_seed_instances) {
    for (Index s = 0; s < grid.seeds; ++s) {
      const std::uint64_t seed = grid.first_seed + static_cast<std::uint64_t>(s);
      instances.emplace(seed, factory(seed));
    }
  } else {
    instances.emplace(grid.first_seed, factory(grid.first_seed));
  }
  auto instance_for = [&](std::uint64_t seed) -> const ProblemInstance& {
    return per_seed_instances ? instances.at(seed) : instances.begin()->second;
  };

  result.outcomes.resize(result.jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= result.jobs.size()) return;
      try {
        const SweepJob& job = result.jobs[j];
        const ProblemInstance& instance = instance_for(job.seed);
        const auto mean_at =
            std::find(grid.delay_means.begin(), grid.delay_means.end(), job.tau_mean) - grid.delay_means.begin();
        const AlgoConfig config = make_config(instance, job.algo, job.alpha, job.beta, grid.horizon, grid.schedule);
        RunRecord record =
            run_simulated(instance, config, delays[static_cast<std::size_t>(mean_at)], job.seed, grid.options);
        RunOutcome& o = result.outcomes[j];
        o.algo = to_string(job.algo);
        o.tau_mean = job.tau_mean;
        o.alpha = job.alpha;
        o.beta = job.beta;
        o.seed = job.seed;
        o.iterations_used = record.summary.iterations_used;
        o.stopped_early = record.summary.stopped_early;
        o.diverged = record.summary.diverged;
        if (on_record) on_record(j, job, record);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(result.jobs.size());
        return;
      }
    }
  };

  const Index n_threads = std::min<Index>(threads, static_cast<Index>(result.jobs.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (const auto& o : result.outcomes) result.diverged += o.diverged ? 1 : 0;
  return result;
}

}  // namespace dspl
