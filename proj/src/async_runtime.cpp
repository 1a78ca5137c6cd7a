#include "dspl/async_runtime.hpp"

#include "dspl/delay.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <random>
#include <thread>

namespace dspl {

void RuntimeConfig::validate() const {
  require(n_workers >= 1, "at least one worker is required");
  require(queue_capacity >= n_workers, "queue capacity must be at least the worker count");
  require(busy.microseconds >= 0.0, "busy-work time must be nonnegative");
  algo.validate();
}

namespace {

struct Snapshot {
  Vector x;
  Index k = 1;
};

class SnapshotBoard {
 public:
  void publish(std::shared_ptr<const Snapshot> snap) {
    std::lock_guard lock(mutex_);
    current_ = std::move(snap);
  }
  std::shared_ptr<const Snapshot> fetch() const {
    std::lock_guard lock(mutex_);
    return current_;
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const Snapshot> current_;
};

void burn(const BusyWork& busy, const Vector& x) {
  if (busy.microseconds <= 0.0) return;
  const auto budget = std::chrono::duration<double, std::micro>(busy.microseconds);
  if (busy.mode == BusyWorkMode::Latency) {
    std::this_thread::sleep_for(budget);
    return;
  }
  const auto until = std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::nanoseconds>(budget);
  volatile double sink = 0.0;
  while (std::chrono::steady_clock::now() < until) sink = sink + x.squaredNorm();
}

std::mt19937_64 worker_stream(std::uint64_t seed, Index worker) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 100u,
                    static_cast<std::uint32_t>(worker)};
  return std::mt19937_64(seq);
}

}  // namespace

AsyncRunRecord run_async(const ProblemInstance& instance, const RuntimeConfig& config_in,
                         std::uint64_t seed, Index horizon) {
  RuntimeConfig config = config_in;
  config.algo.horizon = horizon;
  config.validate();
  const Index m = instance.m();
  const Index record_stride = config.record_stride > 0 ? config.record_stride : m;

  BoundedQueue<DelayedInfo> queue(static_cast<std::size_t>(config.queue_capacity));
  SnapshotBoard board;
  std::atomic<Index> produced{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  AsyncRunRecord out;
  out.n_workers = config.n_workers;
  RunRecord& record = out.record;
  AlgoState state = AlgoState::start(instance.initial);
  board.publish(std::make_shared<const Snapshot>(Snapshot{state.x_curr, 1}));
  record.rows.push_back({0, full_objective(instance, state.x_curr), recovery_distance(instance, state.x_curr), 0, 0.0});
  if (config.keep_iterates) record.iterates.push_back(state.x_curr);

  const auto started = std::chrono::steady_clock::now();
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(config.n_workers));
  for (Index w = 0; w < config.n_workers; ++w) {
    workers.emplace_back([&, w] {
      try {
        auto rng = worker_stream(seed, w);
        std::uniform_int_distribution<Index> pick(0, m - 1);
        for (;;) {
          const auto snap = board.fetch();
          const Index sample = pick(rng);
          DelayedInfo info = make_info(config.algo.algorithm, instance, snap->x, sample, snap->k);
          burn(config.busy, snap->x);
          if (config.on_message) config.on_message(w, info);
          if (!queue.push(std::move(info))) return;
          produced.fetch_add(1, std::memory_order_relaxed);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        queue.close();
      }
    });
  }

  StepTelemetry telemetry;
  std::string abort_reason;
  Index k = 1;
  for (; k <= horizon; ++k) {
    auto message = queue.pop();
    if (!message) {
      abort_reason = "worker failure";
      break;
    }
    const Index tau = k - message->issued_at;
    record.count_delay(tau);
    try {
      state = step(config.algo, std::move(state), *message, instance, &telemetry);
    } catch (const DivergenceError& err) {
      record.summary.diverged = true;
      abort_reason = err.what();
      break;
    }
    board.publish(std::make_shared<const Snapshot>(Snapshot{state.x_curr, k + 1}));
    ++out.applied;
    if (config.keep_log) out.log.push_back(std::move(*message));
    if (config.keep_iterates) record.iterates.push_back(state.x_curr);
    if (k % record_stride == 0 || k == horizon)
      record.rows.push_back({k, full_objective(instance, state.x_curr), recovery_distance(instance, state.x_curr), tau,
                             telemetry.last_step_norm});
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  queue.close();
  for (auto& t : workers) t.join();
  out.drained = static_cast<Index>(queue.drain());
  out.produced = produced.load();

  if (failure) {
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& err) {
      throw std::runtime_error(std::string("async run aborted: worker failed: ") + err.what());
    }
  }
  record.summary.diagnostic = abort_reason;
  record.summary.iterations_used = out.applied;
  record.summary.boundary_hits = telemetry.boundary_hits;
  record.summary.wall_seconds = elapsed;
  record.summary.final_objective = full_objective(instance, state.x_curr);
  record.summary.final_recovery = recovery_distance(instance, state.x_curr);
  record.summary.final_stationarity = std::numeric_limits<double>::quiet_NaN();
  record.final_point = std::move(state.x_curr);
  out.updates_per_second = elapsed > 0.0 ? static_cast<double>(out.applied) / elapsed : 0.0;
  return out;
}

std::vector<Vector> replay_log(const ProblemInstance& instance, const AlgoConfig& config,
                               const std::vector<DelayedInfo>& log) {
  AlgoState state = AlgoState::start(instance.initial);
  std::vector<Vector> iterates{state.x_curr};
  iterates.reserve(log.size() + 1);
  for (const auto& info : log) {
    state = step(config, std::move(state), info, instance);
    iterates.push_back(state.x_curr);
  }
  return iterates;
}

void write_timing_csv(const std::vector<AsyncRunRecord>& runs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << std::setprecision(17) << kTimingCsvHeader << '\n';
  for (const auto& run : runs)
    out << run.n_workers << ',' << run.record.summary.wall_seconds << ',' << run.updates_per_second << '\n';
}

}  // namespace dspl
