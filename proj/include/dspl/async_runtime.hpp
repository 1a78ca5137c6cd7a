#pragma once

#include "dspl/algorithms.hpp"
#include "dspl/metrics.hpp"
#include "dspl/model.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace dspl {

/// Bounded blocking multi-producer queue. push blocks while full and fails
/// once the queue is closed; pop blocks while empty and returns nullopt once
/// closed and drained.
template <class T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    require(capacity >= 1, "queue capacity must be at least 1");
  }

  bool push(T item) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_full_.notify_all();
    not_empty_.notify_all();
  }

  /// Removes everything still queued (used after close at shutdown).
  std::size_t drain() {
    std::lock_guard lock(mutex_);
    const std::size_t n = items_.size();
    items_.clear();
    return n;
  }

  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

/// Artificial per-message cost on the worker side. `Compute` spins the CPU
/// for the given time; `Latency` blocks the worker thread for it, standing in
/// for computation on dedicated worker hardware.
enum class BusyWorkMode { Compute, Latency };

struct BusyWork {
  BusyWorkMode mode = BusyWorkMode::Compute;
  double microseconds = 0.0;
};

struct RuntimeConfig {
  Index n_workers = 1;
  AlgoConfig algo;
  Index queue_capacity = 1;
  BusyWork busy;
  bool keep_log = false;
  bool keep_iterates = false;
  // Rows every `record_stride` updates; 0 means once per epoch.
  Index record_stride = 0;
  // Called on the worker thread before each push; a throw aborts the run.
  std::function<void(Index worker, const DelayedInfo&)> on_message;

  void validate() const;
};

struct AsyncRunRecord {
  RunRecord record;
  // Applied messages in application order (when keep_log is set).
  std::vector<DelayedInfo> log;
  Index produced = 0;
  Index applied = 0;
  Index drained = 0;  // still queued when the master stopped
  Index n_workers = 0;
  double updates_per_second = 0.0;
};

/// Master applies K updates from N worker threads. Workers copy the latest
/// published iterate, compute oracle information at it, and queue a message
/// tagged with the fetched iteration index.
AsyncRunRecord run_async(const ProblemInstance& instance, const RuntimeConfig& config,
                         std::uint64_t seed, Index horizon);

/// Feeds a recorded message log through the sequential stepper from x^1 and
/// returns every iterate x^1, ..., x^{len+1}.
std::vector<Vector> replay_log(const ProblemInstance& instance, const AlgoConfig& config,
                               const std::vector<DelayedInfo>& log);

inline constexpr const char* kTimingCsvHeader = "n_workers,wall_seconds,updates_per_second";
void write_timing_csv(const std::vector<AsyncRunRecord>& runs, const std::string& path);

}  // namespace dspl
