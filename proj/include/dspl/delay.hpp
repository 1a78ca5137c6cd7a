#pragma once

#include "dspl/algorithms.hpp"
#include "dspl/metrics.hpp"
#include "dspl/model.hpp"

#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <variant>

namespace dspl {

struct ConstantDelay {
  Index tau = 0;
};
/// Support {0, 1, 2, ...}, P(tau = j) = p (1 - p)^j.
struct GeometricDelay {
  double p = 1.0;
};
struct PoissonDelay {
  double mean = 1.0;
};

using DelayFamily = std::variant<ConstantDelay, GeometricDelay, PoissonDelay>;

/// Delay distribution truncated at ceil(2 * mean) (no truncation for constants).
class DelayModel {
 public:
  explicit DelayModel(DelayFamily family);

  static DelayModel constant(Index tau) { return DelayModel(ConstantDelay{tau}); }
  static DelayModel geometric(double p) { return DelayModel(GeometricDelay{p}); }
  static DelayModel poisson(double mean) { return DelayModel(PoissonDelay{mean}); }

  /// Parses "family:mean" with family in {const, geom, poisson}. A geometric
  /// mean mu maps to p = 1/(mu + 1); a zero mean yields Constant{0}.
  static DelayModel parse(const std::string& text);

  const DelayFamily& family() const { return family_; }
  Index truncation() const { return truncation_; }
  /// Mean before truncation.
  double nominal_mean() const;
  /// Exact E[min(tau, T)] and E[min(tau, T)^2].
  double truncated_mean() const;
  double truncated_second_moment() const;
  /// P(min(tau, T) = j) for j in [0, T].
  std::vector<double> truncated_pmf() const;
  std::string describe() const;

  Index sample(std::mt19937_64& rng) const;

 private:
  DelayFamily family_;
  Index truncation_ = 0;
};

/// Ring of recent (iterate, sample) pairs keyed by iteration index.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(Index capacity);

  void push(Index k, Vector iterate, Index sample);
  Index newest() const { return newest_; }
  Index oldest() const { return newest_ - static_cast<Index>(entries_.size()) + 1; }
  Index capacity() const { return capacity_; }

  struct Entry {
    Vector iterate;
    Index sample = 0;
  };
  /// Entry recorded at iteration k; throws if it has been evicted.
  const Entry& lookup(Index k) const;

 private:
  Index capacity_;
  Index newest_ = 0;
  std::deque<Entry> entries_;
};

struct SimulationOptions {
  double stop_factor = 1.5;
  // Objective floor so the stop rule stays meaningful when f(x*) = 0.
  double absolute_floor = 1e-12;
  bool stop_early = true;
  // End after this many iterations (0 = the horizon); stepsizes still use the horizon.
  Index stop_after = 0;
  // Iterations between objective checks for the stop rule and divergence guard.
  Index check_stride = 1;
  // Iterations between recorded rows; 0 means once per epoch (m).
  Index record_stride = 0;
  // Abort when the objective exceeds this multiple of its initial value.
  double divergence_factor = 1e6;
  // Draw a fresh sample at the stale point instead of replaying xi^{k - tau}.
  bool fresh_sample = false;
  bool keep_iterates = false;
  bool compute_stationarity = false;
  MoreauOptions moreau;
};

/// Sequential run where the information applied at iteration k is computed
/// at x^{k - tau_k} with the sample drawn at that iteration.
RunRecord run_simulated(const ProblemInstance& instance, const AlgoConfig& config,
                        const DelayModel& delay, std::uint64_t seed,
                        const SimulationOptions& options = {});

/// Separate deterministic streams for sample and delay draws.
std::mt19937_64 sample_stream(std::uint64_t seed);
std::mt19937_64 delay_stream(std::uint64_t seed);

}  // namespace dspl
