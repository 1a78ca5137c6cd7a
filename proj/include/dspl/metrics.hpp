#pragma once

#include "dspl/algorithms.hpp"
#include "dspl/model.hpp"
#include "dspl/types.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace dspl {

struct RunRow {
  Index k = 0;
  double objective = 0.0;
  double recovery = 0.0;
  Index delay = 0;
  double step_norm = 0.0;

  bool operator==(const RunRow&) const = default;
};

struct RunSummary {
  Index iterations_used = 0;
  bool stopped_early = false;
  bool diverged = false;
  std::string diagnostic;
  Index boundary_hits = 0;
  double wall_seconds = 0.0;
  double final_objective = 0.0;
  double final_recovery = 0.0;
  // NaN unless requested by the runner options.
  double final_stationarity = 0.0;
};

/// Per-iteration metrics stream plus run summary.
struct RunRecord {
  std::vector<RunRow> rows;
  RunSummary summary;
  // Histogram of observed delays: delay_counts[t] = #updates with delay t.
  std::vector<Index> delay_counts;
  Vector final_point;
  // Every iterate x^1, x^2, ... when the runner was asked to keep them.
  std::vector<Vector> iterates;

  void count_delay(Index tau);
  double mean_delay() const;
  double second_moment_delay() const;
};

/// Minimal view of a finite-sum composite loss  (1/m) sum_i |c_i(x)|  used by
/// the stationarity estimator.
struct CompositeLoss {
  Index terms = 0;
  Index dim = 0;
  // Weak-convexity estimate of a single term.
  double weak_convexity = 0.0;
  std::function<InnerValue(const Vector&, Index)> eval;
};

CompositeLoss composite_loss(const ProblemInstance& instance);

struct MoreauOptions {
  Index inner_iters = 200;
  double inner_tol = 1e-9;
  // gamma_inner = rho + 2 lambda; negative means use that default.
  double inner_gamma = -1.0;
};

struct MoreauResult {
  double stationarity = 0.0;  // rho^2 ||x - x_hat||^2
  Vector prox_point;          // x_hat
  double last_movement = 0.0;
  Index iterations = 0;
};

/// ||grad psi_{1/rho}(x)||^2 = rho^2 ||x - prox_{psi/rho}(x)||^2 where the
/// prox is approximated by deterministic full-batch prox-linear iterations
/// on  psi(y) + (rho/2)||y - x||^2.
MoreauResult moreau_stationarity(const CompositeLoss& loss, const Vector& x, double rho,
                                 const MoreauOptions& options = {});
MoreauResult moreau_stationarity(const ProblemInstance& instance, const Vector& x, double rho,
                                 const MoreauOptions& options = {});

/// Default reporting parameter rho = 2 lambda_hat + 1.
double default_rho(const ProblemInstance& instance);

/// Phase retrieval: min(||x - x*||, ||x + x*||).
/// Blind deconvolution: ||x y^T - x* y*^T||_F / ||x* y*^T||_F.
double recovery_distance(const ProblemInstance& instance, const Vector& point);

inline constexpr const char* kRunCsvHeader = "k,objective,recovery,delay,step_norm";
inline constexpr const char* kSummaryCsvHeader = "algo,tau_mean,alpha,beta,mean_iters,diverged_count";

void write_csv(const RunRecord& record, const std::string& path);
void write_csv(const RunRecord& record, std::ostream& out);
std::vector<RunRow> read_csv(const std::string& path);

/// One finished run inside a sweep.
struct RunOutcome {
  std::string algo;
  double tau_mean = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  Index iterations_used = 0;
  bool stopped_early = false;
  bool diverged = false;
};

struct SummaryCell {
  std::string algo;
  double tau_mean = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double mean_iters = 0.0;  // over non-diverged runs; NaN if none
  Index runs = 0;
  Index diverged_count = 0;
};

/// Groups outcomes by (algo, tau_mean, alpha, beta) in first-seen order and
/// averages iterations_used over the non-diverged runs of each group.
std::vector<SummaryCell> summarize(const std::vector<RunOutcome>& outcomes);

void write_summary_csv(const std::vector<SummaryCell>& cells, const std::string& path);
std::vector<SummaryCell> read_summary_csv(const std::string& path);

inline constexpr const char* kOutcomeCsvHeader =
    "algo,tau_mean,alpha,beta,seed,iterations_used,stopped_early,diverged";
void write_outcomes_csv(const std::vector<RunOutcome>& outcomes, const std::string& path);
std::vector<RunOutcome> read_outcomes_csv(const std::string& path);

}  // namespace dspl
