#pragma once

#include "dspl/ball.hpp"
#include "dspl/types.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dspl {

enum class ProblemKind { PhaseRetrieval, BlindDeconvolution };

// How the ball constraint is applied to a blind-deconvolution pair (x, y).
enum class BallMode { PerBlock, Joint };

std::string to_string(ProblemKind kind);
ProblemKind parse_problem_kind(const std::string& text);

/// Robust phase retrieval  f(x, i) = |<a_i, x>^2 - b_i|  or blind
/// deconvolution  f((x, y), i) = |<u_i, x><v_i, y> - b_i|,  each restricted to
/// a ball of radius `radius` around the origin.
///
/// Points are stored as one vector: length n for phase retrieval and 2n
/// ([x; y]) for blind deconvolution.
struct ProblemInstance {
  ProblemKind kind = ProblemKind::PhaseRetrieval;
  RowMatrix sensing;      // A (phase retrieval) or U (blind deconvolution)
  RowMatrix sensing_aux;  // V; empty for phase retrieval
  Vector measurements;    // b
  Vector truth;           // x* or [x*; y*]
  std::vector<bool> corrupted;
  Vector initial;         // x^0 = x^1
  double radius = 1.0;
  BallMode ball_mode = BallMode::PerBlock;

  // Generator provenance, recorded in serialized headers.
  std::uint64_t seed = 0;
  double kappa = 1.0;
  double p_fail = 0.0;
  double noise_sd = 0.0;

  Index m() const { return sensing.rows(); }
  // Signal dimension n.
  Index n() const { return sensing.cols(); }
  // Length of an optimization point: n or 2n.
  Index dim() const { return kind == ProblemKind::PhaseRetrieval ? n() : 2 * n(); }
  Ball ball() const;
  Index corrupted_count() const;
};

struct InnerValue {
  double value = 0.0;
  Vector gradient;
};

/// Information a worker hands to the master. The prox-linear variant carries
/// the linear model  l(x) = <gradient, x> + intercept  of the inner map at the
/// worker's (stale) point; the subgradient variant carries f'(z, xi).
struct LinearModel {
  Vector gradient;
  double intercept = 0.0;
};

struct SubgradientInfo {
  Vector g;
};

struct DelayedInfo {
  std::variant<LinearModel, SubgradientInfo> payload;
  Index issued_at = 0;
  Index sample = 0;

  bool is_prox_linear() const { return std::holds_alternative<LinearModel>(payload); }
};

struct PhaseRetrievalParams {
  Index m = 300;
  Index n = 100;
  double kappa = 1.0;
  double p_fail = 0.0;
  double noise_sd = 5.0;
  std::uint64_t seed = 0;
};

struct BlindDeconvolutionParams {
  Index m = 300;
  Index n = 100;
  double kappa = 1.0;
  double p_fail = 0.0;
  double noise_sd = 5.0;
  std::uint64_t seed = 0;
  BallMode ball_mode = BallMode::PerBlock;
};

ProblemInstance generate_phase_retrieval(const PhaseRetrievalParams& params);

/// Sensing matrix  [H S_1; H S_2; H S_3]  with H the normalized Sylvester
/// Hadamard matrix and S_j random sign diagonals. Corrupted measurements are
/// set to zero. The start point is  signal + N(0, I).
ProblemInstance generate_hadamard_instance(const Vector& signal, double p_fail,
                                           std::uint64_t seed);

ProblemInstance generate_blind_deconvolution(const BlindDeconvolutionParams& params);

/// Sylvester construction scaled by 1/sqrt(n); n must be a power of two.
RowMatrix normalized_hadamard(Index n);

InnerValue inner_eval(const ProblemInstance& instance, const Vector& point, Index sample);

/// Mean absolute residual, or +inf when the point leaves the ball.
double full_objective(const ProblemInstance& instance, const Vector& point);

/// Objective at the ground truth (0 for uncorrupted instances).
double objective_at_truth(const ProblemInstance& instance);

/// sign(c) * grad c with sign(0) = 0.
Vector subgradient(const ProblemInstance& instance, const Vector& point, Index sample);

DelayedInfo make_prox_linear_info(const ProblemInstance& instance, const Vector& base,
                                  Index sample, Index issued_at);
DelayedInfo make_subgradient_info(const ProblemInstance& instance, const Vector& base,
                                  Index sample, Index issued_at);

/// |<gradient, x> + intercept|; throws on the subgradient variant.
double model_value(const DelayedInfo& info, const Vector& x);

/// Weak-convexity modulus estimate of every f(., xi): 2 max ||a_i||^2 for
/// phase retrieval and max ||u_i|| ||v_i|| for blind deconvolution.
double weak_convexity_estimate(const ProblemInstance& instance);

/// Reads one real per line (blank lines and '#' comments ignored).
Vector load_signal(const std::string& path);

/// Text container: a key/value header followed by the matrix sections.
void save_instance(const ProblemInstance& instance, const std::string& path);
ProblemInstance load_instance(const std::string& path);

/// Checks the generator invariants (measurement consistency on clean rows,
/// radius vs start point, shapes). Throws InvalidArgument on violation.
void validate_instance(const ProblemInstance& instance, double rel_tol = 1e-9);

}  // namespace dspl
