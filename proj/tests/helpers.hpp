#pragma once

#include "dspl/model.hpp"

#include <random>
#include <vector>

namespace dspl::testing {

inline Vector random_vector(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Phase-retrieval instance from explicit rows; truth and start default to the
// first column direction.
inline ProblemInstance pr_instance(const RowMatrix& a, const Vector& b, double radius = 1e6) {
  ProblemInstance inst;
  inst.kind = ProblemKind::PhaseRetrieval;
  inst.sensing = a;
  inst.measurements = b;
  inst.truth = Vector::Zero(a.cols());
  inst.initial = Vector::Zero(a.cols());
  inst.corrupted.assign(static_cast<std::size_t>(a.rows()), false);
  inst.radius = radius;
  return inst;
}

inline ProblemInstance small_pr(Index m, Index n, std::uint64_t seed, double kappa = 1.0, double p_fail = 0.0) {
  PhaseRetrievalParams p;
  p.m = m;
  p.n = n;
  p.kappa = kappa;
  p.p_fail = p_fail;
  p.seed = seed;
  return generate_phase_retrieval(p);
}

inline ProblemInstance small_bd(Index m, Index n, std::uint64_t seed, double p_fail = 0.0) {
  BlindDeconvolutionParams p;
  p.m = m;
  p.n = n;
  p.p_fail = p_fail;
  p.seed = seed;
  return generate_blind_deconvolution(p);
}

inline bool bit_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Index i = 0; i < a.size(); ++i)
    if (a(i) != b(i)) return false;
  return true;
}

}  // namespace dspl::testing
