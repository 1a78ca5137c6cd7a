#pragma once

#include "dspl/types.hpp"

namespace dspl {

/// Feasible set of the indicator term: either one Euclidean ball over the
/// whole point, or an independent ball on each contiguous block.
struct Ball {
  double radius = 1.0;
  // Block length; 0 means the ball covers the whole vector.
  Index block = 0;

  bool contains(const Vector& x, double rel_slack = 1e-12) const;
  Vector project(const Vector& x) const;
  // Largest block norm (the whole norm when block == 0).
  double max_norm(const Vector& x) const;
};

}  // namespace dspl
