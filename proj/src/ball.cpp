#include "dspl/ball.hpp"

#include <algorithm>

namespace dspl {

namespace {

template <class Fn>
void for_each_block(Index size, Index block, Fn&& fn) {
  const Index len = block > 0 ? block : size;
  for (Index start = 0; start < size; start += len) fn(start, std::min(len, size - start));
}

}  // namespace

bool Ball::contains(const Vector& x, double rel_slack) const {
  return max_norm(x) <= radius * (1.0 + rel_slack);
}

double Ball::max_norm(const Vector& x) const {
  double worst = 0.0;
  for_each_block(x.size(), block, [&](Index start, Index len) {
    worst = std::max(worst, x.segment(start, len).norm());
  });
  return worst;
}

Vector Ball::project(const Vector& x) const {
  Vector out = x;
  for_each_block(x.size(), block, [&](Index start, Index len) {
    const double norm = x.segment(start, len).norm();
    if (norm > radius) out.segment(start, len) *= radius / norm;
  });
  return out;
}

}  // namespace dspl
