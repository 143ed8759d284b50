#include "crowd_al/active.hpp"

#include <algorithm>

#include "crowd_al/error.hpp"

namespace crowd_al {

namespace {

void check_beta(double beta) {
  if (!(beta > 0.0)) throw InvalidInput("precision beta must be > 0");
}

}  // namespace

double instance_score(const Vector& x, const Eigen::LLT<Matrix>& factor) {
  if (x.size() != factor.rows()) throw InvalidInput("instance_score: dimension mismatch");
  return factor.matrixL().solve(x).squaredNorm();
}

double instance_score(const Vector& x, const WeightPosterior& weights) {
  if (static_cast<std::size_t>(x.size()) != weights.dim()) {
    throw InvalidInput("instance_score: dimension mismatch");
  }
  return instance_score(x, weights.factor());
}

std::vector<InstanceScore> score_pool(std::span<const PoolEntry> pool,
                                      const WeightPosterior& weights) {
  std::vector<InstanceScore> out;
  out.reserve(pool.size());
  if (pool.empty()) return out;
  const auto factor = weights.factor();
  for (const auto& entry : pool) out.push_back({entry.index, instance_score(entry.x, factor)});
  return out;
}

std::size_t select_instance(std::span<const PoolEntry> pool, const WeightPosterior& weights) {
  if (pool.empty()) throw PoolExhausted("select_instance: unlabeled pool is empty");
  const auto scores = score_pool(pool, weights);
  const auto best = std::max_element(
      scores.begin(), scores.end(), [](const InstanceScore& a, const InstanceScore& b) {
        if (a.score != b.score) return a.score < b.score;
        return a.index > b.index;
      });
  return best->index;
}

double det_shrinkage(const WeightPosterior& weights, const Vector& x, double beta) {
  check_beta(beta);
  return 1.0 / (1.0 + beta * instance_score(x, weights));
}

ContractionBounds error_contraction_bounds(const WeightPosterior& weights, const Vector& x,
                                           double beta) {
  return {det_shrinkage(weights, x, beta), 1.0};
}

}  // namespace crowd_al
