#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "crowd_al/model.hpp"

namespace crowd_al {

/// Candidate from the unlabeled pool.
struct PoolEntry {
  std::size_t index = 0;
  Vector x;
};

struct InstanceScore {
  std::size_t index = 0;
  double score = 0.0;
};

/// Lower and upper multiplicative bounds on ‖Err(μ_{n+1})‖ / ‖Err(μ_n)‖.
struct ContractionBounds {
  double lower = 1.0;
  double upper = 1.0;
};

/// xᵀ Λ_n⁻¹ x, the predictive variance of x under the current posterior.
/// The entropy and estimator-error criteria both reduce to this score.
double instance_score(const Vector& x, const WeightPosterior& weights);
double instance_score(const Vector& x, const Eigen::LLT<Matrix>& factor);

/// Scores every entry against one factorization of Λ_n.
std::vector<InstanceScore> score_pool(std::span<const PoolEntry> pool,
                                      const WeightPosterior& weights);

/// Highest-scoring entry; ties go to the lowest `index`.
/// Throws PoolExhausted on an empty pool.
std::size_t select_instance(std::span<const PoolEntry> pool, const WeightPosterior& weights);

/// det(Λ_{n+1}⁻¹) / det(Λ_n⁻¹) for Λ_{n+1} = Λ_n + β x xᵀ.
double det_shrinkage(const WeightPosterior& weights, const Vector& x, double beta);

ContractionBounds error_contraction_bounds(const WeightPosterior& weights, const Vector& x,
                                           double beta);

}  // namespace crowd_al
