#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "crowd_al/model.hpp"

namespace crowd_al {

enum class TransformKind { linear, sigmoid };

TransformKind parse_transform_kind(std::string_view name);
std::string_view to_string(TransformKind kind);

/// Sigmoid distance basis: output b is 1 / (1 + exp(-‖x - R_b‖ / s)).
/// `centers` holds one center per row; linear specs ignore centers and scale.
struct TransformSpec {
  Matrix centers;
  double scale = 1.0;
  TransformKind kind = TransformKind::linear;

  void validate(std::size_t input_dim) const;
  std::size_t output_dim(std::size_t input_dim) const;
};

/// Affine map learned by normalize(); apply() is the only code path that
/// produces normalized values, so re-applying it to the training rows is
/// bitwise identical to the normalized training set.
struct Normalizer {
  Vector mean;
  Vector scale;  // population standard deviation; 0 marks a constant column

  Vector apply(const Vector& x) const;
  Matrix apply(const Matrix& rows) const;
};

struct Normalized {
  Matrix rows;
  Normalizer params;
};

/// Zero-mean, unit population-sd columns. Throws InvalidInput on empty input.
Normalized normalize(const Matrix& rows);

/// Lloyd's k-means, each run seeded with k distinct points drawn uniformly.
/// A run stops at an assignment fixed point or after 100 iterations; the
/// lowest-objective run of 10 restarts is kept. When `trace` is given it
/// receives the objective after every center update of the kept run.
Matrix fit_centers(const Matrix& rows, std::size_t k, std::uint64_t seed,
                   std::vector<double>* trace = nullptr);

/// Sum of squared distances from each row to its nearest center.
double kmeans_objective(const Matrix& rows, const Matrix& centers);

Vector transform(const Vector& x, const TransformSpec& spec);
Matrix transform(const Matrix& rows, const TransformSpec& spec);

}  // namespace crowd_al
