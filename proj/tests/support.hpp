#pragma once

#include <cstdint>
#include <random>

#include "crowd_al/model.hpp"

namespace crowd_al::testing {

inline Matrix random_spd(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix a(d, d);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = n01(rng);
  return a * a.transpose() + 0.5 * Matrix::Identity(d, d);
}

inline Vector random_vector(std::size_t d, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Vector v(d);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = n(rng);
  return v;
}

}  // namespace crowd_al::testing
