#include "crowd_al/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "crowd_al/error.hpp"

namespace crowd_al {

namespace {

constexpr std::size_t kMaxLloydIterations = 100;
constexpr std::size_t kRestarts = 10;

std::size_t nearest_center(const Eigen::Ref<const Vector>& x, const Matrix& centers) {
  std::size_t best = 0;
  double best_dist = (centers.row(0).transpose() - x).squaredNorm();
  for (Eigen::Index c = 1; c < centers.rows(); ++c) {
    const double dist = (centers.row(c).transpose() - x).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

// Indices of the first occurrence of each distinct row, in row order.
std::vector<Eigen::Index> distinct_rows(const Matrix& rows) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      if (rows(a, c) != rows(b, c)) return rows(a, c) < rows(b, c);
    }
    return a < b;
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<Eigen::Index> firsts;
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i == 0 || rows.row(order[i]) != rows.row(order[i - 1])) firsts.push_back(order[i]);
  }
  std::sort(firsts.begin(), firsts.end());
  return firsts;
}

}  // namespace

TransformKind parse_transform_kind(std::string_view name) {
  if (name == "linear") return TransformKind::linear;
  if (name == "sigmoid") return TransformKind::sigmoid;
  throw InvalidInput("unknown transform kind '" + std::string(name) + "'");
}

std::string_view to_string(TransformKind kind) {
  return kind == TransformKind::linear ? "linear" : "sigmoid";
}

void TransformSpec::validate(std::size_t input_dim) const {
  if (kind == TransformKind::linear) return;
  if (!(scale > 0.0)) throw InvalidInput("TransformSpec: scale must be > 0");
  if (centers.rows() == 0) throw InvalidInput("TransformSpec: sigmoid transform needs centers");
  if (static_cast<std::size_t>(centers.cols()) != input_dim) {
    throw InvalidInput("TransformSpec: center dimension does not match input dimension");
  }
}

std::size_t TransformSpec::output_dim(std::size_t input_dim) const {
  return kind == TransformKind::linear ? input_dim : static_cast<std::size_t>(centers.rows());
}

Vector Normalizer::apply(const Vector& x) const {
  if (x.size() != mean.size()) throw InvalidInput("Normalizer: dimension mismatch");
  Vector out(x.size());
  for (Eigen::Index c = 0; c < x.size(); ++c) {
    out[c] = scale[c] > 0.0 ? (x[c] - mean[c]) / scale[c] : 0.0;
  }
  return out;
}

Matrix Normalizer::apply(const Matrix& rows) const {
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out.row(r) = apply(Vector(rows.row(r).transpose())).transpose();
  }
  return out;
}

Normalized normalize(const Matrix& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) throw InvalidInput("normalize: empty input");
  const auto n = static_cast<double>(rows.rows());
  Normalizer params;
  params.mean = rows.colwise().sum().transpose() / n;
  params.scale.resize(rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double var = (rows.col(c).array() - params.mean[c]).square().sum() / n;
    params.scale[c] = std::sqrt(var);
  }
  Matrix out = params.apply(rows);
  return {std::move(out), std::move(params)};
}

namespace {

// One Lloyd run from a uniform k-subset of the distinct points.
Matrix lloyd(const Matrix& rows, std::size_t k, const std::vector<Eigen::Index>& distinct,
             std::mt19937_64& rng, std::vector<double>* trace) {
  std::vector<Eigen::Index> picks = distinct;
  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, picks.size() - 1);
    std::swap(picks[i], picks[pick(rng)]);
  }

  const auto kk = static_cast<Eigen::Index>(k);
  Matrix centers(kk, rows.cols());
  for (Eigen::Index c = 0; c < kk; ++c) centers.row(c) = rows.row(picks[static_cast<std::size_t>(c)]);

  const auto n = static_cast<std::size_t>(rows.rows());
  std::vector<std::size_t> assign(n, k);
  for (std::size_t iter = 0; iter < kMaxLloydIterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = nearest_center(rows.row(static_cast<Eigen::Index>(i)).transpose(), centers);
      if (c != assign[i]) {
        assign[i] = c;
        changed = true;
      }
    }
    if (!changed) break;

    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t a : assign) ++sizes[a];
    // Empty cluster: steal the point of the largest cluster farthest from its center.
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      const auto largest = static_cast<std::size_t>(
          std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      std::size_t far = n;
      double far_dist = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != largest) continue;
        const double dist = (rows.row(static_cast<Eigen::Index>(i)) -
                             centers.row(static_cast<Eigen::Index>(largest))).squaredNorm();
        if (dist > far_dist) {
          far_dist = dist;
          far = i;
        }
      }
      assign[far] = c;
      --sizes[largest];
      sizes[c] = 1;
    }

    Matrix sums = Matrix::Zero(kk, rows.cols());
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(assign[i])) += rows.row(static_cast<Eigen::Index>(i));
    }
    for (std::size_t c = 0; c < k; ++c) {
      centers.row(static_cast<Eigen::Index>(c)) =
          sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
    }
    if (trace) trace->push_back(kmeans_objective(rows, centers));
  }
  return centers;
}

}  // namespace

Matrix fit_centers(const Matrix& rows, std::size_t k, std::uint64_t seed,
                   std::vector<double>* trace) {
  if (k == 0) throw InvalidInput("fit_centers: k must be >= 1");
  const std::vector<Eigen::Index> distinct = distinct_rows(rows);
  if (k > distinct.size()) {
    throw InvalidInput("fit_centers: k = " + std::to_string(k) + " exceeds the " +
                       std::to_string(distinct.size()) + " distinct points");
  }

  std::mt19937_64 rng(seed);
  Matrix best;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<double> run_trace;
  for (std::size_t r = 0; r < kRestarts; ++r) {
    run_trace.clear();
    Matrix centers = lloyd(rows, k, distinct, rng, trace ? &run_trace : nullptr);
    const double objective = kmeans_objective(rows, centers);
    if (objective < best_objective) {
      best_objective = objective;
      best = std::move(centers);
      if (trace) *trace = run_trace;
    }
  }
  return best;
}

double kmeans_objective(const Matrix& rows, const Matrix& centers) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Vector x = rows.row(i).transpose();
    total += (centers.row(static_cast<Eigen::Index>(nearest_center(x, centers))).transpose() - x)
                 .squaredNorm();
  }
  return total;
}

Vector transform(const Vector& x, const TransformSpec& spec) {
  spec.validate(static_cast<std::size_t>(x.size()));
  if (spec.kind == TransformKind::linear) return x;
  Vector out(spec.centers.rows());
  for (Eigen::Index b = 0; b < spec.centers.rows(); ++b) {
    const double dist = (x - spec.centers.row(b).transpose()).norm();
    out[b] = 1.0 / (1.0 + std::exp(-dist / spec.scale));
  }
  return out;
}

Matrix transform(const Matrix& rows, const TransformSpec& spec) {
  if (spec.kind == TransformKind::linear) return rows;
  Matrix out(rows.rows(), static_cast<Eigen::Index>(spec.output_dim(rows.cols())));
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out.row(r) = transform(Vector(rows.row(r).transpose()), spec).transpose();
  }
  return out;
}

}  // namespace crowd_al
