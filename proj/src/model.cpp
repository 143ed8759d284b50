#include "crowd_al/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowd_al/error.hpp"

namespace crowd_al {

namespace {

double max_abs_diff(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

CrowdDataset::CrowdDataset(std::size_t dim, std::size_t annotators) : dim_(dim) {
  if (dim == 0) throw InvalidInput("CrowdDataset: dimension must be >= 1");
  stats_.resize(annotators);
  for (auto& s : stats_) {
    s.gram = Matrix::Zero(dim, dim);
    s.xty = Vector::Zero(dim);
  }
}

std::size_t CrowdDataset::add_instance(const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != dim_) {
    throw InvalidInput("CrowdDataset: instance has dimension " + std::to_string(x.size()) +
                       ", expected " + std::to_string(dim_));
  }
  instances_.push_back(x);
  return instances_.size() - 1;
}

void CrowdDataset::add_label(std::size_t instance, std::size_t annotator, double y) {
  if (instance >= instances_.size()) throw InvalidInput("CrowdDataset: unknown instance index");
  if (annotator >= stats_.size()) throw InvalidInput("CrowdDataset: unknown annotator index");
  if (!std::isfinite(y)) throw InvalidInput("CrowdDataset: label must be finite");
  auto [it, inserted] = labels_.emplace(std::make_pair(instance, annotator), y);
  if (!inserted) throw InvalidInput("CrowdDataset: duplicate label for (instance, annotator)");

  const Vector& x = instances_[instance];
  AnnotatorStats& s = stats_[annotator];
  s.gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
  s.gram.triangularView<Eigen::StrictlyUpper>() = s.gram.transpose();
  s.xty += y * x;
  s.yty += y * y;
  ++s.count;
}

std::size_t CrowdDataset::label_count(std::size_t annotator) const {
  return stats(annotator).count;
}

const Vector& CrowdDataset::instance(std::size_t i) const {
  if (i >= instances_.size()) throw InvalidInput("CrowdDataset: unknown instance index");
  return instances_[i];
}

bool CrowdDataset::has_label(std::size_t instance, std::size_t annotator) const {
  return labels_.contains({instance, annotator});
}

std::optional<double> CrowdDataset::label(std::size_t instance, std::size_t annotator) const {
  auto it = labels_.find({instance, annotator});
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

Eigen::MatrixXi CrowdDataset::indicator() const {
  Eigen::MatrixXi out = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(instances_.size()),
                                              static_cast<Eigen::Index>(stats_.size()));
  for (const auto& [key, value] : labels_) {
    out(static_cast<Eigen::Index>(key.first), static_cast<Eigen::Index>(key.second)) = 1;
  }
  return out;
}

const AnnotatorStats& CrowdDataset::stats(std::size_t annotator) const {
  if (annotator >= stats_.size()) throw InvalidInput("CrowdDataset: unknown annotator index");
  return stats_[annotator];
}

WeightPosterior WeightPosterior::standard(std::size_t dim) {
  return {Vector::Zero(static_cast<Eigen::Index>(dim)),
          Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))};
}

void WeightPosterior::validate() const {
  const auto d = mean.size();
  if (d == 0 || precision.rows() != d || precision.cols() != d) {
    throw InvalidInput("WeightPosterior: precision must be d x d with d = mean size >= 1");
  }
  const double scale = std::max(1.0, precision.cwiseAbs().maxCoeff());
  if (max_abs_diff(precision, precision.transpose()) > 1e-10 * scale) {
    throw InvalidInput("WeightPosterior: precision is not symmetric");
  }
  if (precision.llt().info() != Eigen::Success) {
    throw InvalidInput("WeightPosterior: precision is not positive definite");
  }
}

Eigen::LLT<Matrix> WeightPosterior::factor() const {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("WeightPosterior: precision lost positive definiteness");
  }
  return llt;
}

void PrecisionPosterior::validate() const {
  if (!(shape > 0.0) || !(rate > 0.0) || !std::isfinite(shape) || !std::isfinite(rate)) {
    throw InvalidInput("PrecisionPosterior: shape and rate must be positive and finite");
  }
}

double expected_precision(const PrecisionPosterior& p) {
  p.validate();
  return p.shape / p.rate;
}

WeightPosterior vi_update_weights(const CrowdDataset& data,
                                  std::span<const double> expected_betas,
                                  const WeightPosterior& prior) {
  if (prior.dim() != data.dim()) {
    throw InvalidInput("vi_update_weights: prior dimension does not match dataset");
  }
  if (expected_betas.size() != data.annotators()) {
    throw InvalidInput("vi_update_weights: need one expected precision per annotator");
  }

  Matrix precision = prior.precision;
  Vector rhs = prior.precision * prior.mean;
  bool any = false;
  for (std::size_t j = 0; j < expected_betas.size(); ++j) {
    const double beta = expected_betas[j];
    if (!(beta >= 0.0) || !std::isfinite(beta)) {
      throw InvalidInput("vi_update_weights: expected precisions must be finite and >= 0");
    }
    const AnnotatorStats& s = data.stats(j);
    if (s.count == 0 || beta == 0.0) continue;
    precision.noalias() += beta * s.gram;
    rhs.noalias() += beta * s.xty;
    any = true;
  }
  if (!any) return prior;

  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericalFailure("vi_update_weights: updated precision is not positive definite");
  }
  Vector mean = llt.solve(rhs);
  if (!mean.allFinite()) throw NumericalFailure("vi_update_weights: non-finite mean");
  return {std::move(mean), std::move(precision)};
}

PrecisionPosterior vi_update_precision(const CrowdDataset& data,
                                       const WeightPosterior& weights,
                                       const Matrix& covariance,
                                       const PrecisionPosterior& prior,
                                       std::size_t annotator,
                                       bool uncorrected) {
  if (annotator >= data.annotators()) {
    throw InvalidInput("vi_update_precision: annotator index out of range");
  }
  if (weights.dim() != data.dim()) {
    throw InvalidInput("vi_update_precision: posterior dimension does not match dataset");
  }
  const AnnotatorStats& s = data.stats(annotator);
  if (s.count == 0) return prior;

  const Vector& mu = weights.mean;
  const double cross = (uncorrected ? 1.0 : 2.0) * mu.dot(s.xty);
  const double quad = mu.dot(s.gram * mu);
  // tr(X_jᵀX_j Λ_n^{-1}) as an elementwise product of two symmetric matrices.
  const double trace = s.gram.cwiseProduct(covariance).sum();

  PrecisionPosterior out;
  out.shape = prior.shape + 0.5 * static_cast<double>(s.count);
  out.rate = prior.rate + 0.5 * (s.yty - cross) + 0.5 * trace + 0.5 * quad;
  if (!(out.rate > 0.0) || !std::isfinite(out.rate)) {
    throw NumericalFailure("vi_update_precision: rate became non-positive for annotator " +
                           std::to_string(annotator));
  }
  return out;
}

PrecisionPosterior vi_update_precision(const CrowdDataset& data,
                                       const WeightPosterior& weights,
                                       const PrecisionPosterior& prior,
                                       std::size_t annotator,
                                       bool uncorrected) {
  const auto llt = weights.factor();
  const Matrix covariance = llt.solve(Matrix::Identity(weights.precision.rows(),
                                                       weights.precision.cols()));
  return vi_update_precision(data, weights, covariance, prior, annotator, uncorrected);
}

FitResult fit_variational(const CrowdDataset& data,
                          const WeightPosterior& weight_prior,
                          std::span<const PrecisionPosterior> precision_priors,
                          const VariationalOptions& options,
                          const std::optional<VariationalState>& warm_start) {
  if (!(options.tolerance > 0.0)) throw InvalidInput("fit_variational: tolerance must be > 0");
  if (options.max_sweeps < 1) throw InvalidInput("fit_variational: max_sweeps must be >= 1");
  if (precision_priors.size() != data.annotators()) {
    throw InvalidInput("fit_variational: need one precision prior per annotator");
  }
  weight_prior.validate();
  for (const auto& p : precision_priors) p.validate();

  WeightPosterior weights = weight_prior;
  std::vector<PrecisionPosterior> precisions(precision_priors.begin(), precision_priors.end());
  if (warm_start) {
    if (warm_start->precisions.size() != data.annotators() ||
        warm_start->weights.dim() != data.dim()) {
      throw InvalidInput("fit_variational: warm start does not match dataset shape");
    }
    weights = warm_start->weights;
    precisions = warm_start->precisions;
  }

  const auto d = static_cast<Eigen::Index>(data.dim());
  const Matrix identity = Matrix::Identity(d, d);
  std::vector<double> betas(precisions.size());

  FitReport report;
  for (std::size_t sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    for (std::size_t j = 0; j < precisions.size(); ++j) betas[j] = expected_precision(precisions[j]);
    WeightPosterior next = vi_update_weights(data, betas, weight_prior);

    double delta = std::max(max_abs_diff(next.mean, weights.mean),
                            max_abs_diff(next.precision, weights.precision));

    if (!options.freeze_precisions) {
      const Matrix covariance = next.factor().solve(identity);
      for (std::size_t j = 0; j < precisions.size(); ++j) {
        PrecisionPosterior updated = vi_update_precision(
            data, next, covariance, precision_priors[j], j, options.uncorrected_gamma_update);
        delta = std::max({delta, std::abs(updated.shape - precisions[j].shape),
                          std::abs(updated.rate - precisions[j].rate)});
        precisions[j] = updated;
      }
    }
    weights = std::move(next);

    report.iterations = sweep;
    report.final_delta = delta;
    if (delta < options.tolerance) {
      report.converged = true;
      break;
    }
  }
  return {std::move(weights), std::move(precisions), report};
}

Predictive predictive(const Vector& x, const WeightPosterior& weights,
                      const Eigen::LLT<Matrix>& factor) {
  if (static_cast<std::size_t>(x.size()) != weights.dim()) {
    throw InvalidInput("predictive: dimension mismatch");
  }
  // xᵀΛ⁻¹x = ‖L⁻¹x‖² with Λ = LLᵀ.
  const Vector half = factor.matrixL().solve(x);
  return {x.dot(weights.mean), half.squaredNorm()};
}

Predictive predictive(const Vector& x, const WeightPosterior& weights) {
  if (static_cast<std::size_t>(x.size()) != weights.dim()) {
    throw InvalidInput("predictive: dimension mismatch");
  }
  return predictive(x, weights, weights.factor());
}

}  // namespace crowd_al
