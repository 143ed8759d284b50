#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace crowd_al {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-annotator sufficient statistics: X_jᵀX_j, X_jᵀy_j, y_jᵀy_j and n_j.
struct AnnotatorStats {
  Matrix gram;
  Vector xty;
  double yty = 0.0;
  std::size_t count = 0;
};

/// Instances plus the sparse (instance, annotator) -> label map.
///
/// The indicator matrix I and the per-annotator counts n_j are derived from
/// the label map; the sufficient statistics are maintained incrementally so
/// that a variational sweep costs O(m d^2 + d^3) regardless of label count.
class CrowdDataset {
 public:
  CrowdDataset(std::size_t dim, std::size_t annotators);

  std::size_t add_instance(const Vector& x);
  /// Throws InvalidInput on an unknown index or a duplicate (i, j) pair.
  void add_label(std::size_t instance, std::size_t annotator, double y);

  std::size_t dim() const { return dim_; }
  std::size_t annotators() const { return stats_.size(); }
  std::size_t instances() const { return instances_.size(); }
  std::size_t label_count() const { return labels_.size(); }
  std::size_t label_count(std::size_t annotator) const;

  const Vector& instance(std::size_t i) const;
  bool has_label(std::size_t instance, std::size_t annotator) const;
  std::optional<double> label(std::size_t instance, std::size_t annotator) const;
  const std::map<std::pair<std::size_t, std::size_t>, double>& labels() const {
    return labels_;
  }

  /// Binary n x m matrix, 1 where a label exists.
  Eigen::MatrixXi indicator() const;
  const AnnotatorStats& stats(std::size_t annotator) const;

 private:
  std::size_t dim_;
  std::vector<Vector> instances_;
  std::map<std::pair<std::size_t, std::size_t>, double> labels_;
  std::vector<AnnotatorStats> stats_;
};

/// Gaussian factor q(w) = N(mean, precision^-1).
struct WeightPosterior {
  Vector mean;
  Matrix precision;

  /// Zero mean, identity precision.
  static WeightPosterior standard(std::size_t dim);

  std::size_t dim() const { return static_cast<std::size_t>(mean.size()); }
  /// Throws InvalidInput unless the precision is square, symmetric and SPD.
  void validate() const;
  /// Cholesky factor of the precision; NumericalFailure if not SPD.
  Eigen::LLT<Matrix> factor() const;
};

/// Gamma factor q(beta_j) = G(shape, rate).
struct PrecisionPosterior {
  double shape = 1.0;
  double rate = 1.0;

  void validate() const;
};

struct VariationalOptions {
  double tolerance = 1e-6;
  std::size_t max_sweeps = 200;
  /// Use the rate update with a single cross term y*mu'x instead of 2*y*mu'x.
  bool uncorrected_gamma_update = false;
  /// Hold the precision factors at their initial values (known-beta runs).
  bool freeze_precisions = false;
};

struct FitReport {
  std::size_t iterations = 0;
  bool converged = false;
  double final_delta = 0.0;
};

struct VariationalState {
  WeightPosterior weights;
  std::vector<PrecisionPosterior> precisions;
};

struct FitResult {
  WeightPosterior weights;
  std::vector<PrecisionPosterior> precisions;
  FitReport report;
};

struct Predictive {
  double mean = 0.0;
  double variance = 0.0;
};

double expected_precision(const PrecisionPosterior& p);

/// Update of q(w) given E[beta_j]. Zero expected precisions are allowed and
/// contribute nothing.
WeightPosterior vi_update_weights(const CrowdDataset& data,
                                  std::span<const double> expected_betas,
                                  const WeightPosterior& prior);

/// Update of q(beta_j) given q(w). `covariance` is Λ_n^{-1}; callers that
/// update many annotators against the same q(w) pass it in once.
PrecisionPosterior vi_update_precision(const CrowdDataset& data,
                                       const WeightPosterior& weights,
                                       const Matrix& covariance,
                                       const PrecisionPosterior& prior,
                                       std::size_t annotator,
                                       bool uncorrected = false);

PrecisionPosterior vi_update_precision(const CrowdDataset& data,
                                       const WeightPosterior& weights,
                                       const PrecisionPosterior& prior,
                                       std::size_t annotator,
                                       bool uncorrected = false);

/// Coordinate ascent over q(w) and the q(beta_j) until the largest absolute
/// parameter change in a sweep drops below `options.tolerance`.
FitResult fit_variational(const CrowdDataset& data,
                          const WeightPosterior& weight_prior,
                          std::span<const PrecisionPosterior> precision_priors,
                          const VariationalOptions& options = {},
                          const std::optional<VariationalState>& warm_start = std::nullopt);

Predictive predictive(const Vector& x, const WeightPosterior& weights);
Predictive predictive(const Vector& x, const WeightPosterior& weights,
                      const Eigen::LLT<Matrix>& factor);

}  // namespace crowd_al
