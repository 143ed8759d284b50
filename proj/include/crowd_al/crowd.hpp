#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "crowd_al/model.hpp"

namespace crowd_al {

struct PaymentScheme;

enum class CostKind { linear, quadratic, threshold };

CostKind parse_cost_kind(std::string_view name);
std::string_view to_string(CostKind kind);

/// Effort cost c(β). Every family satisfies c(0) = 0 and is strictly
/// increasing on [0, ∞):
///   linear     a β
///   quadratic  a β²
///   threshold  a β + b max(0, β - β₀)²
class CostFunction {
 public:
  static CostFunction linear(double a);
  static CostFunction quadratic(double a);
  static CostFunction threshold(double a, double b, double knee);
  /// Throws InvalidInput when the parameters break the invariants.
  static CostFunction make(CostKind kind, double a, double b = 0.0, double knee = 0.0);

  double operator()(double beta) const;

  CostKind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double knee() const { return knee_; }

 private:
  CostFunction(CostKind kind, double a, double b, double knee);

  CostKind kind_;
  double a_;
  double b_;
  double knee_;
};

/// Simulator-side ground truth for one annotator.
struct AnnotatorProfile {
  std::size_t id = 0;
  double best_precision = 1.0;  // β_j*
  CostFunction cost = CostFunction::linear(1.0);
  bool strategic = false;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// The first `good` annotators draw 1/√β* from `good_interval`, the rest
/// from `bad_interval`. Intervals must satisfy 0 < lo <= hi.
std::vector<AnnotatorProfile> make_annotators(std::size_t m, std::size_t good,
                                              Interval good_interval, Interval bad_interval,
                                              std::uint64_t seed);

using Rng = std::mt19937_64;

/// Seed for an independent stream keyed by (seed, a, b); splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// wᵀx plus N(0, 1/effort) noise. Effort must lie in (0, β*].
double sample_label(const AnnotatorProfile& profile, const Vector& x, const Vector& w_true,
                    double effort, Rng& rng);
/// Same, with the noiseless label given directly (real datasets).
double sample_label(const AnnotatorProfile& profile, double truth, double effort, Rng& rng);

struct EffortChoice {
  double effort = 0.0;
  bool participates = false;
};

/// Grid argmax of P(β) - c(β) over [0, min(β*, 1.5 β_upper)].
/// Non-strategic profiles always return (β*, true).
EffortChoice optimal_effort(const AnnotatorProfile& profile, const PaymentScheme& scheme,
                            std::size_t grid = 1000);

}  // namespace crowd_al
