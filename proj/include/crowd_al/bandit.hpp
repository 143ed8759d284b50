#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace crowd_al {

enum class DeltaPolicy {
  fixed_horizon,  // δ = T⁻²
  anytime,        // δ_t = max(t, 2)⁻²
};

struct BanditConfig {
  /// Bound on the second moment of the squared residual.
  double u = 1.0;
  DeltaPolicy policy = DeltaPolicy::anytime;
  /// Total number of samples T the state will see; used by fixed_horizon.
  std::size_t horizon = 0;

  void validate() const;
};

/// u = 3 σ_max⁴, the fourth moment of a N(0, σ_max²) residual.
double moment_bound_from_sigma(double sigma_max);

/// √(u t / log δ⁻¹).
double truncation_threshold(double u, double t, double log_inv_delta);
/// log δ⁻¹ under the configured policy at round t.
double log_inv_delta(const BanditConfig& config, std::size_t t);
/// Threshold at round t (t is clamped to >= 1).
double truncation_threshold(const BanditConfig& config, std::size_t t);

struct TruncatedMean {
  double mean = 0.0;
  std::size_t accepted = 0;
};

/// Mean of the samples with |ξ| <= threshold; 0 when nothing is accepted.
TruncatedMean truncated_mean(std::span<const double> samples, double threshold);

/// μ̂ + √(32 u log t / n), with log t floored at 0 and +inf for n = 0.
double ucb_value(double mean, double u, double t, std::size_t pulls);

/// Robust-UCB state over rewards ξ = -(squared residual).
///
/// Truncated means are always evaluated at the current round's threshold, so
/// a sample rejected earlier re-enters once the threshold grows past it.
/// `discarded()` counts samples rejected at the moment they arrived; it never
/// decreases. `excluded()` is the number of stored samples outside the
/// current threshold.
class BanditState {
 public:
  BanditState(std::size_t arms, BanditConfig config);

  std::size_t arms() const { return samples_.size(); }
  std::size_t round() const { return round_; }
  const BanditConfig& config() const { return config_; }

  double threshold() const;
  std::size_t pulls(std::size_t arm) const;
  std::size_t accepted(std::size_t arm) const;
  double truncated_mean(std::size_t arm) const;
  std::span<const double> samples(std::size_t arm) const;

  std::size_t discarded() const { return discarded_; }
  std::size_t excluded() const;

  /// +inf for an arm never pulled.
  double ucb_index(std::size_t arm) const;
  /// Argmax of ucb_index, lowest arm on ties.
  std::size_t select() const;

  /// Appends ξ = -residual_sq to `arm` and advances the round.
  /// Returns whether the new sample falls inside the new threshold.
  bool record(std::size_t arm, double residual_sq);

 private:
  struct Arm {
    std::vector<double> samples;    // arrival order
    std::vector<double> magnitude;  // sorted |ξ|
    std::vector<double> prefix;     // prefix[k] = sum of the k smallest |ξ|
  };

  void check_arm(std::size_t arm) const;
  std::size_t accepted_at(const Arm& a, double threshold) const;

  BanditConfig config_;
  std::vector<Arm> samples_;
  std::size_t round_ = 0;
  std::size_t discarded_ = 0;
};

/// Realized Regret-Seq: Σ_j Δ_j T_j with Δ_j = 1/β_j - 1/β*.
class RegretLedger {
 public:
  explicit RegretLedger(std::span<const double> precisions);

  void record(std::size_t arm);
  double regret() const;

  std::span<const double> gaps() const { return gaps_; }
  std::span<const std::size_t> pulls() const { return pulls_; }

 private:
  std::vector<double> gaps_;
  std::vector<std::size_t> pulls_;
};

double regret_seq(const RegretLedger& ledger);

/// Σ_i (γ* - γ_i) T_i for arm means γ_i.
double regret_mab(std::span<const double> arm_means, std::span<const std::size_t> pulls);

/// Σ_{Δ_i > 0} 32 u log T / Δ_i + 5 Δ_i.
double regret_bound(std::span<const double> gaps, double u, double horizon);

DeltaPolicy parse_delta_policy(std::string_view name);

}  // namespace crowd_al
