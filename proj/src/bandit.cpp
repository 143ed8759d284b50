#include "crowd_al/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "crowd_al/error.hpp"

namespace crowd_al {

void BanditConfig::validate() const {
  if (!(u > 0.0) || !std::isfinite(u)) throw InvalidInput("BanditConfig: u must be > 0");
  if (policy == DeltaPolicy::fixed_horizon && horizon < 2) {
    throw InvalidInput("BanditConfig: fixed_horizon needs a horizon >= 2");
  }
}

double moment_bound_from_sigma(double sigma_max) {
  if (!(sigma_max > 0.0)) throw InvalidInput("sigma_max must be > 0");
  return 3.0 * std::pow(sigma_max, 4);
}

double truncation_threshold(double u, double t, double log_inv_delta) {
  return std::sqrt(u * t / log_inv_delta);
}

double log_inv_delta(const BanditConfig& config, std::size_t t) {
  const double base = config.policy == DeltaPolicy::fixed_horizon
                          ? static_cast<double>(config.horizon)
                          : static_cast<double>(std::max<std::size_t>(t, 2));
  return 2.0 * std::log(base);
}

double truncation_threshold(const BanditConfig& config, std::size_t t) {
  const std::size_t tt = std::max<std::size_t>(t, 1);
  return truncation_threshold(config.u, static_cast<double>(tt), log_inv_delta(config, tt));
}

TruncatedMean truncated_mean(std::span<const double> samples, double threshold) {
  double sum = 0.0;
  std::size_t accepted = 0;
  for (double xi : samples) {
    if (std::abs(xi) <= threshold) {
      sum += xi;
      ++accepted;
    }
  }
  if (accepted == 0) return {};
  return {sum / static_cast<double>(accepted), accepted};
}

BanditState::BanditState(std::size_t arms, BanditConfig config) : config_(config) {
  if (arms == 0) throw InvalidInput("BanditState: need at least one arm");
  config_.validate();
  samples_.resize(arms);
  for (auto& a : samples_) a.prefix.push_back(0.0);
}

void BanditState::check_arm(std::size_t arm) const {
  if (arm >= samples_.size()) throw InvalidInput("BanditState: arm index out of range");
}

double BanditState::threshold() const { return truncation_threshold(config_, round_); }

std::size_t BanditState::pulls(std::size_t arm) const {
  check_arm(arm);
  return samples_[arm].samples.size();
}

std::size_t BanditState::accepted_at(const Arm& a, double threshold) const {
  return static_cast<std::size_t>(
      std::upper_bound(a.magnitude.begin(), a.magnitude.end(), threshold) - a.magnitude.begin());
}

std::size_t BanditState::accepted(std::size_t arm) const {
  check_arm(arm);
  return accepted_at(samples_[arm], threshold());
}

double BanditState::truncated_mean(std::size_t arm) const {
  check_arm(arm);
  const Arm& a = samples_[arm];
  const std::size_t k = accepted_at(a, threshold());
  if (k == 0) return 0.0;
  return -a.prefix[k] / static_cast<double>(k);
}

std::span<const double> BanditState::samples(std::size_t arm) const {
  check_arm(arm);
  return samples_[arm].samples;
}

std::size_t BanditState::excluded() const {
  const double th = threshold();
  std::size_t total = 0;
  for (const auto& a : samples_) total += a.samples.size() - accepted_at(a, th);
  return total;
}

double ucb_value(double mean, double u, double t, std::size_t pulls) {
  if (pulls == 0) return std::numeric_limits<double>::infinity();
  const double log_t = t > 1.0 ? std::log(t) : 0.0;
  return mean + std::sqrt(32.0 * u * log_t / static_cast<double>(pulls));
}

double BanditState::ucb_index(std::size_t arm) const {
  check_arm(arm);
  const std::size_t n = samples_[arm].samples.size();
  if (n == 0) return std::numeric_limits<double>::infinity();
  return ucb_value(truncated_mean(arm), config_.u, static_cast<double>(round_), n);
}

std::size_t BanditState::select() const {
  std::size_t best = 0;
  double best_index = ucb_index(0);
  for (std::size_t j = 1; j < samples_.size(); ++j) {
    const double index = ucb_index(j);
    if (index > best_index) {
      best_index = index;
      best = j;
    }
  }
  return best;
}

bool BanditState::record(std::size_t arm, double residual_sq) {
  check_arm(arm);
  if (!(residual_sq >= 0.0) || !std::isfinite(residual_sq)) {
    throw InvalidInput("BanditState: squared residual must be finite and >= 0");
  }
  Arm& a = samples_[arm];
  a.samples.push_back(-residual_sq);
  const auto pos = std::upper_bound(a.magnitude.begin(), a.magnitude.end(), residual_sq);
  const auto k = static_cast<std::size_t>(pos - a.magnitude.begin());
  a.magnitude.insert(pos, residual_sq);
  a.prefix.resize(a.magnitude.size() + 1);
  for (std::size_t i = k; i < a.magnitude.size(); ++i) a.prefix[i + 1] = a.prefix[i] + a.magnitude[i];

  ++round_;
  const bool inside = residual_sq <= threshold();
  if (!inside) ++discarded_;
  return inside;
}

RegretLedger::RegretLedger(std::span<const double> precisions) {
  if (precisions.empty()) throw InvalidInput("RegretLedger: need at least one arm");
  double best_variance = std::numeric_limits<double>::infinity();
  for (double beta : precisions) {
    if (!(beta > 0.0)) throw InvalidInput("RegretLedger: precisions must be > 0");
    best_variance = std::min(best_variance, 1.0 / beta);
  }
  for (double beta : precisions) gaps_.push_back(1.0 / beta - best_variance);
  pulls_.assign(precisions.size(), 0);
}

void RegretLedger::record(std::size_t arm) {
  if (arm >= pulls_.size()) throw InvalidInput("RegretLedger: arm index out of range");
  ++pulls_[arm];
}

double RegretLedger::regret() const {
  double total = 0.0;
  for (std::size_t j = 0; j < gaps_.size(); ++j) total += gaps_[j] * static_cast<double>(pulls_[j]);
  return total;
}

double regret_seq(const RegretLedger& ledger) { return ledger.regret(); }

double regret_mab(std::span<const double> arm_means, std::span<const std::size_t> pulls) {
  if (arm_means.size() != pulls.size() || arm_means.empty()) {
    throw InvalidInput("regret_mab: need one pull count per arm");
  }
  const double best = *std::max_element(arm_means.begin(), arm_means.end());
  double total = 0.0;
  for (std::size_t i = 0; i < arm_means.size(); ++i) {
    total += (best - arm_means[i]) * static_cast<double>(pulls[i]);
  }
  return total;
}

double regret_bound(std::span<const double> gaps, double u, double horizon) {
  if (!(horizon > 1.0)) throw InvalidInput("regret_bound: horizon must be > 1");
  double total = 0.0;
  for (double gap : gaps) {
    if (gap > 0.0) total += 32.0 * u * std::log(horizon) / gap + 5.0 * gap;
  }
  return total;
}

DeltaPolicy parse_delta_policy(std::string_view name) {
  if (name == "fixed_horizon") return DeltaPolicy::fixed_horizon;
  if (name == "anytime") return DeltaPolicy::anytime;
  throw InvalidInput("unknown delta policy '" + std::string(name) + "'");
}

}  // namespace crowd_al
