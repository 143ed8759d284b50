#include "crowd_al/crowd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowd_al/error.hpp"
#include "crowd_al/mechanism.hpp"

namespace crowd_al {

namespace {

// Effort search stops at 1.5 β_upper: payment is flat beyond β_upper.
constexpr double kEffortCapFactor = 1.5;

void check_interval(const Interval& iv, const char* name) {
  if (!(iv.lo > 0.0) || !(iv.hi >= iv.lo) || !std::isfinite(iv.hi)) {
    throw InvalidInput(std::string("make_annotators: ") + name + " interval must satisfy 0 < lo <= hi");
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

CostKind parse_cost_kind(std::string_view name) {
  if (name == "linear") return CostKind::linear;
  if (name == "quadratic") return CostKind::quadratic;
  if (name == "threshold") return CostKind::threshold;
  throw InvalidInput("unknown cost kind '" + std::string(name) + "'");
}

std::string_view to_string(CostKind kind) {
  switch (kind) {
    case CostKind::linear:
      return "linear";
    case CostKind::quadratic:
      return "quadratic";
    case CostKind::threshold:
      return "threshold";
  }
  return "linear";
}

CostFunction::CostFunction(CostKind kind, double a, double b, double knee)
    : kind_(kind), a_(a), b_(b), knee_(knee) {}

CostFunction CostFunction::make(CostKind kind, double a, double b, double knee) {
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw InvalidInput("CostFunction: slope a must be > 0 for a strictly increasing cost");
  }
  if (kind == CostKind::threshold && (!(b >= 0.0) || !(knee >= 0.0))) {
    throw InvalidInput("CostFunction: threshold cost needs b >= 0 and knee >= 0");
  }
  return CostFunction(kind, a, kind == CostKind::threshold ? b : 0.0,
                      kind == CostKind::threshold ? knee : 0.0);
}

CostFunction CostFunction::linear(double a) { return make(CostKind::linear, a); }
CostFunction CostFunction::quadratic(double a) { return make(CostKind::quadratic, a); }
CostFunction CostFunction::threshold(double a, double b, double knee) {
  return make(CostKind::threshold, a, b, knee);
}

double CostFunction::operator()(double beta) const {
  switch (kind_) {
    case CostKind::linear:
      return a_ * beta;
    case CostKind::quadratic:
      return a_ * beta * beta;
    case CostKind::threshold: {
      const double over = std::max(0.0, beta - knee_);
      return a_ * beta + b_ * over * over;
    }
  }
  return 0.0;
}

std::vector<AnnotatorProfile> make_annotators(std::size_t m, std::size_t good,
                                              Interval good_interval, Interval bad_interval,
                                              std::uint64_t seed) {
  if (good > m) throw InvalidInput("make_annotators: good count exceeds m");
  check_interval(good_interval, "good");
  check_interval(bad_interval, "bad");

  Rng rng(seed);
  std::vector<AnnotatorProfile> out;
  out.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const Interval& iv = j < good ? good_interval : bad_interval;
    double sd = iv.lo;
    if (iv.hi > iv.lo) sd = std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
    AnnotatorProfile p;
    p.id = j;
    p.best_precision = 1.0 / (sd * sd);
    out.push_back(p);
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

double sample_label(const AnnotatorProfile& profile, const Vector& x, const Vector& w_true,
                    double effort, Rng& rng) {
  if (x.size() != w_true.size()) throw InvalidInput("sample_label: dimension mismatch");
  return sample_label(profile, w_true.dot(x), effort, rng);
}

double sample_label(const AnnotatorProfile& profile, double truth, double effort, Rng& rng) {
  if (!(effort > 0.0)) throw InvalidInput("sample_label: effort must be > 0");
  // Relative slack so that an effort computed as 1/sd² round-trips.
  if (effort > profile.best_precision * (1.0 + 1e-12)) {
    throw InvalidInput("sample_label: effort exceeds the annotator's best precision");
  }
  std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(effort));
  return truth + noise(rng);
}

EffortChoice optimal_effort(const AnnotatorProfile& profile, const PaymentScheme& scheme,
                            std::size_t grid) {
  if (grid < 2) throw InvalidInput("optimal_effort: grid needs at least 2 points");
  scheme.validate();
  if (!profile.strategic) return {profile.best_precision, true};

  const double top = std::min(profile.best_precision, kEffortCapFactor * scheme.beta_upper);
  double best_effort = 0.0;
  double best_utility = utility(0.0, profile.cost, scheme);
  for (std::size_t k = 1; k < grid; ++k) {
    const double beta = top * static_cast<double>(k) / static_cast<double>(grid - 1);
    const double u = utility(beta, profile.cost, scheme);
    if (u > best_utility) {
      best_utility = u;
      best_effort = beta;
    }
  }
  if (!(best_utility > 0.0)) return {0.0, false};
  return {best_effort, true};
}

}  // namespace crowd_al
