#pragma once

#include "crowd_al/crowd.hpp"
#include "crowd_al/model.hpp"

namespace crowd_al {

/// Posted per-example payment: zero below β_lower, B above β_upper, linear
/// in between.
struct PaymentScheme {
  double budget = 1.0;  // B
  double beta_lower = 0.0;
  double beta_upper = 1.0;

  void validate() const;
};

double payment(double beta_hat, const PaymentScheme& scheme);

/// U(β) = P(β) - c(β).
double utility(double beta, const CostFunction& cost, const PaymentScheme& scheme);

/// Payment owed for one label, using β̂ = E[β] of the annotator's posterior.
double settle(const PrecisionPosterior& posterior, const PaymentScheme& scheme);

}  // namespace crowd_al
