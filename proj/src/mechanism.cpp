#include "crowd_al/mechanism.hpp"

#include <algorithm>
#include <cmath>

#include "crowd_al/error.hpp"

namespace crowd_al {

void PaymentScheme::validate() const {
  if (!(budget > 0.0) || !std::isfinite(budget)) throw InvalidInput("PaymentScheme: B must be > 0");
  if (!(beta_lower > 0.0)) throw InvalidInput("PaymentScheme: beta_lower must be > 0");
  if (!(beta_upper > beta_lower) || !std::isfinite(beta_upper)) {
    throw InvalidInput("PaymentScheme: need beta_lower < beta_upper");
  }
}

double payment(double beta_hat, const PaymentScheme& scheme) {
  scheme.validate();
  if (!(beta_hat >= 0.0)) throw InvalidInput("payment: estimated precision must be >= 0");
  const double frac = (beta_hat - scheme.beta_lower) / (scheme.beta_upper - scheme.beta_lower);
  return scheme.budget * std::min(1.0, std::max(0.0, frac));
}

double utility(double beta, const CostFunction& cost, const PaymentScheme& scheme) {
  return payment(beta, scheme) - cost(beta);
}

double settle(const PrecisionPosterior& posterior, const PaymentScheme& scheme) {
  posterior.validate();
  return payment(expected_precision(posterior), scheme);
}

}  // namespace crowd_al
