#include "vaxsig/shrink.hpp"

#include <cmath>
#include <stdexcept>

namespace vaxsig {

double group_rr(const ZinbParams& params) { return (1.0 - params.p) * params.mu; }

double posterior_zero_weight(const ZinbParams& params, double m_expected) {
  if (m_expected <= 0.0)
    throw std::invalid_argument("posterior_zero_weight: M must be positive");
  const double m = m_expected * params.mu;
  // log NB(0 | r, m) = r*log(r/(r+m)), kept in the log domain for large r.
  const double nb0 = -params.r * std::log1p(m / params.r);
  // pi_hat = logistic(log p - log(1-p) - nb0)
  const double t = std::log1p(-params.p) - std::log(params.p) + nb0;
  return 1.0 / (1.0 + std::exp(t));
}

double posterior_lambda_mean(double y, const ZinbParams& params, double m_expected) {
  if (y < 0.0 || m_expected <= 0.0)
    throw std::invalid_argument("posterior_lambda_mean: out-of-domain input");
  const double denom = params.r + m_expected * params.mu;
  if (y == 0.0) {
    const double pi_hat = posterior_zero_weight(params, m_expected);
    return (1.0 - pi_hat) * params.mu * params.r / denom;
  }
  return params.mu * (params.r + y) / denom;
}

PosteriorWeights posterior_weights(double y, const ZinbParams& params, double m_expected) {
  const double sample_mean = y / m_expected;
  const double prior_mean = group_rr(params);
  if (sample_mean == prior_mean)
    throw std::domain_error("posterior_weights: sample mean equals prior mean");

  PosteriorWeights w;
  if (y == 0.0) {
    const double pi_hat = posterior_zero_weight(params, m_expected);
    w.w1 = 1.0 - (1.0 - pi_hat) / (1.0 - params.p) * params.r /
                     (params.r + m_expected * params.mu);
  } else {
    // Solved from lambda_hat = w1*(y/M) + (1-w1)*(1-p)*mu.
    const double lambda_hat = posterior_lambda_mean(y, params, m_expected);
    w.w1 = (lambda_hat - prior_mean) / (sample_mean - prior_mean);
  }
  w.w2 = 1.0 - w.w1;
  return w;
}

}  // namespace vaxsig
