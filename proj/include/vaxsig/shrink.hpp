#pragma once

#include <string>

#include "vaxsig/zinb.hpp"

namespace vaxsig {

struct GroupSignal {
  std::string vaccine;
  std::string group;
  double s = 0.0;  // (1-p) * mu
};

struct AePosterior {
  std::string vaccine;
  std::string ae;
  double y = 0.0;
  double m = 0.0;
  double pi_hat = 0.0;      // posterior zero-component weight; 0 when y > 0
  double lambda_hat = 0.0;  // posterior mean rate multiplier
};

// Group-level relative reporting rate s = (1-p) * mu.
double group_rr(const ZinbParams& params);

// pi_hat = p / (p + (1-p) * (r/(r+M*mu))^r), evaluated in the log domain.
double posterior_zero_weight(const ZinbParams& params, double m_expected);

// Posterior mean of the rate multiplier:
//   y = 0: (1 - pi_hat) * mu*r/(r+M*mu)
//   y > 0: mu*(r+y)/(r+M*mu)
double posterior_lambda_mean(double y, const ZinbParams& params, double m_expected);

struct PosteriorWeights {
  double w1 = 0.0;  // weight on the sample mean y/M
  double w2 = 0.0;  // weight on the prior mean (1-p)*mu
};

// Decomposition lambda_hat = w1*(y/M) + w2*(1-p)*mu with w1 + w2 = 1.
// Throws std::domain_error when the sample mean equals the prior mean.
PosteriorWeights posterior_weights(double y, const ZinbParams& params, double m_expected);

}  // namespace vaxsig
