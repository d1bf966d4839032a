#include <doctest.h>

#include <cmath>

#include "support/quadrature_oracle.hpp"
#include "vaxsig/shrink.hpp"

using namespace vaxsig;

TEST_CASE("group relative rate is (1-p) mu") {
  CHECK(group_rr({0.25, 4.0, 1.0}) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(group_rr({0.0, 2.5, 1.0}) == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(group_rr({1.0 - 1e-12, 5.0, 1.0}) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("posterior zero weight spot value") {
  // p=0.5, r=1, mu=1, M=1: 0.5 / (0.5 + 0.5*(1/2)) = 2/3
  CHECK(posterior_zero_weight({0.5, 1.0, 1.0}, 1.0) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("posterior zero weight limits") {
  CHECK(posterior_zero_weight({0.0, 1.0, 1.0}, 1.0) == 0.0);
  // at huge exposure, an observed zero is almost surely structural
  CHECK(posterior_zero_weight({0.5, 1.0, 1.0}, 1e6) ==
        doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("posterior zero weight is monotone in p and mu") {
  double prev = -1.0;
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double w = posterior_zero_weight({p, 2.0, 1.5}, 3.0);
    CHECK(w > prev);
    prev = w;
  }
  // A larger count-part mean makes an observed zero more surprising for the
  // count component, so the structural-zero explanation gains weight.
  prev = -1.0;
  for (double mu : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const double w = posterior_zero_weight({0.4, mu, 1.5}, 3.0);
    CHECK(w > prev);
    prev = w;
  }
}

TEST_CASE("posterior mean spot values") {
  // y=0: (1 - 2/3) * 1*1/(1+1) = 1/6
  CHECK(posterior_lambda_mean(0.0, {0.5, 1.0, 1.0}, 1.0) ==
        doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  // y=3: mu (r+y)/(r+M mu) = 1*4/2 = 2
  CHECK(posterior_lambda_mean(3.0, {0.5, 1.0, 1.0}, 1.0) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("shrinkage vanishes at large exposure") {
  // y = c*M with c=2: lambda_hat -> c as M grows
  const double M = 1e6, c = 2.0;
  CHECK(posterior_lambda_mean(c * M, {0.3, 1.5, 2.0}, M) ==
        doctest::Approx(c).epsilon(1e-3));
}

TEST_CASE("posterior mean is increasing in y") {
  const ZinbParams params{0.4, 1.3, 2.0};
  const double M = 3.0;
  CHECK(posterior_lambda_mean(0.0, params, M) <=
        posterior_lambda_mean(1.0, params, M));
  double prev = posterior_lambda_mean(1.0, params, M);
  for (double y = 2.0; y <= 30.0; y += 1.0) {
    const double cur = posterior_lambda_mean(y, params, M);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("posterior mean stays interior") {
  for (double p : {0.1, 0.5, 0.9})
    for (double r : {0.5, 1.0, 5.0})
      for (double mu : {0.5, 1.0, 3.0})
        for (double M : {0.5, 2.0, 10.0})
          for (double y : {0.0, 1.0, 7.0}) {
            const double lam = posterior_lambda_mean(y, {p, mu, r}, M);
            const double upper = std::max(y / M, mu);
            CHECK(lam > 0.0 - 1e-12);
            CHECK(lam < upper + 1e-12);
            if (y > 0.0) CHECK(lam > 0.0);
          }
}

TEST_CASE("closed form matches the quadrature oracle on the grid") {
  for (double p : {0.1, 0.5, 0.9})
    for (double r : {0.5, 1.0, 5.0})
      for (double mu : {0.5, 1.0, 3.0})
        for (double M : {0.5, 2.0, 10.0})
          for (double y : {0.0, 1.0, 7.0}) {
            const ZinbParams params{p, mu, r};
            const double closed = posterior_lambda_mean(y, params, M);
            const double oracle =
                testing::posterior_lambda_quadrature(y, params, M);
            CHECK(std::abs(closed - oracle) <= 1e-6 * std::max(1e-12, oracle));
          }
}

TEST_CASE("oracle reduces to the gamma-Poisson posterior at p=0") {
  const double r = 2.0, mu = 1.5, M = 4.0, y = 3.0;
  const double conjugate = (r + y) * mu / (r + M * mu);
  CHECK(testing::posterior_lambda_quadrature(y, {0.0, mu, r}, M) ==
        doctest::Approx(conjugate).epsilon(1e-8));
}

TEST_CASE("pure point mass gives zero posterior mean") {
  CHECK(testing::posterior_lambda_quadrature(0.0, {1.0, 1.0, 1.0}, 1.0) == 0.0);
  CHECK(posterior_lambda_mean(0.0, {1.0 - 1e-14, 1.0, 1.0}, 1.0) ==
        doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("weights decompose the posterior mean") {
  // y=0 closed form: w1 = 1 - (1-pi)/(1-p) * r/(r+M mu) = 1 - (1/3)/0.5 * 0.5 = 2/3
  const ZinbParams params{0.5, 1.0, 1.0};
  const auto w = posterior_weights(0.0, params, 1.0);
  CHECK(w.w1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(w.w1 + w.w2 == doctest::Approx(1.0).epsilon(1e-12));
  // w2 * prior mean reproduces lambda_hat since the sample mean is 0
  CHECK(w.w2 * (1.0 - params.p) * params.mu ==
        doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("weights reconstruct lambda_hat for positive counts") {
  for (double p : {0.1, 0.6})
    for (double r : {0.7, 3.0})
      for (double mu : {0.8, 2.5})
        for (double M : {0.5, 6.0})
          for (double y : {1.0, 4.0, 9.5}) {
            const ZinbParams params{p, mu, r};
            const double sample = y / M;
            const double prior = (1.0 - p) * mu;
            if (std::abs(sample - prior) < 1e-9) continue;
            const auto w = posterior_weights(y, params, M);
            CHECK(w.w1 + w.w2 == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(w.w1 * sample + w.w2 * prior ==
                  doctest::Approx(posterior_lambda_mean(y, params, M))
                      .epsilon(1e-12));
          }
}

TEST_CASE("sample mean on the prior mean is undefined") {
  // y/M = 1 = (1-0.5)*2
  CHECK_THROWS_AS(posterior_weights(1.0, {0.5, 2.0, 1.0}, 1.0), std::domain_error);
}

TEST_CASE("weight on the sample mean tends to one with exposure") {
  const double M = 1e6, c = 2.0;
  const auto w = posterior_weights(c * M, {0.3, 1.5, 2.0}, M);
  CHECK(w.w1 == doctest::Approx(1.0).epsilon(1e-3));
}
