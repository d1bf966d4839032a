#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>
#include <vector>

#include "vaxsig/rng.hpp"
#include "vaxsig/zinb.hpp"

using namespace vaxsig;

namespace {

double zip_log_pmf(double y, double p, double mean) {
  if (y == 0.0) return std::log(p + (1.0 - p) * std::exp(-mean));
  return std::log1p(-p) + y * std::log(mean) - mean - std::lgamma(y + 1.0);
}

// One simulated single-vaccine group; r_gen may be huge (effectively Poisson).
GroupDesign simulate_design(std::mt19937_64& rng, int K, double p, double mu,
                            double r_gen, double m_lo, double m_hi) {
  GroupDesign design;
  design.n_vaccines = 1;
  std::uniform_real_distribution<double> log_m(std::log(m_lo), std::log(m_hi));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::gamma_distribution<double> gamma(r_gen, mu / r_gen);
  for (int k = 0; k < K; ++k) {
    const double m = std::exp(log_m(rng));
    double y = 0.0;
    if (unif(rng) >= p) {
      const double lambda = gamma(rng);
      std::poisson_distribution<long long> pois(m * lambda);
      y = static_cast<double>(pois(rng));
    }
    design.y.push_back(y);
    design.m.push_back(m);
    design.vaccine_index.push_back(0);
  }
  return design;
}

std::vector<double> fd_gradient(const std::vector<double>& theta,
                                const GroupDesign& design, double h) {
  std::vector<double> g(theta.size());
  std::vector<double> t = theta;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    t[k] = theta[k] + h;
    const double fp = group_negloglik(t, design);
    t[k] = theta[k] - h;
    const double fm = group_negloglik(t, design);
    t[k] = theta[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("log pmf closed-form spot values") {
  // y=0: p + (1-p) (r/(r+m))^r with p=0.5, r=1, m=1 -> 0.75
  CHECK(zinb_log_pmf(0.0, {0.5, 1.0, 1.0}, 1.0) ==
        doctest::Approx(std::log(0.75)).epsilon(1e-12));
  // y=1: (1-p) * (1/2)*(1/2) = 0.125 (geometric case at r=1)
  CHECK(zinb_log_pmf(1.0, {0.5, 1.0, 1.0}, 1.0) ==
        doctest::Approx(std::log(0.125)).epsilon(1e-12));
}

TEST_CASE("log pmf rejects bad input") {
  CHECK_THROWS_AS(zinb_log_pmf(-1.0, {0.5, 1.0, 1.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(zinb_log_pmf(0.0, {0.5, 1.0, 1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(zinb_log_pmf(0.0, {0.5, -1.0, 1.0}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(
      zinb_log_pmf(std::numeric_limits<double>::quiet_NaN(), {0.5, 1.0, 1.0}, 1.0),
      std::invalid_argument);
}

TEST_CASE("pmf sums to one over the documented grid") {
  for (double p : {0.1, 0.5, 0.9})
    for (double r : {0.5, 1.0, 5.0})
      for (double m_mu : {0.1, 1.0, 10.0}) {
        const ZinbParams params{p, m_mu, r};  // M = 1 so M*mu = m_mu
        const double mean = (1.0 - p) * m_mu;
        const double sd = std::sqrt(m_mu + m_mu * m_mu / r);
        const int Y = static_cast<int>(std::ceil(mean + 50.0 * sd)) + 10;
        double sum = 0.0;
        for (int y = 0; y <= Y; ++y)
          sum += std::exp(zinb_log_pmf(static_cast<double>(y), params, 1.0));
        CHECK(std::abs(sum - 1.0) <= 1e-9);
      }
}

TEST_CASE("huge dispersion reproduces the zero-inflated Poisson") {
  const double r = 1e8;
  for (double p : {0.0, 0.2, 0.7})
    for (double mean : {0.1, 1.0, 10.0}) {
      const ZinbParams params{p, mean, r};  // M = 1
      // The genuine NB/Poisson log-pmf gap grows like y(y-1)/(2r), so the
      // 1e-6 agreement holds on the bulk of the support, not arbitrarily far
      // into the tail: cap y where y(y-1)/2 stays well below r*1e-6.
      for (int y = 0; y <= 12; ++y) {
        const double got = zinb_log_pmf(static_cast<double>(y), params, 1.0);
        const double want = zip_log_pmf(static_cast<double>(y), p, mean);
        CHECK(std::abs(got - want) <= 1e-6);
      }
    }
}

TEST_CASE("negative log likelihood of the single-entry example") {
  GroupDesign design;
  design.y = {0.0};
  design.m = {1.0};
  design.vaccine_index = {0};
  design.n_vaccines = 1;
  const std::vector<double> theta{0.0, 0.0, 0.0};  // p=0.5, mu=1, r=1
  CHECK(group_negloglik(theta, design) ==
        doctest::Approx(-std::log(0.75)).epsilon(1e-9));
}

TEST_CASE("duplicated entries double the value exactly") {
  GroupDesign one;
  one.y = {2.5};
  one.m = {3.0};
  one.vaccine_index = {0};
  one.n_vaccines = 1;
  GroupDesign two = one;
  two.y.push_back(2.5);
  two.m.push_back(3.0);
  two.vaccine_index.push_back(0);
  const std::vector<double> theta{-0.4, 0.3, 0.2};
  CHECK(group_negloglik(theta, two) == 2.0 * group_negloglik(theta, one));
}

TEST_CASE("relabeling vaccines with their entries leaves the value unchanged") {
  GroupDesign design;
  design.y = {0.0, 3.0, 1.5, 0.0};
  design.m = {1.0, 2.0, 0.7, 3.0};
  design.vaccine_index = {0, 0, 1, 1};
  design.n_vaccines = 2;
  const std::vector<double> theta{-0.5, 0.8, 0.2, -0.3, 0.1};

  GroupDesign swapped = design;
  for (int& i : swapped.vaccine_index) i = 1 - i;
  const std::vector<double> theta_swapped{0.8, -0.5, -0.3, 0.2, 0.1};
  CHECK(group_negloglik(theta, design) ==
        group_negloglik(theta_swapped, swapped));
}

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng = substream(42, 0);
  std::uniform_real_distribution<double> ua(-2.0, 2.0), uf(-1.0, 1.0), ur(-1.0, 2.0);
  std::uniform_real_distribution<double> um(0.5, 20.0), uy(0.5, 8.0), u01(0.0, 1.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    GroupDesign design;
    design.n_vaccines = 1 + static_cast<int>(uniform_below(rng, 3));
    const int K = design.n_vaccines * (4 + static_cast<int>(uniform_below(rng, 5)));
    for (int k = 0; k < K; ++k) {
      design.vaccine_index.push_back(k % design.n_vaccines);
      design.m.push_back(um(rng));
      design.y.push_back(u01(rng) < 0.35 ? 0.0 : uy(rng));
    }
    std::vector<double> theta(2 * design.n_vaccines + 1);
    for (int i = 0; i < design.n_vaccines; ++i) {
      theta[i] = ua(rng);
      theta[design.n_vaccines + i] = uf(rng);
    }
    theta.back() = ur(rng);

    const auto analytic = group_negloglik_grad(theta, design);
    const auto numeric = fd_gradient(theta, design, h);
    for (std::size_t k = 0; k < theta.size(); ++k) {
      const double scale = std::max(1.0, std::abs(numeric[k]));
      CHECK(std::abs(analytic[k] - numeric[k]) <= 1e-5 * scale);
    }
  }
}

TEST_CASE("all-zero data pushes the zero probability up") {
  GroupDesign design;
  design.n_vaccines = 1;
  for (int k = 0; k < 6; ++k) {
    design.y.push_back(0.0);
    design.m.push_back(2.0);
    design.vaccine_index.push_back(0);
  }
  const std::vector<double> theta{0.0, 0.0, 0.0};
  const auto grad = group_negloglik_grad(theta, design);
  CHECK(grad[0] < 0.0);  // decreasing negloglik in alpha means p wants to grow
}

TEST_CASE("gradient nearly vanishes at a converged interior optimum") {
  std::mt19937_64 rng = substream(7, 0);
  const auto design = simulate_design(rng, 400, 0.3, 2.0, 1.5, 5.0, 50.0);
  const auto fit = fit_group(design, {});
  REQUIRE(fit.converged);
  CHECK(fit.gradient_norm <= 1e-8);
  // interior solution: the raw gradient itself is tiny
  std::vector<double> theta{std::log(fit.p[0] / (1.0 - fit.p[0])),
                            std::log(fit.mu[0]), std::log(fit.r)};
  for (double g : group_negloglik_grad(theta, design)) CHECK(std::abs(g) < 1e-6);
}

TEST_CASE("fit recovers known parameters across replications") {
  const double p = 0.3, mu = 2.0, r = 1.5;
  const int reps = 200;
  std::vector<double> ps, mus, rs;
  int converged = 0;
  for (int rep = 0; rep < reps; ++rep) {
    std::mt19937_64 rng = substream(1234, static_cast<std::uint64_t>(rep));
    // K=800 keeps the O(1/K) upward bias of the dispersion MLE below the
    // Monte-Carlo resolution; at K=200 that bias alone is ~4 standard errors.
    const auto design = simulate_design(rng, 800, p, mu, r, 5.0, 50.0);
    const auto fit = fit_group(design, {});
    if (fit.converged) ++converged;
    ps.push_back(fit.p[0]);
    mus.push_back(fit.mu[0]);
    rs.push_back(fit.r);
  }
  CHECK(converged >= reps * 95 / 100);
  auto check_recovery = [&](const std::vector<double>& v, double truth) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= (v.size() - 1);
    const double se = std::sqrt(var / v.size());
    CHECK(std::abs(mean - truth) <= 3.0 * se);
  };
  check_recovery(ps, p);
  check_recovery(mus, mu);
  check_recovery(rs, r);
}

TEST_CASE("data without overdispersion fits cleanly") {
  std::mt19937_64 rng = substream(77, 0);
  const auto design = simulate_design(rng, 300, 0.3, 2.0, 1e8, 5.0, 50.0);
  const auto fit = fit_group(design, {});
  CHECK(fit.r >= 1e3);
  CHECK(fit.p[0] == doctest::Approx(0.3).epsilon(0.5));
  CHECK(fit.mu[0] == doctest::Approx(2.0).epsilon(0.25));
}

TEST_CASE("one entry per vaccine never crashes") {
  GroupDesign design;
  design.n_vaccines = 2;
  design.y = {1.0, 0.0};
  design.m = {1.0, 2.0};
  design.vaccine_index = {0, 1};
  const auto fit = fit_group(design, {});
  CHECK((fit.boundary[0] || fit.boundary[1] || !fit.converged));
  CHECK(fit.boundary[0]);
  CHECK(fit.boundary[1]);
}

TEST_CASE("fitting improves on the starting point") {
  std::mt19937_64 rng = substream(55, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto design =
        simulate_design(rng, 40 + 10 * trial, 0.2 + 0.02 * trial, 1.5, 1.0, 1.0, 30.0);
    FitConfig config;
    const auto theta0 = fit_initial_theta(design, config);
    const double f0 = group_negloglik(theta0, design);
    const auto fit = fit_group(design, config);
    CHECK(fit.loglik >= -f0 - 1e-9);
  }
}

TEST_CASE("converged implies gradient within tolerance") {
  std::mt19937_64 rng = substream(91, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto design = simulate_design(rng, 120, 0.4, 1.2, 2.0, 2.0, 20.0);
    FitConfig config;
    const auto fit = fit_group(design, config);
    if (fit.converged) CHECK(fit.gradient_norm <= config.grad_tol);
  }
}
