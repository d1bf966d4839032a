#include "vaxsig/zinb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>

namespace vaxsig {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double logistic(double a) {
  return a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
}

// Above this, lgamma/digamma differences lose too many digits to cancellation
// and asymptotic expansions are both cheaper and far more accurate.
constexpr double kLargeR = 1e4;

// log NB(y | r, mean m) with the factorial generalized via lgamma(y+1).
// Written so neither r up to 1e8 nor m up to 1e6 underflows, and so the
// large-r (Poisson) limit keeps full precision.
inline double nb_log_pmf(double y, double r, double m) {
  const double zero_part = -r * std::log1p(m / r);  // r*log(r/(r+m))
  if (y == 0.0) return zero_part;
  // core = lgamma(r+y) - lgamma(r) - y*log(r+m), grouped to avoid cancellation
  double core;
  if (r < kLargeR) {
    core = std::lgamma(r + y) - std::lgamma(r) - y * std::log(r + m);
  } else {
    // Stirling: lgamma(r+y)-lgamma(r) = y*log r + (r+y-1/2)log1p(y/r) - y
    //           - y/(12 r (r+y)) + O(r^-3); the y*log r folds into -y*log(r+m).
    core = (r + y - 0.5) * std::log1p(y / r) - y - y / (12.0 * r * (r + y)) -
           y * std::log1p(m / r);
  }
  return core - std::lgamma(y + 1.0) + zero_part + y * std::log(m);
}

inline double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

double zinb_log_pmf(double y, const ZinbParams& params, double m_offset) {
  if (!std::isfinite(y) || !std::isfinite(params.p) || !std::isfinite(params.mu) ||
      !std::isfinite(params.r) || !std::isfinite(m_offset))
    throw std::invalid_argument("zinb_log_pmf: non-finite input");
  if (y < 0.0 || m_offset <= 0.0 || params.mu <= 0.0 || params.r <= 0.0)
    throw std::invalid_argument("zinb_log_pmf: out-of-domain input");

  const double m = m_offset * params.mu;
  const double nb = nb_log_pmf(y, params.r, m);
  if (y == 0.0)
    return log_add_exp(std::log(params.p), std::log1p(-params.p) + nb);
  return std::log1p(-params.p) + nb;
}

double group_negloglik(std::span<const double> theta, const GroupDesign& design) {
  const int I = design.n_vaccines;
  const double r = std::exp(theta[2 * I]);
  if (!std::isfinite(r) || r <= 0.0) return kInf;

  double nll = 0.0;
  for (std::size_t n = 0; n < design.size(); ++n) {
    const int i = design.vaccine_index[n];
    const double p = logistic(theta[i]);
    const double mu = std::exp(theta[I + i]);
    const double m = design.m[n] * mu;
    if (!std::isfinite(m) || m <= 0.0) return kInf;
    const double y = design.y[n];
    double ll;
    if (y == 0.0)
      ll = log_add_exp(std::log(p), std::log1p(-p) + nb_log_pmf(0.0, r, m));
    else
      ll = std::log1p(-p) + nb_log_pmf(y, r, m);
    if (!std::isfinite(ll)) return kInf;
    nll -= ll;
  }
  return nll;
}

std::vector<double> group_negloglik_grad(std::span<const double> theta,
                                         const GroupDesign& design) {
  const int I = design.n_vaccines;
  std::vector<double> grad(2 * I + 1, 0.0);
  const double log_r = theta[2 * I];
  const double r = std::exp(log_r);

  for (std::size_t n = 0; n < design.size(); ++n) {
    const int i = design.vaccine_index[n];
    const double a = theta[i];
    const double p = logistic(a);
    const double mu = std::exp(theta[I + i]);
    const double m = design.m[n] * mu;
    const double y = design.y[n];

    double d_alpha, d_phi, d_logr;  // of the log-likelihood term
    if (y == 0.0) {
      const double u0 = -r * std::log1p(m / r);  // log NB(0 | r, m)
      const double ll = log_add_exp(std::log(p), std::log1p(-p) + u0);
      const double wA = std::exp(std::log(p) - ll);            // p / S
      const double wB = std::exp(std::log1p(-p) + u0 - ll);    // (1-p)NB0 / S
      d_alpha = (1.0 - p) * wA - p * wB;
      d_phi = wB * (-m * r / (r + m));
      const double du0_dr = -std::log1p(m / r) + m / (r + m);
      d_logr = wB * r * du0_dr;
    } else {
      d_alpha = -p;
      d_phi = y - m * (r + y) / (r + m);
      double du_dr;
      if (r < kLargeR) {
        du_dr = boost::math::digamma(r + y) - boost::math::digamma(r) +
                std::log(r) + 1.0 - std::log(r + m) - (r + y) / (r + m);
      } else {
        // digamma(r+y)-digamma(r) = log1p(y/r) + y/(2r(r+y))
        //                           + y(2r+y)/(12 r^2 (r+y)^2) + O(r^-4);
        // log r - log(r+m) = -log1p(m/r); 1 - (r+y)/(r+m) = (m-y)/(r+m).
        du_dr = std::log1p(y / r) - std::log1p(m / r) + (m - y) / (r + m) +
                y / (2.0 * r * (r + y)) +
                y * (2.0 * r + y) / (12.0 * r * r * (r + y) * (r + y));
      }
      d_logr = r * du_dr;
    }
    grad[i] -= d_alpha;
    grad[I + i] -= d_phi;
    grad[2 * I] -= d_logr;
  }
  return grad;
}

std::vector<double> fit_initial_theta(const GroupDesign& design, const FitConfig& config) {
  const int I = design.n_vaccines;
  std::vector<double> zeros(I, 0.0), entries(I, 0.0), sum_y(I, 0.0), sum_m(I, 0.0);
  for (std::size_t n = 0; n < design.size(); ++n) {
    const int i = design.vaccine_index[n];
    entries[i] += 1.0;
    if (design.y[n] == 0.0) {
      zeros[i] += 1.0;
    } else {
      sum_y[i] += design.y[n];
      sum_m[i] += design.m[n];
    }
  }

  std::vector<double> theta(2 * I + 1, 0.0);
  for (int i = 0; i < I; ++i) {
    const double frac = entries[i] > 0.0 ? zeros[i] / entries[i] : 0.5;
    const double p0 = std::clamp(frac, 0.05, 0.95);
    theta[i] = std::clamp(std::log(p0 / (1.0 - p0)), -config.alpha_clamp, config.alpha_clamp);
    const double ratio = sum_m[i] > 0.0 ? sum_y[i] / sum_m[i] : 0.0;
    theta[I + i] = std::clamp(std::log(std::max(ratio, 0.01)), -config.phi_clamp,
                              config.phi_clamp);
  }
  theta[2 * I] = 0.0;  // r = 1
  return theta;
}

GroupFit fit_group(const GroupDesign& design, const FitConfig& config) {
  const int I = design.n_vaccines;
  const int dim = 2 * I + 1;
  if (I <= 0 || design.size() == 0)
    throw std::invalid_argument("fit_group: empty design");
  if (design.y.size() != design.m.size() ||
      design.y.size() != design.vaccine_index.size())
    throw std::invalid_argument("fit_group: design length mismatch");

  std::vector<double> entries(I, 0.0), positives(I, 0.0);
  for (std::size_t n = 0; n < design.size(); ++n) {
    entries[design.vaccine_index[n]] += 1.0;
    if (design.y[n] > 0.0) positives[design.vaccine_index[n]] += 1.0;
  }

  std::vector<double> theta = fit_initial_theta(design, config);

  // Per-coordinate bounds; degenerate vaccines are pinned (lo == hi).
  std::vector<double> lo(dim), hi(dim);
  std::vector<bool> pinned(dim, false);
  GroupFit fit;
  fit.boundary.assign(I, false);
  for (int i = 0; i < I; ++i) {
    lo[i] = -config.alpha_clamp;
    hi[i] = config.alpha_clamp;
    lo[I + i] = -config.phi_clamp;
    hi[I + i] = config.phi_clamp;
    if (positives[i] == 0.0) {
      // mu is unidentifiable jointly with p: pin phi at its start and push p up.
      theta[i] = config.alpha_clamp;
      pinned[i] = pinned[I + i] = true;
      fit.boundary[i] = true;
    } else if (entries[i] < 2.0) {
      pinned[i] = pinned[I + i] = true;
      fit.boundary[i] = true;
    }
  }
  lo[2 * I] = config.log_r_min;
  hi[2 * I] = config.log_r_max;
  for (int k = 0; k < dim; ++k)
    if (pinned[k]) lo[k] = hi[k] = theta[k];

  auto clamp_point = [&](std::vector<double>& x) {
    for (int k = 0; k < dim; ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
  };
  auto projected_grad = [&](const std::vector<double>& x, const std::vector<double>& g) {
    std::vector<double> pg(dim);
    for (int k = 0; k < dim; ++k) {
      if (pinned[k])
        pg[k] = 0.0;
      else if (x[k] <= lo[k])
        pg[k] = std::min(g[k], 0.0);
      else if (x[k] >= hi[k])
        pg[k] = std::max(g[k], 0.0);
      else
        pg[k] = g[k];
    }
    return pg;
  };
  auto inf_norm = [](const std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n = std::max(n, std::abs(x));
    return n;
  };

  clamp_point(theta);
  double f = group_negloglik(theta, design);
  std::vector<double> g = group_negloglik_grad(theta, design);

  // Dense BFGS on the inverse Hessian; pinned coordinates never move.
  std::vector<double> H(static_cast<std::size_t>(dim) * dim, 0.0);
  for (int k = 0; k < dim; ++k) H[static_cast<std::size_t>(k) * dim + k] = 1.0;

  constexpr double kArmijoC = 1e-4;
  constexpr double kBacktrack = 0.5;
  int iter = 0;
  bool converged = inf_norm(projected_grad(theta, g)) <= config.grad_tol;

  while (!converged && iter < config.max_iters) {
    ++iter;
    std::vector<double> pg = projected_grad(theta, g);
    std::vector<double> d(dim, 0.0);
    for (int k = 0; k < dim; ++k) {
      if (pg[k] == 0.0) continue;
      for (int l = 0; l < dim; ++l) d[k] -= H[static_cast<std::size_t>(k) * dim + l] * pg[l];
    }
    double gd = 0.0;
    for (int k = 0; k < dim; ++k) gd += pg[k] * d[k];
    if (!(gd < 0.0)) {  // not a descent direction; reset to steepest descent
      for (int k = 0; k < dim; ++k) {
        d[k] = -pg[k];
        H[static_cast<std::size_t>(k) * dim + k] = 1.0;
        for (int l = 0; l < dim; ++l)
          if (l != k) H[static_cast<std::size_t>(k) * dim + l] = 0.0;
      }
    }

    // Backtracking with projection into the box; accept on sufficient decrease
    // measured along the realized (projected) step. If the quasi-Newton
    // direction fails, fall back to steepest descent once.
    bool accepted = false;
    std::vector<double> x_new(dim), step(dim), g_new;
    double f_new = f;
    const double pg_norm = inf_norm(pg);
    // Reproducibility jitter of f between nearby points: individual log-pmf
    // terms reach hundreds in magnitude and mostly cancel, so the jitter
    // scales with the term magnitudes (roughly |f|*sqrt(K) in the random
    // walk model), not with |f| alone.
    const double noise = 16.0 * std::numeric_limits<double>::epsilon() *
                         (1.0 + std::abs(f)) *
                         std::sqrt(1.0 + static_cast<double>(design.size()));
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        for (int k = 0; k < dim; ++k) {
          d[k] = -pg[k];
          for (int l = 0; l < dim; ++l)
            H[static_cast<std::size_t>(k) * dim + l] = (l == k) ? 1.0 : 0.0;
        }
      }
      double t = 1.0;
      bool noise_regime = false;
      while (t >= 1e-14) {
        for (int k = 0; k < dim; ++k) x_new[k] = theta[k] + t * d[k];
        clamp_point(x_new);
        double dirder = 0.0;
        for (int k = 0; k < dim; ++k) {
          step[k] = x_new[k] - theta[k];
          dirder += g[k] * step[k];
        }
        if (dirder >= 0.0) break;  // movement fully blocked by the box
        // Once the expected decrease over the whole step is smaller than what
        // double precision can resolve in f, sufficient decrease becomes
        // unverifiable (meeting a 1e-8 gradient tolerance may require
        // resolving f to ~1e-19), and rounding-level acceptances would only
        // random-walk the iterate and feed noise into the curvature update.
        // The gradient is still computed accurately at that scale, so the
        // endgame line search demands a clear projected-gradient decrease.
        if (t == 1.0 && -dirder <= 16.0 * noise) noise_regime = true;
        if (noise_regime) break;
        f_new = group_negloglik(x_new, design);
        if (f_new <= f + kArmijoC * dirder + noise) {
          accepted = true;
          break;
        }
        t *= kBacktrack;
      }
      if (noise_regime && !accepted) {
        // Scan a geometric grid of step sizes and keep the one that shrinks
        // the projected gradient the most without pushing f measurably up.
        double best_norm = pg_norm * (1.0 - 1e-4);
        std::vector<double> best_x, best_g;
        double best_f = f;
        std::vector<double> x_try(dim);
        for (double ts = 1.0; ts >= 1e-14; ts *= kBacktrack) {
          bool moved = false;
          for (int k = 0; k < dim; ++k) {
            x_try[k] = theta[k] + ts * d[k];
            moved = moved || x_try[k] != theta[k];
          }
          if (!moved) break;
          clamp_point(x_try);
          const double f_try = group_negloglik(x_try, design);
          // Progress is certified by the gradient here; f only guards against
          // leaving the basin, so allow it the width of its own evaluation
          // jitter (lgamma terms reach 1e4, so jitter can reach ~1e-9 |f|).
          if (!(f_try <= f + 1e-9 * (1.0 + std::abs(f)))) continue;
          std::vector<double> g_try = group_negloglik_grad(x_try, design);
          const double norm_try = inf_norm(projected_grad(x_try, g_try));
          if (norm_try < best_norm) {
            best_norm = norm_try;
            best_x = x_try;
            best_g = std::move(g_try);
            best_f = f_try;
          }
        }
        if (!best_x.empty()) {
          for (int k = 0; k < dim; ++k) step[k] = best_x[k] - theta[k];
          x_new = std::move(best_x);
          g_new = std::move(best_g);
          f_new = best_f;
          accepted = true;
        }
      }
    }
    if (!accepted) break;

    if (g_new.empty()) g_new = group_negloglik_grad(x_new, design);
    std::vector<double> yv(dim);
    double sy = 0.0, ss = 0.0, yy = 0.0;
    for (int k = 0; k < dim; ++k) {
      yv[k] = g_new[k] - g[k];
      sy += step[k] * yv[k];
      ss += step[k] * step[k];
      yy += yv[k] * yv[k];
    }
    if (sy > 1e-12 * std::sqrt(ss * yy) && std::isfinite(sy)) {
      // H <- (I - s y^T / sy) H (I - y s^T / sy) + s s^T / sy
      std::vector<double> Hy(dim, 0.0);
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l)
          Hy[k] += H[static_cast<std::size_t>(k) * dim + l] * yv[l];
      double yHy = 0.0;
      for (int k = 0; k < dim; ++k) yHy += yv[k] * Hy[k];
      const double c1 = (sy + yHy) / (sy * sy);
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l) {
          double& h = H[static_cast<std::size_t>(k) * dim + l];
          h += c1 * step[k] * step[l] - (Hy[k] * step[l] + step[k] * Hy[l]) / sy;
        }
    }

    theta = std::move(x_new);
    f = f_new;
    g = std::move(g_new);
    converged = inf_norm(projected_grad(theta, g)) <= config.grad_tol;
  }

  fit.iterations = iter;
  fit.converged = converged;
  fit.gradient_norm = inf_norm(projected_grad(theta, g));
  fit.loglik = -f;
  fit.p.resize(I);
  fit.mu.resize(I);
  for (int i = 0; i < I; ++i) {
    fit.p[i] = logistic(theta[i]);
    fit.mu[i] = std::exp(theta[I + i]);
    constexpr double kBoundEps = 1e-9;
    if (!pinned[i] &&
        (std::abs(theta[i]) >= config.alpha_clamp - kBoundEps ||
         std::abs(theta[I + i]) >= config.phi_clamp - kBoundEps))
      fit.boundary[i] = true;
  }
  fit.r = std::exp(theta[2 * I]);
  fit.r_at_bound = theta[2 * I] <= config.log_r_min + 1e-9 ||
                   theta[2 * I] >= config.log_r_max - 1e-9;
  return fit;
}

}  // namespace vaxsig
