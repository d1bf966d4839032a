#pragma once

#include <span>
#include <vector>

namespace vaxsig {

// Natural-scale parameters for one vaccine within a group fit.
struct ZinbParams {
  double p;   // zero-inflation probability
  double mu;  // count-part mean at M = 1
  double r;   // dispersion, shared across vaccines in a group
};

struct FitConfig {
  double grad_tol = 1e-8;
  int max_iters = 500;
  double alpha_clamp = 10.0;  // |logit p| bound
  double phi_clamp = 15.0;    // |log mu| bound
  double log_r_min = -10.0;
  double log_r_max = 20.0;
};

// Flattened design for one AE group: cells with M = 0 are already excluded.
struct GroupDesign {
  std::vector<double> y;          // weighted cell counts
  std::vector<double> m;          // matching expected counts (offsets)
  std::vector<int> vaccine_index; // entry -> vaccine slot 0..n_vaccines-1
  int n_vaccines = 0;

  std::size_t size() const { return y.size(); }
};

struct GroupFit {
  std::vector<double> p;          // per vaccine
  std::vector<double> mu;         // per vaccine
  double r = 1.0;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;     // projected-gradient infinity norm
  std::vector<bool> boundary;     // per-vaccine clamped/degenerate marker
  bool r_at_bound = false;
};

// log ZINB(y | r, p, M*mu); the factorial is generalized via lgamma(y+1) so
// fractional weighted counts are well-defined. "Zero" means y == 0 exactly.
double zinb_log_pmf(double y, const ZinbParams& params, double m_offset);

// theta = (alpha_1..I, phi_1..I, log r) with p = logistic(alpha), mu = e^phi.
// Returns +inf when an intermediate value is non-finite, so a line search
// can backtrack.
double group_negloglik(std::span<const double> theta, const GroupDesign& design);

// Exact gradient of group_negloglik in the unconstrained parameterization.
std::vector<double> group_negloglik_grad(std::span<const double> theta,
                                         const GroupDesign& design);

// Box-constrained quasi-Newton (inverse-Hessian update, backtracking Armijo
// line search) from moment-flavored starts. Vaccines with all-zero counts or
// fewer than two entries are held at their starts and flagged.
GroupFit fit_group(const GroupDesign& design, const FitConfig& config = {});

// Starting point used by fit_group, exposed for the monotone-improvement check.
std::vector<double> fit_initial_theta(const GroupDesign& design, const FitConfig& config);

}  // namespace vaxsig
