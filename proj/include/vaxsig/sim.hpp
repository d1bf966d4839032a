#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "vaxsig/zinb.hpp"

namespace vaxsig {

struct SimScenario {
  std::string label = "base";
  std::vector<int> group_sizes{20, 50, 100, 200};
  int n_vaccines = 3;
  int n_replications = 1000;
  double offset_multiplier = 1.0;
  bool zip_mode = false;  // generate with an effectively infinite dispersion
  std::vector<double> p{0.2, 0.4, 0.6};   // cycled over vaccines
  std::vector<double> mu{0.8, 1.5, 3.0};  // cycled over vaccines
  double r = 1.2;
  double m_low = 1.0;
  double m_high = 100.0;  // offsets sampled log-uniform, once per group size
  std::uint64_t seed = 0;
  int threads = 0;

  double effective_r() const { return zip_mode ? 1e8 : r; }
  double true_s(int vaccine) const;
};

// One replication: true rate multipliers, counts, offsets, vaccine index.
struct SimDraw {
  std::vector<double> lambda;
  std::vector<double> y;
  std::vector<double> m;
  std::vector<int> vaccine;  // 0..n_vaccines-1
};

// lambda = 0 with probability p_i, else Gamma(shape r, scale mu_i/r);
// y ~ Poisson(M*lambda), with y = 0 forced when lambda = 0. Deterministic
// given (scenario.seed, group_size, rep_index).
SimDraw simulate_group(const SimScenario& scenario, int group_size,
                       std::uint64_t rep_index);

struct SimEntry {
  int group_size = 0;
  int vaccine = 0;
  std::vector<double> s_bias;             // per replication, s_hat - s
  std::vector<double> lambda_bias_mean;   // per replication, mean over AEs
  std::vector<double> lambda_sqerr_mean;  // per replication, mean over AEs

  double s_mean_bias() const;
  double s_bias_se() const;  // standard error of the mean bias
  double s_mse() const;
  double lambda_mse() const;
};

struct SimReport {
  SimScenario scenario;
  std::vector<SimEntry> entries;  // group_sizes x vaccines
  std::vector<long long> non_converged_by_size;  // fits are joint per group

  const SimEntry& entry(int group_size, int vaccine) const;
  double s_mse(int group_size) const;       // pooled over vaccines
  double lambda_mse(int group_size) const;  // pooled over vaccines
  double s_mean_bias(int group_size) const;
  double s_bias_se(int group_size) const;
  long long non_converged() const;
};

SimReport run_study(const SimScenario& scenario);         // parallel replications
SimReport run_study_serial(const SimScenario& scenario);  // reference

// Long-format CSV `scenario,vaccine,group_size,metric,value`: one bias row
// per (replication, vaccine) plus aggregate mse rows.
void emit_group_csv(std::ostream& out, const SimReport& report);
void emit_ae_csv(std::ostream& out, const SimReport& report);

}  // namespace vaxsig
