#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "vaxsig/dataset.hpp"
#include "vaxsig/shrink.hpp"
#include "vaxsig/zinb.hpp"

namespace vaxsig {

enum class StatKind { group_max_s, ae_max_lambda };

struct PermutationPlan {
  int n_permutations = 1000;
  std::uint64_t seed = 0;
  StatKind statistic = StatKind::group_max_s;
  int threads = 0;  // 0 = all available
};

struct NullDistribution {
  std::vector<double> values;  // sorted ascending, length n_permutations
  double observed = 0.0;       // observed max, recorded separately
  long long non_converged = 0; // fits that hit the iteration cap, never dropped
};

// Uniformly relinks whole AE sets to reports; vaccine sets and weights stay put.
std::vector<Report> reshuffle_ae_sets(const std::vector<Report>& reports,
                                      std::mt19937_64& rng);

struct GroupStat {
  int vaccine = 0;  // table row
  int group = 0;    // index into Dataset::group_ids
  double s = 0.0;
};

struct AeStat {
  int vaccine = 0;
  int ae = 0;       // table col
  int group = 0;
  double y = 0.0;
  double m = 0.0;
  double pi_hat = 0.0;
  double lambda_hat = 0.0;
};

struct DatasetStats {
  std::vector<GroupFit> fits;      // per group
  std::vector<GroupStat> groups;
  std::vector<AeStat> aes;
  double max_s = 0.0;
  double max_lambda = 0.0;
  int non_converged = 0;
};

// Fits every group at the given cell counts and computes both statistics.
DatasetStats analyze_cells(const Dataset& ds, const std::vector<double>& cells,
                           const FitConfig& config, bool keep_rows = true);

struct NullPair {
  NullDistribution group_null;  // max over vaccines and groups of s
  NullDistribution ae_null;     // max over vaccines and AEs of lambda_hat
};

// One pass over N permutations yields both null distributions. Deterministic
// given the plan seed regardless of thread count: permutation k always draws
// substream(seed, k).
NullPair null_distributions(const Dataset& ds, const PermutationPlan& plan,
                            const FitConfig& config);

// Serial reference implementation, kept for testing and benchmarking.
NullPair null_distributions_serial(const Dataset& ds, const PermutationPlan& plan,
                                   const FitConfig& config);

// p = (1 + #{null >= t}) / (N + 1); ties count against the observation.
double permutation_pvalue(double t, const NullDistribution& null);

struct GroupRow {
  std::string vaccine, group;
  double s = 0.0, p_value = 1.0;
  bool flagged = false;
};

struct AeRow {
  std::string vaccine, ae, group;
  double y = 0.0, m = 0.0, lambda_hat = 0.0, p_value = 1.0;
  bool flagged = false;
};

struct SignalTable {
  std::vector<GroupRow> group_rows;
  std::vector<AeRow> ae_rows;
  double alpha = 0.01;
  double s_min = 3.0;
};

SignalTable assign_pvalues(const Dataset& ds, const DatasetStats& observed,
                           const NullPair& nulls);

// Group rows flag on p <= alpha and s >= s_min; AE rows on p <= alpha alone.
void flag_signals(SignalTable& table, double alpha = 0.01, double s_min = 3.0);

}  // namespace vaxsig
