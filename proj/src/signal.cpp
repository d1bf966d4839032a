#include "vaxsig/signal.hpp"

#include <algorithm>
#include <stdexcept>

#include <omp.h>

#include "vaxsig/rng.hpp"

namespace vaxsig {

std::vector<Report> reshuffle_ae_sets(const std::vector<Report>& reports,
                                      std::mt19937_64& rng) {
  if (reports.size() < 2)
    throw std::invalid_argument("reshuffle_ae_sets: need at least 2 reports");
  std::vector<int> sigma = random_permutation(static_cast<int>(reports.size()), rng);
  std::vector<Report> shuffled = reports;
  for (std::size_t k = 0; k < reports.size(); ++k)
    shuffled[k].aes = reports[sigma[k]].aes;
  return shuffled;
}

DatasetStats analyze_cells(const Dataset& ds, const std::vector<double>& cells,
                           const FitConfig& config, bool keep_rows) {
  DatasetStats stats;
  stats.max_s = 0.0;
  stats.max_lambda = 0.0;
  stats.fits.reserve(ds.layouts.size());
  const int J = ds.table.cols();

  for (std::size_t l = 0; l < ds.layouts.size(); ++l) {
    const GroupLayout& layout = ds.layouts[l];
    GroupDesign design = design_for(ds, static_cast<int>(l), cells);
    GroupFit fit = fit_group(design, config);
    if (!fit.converged) ++stats.non_converged;

    for (int slot = 0; slot < design.n_vaccines; ++slot) {
      const double s = (1.0 - fit.p[slot]) * fit.mu[slot];
      stats.max_s = std::max(stats.max_s, s);
      if (keep_rows)
        stats.groups.push_back({layout.slot_to_row[slot], static_cast<int>(l), s});
    }
    for (std::size_t n = 0; n < layout.cell.size(); ++n) {
      const int slot = layout.vaccine_slot[n];
      const ZinbParams params{fit.p[slot], fit.mu[slot], fit.r};
      const double y = design.y[n];
      const double m = design.m[n];
      const double lambda = posterior_lambda_mean(y, params, m);
      stats.max_lambda = std::max(stats.max_lambda, lambda);
      if (keep_rows) {
        const double pi_hat = y == 0.0 ? posterior_zero_weight(params, m) : 0.0;
        stats.aes.push_back({layout.slot_to_row[slot], layout.cell[n] % J,
                             static_cast<int>(l), y, m, pi_hat, lambda});
      }
    }
    stats.fits.push_back(std::move(fit));
  }
  return stats;
}

namespace {

NullPair null_impl(const Dataset& ds, const PermutationPlan& plan,
                   const FitConfig& config, bool parallel) {
  if (plan.n_permutations < 1)
    throw std::invalid_argument("null_distributions: need at least 1 permutation");
  const int n_reports = static_cast<int>(ds.report_vaccines.size());
  if (n_reports < 2)
    throw std::invalid_argument("null_distributions: need at least 2 reports");

  const int N = plan.n_permutations;
  std::vector<double> max_s(N), max_lambda(N);
  long long non_converged = 0;

  const int threads =
      parallel ? (plan.threads > 0 ? plan.threads : omp_get_max_threads()) : 1;

#pragma omp parallel for schedule(dynamic) num_threads(threads) \
    reduction(+ : non_converged) if (parallel)
  for (int k = 0; k < N; ++k) {
    std::mt19937_64 rng = substream(plan.seed, static_cast<std::uint64_t>(k));
    std::vector<int> sigma = random_permutation(n_reports, rng);
    std::vector<double> cells;
    rebuild_cells(ds, sigma, cells);
    DatasetStats stats = analyze_cells(ds, cells, config, /*keep_rows=*/false);
    max_s[k] = stats.max_s;
    max_lambda[k] = stats.max_lambda;
    non_converged += stats.non_converged;
  }

  DatasetStats observed =
      analyze_cells(ds, observed_cells(ds), config, /*keep_rows=*/false);

  NullPair out;
  out.group_null.values = std::move(max_s);
  out.group_null.observed = observed.max_s;
  out.group_null.non_converged = non_converged;
  out.ae_null.values = std::move(max_lambda);
  out.ae_null.observed = observed.max_lambda;
  out.ae_null.non_converged = non_converged;
  std::sort(out.group_null.values.begin(), out.group_null.values.end());
  std::sort(out.ae_null.values.begin(), out.ae_null.values.end());
  return out;
}

}  // namespace

NullPair null_distributions(const Dataset& ds, const PermutationPlan& plan,
                            const FitConfig& config) {
  return null_impl(ds, plan, config, /*parallel=*/true);
}

NullPair null_distributions_serial(const Dataset& ds, const PermutationPlan& plan,
                                   const FitConfig& config) {
  return null_impl(ds, plan, config, /*parallel=*/false);
}

double permutation_pvalue(double t, const NullDistribution& null) {
  if (null.values.empty())
    throw std::invalid_argument("permutation_pvalue: empty null distribution");
  const auto it = std::lower_bound(null.values.begin(), null.values.end(), t);
  const auto n_ge = null.values.end() - it;
  return static_cast<double>(1 + n_ge) / static_cast<double>(null.values.size() + 1);
}

SignalTable assign_pvalues(const Dataset& ds, const DatasetStats& observed,
                           const NullPair& nulls) {
  SignalTable table;
  table.group_rows.reserve(observed.groups.size());
  for (const auto& gs : observed.groups) {
    GroupRow row;
    row.vaccine = ds.table.vaccines[gs.vaccine];
    row.group = ds.group_ids[gs.group];
    row.s = gs.s;
    row.p_value = permutation_pvalue(gs.s, nulls.group_null);
    table.group_rows.push_back(std::move(row));
  }
  table.ae_rows.reserve(observed.aes.size());
  for (const auto& as : observed.aes) {
    AeRow row;
    row.vaccine = ds.table.vaccines[as.vaccine];
    row.ae = ds.table.aes[as.ae];
    row.group = ds.group_ids[as.group];
    row.y = as.y;
    row.m = as.m;
    row.lambda_hat = as.lambda_hat;
    row.p_value = permutation_pvalue(as.lambda_hat, nulls.ae_null);
    table.ae_rows.push_back(std::move(row));
  }
  return table;
}

void flag_signals(SignalTable& table, double alpha, double s_min) {
  table.alpha = alpha;
  table.s_min = s_min;
  for (auto& row : table.group_rows)
    row.flagged = row.p_value <= alpha && row.s >= s_min;
  for (auto& row : table.ae_rows) row.flagged = row.p_value <= alpha;
}

}  // namespace vaxsig
