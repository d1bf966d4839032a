#include "vaxsig/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <omp.h>

#include "vaxsig/rng.hpp"
#include "vaxsig/shrink.hpp"

namespace vaxsig {

namespace {

int size_index(const SimScenario& sc, int group_size) {
  for (std::size_t s = 0; s < sc.group_sizes.size(); ++s)
    if (sc.group_sizes[s] == group_size) return static_cast<int>(s);
  throw std::invalid_argument("simulate_group: unknown group size");
}

double vaccine_p(const SimScenario& sc, int i) { return sc.p[i % sc.p.size()]; }
double vaccine_mu(const SimScenario& sc, int i) { return sc.mu[i % sc.mu.size()]; }

// Offsets are sampled once per (scenario, group size) and shared by every
// replication of that size.
std::vector<double> scenario_offsets(const SimScenario& sc, int size_idx) {
  std::mt19937_64 rng = substream(sc.seed ^ 0x6f66667365747331ull,
                                  static_cast<std::uint64_t>(size_idx));
  const int K = sc.group_sizes[size_idx];
  std::vector<double> m(static_cast<std::size_t>(sc.n_vaccines) * K);
  std::uniform_real_distribution<double> u(std::log(sc.m_low), std::log(sc.m_high));
  for (auto& v : m) v = std::exp(u(rng)) * sc.offset_multiplier;
  return m;
}

std::uint64_t rep_key(int size_idx, std::uint64_t rep) {
  return (static_cast<std::uint64_t>(size_idx) + 1) * 0x100000000ull + rep;
}

}  // namespace

double SimScenario::true_s(int vaccine) const {
  return (1.0 - vaccine_p(*this, vaccine)) * vaccine_mu(*this, vaccine);
}

SimDraw simulate_group(const SimScenario& scenario, int group_size,
                       std::uint64_t rep_index) {
  const int size_idx = size_index(scenario, group_size);
  const int I = scenario.n_vaccines;
  const int K = group_size;
  SimDraw draw;
  draw.m = scenario_offsets(scenario, size_idx);
  draw.lambda.resize(static_cast<std::size_t>(I) * K);
  draw.y.resize(draw.lambda.size());
  draw.vaccine.resize(draw.lambda.size());

  std::mt19937_64 rng = substream(scenario.seed, rep_key(size_idx, rep_index));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double r_eff = scenario.effective_r();

  for (int i = 0; i < I; ++i) {
    const double p = vaccine_p(scenario, i);
    const double mu = vaccine_mu(scenario, i);
    std::gamma_distribution<double> gamma(r_eff, mu / r_eff);
    for (int k = 0; k < K; ++k) {
      const std::size_t n = static_cast<std::size_t>(i) * K + k;
      draw.vaccine[n] = i;
      if (unif(rng) < p) {
        draw.lambda[n] = 0.0;
        draw.y[n] = 0.0;  // Poisson(0) is degenerate at zero
      } else {
        draw.lambda[n] = gamma(rng);
        std::poisson_distribution<long long> pois(draw.m[n] * draw.lambda[n]);
        draw.y[n] = static_cast<double>(pois(rng));
      }
    }
  }
  return draw;
}

double SimEntry::s_mean_bias() const {
  if (s_bias.empty()) return 0.0;
  return std::accumulate(s_bias.begin(), s_bias.end(), 0.0) /
         static_cast<double>(s_bias.size());
}

double SimEntry::s_bias_se() const {
  const std::size_t n = s_bias.size();
  if (n < 2) return 0.0;
  const double mean = s_mean_bias();
  double ss = 0.0;
  for (double b : s_bias) ss += (b - mean) * (b - mean);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

double SimEntry::s_mse() const {
  if (s_bias.empty()) return 0.0;
  double ss = 0.0;
  for (double b : s_bias) ss += b * b;
  return ss / static_cast<double>(s_bias.size());
}

double SimEntry::lambda_mse() const {
  if (lambda_sqerr_mean.empty()) return 0.0;
  return std::accumulate(lambda_sqerr_mean.begin(), lambda_sqerr_mean.end(), 0.0) /
         static_cast<double>(lambda_sqerr_mean.size());
}

const SimEntry& SimReport::entry(int group_size, int vaccine) const {
  for (const auto& e : entries)
    if (e.group_size == group_size && e.vaccine == vaccine) return e;
  throw std::out_of_range("SimReport::entry: no such entry");
}

double SimReport::s_mse(int group_size) const {
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& e : entries)
    if (e.group_size == group_size) {
      for (double b : e.s_bias) ss += b * b;
      n += e.s_bias.size();
    }
  return n ? ss / static_cast<double>(n) : 0.0;
}

double SimReport::lambda_mse(int group_size) const {
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& e : entries)
    if (e.group_size == group_size) {
      for (double v : e.lambda_sqerr_mean) ss += v;
      n += e.lambda_sqerr_mean.size();
    }
  return n ? ss / static_cast<double>(n) : 0.0;
}

double SimReport::s_mean_bias(int group_size) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : entries)
    if (e.group_size == group_size) {
      sum += std::accumulate(e.s_bias.begin(), e.s_bias.end(), 0.0);
      n += e.s_bias.size();
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double SimReport::s_bias_se(int group_size) const {
  std::vector<double> pooled;
  for (const auto& e : entries)
    if (e.group_size == group_size)
      pooled.insert(pooled.end(), e.s_bias.begin(), e.s_bias.end());
  const std::size_t n = pooled.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) /
                      static_cast<double>(n);
  double ss = 0.0;
  for (double b : pooled) ss += (b - mean) * (b - mean);
  return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

long long SimReport::non_converged() const {
  return std::accumulate(non_converged_by_size.begin(), non_converged_by_size.end(),
                         0ll);
}

namespace {

SimReport study_impl(const SimScenario& scenario, bool parallel) {
  if (scenario.n_vaccines < 1 || scenario.n_replications < 1 ||
      scenario.group_sizes.empty())
    throw std::invalid_argument("run_study: invalid scenario");

  const int I = scenario.n_vaccines;
  const int R = scenario.n_replications;
  SimReport report;
  report.scenario = scenario;
  report.non_converged_by_size.assign(scenario.group_sizes.size(), 0);
  for (int size : scenario.group_sizes)
    for (int i = 0; i < I; ++i) {
      SimEntry e;
      e.group_size = size;
      e.vaccine = i;
      e.s_bias.assign(R, 0.0);
      e.lambda_bias_mean.assign(R, 0.0);
      e.lambda_sqerr_mean.assign(R, 0.0);
      report.entries.push_back(std::move(e));
    }

  const int threads =
      parallel ? (scenario.threads > 0 ? scenario.threads : omp_get_max_threads()) : 1;
  const FitConfig fit_config;

  for (std::size_t s = 0; s < scenario.group_sizes.size(); ++s) {
    const int K = scenario.group_sizes[s];
    long long non_converged = 0;

#pragma omp parallel for schedule(dynamic) num_threads(threads) \
    reduction(+ : non_converged) if (parallel)
    for (int rep = 0; rep < R; ++rep) {
      SimDraw draw = simulate_group(scenario, K, static_cast<std::uint64_t>(rep));
      GroupDesign design;
      design.y = draw.y;
      design.m = draw.m;
      design.vaccine_index = draw.vaccine;
      design.n_vaccines = I;
      GroupFit fit = fit_group(design, fit_config);
      if (!fit.converged) ++non_converged;

      for (int i = 0; i < I; ++i) {
        const double s_hat = (1.0 - fit.p[i]) * fit.mu[i];
        report.entries[s * I + i].s_bias[rep] = s_hat - scenario.true_s(i);
      }
      std::vector<double> bias_sum(I, 0.0), sqerr_sum(I, 0.0);
      for (std::size_t n = 0; n < draw.y.size(); ++n) {
        const int i = draw.vaccine[n];
        const ZinbParams params{fit.p[i], fit.mu[i], fit.r};
        const double lambda_hat = posterior_lambda_mean(draw.y[n], params, draw.m[n]);
        const double err = lambda_hat - draw.lambda[n];
        bias_sum[i] += err;
        sqerr_sum[i] += err * err;
      }
      for (int i = 0; i < I; ++i) {
        report.entries[s * I + i].lambda_bias_mean[rep] = bias_sum[i] / K;
        report.entries[s * I + i].lambda_sqerr_mean[rep] = sqerr_sum[i] / K;
      }
    }
    report.non_converged_by_size[s] = non_converged;
  }
  return report;
}

void emit_long_csv(std::ostream& out, const SimReport& report, const char* bias_metric,
                   const char* extra_metric, const char* mse_metric, bool ae_level) {
  out << "scenario,vaccine,group_size,metric,value\n";
  char buf[64];
  auto row = [&](int vaccine, int size, const char* metric, double value) {
    std::snprintf(buf, sizeof buf, "%.6g", value);
    out << report.scenario.label << ',' << vaccine << ',' << size << ',' << metric
        << ',' << buf << '\n';
  };
  for (const auto& e : report.entries) {
    const auto& biases = ae_level ? e.lambda_bias_mean : e.s_bias;
    for (double b : biases) row(e.vaccine, e.group_size, bias_metric, b);
    if (ae_level)
      for (double v : e.lambda_sqerr_mean) row(e.vaccine, e.group_size, extra_metric, v);
    row(e.vaccine, e.group_size, mse_metric, ae_level ? e.lambda_mse() : e.s_mse());
  }
}

}  // namespace

SimReport run_study(const SimScenario& scenario) { return study_impl(scenario, true); }

SimReport run_study_serial(const SimScenario& scenario) {
  return study_impl(scenario, false);
}

void emit_group_csv(std::ostream& out, const SimReport& report) {
  emit_long_csv(out, report, "s_bias", nullptr, "s_mse", false);
}

void emit_ae_csv(std::ostream& out, const SimReport& report) {
  emit_long_csv(out, report, "lambda_bias", "lambda_sqerr", "lambda_mse", true);
}

}  // namespace vaxsig
