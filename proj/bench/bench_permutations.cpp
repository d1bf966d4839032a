// Wall-clock comparison of the parallel permutation engine against its serial
// reference on a synthetic dataset, and a bitwise equality check of the two.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <omp.h>

#include "vaxsig/dataset.hpp"
#include "vaxsig/rng.hpp"
#include "vaxsig/signal.hpp"

using namespace vaxsig;

namespace {

std::vector<Report> synthetic_reports(std::mt19937_64& rng, int n, int n_vaccines,
                                      int n_aes) {
  std::vector<Report> reports;
  for (int k = 0; k < n; ++k) {
    Report rep;
    rep.report_id = "r" + std::to_string(k);
    std::set<std::string> vs, as;
    const int nv = 1 + static_cast<int>(uniform_below(rng, 2));
    const int na = 1 + static_cast<int>(uniform_below(rng, 4));
    while (static_cast<int>(vs.size()) < nv)
      vs.insert("V" + std::to_string(uniform_below(rng, n_vaccines)));
    while (static_cast<int>(as.size()) < na)
      as.insert("a" + std::to_string(uniform_below(rng, n_aes)));
    rep.vaccines.assign(vs.begin(), vs.end());
    rep.aes.assign(as.begin(), as.end());
    reports.push_back(std::move(rep));
  }
  return reports;
}

Ontology grouped_ontology(int n_aes, int n_groups) {
  Ontology ont;
  for (int j = 0; j < n_aes; ++j) {
    const std::string term = "a" + std::to_string(j);
    const std::string group = "G" + std::to_string(j % n_groups);
    ont.term_to_group.emplace(term, group);
    ont.groups[group].push_back(term);
  }
  for (auto& [id, members] : ont.groups) std::sort(members.begin(), members.end());
  return ont;
}

template <class F>
double timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  const int n_reports = argc > 1 ? std::atoi(argv[1]) : 4000;
  const int n_permutations = argc > 2 ? std::atoi(argv[2]) : 200;

  std::mt19937_64 rng = substream(8080, 0);
  auto ds = make_dataset(synthetic_reports(rng, n_reports, 4, 24),
                         grouped_ontology(24, 6));
  std::printf("dataset: %d reports, %d vaccines, %d AE terms, %zu groups\n",
              n_reports, ds.table.rows(), ds.table.cols(), ds.group_ids.size());

  PermutationPlan plan;
  plan.n_permutations = n_permutations;
  plan.seed = 99;

  NullPair serial, parallel;
  const double t_serial =
      timed([&] { serial = null_distributions_serial(ds, plan, {}); });
  const double t_parallel =
      timed([&] { parallel = null_distributions(ds, plan, {}); });

  const bool identical = serial.group_null.values == parallel.group_null.values &&
                         serial.ae_null.values == parallel.ae_null.values &&
                         serial.group_null.observed == parallel.group_null.observed;
  std::printf("permutations: %d\n", n_permutations);
  std::printf("serial reference: %8.3f s\n", t_serial);
  std::printf("parallel (%2d threads): %8.3f s  speedup %.2fx\n",
              omp_get_max_threads(), t_parallel, t_serial / t_parallel);
  std::printf("bitwise identical results: %s\n", identical ? "yes" : "NO");
  return identical ? 0 : 1;
}
