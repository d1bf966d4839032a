#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "vaxsig/sim.hpp"

using namespace vaxsig;

namespace {

SimScenario small_scenario() {
  SimScenario sc;
  sc.group_sizes = {20, 50};
  sc.n_vaccines = 3;
  sc.n_replications = 30;
  sc.seed = 17;
  return sc;
}

}  // namespace

TEST_CASE("true group rate cycles the parameter lists") {
  SimScenario sc;
  CHECK(sc.true_s(0) == doctest::Approx((1 - 0.2) * 0.8));
  CHECK(sc.true_s(1) == doctest::Approx((1 - 0.4) * 1.5));
  CHECK(sc.true_s(2) == doctest::Approx((1 - 0.6) * 3.0));
}

TEST_CASE("degenerate zero component yields all zeros") {
  SimScenario sc;
  sc.p = {1.0};
  sc.mu = {2.0};
  sc.group_sizes = {20};
  sc.n_vaccines = 2;
  const auto draw = simulate_group(sc, 20, 0);
  for (double lam : draw.lambda) CHECK(lam == 0.0);
  for (double y : draw.y) CHECK(y == 0.0);
}

TEST_CASE("draws are deterministic given seed, size, and replication") {
  const SimScenario sc = small_scenario();
  const auto a = simulate_group(sc, 20, 3);
  const auto b = simulate_group(sc, 20, 3);
  CHECK(a.y == b.y);
  CHECK(a.lambda == b.lambda);
  CHECK(a.m == b.m);
  const auto c = simulate_group(sc, 20, 4);
  CHECK(a.y != c.y);
}

TEST_CASE("offsets are shared across replications of one size") {
  const SimScenario sc = small_scenario();
  CHECK(simulate_group(sc, 20, 0).m == simulate_group(sc, 20, 7).m);
  CHECK(simulate_group(sc, 20, 0).m != simulate_group(sc, 50, 0).m);
  for (double m : simulate_group(sc, 20, 0).m) {
    CHECK(m >= sc.m_low);
    CHECK(m <= sc.m_high);
  }
}

TEST_CASE("empirical mean of y over M matches the group rate") {
  SimScenario sc;
  sc.p = {0.4};
  sc.mu = {1.5};
  sc.n_vaccines = 1;
  sc.group_sizes = {100};
  sc.seed = 31;
  const double truth = sc.true_s(0);
  double sum = 0.0, sumsq = 0.0;
  long long n = 0;
  for (int rep = 0; rep < 1000; ++rep) {  // 1000 reps x 100 cells = 1e5 draws
    const auto draw = simulate_group(sc, 100, static_cast<std::uint64_t>(rep));
    for (std::size_t k = 0; k < draw.y.size(); ++k) {
      const double v = draw.y[k] / draw.m[k];
      sum += v;
      sumsq += v * v;
      ++n;
    }
  }
  const double mean = sum / n;
  const double se = std::sqrt((sumsq / n - mean * mean) / n);
  CHECK(std::abs(mean - truth) <= 3.0 * se);
}

TEST_CASE("zip mode draws a degenerate nonzero rate") {
  SimScenario sc;
  sc.p = {0.3};
  sc.mu = {2.0};
  sc.n_vaccines = 1;
  sc.group_sizes = {200};
  sc.zip_mode = true;
  CHECK(sc.effective_r() == doctest::Approx(1e8));
  const auto draw = simulate_group(sc, 200, 0);
  for (double lam : draw.lambda)
    if (lam > 0.0) CHECK(lam == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("study runs are deterministic and serial matches parallel") {
  const SimScenario sc = small_scenario();
  const auto a = run_study(sc);
  const auto b = run_study(sc);
  const auto s = run_study_serial(sc);
  REQUIRE(a.entries.size() == b.entries.size());
  REQUIRE(a.entries.size() == s.entries.size());
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    CHECK(a.entries[k].s_bias == b.entries[k].s_bias);
    CHECK(a.entries[k].s_bias == s.entries[k].s_bias);
    CHECK(a.entries[k].lambda_bias_mean == s.entries[k].lambda_bias_mean);
    CHECK(a.entries[k].lambda_sqerr_mean == s.entries[k].lambda_sqerr_mean);
  }
  CHECK(a.non_converged() == s.non_converged());
}

TEST_CASE("report aggregates match their samples") {
  const auto report = run_study(small_scenario());
  for (const auto& e : report.entries) {
    REQUIRE(e.s_bias.size() == 30);
    double ss = 0.0;
    for (double b : e.s_bias) ss += b * b;
    CHECK(e.s_mse() == doctest::Approx(ss / 30.0).epsilon(1e-12));
    double mean = 0.0;
    for (double b : e.s_bias) mean += b;
    CHECK(e.s_mean_bias() == doctest::Approx(mean / 30.0).epsilon(1e-12));
  }
}

TEST_CASE("long-format CSV has the documented row counts") {
  const auto report = run_study(small_scenario());
  std::ostringstream group_csv, ae_csv;
  emit_group_csv(group_csv, report);
  emit_ae_csv(ae_csv, report);

  auto count_metric = [](const std::string& text, const std::string& metric) {
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line))
      if (line.find("," + metric + ",") != std::string::npos) ++n;
    return n;
  };
  // reps x vaccines x sizes bias rows, one mse row per (vaccine, size)
  CHECK(count_metric(group_csv.str(), "s_bias") == 30 * 3 * 2);
  CHECK(count_metric(group_csv.str(), "s_mse") == 3 * 2);
  CHECK(count_metric(ae_csv.str(), "lambda_bias") == 30 * 3 * 2);
  CHECK(count_metric(ae_csv.str(), "lambda_mse") == 3 * 2);

  std::istringstream in(group_csv.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "scenario,vaccine,group_size,metric,value");
}

TEST_CASE("emitted aggregates round-trip through the CSV") {
  const auto report = run_study(small_scenario());
  std::ostringstream group_csv;
  emit_group_csv(group_csv, report);
  // parse back: mse rows keyed by (vaccine, size)
  std::map<std::pair<int, int>, double> parsed;
  std::istringstream in(group_csv.str());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string scenario, vaccine, size, metric, value;
    std::getline(row, scenario, ',');
    std::getline(row, vaccine, ',');
    std::getline(row, size, ',');
    std::getline(row, metric, ',');
    std::getline(row, value, ',');
    if (metric == "s_mse")
      parsed[{std::stoi(vaccine), std::stoi(size)}] = std::stod(value);
  }
  REQUIRE(parsed.size() == 6);
  for (const auto& e : report.entries) {
    const double got = parsed.at({e.vaccine, e.group_size});
    CHECK(got == doctest::Approx(e.s_mse()).epsilon(1e-4));  // 6 digits in file
  }
}

TEST_CASE("empty study report emits header-only files") {
  SimReport report;
  std::ostringstream group_csv, ae_csv;
  emit_group_csv(group_csv, report);
  emit_ae_csv(ae_csv, report);
  CHECK(group_csv.str() == "scenario,vaccine,group_size,metric,value\n");
  CHECK(ae_csv.str() == "scenario,vaccine,group_size,metric,value\n");
}
