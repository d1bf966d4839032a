#include <charconv>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vaxsig/pipeline.hpp"

namespace {

// COLUMN:LO:HI (numeric range) or COLUMN=VALUE (exact match).
bool parse_where(const std::string& expr, vaxsig::ColumnFilter& out) {
  if (auto eq = expr.find('='); eq != std::string::npos) {
    out.column = expr.substr(0, eq);
    out.value = expr.substr(eq + 1);
    out.numeric = false;
    return !out.column.empty();
  }
  const auto c1 = expr.find(':');
  if (c1 == std::string::npos) return false;
  const auto c2 = expr.find(':', c1 + 1);
  if (c2 == std::string::npos) return false;
  out.column = expr.substr(0, c1);
  const std::string lo = expr.substr(c1 + 1, c2 - c1 - 1);
  const std::string hi = expr.substr(c2 + 1);
  out.numeric = true;
  auto r1 = std::from_chars(lo.data(), lo.data() + lo.size(), out.lo);
  auto r2 = std::from_chars(hi.data(), hi.data() + hi.size(), out.hi);
  return !out.column.empty() && r1.ec == std::errc{} && r2.ec == std::errc{} &&
         r1.ptr == lo.data() + lo.size() && r2.ptr == hi.data() + hi.size();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vaccine adverse-event signal mining"};
  app.set_version_flag("--version", vaxsig::kVersion);
  app.require_subcommand(1);

  vaxsig::RunConfig run;
  std::vector<std::string> where_exprs;
  std::vector<std::string> whitelist;

  auto add_run_options = [&](CLI::App* sub) {
    sub->add_option("--reports", run.reports_path, "Reports CSV")->required();
    sub->add_option("--ontology", run.ontology_path, "Term-to-group CSV")->required();
    sub->add_option("--min-ae-count", run.filters.min_ae_frequency,
                    "Minimum unweighted report count per AE term");
    sub->add_option("--min-group-size", run.filters.min_group_size,
                    "Minimum surviving terms per group");
    sub->add_option("--vaccine", whitelist, "Restrict to these vaccines");
    sub->add_option("--where", where_exprs,
                    "Report filter, COLUMN:LO:HI or COLUMN=VALUE");
    sub->add_option("--grad-tol", run.fit.grad_tol, "Fit convergence tolerance");
    sub->add_option("--max-iters", run.fit.max_iters, "Fit iteration cap");
    sub->set_config("--config");
  };

  CLI::App* mine = app.add_subcommand("mine", "Run the full signal-mining pipeline");
  add_run_options(mine);
  mine->add_option("--out", run.out_dir, "Output directory")->required();
  mine->add_option("--permutations", run.plan.n_permutations, "Null sample size");
  mine->add_option("--seed", run.plan.seed, "RNG seed");
  mine->add_option("--threads", run.plan.threads, "Worker threads (0 = all)");
  mine->add_option("--alpha", run.alpha, "Signal p-value threshold");
  mine->add_option("--s-min", run.s_min, "Minimum group relative rate to flag");
  mine->add_flag("--dump-table", run.dump_table, "Also write the weighted table");
  mine->add_flag("--dump-null", run.dump_null, "Also write the null distributions");
  mine->add_flag("--dry-run", run.dry_run, "Print the resolved plan and exit");

  CLI::App* validate =
      app.add_subcommand("validate", "Parse, filter, and summarize the inputs");
  add_run_options(validate);

  vaxsig::SimulateConfig sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run the recovery study");
  simulate->add_option("--out", sim.out_dir, "Output directory")->required();
  simulate->add_option("--label", sim.scenario.label, "Scenario label");
  simulate->add_option("--group-sizes", sim.scenario.group_sizes, "AE group sizes");
  simulate->add_option("--vaccines", sim.scenario.n_vaccines, "Vaccine count");
  simulate->add_option("--reps", sim.scenario.n_replications, "Replications");
  simulate->add_option("--offset-mult", sim.scenario.offset_multiplier,
                       "Offset multiplier");
  simulate->add_flag("--zip", sim.scenario.zip_mode,
                     "Generate with effectively infinite dispersion");
  simulate->add_option("--seed", sim.scenario.seed, "RNG seed");
  simulate->add_option("--threads", sim.scenario.threads, "Worker threads (0 = all)");
  simulate->add_flag("--dry-run", sim.dry_run, "Print the resolved plan and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (const auto& expr : where_exprs) {
    vaxsig::ColumnFilter f;
    if (!parse_where(expr, f)) {
      std::cerr << "vaxsig: exit=2 stage=config reason=\"bad --where expression: "
                << expr << "\"\n";
      return 2;
    }
    run.read.where.push_back(std::move(f));
  }
  if (!whitelist.empty())
    run.filters.vaccine_whitelist =
        std::set<std::string>(whitelist.begin(), whitelist.end());

  if (mine->parsed()) return vaxsig::run_mine(run, std::cerr);
  if (validate->parsed()) return vaxsig::run_validate(run, std::cout, std::cerr);
  return vaxsig::run_simulate(sim, std::cerr);
}
