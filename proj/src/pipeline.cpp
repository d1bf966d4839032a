#include "vaxsig/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "vaxsig/dataset.hpp"

namespace vaxsig {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError("config", std::string(what) + " path not set");
  if (!fs::exists(path))
    throw ConfigError("config", std::string(what) + " file not found: " + path);
}

void validate_numeric(const RunConfig& c) {
  if (c.plan.n_permutations < 1)
    throw ConfigError("config", "permutations must be >= 1");
  if (c.alpha <= 0.0 || c.alpha > 1.0) throw ConfigError("config", "alpha out of range");
  if (c.s_min < 0.0) throw ConfigError("config", "s-min must be nonnegative");
  if (c.filters.min_ae_frequency < 0 || c.filters.min_group_size < 0)
    throw ConfigError("config", "filter thresholds must be nonnegative");
  if (c.fit.grad_tol <= 0.0 || c.fit.max_iters < 1)
    throw ConfigError("config", "invalid fit tolerances");
}

struct Loaded {
  std::vector<Report> reports;
  Ontology ontology;
};

Loaded load_inputs(const RunConfig& c) {
  Loaded out;
  {
    std::ifstream in(c.reports_path);
    if (!in) throw DataError("ingest", "cannot open " + c.reports_path);
    try {
      out.reports = parse_reports(in, c.read);
    } catch (const ParseError& e) {
      throw DataError("ingest", c.reports_path + ": " + e.what());
    }
  }
  if (out.reports.empty()) throw DataError("ingest", "no report records");
  {
    std::ifstream in(c.ontology_path);
    if (!in) throw DataError("ingest", "cannot open " + c.ontology_path);
    try {
      out.ontology = parse_ontology(in, c.read.field_delim);
    } catch (const ParseError& e) {
      throw DataError("ingest", c.ontology_path + ": " + e.what());
    }
  }
  return out;
}

json config_json(const RunConfig& c) {
  json j;
  j["reports"] = c.reports_path;
  j["ontology"] = c.ontology_path;
  j["out"] = c.out_dir;
  j["min_ae_frequency"] = c.filters.min_ae_frequency;
  j["min_group_size"] = c.filters.min_group_size;
  if (c.filters.vaccine_whitelist)
    j["vaccine_whitelist"] =
        std::vector<std::string>(c.filters.vaccine_whitelist->begin(),
                                 c.filters.vaccine_whitelist->end());
  j["grad_tol"] = c.fit.grad_tol;
  j["max_iters"] = c.fit.max_iters;
  j["alpha_clamp"] = c.fit.alpha_clamp;
  j["phi_clamp"] = c.fit.phi_clamp;
  j["log_r_min"] = c.fit.log_r_min;
  j["log_r_max"] = c.fit.log_r_max;
  j["permutations"] = c.plan.n_permutations;
  j["seed"] = c.plan.seed;
  j["threads"] = c.plan.threads;
  j["alpha"] = c.alpha;
  j["s_min"] = c.s_min;
  j["field_delim"] = std::string(1, c.read.field_delim);
  j["list_delim"] = std::string(1, c.read.list_delim);
  return j;
}

int report_error(std::ostream& err, const StageError& e) {
  err << "vaxsig: exit=" << e.code << " stage=" << e.stage << " reason=\"" << e.what()
      << "\"\n";
  return e.code;
}

class StageTimer {
 public:
  explicit StageTimer(json& timings) : timings_(timings) {}
  template <class F>
  auto time(const char* stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(stage, t0);
    } else {
      auto result = f();
      record(stage, t0);
      return result;
    }
  }

 private:
  void record(const char* stage, std::chrono::steady_clock::time_point t0) {
    const auto dt = std::chrono::steady_clock::now() - t0;
    timings_[stage] =
        std::chrono::duration_cast<std::chrono::milliseconds>(dt).count();
  }
  json& timings_;
};

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PipelineError("output", "cannot write " + path);
  out << content;
}

}  // namespace

int run_mine(const RunConfig& config, std::ostream& err) {
  try {
    validate_numeric(config);
    require_file(config.reports_path, "reports");
    require_file(config.ontology_path, "ontology");
    if (config.out_dir.empty()) throw ConfigError("config", "output dir not set");

    if (config.dry_run) {
      err << "dry-run: " << config_json(config).dump() << "\n";
      return 0;
    }
    fs::create_directories(config.out_dir);

    json timings;
    StageTimer timer(timings);

    Loaded loaded = timer.time("ingest_ms", [&] { return load_inputs(config); });
    FilterOutcome filtered = timer.time("filter_ms", [&] {
      return apply_filters(loaded.reports, loaded.ontology, config.filters);
    });
    if (filtered.reports.empty())
      throw DataError("filter", "no reports survive the filter policy");
    if (filtered.ontology.empty())
      throw DataError("filter", "no AE groups survive the filter policy");

    Dataset ds = timer.time("table_ms", [&] {
      try {
        return make_dataset(filtered.reports, filtered.ontology);
      } catch (const std::invalid_argument& e) {
        throw DataError("table", e.what());
      }
    });

    DatasetStats observed = timer.time("fit_ms", [&] {
      return analyze_cells(ds, observed_cells(ds), config.fit, true);
    });
    NullPair nulls = timer.time("permute_ms", [&] {
      try {
        return null_distributions(ds, config.plan, config.fit);
      } catch (const std::invalid_argument& e) {
        throw PipelineError("permute", e.what());
      }
    });

    SignalTable table = assign_pvalues(ds, observed, nulls);
    flag_signals(table, config.alpha, config.s_min);

    timer.time("output_ms", [&] {
      const std::string base = config.out_dir + "/";
      {
        std::ostringstream os;
        os << "vaccine,group,s,p_value,flagged\n";
        for (const auto& row : table.group_rows)
          os << row.vaccine << ',' << row.group << ',' << fmt6(row.s) << ','
             << fmt6(row.p_value) << ',' << (row.flagged ? 1 : 0) << '\n';
        write_text_file(base + "group_signals.csv", os.str());
      }
      {
        std::ostringstream os;
        os << "vaccine,ae,group,y,M,lambda_hat,p_value,flagged\n";
        for (const auto& row : table.ae_rows)
          os << row.vaccine << ',' << row.ae << ',' << row.group << ',' << fmt6(row.y)
             << ',' << fmt6(row.m) << ',' << fmt6(row.lambda_hat) << ','
             << fmt6(row.p_value) << ',' << (row.flagged ? 1 : 0) << '\n';
        write_text_file(base + "ae_signals.csv", os.str());
      }
      {
        // Heatmap matrix: vaccines x groups filled with s.
        std::ostringstream os;
        os << "vaccine";
        for (const auto& g : ds.group_ids) os << ',' << g;
        os << '\n';
        std::map<std::pair<std::string, std::string>, double> s_of;
        for (const auto& row : table.group_rows)
          s_of[{row.vaccine, row.group}] = row.s;
        for (const auto& v : ds.table.vaccines) {
          os << v;
          for (const auto& g : ds.group_ids) {
            auto it = s_of.find({v, g});
            os << ',' << (it == s_of.end() ? "" : fmt6(it->second));
          }
          os << '\n';
        }
        write_text_file(base + "heatmap.csv", os.str());
      }
      if (config.dump_table) {
        std::ostringstream os;
        dump_table_csv(os, ds.table);
        write_text_file(base + "table.csv", os.str());
      }
      if (config.dump_null) {
        std::ostringstream os_g, os_a;
        for (double v : nulls.group_null.values) os_g << fmt6(v) << '\n';
        for (double v : nulls.ae_null.values) os_a << fmt6(v) << '\n';
        write_text_file(base + "null_max_s.txt", os_g.str());
        write_text_file(base + "null_max_lambda.txt", os_a.str());
      }
    });

    json manifest;
    manifest["version"] = kVersion;
    manifest["config"] = config_json(config);
    manifest["inputs"] = {
        {"reports_digest", hex64(fnv1a64_file(config.reports_path))},
        {"ontology_digest", hex64(fnv1a64_file(config.ontology_path))}};
    manifest["seed"] = config.plan.seed;
    manifest["timings"] = timings;
    int n_boundary = 0;
    int n_converged = 0;
    for (const auto& fit : observed.fits) {
      if (fit.converged) ++n_converged;
      for (bool b : fit.boundary) n_boundary += b ? 1 : 0;
    }
    manifest["diagnostics"] = {
        {"reports_used", ds.reports.size()},
        {"vaccines", ds.table.rows()},
        {"aes", ds.table.cols()},
        {"groups", ds.group_ids.size()},
        {"unmapped_terms", ds.unmapped_terms},
        {"filtered_terms", filtered.removed_terms},
        {"filtered_groups", filtered.removed_groups},
        {"dropped_reports", filtered.dropped_reports},
        {"observed_fits_converged", n_converged},
        {"observed_boundary_params", n_boundary},
        {"permutation_non_converged_fits", nulls.group_null.non_converged},
        {"max_s", observed.max_s},
        {"max_lambda", observed.max_lambda}};
    write_text_file(config.out_dir + "/manifest.json", manifest.dump(2) + "\n");
    return 0;
  } catch (const StageError& e) {
    return report_error(err, e);
  } catch (const std::exception& e) {
    return report_error(err, PipelineError("pipeline", e.what()));
  }
}

int run_validate(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    validate_numeric(config);
    require_file(config.reports_path, "reports");
    require_file(config.ontology_path, "ontology");

    Loaded loaded = load_inputs(config);
    FilterOutcome filtered =
        apply_filters(loaded.reports, loaded.ontology, config.filters);
    if (filtered.reports.empty())
      throw DataError("filter", "no reports survive the filter policy");
    Dataset ds;
    try {
      ds = make_dataset(filtered.reports, filtered.ontology);
    } catch (const std::invalid_argument& e) {
      throw DataError("table", e.what());
    }
    out << "vaccines=" << ds.table.rows() << " aes=" << ds.table.cols()
        << " groups=" << ds.group_ids.size()
        << " total_weight=" << fmt6(ds.table.total.to_double())
        << " unmapped_terms=" << ds.unmapped_terms << "\n";
    return 0;
  } catch (const StageError& e) {
    return report_error(err, e);
  } catch (const std::exception& e) {
    return report_error(err, PipelineError("pipeline", e.what()));
  }
}

int run_simulate(const SimulateConfig& config, std::ostream& err) {
  try {
    const SimScenario& sc = config.scenario;
    if (sc.group_sizes.empty() || sc.n_vaccines < 1 || sc.n_replications < 1)
      throw ConfigError("config", "invalid simulation scenario");
    for (int size : sc.group_sizes)
      if (size < 1) throw ConfigError("config", "group sizes must be positive");
    if (config.out_dir.empty()) throw ConfigError("config", "output dir not set");
    if (config.dry_run) {
      err << "dry-run: scenario=" << sc.label << " sizes=" << sc.group_sizes.size()
          << " reps=" << sc.n_replications << "\n";
      return 0;
    }
    fs::create_directories(config.out_dir);

    const auto t0 = std::chrono::steady_clock::now();
    SimReport report = run_study(sc);
    const auto run_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();

    {
      std::ostringstream os;
      emit_group_csv(os, report);
      write_text_file(config.out_dir + "/sim_group.csv", os.str());
    }
    {
      std::ostringstream os;
      emit_ae_csv(os, report);
      write_text_file(config.out_dir + "/sim_ae.csv", os.str());
    }
    json manifest;
    manifest["version"] = kVersion;
    manifest["scenario"] = {{"label", sc.label},
                            {"group_sizes", sc.group_sizes},
                            {"vaccines", sc.n_vaccines},
                            {"replications", sc.n_replications},
                            {"offset_multiplier", sc.offset_multiplier},
                            {"zip_mode", sc.zip_mode},
                            {"p", sc.p},
                            {"mu", sc.mu},
                            {"r", sc.r},
                            {"m_low", sc.m_low},
                            {"m_high", sc.m_high},
                            {"seed", sc.seed}};
    manifest["timings"] = {{"run_ms", run_ms}};
    manifest["diagnostics"] = {{"non_converged_fits", report.non_converged()}};
    write_text_file(config.out_dir + "/manifest.json", manifest.dump(2) + "\n");
    return 0;
  } catch (const StageError& e) {
    return report_error(err, e);
  } catch (const std::exception& e) {
    return report_error(err, PipelineError("pipeline", e.what()));
  }
}

}  // namespace vaxsig
