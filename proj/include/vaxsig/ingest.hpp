#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vaxsig/rational.hpp"

namespace vaxsig {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, int line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// One spontaneous report: a vaccine set, an AE set, and a derived weight of
// 1/|vaccines| applied to every vaccine-AE pair it contributes.
struct Report {
  std::string report_id;
  std::vector<std::string> vaccines;  // sorted, unique, nonempty
  std::vector<std::string> aes;       // sorted, unique, nonempty

  Rational weight() const {
    return {1, static_cast<std::int64_t>(vaccines.size())};
  }
};

// Partition of AE terms into groups (one grouping level).
struct Ontology {
  std::map<std::string, std::string> term_to_group;
  std::map<std::string, std::vector<std::string>> groups;  // sorted members

  bool empty() const { return term_to_group.empty(); }
};

struct FilterPolicy {
  int min_ae_frequency = 20;
  int min_group_size = 15;
  std::optional<std::set<std::string>> vaccine_whitelist;
};

// Predicate on an extra input column: numeric range or exact match.
struct ColumnFilter {
  std::string column;
  bool numeric = false;
  double lo = 0.0;
  double hi = 0.0;
  std::string value;
};

struct ReadOptions {
  char field_delim = ',';
  char list_delim = '|';
  std::vector<ColumnFilter> where;
};

// Reports file: header `report_id,vaccines,aes` (extra columns allowed and
// usable in ColumnFilter), list fields pipe-delimited.
std::vector<Report> parse_reports(std::istream& in, const ReadOptions& opts = {});
void write_reports(std::ostream& out, const std::vector<Report>& reports,
                   const ReadOptions& opts = {});

// Ontology file: header `term,group`; every term maps to exactly one group.
Ontology parse_ontology(std::istream& in, char field_delim = ',');
void write_ontology(std::ostream& out, const Ontology& ont, char field_delim = ',');

struct FilterOutcome {
  std::vector<Report> reports;
  Ontology ontology;
  int removed_terms = 0;
  int removed_groups = 0;
  int dropped_reports = 0;
};

// Single pass, in order: drop rare AE terms, drop undersized groups, drop
// reports left without AEs. No fixpoint iteration; frequencies are unweighted
// report counts.
FilterOutcome apply_filters(const std::vector<Report>& reports,
                            const Ontology& ontology, const FilterPolicy& policy);

}  // namespace vaxsig
