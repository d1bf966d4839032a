#include "vaxsig/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace vaxsig {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == delim) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits a list field on the list delimiter, trims, drops empties, sorts and
// deduplicates. An all-empty field yields an empty vector.
std::vector<std::string> parse_list(const std::string& field, char list_delim) {
  std::vector<std::string> items;
  for (auto& raw : split(field, list_delim)) {
    std::string item = strip(raw);
    if (!item.empty()) items.push_back(std::move(item));
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

bool passes_filters(const std::vector<ColumnFilter>& where,
                    const std::unordered_map<std::string, int>& columns,
                    const std::vector<std::string>& fields, int line_no) {
  for (const auto& f : where) {
    auto it = columns.find(f.column);
    if (it == columns.end())
      throw ParseError("filter column '" + f.column + "' not present in header", 1);
    if (static_cast<std::size_t>(it->second) >= fields.size())
      throw ParseError("record has no value for column '" + f.column + "'", line_no);
    const std::string v = strip(fields[it->second]);
    if (f.numeric) {
      double x = 0.0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc() || p != v.data() + v.size())
        throw ParseError("non-numeric value '" + v + "' in column '" + f.column + "'",
                         line_no);
      if (x < f.lo || x > f.hi) return false;
    } else if (v != f.value) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<Report> parse_reports(std::istream& in, const ReadOptions& opts) {
  std::string line;
  int line_no = 0;

  // Header row is required.
  if (!std::getline(in, line)) throw ParseError("empty reports file", 0);
  ++line_no;
  auto header = split(strip(line), opts.field_delim);
  if (header.size() < 3 || strip(header[0]) != "report_id" ||
      strip(header[1]) != "vaccines" || strip(header[2]) != "aes")
    throw ParseError("expected header 'report_id,vaccines,aes'", line_no);
  std::unordered_map<std::string, int> columns;
  for (std::size_t c = 0; c < header.size(); ++c)
    columns.emplace(strip(header[c]), static_cast<int>(c));

  std::vector<Report> reports;
  std::unordered_set<std::string> seen_ids;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto fields = split(line, opts.field_delim);
    if (fields.size() < 3) throw ParseError("record has fewer than 3 fields", line_no);
    if (!passes_filters(opts.where, columns, fields, line_no)) continue;

    Report rep;
    rep.report_id = strip(fields[0]);
    if (rep.report_id.empty()) throw ParseError("empty report_id", line_no);
    if (!seen_ids.insert(rep.report_id).second)
      throw ParseError("duplicate report_id '" + rep.report_id + "'", line_no);
    rep.vaccines = parse_list(fields[1], opts.list_delim);
    if (rep.vaccines.empty()) throw ParseError("empty vaccine list", line_no);
    rep.aes = parse_list(fields[2], opts.list_delim);
    if (rep.aes.empty()) throw ParseError("empty AE list", line_no);
    reports.push_back(std::move(rep));
  }
  return reports;
}

void write_reports(std::ostream& out, const std::vector<Report>& reports,
                   const ReadOptions& opts) {
  out << "report_id" << opts.field_delim << "vaccines" << opts.field_delim << "aes\n";
  for (const auto& rep : reports) {
    out << rep.report_id << opts.field_delim;
    for (std::size_t i = 0; i < rep.vaccines.size(); ++i)
      out << (i ? std::string(1, opts.list_delim) : "") << rep.vaccines[i];
    out << opts.field_delim;
    for (std::size_t i = 0; i < rep.aes.size(); ++i)
      out << (i ? std::string(1, opts.list_delim) : "") << rep.aes[i];
    out << '\n';
  }
}

Ontology parse_ontology(std::istream& in, char field_delim) {
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw ParseError("empty ontology file", 0);
  ++line_no;
  auto header = split(strip(line), field_delim);
  if (header.size() < 2 || strip(header[0]) != "term" || strip(header[1]) != "group")
    throw ParseError("expected header 'term,group'", line_no);

  Ontology ont;
  while (std::getline(in, line)) {
    ++line_no;
    if (strip(line).empty()) continue;
    auto fields = split(line, field_delim);
    if (fields.size() < 2) throw ParseError("record has fewer than 2 fields", line_no);
    std::string term = strip(fields[0]);
    std::string group = strip(fields[1]);
    if (term.empty() || group.empty())
      throw ParseError("empty term or group", line_no);
    auto [it, inserted] = ont.term_to_group.emplace(term, group);
    if (!inserted) {
      if (it->second != group)
        throw ParseError("term '" + term + "' mapped to two groups", line_no);
      continue;  // exact duplicate row is harmless
    }
    ont.groups[group].push_back(term);
  }
  if (ont.empty()) throw ParseError("ontology has no term mappings", line_no);
  for (auto& [group, members] : ont.groups) std::sort(members.begin(), members.end());
  return ont;
}

void write_ontology(std::ostream& out, const Ontology& ont, char field_delim) {
  out << "term" << field_delim << "group\n";
  for (const auto& [group, members] : ont.groups)
    for (const auto& term : members) out << term << field_delim << group << '\n';
}

FilterOutcome apply_filters(const std::vector<Report>& reports,
                            const Ontology& ontology, const FilterPolicy& policy) {
  FilterOutcome out;
  out.reports = reports;
  out.ontology = ontology;

  // Optional vaccine whitelist; reports left without vaccines are dropped.
  if (policy.vaccine_whitelist) {
    const auto& wl = *policy.vaccine_whitelist;
    std::vector<Report> kept;
    for (auto& rep : out.reports) {
      std::erase_if(rep.vaccines, [&](const std::string& v) { return !wl.count(v); });
      if (rep.vaccines.empty())
        ++out.dropped_reports;
      else
        kept.push_back(std::move(rep));
    }
    out.reports = std::move(kept);
  }

  // Step 1: drop AE terms below the unweighted report-frequency threshold.
  std::unordered_map<std::string, int> freq;
  for (const auto& rep : out.reports)
    for (const auto& ae : rep.aes) ++freq[ae];
  std::unordered_set<std::string> dead_terms;
  for (const auto& [term, n] : freq)
    if (n < policy.min_ae_frequency) dead_terms.insert(term);
  // Ontology terms that never occur in reports have frequency 0.
  for (const auto& [term, group] : out.ontology.term_to_group)
    if (!freq.count(term) && policy.min_ae_frequency > 0) dead_terms.insert(term);

  // Step 2: drop groups left with too few terms, together with their terms.
  {
    Ontology pruned;
    for (const auto& [group, members] : out.ontology.groups) {
      std::vector<std::string> alive;
      for (const auto& term : members)
        if (!dead_terms.count(term)) alive.push_back(term);
      out.removed_terms += static_cast<int>(members.size() - alive.size());
      if (static_cast<int>(alive.size()) < policy.min_group_size) {
        ++out.removed_groups;
        for (const auto& term : alive) dead_terms.insert(term);
      } else {
        for (const auto& term : alive) pruned.term_to_group.emplace(term, group);
        pruned.groups.emplace(group, std::move(alive));
      }
    }
    out.ontology = std::move(pruned);
  }

  // Step 3: scrub dead terms from reports; drop reports left without AEs.
  std::vector<Report> kept;
  for (auto& rep : out.reports) {
    std::erase_if(rep.aes, [&](const std::string& ae) { return dead_terms.count(ae) > 0; });
    if (rep.aes.empty())
      ++out.dropped_reports;
    else
      kept.push_back(std::move(rep));
  }
  out.reports = std::move(kept);
  return out;
}

}  // namespace vaxsig
