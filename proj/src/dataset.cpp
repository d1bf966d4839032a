#include "vaxsig/dataset.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace vaxsig {

Dataset make_dataset(std::vector<Report> reports, Ontology ontology) {
  Dataset ds;

  // Strip AE terms without a group; they carry no usable signal downstream.
  {
    std::set<std::string> unmapped;
    std::vector<Report> kept;
    for (auto& rep : reports) {
      std::erase_if(rep.aes, [&](const std::string& ae) {
        if (ontology.term_to_group.count(ae)) return false;
        unmapped.insert(ae);
        return true;
      });
      if (!rep.aes.empty()) kept.push_back(std::move(rep));
    }
    ds.unmapped_terms = static_cast<int>(unmapped.size());
    reports = std::move(kept);
  }
  if (reports.empty())
    throw std::invalid_argument("make_dataset: no reports with mapped AE terms");

  std::set<std::string> vaccine_set;
  for (const auto& rep : reports)
    vaccine_set.insert(rep.vaccines.begin(), rep.vaccines.end());
  std::vector<std::string> vaccines(vaccine_set.begin(), vaccine_set.end());
  std::vector<std::string> aes;
  for (const auto& [term, group] : ontology.term_to_group) aes.push_back(term);

  ds.table = build_table(reports, vaccines, aes);
  ds.expected = expected_counts(ds.table);
  ds.ontology = std::move(ontology);

  const int J = ds.table.cols();
  std::map<std::string, int> col_of;
  for (int j = 0; j < J; ++j) col_of.emplace(ds.table.aes[j], j);

  for (const auto& [group, members] : ds.ontology.groups) {
    GroupLayout layout;
    layout.id = group;
    std::vector<int> slot_of_row(ds.table.rows(), -1);
    for (int i = 0; i < ds.table.rows(); ++i) {
      for (const auto& term : members) {
        auto it = col_of.find(term);
        if (it == col_of.end()) continue;  // term never reported
        const int j = it->second;
        const double m = ds.expected.at(i, j);
        if (m <= 0.0) continue;
        if (slot_of_row[i] < 0) {
          slot_of_row[i] = static_cast<int>(layout.slot_to_row.size());
          layout.slot_to_row.push_back(i);
        }
        layout.cell.push_back(i * J + j);
        layout.vaccine_slot.push_back(slot_of_row[i]);
        layout.offsets.push_back(m);
      }
    }
    if (layout.cell.empty()) continue;  // group entirely unobserved
    ds.group_ids.push_back(group);
    ds.layouts.push_back(std::move(layout));
  }

  std::map<std::string, int> row_of;
  for (int i = 0; i < ds.table.rows(); ++i) row_of.emplace(ds.table.vaccines[i], i);
  ds.report_vaccines.reserve(reports.size());
  ds.report_aes.reserve(reports.size());
  for (const auto& rep : reports) {
    std::vector<int> vs, as;
    for (const auto& v : rep.vaccines) vs.push_back(row_of.at(v));
    for (const auto& a : rep.aes) as.push_back(col_of.at(a));
    ds.report_vaccines.push_back(std::move(vs));
    ds.report_aes.push_back(std::move(as));
    ds.report_weights.push_back(rep.weight().to_double());
  }
  ds.reports = std::move(reports);
  return ds;
}

std::vector<double> observed_cells(const Dataset& ds) {
  std::vector<double> cells(ds.table.counts.size());
  for (std::size_t k = 0; k < cells.size(); ++k)
    cells[k] = ds.table.counts[k].to_double();
  return cells;
}

void rebuild_cells(const Dataset& ds, const std::vector<int>& sigma,
                   std::vector<double>& cells) {
  cells.assign(ds.table.counts.size(), 0.0);
  const int J = ds.table.cols();
  for (std::size_t k = 0; k < ds.report_vaccines.size(); ++k) {
    const double w = ds.report_weights[k];
    const auto& aes = ds.report_aes[sigma[k]];
    for (int i : ds.report_vaccines[k])
      for (int j : aes) cells[static_cast<std::size_t>(i) * J + j] += w;
  }
}

GroupDesign design_for(const Dataset& ds, int group_idx,
                       const std::vector<double>& cells) {
  const GroupLayout& layout = ds.layouts[group_idx];
  GroupDesign design;
  design.n_vaccines = static_cast<int>(layout.slot_to_row.size());
  design.y.reserve(layout.cell.size());
  design.m = layout.offsets;
  design.vaccine_index = layout.vaccine_slot;
  for (int cell : layout.cell) design.y.push_back(cells[cell]);
  return design;
}

}  // namespace vaxsig
