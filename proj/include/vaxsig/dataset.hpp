#pragma once

#include <string>
#include <vector>

#include "vaxsig/contingency.hpp"
#include "vaxsig/ingest.hpp"
#include "vaxsig/zinb.hpp"

namespace vaxsig {

// Fixed skeleton of one group's design: which table cells feed the fit and
// their observed expected counts. The skeleton is shared by all permutation
// replicates (cells with observed M = 0 stay empty under AE-set reshuffling,
// because a zero row or column margin means the id never occurs at all).
struct GroupLayout {
  std::string id;
  std::vector<int> cell;          // flat table index i*J+j per entry
  std::vector<int> vaccine_slot;  // entry -> slot
  std::vector<int> slot_to_row;   // slot -> table row
  std::vector<double> offsets;    // observed M per entry
};

// Immutable observed view shared across threads during permutation testing.
struct Dataset {
  ContingencyTable table;
  ExpectedCounts expected;
  Ontology ontology;
  std::vector<std::string> group_ids;
  std::vector<GroupLayout> layouts;

  // Compact integer view of the reports for fast table rebuilds.
  std::vector<std::vector<int>> report_vaccines;  // table rows
  std::vector<std::vector<int>> report_aes;       // table cols
  std::vector<double> report_weights;
  std::vector<Report> reports;

  int unmapped_terms = 0;  // distinct report AE terms absent from the ontology
};

// Builds table, expected counts, and per-group design skeletons. Report AE
// terms missing from the ontology are excluded and tallied.
Dataset make_dataset(std::vector<Report> reports, Ontology ontology);

// Observed cell counts as doubles, row-major I*J.
std::vector<double> observed_cells(const Dataset& ds);

// Cell counts under the AE-set assignment sigma (sigma[k] = index of the
// report whose AE set report k carries). Written into `cells` (resized I*J).
void rebuild_cells(const Dataset& ds, const std::vector<int>& sigma,
                   std::vector<double>& cells);

// Design vector for one group at the given cell counts.
GroupDesign design_for(const Dataset& ds, int group_idx,
                       const std::vector<double>& cells);

}  // namespace vaxsig
