#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vaxsig/ingest.hpp"
#include "vaxsig/rational.hpp"

namespace vaxsig {

// Weighted I x J vaccine-by-AE table. Counts stay exact rationals until model
// fitting so the margin identities hold without drift.
struct ContingencyTable {
  std::vector<std::string> vaccines;  // row labels
  std::vector<std::string> aes;       // column labels
  std::vector<Rational> counts;       // row-major I*J
  std::vector<Rational> row_margins;
  std::vector<Rational> col_margins;
  Rational total;

  int rows() const { return static_cast<int>(vaccines.size()); }
  int cols() const { return static_cast<int>(aes.size()); }
  const Rational& at(int i, int j) const { return counts[static_cast<std::size_t>(i) * aes.size() + j]; }
  double value(int i, int j) const { return at(i, j).to_double(); }
};

// y_ij = sum of weights of reports mentioning vaccine i and AE j. Report
// AEs/vaccines must lie in the given universes. Throws on an empty report
// list (table undefined).
ContingencyTable build_table(const std::vector<Report>& reports,
                             const std::vector<std::string>& vaccines,
                             const std::vector<std::string>& aes);

// M_ij = y_i. * y_.j / y..
struct ExpectedCounts {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<double> m;  // row-major

  double at(int i, int j) const { return m[static_cast<std::size_t>(i) * n_cols + j]; }
};

ExpectedCounts expected_counts(const ContingencyTable& table);

// RR_ij = y_ij / M_ij; cells with M_ij = 0 carry a distinct missing marker.
struct RrCell {
  double value = 0.0;
  bool defined = false;
};

std::vector<RrCell> naive_rr(const ContingencyTable& table, const ExpectedCounts& expected);

// Wide CSV: first column vaccine id, remaining columns AE ids, 6 fractional digits.
void dump_table_csv(std::ostream& out, const ContingencyTable& table);

}  // namespace vaxsig
