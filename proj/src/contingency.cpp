#include "vaxsig/contingency.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace vaxsig {

ContingencyTable build_table(const std::vector<Report>& reports,
                             const std::vector<std::string>& vaccines,
                             const std::vector<std::string>& aes) {
  if (reports.empty())
    throw std::invalid_argument("build_table: empty report list, table undefined");
  if (vaccines.empty() || aes.empty())
    throw std::invalid_argument("build_table: empty universe");

  ContingencyTable table;
  table.vaccines = vaccines;
  table.aes = aes;
  const std::size_t I = vaccines.size(), J = aes.size();
  table.counts.assign(I * J, Rational{});

  std::unordered_map<std::string, int> row, col;
  for (std::size_t i = 0; i < I; ++i) row.emplace(vaccines[i], static_cast<int>(i));
  for (std::size_t j = 0; j < J; ++j) col.emplace(aes[j], static_cast<int>(j));

  for (const auto& rep : reports) {
    const Rational w = rep.weight();
    for (const auto& v : rep.vaccines) {
      auto ri = row.find(v);
      if (ri == row.end())
        throw std::invalid_argument("build_table: vaccine '" + v + "' not in universe");
      for (const auto& a : rep.aes) {
        auto cj = col.find(a);
        if (cj == col.end())
          throw std::invalid_argument("build_table: AE '" + a + "' not in universe");
        table.counts[static_cast<std::size_t>(ri->second) * J + cj->second] += w;
      }
    }
  }

  table.row_margins.assign(I, Rational{});
  table.col_margins.assign(J, Rational{});
  table.total = Rational{};
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < J; ++j) {
      const Rational& y = table.counts[i * J + j];
      table.row_margins[i] += y;
      table.col_margins[j] += y;
      table.total += y;
    }
  return table;
}

ExpectedCounts expected_counts(const ContingencyTable& table) {
  if (table.total.num == 0)
    throw std::invalid_argument("expected_counts: table total is zero");
  ExpectedCounts ex;
  ex.n_rows = table.rows();
  ex.n_cols = table.cols();
  ex.m.resize(static_cast<std::size_t>(ex.n_rows) * ex.n_cols);
  const double total = table.total.to_double();
  for (int i = 0; i < ex.n_rows; ++i) {
    const double yi = table.row_margins[i].to_double();
    for (int j = 0; j < ex.n_cols; ++j) {
      const double yj = table.col_margins[j].to_double();
      ex.m[static_cast<std::size_t>(i) * ex.n_cols + j] = yi * yj / total;
    }
  }
  return ex;
}

std::vector<RrCell> naive_rr(const ContingencyTable& table, const ExpectedCounts& expected) {
  std::vector<RrCell> rr(expected.m.size());
  for (int i = 0; i < expected.n_rows; ++i)
    for (int j = 0; j < expected.n_cols; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * expected.n_cols + j;
      if (expected.m[k] > 0.0) rr[k] = {table.value(i, j) / expected.m[k], true};
    }
  return rr;
}

void dump_table_csv(std::ostream& out, const ContingencyTable& table) {
  out << "vaccine";
  for (const auto& ae : table.aes) out << ',' << ae;
  out << '\n';
  char buf[64];
  for (int i = 0; i < table.rows(); ++i) {
    out << table.vaccines[i];
    for (int j = 0; j < table.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.6f", table.value(i, j));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace vaxsig
