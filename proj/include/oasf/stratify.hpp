#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "oasf/design.hpp"

namespace oasf {

// Cell index of x under the subdivision of [0,1) into `grain` half-open
// intervals [a/z, (a+1)/z).  x = 1 is rejected, not clamped.
inline int subdivision_index(double x, int grain) {
  if (grain < 1) throw std::invalid_argument("subdivision_index: grain must be >= 1");
  if (!(x >= 0.0 && x < 1.0)) throw std::invalid_argument("subdivision_index: x must lie in [0,1)");
  auto idx = static_cast<int>(std::floor(grain * x));
  // grain*x < grain mathematically; guard the rounding edge at x just below 1
  if (idx >= grain) idx = grain - 1;
  return idx;
}

struct CellViolation {
  std::vector<int> cell;
  long count = 0;
};

// Exact occupancy of every cell tuple over the projection of a design
// onto a column subset at a given grain.
struct CellCountReport {
  std::vector<int> columns;  // 0-based
  int grain = 0;
  long total = 0;            // always equals N
  double expected = 0.0;     // N / grain^|u|
  long min_count = 0;        // over all grain^|u| cells, occupied or not
  long max_count = 0;
  std::map<std::vector<int>, long> counts;  // occupied cells only
  bool uniform = false;      // every cell holds exactly `expected` points

  // Cells whose occupancy differs from the integral expectation.  Empty
  // cells are enumerated explicitly only while grain^|u| stays within the
  // dense cap; beyond it `missing_cells` just counts them.
  std::vector<CellViolation> violations;
  std::uint64_t missing_cells = 0;
};

struct AuditOptions {
  std::uint64_t dense_cell_cap = 1'000'000;
};

inline CellCountReport audit_cells(const Design& design, std::span<const int> columns, int grain,
                                   const AuditOptions& opt = {}) {
  if (design.runs <= 0) throw std::invalid_argument("audit_cells: empty design");
  if (columns.empty()) throw std::invalid_argument("audit_cells: need at least one column");
  if (grain < 1) throw std::invalid_argument("audit_cells: grain must be >= 1");
  for (int c : columns) {
    if (c < 0 || c >= design.dims)
      throw std::invalid_argument("audit_cells: column index out of range");
  }

  CellCountReport report;
  report.columns.assign(columns.begin(), columns.end());
  report.grain = grain;
  report.total = design.runs;

  std::vector<int> cell(columns.size());
  for (int i = 0; i < design.runs; ++i) {
    for (std::size_t d = 0; d < columns.size(); ++d) {
      cell[d] = subdivision_index(design.at(i, columns[d]), grain);
    }
    ++report.counts[cell];
  }

  double n_cells = 1.0;
  for (std::size_t d = 0; d < columns.size(); ++d) n_cells *= grain;
  report.expected = design.runs / n_cells;

  report.min_count = report.counts.empty() ? 0 : report.counts.begin()->second;
  report.max_count = 0;
  for (const auto& [key, count] : report.counts) {
    report.min_count = std::min(report.min_count, count);
    report.max_count = std::max(report.max_count, count);
  }
  const auto occupied = static_cast<std::uint64_t>(report.counts.size());
  const bool all_cells_occupied = n_cells <= 1.8e19 && occupied == static_cast<std::uint64_t>(n_cells);
  if (!all_cells_occupied) report.min_count = 0;

  const double rounded = std::round(report.expected);
  const bool integral_expectation = rounded == report.expected;
  report.uniform = integral_expectation && report.min_count == report.max_count &&
                   static_cast<double>(report.max_count) == report.expected;

  if (integral_expectation && !report.uniform) {
    for (const auto& [key, count] : report.counts) {
      if (count != static_cast<long>(rounded)) report.violations.push_back({key, count});
    }
    if (!all_cells_occupied) {
      const std::uint64_t missing = static_cast<std::uint64_t>(n_cells) - occupied;
      if (static_cast<double>(n_cells) <= static_cast<double>(opt.dense_cell_cap)) {
        // enumerate empty cells in lexicographic order
        std::vector<int> probe(columns.size(), 0);
        auto advance = [&]() {
          for (int d = static_cast<int>(columns.size()) - 1; d >= 0; --d) {
            if (++probe[d] < grain) return true;
            probe[d] = 0;
          }
          return false;
        };
        do {
          if (report.counts.find(probe) == report.counts.end()) report.violations.push_back({probe, 0});
        } while (advance());
        std::sort(report.violations.begin(), report.violations.end(),
                  [](const CellViolation& a, const CellViolation& b) { return a.cell < b.cell; });
      } else {
        report.missing_cells = missing;
      }
    }
  }
  return report;
}

struct StratificationCheck {
  bool pass = false;
  std::optional<CellCountReport> first_failure;
};

// Runs the full audit implied by the design's provenance: every column
// subset u with |u| <= h at grain n must hold exactly lambda * n^(h-|u|)
// points per cell, and a U design must additionally be Latin at grain N
// in every single column.  Failure is a result, not an error.
inline StratificationCheck assert_oa_stratification(const Design& design, const AuditOptions& opt = {}) {
  if (design.kind != DesignKind::randomized_oa && design.kind != DesignKind::u_design)
    throw std::invalid_argument("assert_oa_stratification: design must come from an orthogonal array");
  if (!design.source)
    throw std::invalid_argument("assert_oa_stratification: design lacks its source orthogonal array");

  const OrthogonalArray& oa = *design.source;
  StratificationCheck check;
  check.pass = true;

  for (const auto& u : subsets_up_to(oa.factors, oa.strength)) {
    const auto report = audit_cells(design, u, oa.levels, opt);
    if (!report.uniform) {
      check.pass = false;
      check.first_failure = report;
      return check;
    }
  }
  if (design.kind == DesignKind::u_design) {
    for (int k = 0; k < design.dims; ++k) {
      const int cols[1] = {k};
      const auto report = audit_cells(design, cols, design.runs, opt);
      if (!report.uniform) {
        check.pass = false;
        check.first_failure = report;
        return check;
      }
    }
  }
  return check;
}

}  // namespace oasf
