#pragma once

// SimTrace CSV files and the per-run summary table.
//
// A trace file starts with "# key=value" metadata lines (seed, trajectory,
// strategy, horizon, trace_x, failed, plant), then a header row and one row
// per recorded step:
//   k,running_cost,gain_error,<err_s*_...>,moment4,viol_s<i>...,wdelta_s<i>...
// Reals are printed with 17 significant digits so that they round-trip.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "adaptlqr/plantspace.hpp"
#include "adaptlqr/sim.hpp"

namespace adaptlqr {

/// %.17g, with "inf"/"-inf"/"nan" for non-finite values.
std::string fmt17(double v);

void write_trace_csv(std::ostream& out, const SimTrace& trace, const PlantInstance& plant);
/// Parses a file written by write_trace_csv. Throws IoError on malformed input.
SimTrace read_trace_csv(std::istream& in);
SimTrace read_trace_csv(const std::filesystem::path& path);

struct SummaryRow {
  std::string strategy;
  std::uint64_t seed = 0;
  std::uint64_t trajectory = 0;
  std::size_t horizon = 0;
  double final_cost = 0.0;
  double tail_cost = 0.0;
  double trace_x = 0.0;
  bool failed = false;
};

/// Recomputes final and tail cost from the recorded running-cost rows.
SummaryRow summarize(const SimTrace& trace);

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace adaptlqr
