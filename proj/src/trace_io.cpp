#include "adaptlqr/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "adaptlqr/family_json.hpp"

namespace adaptlqr {

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trace_csv(std::ostream& out, const SimTrace& tr, const PlantInstance& plant) {
  const nlohmann::json plant_doc{{"A", mat_to_json(plant.a)}, {"B", mat_to_json(plant.b)}};
  out << "# seed=" << tr.seed << '\n'
      << "# trajectory=" << tr.trajectory << '\n'
      << "# strategy=" << tr.strategy << '\n'
      << "# horizon=" << tr.horizon << '\n'
      << "# trace_x=" << fmt17(tr.trace_x) << '\n'
      << "# failed=" << (tr.failed ? 1 : 0) << '\n'
      << "# plant=" << plant_doc.dump() << '\n';
  if (tr.failed) out << "# failure=" << tr.failure << " (step " << tr.failed_at << ")\n";

  out << "k,running_cost,gain_error";
  for (const auto& l : tr.estimate_labels) out << ',' << l;
  out << ",moment4";
  for (std::size_t i = 0; i < tr.gain_violations.size(); ++i) out << ",viol_s" << i + 1;
  for (std::size_t i = 0; i < tr.wdelta_visits.size(); ++i) out << ",wdelta_s" << i + 1;
  out << '\n';
  for (std::size_t r = 0; r < tr.k.size(); ++r) {
    out << tr.k[r] << ',' << fmt17(tr.running_cost[r]) << ',' << fmt17(tr.gain_error[r]);
    for (const auto& col : tr.estimate_errors) out << ',' << fmt17(col[r]);
    out << ',' << fmt17(tr.moment4[r]);
    for (const auto& col : tr.gain_violations) out << ',' << col[r];
    for (const auto& col : tr.wdelta_visits) out << ',' << col[r];
    out << '\n';
  }
}

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::IoError, "trace csv: " + msg); }

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') bad("bad number '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0') bad("bad integer '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

SimTrace read_trace_csv(std::istream& in) {
  SimTrace tr;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "seed") tr.seed = parse_u64(value);
      else if (key == "trajectory") tr.trajectory = parse_u64(value);
      else if (key == "strategy") tr.strategy = value;
      else if (key == "horizon") tr.horizon = parse_u64(value);
      else if (key == "trace_x") tr.trace_x = parse_double(value);
      else if (key == "failed") tr.failed = value == "1";
      else if (key == "failure") tr.failure = value;
      continue;
    }
    header = split(line);
    break;
  }
  if (header.size() < 4 || header[0] != "k" || header[1] != "running_cost" || header[2] != "gain_error")
    bad("missing header row");

  enum class Col { K, Cost, GainErr, Est, Moment, Viol, WDelta };
  std::vector<Col> kinds;
  std::vector<std::size_t> slot;
  for (const std::string& h : header) {
    if (h == "k") kinds.push_back(Col::K), slot.push_back(0);
    else if (h == "running_cost") kinds.push_back(Col::Cost), slot.push_back(0);
    else if (h == "gain_error") kinds.push_back(Col::GainErr), slot.push_back(0);
    else if (h == "moment4") kinds.push_back(Col::Moment), slot.push_back(0);
    else if (h.rfind("err_", 0) == 0) {
      kinds.push_back(Col::Est);
      slot.push_back(tr.estimate_labels.size());
      tr.estimate_labels.push_back(h);
    } else if (h.rfind("viol_s", 0) == 0) {
      kinds.push_back(Col::Viol);
      slot.push_back(tr.gain_violations.size());
      tr.gain_violations.emplace_back();
    } else if (h.rfind("wdelta_s", 0) == 0) {
      kinds.push_back(Col::WDelta);
      slot.push_back(tr.wdelta_visits.size());
      tr.wdelta_visits.emplace_back();
    } else {
      bad("unknown column '" + h + "'");
    }
  }
  tr.estimate_errors.assign(tr.estimate_labels.size(), {});

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != kinds.size()) bad("row has " + std::to_string(cells.size()) + " cells");
    for (std::size_t c = 0; c < cells.size(); ++c) {
      switch (kinds[c]) {
        case Col::K: tr.k.push_back(parse_u64(cells[c])); break;
        case Col::Cost: tr.running_cost.push_back(parse_double(cells[c])); break;
        case Col::GainErr: tr.gain_error.push_back(parse_double(cells[c])); break;
        case Col::Moment: tr.moment4.push_back(parse_double(cells[c])); break;
        case Col::Est: tr.estimate_errors[slot[c]].push_back(parse_double(cells[c])); break;
        case Col::Viol: tr.gain_violations[slot[c]].push_back(parse_u64(cells[c])); break;
        case Col::WDelta: tr.wdelta_visits[slot[c]].push_back(parse_u64(cells[c])); break;
      }
    }
  }
  if (tr.failed) {
    tr.final_cost = std::numeric_limits<double>::infinity();
    tr.tail_cost = std::numeric_limits<double>::infinity();
  } else if (!tr.k.empty()) {
    const SummaryRow s = summarize(tr);
    tr.final_cost = s.final_cost;
    tr.tail_cost = s.tail_cost;
  }
  return tr;
}

SimTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_trace_csv(in);
}

SummaryRow summarize(const SimTrace& tr) {
  SummaryRow row{tr.strategy, tr.seed, tr.trajectory, tr.horizon, 0.0, 0.0, tr.trace_x, tr.failed};
  if (tr.failed || tr.k.empty() || tr.k.back() != tr.horizon) {
    row.failed = true;
    row.final_cost = std::numeric_limits<double>::infinity();
    row.tail_cost = std::numeric_limits<double>::infinity();
    return row;
  }
  row.final_cost = tr.running_cost.back();
  const std::size_t half = tr.horizon / 2;
  const double j_half = half == 0 ? 0.0 : tr.running_cost[tr.index_of(half)];
  row.tail_cost = tail_average(tr.horizon, row.final_cost, j_half);
  return row;
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "strategy,seed,trajectory,horizon,final_cost,tail_cost,trace_x,failed\n";
  for (const SummaryRow& r : rows)
    out << r.strategy << ',' << r.seed << ',' << r.trajectory << ',' << r.horizon << ',' << fmt17(r.final_cost) << ','
        << fmt17(r.tail_cost) << ',' << fmt17(r.trace_x) << ',' << (r.failed ? 1 : 0) << '\n';
}

}  // namespace adaptlqr
