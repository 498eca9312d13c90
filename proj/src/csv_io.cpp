#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "glmrl/error.hpp"
#include "glmrl/harness.hpp"

namespace glmrl {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& cell, int lineno) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (cell.empty() || end != cell.c_str() + cell.size()) {
    throw ParseError("row " + std::to_string(lineno) + ": '" + cell + "' is not a number");
  }
  return v;
}

int to_int(const std::string& cell, int lineno) {
  const double v = to_double(cell, lineno);
  if (v != std::floor(v)) {
    throw ParseError("row " + std::to_string(lineno) + ": '" + cell + "' is not an integer");
  }
  return static_cast<int>(v);
}

/// Reads the header and returns the data rows with their 1-based line numbers.
std::vector<std::pair<int, std::vector<std::string>>> read_rows(
    std::istream& in, const std::vector<std::string>* expected_header,
    std::vector<std::string>* header_out) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("row 1: missing header");
  auto header = split_row(line);
  if (expected_header && header != *expected_header) throw ParseError("row 1: unexpected header");
  std::vector<std::pair<int, std::vector<std::string>>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_row(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(cells.size()));
    }
    rows.emplace_back(lineno, std::move(cells));
  }
  if (header_out) *header_out = std::move(header);
  return rows;
}

const std::vector<std::string> kSeedHeader{"episode",   "reward",   "cumulative_regret",
                                           "gamma",     "bonus_sum", "solver_converged"};
const std::vector<std::string> kTraceHeader{"episode", "h",      "state",    "alpha",
                                            "action",  "reward", "qbar",     "q_star",
                                            "bonus_sq", "conf",  "solver_converged"};

}  // namespace

void write_seed_csv(std::ostream& out, const RunResult& run) {
  for (std::size_t i = 0; i < kSeedHeader.size(); ++i) out << (i ? "," : "") << kSeedHeader[i];
  out << "\n";
  const auto& cum = run.log.cumulative_regret();
  for (std::size_t t = 0; t < run.trace.size(); ++t) {
    const auto& ep = run.trace[t];
    out << ep.episode << "," << num(run.log.rewards()[t]) << ","
        << num(t < cum.size() ? cum[t] : std::numeric_limits<double>::quiet_NaN()) << ","
        << num(run.metadata.gamma) << "," << num(ep.bonus_sum) << "," << (ep.solver_converged ? 1 : 0)
        << "\n";
  }
}

std::vector<SeedCsvRow> read_seed_csv(std::istream& in) {
  std::vector<SeedCsvRow> out;
  for (const auto& [lineno, c] : read_rows(in, &kSeedHeader, nullptr)) {
    SeedCsvRow r;
    r.episode = to_int(c[0], lineno);
    r.reward = to_double(c[1], lineno);
    r.cumulative_regret = to_double(c[2], lineno);
    r.gamma = to_double(c[3], lineno);
    r.bonus_sum = to_double(c[4], lineno);
    r.solver_converged = to_int(c[5], lineno) != 0;
    out.push_back(r);
  }
  return out;
}

void write_trace_csv(std::ostream& out, const std::vector<EpisodeRecord>& trace) {
  for (std::size_t i = 0; i < kTraceHeader.size(); ++i) out << (i ? "," : "") << kTraceHeader[i];
  out << "\n";
  for (const auto& ep : trace) {
    for (std::size_t h = 0; h < ep.steps.size(); ++h) {
      const auto& st = ep.steps[h];
      out << ep.episode << "," << h << "," << st.state.index << "," << num(st.state.alpha) << ","
          << st.action << "," << num(st.reward) << "," << num(st.qbar) << ","
          << (st.q_star ? num(*st.q_star) : std::string("")) << "," << num(st.bonus_sq) << ","
          << num(st.conf) << "," << (ep.solver_converged ? 1 : 0) << "\n";
    }
  }
}

std::vector<EpisodeRecord> read_trace_csv(std::istream& in) {
  std::vector<EpisodeRecord> out;
  for (const auto& [lineno, c] : read_rows(in, &kTraceHeader, nullptr)) {
    const int episode = to_int(c[0], lineno);
    const int h = to_int(c[1], lineno);
    if (out.empty() || out.back().episode != episode) {
      if (h != 0) throw ParseError("row " + std::to_string(lineno) + ": episode does not start at h = 0");
      out.emplace_back();
      out.back().episode = episode;
    }
    EpisodeRecord& ep = out.back();
    if (h != static_cast<int>(ep.steps.size())) {
      throw ParseError("row " + std::to_string(lineno) + ": steps out of order");
    }
    StepRecord st;
    st.state.index = to_int(c[2], lineno);
    st.state.alpha = to_double(c[3], lineno);
    st.action = to_int(c[4], lineno);
    st.reward = to_double(c[5], lineno);
    st.qbar = to_double(c[6], lineno);
    if (!c[7].empty()) st.q_star = to_double(c[7], lineno);
    st.bonus_sq = to_double(c[8], lineno);
    st.conf = to_double(c[9], lineno);
    ep.solver_converged = to_int(c[10], lineno) != 0;
    ep.reward += st.reward;
    ep.bonus_sum += st.conf;
    ep.steps.push_back(st);
  }
  return out;
}

void write_aggregate_csv(std::ostream& out, const AggregateTable& table) {
  out << "episode";
  for (const auto& s : table.series) out << "," << s.name << "_mean," << s.name << "_std";
  out << "\n";
  for (std::size_t i = 0; i < table.episodes.size(); ++i) {
    out << table.episodes[i];
    for (const auto& s : table.series) out << "," << num(s.mean[i]) << "," << num(s.stddev[i]);
    out << "\n";
  }
}

AggregateTable read_aggregate_csv(std::istream& in) {
  std::vector<std::string> header;
  const auto rows = read_rows(in, nullptr, &header);
  if (header.empty() || header[0] != "episode") throw ParseError("row 1: first column must be 'episode'");
  if (header.size() < 3 || (header.size() - 1) % 2 != 0) {
    throw ParseError("row 1: expected episode followed by <agent>_mean,<agent>_std pairs");
  }
  AggregateTable table;
  for (std::size_t i = 1; i < header.size(); i += 2) {
    const std::string& m = header[i];
    const std::string& s = header[i + 1];
    const auto ends_with = [](const std::string& str, const std::string& suf) {
      return str.size() > suf.size() && str.compare(str.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (!ends_with(m, "_mean") || !ends_with(s, "_std") ||
        m.substr(0, m.size() - 5) != s.substr(0, s.size() - 4)) {
      throw ParseError("row 1: column pair '" + m + "," + s + "' is not <agent>_mean,<agent>_std");
    }
    table.series.push_back({m.substr(0, m.size() - 5), {}, {}});
  }
  for (const auto& [lineno, c] : rows) {
    table.episodes.push_back(to_int(c[0], lineno));
    for (std::size_t k = 0; k < table.series.size(); ++k) {
      table.series[k].mean.push_back(to_double(c[1 + 2 * k], lineno));
      table.series[k].stddev.push_back(to_double(c[2 + 2 * k], lineno));
    }
  }
  return table;
}

}  // namespace glmrl
