#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flashgen/core/types.hpp"
#include "flashgen/stats/fit.hpp"

namespace flashgen {

inline constexpr const char* kFitReportFormatTag = "flashgen-fit-1";

// One fitted (stamp, level, family) cell of the fit report. status is "ok"
// for a completed fit or "degenerate" when the level's histogram could not
// be fitted; `result` is meaningful only for "ok".
struct FitReportRow {
  PECycle pe;
  int level = 0;
  FitFamily family = FitFamily::gaussian;
  std::string status = "ok";
  FitResult result;
};

inline void write_fit_report(std::ostream& out, const std::vector<FitReportRow>& rows) {
  out << "# flashgen distribution-fit report\n";
  out << "format = " << kFitReportFormatTag << "\n";
  out << "# fit <pe> <level> <family> <status> <kl> <iterations> <max_iter> <eps_floored>"
      << " <param...>\n";
  char buf[40];
  for (const auto& r : rows) {
    out << "fit " << r.pe.count << " " << r.level << " " << to_string(r.family) << " " << r.status;
    if (r.status == "ok") {
      std::snprintf(buf, sizeof buf, "%.17g", r.result.kl);
      out << " " << buf << " " << r.result.iterations << " " << (r.result.max_iter_reached ? 1 : 0)
          << " " << (r.result.eps_floored ? 1 : 0);
      for (const double p : r.result.params) {
        std::snprintf(buf, sizeof buf, "%.17g", p);
        out << " " << buf;
      }
    }
    out << "\n";
  }
}

inline std::vector<FitReportRow> read_fit_report(std::istream& in,
                                                 const std::string& what = "fit report") {
  std::vector<FitReportRow> rows;
  std::string line;
  bool format_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fail = [&](const std::string& msg) {
      throw std::runtime_error(what + ": line " + std::to_string(lineno) + ": " + msg);
    };
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "format") {
      std::string eq, tag;
      ls >> eq >> tag;
      if (eq != "=" || tag != kFitReportFormatTag) fail("unsupported format tag");
      format_seen = true;
      continue;
    }
    if (head != "fit") fail("unexpected line '" + head + "'");
    if (!format_seen) fail("fit row before format tag");

    FitReportRow r;
    unsigned long pe = 0;
    std::string family;
    if (!(ls >> pe >> r.level >> family >> r.status)) fail("short fit row");
    r.pe = PECycle(static_cast<std::uint32_t>(pe));
    r.family = fit_family_from_string(family);
    if (r.level < 0 || r.level >= kNumLevels) fail("level out of range");
    if (r.status == "ok") {
      int max_iter = 0, floored = 0;
      if (!(ls >> r.result.kl >> r.result.iterations >> max_iter >> floored))
        fail("short fit row");
      r.result.family = r.family;
      r.result.max_iter_reached = max_iter != 0;
      r.result.eps_floored = floored != 0;
      double p = 0.0;
      while (ls >> p) r.result.params.push_back(p);
      const std::size_t want = r.family == FitFamily::gaussian        ? 2
                               : r.family == FitFamily::normal_laplace ? 4
                                                                        : 3;
      if (r.result.params.size() != want) fail("wrong parameter count for family");
    } else if (r.status != "degenerate") {
      fail("unknown fit status '" + r.status + "'");
    }
    rows.push_back(std::move(r));
  }
  if (!format_seen) throw std::runtime_error(what + ": missing format tag");
  return rows;
}

inline void save_fit_report(const std::string& path, const std::vector<FitReportRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_fit_report(out, rows);
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

inline std::vector<FitReportRow> load_fit_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return read_fit_report(in, path);
}

}  // namespace flashgen
