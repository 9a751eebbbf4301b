#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "flashgen/core/grid.hpp"
#include "flashgen/core/histogram.hpp"
#include "flashgen/core/types.hpp"
#include "flashgen/eval/metrics.hpp"
#include "flashgen/stats/fit_report.hpp"
#include "flashgen/stats/kl.hpp"

namespace flashgen {

inline constexpr const char* kReportFormatTag = "flashgen-report-1";

struct report_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Everything the comparison document is assembled from, kept numeric so
// callers (tests, the CLI summary line) can read values without re-parsing
// the rendered text. Stamp-indexed vectors follow the order of `stamps`.
struct ComparisonReport {
  std::vector<PECycle> stamps;
  ThresholdSet thresholds;

  // Conditional VL histograms per stamp and level (all 8 levels kept; the
  // pdf/dtv sections render only levels 1-7).
  std::vector<std::array<Histogram, kNumLevels>> oracle_pdf, generated_pdf;

  // Hard-read error tallies per stamp.
  std::vector<LevelErrorTable> oracle_errors, generated_errors;

  // Analytic expected error counts of each fitted family: discretized fitted
  // mass outside the level's threshold interval times the oracle cell count
  // at that (level, stamp). Indexed [family][stamp][level]; ok = fit row
  // present with "ok" status.
  std::array<std::vector<std::array<double, kNumLevels>>, 3> fit_errors{};
  std::array<std::vector<std::array<bool, kNumLevels>>, 3> fit_ok{};

  std::vector<FitReportRow> fits;  // echo of the fit report rows

  // Pattern tables per stamp (level-0 victims).
  std::vector<PatternFrequencyTable> oracle_wl, oracle_bl, generated_wl, generated_bl;

  // d_TV(generated, oracle) per stamp and level; level 0 slot unused (0).
  std::vector<std::array<double, kNumLevels>> dtv;
  // d_TV(oracle @ first stamp, oracle @ last stamp) per level: the spread the
  // conditioning has to beat.
  std::array<double, kNumLevels> dtv_oracle_span{};

  // Oracle level 1-7 error total at the reference (first) stamp; stacked
  // totals are reported as multiples of this count.
  double normalization_reference = 0.0;

  double max_generated_dtv() const {
    double m = 0.0;
    for (const auto& row : dtv)
      for (int l = 1; l < kNumLevels; ++l) m = std::max(m, row[static_cast<std::size_t>(l)]);
    return m;
  }
};

namespace detail {

inline const char* fit_source_name(int family_index) {
  switch (family_index) {
    case 0: return "gaussian";
    case 1: return "normal_laplace";
    case 2: return "student_t";
  }
  throw std::logic_error("bad family index");
}

inline FitFamily fit_family_at(int family_index) {
  switch (family_index) {
    case 0: return FitFamily::gaussian;
    case 1: return FitFamily::normal_laplace;
    case 2: return FitFamily::student_t;
  }
  throw std::logic_error("bad family index");
}

// Fitted density discretized at bin centers, eps-floored and renormalized
// with the same convention the fit objective uses.
inline std::vector<double> fitted_masses(const FitResult& r) {
  std::vector<double> q =
      discretize_pdf([&](double x) { return fit_pdf(r.family, r.params, x); });
  double qsum = 0.0;
  for (double& v : q) {
    if (v < kKlEpsFloor) v = kKlEpsFloor;
    qsum += v;
  }
  for (double& v : q) v /= qsum;
  return q;
}

// Probability a level-k read falls strictly outside [th(k-1), th(k)].
inline double mass_outside(const std::vector<double>& q, const ThresholdSet& th, int level) {
  double m = 0.0;
  if (level > 0)
    for (int b = 0; b < th.between(level - 1).bin; ++b) m += q[static_cast<std::size_t>(b)];
  if (level < kNumLevels - 1)
    for (int b = th.between(level).bin + 1; b < static_cast<int>(q.size()); ++b)
      m += q[static_cast<std::size_t>(b)];
  return m;
}

inline double stacked_total(const LevelErrorTable& t) {
  return static_cast<double>(t.total(1, kNumLevels - 1));
}

// Generated-vs-oracle Spearman rank correlation over the oracle's k most
// frequent patterns; nullopt when either series is constant or the oracle
// table has no errors.
inline std::optional<double> pattern_rank_correlation(const PatternFrequencyTable& oracle,
                                                      const PatternFrequencyTable& generated,
                                                      int k) {
  if (oracle.total_errors == 0 || generated.total_errors == 0) return std::nullopt;
  const auto of = oracle.frequencies();
  const auto gf = generated.frequencies();
  std::array<int, 64> order{};
  for (int i = 0; i < 64; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return of[a] > of[b]; });
  k = std::min(k, 64);
  std::vector<double> a, b;
  for (int i = 0; i < k; ++i) {
    a.push_back(of[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    b.push_back(gf[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  }
  try {
    return spearman(a, b);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

}  // namespace detail

// Assembles every table of the comparison document from the two datasets and
// the fit report. `stamps` fixes the column order; the first stamp is the
// normalization reference. Each stamp must be present in both datasets and
// every (stamp, level 1-7, family) must have a fit row.
inline ComparisonReport build_report(const std::vector<ChannelRecord>& oracle,
                                     const std::vector<ChannelRecord>& generated,
                                     const std::vector<FitReportRow>& fits,
                                     const ThresholdSet& th, const std::vector<PECycle>& stamps) {
  if (stamps.empty()) throw report_error("build_report: no stamps given");
  th.validate();

  ComparisonReport rep;
  rep.stamps = stamps;
  rep.thresholds = th;
  rep.fits = fits;

  const auto tally = [&](const std::vector<ChannelRecord>& records, PECycle pe,
                         std::array<Histogram, kNumLevels>& pdfs, LevelErrorTable& errors,
                         PatternFrequencyTable& wl, PatternFrequencyTable& bl,
                         const char* which) {
    errors.pe = pe;
    wl.direction = Direction::WL;
    bl.direction = Direction::BL;
    bool any = false;
    for (const auto& rec : records) {
      if (rec.pe != pe) continue;
      any = true;
      errors.merge(count_level_errors(rec.pl, rec.vl, th, pe));
      wl.merge(ici_error_frequencies(rec.pl, rec.vl, th, Direction::WL));
      bl.merge(ici_error_frequencies(rec.pl, rec.vl, th, Direction::BL));
    }
    if (!any)
      throw report_error(std::string("build_report: ") + which + " dataset has no records at pe " +
                         std::to_string(pe.count));
    for (int l = 0; l < kNumLevels; ++l)
      pdfs[static_cast<std::size_t>(l)] = estimate_pdf(records, ProgramLevel(l), pe);
  };

  for (const PECycle pe : stamps) {
    rep.oracle_pdf.emplace_back();
    rep.generated_pdf.emplace_back();
    rep.oracle_errors.emplace_back();
    rep.generated_errors.emplace_back();
    rep.oracle_wl.emplace_back();
    rep.oracle_bl.emplace_back();
    rep.generated_wl.emplace_back();
    rep.generated_bl.emplace_back();
    tally(oracle, pe, rep.oracle_pdf.back(), rep.oracle_errors.back(), rep.oracle_wl.back(),
          rep.oracle_bl.back(), "oracle");
    tally(generated, pe, rep.generated_pdf.back(), rep.generated_errors.back(),
          rep.generated_wl.back(), rep.generated_bl.back(), "generated");
  }

  // Fitted-family expected errors.
  for (int f = 0; f < 3; ++f) {
    rep.fit_errors[static_cast<std::size_t>(f)].assign(stamps.size(), {});
    rep.fit_ok[static_cast<std::size_t>(f)].assign(stamps.size(), {});
  }
  for (std::size_t s = 0; s < stamps.size(); ++s) {
    for (int l = 1; l < kNumLevels; ++l) {
      for (int f = 0; f < 3; ++f) {
        const FitFamily fam = detail::fit_family_at(f);
        const FitReportRow* row = nullptr;
        for (const auto& r : fits)
          if (r.pe == stamps[s] && r.level == l && r.family == fam) row = &r;
        if (!row)
          throw report_error("build_report: missing fit row for pe " +
                             std::to_string(stamps[s].count) + " level " + std::to_string(l) +
                             " family " + to_string(fam));
        if (row->status != "ok") continue;
        const auto q = detail::fitted_masses(row->result);
        const double cells = static_cast<double>(
            rep.oracle_errors[s].cells[static_cast<std::size_t>(l)]);
        rep.fit_errors[static_cast<std::size_t>(f)][s][static_cast<std::size_t>(l)] =
            detail::mass_outside(q, th, l) * cells;
        rep.fit_ok[static_cast<std::size_t>(f)][s][static_cast<std::size_t>(l)] = true;
      }
    }
  }

  // d_TV matrix; an empty generated histogram counts as maximally distant.
  rep.dtv.assign(stamps.size(), {});
  for (std::size_t s = 0; s < stamps.size(); ++s) {
    for (int l = 1; l < kNumLevels; ++l) {
      const Histogram& p = rep.oracle_pdf[s][static_cast<std::size_t>(l)];
      const Histogram& q = rep.generated_pdf[s][static_cast<std::size_t>(l)];
      rep.dtv[s][static_cast<std::size_t>(l)] =
          (p.total == 0 || q.total == 0) ? 1.0 : total_variation(p, q);
    }
  }
  for (int l = 1; l < kNumLevels; ++l) {
    const Histogram& first = rep.oracle_pdf.front()[static_cast<std::size_t>(l)];
    const Histogram& last = rep.oracle_pdf.back()[static_cast<std::size_t>(l)];
    rep.dtv_oracle_span[static_cast<std::size_t>(l)] =
        (first.total == 0 || last.total == 0) ? 1.0 : total_variation(first, last);
  }

  rep.normalization_reference = detail::stacked_total(rep.oracle_errors.front());
  if (rep.normalization_reference == 0.0)
    throw report_error("build_report: oracle reference stamp has no level 1-7 errors");
  return rep;
}

// Renders the structured-text document. Sections and field order are fixed
// so reruns are byte-identical and diffable.
inline void write_report_text(std::ostream& out, const ComparisonReport& rep) {
  using detail::fmt17;
  out << "# flashgen comparison report\n";
  out << "format = " << kReportFormatTag << "\n";
  out << "stamps =";
  for (const PECycle pe : rep.stamps) out << " " << pe.count;
  out << "\n";
  out << "reference_stamp = " << rep.stamps.front().count << "\n";
  out << "thresholds =";
  for (int k = 0; k + 1 < kNumLevels; ++k) out << " " << rep.thresholds.between(k).bin;
  out << "\n";

  out << "\n[pdf]\n";
  out << "# pdf_hist <source> <pe> <level> <cells> <plot_file>\n";
  out << "# pdf_fit <family> <pe> <level> <status> <kl> <plot_file>\n";
  for (std::size_t s = 0; s < rep.stamps.size(); ++s) {
    const std::string pe = std::to_string(rep.stamps[s].count);
    for (int l = 1; l < kNumLevels; ++l) {
      const std::string file = "pdf_" + pe + "_l" + std::to_string(l) + ".tsv";
      out << "pdf_hist oracle " << pe << " " << l << " "
          << rep.oracle_pdf[s][static_cast<std::size_t>(l)].total << " " << file << "\n";
      out << "pdf_hist generated " << pe << " " << l << " "
          << rep.generated_pdf[s][static_cast<std::size_t>(l)].total << " " << file << "\n";
      for (int f = 0; f < 3; ++f) {
        const FitFamily fam = detail::fit_family_at(f);
        const FitReportRow* row = nullptr;
        for (const auto& r : rep.fits)
          if (r.pe == rep.stamps[s] && r.level == l && r.family == fam) row = &r;
        out << "pdf_fit " << detail::fit_source_name(f) << " " << pe << " " << l;
        if (row && row->status == "ok")
          out << " ok " << fmt17(row->result.kl);
        else
          out << " degenerate -";
        out << " " << file << "\n";
      }
    }
  }

  out << "\n[errors]\n";
  out << "# errors <source> <pe> <l1> .. <l7> <total> <normalized>\n";
  out << "reference = " << fmt17(rep.normalization_reference) << "\n";
  const auto error_row = [&](const char* source, PECycle pe,
                             const std::array<double, kNumLevels>& counts) {
    out << "errors " << source << " " << pe.count;
    double total = 0.0;
    for (int l = 1; l < kNumLevels; ++l) {
      out << " " << fmt17(counts[static_cast<std::size_t>(l)]);
      total += counts[static_cast<std::size_t>(l)];
    }
    out << " " << fmt17(total) << " " << fmt17(total / rep.normalization_reference) << "\n";
  };
  for (std::size_t s = 0; s < rep.stamps.size(); ++s) {
    std::array<double, kNumLevels> oc{}, gc{};
    for (int l = 0; l < kNumLevels; ++l) {
      oc[static_cast<std::size_t>(l)] =
          static_cast<double>(rep.oracle_errors[s].errors[static_cast<std::size_t>(l)]);
      gc[static_cast<std::size_t>(l)] =
          static_cast<double>(rep.generated_errors[s].errors[static_cast<std::size_t>(l)]);
    }
    error_row("oracle", rep.stamps[s], oc);
    error_row("generated", rep.stamps[s], gc);
    for (int f = 0; f < 3; ++f)
      error_row(detail::fit_source_name(f), rep.stamps[s],
                rep.fit_errors[static_cast<std::size_t>(f)][s]);
  }

  out << "\n[ici]\n";
  out << "# ici <source> <pe> <direction> <total_errors> <argmax> <top9_share> <top23_share>"
      << " <plot_file>\n";
  out << "# ici_spearman <pe> <direction> <k> <rho>  (generated vs oracle, oracle top-k)\n";
  const auto ici_row = [&](const char* source, PECycle pe, const PatternFrequencyTable& t) {
    out << "ici " << source << " " << pe.count << " " << to_string(t.direction) << " "
        << t.total_errors;
    if (t.total_errors == 0) {
      out << " - - -";
    } else {
      out << " " << pattern_digits(t.argmax()) << " " << fmt17(top_pattern_share(t, 9)) << " "
          << fmt17(top_pattern_share(t, 23));
    }
    out << " ici_" << pe.count << ".tsv\n";
  };
  for (std::size_t s = 0; s < rep.stamps.size(); ++s) {
    ici_row("oracle", rep.stamps[s], rep.oracle_wl[s]);
    ici_row("oracle", rep.stamps[s], rep.oracle_bl[s]);
    ici_row("generated", rep.stamps[s], rep.generated_wl[s]);
    ici_row("generated", rep.stamps[s], rep.generated_bl[s]);
  }
  for (std::size_t s = 0; s < rep.stamps.size(); ++s) {
    const auto emit = [&](Direction d, const PatternFrequencyTable& o,
                          const PatternFrequencyTable& g) {
      const auto rho = detail::pattern_rank_correlation(o, g, 9);
      out << "ici_spearman " << rep.stamps[s].count << " " << to_string(d) << " 9 "
          << (rho ? fmt17(*rho) : std::string("-")) << "\n";
    };
    emit(Direction::WL, rep.oracle_wl[s], rep.generated_wl[s]);
    emit(Direction::BL, rep.oracle_bl[s], rep.generated_bl[s]);
  }

  out << "\n[dtv]\n";
  out << "# dtv <pe> <level> <generated_vs_oracle>\n";
  for (std::size_t s = 0; s < rep.stamps.size(); ++s)
    for (int l = 1; l < kNumLevels; ++l)
      out << "dtv " << rep.stamps[s].count << " " << l << " "
          << fmt17(rep.dtv[s][static_cast<std::size_t>(l)]) << "\n";
  out << "# dtv_oracle_span <level> <first_vs_last_stamp>\n";
  for (int l = 1; l < kNumLevels; ++l)
    out << "dtv_oracle_span " << l << " " << fmt17(rep.dtv_oracle_span[static_cast<std::size_t>(l)])
        << "\n";
  out << "dtv_max " << fmt17(rep.max_generated_dtv()) << "\n";
}

// Per-figure plot data, keyed by file name. PDF files: one row per bin with
// normalized oracle/generated frequencies and the three fitted discretized
// masses (0 when that family's fit is degenerate). ICI files: one row per
// (direction, pattern). errors.tsv: one row per (source, stamp, level).
inline std::map<std::string, std::string> report_plot_files(const ComparisonReport& rep) {
  using detail::fmt17;
  std::map<std::string, std::string> files;

  for (std::size_t s = 0; s < rep.stamps.size(); ++s) {
    const std::string pe = std::to_string(rep.stamps[s].count);
    for (int l = 1; l < kNumLevels; ++l) {
      std::array<std::vector<double>, 3> fitted{};
      for (int f = 0; f < 3; ++f) {
        const FitFamily fam = detail::fit_family_at(f);
        for (const auto& r : rep.fits)
          if (r.pe == rep.stamps[s] && r.level == l && r.family == fam && r.status == "ok")
            fitted[static_cast<std::size_t>(f)] = detail::fitted_masses(r.result);
      }
      std::ostringstream os;
      os << "bin\toracle\tgenerated\tgaussian\tnormal_laplace\tstudent_t\n";
      const auto po = rep.oracle_pdf[s][static_cast<std::size_t>(l)].normalized();
      const auto pg = rep.generated_pdf[s][static_cast<std::size_t>(l)].normalized();
      for (int b = 0; b < kVoltageBins; ++b) {
        os << b << "\t" << fmt17(po[static_cast<std::size_t>(b)]) << "\t"
           << fmt17(pg[static_cast<std::size_t>(b)]);
        for (int f = 0; f < 3; ++f) {
          const auto& q = fitted[static_cast<std::size_t>(f)];
          os << "\t" << fmt17(q.empty() ? 0.0 : q[static_cast<std::size_t>(b)]);
        }
        os << "\n";
      }
      files["pdf_" + pe + "_l" + std::to_string(l) + ".tsv"] = os.str();
    }
  }

  for (std::size_t s = 0; s < rep.stamps.size(); ++s) {
    std::ostringstream os;
    os << "direction\tpattern\tdigits\toracle_count\toracle_freq\tgenerated_count"
       << "\tgenerated_freq\n";
    const auto rows = [&](const PatternFrequencyTable& o, const PatternFrequencyTable& g) {
      const auto of = o.frequencies();
      const auto gf = g.frequencies();
      for (int i = 0; i < 64; ++i)
        os << to_string(o.direction) << "\t" << i << "\t" << pattern_digits(i) << "\t"
           << o.counts[static_cast<std::size_t>(i)] << "\t" << fmt17(of[static_cast<std::size_t>(i)])
           << "\t" << g.counts[static_cast<std::size_t>(i)] << "\t"
           << fmt17(gf[static_cast<std::size_t>(i)]) << "\n";
    };
    rows(rep.oracle_wl[s], rep.generated_wl[s]);
    rows(rep.oracle_bl[s], rep.generated_bl[s]);
    files["ici_" + std::to_string(rep.stamps[s].count) + ".tsv"] = os.str();
  }

  {
    std::ostringstream os;
    os << "source\tpe\tlevel\terrors\n";
    for (std::size_t s = 0; s < rep.stamps.size(); ++s) {
      for (int l = 1; l < kNumLevels; ++l)
        os << "oracle\t" << rep.stamps[s].count << "\t" << l << "\t"
           << rep.oracle_errors[s].errors[static_cast<std::size_t>(l)] << "\n";
      for (int l = 1; l < kNumLevels; ++l)
        os << "generated\t" << rep.stamps[s].count << "\t" << l << "\t"
           << rep.generated_errors[s].errors[static_cast<std::size_t>(l)] << "\n";
      for (int f = 0; f < 3; ++f)
        for (int l = 1; l < kNumLevels; ++l)
          os << detail::fit_source_name(f) << "\t" << rep.stamps[s].count << "\t" << l << "\t"
             << fmt17(rep.fit_errors[static_cast<std::size_t>(f)][s][static_cast<std::size_t>(l)])
             << "\n";
    }
    files["errors.tsv"] = os.str();
  }
  return files;
}

}  // namespace flashgen
