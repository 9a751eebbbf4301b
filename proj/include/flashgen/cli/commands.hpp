#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flashgen/cli/config.hpp"
#include "flashgen/core/dataset.hpp"
#include "flashgen/core/grid.hpp"
#include "flashgen/eval/report.hpp"
#include "flashgen/model/checkpoint.hpp"
#include "flashgen/model/model.hpp"
#include "flashgen/rng/philox.hpp"
#include "flashgen/sim/channel.hpp"
#include "flashgen/sim/params_io.hpp"
#include "flashgen/stats/fit.hpp"
#include "flashgen/stats/fit_report.hpp"

namespace flashgen::cli {

// The training/generation scalar of the command-line pipeline. Checkpoints
// store parameters in binary32, so this round-trips exactly.
using PipelineModel = model::GenerativeModel<float>;

struct CommandOptions {
  std::string config_path;
  std::string out_override;                  // empty = use config / default
  std::optional<std::uint64_t> seed_override;
  bool quiet = false;
};

namespace detail {

// Writes bytes then reads them back; a command only exits 0 when every
// declared output exists on disk with exactly the intended content.
inline void write_file_validated(const std::filesystem::path& path, const std::string& bytes) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  std::ostringstream read_back;
  read_back << in.rdbuf();
  if (!in || read_back.str() != bytes)
    throw std::runtime_error("output validation failed: " + path.string());
}

struct Run {
  RunConfig config;
  std::filesystem::path out_dir;
  bool quiet = false;

  std::filesystem::path out(const std::string& name) const { return out_dir / name; }

  void finish_config() {
    config.reject_unconsumed();
    write_file_validated(out("resolved-config.txt"), config.resolved_text());
  }
};

inline Run open_run(const CommandOptions& opts) {
  Run run;
  run.config = RunConfig::from_file(opts.config_path);
  if (!opts.out_override.empty()) run.config.override_value("out", opts.out_override);
  if (opts.seed_override) run.config.override_value("seed", std::to_string(*opts.seed_override));
  run.quiet = opts.quiet;
  run.out_dir = run.config.get_or("out", ".");
  std::filesystem::create_directories(run.out_dir);
  return run;
}

inline std::string serialized_dataset(const std::vector<ChannelRecord>& records) {
  std::ostringstream os(std::ios::binary);
  serialize_dataset(records, os);
  return os.str();
}

inline std::vector<PECycle> dataset_stamps_check(const std::vector<ChannelRecord>& records,
                                                 const std::string& what) {
  if (records.empty()) throw std::runtime_error(what + ": dataset is empty");
  std::vector<PECycle> seen;
  for (const auto& r : records)
    if (std::find(seen.begin(), seen.end(), r.pe) == seen.end()) seen.push_back(r.pe);
  return seen;
}

inline ThresholdSet thresholds_from_config(RunConfig& config) {
  if (config.has("thresholds")) {
    std::istringstream is(config.require("thresholds"));
    ThresholdSet th;
    for (int k = 0; k + 1 < kNumLevels; ++k) {
      int bin = 0;
      if (!(is >> bin)) throw config_error("'thresholds' needs 7 ascending bins");
      th.thresholds[static_cast<std::size_t>(k)] = VoltageLevel(bin);
    }
    int extra = 0;
    if (is >> extra) throw config_error("'thresholds' needs exactly 7 bins");
    th.validate();
    return th;
  }
  return default_thresholds(load_channel_params(config.require("params")));
}

}  // namespace detail

// Programs pseudo-random blocks, reads them through the parametric channel
// at each stamp, crops to the model tile, and writes one FLSHDS1 dataset.
inline void cmd_simulate(const CommandOptions& opts) {
  detail::Run run = detail::open_run(opts);
  const ChannelParams params = load_channel_params(run.config.require("params"));
  const std::vector<PECycle> stamps = run.config.require_stamps();
  const std::uint64_t seed = run.config.require_u64("seed");
  const long long grids = run.config.get_int_or("grids", 2000);
  const long long rows = run.config.get_int_or("block_rows", kTileSize);
  const long long cols = run.config.get_int_or("block_cols", kTileSize);
  const std::string dataset_name = run.config.get_or("dataset", "dataset.flshds");
  if (grids < 1) throw config_error("'grids' must be positive");
  if (rows < kTileSize || cols < kTileSize)
    throw config_error("block dimensions must be at least the tile size");
  run.finish_config();

  std::vector<ChannelRecord> records;
  for (const PECycle pe : stamps) {
    const std::size_t before = records.size();
    for (long long i = 0; i < grids; ++i) {
      const std::uint64_t s = rng::derive_seed(seed, pe.count, static_cast<std::uint64_t>(i));
      const ProgramGrid block = program_pseudorandom(s, static_cast<int>(rows),
                                                     static_cast<int>(cols));
      const VoltageGrid read = simulate_read(block, pe, params, s);
      auto pl_tiles = crop_blocks(block, kTileSize);
      auto vl_tiles = crop_blocks(read, kTileSize);
      for (std::size_t t = 0; t < pl_tiles.size(); ++t)
        records.push_back({std::move(pl_tiles[t]), std::move(vl_tiles[t]), pe});
    }
    if (!run.quiet)
      std::cout << "pe " << pe.count << ": " << records.size() - before << " records\n";
  }
  detail::write_file_validated(run.out(dataset_name), detail::serialized_dataset(records));
  if (!run.quiet)
    std::cout << "wrote " << records.size() << " records to "
              << run.out(dataset_name).string() << "\n";
}

// Fits all three distribution families to every (stamp, level 1-7)
// conditional histogram of a dataset and writes the fit report.
inline void cmd_fit(const CommandOptions& opts) {
  detail::Run run = detail::open_run(opts);
  const std::string dataset_path = run.config.require("dataset");
  const std::vector<PECycle> stamps = run.config.require_stamps();
  const std::string report_name = run.config.get_or("report", "fit-report.txt");
  run.finish_config();

  const std::vector<ChannelRecord> records = load_dataset(dataset_path);
  detail::dataset_stamps_check(records, "fit");

  static constexpr FitFamily kFamilies[] = {FitFamily::gaussian, FitFamily::normal_laplace,
                                            FitFamily::student_t};
  std::vector<FitReportRow> rows;
  for (const PECycle pe : stamps) {
    bool any = false;
    for (const auto& r : records) any = any || r.pe == pe;
    if (!any)
      throw std::runtime_error("fit: dataset has no records at pe " + std::to_string(pe.count));
    for (int level = 1; level < kNumLevels; ++level) {
      const Histogram h = estimate_pdf(records, ProgramLevel(level), pe);
      for (const FitFamily family : kFamilies) {
        FitReportRow row;
        row.pe = pe;
        row.level = level;
        row.family = family;
        try {
          row.result = fit_level_distribution(h, family);
        } catch (const fit_error&) {
          row.status = "degenerate";
        }
        rows.push_back(std::move(row));
      }
    }
    if (!run.quiet) std::cout << "pe " << pe.count << ": fitted 7 levels x 3 families\n";
  }
  std::ostringstream os;
  write_fit_report(os, rows);
  detail::write_file_validated(run.out(report_name), os.str());
  if (!run.quiet)
    std::cout << "wrote " << rows.size() << " fit rows to " << run.out(report_name).string()
              << "\n";
}

// Trains the conditional generative model (or resumes a checkpoint) and
// writes the final checkpoint plus a per-epoch loss log. When resuming, the
// hyperparameters embedded in the checkpoint govern; the config supplies only
// the additional epoch budget.
inline void cmd_train(const CommandOptions& opts) {
  detail::Run run = detail::open_run(opts);
  const std::string dataset_path = run.config.require("dataset");
  const std::string checkpoint_name = run.config.get_or("checkpoint", "model.flshckp");
  const std::string log_name = run.config.get_or("loss_log", "loss-log.txt");

  std::unique_ptr<PipelineModel> model;
  if (run.config.has("resume")) {
    const std::string resume_path = run.config.require("resume");
    const long long epochs = run.config.get_int_or("epochs", 0);
    run.finish_config();
    model = model::load_checkpoint<float>(resume_path);
    model->set_epochs(static_cast<int>(epochs));
  } else {
    model::TrainConfig tc;
    tc.seed = run.config.require_u64("seed");
    tc.alpha = run.config.get_double_or("alpha", tc.alpha);
    tc.beta = run.config.get_double_or("beta", tc.beta);
    tc.lr = run.config.get_double_or("lr", tc.lr);
    tc.epochs = static_cast<int>(run.config.get_int_or("epochs", tc.epochs));
    tc.batch = static_cast<int>(run.config.get_int_or("batch", tc.batch));
    tc.pe_max = PECycle(static_cast<std::uint32_t>(
        run.config.get_int_or("pe_max", tc.pe_max.count)));
    tc.width_scale = run.config.get_double_or("width_scale", 0.25);
    run.finish_config();
    model = std::make_unique<PipelineModel>(tc, kTileSize);
  }

  const std::vector<ChannelRecord> records = load_dataset(dataset_path);
  detail::dataset_stamps_check(records, "train");

  const auto log = model->train(records, [&](const model::EpochLog& el) {
    if (!run.quiet)
      std::cout << "epoch " << el.epoch << ": steps " << el.steps << " total "
                << flashgen::detail::fmt17(el.mean_total) << " recon " << flashgen::detail::fmt17(el.mean_recon)
                << " kl " << flashgen::detail::fmt17(el.mean_kl) << " g " << flashgen::detail::fmt17(el.mean_g)
                << " d " << flashgen::detail::fmt17(el.mean_d) << "\n";
  });

  std::ostringstream log_os;
  log_os << "# epoch steps mean_total mean_recon mean_kl mean_g mean_d\n";
  for (const auto& el : log)
    log_os << el.epoch << " " << el.steps << " " << flashgen::detail::fmt17(el.mean_total) << " "
           << flashgen::detail::fmt17(el.mean_recon) << " " << flashgen::detail::fmt17(el.mean_kl) << " "
           << flashgen::detail::fmt17(el.mean_g) << " " << flashgen::detail::fmt17(el.mean_d) << "\n";
  detail::write_file_validated(run.out(log_name), log_os.str());

  std::ostringstream ck(std::ios::binary);
  model::serialize_checkpoint(*model, ck);
  detail::write_file_validated(run.out(checkpoint_name), ck.str());
  if (!run.quiet)
    std::cout << "wrote checkpoint after " << model->step_count() << " steps to "
              << run.out(checkpoint_name).string() << "\n";
}

// Draws latent samples through a trained generator over fresh pseudo-random
// program grids at each stamp and writes the generated dataset.
inline void cmd_generate(const CommandOptions& opts) {
  detail::Run run = detail::open_run(opts);
  const std::string checkpoint_path = run.config.require("checkpoint");
  const std::vector<PECycle> stamps = run.config.require_stamps();
  const std::uint64_t seed = run.config.require_u64("seed");
  const long long grids = run.config.get_int_or("grids", 700);
  const long long samples = run.config.get_int_or("samples", 10);
  const std::string dataset_name = run.config.get_or("dataset", "generated.flshds");
  if (grids < 1 || samples < 1) throw config_error("'grids' and 'samples' must be positive");
  run.finish_config();

  std::unique_ptr<PipelineModel> model = model::load_checkpoint<float>(checkpoint_path);
  std::vector<ChannelRecord> records;
  records.reserve(static_cast<std::size_t>(grids) * stamps.size() *
                  static_cast<std::size_t>(samples));
  for (long long i = 0; i < grids; ++i) {
    const ProgramGrid pl = program_pseudorandom(
        rng::derive_seed(seed, static_cast<std::uint64_t>(i)), kTileSize, kTileSize);
    for (const PECycle pe : stamps) {
      const std::uint64_t zs = rng::derive_seed(seed, pe.count, static_cast<std::uint64_t>(i));
      auto reads = model->sample_voltages(pl, pe, static_cast<int>(samples), zs);
      for (auto& vl : reads) records.push_back({pl, std::move(vl), pe});
    }
  }
  if (!run.quiet)
    for (const PECycle pe : stamps)
      std::cout << "pe " << pe.count << ": " << grids * samples << " records\n";
  detail::write_file_validated(run.out(dataset_name), detail::serialized_dataset(records));
  if (!run.quiet)
    std::cout << "wrote " << records.size() << " records to "
              << run.out(dataset_name).string() << "\n";
}

// Builds the oracle/generated/fitted comparison document and its plot data.
inline void cmd_evaluate(const CommandOptions& opts) {
  detail::Run run = detail::open_run(opts);
  const std::string oracle_path = run.config.require("oracle");
  const std::string generated_path = run.config.require("generated");
  const std::string fit_path = run.config.require("fit_report");
  const std::vector<PECycle> stamps = run.config.require_stamps();
  const ThresholdSet th = detail::thresholds_from_config(run.config);
  const std::string report_name = run.config.get_or("report", "report.txt");
  run.finish_config();

  const std::vector<ChannelRecord> oracle = load_dataset(oracle_path);
  const std::vector<ChannelRecord> generated = load_dataset(generated_path);
  const std::vector<FitReportRow> fits = load_fit_report(fit_path);

  const ComparisonReport rep = build_report(oracle, generated, fits, th, stamps);

  std::ostringstream os;
  write_report_text(os, rep);
  detail::write_file_validated(run.out(report_name), os.str());
  for (const auto& [name, content] : report_plot_files(rep))
    detail::write_file_validated(run.out(name), content);

  if (!run.quiet) {
    std::cout << "d_TV max (generated vs oracle): " << flashgen::detail::fmt17(rep.max_generated_dtv())
              << "\n";
    const double ref = rep.normalization_reference;
    for (std::size_t s = 0; s < rep.stamps.size(); ++s) {
      const double gen_total = static_cast<double>(rep.generated_errors[s].total());
      std::cout << "pe " << rep.stamps[s].count
                << ": generated stacked errors " << flashgen::detail::fmt17(gen_total / ref)
                << "x reference\n";
    }
    std::cout << "wrote " << run.out(report_name).string() << "\n";
  }
}

// Dispatch by subcommand name; exceptions become stderr diagnostics and a
// non-zero exit status.
inline int run_command(const std::string& name, const CommandOptions& opts) {
  try {
    if (name == "simulate")
      cmd_simulate(opts);
    else if (name == "fit")
      cmd_fit(opts);
    else if (name == "train")
      cmd_train(opts);
    else if (name == "generate")
      cmd_generate(opts);
    else if (name == "evaluate")
      cmd_evaluate(opts);
    else
      throw std::runtime_error("unknown command: " + name);
  } catch (const std::exception& e) {
    std::cerr << "flashgen " << name << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace flashgen::cli
