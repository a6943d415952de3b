#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alloclab/config.hpp"
#include "alloclab/csv_io.hpp"
#include "alloclab/errors.hpp"
#include "alloclab/experiment.hpp"

namespace fs = std::filesystem;
using namespace alloclab;

namespace {

int cmd_run(const std::string& path, const std::string& out_override) {
  auto cfg = load_config(path);
  if (!out_override.empty()) cfg.output = out_override;
  auto res = run_experiment(cfg);
  write_report(cfg, res);
  for (const auto& n : res.notes) std::cerr << "note: " << n << "\n";
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << (cfg.output / "report.json").string() << "\n";
  return res.exit_code;
}

int cmd_check(const std::string& path) {
  auto cfg = load_config(path);
  std::cout << cfg.name << ": ok (d = " << cfg.model.dim() << ", replications = " << cfg.replications << ")\n";
  return 0;
}

int cmd_ingest(const std::string& path, const std::vector<std::string>& cols, const std::vector<std::string>& flip,
               std::size_t resample, std::uint64_t seed, const std::string& out) {
  IngestOptions opt{cols, flip, std::nullopt, seed};
  if (resample) opt.resample = resample;
  auto res = ingest_csv(path, opt);
  if (res.dropped) std::cerr << "warning: dropped " << res.dropped << " row(s) with missing values\n";
  if (out.empty()) {
    std::cout << res.data.rows() << " rows x " << res.data.cols() << " columns\n";
  } else {
    write_matrix_csv(out, res.names, res.data);
    std::cout << out << "\n";
  }
  return 0;
}

int cmd_export(const std::string& report, const std::string& kind, const std::string& out) {
  auto k = plot_kind(kind);
  fs::path target = out;
  if (target.empty()) target = fs::path(report).parent_path() / (kind + ".csv");
  std::cout << export_plotdata(report, k, target).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alloc-lab: capital allocation given a constant sum"};
  app.require_subcommand(1);

  std::string run_cfg, run_out;
  auto* run = app.add_subcommand("run", "Run an experiment config and write its report");
  run->add_option("config", run_cfg, "experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--out", run_out, "output directory (overrides the config)");

  std::string check_cfg;
  auto* check = app.add_subcommand("check", "Validate a config without running it");
  check->add_option("config", check_cfg, "experiment config")->required()->check(CLI::ExistingFile);

  std::string csv, ingest_out;
  std::vector<std::string> cols, flip;
  std::size_t resample = 0;
  std::uint64_t seed = 1;
  auto* ingest = app.add_subcommand("ingest", "Read a loss CSV and write the selected matrix");
  ingest->add_option("csv", csv, "input file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--cols", cols, "column names or 0-based indices")->delimiter(',');
  ingest->add_option("--flip", flip, "columns to negate")->delimiter(',');
  ingest->add_option("--resample", resample, "resample rows with replacement to this count");
  ingest->add_option("--seed", seed, "seed for resampling");
  ingest->add_option("--out", ingest_out, "output CSV");

  std::string report, kind, export_out;
  auto* exp = app.add_subcommand("export", "Write plot data from a report");
  exp->add_option("report", report, "report.json")->required()->check(CLI::ExistingFile);
  exp->add_option("--kind", kind, "scatter, levelset or chain-trace")->required();
  exp->add_option("--out", export_out, "output CSV");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(run_cfg, run_out);
    if (*check) return cmd_check(check_cfg);
    if (*ingest) return cmd_ingest(csv, cols, flip, resample, seed, ingest_out);
    if (*exp) return cmd_export(report, kind, export_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
