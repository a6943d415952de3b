#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alloclab/allocation.hpp"
#include "alloclab/config.hpp"
#include "alloclab/diagnostics.hpp"
#include "alloclab/samplers.hpp"

namespace alloclab {

struct ModeSummary {
  Eigen::VectorXd capital;  // mean over replications with the modal count
  Eigen::VectorXd se;       // sd over those replications
  double weight;            // proportional to f_X at the mean location
  double log_density;
  double basin;  // mean basin sample count
};

struct ExperimentResult {
  double K = 0.0;
  std::optional<CoreResult> core;
  std::size_t replications = 0;
  double acceptance = 0.0;
  std::optional<Allocation> euler;
  std::map<std::size_t, std::size_t> mode_counts;
  std::size_t modal_count = 0;
  std::vector<ModeSummary> modes;
  std::optional<Allocation> mla;
  std::optional<AdjustedAllocation> adjusted;
  std::optional<ChainResult> chain;  // first replication
  std::optional<Eigen::VectorXd> bootstrap_euler_se;
  std::optional<Eigen::VectorXd> bootstrap_mla_se;
  std::optional<LevelSetResult> levelset;
  std::optional<Samples> scatter;  // first replication, full coordinates
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
  int exit_code = 0;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// JSON text of the report; byte-stable for a given config and seed.
std::string report_json(const ExperimentConfig& cfg, const ExperimentResult& result);

/// report.json, allocations.csv (3 decimals) and modes.csv (full precision) under cfg.output.
void write_report(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace alloclab
