#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alloclab/constructions.hpp"
#include "alloclab/diagnostics.hpp"
#include "alloclab/joint_model.hpp"
#include "alloclab/modes.hpp"

namespace alloclab {

enum class ModelKind { MarginCopula, Elliptical, Empirical, Homothetic };

struct ModelSpec {
  ModelKind kind;
  std::optional<JointModel> joint;
  std::optional<HomotheticModel> homothetic;
  /// Rows read and dropped when the model came from a CSV file.
  std::size_t data_rows = 0;
  std::size_t dropped_rows = 0;

  int dim() const;
};

enum class CapitalKind { Fixed, VarLevel, Core };

struct CapitalSpec {
  CapitalKind kind = CapitalKind::Fixed;
  double value = 0.0;  // K, or the level p
  std::size_t n_cal = 1'000'000;
};

enum class SamplerKind { None, Slab, MH, HMC };

struct SamplerSpec {
  SamplerKind kind = SamplerKind::Slab;
  /// Empty selects 0.01 |K|.
  std::optional<double> delta;
  std::size_t n = 500;
  std::size_t max_attempts = 50'000'000;
  std::size_t length = 10'000;
  /// Empty selects 10% of the length.
  std::optional<std::size_t> burn_in;
  std::size_t thin = 1;
  std::size_t pilot = 200;
  bool independent_proposal = false;
  std::optional<double> step;
  std::optional<int> steps;
};

struct ModesSpec {
  bool enabled = true;
  MeanShiftConfig mean_shift;
  /// Chains are thinned evenly to at most this many points before the mode search.
  std::size_t max_points = 2'000;
};

enum class BaselineKind { Weighted, Euler };

struct AllocationSpec {
  bool euler = true;
  bool mla = true;
  bool adjust = false;
  double loading = 1.0;
  /// Per-scenario loading columns; empty uses the scalar for every entry.
  std::vector<Eigen::VectorXd> loading_columns;
  BaselineKind baseline = BaselineKind::Weighted;
};

struct LevelSetSpec {
  double level;
  std::vector<Axis> axes;
};

struct ExperimentConfig {
  std::string name;
  std::uint64_t seed = 1;
  ModelSpec model;
  CapitalSpec capital;
  SamplerSpec sampler;
  ModesSpec modes;
  AllocationSpec allocation;
  std::optional<LevelSetSpec> levelset;
  std::size_t replications = 1;
  std::size_t bootstrap = 0;
  std::filesystem::path output;
  std::size_t keep_scatter = 500;
  /// SHA-256 of the config text.
  std::string digest;
};

/// Parses a YAML experiment document; relative paths resolve against base_dir.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string sha256_hex(const std::string& data);

}  // namespace alloclab
