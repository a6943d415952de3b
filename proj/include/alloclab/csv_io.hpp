#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "alloclab/elliptical.hpp"
#include "alloclab/joint_model.hpp"

namespace alloclab {

struct IngestOptions {
  /// Header names or 0-based indices; empty takes every column.
  std::vector<std::string> columns;
  /// Columns (same naming) whose sign is flipped after selection.
  std::vector<std::string> flip;
  /// Resample rows with replacement to this many rows.
  std::optional<std::size_t> resample;
  std::uint64_t seed = 1;
};

struct IngestResult {
  Samples data;
  std::vector<std::string> names;
  std::size_t rows_read = 0;
  std::size_t dropped = 0;
};

/// Reads a header-led CSV file of losses. Empty cells or NA drop the row; other non-numeric cells throw.
IngestResult ingest_csv(const std::filesystem::path& path, const IngestOptions& options);

/// Empirical margins with a row-resampling copula on the pseudo-observations.
JointModel empirical_model(const Samples& data);

void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Samples& rows);

enum class PlotKind { Scatter, LevelSet, ChainTrace };

PlotKind plot_kind(const std::string& name);

/// Writes the CSV behind one report artifact and returns the written path.
std::filesystem::path export_plotdata(const std::filesystem::path& report, PlotKind kind,
                                      const std::filesystem::path& out);

}  // namespace alloclab
