#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "alloclab/conditional.hpp"
#include "alloclab/joint_model.hpp"

namespace alloclab {

struct MeanShiftConfig {
  /// Kernel covariance; empty selects the default rule.
  Eigen::MatrixXd bandwidth;
  /// Multiplies the default kernel standard deviation.
  double bandwidth_scale = 1.5;
  double tolerance = 1e-6;
  int max_iterations = 500;
  /// Empty selects 0.25 sqrt(lambda_min(H)).
  std::optional<double> merge_radius;
  /// Modes whose basin holds fewer samples are folded into the nearest kept mode.
  double min_basin_fraction = 0.05;
};

struct Mode {
  Eigen::VectorXd location;  // lifted to R^d
  double log_density;
  std::size_t basin;
};

struct ModeSet {
  std::vector<Mode> modes;
  double capital = 0.0;
  bool unique_global = false;
  /// Ranking used the exact target density (false: kernel estimate).
  bool exact_density = true;
  std::size_t unconverged = 0;
  bool convergence_warning = false;
  std::size_t discarded_modes = 0;
  std::size_t discarded_samples = 0;
};

/// Normal-reference kernel covariance c^2 n^{-2/(d'+4)} S, c = (4/(d'+2))^{1/(d'+4)}.
Eigen::MatrixXd default_bandwidth(const Samples& free);

/// Gaussian-kernel mean shift from every sample; target may be null for density-free models,
/// in which case `capital` (if given) lifts the modes.
ModeSet mean_shift_modes(const Samples& free, const ConditionalTarget* target, const MeanShiftConfig& cfg,
                         std::optional<double> capital = std::nullopt);

/// Log of the Gaussian kernel density estimate with kernel covariance H.
double kernel_log_density(const Samples& free, const Eigen::MatrixXd& H, const Eigen::VectorXd& x);

/// w_m proportional to f_X(K_m); the last weight is set by subtraction.
Eigen::VectorXd scenario_weights(const ModeSet& modes, const JointModel& model);

}  // namespace alloclab
