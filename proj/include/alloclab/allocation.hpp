#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "alloclab/errors.hpp"
#include "alloclab/joint_model.hpp"
#include "alloclab/modes.hpp"
#include "alloclab/samplers.hpp"

namespace alloclab {

enum class Method { Euler, MLA, Comonotone, Adjusted, Baseline };

std::string method_name(Method m);

struct Allocation {
  Eigen::VectorXd capital;
  double K;
  Method method;
  Eigen::VectorXd se;
  /// Size of the uniform correction that restored the full-allocation sum.
  double projection = 0.0;
};

/// Componentwise mean re-projected onto the hyperplane; SE from sd/sqrt(n) or sd/sqrt(ess).
Allocation euler_allocation(const Samples& conditional, double K, const Eigen::VectorXd* ess = nullptr);

class MultimodalityError : public Error {
 public:
  MultimodalityError(const std::string& what, ModeSet modes) : Error(what), modes_(std::move(modes)) {}
  const ModeSet& modes() const { return modes_; }

 private:
  ModeSet modes_;
};

Allocation mla(const ModeSet& modes);

struct ScenarioSet {
  Samples scenarios;  // M x d
  Eigen::VectorXd weights;
  double K;

  ScenarioSet(Samples scenarios, Eigen::VectorXd weights, double K);
  std::size_t size() const { return static_cast<std::size_t>(scenarios.rows()); }
};

ScenarioSet scenarios_from_modes(const ModeSet& modes, const JointModel& model);

struct AdjustedAllocation {
  Allocation baseline;
  Eigen::VectorXd adjustment;
  Eigen::VectorXd total;
};

/// Loading matrix is d x M with nonnegative entries.
AdjustedAllocation multimodality_adjust(const ScenarioSet& scenarios, const Eigen::MatrixXd& loading,
                                        const std::optional<Allocation>& baseline = std::nullopt);

/// Sampling and mode-search settings used when an MLA has to be estimated.
struct PipelineConfig {
  SlabConfig slab{0.0, 500};
  MeanShiftConfig mean_shift;
  std::uint64_t seed = 1;
};

/// MLA of the reduced model on the free coordinates from slab samples and mean shift.
Allocation estimate_mla(const JointModel& model, double K, const PipelineConfig& cfg);

/// Riskless coordinates keep their constants, the rest is allocated by MLA on the reduced model.
/// d is the full dimension; free_model covers the non-constant coordinates in order.
Allocation mla_with_constants(int d, const std::optional<JointModel>& free_model,
                              const std::vector<std::pair<int, double>>& constants, double K,
                              const PipelineConfig& cfg);

struct CoreResult {
  Polytope polytope;
  double K;
  std::vector<std::pair<std::vector<int>, double>> bounds;
};

CoreResult core_polytope(const JointModel& model, double p, std::size_t n_cal, std::uint64_t seed);

using Estimator = std::function<Eigen::VectorXd(const Samples& data, std::uint64_t seed)>;

/// Componentwise SD of the estimator over B row-resamples.
Eigen::VectorXd bootstrap_se(const Samples& data, const Estimator& estimator, std::size_t B, std::uint64_t seed);

}  // namespace alloclab
