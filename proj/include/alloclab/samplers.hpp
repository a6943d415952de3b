#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "alloclab/conditional.hpp"
#include "alloclab/joint_model.hpp"

namespace alloclab {

/// Coalition constraints lambda'x <= r(lambda) restricted to the hyperplane 1'x = K.
class Polytope {
 public:
  struct Constraint {
    std::vector<int> lambda;
    double bound;
    Eigen::VectorXd normal;  // on the free coordinates
    double offset;           // normal' x' <= offset
  };

  Polytope(int d, double K, const std::vector<std::pair<std::vector<int>, double>>& coalitions);
  static Polytope whole_hyperplane(int d, double K) { return Polytope(d, K, {}); }

  int dim() const { return d_; }
  double capital() const { return K_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  bool empty() const { return constraints_.empty(); }

  /// Smallest normalized slack (offset - a'x')/|a|; +inf without constraints.
  double min_slack(const Eigen::VectorXd& xp) const;
  bool contains(const Eigen::VectorXd& xp, double tolerance = 0.0) const;
  bool contains_full(const Eigen::VectorXd& x, double tolerance = 0.0) const;
  std::vector<int> violated(const Eigen::VectorXd& xp) const;
  /// Point with positive slack on every constraint, searched from `start`.
  Eigen::VectorXd interior_point(const Eigen::VectorXd& start) const;

 private:
  int d_;
  double K_;
  std::vector<Constraint> constraints_;
};

struct SlabConfig {
  double delta;
  /// Target number of hits; 0 keeps every hit found within max_attempts draws.
  std::size_t n;
  bool standardize = true;
  std::size_t max_attempts = 50'000'000;
  std::size_t batch = 100'000;
};

struct SlabResult {
  Samples rows;
  double acceptance;
  std::size_t draws;
};

SlabResult slab_sample(const JointModel& model, double K, const SlabConfig& cfg, std::uint64_t seed,
                       const Polytope* core = nullptr);

struct ChainDiagnostics {
  double acceptance;
  Eigen::MatrixXd autocorrelation;  // (max lag + 1) x d'
  Eigen::VectorXd ess;
};

ChainDiagnostics chain_diagnostics(const Samples& chain, int max_lag = 50);

struct RandomWalk {
  Eigen::VectorXd step;
};

struct IndependentUniformSimplex {};

struct MHConfig {
  std::variant<RandomWalk, IndependentUniformSimplex> proposal;
  std::size_t length;
  std::size_t burn_in;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  std::optional<Eigen::VectorXd> initial;
};

struct HMCConfig {
  double step;
  int steps;
  std::size_t length;
  std::size_t burn_in;
  std::uint64_t seed = 0;
  /// Diagonal mass; empty means identity.
  Eigen::VectorXd mass;
  std::optional<Eigen::VectorXd> initial;
  double divergence_threshold = 1000.0;
};

struct ChainResult {
  Samples states;
  ChainDiagnostics diagnostics;
  double move_rate;
  std::size_t divergent = 0;
  /// |Delta H| per trajectory (HMC only).
  std::vector<double> energy_error;
};

ChainResult mh_chain(const ConditionalTarget& target, const MHConfig& cfg);
ChainResult hmc_reflect_chain(const ConditionalTarget& target, const Polytope& polytope, const HMCConfig& cfg);

/// Starting point with finite target density (simplex centroid or a slab draw).
Eigen::VectorXd find_initial_point(const ConditionalTarget& target, std::uint64_t seed);

/// 2.4/sqrt(d') times the pilot standard deviation of each free coordinate.
Eigen::VectorXd random_walk_scale(const Samples& pilot_free);

struct HMCTuning {
  double step;
  int steps;
};

/// eps = 0.4 * mean nearest-neighbour distance, eps * T ~ 1.5 * max pilot sd.
HMCTuning tune_hmc(const Samples& pilot_free);

/// Drops the last column of full-dimensional rows.
Samples free_coordinates(const Samples& full);

/// Appends x_d = K - sum(x') to every row.
Samples lift_rows(const Samples& free, double K);

}  // namespace alloclab
