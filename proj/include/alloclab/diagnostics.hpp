#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alloclab/conditional.hpp"

namespace alloclab {

using DensityFn = std::function<double(const Eigen::VectorXd&)>;

struct Axis {
  double lower;
  double upper;
  int points;
};

/// Cell-centred grid: axis j has `points` cells of equal width on [lower, upper].
struct GridSpec {
  std::vector<Axis> axes;

  GridSpec(std::vector<Axis> axes);
  int dim() const { return static_cast<int>(axes.size()); }
  std::size_t size() const;
  double width(int j) const { return (axes[j].upper - axes[j].lower) / axes[j].points; }
  double center(int j, int i) const { return axes[j].lower + (i + 0.5) * width(j); }
  Eigen::VectorXd point(std::size_t flat) const;
};

struct LevelSetBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::size_t cells;
};

struct LevelSetResult {
  int components;
  std::vector<LevelSetBox> boxes;
  std::vector<int> label;  // per flat cell, -1 outside the superlevel set
};

/// 4-connected components of {f >= t} on a grid with d' in {1, 2}.
LevelSetResult superlevel_components(const DensityFn& density, double level, const GridSpec& grid);

/// Every grid cell whose centre lies in the convex hull of component `c` belongs to it (d' = 2).
bool component_is_convex(const LevelSetResult& result, int component, const GridSpec& grid);

struct ConcavityResult {
  bool pass;
  double worst_violation;
  std::size_t pairs;
};

/// Generalized mean M_s(a, b; theta); s = -inf is the minimum, s = 0 the geometric mean.
double generalized_mean(double a, double b, double theta, double s);

ConcavityResult s_concavity_check(const DensityFn& density, double s, const GridSpec& grid, std::size_t pairs,
                                  std::uint64_t seed);

enum class Tp2Verdict { MTP2, MRR2, Neither };

std::string verdict_name(Tp2Verdict v);

struct Tp2Result {
  Tp2Verdict verdict;
  double worst_mtp2;  // largest log f(x)+log f(y) - log f(x^y) - log f(xvy)
  double worst_mrr2;  // largest reverse violation
};

/// Exhaustive pairwise check of the MTP2 / MRR2 inequalities on log densities (any dimension).
Tp2Result mtp2_check(const DensityFn& log_density, const GridSpec& grid);

/// TP2 order between two log densities: f(x) g(y) <= f(x^y) g(xvy).
Tp2Result tp2_order_check(const DensityFn& log_f, const DensityFn& log_g, const GridSpec& grid);

struct InheritanceResult {
  Tp2Result joint;        // law of (X', S)
  Tp2Result conditional;  // slice at S = K
  bool consistent;
};

/// Checks that the verdict for the law of (X', S), given as a log density of (x', s), carries over
/// to the slice s = K.
InheritanceResult mtp2_conditional_inheritance(const DensityFn& joint_log_density, double K,
                                               const GridSpec& slice_grid, const GridSpec& joint_grid);

struct MRVReport {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  std::vector<double> ladder;
  std::vector<double> log_ratio;
  bool rapid;
  bool truncated;
  double limit;     // fitted limit of the log ratio (regular case)
  double residual;  // |last - previous| on the ladder
  std::optional<double> predicted;
};

MRVReport mrv_exponent(const ConditionalTarget& target, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const std::vector<double>& ladder);

std::vector<double> default_mrv_ladder();

}  // namespace alloclab
