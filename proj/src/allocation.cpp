#include "alloclab/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "alloclab/conditional.hpp"
#include "alloclab/risk.hpp"
#include "alloclab/rng.hpp"

namespace alloclab {

namespace {

double sum_tolerance(double K) { return 1e-9 * std::max(1.0, std::abs(K)); }

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::Euler: return "euler";
    case Method::MLA: return "mla";
    case Method::Comonotone: return "comonotone";
    case Method::Adjusted: return "adjusted";
    case Method::Baseline: return "baseline";
  }
  return "unknown";
}

Allocation euler_allocation(const Samples& conditional, double K, const Eigen::VectorXd* ess) {
  const auto n = conditional.rows();
  const auto d = conditional.cols();
  if (n < 30) throw SampleSizeError("Euler allocation needs at least 30 conditional samples");
  if (ess && ess->size() != d) throw ShapeError("ESS vector has wrong length");
  Eigen::VectorXd mean = conditional.colwise().mean().transpose();
  double excess = (sequential_sum(mean) - K) / static_cast<double>(d);
  Eigen::VectorXd a = mean.array() - excess;
  close_sum(a, K);
  Eigen::VectorXd se(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double var = (conditional.col(j).array() - mean(j)).square().sum() / static_cast<double>(n - 1);
    double m = ess ? (*ess)(j) : static_cast<double>(n);
    se(j) = std::sqrt(var / m);
  }
  return {a, K, Method::Euler, se, std::abs(excess)};
}

Allocation mla(const ModeSet& modes) {
  if (modes.modes.empty()) throw DegenerateError("no modes found");
  if (!modes.unique_global)
    throw MultimodalityError("conditional density has no unique global mode", modes);
  if (modes.modes.size() > 1)
    throw MultimodalityError("conditional density has several local modes", modes);
  const auto& top = modes.modes.front().location;
  return {top, modes.capital, Method::MLA, Eigen::VectorXd::Zero(top.size()), 0.0};
}

ScenarioSet::ScenarioSet(Samples s, Eigen::VectorXd w, double capital)
    : scenarios(std::move(s)), weights(std::move(w)), K(capital) {
  const auto M = scenarios.rows();
  if (M < 1) throw ShapeError("scenario set is empty");
  if (weights.size() != M) throw ShapeError("one weight per scenario required");
  if ((weights.array() < 0).any() || (weights.array() > 1).any())
    throw ParameterError("scenario weights must lie in [0, 1]");
  if (std::abs(weights.sum() - 1.0) > 1e-12) throw ParameterError("scenario weights must sum to 1");
  for (Eigen::Index m = 0; m < M; ++m) {
    if (std::abs(scenarios.row(m).sum() - K) > sum_tolerance(K))
      throw ParameterError("every scenario must sum to the capital");
    for (Eigen::Index k = 0; k < m; ++k)
      if ((scenarios.row(m) - scenarios.row(k)).norm() <= 1e-9)
        throw ParameterError("scenarios must be pairwise distinct");
  }
}

ScenarioSet scenarios_from_modes(const ModeSet& modes, const JointModel& model) {
  Samples s(modes.modes.size(), model.dim());
  for (std::size_t m = 0; m < modes.modes.size(); ++m) s.row(m) = modes.modes[m].location.transpose();
  return ScenarioSet(std::move(s), scenario_weights(modes, model), modes.capital);
}

AdjustedAllocation multimodality_adjust(const ScenarioSet& sc, const Eigen::MatrixXd& loading,
                                        const std::optional<Allocation>& baseline) {
  const auto M = sc.scenarios.rows();
  const auto d = sc.scenarios.cols();
  if (loading.rows() != d || loading.cols() != M) throw ShapeError("loading matrix must be d x M");
  if ((loading.array() < 0).any()) throw ParameterError("loading parameters must be nonnegative");
  Eigen::VectorXd kbar = Eigen::VectorXd::Zero(d);
  for (Eigen::Index m = 0; m < M; ++m) kbar += sc.weights(m) * sc.scenarios.row(m).transpose();
  // A coordinate on which every scenario agrees keeps that value bit-exactly.
  for (Eigen::Index j = 0; j < d; ++j)
    if ((sc.scenarios.col(j).array() == sc.scenarios(0, j)).all()) kbar(j) = sc.scenarios(0, j);
  Allocation base{kbar, sc.K, Method::Baseline, Eigen::VectorXd::Zero(d), 0.0};
  if (baseline) {
    if (baseline->capital.size() != d) throw ShapeError("baseline has wrong dimension");
    if (std::abs(baseline->capital.sum() - sc.K) > sum_tolerance(sc.K))
      throw ParameterError("baseline must sum to the capital");
    base = *baseline;
  }
  Eigen::VectorXd adj = Eigen::VectorXd::Zero(d);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index j = 0; j < d; ++j) {
      double up = sc.scenarios(m, j) - base.capital(j);
      if (up > 0 && loading(j, m) > 0) adj(j) += sc.weights(m) * loading(j, m) * up;
    }
  Eigen::VectorXd total = base.capital + adj;
  return {base, adj, total};
}

Allocation estimate_mla(const JointModel& model, double K, const PipelineConfig& cfg) {
  SlabConfig slab = cfg.slab;
  if (!(slab.delta > 0)) slab.delta = 0.01 * std::abs(K);
  auto draws = slab_sample(model, K, slab, cfg.seed);
  ConditionalTarget target(model, K);
  auto modes = mean_shift_modes(free_coordinates(draws.rows), &target, cfg.mean_shift);
  return mla(modes);
}

Allocation mla_with_constants(int d, const std::optional<JointModel>& free_model,
                              const std::vector<std::pair<int, double>>& constants, double K,
                              const PipelineConfig& cfg) {
  std::vector<bool> fixed(d, false);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
  double rest = K;
  for (const auto& [j, c] : constants) {
    if (j < 0 || j >= d || fixed[j]) throw ShapeError("constant index out of range or repeated");
    fixed[j] = true;
    a(j) = c;
    rest -= c;
  }
  std::vector<int> free;
  for (int j = 0; j < d; ++j)
    if (!fixed[j]) free.push_back(j);
  if (free.empty()) {
    if (std::abs(rest) > sum_tolerance(K)) throw RangeError("constants do not sum to the capital");
    return {a, K, Method::MLA, Eigen::VectorXd::Zero(d), 0.0};
  }
  if (free.size() == 1) {
    a(free[0]) = rest;
    return {a, K, Method::MLA, Eigen::VectorXd::Zero(d), 0.0};
  }
  if (!free_model || free_model->dim() != static_cast<int>(free.size()))
    throw ShapeError("free-coordinate model dimension differs from the number of free coordinates");
  Allocation reduced = estimate_mla(*free_model, rest, cfg);
  for (std::size_t k = 0; k < free.size(); ++k) a(free[k]) = reduced.capital(k);
  return {a, K, Method::MLA, Eigen::VectorXd::Zero(d), 0.0};
}

CoreResult core_polytope(const JointModel& model, double p, std::size_t n_cal, std::uint64_t seed) {
  if (!(p > 0 && p < 1)) throw RangeError("core level must lie in (0, 1)");
  if (static_cast<double>(n_cal) * (1.0 - p) < 10.0 - 1e-9)
    throw SampleSizeError("calibration sample too small for this level");
  const int d = model.dim();
  if (d > 20) throw ParameterError("coalition enumeration limited to d <= 20");
  Samples x = model.sample(n_cal, seed);
  std::vector<std::pair<std::vector<int>, double>> bounds;
  std::vector<double> col(n_cal);
  double K = 0.0;
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    std::vector<int> lambda(d);
    for (int j = 0; j < d; ++j) lambda[j] = (mask >> j) & 1u;
    for (std::size_t i = 0; i < n_cal; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j)
        if (lambda[j]) s += x(i, j);
      col[i] = s;
    }
    double r = empirical_var(col, p);
    if (mask == (1u << d) - 1) K = r;
    bounds.emplace_back(std::move(lambda), r);
  }
  Polytope poly(d, K, bounds);
  Eigen::VectorXd start = Eigen::VectorXd::Constant(d - 1, K / d);
  poly.interior_point(start);
  return {std::move(poly), K, std::move(bounds)};
}

Eigen::VectorXd bootstrap_se(const Samples& data, const Estimator& estimator, std::size_t B, std::uint64_t seed) {
  if (B < 50) throw ParameterError("bootstrap needs B >= 50");
  const auto n = data.rows();
  if (n < 1) throw DataError("bootstrap needs data");
  std::vector<Eigen::VectorXd> reps;
  std::size_t failed = 0;
  Samples resample(n, data.cols());
  for (std::size_t b = 0; b < B; ++b) {
    Rng rng = make_rng(seed, b);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (Eigen::Index i = 0; i < n; ++i) resample.row(i) = data.row(pick(rng));
    try {
      reps.push_back(estimator(resample, split_seed(seed, B + b)));
    } catch (const Error&) {
      ++failed;
    }
  }
  if (failed * 10 > B) throw InstabilityError("estimator failed on more than 10% of bootstrap replicates");
  const auto k = reps.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (const auto& r : reps) mean += r;
  mean /= static_cast<double>(reps.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(k);
  for (const auto& r : reps) var.array() += (r - mean).array().square();
  return (var / static_cast<double>(reps.size() - 1)).cwiseSqrt();
}

}  // namespace alloclab
