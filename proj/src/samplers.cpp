#include "alloclab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "alloclab/errors.hpp"
#include "alloclab/rng.hpp"

namespace alloclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxReflections = 32;

}  // namespace

Polytope::Polytope(int d, double K, const std::vector<std::pair<std::vector<int>, double>>& coalitions)
    : d_(d), K_(K) {
  if (d < 2) throw ParameterError("polytope needs d >= 2");
  const int dp = d - 1;
  for (const auto& [lambda, r] : coalitions) {
    if (static_cast<int>(lambda.size()) != d) throw ShapeError("coalition vector has wrong length");
    Eigen::VectorXd a(dp);
    for (int j = 0; j < dp; ++j) a(j) = lambda[j] - lambda[dp];
    double b = r - lambda[dp] * K;
    if (a.isZero(0.0)) {
      if (b < -1e-12 * (1.0 + std::abs(K)))
        throw FeasibilityError("coalition bound excludes the whole hyperplane", {});
      continue;
    }
    constraints_.push_back({lambda, r, a, b});
  }
}

double Polytope::min_slack(const Eigen::VectorXd& xp) const {
  double s = kInf;
  for (const auto& c : constraints_) s = std::min(s, (c.offset - c.normal.dot(xp)) / c.normal.norm());
  return s;
}

bool Polytope::contains(const Eigen::VectorXd& xp, double tolerance) const {
  for (const auto& c : constraints_)
    if (c.normal.dot(xp) - c.offset > tolerance) return false;
  return true;
}

bool Polytope::contains_full(const Eigen::VectorXd& x, double tolerance) const {
  return contains(x.head(d_ - 1), tolerance);
}

std::vector<int> Polytope::violated(const Eigen::VectorXd& xp) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < constraints_.size(); ++i)
    if (constraints_[i].normal.dot(xp) > constraints_[i].offset) out.push_back(static_cast<int>(i));
  return out;
}

Eigen::VectorXd Polytope::interior_point(const Eigen::VectorXd& start) const {
  if (constraints_.empty() || min_slack(start) > 0.0) return start;
  double scale = 1.0;
  for (const auto& c : constraints_) scale = std::max(scale, std::abs(c.offset) / c.normal.norm());
  Eigen::VectorXd x = start, best = start;
  double best_slack = min_slack(start);
  for (int k = 1; k <= 20000; ++k) {
    std::size_t worst = 0;
    double ws = kInf;
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      const auto& c = constraints_[i];
      double s = (c.offset - c.normal.dot(x)) / c.normal.norm();
      if (s < ws) {
        ws = s;
        worst = i;
      }
    }
    if (ws > best_slack) {
      best_slack = ws;
      best = x;
    }
    const auto& c = constraints_[worst];
    x -= (0.1 * scale / std::sqrt(static_cast<double>(k))) * c.normal / c.normal.norm();
  }
  if (!(best_slack > 0.0)) throw FeasibilityError("core polytope has no interior point", violated(best));
  return best;
}

SlabResult slab_sample(const JointModel& model, double K, const SlabConfig& cfg, std::uint64_t seed,
                       const Polytope* core) {
  if (!(cfg.delta > 0)) throw ParameterError("slab half-width must be positive");
  if (cfg.batch == 0) throw ParameterError("slab batch size must be positive");
  const int d = model.dim();
  std::vector<Eigen::VectorXd> hits;
  std::size_t draws = 0;
  std::size_t raw_hits = 0;
  Eigen::VectorXd x(d);
  for (std::uint64_t b = 0; draws < cfg.max_attempts; ++b) {
    std::size_t m = std::min(cfg.batch, cfg.max_attempts - draws);
    Samples batch = model.sample(m, split_seed(seed, b));
    for (std::size_t i = 0; i < m; ++i) {
      ++draws;
      x = batch.row(i).transpose();
      double s = sequential_sum(x);
      if (!(std::abs(s - K) < cfg.delta)) continue;
      ++raw_hits;
      if (cfg.standardize) {
        x *= K / s;
        close_sum(x, K);
      }
      if (core && !core->contains_full(x)) continue;
      hits.push_back(x);
      if (cfg.n > 0 && hits.size() == cfg.n) break;
    }
    if (cfg.n > 0 && hits.size() == cfg.n) break;
  }
  double rate = draws ? static_cast<double>(raw_hits) / static_cast<double>(draws) : 0.0;
  if (cfg.n > 0 && hits.size() < cfg.n)
    throw EfficiencyError("slab sampler exhausted its attempts before collecting the requested rows", rate);
  SlabResult out{Samples(hits.size(), d), rate, draws};
  for (std::size_t i = 0; i < hits.size(); ++i) out.rows.row(i) = hits[i].transpose();
  return out;
}

ChainDiagnostics chain_diagnostics(const Samples& chain, int max_lag) {
  const auto n = chain.rows();
  const auto dp = chain.cols();
  if (n < 2) throw SampleSizeError("chain too short for diagnostics");
  std::size_t moves = 0;
  for (Eigen::Index i = 1; i < n; ++i)
    if ((chain.row(i) - chain.row(i - 1)).cwiseAbs().maxCoeff() > 1e-14) ++moves;
  const int L = static_cast<int>(std::min<Eigen::Index>(max_lag, n - 1));
  ChainDiagnostics out{static_cast<double>(moves) / static_cast<double>(n - 1), Eigen::MatrixXd(L + 1, dp),
                       Eigen::VectorXd(dp)};
  for (Eigen::Index j = 0; j < dp; ++j) {
    Eigen::VectorXd c = chain.col(j).array() - chain.col(j).mean();
    double c0 = c.squaredNorm() / n;
    double sum = 0.0;
    bool truncated = false;
    out.autocorrelation(0, j) = 1.0;
    for (int k = 1; k <= L; ++k) {
      double rho = c0 > 0 ? c.head(n - k).dot(c.tail(n - k)) / n / c0 : 1.0;
      out.autocorrelation(k, j) = rho;
      if (rho < 0) truncated = true;
      if (!truncated) sum += rho;
    }
    out.ess(j) = std::min(static_cast<double>(n), n / (1.0 + 2.0 * sum));
  }
  return out;
}

Eigen::VectorXd find_initial_point(const ConditionalTarget& target, std::uint64_t seed) {
  const int dp = target.dim();
  const double K = target.capital();
  const auto& model = target.model();
  if (const auto* e = model.elliptical()) {
    Eigen::VectorXd mu = elliptical_condition(*e, K).location;
    if (model.scale() == 1.0 && model.shift().isZero(0.0) && std::isfinite(target.log_density(mu))) return mu;
  }
  if (target.support().is_bounded()) {
    const auto& s = std::get<ShiftedSimplex>(target.support().region());
    double room = K;
    for (double l : s.lower) room -= l;
    if (!(room > 0)) throw DegenerateError("capital leaves no room above the lower support bounds");
    Eigen::VectorXd x(dp);
    for (int j = 0; j < dp; ++j) x(j) = s.lower[j] + room / (dp + 1);
    if (std::isfinite(target.log_density(x))) return x;
  }
  double delta = std::max(0.01 * std::abs(K), 0.01);
  for (int k = 0; k < 12; ++k, delta *= 2.0) {
    try {
      SlabConfig cfg{delta, 1, true, 2'000'000, 100'000};
      auto r = slab_sample(model, K, cfg, split_seed(seed, 1000 + k));
      Eigen::VectorXd x = r.rows.row(0).head(dp).transpose();
      if (std::isfinite(target.log_density(x))) return x;
    } catch (const EfficiencyError&) {
    }
  }
  throw FeasibilityError("no starting point with finite conditional density found", {});
}

ChainResult mh_chain(const ConditionalTarget& target, const MHConfig& cfg) {
  const int dp = target.dim();
  if (cfg.length <= cfg.burn_in) throw ConfigError("chain length must exceed burn-in");
  if (cfg.thin < 1) throw ConfigError("thinning must be at least 1");
  const auto* rw = std::get_if<RandomWalk>(&cfg.proposal);
  if (rw && (rw->step.size() != dp || (rw->step.array() <= 0).any()))
    throw ConfigError("random-walk step scales must be positive, one per free coordinate");
  const ShiftedSimplex* simplex = nullptr;
  if (!rw) {
    if (!target.support().is_bounded())
      throw ConfigError("independent uniform proposal needs a bounded simplex support");
    simplex = &std::get<ShiftedSimplex>(target.support().region());
  }
  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  std::exponential_distribution<double> expo;
  Eigen::VectorXd x = cfg.initial ? *cfg.initial : find_initial_point(target, split_seed(cfg.seed, 7));
  double lp = target.log_density(x);
  if (!std::isfinite(lp)) throw FeasibilityError("initial point has zero target density", {});
  double room = 0.0;
  if (simplex) {
    room = target.capital();
    for (double l : simplex->lower) room -= l;
  }
  const std::size_t kept = (cfg.length - cfg.burn_in + cfg.thin - 1) / cfg.thin;
  ChainResult out{Samples(kept, dp), {}, 0.0, 0, {}};
  std::size_t accepted = 0, row = 0;
  Eigen::VectorXd y(dp), e(dp + 1);
  for (std::size_t it = 0; it < cfg.length; ++it) {
    if (rw) {
      for (int j = 0; j < dp; ++j) y(j) = x(j) + rw->step(j) * normal(rng);
    } else {
      for (int j = 0; j <= dp; ++j) e(j) = expo(rng);
      double s = e.sum();
      for (int j = 0; j < dp; ++j) y(j) = simplex->lower[j] + room * e(j) / s;
    }
    double ly = target.log_density(y);
    if (std::isfinite(ly) && std::log(unif(rng)) < ly - lp) {
      x = y;
      lp = ly;
      ++accepted;
    }
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) out.states.row(row++) = x.transpose();
  }
  out.move_rate = static_cast<double>(accepted) / static_cast<double>(cfg.length);
  out.diagnostics = chain_diagnostics(out.states);
  return out;
}

ChainResult hmc_reflect_chain(const ConditionalTarget& target, const Polytope& polytope, const HMCConfig& cfg) {
  const int dp = target.dim();
  if (!(cfg.step > 0) || cfg.steps < 1) throw ConfigError("HMC needs step > 0 and at least one leapfrog step");
  if (cfg.length <= cfg.burn_in) throw ConfigError("chain length must exceed burn-in");
  if (polytope.dim() != dp + 1) throw ShapeError("polytope dimension differs from target dimension");
  Eigen::VectorXd minv = Eigen::VectorXd::Ones(dp);
  if (cfg.mass.size()) minv = cfg.mass.cwiseInverse();
  if (minv.size() != dp || !(minv.array() > 0).all()) throw ConfigError("mass matrix must be positive diagonal");
  Eigen::VectorXd msd = minv.cwiseInverse().cwiseSqrt();
  const auto& cons = polytope.constraints();

  Eigen::VectorXd x0 = cfg.initial ? *cfg.initial : find_initial_point(target, split_seed(cfg.seed, 7));
  Eigen::VectorXd x = polytope.interior_point(x0);
  double lp = target.log_density(x);
  if (!std::isfinite(lp)) throw FeasibilityError("no feasible HMC start with finite target density", {});
  Eigen::VectorXd g = target.log_density_grad(x);

  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  const std::size_t kept = cfg.length - cfg.burn_in;
  ChainResult out{Samples(kept, dp), {}, 0.0, 0, {}};
  out.energy_error.reserve(cfg.length);
  std::size_t accepted = 0, row = 0;
  Eigen::VectorXd q(dp), p(dp), gq(dp);

  // Drift for time tau with specular reflection at the constraints; false if too many bounces.
  auto drift = [&](Eigen::VectorXd& pos, Eigen::VectorXd& mom, double tau) {
    for (int bounce = 0; bounce <= kMaxReflections; ++bounce) {
      Eigen::VectorXd v = minv.cwiseProduct(mom);
      double t_hit = tau;
      int hit = -1;
      for (std::size_t i = 0; i < cons.size(); ++i) {
        double av = cons[i].normal.dot(v);
        if (av <= 0) continue;
        double t = std::max(0.0, (cons[i].offset - cons[i].normal.dot(pos)) / av);
        if (t < t_hit) {
          t_hit = t;
          hit = static_cast<int>(i);
        }
      }
      pos += t_hit * v;
      if (hit < 0) return true;
      const auto& a = cons[hit].normal;
      mom -= (2.0 * a.dot(v) / a.dot(minv.cwiseProduct(a))) * a;
      tau -= t_hit;
    }
    return false;
  };

  for (std::size_t it = 0; it < cfg.length; ++it) {
    for (int j = 0; j < dp; ++j) p(j) = msd(j) * normal(rng);
    double h0 = -lp + 0.5 * p.dot(minv.cwiseProduct(p));
    q = x;
    gq = g;
    double lq = lp;
    bool ok = true;
    p += 0.5 * cfg.step * gq;
    for (int s = 0; s < cfg.steps && ok; ++s) {
      ok = drift(q, p, cfg.step);
      if (!ok) break;
      lq = target.log_density(q);
      if (!std::isfinite(lq)) {
        ok = false;
        break;
      }
      try {
        gq = target.log_density_grad(q);
      } catch (const BoundaryError&) {
        ok = false;
        break;
      }
      p += (s + 1 < cfg.steps ? 1.0 : 0.5) * cfg.step * gq;
    }
    double dh = kInf;
    if (ok) dh = (-lq + 0.5 * p.dot(minv.cwiseProduct(p))) - h0;
    out.energy_error.push_back(std::abs(dh));
    if (!std::isfinite(dh) || std::abs(dh) > cfg.divergence_threshold) {
      ++out.divergent;
    } else if (std::log(unif(rng)) < -dh && polytope.contains(q, 1e-10)) {
      x = q;
      lp = lq;
      g = gq;
      ++accepted;
    }
    if (it >= cfg.burn_in) out.states.row(row++) = x.transpose();
  }
  if (out.divergent * 2 > cfg.length)
    throw StabilityError("more than half of the HMC trajectories diverged; halve the step size",
                         0.5 * cfg.step);
  out.move_rate = static_cast<double>(accepted) / static_cast<double>(cfg.length);
  out.diagnostics = chain_diagnostics(out.states);
  return out;
}

Eigen::VectorXd random_walk_scale(const Samples& pilot_free) {
  const auto n = pilot_free.rows();
  const auto dp = pilot_free.cols();
  if (n < 2) throw SampleSizeError("pilot sample too small");
  Eigen::VectorXd sd(dp);
  for (Eigen::Index j = 0; j < dp; ++j) {
    double m = pilot_free.col(j).mean();
    sd(j) = std::sqrt((pilot_free.col(j).array() - m).square().sum() / (n - 1));
    if (!(sd(j) > 0)) sd(j) = 1e-3;
  }
  return (2.4 / std::sqrt(static_cast<double>(dp))) * sd;
}

HMCTuning tune_hmc(const Samples& pilot_free) {
  const auto n = pilot_free.rows();
  if (n < 2) throw SampleSizeError("pilot sample too small");
  double nn_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = kInf;
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != i) best = std::min(best, (pilot_free.row(i) - pilot_free.row(k)).squaredNorm());
    nn_sum += std::sqrt(best);
  }
  double eps = 0.4 * nn_sum / n;
  double max_sd = 0.0;
  for (Eigen::Index j = 0; j < pilot_free.cols(); ++j) {
    double m = pilot_free.col(j).mean();
    max_sd = std::max(max_sd, std::sqrt((pilot_free.col(j).array() - m).square().sum() / (n - 1)));
  }
  if (!(eps > 0)) eps = 1e-3 * std::max(max_sd, 1.0);
  int steps = std::max(1, static_cast<int>(std::lround(1.5 * max_sd / eps)));
  return {eps, steps};
}

Samples free_coordinates(const Samples& full) { return full.leftCols(full.cols() - 1); }

Samples lift_rows(const Samples& free, double K) {
  Samples out(free.rows(), free.cols() + 1);
  Eigen::VectorXd x(free.cols() + 1);
  for (Eigen::Index i = 0; i < free.rows(); ++i) {
    x.head(free.cols()) = free.row(i).transpose();
    close_sum(x, K);
    out.row(i) = x.transpose();
  }
  return out;
}

}  // namespace alloclab
