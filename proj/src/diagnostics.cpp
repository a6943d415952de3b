#include "alloclab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>

#include "alloclab/errors.hpp"
#include "alloclab/rng.hpp"

namespace alloclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// a + b - c - e on extended reals, with -inf on the left winning.
double log_gap(double a, double b, double c, double e) {
  if (a == -kInf || b == -kInf) return -kInf;
  if (c == -kInf || e == -kInf) return kInf;
  return (a + b) - (c + e);
}

std::vector<int> unflatten(const GridSpec& g, std::size_t flat) {
  std::vector<int> idx(g.dim());
  for (int j = 0; j < g.dim(); ++j) {
    idx[j] = static_cast<int>(flat % g.axes[j].points);
    flat /= g.axes[j].points;
  }
  return idx;
}

std::size_t flatten(const GridSpec& g, const std::vector<int>& idx) {
  std::size_t flat = 0;
  for (int j = g.dim() - 1; j >= 0; --j) flat = flat * g.axes[j].points + idx[j];
  return flat;
}

double cross(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

Tp2Result pair_check(const std::vector<double>& lf, const std::vector<double>& lg, const GridSpec& grid) {
  const std::size_t N = grid.size();
  std::vector<std::vector<int>> idx(N);
  for (std::size_t i = 0; i < N; ++i) idx[i] = unflatten(grid, i);
  Tp2Result out{Tp2Verdict::Neither, -kInf, -kInf};
  std::vector<int> lo(grid.dim()), hi(grid.dim());
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      if (a == b) continue;
      bool below = false, above = false;
      for (int j = 0; j < grid.dim(); ++j) {
        lo[j] = std::min(idx[a][j], idx[b][j]);
        hi[j] = std::max(idx[a][j], idx[b][j]);
        below = below || idx[a][j] < idx[b][j];
        above = above || idx[a][j] > idx[b][j];
      }
      if (!(below && above)) continue;
      std::size_t m = flatten(grid, lo), M = flatten(grid, hi);
      if (!std::isfinite(lf[a] + lg[b])) continue;
      double norm = std::max(1.0, std::abs(lf[a]) + std::abs(lg[b]));
      out.worst_mtp2 = std::max(out.worst_mtp2, log_gap(lf[a], lg[b], lf[m], lg[M]) / norm);
      out.worst_mrr2 = std::max(out.worst_mrr2, log_gap(lf[m], lg[M], lf[a], lg[b]) / norm);
    }
  }
  if (out.worst_mtp2 <= 1e-9) out.verdict = Tp2Verdict::MTP2;
  else if (out.worst_mrr2 <= 1e-9) out.verdict = Tp2Verdict::MRR2;
  return out;
}

std::vector<double> evaluate(const DensityFn& f, const GridSpec& grid) {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.point(i));
  return v;
}

}  // namespace

GridSpec::GridSpec(std::vector<Axis> a) : axes(std::move(a)) {
  if (axes.empty()) throw ParameterError("grid needs at least one axis");
  for (const auto& ax : axes) {
    if (ax.points < 16) throw ParameterError("grid resolution must be at least 16");
    if (!(std::isfinite(ax.lower) && std::isfinite(ax.upper) && ax.lower < ax.upper))
      throw ParameterError("grid ranges must be finite and nonempty");
  }
}

std::size_t GridSpec::size() const {
  std::size_t n = 1;
  for (const auto& ax : axes) n *= static_cast<std::size_t>(ax.points);
  return n;
}

Eigen::VectorXd GridSpec::point(std::size_t flat) const {
  Eigen::VectorXd x(dim());
  for (int j = 0; j < dim(); ++j) {
    x(j) = center(j, static_cast<int>(flat % axes[j].points));
    flat /= axes[j].points;
  }
  return x;
}

LevelSetResult superlevel_components(const DensityFn& density, double level, const GridSpec& grid) {
  if (grid.dim() < 1 || grid.dim() > 2) throw ParameterError("connectivity needs d' in {1, 2}");
  const std::size_t N = grid.size();
  std::vector<char> in(N);
  for (std::size_t i = 0; i < N; ++i) in[i] = density(grid.point(i)) >= level;
  LevelSetResult out{0, {}, std::vector<int>(N, -1)};
  const int nx = grid.axes[0].points;
  const int ny = grid.dim() == 2 ? grid.axes[1].points : 1;
  for (std::size_t s = 0; s < N; ++s) {
    if (!in[s] || out.label[s] >= 0) continue;
    int c = out.components++;
    int imin = nx, imax = -1, jmin = ny, jmax = -1;
    std::size_t cells = 0;
    std::deque<std::size_t> queue{s};
    out.label[s] = c;
    while (!queue.empty()) {
      std::size_t f = queue.front();
      queue.pop_front();
      int i = static_cast<int>(f % nx), j = static_cast<int>(f / nx);
      ++cells;
      imin = std::min(imin, i);
      imax = std::max(imax, i);
      jmin = std::min(jmin, j);
      jmax = std::max(jmax, j);
      const int di[] = {1, -1, 0, 0}, dj[] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        int a = i + di[k], b = j + dj[k];
        if (a < 0 || a >= nx || b < 0 || b >= ny) continue;
        std::size_t g = static_cast<std::size_t>(b) * nx + a;
        if (in[g] && out.label[g] < 0) {
          out.label[g] = c;
          queue.push_back(g);
        }
      }
    }
    LevelSetBox box{Eigen::VectorXd(grid.dim()), Eigen::VectorXd(grid.dim()), cells};
    box.lower(0) = grid.axes[0].lower + imin * grid.width(0);
    box.upper(0) = grid.axes[0].lower + (imax + 1) * grid.width(0);
    if (grid.dim() == 2) {
      box.lower(1) = grid.axes[1].lower + jmin * grid.width(1);
      box.upper(1) = grid.axes[1].lower + (jmax + 1) * grid.width(1);
    }
    out.boxes.push_back(box);
  }
  return out;
}

bool component_is_convex(const LevelSetResult& result, int component, const GridSpec& grid) {
  if (grid.dim() == 1) {
    // A single maximal run is convex by construction.
    return component >= 0 && component < result.components;
  }
  std::vector<Eigen::Vector2d> pts;
  for (std::size_t i = 0; i < result.label.size(); ++i)
    if (result.label[i] == component) pts.push_back(grid.point(i));
  if (pts.size() < 3) return true;
  std::sort(pts.begin(), pts.end(),
            [](const auto& a, const auto& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  double tol = 1e-9 * std::max(grid.width(0), grid.width(1));
  for (std::size_t i = 0; i < result.label.size(); ++i) {
    if (result.label[i] == component) continue;
    Eigen::Vector2d p = grid.point(i);
    bool inside = hull.size() >= 3;
    for (std::size_t h = 0; h < hull.size() && inside; ++h)
      inside = cross(hull[h], hull[(h + 1) % hull.size()], p) >= -tol;
    if (inside) return false;
  }
  return true;
}

double generalized_mean(double a, double b, double theta, double s) {
  if (s == -kInf) return std::min(a, b);
  if (s == kInf) return std::max(a, b);
  if (a <= 0 || b <= 0) {
    if (s <= 0) return 0.0;
    return std::pow(theta * std::pow(a, s) + (1 - theta) * std::pow(b, s), 1.0 / s);
  }
  if (s == 0) return std::exp(theta * std::log(a) + (1 - theta) * std::log(b));
  return std::pow(theta * std::pow(a, s) + (1 - theta) * std::pow(b, s), 1.0 / s);
}

ConcavityResult s_concavity_check(const DensityFn& density, double s, const GridSpec& grid, std::size_t pairs,
                                  std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  const double thetas[] = {0.25, 0.5, 0.75};
  ConcavityResult out{true, -kInf, pairs};
  for (std::size_t k = 0; k < pairs; ++k) {
    Eigen::VectorXd x = grid.point(pick(rng)), y = grid.point(pick(rng));
    double fx = density(x), fy = density(y);
    for (double th : thetas) {
      double m = generalized_mean(fx, fy, th, s);
      double fm = density(th * x + (1 - th) * y);
      double v = m > 0 ? (m - fm) / m : -fm;
      out.worst_violation = std::max(out.worst_violation, v);
    }
  }
  out.pass = out.worst_violation <= 1e-9;
  return out;
}

std::string verdict_name(Tp2Verdict v) {
  switch (v) {
    case Tp2Verdict::MTP2: return "MTP2";
    case Tp2Verdict::MRR2: return "MRR2";
    case Tp2Verdict::Neither: return "neither";
  }
  return "neither";
}

Tp2Result mtp2_check(const DensityFn& log_density, const GridSpec& grid) {
  auto v = evaluate(log_density, grid);
  return pair_check(v, v, grid);
}

Tp2Result tp2_order_check(const DensityFn& log_f, const DensityFn& log_g, const GridSpec& grid) {
  return pair_check(evaluate(log_f, grid), evaluate(log_g, grid), grid);
}

InheritanceResult mtp2_conditional_inheritance(const DensityFn& joint_log_density, double K,
                                               const GridSpec& slice_grid, const GridSpec& joint_grid) {
  if (slice_grid.dim() != 2 || joint_grid.dim() != 3)
    throw ParameterError("inheritance check needs a bivariate slice grid and a trivariate joint grid");
  InheritanceResult out;
  out.joint = mtp2_check(joint_log_density, joint_grid);
  out.conditional = mtp2_check(
      [&](const Eigen::VectorXd& xp) {
        Eigen::VectorXd z(3);
        z << xp(0), xp(1), K;
        return joint_log_density(z);
      },
      slice_grid);
  out.consistent = out.joint.verdict == Tp2Verdict::Neither || out.joint.verdict == out.conditional.verdict;
  return out;
}

std::vector<double> default_mrv_ladder() {
  std::vector<double> t;
  for (int k = 4; k <= 14; ++k) t.push_back(std::ldexp(1.0, k));
  return t;
}

MRVReport mrv_exponent(const ConditionalTarget& target, const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const std::vector<double>& ladder) {
  if (x.size() != target.dim() || y.size() != target.dim()) throw ShapeError("points must be in R^{d'}");
  if (!((x.array() > 0).all() && (y.array() > 0).all())) throw ParameterError("x and y must be strictly positive");
  if (ladder.size() < 2) throw ParameterError("ladder needs at least two points");
  for (std::size_t k = 1; k < ladder.size(); ++k)
    if (!(ladder[k] > ladder[k - 1])) throw ParameterError("ladder must be strictly increasing");
  MRVReport out{x, y, {}, {}, false, false, std::numeric_limits<double>::quiet_NaN(),
                std::numeric_limits<double>::quiet_NaN(), std::nullopt};
  bool underflow = false;
  for (double t : ladder) {
    Eigen::VectorXd tx = t * x, ty = t * y;
    if (!target.support().contains(tx) || !target.support().contains(ty)) {
      out.truncated = true;
      break;
    }
    double a = target.log_density(ty), b = target.log_density(tx);
    if (!std::isfinite(a) || !std::isfinite(b)) {
      out.truncated = true;
      underflow = true;
      break;
    }
    out.ladder.push_back(t);
    out.log_ratio.push_back(a - b);
  }
  const auto m = out.log_ratio.size();
  if (m >= 2) {
    double last = out.log_ratio[m - 1];
    out.residual = std::abs(last - out.log_ratio[m - 2]);
    out.rapid = underflow || out.residual > 0.05 * std::max(1.0, std::abs(last));
    if (!out.rapid) out.limit = last;
  } else {
    out.rapid = underflow;
  }
  const auto& model = target.model();
  if (const auto* e = model.elliptical();
      e && std::holds_alternative<StudentTGen>(e->generator().base()) && model.shift().isZero(0.0)) {
    const auto& t = std::get<StudentTGen>(e->generator().base());
    auto cond = elliptical_condition(*e, target.capital());
    Eigen::LLT<Eigen::MatrixXd> llt(cond.dispersion);
    double ny = llt.matrixL().solve(y).norm(), nx = llt.matrixL().solve(x).norm();
    out.predicted = -(t.nu + t.d) * std::log(ny / nx);
  }
  return out;
}

}  // namespace alloclab
