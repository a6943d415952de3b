#include "alloclab/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "alloclab/conditional.hpp"
#include "alloclab/errors.hpp"

namespace alloclab {

Eigen::VectorXd comonotone_allocation(const std::vector<Margin>& margins, double K) {
  const auto d = margins.size();
  if (d == 0) throw ParameterError("need at least one margin");
  for (const auto& m : margins)
    if (!m.has_density()) throw ParameterError("comonotone allocation needs continuous margins");
  Eigen::VectorXd x(d);
  if (d == 1) {
    x(0) = margins[0].quantile(margins[0].cdf(K));
    return x;
  }
  double lo_sum = 0.0, hi_sum = 0.0;
  for (const auto& m : margins) {
    lo_sum += m.lower_bound();
    hi_sum += m.upper_bound();
  }
  if (!(K > lo_sum && K < hi_sum)) throw RangeError("capital outside the comonotone attainable range");
  auto eval = [&](double u) {
    for (std::size_t j = 0; j < d; ++j) x(j) = margins[j].quantile_pair(u, 1.0 - u);
    return sequential_sum(x);
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 2000; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (eval(mid) < K) lo = mid; else hi = mid;
  }
  double s_lo = lo > 0.0 ? eval(lo) : -std::numeric_limits<double>::infinity();
  double s_hi = eval(hi);
  if (std::abs(s_lo - K) < std::abs(s_hi - K)) eval(lo);
  return x;
}

Samples countermonotone_pair_sampler(const Margin& margin, double K, std::size_t n, std::uint64_t seed) {
  double FK = margin.cdf(K);
  if (!(FK > 0.0)) throw DegenerateError("F(K) = 0: conditioning on a null event");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Samples out(n, 2);
  Eigen::VectorXd row(2);
  for (std::size_t i = 0; i < n; ++i) {
    double u;
    do u = FK * unif(rng); while (u <= 0.0);
    row(0) = margin.quantile(u);
    close_sum(row, K);
    out.row(i) = row.transpose();
  }
  return out;
}

Samples complete_mix_dirichlet(double alpha, double beta, double K, std::size_t n, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < beta)) throw ParameterError("complete mix needs 0 < alpha < beta");
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, 2);
  std::gamma_distribution<double> ga(alpha, 1.0), gb(beta, 1.0);
  Samples out(n, 3);
  Eigen::VectorXd row(3);
  for (std::size_t i = 0; i < n; ++i) {
    int c = pick(rng);
    double g[3];
    for (int j = 0; j < 3; ++j) g[j] = j == c ? gb(rng) : ga(rng);
    double s = g[0] + g[1] + g[2];
    for (int j = 0; j < 3; ++j) row(j) = K * (g[j] / s);
    close_sum(row, K);
    out.row(i) = row.transpose();
  }
  return out;
}

HomotheticModel::HomotheticModel(std::vector<Box> boxes, double scale, Eigen::VectorXd mu)
    : shape(std::move(boxes)), a(scale), location(std::move(mu)) {
  if (shape.empty()) throw ParameterError("shape set needs at least one box");
  if (!(a > 0)) throw ParameterError("scaling constant must be positive");
  for (const auto& b : shape) {
    if (b.lower.size() != location.size() || b.upper.size() != location.size())
      throw ShapeError("box dimension differs from location dimension");
    if (!((b.lower.array() < 0).all() && (b.upper.array() > 0).all()))
      throw ParameterError("every box must contain 0 in its interior");
  }
}

double HomotheticModel::gauge(const Eigen::VectorXd& z) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : shape) {
    double m = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j)
      m = std::max(m, z(j) < 0 ? z(j) / b.lower(j) : z(j) / b.upper(j));
    best = std::min(best, m);
  }
  return best;
}

double HomotheticModel::scaling(double t) const { return a * std::exp(-0.5 * t); }

double HomotheticModel::scaling_inverse(double rho) const { return 2.0 * std::log(a / rho); }

double box_union_volume(const std::vector<Box>& boxes) {
  if (boxes.empty()) return 0.0;
  const auto d = boxes.front().lower.size();
  std::vector<std::vector<double>> cuts(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (const auto& b : boxes) {
      cuts[j].push_back(b.lower(j));
      cuts[j].push_back(b.upper(j));
    }
    std::sort(cuts[j].begin(), cuts[j].end());
    cuts[j].erase(std::unique(cuts[j].begin(), cuts[j].end()), cuts[j].end());
  }
  std::vector<std::size_t> idx(d, 0);
  double vol = 0.0;
  Eigen::VectorXd mid(d);
  while (true) {
    double cell = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      mid(j) = 0.5 * (cuts[j][idx[j]] + cuts[j][idx[j] + 1]);
      cell *= cuts[j][idx[j] + 1] - cuts[j][idx[j]];
    }
    for (const auto& b : boxes)
      if ((mid.array() > b.lower.array()).all() && (mid.array() < b.upper.array()).all()) {
        vol += cell;
        break;
      }
    Eigen::Index j = 0;
    while (j < static_cast<Eigen::Index>(d) && ++idx[j] + 1 >= cuts[j].size()) idx[j++] = 0;
    if (j == static_cast<Eigen::Index>(d)) break;
  }
  return vol;
}

double homothetic_normalization(const HomotheticModel& h) {
  double leb = box_union_volume(h.shape);
  const int d = h.dim();
  boost::math::quadrature::exp_sinh<double> integrator;
  return leb * integrator.integrate([&](double t) { return std::pow(h.scaling(t), d); }, 1e-12);
}

double homothetic_density(const HomotheticModel& h, const Eigen::VectorXd& x) {
  if (x.size() != h.location.size()) throw ShapeError("point dimension differs from model dimension");
  double rho = h.gauge(x - h.location);
  if (rho == 0.0) return std::numeric_limits<double>::infinity();
  if (rho >= h.scaling(0.0)) return 0.0;
  return h.scaling_inverse(rho);
}

}  // namespace alloclab
