#include "alloclab/modes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "alloclab/errors.hpp"

namespace alloclab {

namespace {

struct Whitening {
  Eigen::MatrixXd L;  // H = L L'
  Samples z;          // whitened samples
};

Whitening whiten(const Samples& x, const Eigen::MatrixXd& H) {
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success) throw ParameterError("bandwidth matrix is not positive definite");
  Whitening w{llt.matrixL(), Samples(x.rows(), x.cols())};
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    w.z.row(i) = w.L.triangularView<Eigen::Lower>().solve(x.row(i).transpose()).transpose();
  return w;
}

double log_sum_kernel(const Samples& z, const Eigen::VectorXd& y) {
  const auto n = z.rows();
  std::vector<double> e(n);
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    e[i] = -0.5 * (z.row(i).transpose() - y).squaredNorm();
    mx = std::max(mx, e[i]);
  }
  double s = 0.0;
  for (double v : e) s += std::exp(v - mx);
  return mx + std::log(s);
}

// One mean-shift update in whitened coordinates.
Eigen::VectorXd shift_step(const Samples& z, const Eigen::VectorXd& y) {
  const auto n = z.rows();
  const auto dp = z.cols();
  Eigen::VectorXd num = Eigen::VectorXd::Zero(dp);
  double den = 0.0;
  double floor = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) floor = std::min(floor, (z.row(i).transpose() - y).squaredNorm());
  for (Eigen::Index i = 0; i < n; ++i) {
    double w = std::exp(-0.5 * ((z.row(i).transpose() - y).squaredNorm() - floor));
    num += w * z.row(i).transpose();
    den += w;
  }
  return num / den;
}

}  // namespace

Eigen::MatrixXd default_bandwidth(const Samples& free) {
  const auto n = free.rows();
  const auto dp = free.cols();
  if (n < 2) throw SampleSizeError("bandwidth needs at least two samples");
  Eigen::RowVectorXd mean = free.colwise().mean();
  Eigen::MatrixXd c = free.rowwise() - mean;
  Eigen::MatrixXd S = (c.transpose() * c) / static_cast<double>(n - 1);
  double dd = static_cast<double>(dp);
  double k = std::pow(4.0 / (dd + 2.0), 1.0 / (dd + 4.0));
  Eigen::MatrixXd H = (k * k * std::pow(static_cast<double>(n), -2.0 / (dd + 4.0))) * S;
  double floor = 1e-12 * std::max(1.0, H.diagonal().maxCoeff());
  Eigen::LLT<Eigen::MatrixXd> llt(H);
  if (llt.info() != Eigen::Success || H.diagonal().minCoeff() < floor)
    H.diagonal().array() += floor;
  return H;
}

double kernel_log_density(const Samples& free, const Eigen::MatrixXd& H, const Eigen::VectorXd& x) {
  auto w = whiten(free, H);
  Eigen::VectorXd y = w.L.triangularView<Eigen::Lower>().solve(x);
  const double dp = static_cast<double>(free.cols());
  return log_sum_kernel(w.z, y) - std::log(static_cast<double>(free.rows())) - 0.5 * dp * std::log(2.0 * M_PI) -
         w.L.diagonal().array().log().sum();
}

ModeSet mean_shift_modes(const Samples& free, const ConditionalTarget* target, const MeanShiftConfig& cfg,
                         std::optional<double> capital) {
  const auto n = free.rows();
  const auto dp = free.cols();
  if (n < 10 * dp) throw SampleSizeError("mean shift needs at least 10 samples per free coordinate");
  if (!(cfg.tolerance > 0)) throw ParameterError("mean-shift tolerance must be positive");
  if (target && target->dim() != dp) throw ShapeError("sample dimension differs from target dimension");
  Eigen::MatrixXd H = cfg.bandwidth.size() ? cfg.bandwidth
                                           : Eigen::MatrixXd(cfg.bandwidth_scale * cfg.bandwidth_scale *
                                                             default_bandwidth(free));
  auto w = whiten(free, H);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H, Eigen::EigenvaluesOnly);
  const double merge = cfg.merge_radius ? *cfg.merge_radius : 0.25 * std::sqrt(eig.eigenvalues().minCoeff());
  const double capture = 1e-3;

  std::vector<Eigen::VectorXd> fixed;  // converged points, whitened
  std::vector<Eigen::Index> owner(n);  // index into `fixed`
  ModeSet out;
  if (target) capital = target->capital();
  out.capital = capital.value_or(0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd y = w.z.row(i).transpose();
    bool converged = false;
    Eigen::Index assigned = -1;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      Eigen::VectorXd next = shift_step(w.z, y);
      double step = (next - y).norm();
      y = next;
      if (step < cfg.tolerance) {
        converged = true;
        break;
      }
      if (step < 10 * capture) {
        for (std::size_t f = 0; f < fixed.size(); ++f)
          if ((fixed[f] - y).norm() < capture) {
            assigned = static_cast<Eigen::Index>(f);
            converged = true;
            break;
          }
        if (assigned >= 0) break;
      }
    }
    if (!converged) ++out.unconverged;
    if (assigned < 0) {
      assigned = static_cast<Eigen::Index>(fixed.size());
      fixed.push_back(y);
    }
    owner[i] = assigned;
  }
  out.convergence_warning = out.unconverged * 5 > static_cast<std::size_t>(n);

  // Merge fixed points (original coordinates) within the merge radius.
  std::vector<Eigen::VectorXd> centers;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> cluster_of(fixed.size());
  std::vector<std::size_t> fixed_count(fixed.size(), 0);
  for (auto o : owner) ++fixed_count[o];
  for (std::size_t f = 0; f < fixed.size(); ++f) {
    Eigen::VectorXd x = w.L * fixed[f];
    std::size_t c = 0;
    while (c < centers.size() && (centers[c] - x).norm() >= merge) ++c;
    if (c == centers.size()) {
      centers.push_back(x);
      counts.push_back(0);
    }
    cluster_of[f] = c;
    counts[c] += fixed_count[f];
  }

  // Fold small basins into the nearest surviving centre.
  const double min_count = cfg.min_basin_fraction * static_cast<double>(n);
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < centers.size(); ++c)
    if (static_cast<double>(counts[c]) >= min_count) keep.push_back(c);
  if (keep.empty())
    keep.push_back(static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin()));
  std::vector<std::size_t> basin(keep.size(), 0);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < keep.size(); ++k) {
      double dist = (centers[keep[k]] - centers[c]).norm();
      if (dist < bd) {
        bd = dist;
        best = k;
      }
    }
    basin[best] += counts[c];
    if (std::find(keep.begin(), keep.end(), c) == keep.end()) {
      ++out.discarded_modes;
      out.discarded_samples += counts[c];
    }
  }

  out.exact_density = target && target->model().has_density();
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const Eigen::VectorXd& x = centers[keep[k]];
    double ld = out.exact_density ? target->log_density(x) : kernel_log_density(free, H, x);
    Eigen::VectorXd lifted(dp + 1);
    lifted.head(dp) = x;
    if (capital) {
      close_sum(lifted, *capital);
    } else {
      lifted(dp) = std::numeric_limits<double>::quiet_NaN();
    }
    out.modes.push_back({lifted, ld, basin[k]});
  }
  std::stable_sort(out.modes.begin(), out.modes.end(),
                   [](const Mode& a, const Mode& b) { return a.log_density > b.log_density; });
  out.unique_global = out.modes.size() == 1 ||
                      out.modes[0].log_density - out.modes[1].log_density > std::log1p(1e-6);
  return out;
}

Eigen::VectorXd scenario_weights(const ModeSet& modes, const JointModel& model) {
  const auto M = modes.modes.size();
  if (M == 0) throw ParameterError("scenario weights need at least one mode");
  Eigen::VectorXd lw(M);
  for (std::size_t m = 0; m < M; ++m)
    lw(m) = model.has_density() ? model.log_density(modes.modes[m].location) : modes.modes[m].log_density;
  double mx = lw.maxCoeff();
  if (!std::isfinite(mx)) throw DegenerateError("all scenario densities are zero");
  Eigen::VectorXd w = (lw.array() - mx).exp();
  w /= w.sum();
  if (M > 1) w(M - 1) = 1.0 - w.head(M - 1).sum();
  return w;
}

}  // namespace alloclab
