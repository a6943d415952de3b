#include "alloclab/copula.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <gsl/gsl_cdf.h>

#include "alloclab/errors.hpp"

namespace alloclab {

namespace {

double t_score(const boost::math::students_t& t, double u, double ubar) {
  if (u <= 0.5) return boost::math::quantile(t, u);
  return -boost::math::quantile(t, ubar);
}

double log_t1(double nu, double q) {
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI) -
         0.5 * (nu + 1.0) * std::log1p(q * q / nu);
}

}  // namespace

CopulaModel::CopulaModel(Params params) : params_(std::move(params)) {
  if (auto* t = std::get_if<StudentTCopula>(&params_)) {
    if (!(t->nu > 0)) throw ParameterError("t copula requires nu > 0");
    if (t->corr.rows() < 2 || t->corr.rows() != t->corr.cols())
      throw ShapeError("t copula correlation must be square with d >= 2");
    if ((t->corr.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12)
      throw ParameterError("correlation matrix must have unit diagonal");
    corr_.emplace(t->corr);
  } else if (auto* e = std::get_if<EmpiricalResampleCopula>(&params_)) {
    if (e->pseudo.rows() == 0) throw DataError("empirical copula has no pseudo-observations");
  } else if (std::get<IndependenceCopula>(params_).dim < 1) {
    throw ParameterError("independence copula needs d >= 1");
  }
}

int CopulaModel::dim() const {
  if (auto* t = std::get_if<StudentTCopula>(&params_)) return static_cast<int>(t->corr.rows());
  if (auto* i = std::get_if<IndependenceCopula>(&params_)) return i->dim;
  return static_cast<int>(std::get<EmpiricalResampleCopula>(params_).pseudo.cols());
}

bool CopulaModel::has_density() const { return !std::holds_alternative<EmpiricalResampleCopula>(params_); }

double CopulaModel::log_density(const Eigen::VectorXd& u, const Eigen::VectorXd& ubar) const {
  Eigen::VectorXd g;
  return log_density_du(u, ubar, g);
}

double CopulaModel::log_density_du(const Eigen::VectorXd& u, const Eigen::VectorXd& ubar,
                                   Eigen::VectorXd& grad) const {
  const int d = dim();
  grad = Eigen::VectorXd::Zero(d);
  if (std::holds_alternative<IndependenceCopula>(params_)) return 0.0;
  if (std::holds_alternative<EmpiricalResampleCopula>(params_))
    throw NotAvailableError("empirical copula has no density");
  const auto& t = std::get<StudentTCopula>(params_);
  const double nu = t.nu;
  boost::math::students_t dist(nu);
  Eigen::VectorXd q(d);
  for (int j = 0; j < d; ++j) {
    if (!(u(j) > 0.0 && ubar(j) > 0.0)) return -std::numeric_limits<double>::infinity();
    q(j) = t_score(dist, u(j), ubar(j));
  }
  Eigen::VectorXd pq = corr_->solve(q);
  double quad = q.dot(pq);
  double log_joint = std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) - 0.5 * d * std::log(nu * M_PI) -
                     0.5 * corr_->log_det() - 0.5 * (nu + d) * std::log1p(quad / nu);
  double log_marg = 0.0;
  for (int j = 0; j < d; ++j) {
    double lt = log_t1(nu, q(j));
    log_marg += lt;
    double dq = -(nu + d) / (nu + quad) * pq(j) + (nu + 1.0) * q(j) / (nu + q(j) * q(j));
    grad(j) = dq * std::exp(-lt);
  }
  return log_joint - log_marg;
}

void CopulaModel::sample(std::size_t n, Rng& rng, Samples& u, Samples& ubar) const {
  const int d = dim();
  u.resize(n, d);
  ubar.resize(n, d);
  if (std::holds_alternative<IndependenceCopula>(params_)) {
    std::uniform_real_distribution<double> unif;
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) {
        double v = unif(rng);
        u(i, j) = v;
        ubar(i, j) = 1.0 - v;
      }
    return;
  }
  if (auto* e = std::get_if<EmpiricalResampleCopula>(&params_)) {
    std::uniform_int_distribution<Eigen::Index> pick(0, e->pseudo.rows() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      auto r = pick(rng);
      u.row(i) = e->pseudo.row(r);
      ubar.row(i) = (1.0 - e->pseudo.row(r).array()).matrix();
    }
    return;
  }
  const auto& t = std::get<StudentTCopula>(params_);
  std::normal_distribution<double> normal;
  std::gamma_distribution<double> chi2(0.5 * t.nu, 2.0);
  const auto& L = corr_->cholesky();
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) z(j) = normal(rng);
    double s = std::sqrt(t.nu / chi2(rng));
    Eigen::VectorXd x = L.triangularView<Eigen::Lower>() * z;
    x *= s;
    for (int j = 0; j < d; ++j) {
      double lo = gsl_cdf_tdist_P(-std::abs(x(j)), t.nu);
      u(i, j) = x(j) < 0 ? lo : 1.0 - lo;
      ubar(i, j) = x(j) < 0 ? 1.0 - lo : lo;
    }
  }
}

Samples pseudo_observations(const Samples& data) {
  const auto n = data.rows();
  Samples out(n, data.cols());
  std::vector<Eigen::Index> idx(n);
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return data(a, j) < data(b, j); });
    for (Eigen::Index k = 0; k < n;) {
      Eigen::Index m = k;
      while (m + 1 < n && data(idx[m + 1], j) == data(idx[k], j)) ++m;
      for (Eigen::Index r = k; r <= m; ++r) out(idx[r], j) = static_cast<double>(m + 1) / n;
      k = m + 1;
    }
  }
  return out;
}

}  // namespace alloclab
