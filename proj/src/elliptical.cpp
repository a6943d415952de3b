#include "alloclab/elliptical.hpp"

#include <cmath>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "alloclab/errors.hpp"

namespace alloclab {

DispersionMatrix::DispersionMatrix(Eigen::MatrixXd sigma) : sigma_(std::move(sigma)) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() == 0)
    throw ShapeError("dispersion matrix must be square and nonempty");
  if (!sigma_.allFinite()) throw ParameterError("dispersion matrix has non-finite entries");
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ParameterError("dispersion matrix is not symmetric");
  sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
  llt_.compute(sigma_);
  if (llt_.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma_, Eigen::EigenvaluesOnly);
    double lmin = eig.eigenvalues().minCoeff();
    if (lmin <= -1e-10) throw ParameterError("dispersion matrix is not positive definite");
    sigma_.diagonal().array() += 1e-10;
    repaired_ = true;
    llt_.compute(sigma_);
    if (llt_.info() != Eigen::Success) throw ParameterError("dispersion matrix is not positive definite");
  }
  lower_ = llt_.matrixL();
  log_det_ = 2.0 * lower_.diagonal().array().log().sum();
}

double DispersionMatrix::quad_form(const Eigen::VectorXd& z) const {
  Eigen::VectorXd w = llt_.matrixL().solve(z);
  return w.squaredNorm();
}

Eigen::VectorXd DispersionMatrix::solve(const Eigen::VectorXd& z) const { return llt_.solve(z); }

DensityGenerator::DensityGenerator(Base base, double shift, int dim)
    : base_(std::move(base)), shift_(shift), dim_(dim) {
  if (dim_ < 1) throw ParameterError("generator dimension must be positive");
  if (shift_ < 0) throw ParameterError("generator shift must be nonnegative");
  // c^{-1} = 2 pi^{d/2} / Gamma(d/2) * int_0^inf r^{d-1} g(r^2/2) dr
  double d = dim_;
  double g0 = log_g(0.0);
  auto integrand = [&](double r) {
    if (r == 0.0) return d == 1.0 ? 1.0 : 0.0;
    return std::exp((d - 1.0) * std::log(r) + log_g(0.5 * r * r) - g0);
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  double radial = integrator.integrate(integrand, 1e-12);
  if (!std::isfinite(radial) || radial <= 0.0)
    throw ParameterError("density generator is not integrable in this dimension");
  log_c_ = -(std::log(2.0) + 0.5 * d * std::log(M_PI) - std::lgamma(0.5 * d) + std::log(radial) + g0);
}

DensityGenerator DensityGenerator::normal(int dim) { return DensityGenerator(NormalGen{}, 0.0, dim); }

DensityGenerator DensityGenerator::student_t(double nu, int dim) {
  if (!(nu > 0)) throw ParameterError("degrees of freedom must be positive");
  return DensityGenerator(StudentTGen{nu, dim}, 0.0, dim);
}

DensityGenerator DensityGenerator::shifted(const DensityGenerator& base, double delta, int dim) {
  return DensityGenerator(base.base_, base.shift_ + delta, dim);
}

double DensityGenerator::base_log_g(double t) const {
  if (std::holds_alternative<NormalGen>(base_)) return -t;
  const auto& s = std::get<StudentTGen>(base_);
  return -0.5 * (s.d + s.nu) * std::log1p(2.0 * t / s.nu);
}

double DensityGenerator::log_g(double t) const { return base_log_g(t + shift_); }

double DensityGenerator::dlog_g(double t) const {
  if (std::holds_alternative<NormalGen>(base_)) return -1.0;
  const auto& s = std::get<StudentTGen>(base_);
  return -(s.d + s.nu) / (s.nu + 2.0 * (t + shift_));
}

EllipticalModel::EllipticalModel(Eigen::VectorXd mu, DispersionMatrix sigma, DensityGenerator gen)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), gen_(std::move(gen)) {
  if (mu_.size() != sigma_.dim() || gen_.dim() != sigma_.dim())
    throw ShapeError("location, dispersion and generator dimensions differ");
}

double EllipticalModel::log_density(const Eigen::VectorXd& x) const {
  double q = sigma_.quad_form(x - mu_);
  return gen_.log_norm() - 0.5 * sigma_.log_det() + gen_.log_g(0.5 * q);
}

Eigen::VectorXd EllipticalModel::log_density_grad(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z = x - mu_;
  double q = sigma_.quad_form(z);
  return gen_.dlog_g(0.5 * q) * sigma_.solve(z);
}

Samples EllipticalModel::sample(std::size_t n, Rng& rng) const {
  if (gen_.shift() != 0.0) throw NotAvailableError("sampling a shifted generator is not supported");
  const int d = dim();
  std::normal_distribution<double> normal;
  const auto* t = std::get_if<StudentTGen>(&gen_.base());
  std::gamma_distribution<double> chi2(t ? 0.5 * t->nu : 1.0, 2.0);
  Samples out(n, d);
  Eigen::VectorXd z(d);
  const auto& L = sigma_.cholesky();
  for (std::size_t i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) z(j) = normal(rng);
    double scale = t ? std::sqrt(t->nu / chi2(rng)) : 1.0;
    Eigen::VectorXd lz = L.triangularView<Eigen::Lower>() * z;
    out.row(i) = (mu_ + scale * lz).transpose();
  }
  return out;
}

}  // namespace alloclab
