#pragma once

#include <cstdint>
#include <variant>

#include <Eigen/Dense>

#include "alloclab/rng.hpp"

namespace alloclab {

using Samples = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Symmetric positive definite matrix with a cached Cholesky factor.
class DispersionMatrix {
 public:
  explicit DispersionMatrix(Eigen::MatrixXd sigma);

  int dim() const { return static_cast<int>(sigma_.rows()); }
  const Eigen::MatrixXd& matrix() const { return sigma_; }
  const Eigen::MatrixXd& cholesky() const { return lower_; }
  double log_det() const { return log_det_; }
  bool repaired() const { return repaired_; }
  /// z' Sigma^{-1} z
  double quad_form(const Eigen::VectorXd& z) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& z) const;

 private:
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd lower_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
  bool repaired_ = false;
};

struct NormalGen {};

/// g(t) = (1 + 2t/nu)^(-(d + nu)/2), so that c g(q/2) is the textbook t density in dimension d.
struct StudentTGen {
  double nu;
  int d;
};

/// Density generator g, optionally shifted (g(t + shift)), normalized for dimension `dim`.
class DensityGenerator {
 public:
  using Base = std::variant<NormalGen, StudentTGen>;

  static DensityGenerator normal(int dim);
  static DensityGenerator student_t(double nu, int dim);
  /// g_K(t) = g(t + delta) renormalized for dimension `dim`.
  static DensityGenerator shifted(const DensityGenerator& base, double delta, int dim);

  double log_g(double t) const;
  double dlog_g(double t) const;
  double log_norm() const { return log_c_; }
  int dim() const { return dim_; }
  double shift() const { return shift_; }
  const Base& base() const { return base_; }

 private:
  DensityGenerator(Base base, double shift, int dim);
  double base_log_g(double t) const;

  Base base_;
  double shift_ = 0.0;
  int dim_ = 0;
  double log_c_ = 0.0;
};

class EllipticalModel {
 public:
  EllipticalModel(Eigen::VectorXd mu, DispersionMatrix sigma, DensityGenerator gen);

  int dim() const { return static_cast<int>(mu_.size()); }
  const Eigen::VectorXd& location() const { return mu_; }
  const DispersionMatrix& dispersion() const { return sigma_; }
  const DensityGenerator& generator() const { return gen_; }

  double log_density(const Eigen::VectorXd& x) const;
  Eigen::VectorXd log_density_grad(const Eigen::VectorXd& x) const;
  /// Unshifted normal and Student t generators only.
  Samples sample(std::size_t n, Rng& rng) const;

 private:
  Eigen::VectorXd mu_;
  DispersionMatrix sigma_;
  DensityGenerator gen_;
};

}  // namespace alloclab
