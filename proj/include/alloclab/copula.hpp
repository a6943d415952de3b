#pragma once

#include <optional>
#include <variant>

#include <Eigen/Dense>

#include "alloclab/elliptical.hpp"

namespace alloclab {

struct StudentTCopula {
  double nu;
  Eigen::MatrixXd corr;
};

struct IndependenceCopula {
  int dim;
};

/// Resamples whole rows of pseudo-observations in (0, 1].
struct EmpiricalResampleCopula {
  Samples pseudo;
};

class CopulaModel {
 public:
  using Params = std::variant<StudentTCopula, IndependenceCopula, EmpiricalResampleCopula>;

  CopulaModel(Params params);

  int dim() const;
  bool has_density() const;
  /// Log copula density given u and its complement 1 - u.
  double log_density(const Eigen::VectorXd& u, const Eigen::VectorXd& ubar) const;
  /// Log density together with d/du_j log c.
  double log_density_du(const Eigen::VectorXd& u, const Eigen::VectorXd& ubar, Eigen::VectorXd& grad) const;
  /// Draws n rows of u and of its complement.
  void sample(std::size_t n, Rng& rng, Samples& u, Samples& ubar) const;
  const Params& params() const { return params_; }

 private:
  Params params_;
  std::optional<DispersionMatrix> corr_;
};

/// Pseudo-observations rank/n of each column (ties get the maximal rank).
Samples pseudo_observations(const Samples& data);

}  // namespace alloclab
