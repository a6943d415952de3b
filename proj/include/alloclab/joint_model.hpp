#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "alloclab/copula.hpp"
#include "alloclab/elliptical.hpp"
#include "alloclab/margin.hpp"

namespace alloclab {

struct MarginCopula {
  std::vector<Margin> margins;
  CopulaModel copula;
};

/// A d-dimensional loss law, optionally pushed through x -> shift + scale * x.
class JointModel {
 public:
  using Law = std::variant<EllipticalModel, MarginCopula>;

  explicit JointModel(EllipticalModel ell);
  JointModel(std::vector<Margin> margins, CopulaModel copula);

  int dim() const { return dim_; }
  bool has_density() const;
  bool is_elliptical() const { return std::holds_alternative<EllipticalModel>(law_); }
  const EllipticalModel* elliptical() const { return std::get_if<EllipticalModel>(&law_); }
  const MarginCopula* margin_copula() const { return std::get_if<MarginCopula>(&law_); }
  const Law& law() const { return law_; }

  double log_density(const Eigen::VectorXd& x) const;
  Eigen::VectorXd log_density_grad(const Eigen::VectorXd& x) const;
  Samples sample(std::size_t n, std::uint64_t seed) const;
  /// Declared lower support endpoints (-inf where unbounded).
  std::vector<double> lower_bounds() const;

  /// Law of shift + scale * X.
  JointModel affine(const Eigen::VectorXd& shift, double scale) const;
  const Eigen::VectorXd& shift() const { return shift_; }
  double scale() const { return scale_; }

 private:
  double base_log_density(const Eigen::VectorXd& y) const;
  Eigen::VectorXd base_grad(const Eigen::VectorXd& y) const;

  Law law_;
  int dim_;
  Eigen::VectorXd shift_;
  double scale_ = 1.0;
};

double joint_logdensity(const JointModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd joint_logdensity_grad(const JointModel& model, const Eigen::VectorXd& x);
Samples sample_joint(const JointModel& model, std::size_t n, std::uint64_t seed);

/// Central finite-difference gradient with step 1e-6 (1 + |x_j|).
Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x);

}  // namespace alloclab
