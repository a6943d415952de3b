#pragma once

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "alloclab/joint_model.hpp"

namespace alloclab {

struct FullSpace {
  int dim;
};

/// {x_j > l_j for j < d, sum_j x_j < K - l_d}; infinite l_j leave that face open.
struct ShiftedSimplex {
  std::vector<double> lower;
  double capital;
};

class SupportRegion {
 public:
  using Region = std::variant<FullSpace, ShiftedSimplex>;

  SupportRegion(Region region) : region_(std::move(region)) {}

  int dim() const;
  bool contains(const Eigen::VectorXd& xp) const;
  bool is_simplex() const { return std::holds_alternative<ShiftedSimplex>(region_); }
  /// True when every lower bound is finite (bounded simplex).
  bool is_bounded() const;
  const Region& region() const { return region_; }

 private:
  Region region_;
};

SupportRegion conditional_support(const JointModel& model, double K);

/// Sets the last entry so that the left-to-right floating sum equals K exactly.
void close_sum(Eigen::Ref<Eigen::VectorXd> x, double K);
double sequential_sum(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Unnormalized law of X' = (X_1..X_{d-1}) given X_1 + ... + X_d = K.
class ConditionalTarget {
 public:
  ConditionalTarget(JointModel model, double K);

  int dim() const { return model_.dim() - 1; }
  double capital() const { return K_; }
  const JointModel& model() const { return model_; }
  const SupportRegion& support() const { return support_; }

  Eigen::VectorXd lift(const Eigen::VectorXd& xp) const;
  double log_density(const Eigen::VectorXd& xp) const;
  Eigen::VectorXd log_density_grad(const Eigen::VectorXd& xp) const;

 private:
  JointModel model_;
  double K_;
  SupportRegion support_;
};

ConditionalTarget conditional_target(const JointModel& model, double K);

struct StudentTClosure {
  double df;
  Eigen::MatrixXd dispersion;
};

/// Closed-form conditional law of an elliptical vector given its sum.
struct EllipticalConditional {
  Eigen::VectorXd location;
  Eigen::MatrixXd dispersion;
  double delta;
  DensityGenerator generator;
  std::optional<StudentTClosure> t_closure;

  double log_density(const Eigen::VectorXd& xp) const;
};

EllipticalConditional elliptical_condition(const EllipticalModel& ell, double K);

}  // namespace alloclab
