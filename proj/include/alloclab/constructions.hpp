#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "alloclab/elliptical.hpp"
#include "alloclab/margin.hpp"

namespace alloclab {

/// (F_1^{-1}(u*), ..., F_d^{-1}(u*)) with sum K, u* found by bisection.
Eigen::VectorXd comonotone_allocation(const std::vector<Margin>& margins, double K);

/// Rows (F^{-1}(U), K - F^{-1}(U)) with U uniform on (0, F(K)).
Samples countermonotone_pair_sampler(const Margin& margin, double K, std::size_t n, std::uint64_t seed);

/// Equal mixture of Dir(a,a,b), Dir(a,b,a), Dir(b,a,a) scaled by K.
Samples complete_mix_dirichlet(double alpha, double beta, double K, std::size_t n, std::uint64_t seed);

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// Density with superlevel sets r(t) D, r(t) = a exp(-t/2), D a union of boxes around 0.
struct HomotheticModel {
  std::vector<Box> shape;
  double a;
  Eigen::VectorXd location;

  HomotheticModel(std::vector<Box> shape, double a, Eigen::VectorXd location);
  int dim() const { return static_cast<int>(location.size()); }
  /// Minkowski gauge of the box union.
  double gauge(const Eigen::VectorXd& z) const;
  double scaling(double t) const;
  double scaling_inverse(double rho) const;
};

/// Lebesgue measure of the box union.
double box_union_volume(const std::vector<Box>& boxes);

/// Integral over t of Leb(r(t) D).
double homothetic_normalization(const HomotheticModel& h);

/// f_D(x - mu); +inf at the location itself.
double homothetic_density(const HomotheticModel& h, const Eigen::VectorXd& x);

}  // namespace alloclab
