#pragma once

#include <string>
#include <variant>
#include <vector>

namespace alloclab {

/// Pareto type II: survival (1 + x/scale)^(-shape) on [0, inf).
struct Lomax {
  double shape;
  double scale;
};

/// Pareto type I: survival (minimum/x)^shape on [minimum, inf).
struct ParetoI {
  double shape;
  double minimum;
};

struct StudentT {
  double df;
  double location = 0.0;
  double scale = 1.0;
};

struct Normal {
  double mean = 0.0;
  double sd = 1.0;
};

struct Uniform {
  double lower;
  double upper;
};

/// Finite mixture of uniform laws.
struct UniformMixture {
  std::vector<double> weights;
  std::vector<Uniform> parts;
};

struct Empirical {
  std::vector<double> sorted;
};

class Margin {
 public:
  using Params = std::variant<Lomax, ParetoI, StudentT, Normal, Uniform, UniformMixture, Empirical>;

  Margin(Params params);

  double cdf(double x) const;
  /// 1 - cdf(x) without cancellation.
  double sf(double x) const;
  double pdf(double x) const;
  double logpdf(double x) const;
  /// d/dx log f(x) inside the support.
  double dlogpdf(double x) const;
  double quantile(double p) const;
  /// Quantile at probability 1 - q, accurate for small q.
  double quantile_upper(double q) const;
  /// Picks the accurate branch given both p and its complement q = 1 - p.
  double quantile_pair(double p, double q) const;

  double lower_bound() const;
  double upper_bound() const;
  bool has_density() const;
  std::string family() const;
  const Params& params() const { return params_; }

 private:
  Params params_;
};

double margin_quantile(const Margin& margin, double p);

}  // namespace alloclab
