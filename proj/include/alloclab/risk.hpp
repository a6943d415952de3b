#pragma once

#include <span>

namespace alloclab {

/// Lower empirical quantile: order statistic ceil(n p).
double empirical_var(std::span<const double> samples, double p);
/// (1/(1-p)) * integral over (p, 1] of the empirical quantile function.
double empirical_es(std::span<const double> samples, double p);

}  // namespace alloclab
