#include "alloclab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "alloclab/errors.hpp"

namespace alloclab {

namespace {

std::size_t var_rank(std::size_t n, double p) {
  if (!(p > 0.0 && p < 1.0)) throw RangeError("risk level must lie in (0, 1)");
  if (static_cast<double>(n) * (1.0 - p) < 1.0 - 1e-9)
    throw SampleSizeError("sample too small for this risk level");
  auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * p - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace

double empirical_var(std::span<const double> samples, double p) {
  std::size_t k = var_rank(samples.size(), p);
  std::vector<double> v(samples.begin(), samples.end());
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
  return v[k - 1];
}

double empirical_es(std::span<const double> samples, double p) {
  const std::size_t n = samples.size();
  std::size_t k = var_rank(n, p);
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  double nd = static_cast<double>(n);
  double first = std::max(0.0, static_cast<double>(k) / nd - p);
  double tail = first * v[k - 1];
  for (std::size_t i = k; i < n; ++i) tail += v[i] / nd;
  return std::max(tail / (1.0 - p), v[k - 1]);
}

}  // namespace alloclab
