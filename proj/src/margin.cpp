#include "alloclab/margin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <gsl/gsl_cdf.h>

#include "alloclab/errors.hpp"

namespace alloclab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool ok, const char* what) {
  if (!ok) throw ParameterError(what);
}

double mixture_cdf(const UniformMixture& m, double x) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.parts.size(); ++i) {
    const auto& u = m.parts[i];
    s += m.weights[i] * std::clamp((x - u.lower) / (u.upper - u.lower), 0.0, 1.0);
  }
  return std::min(s, 1.0);
}

double mixture_pdf(const UniformMixture& m, double x) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.parts.size(); ++i) {
    const auto& u = m.parts[i];
    if (x >= u.lower && x <= u.upper) s += m.weights[i] / (u.upper - u.lower);
  }
  return s;
}

double mixture_quantile(const UniformMixture& m, double p) {
  double lo = m.parts.front().lower, hi = m.parts.front().upper;
  for (const auto& u : m.parts) {
    lo = std::min(lo, u.lower);
    hi = std::max(hi, u.upper);
  }
  if (p <= 0.0) return lo;
  if (p >= 1.0) return hi;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (mixture_cdf(m, mid) >= p) hi = mid; else lo = mid;
  }
  return hi;
}

std::size_t empirical_rank(std::size_t n, double p) {
  auto k = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * p - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

}  // namespace

Margin::Margin(Params params) : params_(std::move(params)) {
  std::visit(Overloaded{
                 [](const Lomax& m) {
                   require(m.shape > 0 && m.scale > 0, "Lomax requires shape > 0 and scale > 0");
                 },
                 [](const ParetoI& m) {
                   require(m.shape > 0 && m.minimum > 0, "ParetoI requires shape > 0 and minimum > 0");
                 },
                 [](const StudentT& m) {
                   require(m.df > 0 && m.scale > 0, "StudentT requires df > 0 and scale > 0");
                 },
                 [](const Normal& m) { require(m.sd > 0, "Normal requires sd > 0"); },
                 [](const Uniform& m) { require(m.lower < m.upper, "Uniform requires lower < upper"); },
                 [](const UniformMixture& m) {
                   require(!m.parts.empty() && m.parts.size() == m.weights.size(),
                           "UniformMixture needs one weight per part");
                   double s = 0.0;
                   for (std::size_t i = 0; i < m.parts.size(); ++i) {
                     require(m.weights[i] > 0, "UniformMixture weights must be positive");
                     require(m.parts[i].lower < m.parts[i].upper, "Uniform requires lower < upper");
                     s += m.weights[i];
                   }
                   require(std::abs(s - 1.0) < 1e-12, "UniformMixture weights must sum to 1");
                 },
                 [](Empirical& m) {
                   if (m.sorted.empty()) throw DataError("Empirical margin needs a nonempty sample");
                   std::sort(m.sorted.begin(), m.sorted.end());
                 },
             },
             params_);
}

double Margin::cdf(double x) const {
  return std::visit(
      Overloaded{
          [x](const Lomax& m) { return x <= 0 ? 0.0 : -std::expm1(-m.shape * std::log1p(x / m.scale)); },
          [x](const ParetoI& m) { return x <= m.minimum ? 0.0 : -std::expm1(m.shape * std::log(m.minimum / x)); },
          [x](const StudentT& m) {
            return gsl_cdf_tdist_P((x - m.location) / m.scale, m.df);
          },
          [x](const Normal& m) { return boost::math::cdf(boost::math::normal(m.mean, m.sd), x); },
          [x](const Uniform& m) { return std::clamp((x - m.lower) / (m.upper - m.lower), 0.0, 1.0); },
          [x](const UniformMixture& m) { return mixture_cdf(m, x); },
          [x](const Empirical& m) {
            auto k = std::upper_bound(m.sorted.begin(), m.sorted.end(), x) - m.sorted.begin();
            return static_cast<double>(k) / static_cast<double>(m.sorted.size());
          },
      },
      params_);
}

double Margin::sf(double x) const {
  return std::visit(
      Overloaded{
          [x](const Lomax& m) { return x <= 0 ? 1.0 : std::exp(-m.shape * std::log1p(x / m.scale)); },
          [x](const ParetoI& m) { return x <= m.minimum ? 1.0 : std::pow(m.minimum / x, m.shape); },
          [x](const StudentT& m) {
            return gsl_cdf_tdist_Q((x - m.location) / m.scale, m.df);
          },
          [x](const Normal& m) {
            return boost::math::cdf(boost::math::complement(boost::math::normal(m.mean, m.sd), x));
          },
          [this, x](const auto&) { return 1.0 - cdf(x); },
      },
      params_);
}

double Margin::logpdf(double x) const {
  return std::visit(
      Overloaded{
          [x](const Lomax& m) {
            if (x < 0) return -kInf;
            return std::log(m.shape / m.scale) - (m.shape + 1.0) * std::log1p(x / m.scale);
          },
          [x](const ParetoI& m) {
            if (x < m.minimum) return -kInf;
            return std::log(m.shape) + m.shape * std::log(m.minimum) - (m.shape + 1.0) * std::log(x);
          },
          [x](const StudentT& m) {
            double z = (x - m.location) / m.scale;
            return std::lgamma(0.5 * (m.df + 1.0)) - std::lgamma(0.5 * m.df) -
                   0.5 * std::log(m.df * M_PI) - std::log(m.scale) -
                   0.5 * (m.df + 1.0) * std::log1p(z * z / m.df);
          },
          [x](const Normal& m) {
            double z = (x - m.mean) / m.sd;
            return -0.5 * z * z - std::log(m.sd) - 0.5 * std::log(2.0 * M_PI);
          },
          [x](const Uniform& m) {
            return (x < m.lower || x > m.upper) ? -kInf : -std::log(m.upper - m.lower);
          },
          [x](const UniformMixture& m) { return std::log(mixture_pdf(m, x)); },
          [](const Empirical&) -> double {
            throw NotAvailableError("Empirical margin has no density");
          },
      },
      params_);
}

double Margin::pdf(double x) const { return std::exp(logpdf(x)); }

double Margin::dlogpdf(double x) const {
  return std::visit(Overloaded{
                        [x](const Lomax& m) { return -(m.shape + 1.0) / (m.scale + x); },
                        [x](const ParetoI& m) { return -(m.shape + 1.0) / x; },
                        [x](const StudentT& m) {
                          double z = (x - m.location) / m.scale;
                          return -(m.df + 1.0) * z / (m.scale * (m.df + z * z));
                        },
                        [x](const Normal& m) { return -(x - m.mean) / (m.sd * m.sd); },
                        [](const Uniform&) { return 0.0; },
                        [](const UniformMixture&) { return 0.0; },
                        [](const Empirical&) -> double {
                          throw NotAvailableError("Empirical margin has no density");
                        },
                    },
                    params_);
}

double Margin::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw RangeError("probability outside [0, 1]");
  return std::visit(
      Overloaded{
          [p](const Lomax& m) {
            if (p == 1.0) return kInf;
            return m.scale * std::expm1(-std::log1p(-p) / m.shape);
          },
          [p](const ParetoI& m) {
            if (p == 1.0) return kInf;
            return m.minimum * std::exp(-std::log1p(-p) / m.shape);
          },
          [p](const StudentT& m) {
            if (p == 0.0 || p == 1.0) throw RangeError("StudentT quantile needs 0 < p < 1");
            return m.location + m.scale * boost::math::quantile(boost::math::students_t(m.df), p);
          },
          [p](const Normal& m) {
            if (p == 0.0 || p == 1.0) throw RangeError("Normal quantile needs 0 < p < 1");
            return boost::math::quantile(boost::math::normal(m.mean, m.sd), p);
          },
          [p](const Uniform& m) { return m.lower + p * (m.upper - m.lower); },
          [p](const UniformMixture& m) { return mixture_quantile(m, p); },
          [p](const Empirical& m) {
            if (p == 0.0) return m.sorted.front();
            return m.sorted[empirical_rank(m.sorted.size(), p) - 1];
          },
      },
      params_);
}

double Margin::quantile_upper(double q) const {
  if (!(q >= 0.0 && q <= 1.0)) throw RangeError("probability outside [0, 1]");
  return std::visit(
      Overloaded{
          [q](const Lomax& m) {
            if (q == 0.0) return kInf;
            return m.scale * std::expm1(-std::log(q) / m.shape);
          },
          [q](const ParetoI& m) {
            if (q == 0.0) return kInf;
            return m.minimum * std::exp(-std::log(q) / m.shape);
          },
          [q](const StudentT& m) {
            if (q == 0.0 || q == 1.0) throw RangeError("StudentT quantile needs 0 < p < 1");
            return m.location + m.scale * boost::math::quantile(
                                              boost::math::complement(boost::math::students_t(m.df), q));
          },
          [q](const Normal& m) {
            if (q == 0.0 || q == 1.0) throw RangeError("Normal quantile needs 0 < p < 1");
            return boost::math::quantile(boost::math::complement(boost::math::normal(m.mean, m.sd), q));
          },
          [q](const Uniform& m) { return m.upper - q * (m.upper - m.lower); },
          [this, q](const auto&) { return quantile(1.0 - q); },
      },
      params_);
}

double Margin::quantile_pair(double p, double q) const {
  return p <= 0.5 ? quantile(p) : quantile_upper(q);
}

double Margin::lower_bound() const {
  return std::visit(Overloaded{
                        [](const Lomax&) { return 0.0; },
                        [](const ParetoI& m) { return m.minimum; },
                        [](const StudentT&) { return -kInf; },
                        [](const Normal&) { return -kInf; },
                        [](const Uniform& m) { return m.lower; },
                        [](const UniformMixture& m) {
                          double lo = kInf;
                          for (const auto& u : m.parts) lo = std::min(lo, u.lower);
                          return lo;
                        },
                        [](const Empirical& m) { return m.sorted.front(); },
                    },
                    params_);
}

double Margin::upper_bound() const {
  return std::visit(Overloaded{
                        [](const Uniform& m) { return m.upper; },
                        [](const UniformMixture& m) {
                          double hi = -kInf;
                          for (const auto& u : m.parts) hi = std::max(hi, u.upper);
                          return hi;
                        },
                        [](const Empirical& m) { return m.sorted.back(); },
                        [](const auto&) { return kInf; },
                    },
                    params_);
}

bool Margin::has_density() const { return !std::holds_alternative<Empirical>(params_); }

std::string Margin::family() const {
  static const char* names[] = {"lomax", "pareto1", "student_t", "normal", "uniform", "uniform_mixture",
                                "empirical"};
  return names[params_.index()];
}

double margin_quantile(const Margin& margin, double p) {
  if (p == 0.0 && !std::isfinite(margin.lower_bound()))
    throw RangeError("p = 0 needs a finite lower endpoint");
  if (p == 1.0 && !std::isfinite(margin.upper_bound()))
    throw RangeError("p = 1 needs a finite upper endpoint");
  return margin.quantile(p);
}

}  // namespace alloclab
