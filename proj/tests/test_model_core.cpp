#include <cmath>
#include <numbers>
#include <vector>

#include <doctest.h>

#include "alloclab/copula.hpp"
#include "alloclab/elliptical.hpp"
#include "alloclab/errors.hpp"
#include "alloclab/joint_model.hpp"
#include "alloclab/margin.hpp"
#include "alloclab/risk.hpp"
#include "alloclab/rng.hpp"
#include "oracles.hpp"

using namespace alloclab;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd core_corr() {
  MatrixXd p(3, 3);
  p << 1, 1.0 / 3, 2.0 / 3, 1.0 / 3, 1, 1.0 / 3, 2.0 / 3, 1.0 / 3, 1;
  return p;
}

MatrixXd exchangeable_corr() {
  MatrixXd p(3, 3);
  p << 1, 0.5, 0.5, 0.5, 1, 0.5, 0.5, 0.5, 1;
  return p;
}

JointModel t_joint(const MatrixXd& p, double nu = 5) {
  return JointModel(EllipticalModel(VectorXd::Zero(p.rows()), DispersionMatrix(p),
                                    DensityGenerator::student_t(nu, static_cast<int>(p.rows()))));
}

}  // namespace

TEST_SUITE("model_core") {

TEST_CASE("lomax quantile matches survival inversion") {
  Margin m(Lomax{3, 5});
  double closed = 5 * (std::pow(0.01, -1.0 / 3) - 1);
  CHECK(margin_quantile(m, 0.99) == doctest::Approx(closed).epsilon(1e-12));
  CHECK(closed == doctest::Approx(18.2078).epsilon(1e-5));
  double by_bisection = oracle::bisect([&](double x) { return m.cdf(x) - 0.99; }, 0.0, 1000.0, 1e-13);
  CHECK(margin_quantile(m, 0.99) == doctest::Approx(by_bisection).epsilon(1e-10));
  CHECK(margin_quantile(m, 0.0) == 0.0);
}

TEST_CASE("student t quantile against quadrature inversion") {
  Margin m(StudentT{5});
  double q = margin_quantile(m, 0.99);
  CHECK(q == doctest::Approx(3.36493).epsilon(2e-6));
  CHECK(q == doctest::Approx(oracle::t_quantile(0.99, 5)).epsilon(1e-8));
  CHECK(m.cdf(2.0) == doctest::Approx(oracle::t_cdf(2.0, 5)).epsilon(1e-10));
}

TEST_CASE("quantile round trips") {
  std::vector<Margin> ms{Margin(Lomax{2.5, 5}), Margin(ParetoI{3, 2}), Margin(StudentT{5, 1, 2}),
                         Margin(Normal{1, 3}), Margin(Uniform{-1, 4})};
  for (const auto& m : ms) {
    for (double p : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.99, 0.999999}) {
      INFO(m.family() << " p=" << p);
      CHECK(std::abs(m.cdf(m.quantile(p)) - p) < 1e-10);
      CHECK(std::abs(m.sf(m.quantile_upper(1 - p)) - (1 - p)) < 1e-10);
    }
  }
}

TEST_CASE("invalid margin parameters") {
  CHECK_THROWS_AS(Margin(Lomax{0, 5}), ParameterError);
  CHECK_THROWS_AS(Margin(Lomax{3, -1}), ParameterError);
  CHECK_THROWS_AS(Margin(StudentT{-2}), ParameterError);
  CHECK_THROWS_AS(Margin(Normal{0, 0}), ParameterError);
  CHECK_THROWS_AS(Margin(Empirical{{}}), DataError);
  CHECK_THROWS_AS(margin_quantile(Margin(Normal{}), 1.5), RangeError);
}

TEST_CASE("margin log density derivative") {
  std::vector<Margin> ms{Margin(Lomax{2.5, 5}), Margin(StudentT{5, 0, 1.5}), Margin(Normal{2, 0.5})};
  for (const auto& m : ms)
    for (double x : {0.3, 1.7, 6.0}) {
      double h = 1e-6 * (1 + x);
      double fd = (m.logpdf(x + h) - m.logpdf(x - h)) / (2 * h);
      CHECK(std::abs(m.dlogpdf(x) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
}

TEST_CASE("bivariate normal peak") {
  JointModel n2(EllipticalModel(VectorXd::Zero(2), DispersionMatrix(MatrixXd::Identity(2, 2)),
                                DensityGenerator::normal(2)));
  CHECK(joint_logdensity(n2, VectorXd::Zero(2)) == doctest::Approx(std::log(1 / (2 * std::numbers::pi))));
  CHECK(joint_logdensity(n2, VectorXd::Zero(2)) == doctest::Approx(-1.83788).epsilon(1e-5));
  VectorXd x(2);
  x << 1, 0;
  VectorXd g = joint_logdensity_grad(n2, x);
  CHECK(g(0) == doctest::Approx(-1.0));
  CHECK(g(1) == doctest::Approx(0.0));
}

TEST_CASE("independence copula factorizes") {
  std::vector<Margin> ms{Margin(Lomax{3, 5}), Margin(Lomax{3, 5})};
  JointModel m(ms, CopulaModel(IndependenceCopula{2}));
  for (double a : {0.5, 3.0, 12.0}) {
    VectorXd x(2);
    x << a, 2 * a + 1;
    CHECK(joint_logdensity(m, x) == doctest::Approx(ms[0].logpdf(x(0)) + ms[1].logpdf(x(1))).epsilon(1e-12));
  }
}

TEST_CASE("trivariate t density matches the gamma closed form") {
  auto m = t_joint(exchangeable_corr());
  VectorXd x = VectorXd::Ones(3);
  double ref = oracle::mvt_logpdf(x, VectorXd::Zero(3), exchangeable_corr(), 5);
  CHECK(joint_logdensity(m, x) == doctest::Approx(ref).epsilon(1e-12));
  VectorXd y(3);
  y << -0.4, 2.2, 0.9;
  CHECK(joint_logdensity(m, y) == doctest::Approx(oracle::mvt_logpdf(y, VectorXd::Zero(3), exchangeable_corr(), 5)));
}

TEST_CASE("gradients agree with finite differences") {
  auto t3 = t_joint(exchangeable_corr());
  VectorXd x = VectorXd::Ones(3);
  auto f = [&](const VectorXd& z) { return joint_logdensity(t3, z); };
  VectorXd fd = numeric_gradient(f, x);
  VectorXd g = joint_logdensity_grad(t3, x);
  CHECK((g - fd).norm() / fd.norm() < 1e-5);
  CHECK(joint_logdensity_grad(t3, VectorXd::Zero(3)).norm() < 1e-14);

  MatrixXd p(3, 3);
  p << 1, 0.8, 0.5, 0.8, 1, 0.8, 0.5, 0.8, 1;
  JointModel m1({Margin(Lomax{2.5, 5}), Margin(Lomax{2.75, 5}), Margin(Lomax{3, 5})},
                CopulaModel(StudentTCopula{5, p}));
  auto f1 = [&](const VectorXd& z) { return joint_logdensity(m1, z); };
  for (auto pt : {VectorXd::Constant(3, 2.0), VectorXd::Constant(3, 13.0)}) {
    VectorXd a = joint_logdensity_grad(m1, pt);
    VectorXd b = numeric_gradient(f1, pt);
    CHECK((a - b).norm() / b.norm() < 1e-5);
  }
  VectorXd edge(3);
  edge << 0, 1, 1;
  CHECK_THROWS_AS(joint_logdensity_grad(m1, edge), BoundaryError);
}

TEST_CASE("t copula with Pareto margins reproduces Kendall's tau") {
  MatrixXd p(2, 2);
  p << 1, 0.8, 0.8, 1;
  JointModel m({Margin(Lomax{2.5, 5}), Margin(Lomax{2.75, 5})}, CopulaModel(StudentTCopula{5, p}));
  Samples s = sample_joint(m, 3000, 11);
  std::vector<double> a(s.rows()), b(s.rows());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    a[i] = s(i, 0);
    b[i] = s(i, 1);
  }
  double tau = 2 / std::numbers::pi * std::asin(0.8);
  CHECK(tau == doctest::Approx(0.5903).epsilon(1e-4));
  CHECK(std::abs(oracle::kendall_tau(a, b) - tau) < 0.02);
}

TEST_CASE("independence copula sample is uncorrelated") {
  JointModel m({Margin(Normal{}), Margin(Normal{})}, CopulaModel(IndependenceCopula{2}));
  Samples s = sample_joint(m, 100000, 5);
  CHECK(std::abs(oracle::pearson(s.col(0), s.col(1))) < 0.02);
}

TEST_CASE("sampling is deterministic per seed") {
  auto m = t_joint(core_corr());
  Samples a = sample_joint(m, 1000, 42);
  Samples b = sample_joint(m, 1000, 42);
  CHECK(a == b);
  CHECK(!(a == sample_joint(m, 1000, 43)));
}

TEST_CASE("empirical resample copula needs data") {
  CHECK_THROWS_AS(CopulaModel(EmpiricalResampleCopula{Samples(0, 2)}), DataError);
}

TEST_CASE("empirical VaR and ES") {
  std::vector<double> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i + 1;
  CHECK(empirical_var(v, 0.95) == 95.0);
  CHECK(empirical_es(v, 0.95) == doctest::Approx(98.0).epsilon(1e-12));
  std::vector<double> c(50, 3.25);
  CHECK(empirical_var(c, 0.9) == 3.25);
  CHECK(empirical_es(c, 0.9) == doctest::Approx(3.25));
  CHECK_THROWS_AS(empirical_var(std::vector<double>{1.0, 2.0}, 0.999), SampleSizeError);
}

TEST_CASE("VaR of the aggregate t5 loss") {
  auto m = t_joint(core_corr());
  Samples s = sample_joint(m, 1'000'000, 3);
  VectorXd sum = s.rowwise().sum();
  double var = empirical_var(std::span<const double>(sum.data(), sum.size()), 0.99);
  double exact = std::sqrt(17.0 / 3.0) * oracle::t_quantile(0.99, 5);
  CHECK(exact == doctest::Approx(8.010).epsilon(1e-3));
  CHECK(std::abs(var - exact) < 0.1);
}

TEST_CASE("affine push-forward") {
  auto m = t_joint(core_corr());
  VectorXd c(3);
  c << 1, -2, 0.5;
  auto shifted = m.affine(c, 2.0);
  VectorXd x(3);
  x << 0.3, 0.1, -0.7;
  CHECK(joint_logdensity(shifted, c + 2.0 * x) == doctest::Approx(joint_logdensity(m, x) - 3 * std::log(2.0)));
  CHECK_THROWS_AS(m.affine(c, 0.0), ParameterError);
}

}  // TEST_SUITE
