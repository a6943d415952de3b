#include "alloclab/conditional.hpp"

#include <cmath>
#include <limits>

#include "alloclab/errors.hpp"

namespace alloclab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

int SupportRegion::dim() const {
  if (const auto* f = std::get_if<FullSpace>(&region_)) return f->dim;
  return static_cast<int>(std::get<ShiftedSimplex>(region_).lower.size()) - 1;
}

bool SupportRegion::is_bounded() const {
  const auto* s = std::get_if<ShiftedSimplex>(&region_);
  if (!s) return false;
  for (double l : s->lower)
    if (!std::isfinite(l)) return false;
  return true;
}

bool SupportRegion::contains(const Eigen::VectorXd& xp) const {
  if (!xp.allFinite()) return false;
  const auto* s = std::get_if<ShiftedSimplex>(&region_);
  if (!s) return true;
  const auto dp = xp.size();
  for (Eigen::Index j = 0; j < dp; ++j)
    if (!(xp(j) > s->lower[j])) return false;
  return sequential_sum(xp) < s->capital - s->lower[dp];
}

SupportRegion conditional_support(const JointModel& model, double K) {
  auto l = model.lower_bounds();
  bool any_finite = false;
  for (double v : l) any_finite = any_finite || std::isfinite(v);
  if (!any_finite) return SupportRegion(FullSpace{model.dim() - 1});
  return SupportRegion(ShiftedSimplex{std::move(l), K});
}

double sequential_sum(const Eigen::Ref<const Eigen::VectorXd>& x) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) s += x(j);
  return s;
}

void close_sum(Eigen::Ref<Eigen::VectorXd> x, double K) {
  const auto d = x.size();
  double head = sequential_sum(x.head(d - 1));
  double last = K - head;
  for (int it = 0; it < 64 && head + last != K; ++it)
    last = std::nextafter(last, head + last < K ? std::numeric_limits<double>::infinity()
                                                : -std::numeric_limits<double>::infinity());
  x(d - 1) = last;
}

ConditionalTarget::ConditionalTarget(JointModel model, double K)
    : model_(std::move(model)), K_(K), support_(conditional_support(model_, K)) {}

Eigen::VectorXd ConditionalTarget::lift(const Eigen::VectorXd& xp) const {
  Eigen::VectorXd x(xp.size() + 1);
  x.head(xp.size()) = xp;
  close_sum(x, K_);
  return x;
}

double ConditionalTarget::log_density(const Eigen::VectorXd& xp) const {
  if (!support_.contains(xp)) return kNegInf;
  return model_.log_density(lift(xp));
}

Eigen::VectorXd ConditionalTarget::log_density_grad(const Eigen::VectorXd& xp) const {
  if (!support_.contains(xp)) throw BoundaryError("gradient requested outside the conditional support");
  Eigen::VectorXd g = model_.log_density_grad(lift(xp));
  const auto dp = xp.size();
  return g.head(dp).array() - g(dp);
}

ConditionalTarget conditional_target(const JointModel& model, double K) { return ConditionalTarget(model, K); }

double EllipticalConditional::log_density(const Eigen::VectorXd& xp) const {
  Eigen::LLT<Eigen::MatrixXd> llt(dispersion);
  Eigen::VectorXd z = llt.matrixL().solve(xp - location);
  double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return generator.log_norm() - 0.5 * log_det + generator.log_g(0.5 * z.squaredNorm());
}

EllipticalConditional elliptical_condition(const EllipticalModel& ell, double K) {
  const int d = ell.dim();
  const int dp = d - 1;
  if (dp < 1) throw ParameterError("conditioning needs d >= 2");
  const Eigen::MatrixXd& S = ell.dispersion().matrix();
  Eigen::VectorXd s1 = S.rowwise().sum();
  double var_s = s1.sum();
  double mu_s = ell.location().sum();
  Eigen::VectorXd s1p = s1.head(dp);
  EllipticalConditional out{
      ell.location().head(dp) + ((K - mu_s) / var_s) * s1p,
      S.topLeftCorner(dp, dp) - s1p * s1p.transpose() / var_s,
      0.5 * (K - mu_s) * (K - mu_s) / var_s,
      ell.generator(),
      std::nullopt,
  };
  out.generator = DensityGenerator::shifted(ell.generator(), out.delta, dp);
  if (const auto* t = std::get_if<StudentTGen>(&ell.generator().base()); t && ell.generator().shift() == 0.0) {
    out.t_closure = StudentTClosure{t->nu + 1.0, (t->nu + 2.0 * out.delta) / (t->nu + 1.0) * out.dispersion};
  }
  return out;
}

}  // namespace alloclab
