#include "alloclab/joint_model.hpp"

#include <cmath>
#include <limits>

#include "alloclab/errors.hpp"

namespace alloclab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

JointModel::JointModel(EllipticalModel ell) : law_(std::move(ell)) {
  dim_ = std::get<EllipticalModel>(law_).dim();
  if (dim_ < 2) throw ParameterError("joint model needs d >= 2");
  shift_ = Eigen::VectorXd::Zero(dim_);
}

JointModel::JointModel(std::vector<Margin> margins, CopulaModel copula)
    : law_(MarginCopula{std::move(margins), std::move(copula)}) {
  const auto& mc = std::get<MarginCopula>(law_);
  dim_ = static_cast<int>(mc.margins.size());
  if (dim_ < 2) throw ParameterError("joint model needs d >= 2");
  if (mc.copula.dim() != dim_) throw ShapeError("copula dimension differs from number of margins");
  shift_ = Eigen::VectorXd::Zero(dim_);
}

bool JointModel::has_density() const {
  if (is_elliptical()) return true;
  const auto& mc = std::get<MarginCopula>(law_);
  if (!mc.copula.has_density()) return false;
  for (const auto& m : mc.margins)
    if (!m.has_density()) return false;
  return true;
}

double JointModel::base_log_density(const Eigen::VectorXd& y) const {
  if (const auto* e = elliptical()) return e->log_density(y);
  const auto& mc = std::get<MarginCopula>(law_);
  Eigen::VectorXd u(dim_), ubar(dim_);
  double s = 0.0;
  for (int j = 0; j < dim_; ++j) {
    double lf = mc.margins[j].logpdf(y(j));
    if (lf == kNegInf) return kNegInf;
    s += lf;
    u(j) = mc.margins[j].cdf(y(j));
    ubar(j) = mc.margins[j].sf(y(j));
  }
  return s + mc.copula.log_density(u, ubar);
}

Eigen::VectorXd JointModel::base_grad(const Eigen::VectorXd& y) const {
  if (const auto* e = elliptical()) return e->log_density_grad(y);
  const auto& mc = std::get<MarginCopula>(law_);
  Eigen::VectorXd u(dim_), ubar(dim_), g(dim_), dc;
  for (int j = 0; j < dim_; ++j) {
    const auto& m = mc.margins[j];
    if (!(y(j) > m.lower_bound() && y(j) < m.upper_bound()))
      throw BoundaryError("gradient requested on the support boundary");
    u(j) = m.cdf(y(j));
    ubar(j) = m.sf(y(j));
  }
  mc.copula.log_density_du(u, ubar, dc);
  for (int j = 0; j < dim_; ++j) {
    const auto& m = mc.margins[j];
    g(j) = dc(j) * m.pdf(y(j)) + m.dlogpdf(y(j));
  }
  return g;
}

double JointModel::log_density(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw ShapeError("point dimension differs from model dimension");
  if (scale_ == 1.0 && shift_.isZero(0.0)) return base_log_density(x);
  return base_log_density((x - shift_) / scale_) - dim_ * std::log(scale_);
}

Eigen::VectorXd JointModel::log_density_grad(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw ShapeError("point dimension differs from model dimension");
  Eigen::VectorXd y = (x - shift_) / scale_;
  if (base_log_density(y) == kNegInf) throw BoundaryError("gradient requested off the support");
  return base_grad(y) / scale_;
}

Samples JointModel::sample(std::size_t n, std::uint64_t seed) const {
  if (n < 1) throw ParameterError("sample size must be positive");
  Rng rng = make_rng(seed);
  Samples out;
  if (const auto* e = elliptical()) {
    out = e->sample(n, rng);
  } else {
    const auto& mc = std::get<MarginCopula>(law_);
    Samples u, ubar;
    mc.copula.sample(n, rng, u, ubar);
    out.resize(n, dim_);
    for (std::size_t i = 0; i < n; ++i)
      for (int j = 0; j < dim_; ++j) out(i, j) = mc.margins[j].quantile_pair(u(i, j), ubar(i, j));
  }
  if (scale_ != 1.0 || !shift_.isZero(0.0)) {
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      out.row(i) = (shift_ + scale_ * out.row(i).transpose()).transpose();
  }
  return out;
}

std::vector<double> JointModel::lower_bounds() const {
  std::vector<double> l(dim_, kNegInf);
  if (const auto* mc = margin_copula())
    for (int j = 0; j < dim_; ++j) l[j] = shift_(j) + scale_ * mc->margins[j].lower_bound();
  return l;
}

JointModel JointModel::affine(const Eigen::VectorXd& shift, double scale) const {
  if (!(scale > 0)) throw ParameterError("affine scale must be positive");
  if (shift.size() != dim_) throw ShapeError("shift dimension differs from model dimension");
  JointModel out = *this;
  out.shift_ = shift + scale * shift_;
  out.scale_ = scale * scale_;
  return out;
}

double joint_logdensity(const JointModel& model, const Eigen::VectorXd& x) { return model.log_density(x); }

Eigen::VectorXd joint_logdensity_grad(const JointModel& model, const Eigen::VectorXd& x) {
  return model.log_density_grad(x);
}

Samples sample_joint(const JointModel& model, std::size_t n, std::uint64_t seed) {
  return model.sample(n, seed);
}

Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    double h = 1e-6 * (1.0 + std::abs(x(j)));
    y(j) = x(j) + h;
    double fp = f(y);
    y(j) = x(j) - h;
    double fm = f(y);
    y(j) = x(j);
    g(j) = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace alloclab
