// Acceptance checks. One line per criterion; exit status is nonzero when any selected criterion fails.
// Usage: acceptance [--only N]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "alloclab/allocation.hpp"
#include "alloclab/conditional.hpp"
#include "alloclab/config.hpp"
#include "alloclab/constructions.hpp"
#include "alloclab/copula.hpp"
#include "alloclab/diagnostics.hpp"
#include "alloclab/experiment.hpp"
#include "alloclab/margin.hpp"
#include "alloclab/modes.hpp"
#include "alloclab/risk.hpp"
#include "alloclab/rng.hpp"
#include "alloclab/samplers.hpp"
#include "oracles.hpp"

using namespace alloclab;
using Eigen::MatrixXd;
using Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [FAIL " << what << "]";
    }
  }
};

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string fmt(const VectorXd& v, int prec = 3) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v(i), prec);
  return s + ")";
}

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(v.size());
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Samples rows(std::initializer_list<VectorXd> r) {
  Samples out(r.size(), r.begin()->size());
  Eigen::Index i = 0;
  for (const auto& x : r) out.row(i++) = x.transpose();
  return out;
}

MatrixXd core_corr() {
  MatrixXd p(3, 3);
  p << 1, 1.0 / 3, 2.0 / 3, 1.0 / 3, 1, 1.0 / 3, 2.0 / 3, 1.0 / 3, 1;
  return p;
}

JointModel t5_core() {
  return JointModel(
      EllipticalModel(VectorXd::Zero(3), DispersionMatrix(core_corr()), DensityGenerator::student_t(5, 3)));
}

MatrixXd corr(double a, double b, double c) {
  MatrixXd p(3, 3);
  p << 1, a, b, a, 1, c, b, c, 1;
  return p;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / "alloclab_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ExperimentConfig shipped(const std::string& name) {
  auto cfg = load_config(fs::path(ALLOCLAB_CONFIG_DIR) / (name + ".cfg"));
  cfg.output = scratch(name);
  return cfg;
}

/// Modes sorted by decreasing first coordinate.
std::vector<ModeSummary> by_first(std::vector<ModeSummary> m) {
  std::sort(m.begin(), m.end(), [](const auto& a, const auto& b) { return a.capital(0) > b.capital(0); });
  return m;
}

void within(Outcome& o, const std::string& label, const VectorXd& got, const VectorXd& want, const VectorXd& tol) {
  bool ok = ((got - want).cwiseAbs().array() <= tol.array()).all();
  o.detail << " " << label << " " << fmt(got) << " vs " << fmt(want) << (ok ? "" : " OUT");
  o.require(ok, label + " outside tolerance");
}

// ---------------------------------------------------------------------------------------------

Outcome c1_elliptical_oracle() {
  Outcome o;
  auto model = t5_core();
  Samples cal = model.sample(1'000'000, 101);
  VectorXd s = cal.rowwise().sum();
  double K = empirical_var(std::span<const double>(s.data(), s.size()), 0.99);
  auto exact = oracle::condition_on_sum(VectorXd::Zero(3), core_corr(), K);
  VectorXd want(3);
  want << exact.mu, K - exact.mu.sum();
  o.detail << "K=" << fmt(K) << " closed form " << fmt(want);

  auto check = [&](const std::string& name, const VectorXd& est, const VectorXd& se) {
    bool ok = ((est - want).cwiseAbs().array() <= 3 * se.array()).all();
    o.detail << "; " << name << " " << fmt(est) << " se " << fmt(se);
    o.require(ok, name);
  };

  auto slab = slab_sample(model, K, SlabConfig{0.01 * K, 4000}, 102);
  auto es = euler_allocation(slab.rows, K);
  check("slab", es.capital, es.se);

  ConditionalTarget target(model, K);
  auto mh = mh_chain(target, MHConfig{RandomWalk{VectorXd::Constant(2, 1.2)}, 120000, 10000, 1, 103});
  VectorXd ess(3);
  ess << mh.diagnostics.ess(0), mh.diagnostics.ess(1), mh.diagnostics.ess.minCoeff();
  auto em = euler_allocation(lift_rows(mh.states, K), K, &ess);
  check("mh", em.capital, em.se);

  auto hmc = hmc_reflect_chain(target, Polytope::whole_hyperplane(3, K), HMCConfig{0.3, 10, 21000, 1000, 104});
  ess << hmc.diagnostics.ess(0), hmc.diagnostics.ess(1), hmc.diagnostics.ess.minCoeff();
  auto eh = euler_allocation(lift_rows(hmc.states, K), K, &ess);
  check("hmc", eh.capital, eh.se);
  return o;
}

Outcome c2_t_closure() {
  Outcome o;
  auto model = t5_core();
  const double K = 8.010;
  ConditionalTarget target(model, K);
  auto exact = oracle::condition_on_sum(VectorXd::Zero(3), core_corr(), K);
  MatrixXd tilde = (5 + 2 * exact.delta) / 6 * exact.sigma;
  Rng rng = make_rng(202);
  std::normal_distribution<double> z;
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    VectorXd x = exact.mu + 2 * vec({z(rng), z(rng)});
    VectorXd y = exact.mu + 2 * vec({z(rng), z(rng)});
    double lib = target.log_density(x) - target.log_density(y);
    double ref = oracle::mvt_logpdf(x, exact.mu, tilde, 6) - oracle::mvt_logpdf(y, exact.mu, tilde, 6);
    worst = std::max(worst, std::abs(std::expm1(lib - ref)));
  }
  o.detail << "max relative error of density ratios " << worst;
  o.require(worst < 1e-8, "ratio error");
  return o;
}

struct StudyRow {
  std::string config;
  VectorXd euler, euler_se;
  std::vector<VectorXd> modes, mode_se;
};

Outcome c3_four_models() {
  Outcome o;
  std::vector<StudyRow> table{
      {"m1",
       vec({15.549, 13.889, 10.562}),
       vec({0.336, 0.157, 0.288}),
       {vec({15.849, 14.434, 9.718})},
       {vec({0.482, 0.213, 0.356})}},
      {"m2",
       vec({16.228, 13.042, 10.562}),
       vec({0.399, 0.355, 0.288}),
       {vec({17.689, 12.481, 9.830})},
       {vec({0.759, 0.663, 0.475})}},
      {"m3",
       vec({17.479, 11.368, 10.562}),
       vec({0.517, 0.530, 0.288}),
       {vec({25.678, 3.107, 11.215}), vec({2.639, 35.275, 2.086})},
       {vec({1.185, 0.278, 1.205}), vec({0.973, 1.306, 0.424})}},
      {"m4",
       vec({19.062, 9.272, 10.562}),
       vec({0.556, 0.614, 0.288}),
       {vec({28.353, 0.684, 10.962}), vec({0.710, 38.385, 0.905})},
       {vec({2.125, 1.646, 2.154}), vec({1.719, 3.537, 2.705})}},
  };
  for (const auto& row : table) {
    auto cfg = shipped(row.config);
    auto res = run_experiment(cfg);
    o.detail << " " << row.config << ":";
    if (cfg.replications != 100 || cfg.sampler.n != 500 || res.K != 40.0 || cfg.sampler.delta.value_or(0) != 1.0)
      o.require(false, row.config + " config drifted from 100 x 500, K=40, delta=1");
    within(o, "euler", res.euler->capital, row.euler, 3 * row.euler_se);
    o.detail << " modes=" << res.modal_count;
    o.require(res.modal_count == row.modes.size(), row.config + " mode count");
    if (res.modes.size() != row.modes.size()) continue;
    auto modes = by_first(res.modes);
    for (std::size_t m = 0; m < modes.size(); ++m)
      within(o, "mode" + std::to_string(m + 1), modes[m].capital, row.modes[m], 3 * row.mode_se[m]);
  }
  return o;
}

Outcome c4_core_hmc() {
  Outcome o;
  auto cfg = shipped("core_t5");
  auto res = run_experiment(cfg);
  const auto& chain = *res.chain;
  o.detail << "kept " << chain.states.rows() << " draws";
  o.require(chain.states.rows() == 10000, "chain length");
  VectorXd want = vec({2.876, 2.269, 2.877}), ref_se = vec({0.002, 0.003, 0.002});
  VectorXd se = (res.euler->se.array().square() + ref_se.array().square()).sqrt();
  within(o, "E[X|core]", res.euler->capital, want, 3 * se);
  o.detail << " se " << fmt(res.euler->se);
  double acc = chain.move_rate;
  o.detail << "; acceptance " << fmt(acc, 4);
  o.require(acc >= 0.7 && acc <= 0.95, "acceptance rate");
  double lag1 = chain.diagnostics.autocorrelation.row(1).cwiseAbs().maxCoeff();
  o.detail << "; max |lag-1 autocorrelation| " << fmt(lag1, 4);
  o.require(lag1 < 0.1, "lag-1 autocorrelation");

  Samples x = t5_core().sample(1'000'000, 401);
  VectorXd s = x.rowwise().sum();
  std::size_t hits = ((s.array() - res.K).abs() < 0.001).count();
  o.detail << "; slab hits at delta=0.001: " << hits << " per 1e6 (reference ~2000)";
  o.require(hits >= 1000 && hits <= 3000, "slab hit rate");
  return o;
}

Outcome c5_homothetic() {
  Outcome o;
  auto cfg = shipped("homothetic");
  auto res = run_experiment(cfg);
  const auto& ls = *res.levelset;
  double w = GridSpec(cfg.levelset->axes).width(0);
  o.detail << ls.components << " component(s):";
  for (const auto& b : ls.boxes) o.detail << " [" << fmt(b.lower(0)) << ", " << fmt(b.upper(0)) << "]";
  o.require(ls.components == 2, "component count");
  if (ls.components == 2) {
    bool ok = std::abs(ls.boxes[0].lower(0)) <= w && std::abs(ls.boxes[0].upper(0) - 1.0 / 6) <= w &&
              std::abs(ls.boxes[1].lower(0) - 1.0 / 3) <= w && std::abs(ls.boxes[1].upper(0) - 0.5) <= w;
    o.require(ok, "interval endpoints");
  }
  return o;
}

Outcome c6_dirichlet() {
  Outcome o;
  const double K = 1.0;
  Samples s = complete_mix_dirichlet(2, 10, K, 3000, 601);
  std::size_t off = 0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    if (sequential_sum(s.row(i).transpose()) != K) ++off;
  auto modes = mean_shift_modes(free_coordinates(s), nullptr, MeanShiftConfig{}, K);
  o.detail << modes.modes.size() << " modes;";
  for (const auto& m : modes.modes) o.detail << " " << fmt(m.location);
  o.detail << "; rows off the hyperplane: " << off;
  o.require(modes.modes.size() == 3, "mode count");
  o.require(off == 0, "row sums");
  return o;
}

/// Euler and mode summaries of a slab pipeline with matched seeds.
ExperimentResult pipeline(const JointModel& model, double K, double delta, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.name = "property";
  cfg.seed = seed;
  cfg.model.kind = model.is_elliptical() ? ModelKind::Elliptical : ModelKind::MarginCopula;
  cfg.model.joint = model;
  cfg.capital.kind = CapitalKind::Fixed;
  cfg.capital.value = K;
  cfg.sampler.kind = SamplerKind::Slab;
  cfg.sampler.delta = delta;
  cfg.sampler.n = 500;
  cfg.replications = 10;
  cfg.keep_scatter = 0;
  return run_experiment(cfg);
}

Outcome c7_mla_properties() {
  Outcome o;
  const double R = 10;
  struct Case {
    std::string name;
    JointModel model;
    double K;
  };
  auto lomax3 = [](const MatrixXd& p) {
    return JointModel({Margin(Lomax{2.5, 5}), Margin(Lomax{2.75, 5}), Margin(Lomax{3, 5})},
                      CopulaModel(StudentTCopula{5, p}));
  };
  std::vector<Case> cases{{"m1", lomax3(corr(0.8, 0.5, 0.8)), 40},
                          {"m2", lomax3(corr(0.5, 0.5, 0.5)), 40},
                          {"m3", lomax3(corr(0, 0.5, 0)), 40},
                          {"m4", lomax3(corr(-0.5, 0.5, -0.5)), 40},
                          {"t5", t5_core(), 8.010}};
  const VectorXd c = vec({1.5, -2.0, 0.75});
  const double scale = 2.5;
  std::size_t checks = 0;

  auto compare = [&](const std::string& what, const VectorXd& a, const VectorXd& sa, const VectorXd& b,
                     const VectorXd& sb) {
    VectorXd tol = 3 * (sa.array().square() + sb.array().square()).sqrt() / std::sqrt(R);
    bool ok = ((a - b).cwiseAbs().array() <= tol.array() + 1e-12).all();
    ++checks;
    if (!ok) o.detail << " " << what << " " << fmt(a) << " vs " << fmt(b);
    o.require(ok, what);
  };

  for (std::size_t k = 0; k < cases.size(); ++k) {
    const auto& cs = cases[k];
    const double delta = 0.025 * cs.K;
    const std::uint64_t seed = 700 + k;
    auto base = pipeline(cs.model, cs.K, delta, seed);
    auto tr = pipeline(cs.model.affine(c, 1.0), cs.K + c.sum(), delta, seed);
    auto hg = pipeline(cs.model.affine(VectorXd::Zero(3), scale), scale * cs.K, scale * delta, seed);
    compare(cs.name + " euler translation", tr.euler->capital, tr.euler->se, base.euler->capital + c,
            base.euler->se);
    compare(cs.name + " euler homogeneity", hg.euler->capital, hg.euler->se, scale * base.euler->capital,
            scale * base.euler->se);
    if (tr.modal_count != base.modal_count || hg.modal_count != base.modal_count) {
      o.require(false, cs.name + " mode count changed under transformation");
      continue;
    }
    auto mb = by_first(base.modes), mt = by_first(tr.modes), mh = by_first(hg.modes);
    for (std::size_t m = 0; m < mb.size(); ++m) {
      compare(cs.name + " mode translation", mt[m].capital, mt[m].se, mb[m].capital + c, mb[m].se);
      compare(cs.name + " mode homogeneity", mh[m].capital, mh[m].se, scale * mb[m].capital, scale * mb[m].se);
    }
    o.detail << " " << cs.name << ":" << base.modal_count << "mode";
  }

  std::vector<Case> exchangeable{
      {"lomax-ex", JointModel({Margin(Lomax{3, 5}), Margin(Lomax{3, 5}), Margin(Lomax{3, 5})},
                              CopulaModel(StudentTCopula{5, corr(0.5, 0.5, 0.5)})),
       40},
      {"t5-ex", JointModel(EllipticalModel(VectorXd::Zero(3), DispersionMatrix(corr(0.5, 0.5, 0.5)),
                                           DensityGenerator::student_t(5, 3))),
       8.0}};
  for (const auto& cs : exchangeable) {
    auto r = pipeline(cs.model, cs.K, 0.025 * cs.K, 790);
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j) {
        auto one = [&](const std::string& what, const VectorXd& a, const VectorXd& se) {
          double tol = 3 * std::hypot(se(i), se(j)) / std::sqrt(R);
          bool ok = std::abs(a(i) - a(j)) < tol;
          ++checks;
          if (!ok) o.detail << " " << what << " " << fmt(a);
          o.require(ok, what);
        };
        one(cs.name + " euler symmetry", r.euler->capital, r.euler->se);
        if (r.modal_count == 1) one(cs.name + " mla symmetry", r.modes[0].capital, r.modes[0].se);
      }
    o.detail << " " << cs.name << ":" << r.modal_count << "mode";
  }
  o.detail << "; " << checks << " comparisons";
  return o;
}

Outcome c8_adjustment() {
  Outcome o;
  ScenarioSet one(rows({vec({2, 3, 5})}), vec({1.0}), 10);
  o.require(multimodality_adjust(one, MatrixXd::Ones(3, 1)).adjustment == VectorXd::Zero(3), "M=1");
  ScenarioSet two(rows({vec({6, 2, 2}), vec({2, 6, 2})}), vec({0.4, 0.6}), 10);
  o.require(multimodality_adjust(two, MatrixXd::Zero(3, 2)).adjustment == VectorXd::Zero(3), "Lambda=0");

  ScenarioSet sc(rows({vec({6, 2, 2}), vec({2, 6, 2}), vec({3, 3, 4})}), vec({0.3, 0.5, 0.2}), 10);
  VectorXd kbar = sc.scenarios.transpose() * sc.weights;
  MatrixXd lam = MatrixXd::Constant(3, 3, 1.5);
  for (int m = 0; m < 3; ++m)
    for (int j = 0; j < 3; ++j)
      if (sc.scenarios(m, j) > kbar(j)) lam(j, m) = 0;
  o.require(multimodality_adjust(sc, lam).adjustment == VectorXd::Zero(3), "zero loading above baseline");
  for (int m = 0; m < 3; ++m)
    for (int j = 0; j < 3; ++j)
      if (sc.scenarios(m, j) > kbar(j)) {
        MatrixXd l = lam;
        l(j, m) = 0.25;
        o.require(multimodality_adjust(sc, l).adjustment(j) > 0, "positive loading above baseline");
      }

  ScenarioSet narrow(rows({vec({5, 7}), vec({7, 5})}), vec({0.5, 0.5}), 12);
  ScenarioSet wide(rows({vec({2, 10}), vec({6, 6}), vec({10, 2})}), vec({0.25, 0.5, 0.25}), 12);
  ScenarioSet wider(rows({vec({0, 12}), vec({4, 8}), vec({8, 4}), vec({12, 0})}), vec({0.125, 0.375, 0.375, 0.125}),
                    12);
  auto a = multimodality_adjust(narrow, MatrixXd::Ones(2, 2)).total;
  auto b = multimodality_adjust(wide, MatrixXd::Ones(2, 3)).total;
  auto cc = multimodality_adjust(wider, MatrixXd::Ones(2, 4)).total;
  o.require((a.array() <= b.array()).all() && (b.array() <= cc.array()).all(), "convex order");
  o.detail << "spread chain " << fmt(a(0), 3) << " <= " << fmt(b(0), 3) << " <= " << fmt(cc(0), 3);

  auto onto = [](VectorXd x) { return VectorXd(x.array() + (40 - x.sum()) / 3); };
  VectorXd w = vec({0.509, 0.491});
  w /= w.sum();
  w(1) = 1 - w(0);
  auto m3 = multimodality_adjust(
      ScenarioSet(rows({onto(vec({26.726, 2.114, 11.158})), onto(vec({1.505, 37.203, 1.291}))}), w, 40),
      MatrixXd::Ones(3, 2));
  o.detail << "; M3 ";
  within(o, "baseline", m3.baseline.capital, vec({14.357, 19.323, 6.319}), VectorXd::Constant(3, 0.05));
  o.detail << " adjustment " << fmt(m3.adjustment);
  o.require(std::abs(m3.adjustment(0) - 6.30) < 0.05, "M3 first adjustment component");
  return o;
}

Outcome c9_tails() {
  Outcome o;
  ConditionalTarget t(t5_core(), 8.010);
  auto r = mrv_exponent(t, VectorXd::Ones(2), 2 * VectorXd::Ones(2), default_mrv_ladder());
  double want = -(5 + 3) * std::log(2.0);
  double rel = std::abs(r.limit - want) / std::abs(want);
  o.detail << "t5 limit " << fmt(r.limit) << " vs " << fmt(want) << " (rel " << rel << ")";
  o.require(!r.rapid && rel < 0.05, "t5 exponent");
  JointModel n(EllipticalModel(VectorXd::Zero(3), DispersionMatrix(core_corr()), DensityGenerator::normal(3)));
  auto rn = mrv_exponent(ConditionalTarget(n, 8.010), VectorXd::Ones(2), 2 * VectorXd::Ones(2), default_mrv_ladder());
  o.detail << "; normal " << (rn.rapid ? "rapid" : "regular");
  o.require(rn.rapid, "normal rapid variation");
  return o;
}

Outcome c10_structure() {
  Outcome o;
  GridSpec g({{-4, 4, 60}, {-4, 4, 60}});
  DensityFn n2 = [](const VectorXd& x) { return std::exp(-0.5 * x.squaredNorm()); };
  auto sc = s_concavity_check(n2, 0.0, g, 5000, 1001);
  o.require(sc.pass, "gaussian log-concave");
  DensityFn blocks = [](const VectorXd& x) {
    double u = x(0), v = x(1), f = 0;
    if (u < 0 || u > 1 || v < 0 || v > 1) return 0.0;
    for (int i = 1; i <= 3; ++i)
      if (u >= (i - 1) / 3.0 && u <= i / 3.0 && v >= (i - 1) / 3.0 && v <= i / 3.0) f = 9.0 / 4;
    if (u >= 1 / 3.0 && u <= 2 / 3.0 && v >= 1 / 3.0 && v <= 2 / 3.0) f += 9.0 / 4;
    return f;
  };
  auto bc = s_concavity_check(blocks, -std::numeric_limits<double>::infinity(), GridSpec({{0, 1, 60}, {0, 1, 60}}),
                              5000, 1002);
  o.require(!bc.pass, "block density fails at s=-inf");
  o.detail << "gaussian s=0 " << (sc.pass ? "pass" : "fail") << ", block s=-inf " << (bc.pass ? "pass" : "fail");

  GridSpec slice({{-3, 3, 40}, {-3, 3, 40}});
  GridSpec joint({{-3, 3, 16}, {-3, 3, 16}, {-3, 3, 16}});
  auto gauss = [](const MatrixXd& prec) {
    MatrixXd cov = prec.inverse();
    return DensityFn([cov](const VectorXd& x) { return oracle::mvn_logpdf(x, VectorXd::Zero(3), cov); });
  };
  auto pos = mtp2_conditional_inheritance(gauss(corr(-0.25, -0.25, -0.25) * 2), 0.5, slice, joint);
  auto neg = mtp2_conditional_inheritance(gauss(corr(0.25, 0.25, 0.25) * 2), 0.5, slice, joint);
  o.require(pos.consistent && pos.conditional.verdict == Tp2Verdict::MTP2, "MTP2 inheritance");
  o.require(neg.consistent && neg.conditional.verdict == Tp2Verdict::MRR2, "MRR2 inheritance");
  o.detail << "; inheritance " << verdict_name(pos.conditional.verdict) << "/" << verdict_name(neg.conditional.verdict);

  const double K = 1.0, Kt = 3.0;
  auto normal = [](const VectorXd& mu, const MatrixXd& s) {
    return EllipticalModel(mu, DispersionMatrix(s), DensityGenerator::normal(static_cast<int>(mu.size())));
  };
  auto lifted = [](const EllipticalConditional& c, double k) {
    VectorXd x(c.location.size() + 1);
    x << c.location, k - c.location.sum();
    return x;
  };
  auto pooled = lifted(elliptical_condition(normal(VectorXd::Zero(4), MatrixXd::Identity(4, 4)), K + Kt), K + Kt);
  VectorXd separate(4);
  separate << lifted(elliptical_condition(normal(VectorXd::Zero(2), MatrixXd::Identity(2, 2)), K), K),
      lifted(elliptical_condition(normal(VectorXd::Zero(2), MatrixXd::Identity(2, 2)), Kt), Kt);
  double gap_ind = (pooled - separate).cwiseAbs().maxCoeff();

  MatrixXd s(3, 3), st(3, 3);
  s << 1, 0.2, 0, 0.2, 2, 0.3, 0, 0.3, 1;
  st << 3, -0.5, 0.4, -0.5, 1, 0, 0.4, 0, 0.5;
  VectorXd mu = vec({0.5, 1, -1}), mut = vec({2, 0, 1});
  VectorXd a = lifted(elliptical_condition(normal(mu, s), 4.0), 4.0);
  VectorXd b = lifted(elliptical_condition(normal(mut, st), 2.0), 2.0);
  VectorXd ab = lifted(elliptical_condition(normal(mu + mut, s + st), 6.0), 6.0);
  double gap_conv = (ab - (a + b)).cwiseAbs().maxCoeff();
  o.detail << "; independence gap " << gap_ind << ", convolution gap " << gap_conv;
  o.require(gap_ind > 1e-6, "independence counterexample");
  o.require(gap_conv > 1e-6, "convolution counterexample");
  return o;
}

Outcome c11_hygiene() {
  Outcome o;
  double worst_grad = 0;
  auto lomax3 = JointModel({Margin(Lomax{2.5, 5}), Margin(Lomax{2.75, 5}), Margin(Lomax{3, 5})},
                           CopulaModel(StudentTCopula{5, corr(-0.5, 0.5, -0.5)}));
  std::vector<JointModel> models{t5_core(), lomax3,
                                 JointModel(EllipticalModel(vec({1, 2, 3}), DispersionMatrix(core_corr() * 2),
                                                            DensityGenerator::normal(3)))};
  std::vector<VectorXd> points{vec({0.5, 1.5, 2.5}), vec({3, 12, 7}), vec({20, 1, 4})};
  for (const auto& m : models)
    for (const auto& x : points) {
      auto f = [&](const VectorXd& z) { return joint_logdensity(m, z); };
      VectorXd fd = numeric_gradient(f, x);
      worst_grad = std::max(worst_grad, (joint_logdensity_grad(m, x) - fd).norm() / std::max(1.0, fd.norm()));
      ConditionalTarget t(m, x.sum());
      VectorXd xp = x.head(2);
      auto ft = [&](const VectorXd& z) { return t.log_density(z); };
      VectorXd tfd = numeric_gradient(ft, xp);
      worst_grad = std::max(worst_grad, (t.log_density_grad(xp) - tfd).norm() / std::max(1.0, tfd.norm()));
    }
  o.detail << "worst gradient error " << worst_grad;
  o.require(worst_grad < 1e-5, "gradients");

  double worst_q = 0;
  std::vector<Margin> margins{Margin(Lomax{2.5, 5}), Margin(Lomax{3, 5}), Margin(ParetoI{2, 1}),
                              Margin(StudentT{5}), Margin(StudentT{3, 1, 2}), Margin(Normal{1, 2}),
                              Margin(Uniform{-1, 3})};
  for (const auto& m : margins)
    for (double p : {1e-8, 1e-4, 0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99, 0.9999, 1 - 1e-8}) {
      worst_q = std::max(worst_q, std::abs(m.cdf(m.quantile(p)) - p));
      worst_q = std::max(worst_q, std::abs(m.sf(m.quantile_upper(p)) - p));
    }
  o.detail << "; worst quantile round trip " << worst_q;
  o.require(worst_q < 1e-10, "quantile round trips");

  auto dir = scratch("cli");
  std::string text = slurp(fs::path(ALLOCLAB_CONFIG_DIR) / "m1.cfg");
  auto at = text.find("replications: 100");
  text.replace(at, 17, "replications: 1");
  std::ofstream(dir / "m1_once.cfg") << text;
  std::string base = std::string("\"") + ALLOCLAB_CLI + "\" run \"" + (dir / "m1_once.cfg").string() + "\" --out ";
  int ra = std::system((base + "\"" + (dir / "a").string() + "\" > /dev/null 2>&1").c_str());
  int rb = std::system((base + "\"" + (dir / "b").string() + "\" > /dev/null 2>&1").c_str());
  bool same = ra == 0 && rb == 0;
  for (const char* f : {"report.json", "allocations.csv", "modes.csv"}) {
    auto x = slurp(dir / "a" / f);
    same = same && !x.empty() && x == slurp(dir / "b" / f);
  }
  o.detail << "; two CLI runs " << (same ? "byte-identical" : "differ");
  o.require(same, "CLI determinism");
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
  double budget;  // seconds, 0 for none
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all{
      {1, "elliptical conditioning oracle", c1_elliptical_oracle, 120},
      {2, "Student-t closure", c2_t_closure, 1},
      {3, "four-model slab study", c3_four_models, 600},
      {4, "HMC on the atomic core", c4_core_hmc, 300},
      {5, "homothetic counterexample", c5_homothetic, 5},
      {6, "multimodal Dirichlet fixture", c6_dirichlet, 30},
      {7, "MLA property suite", c7_mla_properties, 0},
      {8, "multimodality adjustment", c8_adjustment, 0},
      {9, "tail diagnostics", c9_tails, 0},
      {10, "structure checks", c10_structure, 0},
      {11, "numerical hygiene", c11_hygiene, 0},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else {
      std::cerr << "usage: acceptance [--only N]...\n";
      return 2;
    }
  }
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget > 0 && secs > c.budget) {
      o.pass = false;
      o.detail << " [FAIL runtime over " << c.budget << " s]";
    }
    std::cout << "C" << c.id << " " << (o.pass ? "PASS" : "FAIL") << " " << c.title << " (" << fmt(secs, 1)
              << " s): " << o.detail.str() << std::endl;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
