#include "alloclab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include <boost/version.hpp>
#include <gsl/gsl_version.h>
#include <nlohmann/json.hpp>

#include "alloclab/csv_io.hpp"
#include "alloclab/errors.hpp"
#include "alloclab/rng.hpp"
#include "alloclab/risk.hpp"

namespace alloclab {

namespace {

constexpr const char* kVersion = "0.1.0";

struct RepResult {
  Samples full;  // conditional sample in d coordinates
  double acceptance = 0.0;
  Allocation euler;
  std::optional<ModeSet> modes;
  Eigen::VectorXd weights;
  std::optional<ChainResult> chain;
  std::string error;
};

Samples thin_rows(const Samples& x, std::size_t max_points) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (max_points == 0 || n <= max_points) return x;
  Samples out(max_points, x.cols());
  for (std::size_t i = 0; i < max_points; ++i) out.row(i) = x.row(i * n / max_points);
  return out;
}

ChainResult run_chain(const ExperimentConfig& cfg, const ConditionalTarget& target, const Polytope& poly,
                      std::uint64_t seed) {
  const auto& s = cfg.sampler;
  const int dp = target.dim();
  const double K = target.capital();
  const std::size_t burn = s.burn_in.value_or(s.length / 10);
  Eigen::VectorXd x0 = find_initial_point(target, split_seed(seed, 1));
  if (!poly.empty()) x0 = poly.interior_point(x0);

  // Pilot sample of the free coordinates: slab draws, or a short random-walk chain if the slab is too thin.
  auto pilot = [&]() -> Samples {
    try {
      SlabConfig sc{s.delta.value_or(0.01 * std::abs(K)), s.pilot, true, 10'000'000};
      auto slab = slab_sample(target.model(), K, sc, split_seed(seed, 2), poly.empty() ? nullptr : &poly);
      return free_coordinates(slab.rows);
    } catch (const EfficiencyError&) {
      Eigen::VectorXd step = (0.1 * x0.cwiseAbs().array().max(1.0)).matrix();
      MHConfig pc{RandomWalk{step}, 20 * s.pilot, 10 * s.pilot, 1, split_seed(seed, 3), x0};
      return thin_rows(mh_chain(target, pc).states, s.pilot);
    }
  };

  if (s.kind == SamplerKind::MH) {
    MHConfig mc{IndependentUniformSimplex{}, s.length, burn, s.thin, split_seed(seed, 4), x0};
    if (!s.independent_proposal) {
      Eigen::VectorXd step = s.step ? Eigen::VectorXd::Constant(dp, *s.step) : random_walk_scale(pilot());
      mc.proposal = RandomWalk{step};
    }
    return mh_chain(target, mc);
  }
  HMCConfig hc{0.0, 0, s.length, burn, split_seed(seed, 4), {}, x0};
  if (s.step && s.steps) {
    hc.step = *s.step;
    hc.steps = *s.steps;
  } else {
    auto tuning = tune_hmc(pilot());
    hc.step = s.step.value_or(tuning.step);
    hc.steps = s.steps.value_or(tuning.steps);
  }
  return hmc_reflect_chain(target, poly, hc);
}

RepResult run_replication(const ExperimentConfig& cfg, const JointModel& model, double K, const Polytope& poly,
                          std::uint64_t seed) {
  RepResult r;
  const auto& s = cfg.sampler;
  std::optional<ConditionalTarget> target;
  if (model.has_density()) target.emplace(model, K);
  Samples free_pts;
  Eigen::VectorXd ess;
  if (s.kind == SamplerKind::Slab) {
    SlabConfig sc{s.delta.value_or(0.01 * std::abs(K)), s.n, true, s.max_attempts};
    auto slab = slab_sample(model, K, sc, seed, poly.empty() ? nullptr : &poly);
    r.full = std::move(slab.rows);
    r.acceptance = slab.acceptance;
    free_pts = free_coordinates(r.full);
  } else {
    r.chain = run_chain(cfg, *target, poly, seed);
    r.acceptance = r.chain->move_rate;
    r.full = lift_rows(r.chain->states, K);
    ess = r.chain->diagnostics.ess;
    ess.conservativeResize(model.dim());
    ess(model.dim() - 1) = ess.head(model.dim() - 1).minCoeff();
    free_pts = thin_rows(r.chain->states, cfg.modes.max_points);
  }
  r.euler = euler_allocation(r.full, K, ess.size() ? &ess : nullptr);
  if (cfg.modes.enabled && (cfg.allocation.mla || cfg.allocation.adjust)) {
    r.modes = mean_shift_modes(free_pts, target ? &*target : nullptr, cfg.modes.mean_shift, K);
    r.weights = scenario_weights(*r.modes, model);
  }
  return r;
}

// Column-wise mean and sd of a list of vectors.
std::pair<Eigen::VectorXd, Eigen::VectorXd> mean_sd(const std::vector<Eigen::VectorXd>& v) {
  const auto k = v.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (const auto& x : v) mean += x;
  mean /= static_cast<double>(v.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(k);
  for (const auto& x : v) var.array() += (x - mean).array().square();
  if (v.size() > 1) var /= static_cast<double>(v.size() - 1);
  return {mean, var.cwiseSqrt()};
}

// Mode order of `modes` that best matches `ref` in total distance.
std::vector<int> align(const std::vector<Eigen::VectorXd>& ref, const std::vector<Mode>& modes) {
  std::vector<int> perm(ref.size());
  std::iota(perm.begin(), perm.end(), 0);
  if (ref.size() > 7) {
    std::sort(perm.begin(), perm.end(),
              [&](int a, int b) { return modes[a].location(0) > modes[b].location(0); });
    return perm;
  }
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t m = 0; m < ref.size(); ++m) c += (modes[perm[m]].location - ref[m]).norm();
    if (c < best_cost) {
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Eigen::MatrixXd loading_matrix(const AllocationSpec& a, int d, std::size_t M) {
  if (a.loading_columns.empty()) return Eigen::MatrixXd::Constant(d, M, a.loading);
  if (a.loading_columns.size() != M)
    throw ShapeError("configured loading has " + std::to_string(a.loading_columns.size()) + " columns but " +
                     std::to_string(M) + " scenarios were found");
  Eigen::MatrixXd L(d, M);
  for (std::size_t m = 0; m < M; ++m) L.col(m) = a.loading_columns[m];
  return L;
}

double resolve_capital(const ExperimentConfig& cfg, const JointModel& model, std::optional<CoreResult>& core) {
  const auto& c = cfg.capital;
  if (c.kind == CapitalKind::Fixed) return c.value;
  if (c.kind == CapitalKind::Core) {
    core = core_polytope(model, c.value, c.n_cal, split_seed(cfg.seed, 0));
    return core->K;
  }
  Samples x = model.sample(c.n_cal, split_seed(cfg.seed, 0));
  std::vector<double> s(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) s[i] = x.row(i).sum();
  return empirical_var(s, c.value);
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v == 0.0 ? 0.0 : v);
  return buf;
}

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json alloc_json(const Allocation& a) {
  return {{"method", method_name(a.method)},
          {"capital", vec(a.capital)},
          {"se", vec(a.se)},
          {"sum", a.capital.sum()},
          {"projection", a.projection}};
}

nlohmann::json rows_json(const Samples& x, const std::vector<std::string>& cols) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<double> r(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) r[j] = x(i, j);
    rows.push_back(r);
  }
  return {{"columns", cols}, {"rows", rows}};
}

std::vector<std::string> coord_names(int d, const char* prefix = "x") {
  std::vector<std::string> n;
  for (int j = 1; j <= d; ++j) n.push_back(prefix + std::to_string(j));
  return n;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult res;
  const int d = cfg.model.dim();

  if (cfg.model.kind == ModelKind::Homothetic) {
    res.K = cfg.capital.value;
    const auto& h = *cfg.model.homothetic;
    DensityFn f = [&](const Eigen::VectorXd& xp) {
      Eigen::VectorXd x(d);
      x.head(d - 1) = xp;
      x(d - 1) = res.K - xp.sum();
      return homothetic_density(h, x);
    };
    res.levelset = superlevel_components(f, cfg.levelset->level, GridSpec(cfg.levelset->axes));
    return res;
  }

  const JointModel& model = *cfg.model.joint;
  if (cfg.model.dropped_rows)
    res.notes.push_back("dropped " + std::to_string(cfg.model.dropped_rows) + " data rows with missing values");
  res.K = resolve_capital(cfg, model, res.core);
  Polytope poly = res.core ? res.core->polytope : Polytope::whole_hyperplane(d, res.K);
  if (cfg.sampler.kind == SamplerKind::MH && !poly.empty())
    throw ConfigError("key 'sampler.method': mh does not handle core constraints, use slab or hmc");

  if (cfg.levelset) {
    ConditionalTarget target(model, res.K);
    DensityFn f = [&](const Eigen::VectorXd& xp) { return std::exp(target.log_density(xp)); };
    res.levelset = superlevel_components(f, cfg.levelset->level, GridSpec(cfg.levelset->axes));
  }
  if (cfg.sampler.kind == SamplerKind::None) return res;

  const std::size_t R = cfg.replications;
  std::vector<RepResult> reps(R);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t r; (r = next++) < R;) {
      try {
        reps[r] = run_replication(cfg, model, res.K, poly, split_seed(cfg.seed, r + 1));
      } catch (const Error& e) {
        reps[r].error = e.what();
      }
    }
  };
  std::size_t nthreads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, R);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t r = 0; r < R; ++r)
    if (!reps[r].error.empty()) throw Error("replication " + std::to_string(r) + ": " + reps[r].error);
  res.replications = R;

  std::vector<Eigen::VectorXd> eu;
  double acc = 0.0;
  for (const auto& r : reps) {
    eu.push_back(r.euler.capital);
    acc += r.acceptance;
  }
  res.acceptance = acc / static_cast<double>(R);
  auto [emean, esd] = mean_sd(eu);
  close_sum(emean, res.K);
  res.euler = Allocation{emean, res.K, Method::Euler, R > 1 ? esd : reps[0].euler.se, 0.0};
  for (const auto& r : reps) res.euler->projection = std::max(res.euler->projection, r.euler.projection);
  if (reps[0].chain) res.chain = reps[0].chain;
  res.scatter = thin_rows(reps[0].full, cfg.keep_scatter);

  if (reps[0].modes) {
    std::size_t unconverged = 0;
    for (const auto& r : reps) {
      res.mode_counts[r.modes->modes.size()]++;
      if (r.modes->convergence_warning) ++unconverged;
    }
    if (unconverged)
      res.warnings.push_back("mean shift left more than 20% of starts unconverged in " + std::to_string(unconverged) +
                             " replication(s)");
    res.modal_count = std::max_element(res.mode_counts.begin(), res.mode_counts.end(), [](auto& a, auto& b) {
                        return a.second < b.second;
                      })->first;
    if (res.mode_counts.size() > 1)
      res.notes.push_back("mode count varied across replications; summaries use the " +
                          std::to_string(res.modal_count) + "-mode replications");

    std::vector<Eigen::VectorXd> ref;
    std::vector<std::vector<Eigen::VectorXd>> locs(res.modal_count);
    std::vector<double> basins(res.modal_count, 0.0);
    for (const auto& r : reps) {
      const auto& ms = r.modes->modes;
      if (ms.size() != res.modal_count) continue;
      if (ref.empty()) {
        for (const auto& m : ms) ref.push_back(m.location);
        std::sort(ref.begin(), ref.end(), [](auto& a, auto& b) { return a(0) > b(0); });
      }
      auto perm = align(ref, ms);
      for (std::size_t m = 0; m < ref.size(); ++m) {
        locs[m].push_back(ms[perm[m]].location);
        basins[m] += static_cast<double>(ms[perm[m]].basin);
      }
    }
    Samples scen(res.modal_count, d);
    for (std::size_t m = 0; m < res.modal_count; ++m) {
      auto [mm, ms] = mean_sd(locs[m]);
      close_sum(mm, res.K);
      scen.row(m) = mm.transpose();
      double ld = model.has_density() ? model.log_density(mm) : std::nan("");
      res.modes.push_back({mm, ms, 0.0, ld, basins[m] / static_cast<double>(locs[m].size())});
    }
    if (model.has_density()) {
      double mx = -std::numeric_limits<double>::infinity();
      for (const auto& m : res.modes) mx = std::max(mx, m.log_density);
      if (std::isfinite(mx)) {
        double tot = 0.0;
        for (auto& m : res.modes) tot += (m.weight = std::exp(m.log_density - mx));
        for (auto& m : res.modes) m.weight /= tot;
      }
    } else {
      std::vector<Eigen::VectorXd> ws;
      for (const auto& r : reps)
        if (r.modes->modes.size() == res.modal_count) ws.push_back(r.weights);
      auto wm = mean_sd(ws).first;
      for (std::size_t m = 0; m < res.modal_count; ++m) res.modes[m].weight = wm(m) / wm.sum();
    }
    if (!res.modes.empty()) {
      double tail = 1.0;
      for (std::size_t m = 0; m + 1 < res.modes.size(); ++m) tail -= res.modes[m].weight;
      res.modes.back().weight = tail;
    }

    const bool multimodal = res.modal_count >= 2;
    if (cfg.allocation.mla && !multimodal && res.modal_count == 1)
      res.mla = Allocation{res.modes[0].capital, res.K, Method::MLA, res.modes[0].se, 0.0};
    if (cfg.allocation.mla && multimodal)
      res.warnings.push_back("conditional law is multimodal (" + std::to_string(res.modal_count) +
                             " modes); MLA undefined, reporting the multimodality-adjusted allocation");
    if ((cfg.allocation.adjust || (cfg.allocation.mla && multimodal)) && res.modal_count >= 1) {
      Eigen::VectorXd w(res.modal_count);
      for (std::size_t m = 0; m < res.modal_count; ++m) w(m) = res.modes[m].weight;
      ScenarioSet sc(scen, w, res.K);
      std::optional<Allocation> base;
      if (cfg.allocation.baseline == BaselineKind::Euler) base = res.euler;
      res.adjusted = multimodality_adjust(sc, loading_matrix(cfg.allocation, d, res.modal_count), base);
    }
  }

  if (cfg.bootstrap > 0) {
    const auto& first = reps[0];
    std::optional<ConditionalTarget> target;
    if (model.has_density()) target.emplace(model, res.K);
    const bool with_mode = res.modal_count == 1 && cfg.modes.enabled;
    const std::size_t maxp = cfg.modes.max_points;
    Estimator est = [&](const Samples& x, std::uint64_t) {
      Eigen::VectorXd out(with_mode ? 2 * d : d);
      out.head(d) = x.colwise().mean().transpose();
      if (with_mode) {
        auto ms = mean_shift_modes(thin_rows(free_coordinates(x), maxp), target ? &*target : nullptr,
                                   cfg.modes.mean_shift, res.K);
        out.tail(d) = ms.modes.front().location;
      }
      return out;
    };
    auto se = bootstrap_se(first.full, est, cfg.bootstrap, split_seed(cfg.seed, 1u << 20));
    res.bootstrap_euler_se = se.head(d);
    if (with_mode) res.bootstrap_mla_se = se.tail(d);
    if (R == 1) {
      res.euler->se = *res.bootstrap_euler_se;
      if (res.mla && res.bootstrap_mla_se) res.mla->se = *res.bootstrap_mla_se;
    }
  }

  res.exit_code = res.warnings.empty() ? 0 : 2;
  return res;
}

std::string report_json(const ExperimentConfig& cfg, const ExperimentResult& res) {
  using nlohmann::json;
  const int d = cfg.model.dim();
  json j;
  j["name"] = cfg.name;
  j["provenance"] = {{"config_sha256", cfg.digest},
                     {"seed", cfg.seed},
                     {"alloc_lab", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", BOOST_LIB_VERSION},
                     {"gsl", GSL_VERSION}};
  const char* kinds[] = {"margin_copula", "elliptical", "empirical", "homothetic"};
  j["model"] = {{"kind", kinds[static_cast<int>(cfg.model.kind)]}, {"dim", d}};
  if (cfg.model.kind == ModelKind::Empirical)
    j["model"]["data"] = {{"rows", cfg.model.data_rows}, {"dropped", cfg.model.dropped_rows}};
  const char* rules[] = {"fixed", "var_level", "core"};
  j["capital"] = {{"rule", rules[static_cast<int>(cfg.capital.kind)]}, {"K", res.K}};
  if (cfg.capital.kind != CapitalKind::Fixed) j["capital"]["level"] = cfg.capital.value;
  if (res.core) {
    json b = json::array();
    for (const auto& [lambda, r] : res.core->bounds) b.push_back({{"lambda", lambda}, {"r", r}});
    j["capital"]["core_bounds"] = b;
  }
  const char* samplers[] = {"none", "slab", "mh", "hmc"};
  j["sampler"] = {{"method", samplers[static_cast<int>(cfg.sampler.kind)]}};
  if (cfg.sampler.kind == SamplerKind::Slab) {
    j["sampler"]["delta"] = cfg.sampler.delta.value_or(0.01 * std::abs(res.K));
    j["sampler"]["n"] = cfg.sampler.n;
    j["sampler"]["hit_rate"] = res.acceptance;
  } else if (cfg.sampler.kind != SamplerKind::None) {
    j["sampler"]["length"] = cfg.sampler.length;
    j["sampler"]["burn_in"] = cfg.sampler.burn_in.value_or(cfg.sampler.length / 10);
    j["sampler"]["acceptance"] = res.acceptance;
  }
  j["replications"] = res.replications;

  json alloc = json::object();
  if (res.euler && cfg.allocation.euler) alloc["euler"] = alloc_json(*res.euler);
  alloc["mla"] = res.mla ? alloc_json(*res.mla) : json(nullptr);
  json modes = json::array();
  for (const auto& m : res.modes)
    modes.push_back({{"capital", vec(m.capital)},
                     {"se", vec(m.se)},
                     {"weight", m.weight},
                     {"basin", m.basin},
                     {"log_density", std::isfinite(m.log_density) ? json(m.log_density) : json(nullptr)}});
  alloc["modes"] = modes;
  if (res.adjusted)
    alloc["adjusted"] = {{"baseline", vec(res.adjusted->baseline.capital)},
                         {"baseline_method", method_name(res.adjusted->baseline.method)},
                         {"adjustment", vec(res.adjusted->adjustment)},
                         {"total", vec(res.adjusted->total)}};
  else
    alloc["adjusted"] = nullptr;
  if (res.bootstrap_euler_se) {
    alloc["bootstrap"] = {{"B", cfg.bootstrap}, {"euler_se", vec(*res.bootstrap_euler_se)}};
    if (res.bootstrap_mla_se) alloc["bootstrap"]["mla_se"] = vec(*res.bootstrap_mla_se);
  }
  j["allocations"] = alloc;

  json counts = json::object();
  for (const auto& [k, v] : res.mode_counts) counts[std::to_string(k)] = v;
  j["mode_counts"] = counts;
  j["modal_count"] = res.modal_count;
  j["multimodal"] = res.modal_count >= 2;

  if (res.chain) {
    const auto& dg = res.chain->diagnostics;
    j["chain"] = {{"acceptance", dg.acceptance},
                  {"autocorrelation_lag1", vec(dg.autocorrelation.row(std::min<Eigen::Index>(1, dg.autocorrelation.rows() - 1)).transpose())},
                  {"ess", vec(dg.ess)},
                  {"divergent", res.chain->divergent}};
  } else {
    j["chain"] = nullptr;
  }
  if (res.levelset) {
    json boxes = json::array();
    for (const auto& b : res.levelset->boxes)
      boxes.push_back({{"lower", vec(b.lower)}, {"upper", vec(b.upper)}, {"cells", b.cells}});
    j["levelset"] = {{"level", cfg.levelset->level}, {"components", res.levelset->components}, {"boxes", boxes}};
  }
  j["warnings"] = res.warnings;
  j["notes"] = res.notes;

  json art = json::object();
  art["scatter"] = res.scatter ? rows_json(*res.scatter, coord_names(d)) : json(nullptr);
  art["chain_trace"] = res.chain ? rows_json(res.chain->states, coord_names(d - 1)) : json(nullptr);
  if (res.levelset) {
    json axes = json::array();
    for (const auto& a : cfg.levelset->axes) axes.push_back({a.lower, a.upper, a.points});
    art["levelset"] = {{"axes", axes}, {"level", cfg.levelset->level}, {"label", res.levelset->label}};
  } else {
    art["levelset"] = nullptr;
  }
  j["artifacts"] = art;
  j["exit_code"] = res.exit_code;
  return j.dump(1) + "\n";
}

void write_report(const ExperimentConfig& cfg, const ExperimentResult& res) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output);
  {
    std::ofstream out(cfg.output / "report.json", std::ios::binary);
    if (!out) throw DataError("cannot write report under " + cfg.output.string());
    out << report_json(cfg, res);
  }
  const int d = cfg.model.dim();
  {
    std::ofstream out(cfg.output / "allocations.csv", std::ios::binary);
    out << "estimator";
    for (int j = 1; j <= d; ++j) out << ",x" << j;
    for (int j = 1; j <= d; ++j) out << ",se" << j;
    out << "\n";
    auto row = [&](const std::string& name, const Eigen::VectorXd& a, const Eigen::VectorXd& se) {
      out << name;
      for (int j = 0; j < d; ++j) out << "," << fixed3(a(j));
      for (int j = 0; j < d; ++j) out << "," << (se.size() ? fixed3(se(j)) : std::string());
      out << "\n";
    };
    if (res.euler && cfg.allocation.euler) row("euler", res.euler->capital, res.euler->se);
    if (res.mla) row("mla", res.mla->capital, res.mla->se);
    if (!res.mla && res.modes.size() > 1)
      for (std::size_t m = 0; m < res.modes.size(); ++m)
        row("mode" + std::to_string(m + 1), res.modes[m].capital, res.modes[m].se);
    if (res.adjusted) {
      row("baseline", res.adjusted->baseline.capital, {});
      row("adjustment", res.adjusted->adjustment, {});
      row("adjusted", res.adjusted->total, {});
    }
  }
  {
    std::ofstream out(cfg.output / "modes.csv", std::ios::binary);
    out << "mode";
    for (int j = 1; j <= d; ++j) out << ",x" << j;
    out << ",log_density,basin,weight";
    for (int j = 1; j <= d; ++j) out << ",se" << j;
    out << "\n";
    for (std::size_t m = 0; m < res.modes.size(); ++m) {
      const auto& md = res.modes[m];
      out << m + 1;
      for (int j = 0; j < d; ++j) out << "," << full(md.capital(j));
      out << "," << (std::isfinite(md.log_density) ? full(md.log_density) : "NA") << "," << full(md.basin) << "," << full(md.weight);
      for (int j = 0; j < d; ++j) out << "," << full(md.se(j));
      out << "\n";
    }
  }
}

}  // namespace alloclab
