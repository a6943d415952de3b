#include "alloclab/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "alloclab/csv_io.hpp"
#include "alloclab/errors.hpp"

namespace alloclab {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& key, const std::string& msg) {
  std::ostringstream os;
  if (node.IsDefined() && node.Mark().line >= 0) os << "line " << node.Mark().line + 1 << ": ";
  os << "key '" << key << "': " << msg;
  throw ConfigError(os.str());
}

void allow_keys(const YAML::Node& node, const std::string& key, std::set<std::string> allowed) {
  if (!node.IsMap()) fail(node, key, "expected a table");
  for (const auto& kv : node) {
    auto k = kv.first.as<std::string>();
    if (!allowed.count(k)) fail(kv.first, key.empty() ? k : key + "." + k, "unknown key");
  }
}

template <class T>
T get(const YAML::Node& node, const std::string& key) {
  if (!node.IsDefined() || node.IsNull()) fail(node, key, "missing value");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, key, "wrong type");
  }
}

template <class T>
T get_or(const YAML::Node& parent, const std::string& name, const std::string& key, T fallback) {
  auto node = parent[name];
  if (!node.IsDefined()) return fallback;
  return get<T>(node, key + "." + name);
}

std::size_t get_count(const YAML::Node& parent, const std::string& name, const std::string& key,
                      std::size_t fallback) {
  auto node = parent[name];
  if (!node.IsDefined()) return fallback;
  double v = get<double>(node, key + "." + name);
  if (!(v >= 0) || v != std::floor(v) || v > 1e15) fail(node, key + "." + name, "expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

Eigen::VectorXd get_vector(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) fail(node, key, "expected a list of numbers");
  Eigen::VectorXd v(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) v(i) = get<double>(node[i], key + "[" + std::to_string(i) + "]");
  return v;
}

Eigen::MatrixXd get_matrix(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence() || node.size() == 0) fail(node, key, "expected a list of rows");
  const auto n = node.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = get_vector(node[i], key + "[" + std::to_string(i) + "]");
    if (static_cast<std::size_t>(row.size()) != n) fail(node[i], key, "matrix must be square");
    m.row(i) = row.transpose();
  }
  return m;
}

std::vector<std::string> get_names(const YAML::Node& node, const std::string& key) {
  std::vector<std::string> out;
  if (!node.IsDefined()) return out;
  if (!node.IsSequence()) fail(node, key, "expected a list");
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(get<std::string>(node[i], key));
  return out;
}

Margin parse_margin(const YAML::Node& node, const std::string& key) {
  auto family = get<std::string>(node["family"], key + ".family");
  try {
    if (family == "lomax") {
      allow_keys(node, key, {"family", "shape", "scale"});
      return Margin(Lomax{get<double>(node["shape"], key + ".shape"), get<double>(node["scale"], key + ".scale")});
    }
    if (family == "pareto") {
      allow_keys(node, key, {"family", "shape", "minimum"});
      return Margin(
          ParetoI{get<double>(node["shape"], key + ".shape"), get<double>(node["minimum"], key + ".minimum")});
    }
    if (family == "t") {
      allow_keys(node, key, {"family", "df", "location", "scale"});
      return Margin(StudentT{get<double>(node["df"], key + ".df"), get_or(node, "location", key, 0.0),
                             get_or(node, "scale", key, 1.0)});
    }
    if (family == "normal") {
      allow_keys(node, key, {"family", "mean", "sd"});
      return Margin(Normal{get_or(node, "mean", key, 0.0), get_or(node, "sd", key, 1.0)});
    }
    if (family == "uniform") {
      allow_keys(node, key, {"family", "lower", "upper"});
      return Margin(Uniform{get<double>(node["lower"], key + ".lower"), get<double>(node["upper"], key + ".upper")});
    }
  } catch (const ParameterError& e) {
    fail(node, key, e.what());
  }
  fail(node["family"], key + ".family", "unknown margin family '" + family + "'");
}

ModelSpec parse_model(const YAML::Node& node, const std::filesystem::path& base) {
  const std::string key = "model";
  auto kind = get<std::string>(node["kind"], "model.kind");
  try {
    if (kind == "margin_copula") {
      allow_keys(node, key, {"kind", "margins", "copula"});
      auto mnode = node["margins"];
      if (!mnode.IsSequence() || mnode.size() < 2) fail(mnode, "model.margins", "expected at least two margins");
      std::vector<Margin> margins;
      for (std::size_t j = 0; j < mnode.size(); ++j)
        margins.push_back(parse_margin(mnode[j], "model.margins[" + std::to_string(j) + "]"));
      auto cnode = node["copula"];
      auto family = get<std::string>(cnode["family"], "model.copula.family");
      const int d = static_cast<int>(margins.size());
      if (family == "independence") {
        allow_keys(cnode, "model.copula", {"family"});
        return {ModelKind::MarginCopula, JointModel(margins, CopulaModel(IndependenceCopula{d})), std::nullopt};
      }
      if (family == "t") {
        allow_keys(cnode, "model.copula", {"family", "nu", "corr"});
        auto corr = get_matrix(cnode["corr"], "model.copula.corr");
        if (corr.rows() != d) fail(cnode["corr"], "model.copula.corr", "dimension differs from the margins");
        CopulaModel cop(StudentTCopula{get<double>(cnode["nu"], "model.copula.nu"), corr});
        return {ModelKind::MarginCopula, JointModel(margins, cop), std::nullopt};
      }
      fail(cnode["family"], "model.copula.family", "unknown copula family '" + family + "'");
    }
    if (kind == "elliptical") {
      allow_keys(node, key, {"kind", "generator", "nu", "mu", "sigma"});
      auto mu = get_vector(node["mu"], "model.mu");
      auto sigma = get_matrix(node["sigma"], "model.sigma");
      const int d = static_cast<int>(mu.size());
      if (sigma.rows() != d) fail(node["sigma"], "model.sigma", "dimension differs from mu");
      auto gen = get<std::string>(node["generator"], "model.generator");
      DensityGenerator g = DensityGenerator::normal(d);
      if (gen == "t")
        g = DensityGenerator::student_t(get<double>(node["nu"], "model.nu"), d);
      else if (gen != "normal")
        fail(node["generator"], "model.generator", "expected normal or t");
      return {ModelKind::Elliptical, JointModel(EllipticalModel(mu, DispersionMatrix(sigma), g)), std::nullopt};
    }
    if (kind == "empirical") {
      allow_keys(node, key, {"kind", "data", "columns", "flip"});
      IngestOptions opt;
      opt.columns = get_names(node["columns"], "model.columns");
      opt.flip = get_names(node["flip"], "model.flip");
      auto path = std::filesystem::path(get<std::string>(node["data"], "model.data"));
      if (path.is_relative()) path = base / path;
      auto data = ingest_csv(path, opt);
      ModelSpec spec{ModelKind::Empirical, empirical_model(data.data), std::nullopt};
      spec.data_rows = data.rows_read;
      spec.dropped_rows = data.dropped;
      return spec;
    }
    if (kind == "homothetic") {
      allow_keys(node, key, {"kind", "boxes", "a", "location"});
      auto bnode = node["boxes"];
      if (!bnode.IsSequence() || bnode.size() == 0) fail(bnode, "model.boxes", "expected a list of boxes");
      std::vector<Box> boxes;
      for (std::size_t i = 0; i < bnode.size(); ++i) {
        auto k = "model.boxes[" + std::to_string(i) + "]";
        allow_keys(bnode[i], k, {"lower", "upper"});
        boxes.push_back({get_vector(bnode[i]["lower"], k + ".lower"), get_vector(bnode[i]["upper"], k + ".upper")});
      }
      HomotheticModel h(boxes, get<double>(node["a"], "model.a"), get_vector(node["location"], "model.location"));
      return {ModelKind::Homothetic, std::nullopt, h};
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    fail(node, key, e.what());
  }
  fail(node["kind"], "model.kind", "unknown model kind '" + kind + "'");
}

CapitalSpec parse_capital(const YAML::Node& node) {
  allow_keys(node, "capital", {"fixed", "var_level", "n_cal", "core"});
  int rules = node["fixed"].IsDefined() + node["var_level"].IsDefined() + node["core"].IsDefined();
  if (rules != 1) fail(node, "capital", "exactly one of fixed, var_level, core is required");
  CapitalSpec c;
  if (node["fixed"]) {
    c.kind = CapitalKind::Fixed;
    c.value = get<double>(node["fixed"], "capital.fixed");
    if (node["n_cal"]) fail(node["n_cal"], "capital.n_cal", "only used with var_level");
    return c;
  }
  YAML::Node src = node;
  std::string key = "capital";
  if (node["core"]) {
    c.kind = CapitalKind::Core;
    src = node["core"];
    key = "capital.core";
    allow_keys(src, key, {"level", "n_cal"});
    c.value = get<double>(src["level"], key + ".level");
  } else {
    c.kind = CapitalKind::VarLevel;
    c.value = get<double>(node["var_level"], "capital.var_level");
  }
  if (!(c.value > 0 && c.value < 1)) fail(src, key, "level must lie in (0, 1)");
  c.n_cal = get_count(src, "n_cal", key, c.n_cal);
  if (static_cast<double>(c.n_cal) * (1.0 - c.value) < 10.0 - 1e-9)
    fail(src, key + ".n_cal", "calibration sample too small for this level");
  return c;
}

SamplerSpec parse_sampler(const YAML::Node& node) {
  const std::string key = "sampler";
  SamplerSpec s;
  if (!node.IsDefined()) return s;
  allow_keys(node, key,
             {"method", "delta", "n", "max_attempts", "length", "burn_in", "thin", "pilot", "proposal", "step", "steps"});
  auto method = get_or<std::string>(node, "method", key, "slab");
  if (method == "slab")
    s.kind = SamplerKind::Slab;
  else if (method == "mh")
    s.kind = SamplerKind::MH;
  else if (method == "hmc")
    s.kind = SamplerKind::HMC;
  else if (method == "none")
    s.kind = SamplerKind::None;
  else
    fail(node["method"], "sampler.method", "expected slab, mh, hmc or none");
  if (node["delta"]) {
    s.delta = get<double>(node["delta"], "sampler.delta");
    if (!(*s.delta > 0)) fail(node["delta"], "sampler.delta", "must be positive");
  }
  s.n = get_count(node, "n", key, s.n);
  s.max_attempts = get_count(node, "max_attempts", key, s.max_attempts);
  s.length = get_count(node, "length", key, s.length);
  if (node["burn_in"]) s.burn_in = get_count(node, "burn_in", key, 0);
  if (s.kind == SamplerKind::MH || s.kind == SamplerKind::HMC) {
    if (s.length < 2) fail(node, "sampler.length", "chain too short");
    if (s.burn_in.value_or(s.length / 10) >= s.length) fail(node["burn_in"], "sampler.burn_in", "must be below the length");
  }
  s.thin = get_count(node, "thin", key, s.thin);
  if (s.thin < 1) fail(node["thin"], "sampler.thin", "must be at least 1");
  s.pilot = get_count(node, "pilot", key, s.pilot);
  auto proposal = get_or<std::string>(node, "proposal", key, "random_walk");
  if (proposal == "independent_uniform")
    s.independent_proposal = true;
  else if (proposal != "random_walk")
    fail(node["proposal"], "sampler.proposal", "expected random_walk or independent_uniform");
  if (node["step"]) {
    s.step = get<double>(node["step"], "sampler.step");
    if (!(*s.step > 0)) fail(node["step"], "sampler.step", "must be positive");
  }
  if (node["steps"]) {
    s.steps = get<int>(node["steps"], "sampler.steps");
    if (*s.steps < 1) fail(node["steps"], "sampler.steps", "must be at least 1");
  }
  return s;
}

ModesSpec parse_modes(const YAML::Node& node) {
  const std::string key = "modes";
  ModesSpec m;
  if (!node.IsDefined()) return m;
  allow_keys(node, key,
             {"enabled", "bandwidth_scale", "tolerance", "max_iterations", "merge_radius", "min_basin_fraction",
              "max_points"});
  m.enabled = get_or(node, "enabled", key, true);
  auto& c = m.mean_shift;
  c.bandwidth_scale = get_or(node, "bandwidth_scale", key, c.bandwidth_scale);
  c.tolerance = get_or(node, "tolerance", key, c.tolerance);
  c.max_iterations = get_or(node, "max_iterations", key, c.max_iterations);
  c.min_basin_fraction = get_or(node, "min_basin_fraction", key, c.min_basin_fraction);
  if (node["merge_radius"]) c.merge_radius = get<double>(node["merge_radius"], "modes.merge_radius");
  if (!(c.bandwidth_scale > 0)) fail(node["bandwidth_scale"], "modes.bandwidth_scale", "must be positive");
  if (!(c.tolerance > 0)) fail(node["tolerance"], "modes.tolerance", "must be positive");
  if (c.max_iterations < 1) fail(node["max_iterations"], "modes.max_iterations", "must be at least 1");
  if (!(c.min_basin_fraction >= 0 && c.min_basin_fraction < 1))
    fail(node["min_basin_fraction"], "modes.min_basin_fraction", "must lie in [0, 1)");
  m.max_points = get_count(node, "max_points", key, m.max_points);
  return m;
}

AllocationSpec parse_allocation(const YAML::Node& node) {
  const std::string key = "allocation";
  AllocationSpec a;
  if (!node.IsDefined()) return a;
  allow_keys(node, key, {"euler", "mla", "adjust", "loading", "baseline"});
  a.euler = get_or(node, "euler", key, a.euler);
  a.mla = get_or(node, "mla", key, a.mla);
  a.adjust = get_or(node, "adjust", key, a.adjust);
  if (auto l = node["loading"]) {
    if (l.IsScalar()) {
      a.loading = get<double>(l, "allocation.loading");
      if (!(a.loading >= 0)) fail(l, "allocation.loading", "must be nonnegative");
    } else if (l.IsSequence()) {
      for (std::size_t m = 0; m < l.size(); ++m) {
        auto col = get_vector(l[m], "allocation.loading[" + std::to_string(m) + "]");
        if ((col.array() < 0).any()) fail(l[m], "allocation.loading", "entries must be nonnegative");
        a.loading_columns.push_back(col);
      }
    } else {
      fail(l, "allocation.loading", "expected a number or a list of columns");
    }
  }
  auto b = get_or<std::string>(node, "baseline", key, "weighted");
  if (b == "euler")
    a.baseline = BaselineKind::Euler;
  else if (b != "weighted")
    fail(node["baseline"], "allocation.baseline", "expected weighted or euler");
  return a;
}

std::optional<LevelSetSpec> parse_diagnostics(const YAML::Node& node) {
  if (!node.IsDefined()) return std::nullopt;
  allow_keys(node, "diagnostics", {"levelset"});
  auto ls = node["levelset"];
  if (!ls.IsDefined()) return std::nullopt;
  allow_keys(ls, "diagnostics.levelset", {"level", "axes"});
  LevelSetSpec spec{get<double>(ls["level"], "diagnostics.levelset.level"), {}};
  auto axes = ls["axes"];
  if (!axes.IsSequence() || axes.size() < 1 || axes.size() > 2)
    fail(axes, "diagnostics.levelset.axes", "expected one or two axes");
  for (std::size_t j = 0; j < axes.size(); ++j) {
    auto v = get_vector(axes[j], "diagnostics.levelset.axes");
    if (v.size() != 3) fail(axes[j], "diagnostics.levelset.axes", "axis is [lower, upper, points]");
    if (!(v(1) > v(0)) || v(2) < 16 || v(2) != std::floor(v(2)))
      fail(axes[j], "diagnostics.levelset.axes", "need lower < upper and at least 16 points");
    spec.axes.push_back({v(0), v(1), static_cast<int>(v(2))});
  }
  return spec;
}

}  // namespace

int ModelSpec::dim() const { return joint ? joint->dim() : homothetic->dim(); }

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr)) throw Error("sha256 failed");
  std::ostringstream os;
  for (unsigned i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  allow_keys(root, "",
             {"name", "seed", "replications", "bootstrap", "output", "keep_scatter", "model", "capital", "sampler",
              "modes", "allocation", "diagnostics"});
  ExperimentConfig cfg;
  cfg.name = get_or<std::string>(root, "name", "", "experiment");
  cfg.seed = get_or<std::uint64_t>(root, "seed", "", 1);
  cfg.replications = get_count(root, "replications", "", 1);
  if (cfg.replications < 1) fail(root["replications"], "replications", "must be at least 1");
  cfg.bootstrap = get_count(root, "bootstrap", "", 0);
  if (cfg.bootstrap > 0 && cfg.bootstrap < 50) fail(root["bootstrap"], "bootstrap", "use 0 or at least 50");
  cfg.keep_scatter = get_count(root, "keep_scatter", "", cfg.keep_scatter);
  auto out = std::filesystem::path(get_or<std::string>(root, "output", "", "out/" + cfg.name));
  cfg.output = out.is_relative() ? base_dir / out : out;
  cfg.model = parse_model(root["model"], base_dir);
  cfg.sampler = parse_sampler(root["sampler"]);
  cfg.modes = parse_modes(root["modes"]);
  cfg.allocation = parse_allocation(root["allocation"]);
  cfg.levelset = parse_diagnostics(root["diagnostics"]);

  if (cfg.model.kind == ModelKind::Homothetic) {
    if (!root["capital"] || !root["capital"]["fixed"])
      fail(root, "capital", "homothetic models need a fixed capital");
    cfg.capital = parse_capital(root["capital"]);
    if (!cfg.levelset) fail(root, "diagnostics.levelset", "homothetic models only support the level-set check");
    cfg.sampler.kind = SamplerKind::None;
  } else {
    cfg.capital = parse_capital(root["capital"]);
  }
  const int d = cfg.model.dim();
  if (cfg.levelset && static_cast<int>(cfg.levelset->axes.size()) != d - 1)
    fail(root["diagnostics"], "diagnostics.levelset.axes", "need one axis per free coordinate");
  for (const auto& col : cfg.allocation.loading_columns)
    if (col.size() != d) fail(root["allocation"]["loading"], "allocation.loading", "columns need one entry per risk");
  if (cfg.sampler.kind == SamplerKind::HMC && cfg.model.joint && !cfg.model.joint->has_density())
    fail(root["sampler"], "sampler.method", "hmc needs a model with a density");
  if (cfg.sampler.kind == SamplerKind::MH && cfg.model.joint && !cfg.model.joint->has_density())
    fail(root["sampler"], "sampler.method", "mh needs a model with a density");
  cfg.digest = sha256_hex(text);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

}  // namespace alloclab
