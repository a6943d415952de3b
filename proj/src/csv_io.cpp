#include "alloclab/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>

#include <boost/tokenizer.hpp>
#include <nlohmann/json.hpp>

#include "alloclab/diagnostics.hpp"
#include "alloclab/errors.hpp"
#include "alloclab/rng.hpp"

namespace alloclab {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  boost::escaped_list_separator<char> sep('\\', ',', '"');
  boost::tokenizer<boost::escaped_list_separator<char>> tok(line, sep);
  std::vector<std::string> out;
  for (auto& t : tok) {
    auto b = t.find_first_not_of(" \t\r");
    auto e = t.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : t.substr(b, e - b + 1));
  }
  return out;
}

bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == "NaN" || s == "nan"; }

int resolve_column(const std::string& name, const std::vector<std::string>& header) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it != header.end()) return static_cast<int>(it - header.begin());
  int idx = -1;
  auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
  if (ec == std::errc() && p == name.data() + name.size() && idx >= 0 && idx < static_cast<int>(header.size()))
    return idx;
  throw DataError("unknown column '" + name + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

IngestResult ingest_csv(const std::filesystem::path& path, const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = split_line(line);
    break;
  }
  if (header.empty()) throw DataError("empty file " + path.string());

  std::vector<int> cols;
  if (options.columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) cols.push_back(static_cast<int>(j));
  } else {
    for (const auto& c : options.columns) cols.push_back(resolve_column(c, header));
  }
  if (cols.size() < 2) throw DataError("need at least two numeric columns");
  std::vector<bool> flip(cols.size(), false);
  for (const auto& f : options.flip) {
    int c = resolve_column(f, header);
    auto it = std::find(cols.begin(), cols.end(), c);
    if (it == cols.end()) throw DataError("flipped column '" + f + "' is not selected");
    flip[it - cols.begin()] = true;
  }

  IngestResult res;
  for (int c : cols) res.names.push_back(header[c]);
  std::vector<double> values;
  std::size_t kept = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    auto cells = split_line(line);
    bool missing = false;
    std::vector<double> r(cols.size());
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (cols[k] >= static_cast<int>(cells.size()) || is_missing(cells[cols[k]])) {
        missing = true;
        continue;
      }
      const auto& s = cells[cols[k]];
      double v = 0.0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size())
        throw DataError("non-numeric cell '" + s + "' in data row " + std::to_string(row));
      r[k] = flip[k] ? -v : v;
    }
    if (missing) {
      ++res.dropped;
      continue;
    }
    values.insert(values.end(), r.begin(), r.end());
    ++kept;
  }
  res.rows_read = row;
  if (kept == 0) throw DataError("no complete data rows in " + path.string());
  Samples data = Eigen::Map<Samples>(values.data(), kept, cols.size());
  if (options.resample) {
    Rng rng = make_rng(options.seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, data.rows() - 1);
    Samples out(*options.resample, data.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) = data.row(pick(rng));
    data = std::move(out);
  }
  res.data = std::move(data);
  return res;
}

JointModel empirical_model(const Samples& data) {
  std::vector<Margin> margins;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    std::vector<double> v(data.rows());
    for (Eigen::Index i = 0; i < data.rows(); ++i) v[i] = data(i, j);
    margins.emplace_back(Empirical{std::move(v)});
  }
  return JointModel(std::move(margins), CopulaModel(EmpiricalResampleCopula{pseudo_observations(data)}));
}

void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Samples& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) out << (j ? "," : "") << format_double(rows(i, j));
    out << '\n';
  }
}

PlotKind plot_kind(const std::string& name) {
  if (name == "scatter") return PlotKind::Scatter;
  if (name == "levelset") return PlotKind::LevelSet;
  if (name == "chain-trace") return PlotKind::ChainTrace;
  throw ParameterError("unknown plot kind '" + name + "' (scatter, levelset, chain-trace)");
}

std::filesystem::path export_plotdata(const std::filesystem::path& report, PlotKind kind,
                                      const std::filesystem::path& out) {
  std::ifstream in(report);
  if (!in) throw DataError("cannot open report " + report.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  const char* name = kind == PlotKind::Scatter ? "scatter" : kind == PlotKind::LevelSet ? "levelset" : "chain_trace";
  if (!j.contains("artifacts") || !j["artifacts"].contains(name) || j["artifacts"][name].is_null())
    throw NotAvailableError(std::string("report has no ") + name + " artifact");
  const auto& a = j["artifacts"][name];

  if (kind == PlotKind::LevelSet) {
    const auto& axes = a["axes"];
    std::vector<Axis> ax;
    for (const auto& x : axes) ax.push_back({x[0].get<double>(), x[1].get<double>(), x[2].get<int>()});
    GridSpec grid(ax);
    const auto label = a["label"].get<std::vector<int>>();
    if (label.size() != grid.size()) throw DataError("level-set mask has the wrong size");
    std::ofstream os(out);
    if (!os) throw DataError("cannot write " + out.string());
    for (int k = 0; k < grid.dim(); ++k) os << "x" << k + 1 << ",";
    os << "inside,component\n";
    for (std::size_t c = 0; c < grid.size(); ++c) {
      auto p = grid.point(c);
      for (int k = 0; k < grid.dim(); ++k) os << format_double(p(k)) << ",";
      os << (label[c] >= 0 ? 1 : 0) << "," << label[c] << "\n";
    }
    return out;
  }

  auto header = a["columns"].get<std::vector<std::string>>();
  const auto& rows = a["rows"];
  Samples m(rows.size(), header.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < header.size(); ++k) m(i, k) = rows[i][k].get<double>();
  write_matrix_csv(out, header, m);
  return out;
}

}  // namespace alloclab
