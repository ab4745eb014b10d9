#pragma once

// Serialization: CSV tables and JSON documents for datasets, parameters,
// fit results, experiment reports, and run manifests. Doubles are written
// with the shortest representation that round-trips exactly, so identical
// runs produce byte-identical files and readers recover the exact bits.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "ppcaq/errors.hpp"
#include "ppcaq/lab.hpp"
#include "ppcaq/mle.hpp"
#include "ppcaq/model.hpp"
#include "ppcaq/quotient.hpp"

namespace ppcaq {

using Json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw IoError("could not parse floating-point value: '" + s + "'");
  return v;
}

inline std::string format_index(Index v) { return std::to_string(v); }

// --- Plain text / CSV -----------------------------------------------------

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf.str();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline void write_csv(const std::filesystem::path& path,
                      const CsvTable& table) {
  std::ostringstream out;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out << ',';
    out << table.header[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw InvalidInputError("write_csv: row width differs from header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  const std::string content = read_text_file(path);
  CsvTable table;
  std::istringstream lines(content);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size())
        throw IoError("read_csv: ragged row in " + path.string());
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw IoError("read_csv: empty file " + path.string());
  return table;
}

// --- Parameters and fit results -------------------------------------------

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty())
    throw IoError("matrix JSON must be a non-empty array of rows");
  const Index rows = Index(j.size());
  const Index cols = Index(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j.at(std::size_t(i));
    if (!row.is_array() || Index(row.size()) != cols)
      throw IoError("matrix JSON rows must all have the same width");
    for (Index k = 0; k < cols; ++k) m(i, k) = row.at(std::size_t(k)).get<double>();
  }
  return m;
}

inline Json params_to_json(const PpcaParams& theta) {
  return Json{{"w", matrix_to_json(theta.w)}, {"sigma2", theta.sigma2}};
}

inline PpcaParams params_from_json(const Json& j) {
  if (!j.contains("w") || !j.contains("sigma2"))
    throw IoError("parameter JSON needs fields 'w' and 'sigma2'");
  return PpcaParams(matrix_from_json(j.at("w")), j.at("sigma2").get<double>());
}

inline void write_params(const std::filesystem::path& path,
                         const PpcaParams& theta) {
  write_text_file(path, params_to_json(theta).dump(2) + "\n");
}

inline PpcaParams read_params(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& err) {
    throw IoError("parameter JSON parse failure in " + path.string() + ": " +
                  err.what());
  }
  return params_from_json(j);
}

inline Json fit_result_to_json(const FitResult& fit) {
  Json eigenvalues = Json::array();
  for (Index i = 0; i < fit.sample_spectrum.eigenvalues.size(); ++i)
    eigenvalues.push_back(fit.sample_spectrum.eigenvalues(i));
  Json clamped = Json::array();
  for (Index idx : fit.clamped) clamped.push_back(idx);
  return Json{{"theta_hat", params_to_json(fit.theta_hat)},
              {"eigenvalues", std::move(eigenvalues)},
              {"eigenvectors", matrix_to_json(fit.sample_spectrum.eigenvectors)},
              {"clamped", std::move(clamped)},
              {"loglik", fit.loglik}};
}

inline FitResult fit_result_from_json(const Json& j) {
  Spectrum spectrum;
  const Json& ev = j.at("eigenvalues");
  spectrum.eigenvalues.resize(Index(ev.size()));
  for (Index i = 0; i < spectrum.eigenvalues.size(); ++i)
    spectrum.eigenvalues(i) = ev.at(std::size_t(i)).get<double>();
  spectrum.eigenvectors = matrix_from_json(j.at("eigenvectors"));
  std::vector<Index> clamped;
  for (const auto& idx : j.at("clamped")) clamped.push_back(idx.get<Index>());
  return FitResult{params_from_json(j.at("theta_hat")), std::move(spectrum),
                   std::move(clamped), j.at("loglik").get<double>()};
}

// --- Datasets ---------------------------------------------------------------

inline std::filesystem::path dataset_meta_path(
    const std::filesystem::path& csv_path) {
  std::filesystem::path meta = csv_path;
  meta.replace_extension(".meta.json");
  return meta;
}

inline Json generator_to_json(const GeneratorSpec& gen) {
  if (gen.kind == GeneratorSpec::Kind::Iid) return Json{{"kind", "iid"}};
  return Json{{"kind", "m_dependent"}, {"m", gen.m}};
}

inline GeneratorSpec generator_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "iid") return GeneratorSpec::iid();
  if (kind == "m_dependent")
    return GeneratorSpec::m_dependent(j.at("m").get<int>());
  throw ConfigError("unknown generator kind: '" + kind + "'");
}

// Writes rows as CSV (header x0..x{p-1}) plus a metadata sidecar
// (<stem>.meta.json) recording seed, generator, shape, and the generating
// parameters when known.
inline void write_dataset(const std::filesystem::path& csv_path,
                          const Dataset& data) {
  CsvTable table;
  for (Index j = 0; j < data.p(); ++j)
    table.header.push_back("x" + std::to_string(j));
  table.rows.reserve(std::size_t(data.n()));
  for (Index i = 0; i < data.n(); ++i) {
    std::vector<std::string> row;
    row.reserve(std::size_t(data.p()));
    for (Index j = 0; j < data.p(); ++j)
      row.push_back(format_double(data.rows()(i, j)));
    table.rows.push_back(std::move(row));
  }
  write_csv(csv_path, table);

  Json meta{{"seed", data.seed()},
            {"generator", generator_to_json(data.generator())},
            {"n", data.n()},
            {"p", data.p()}};
  meta["truth"] = data.truth() ? params_to_json(*data.truth()) : Json(nullptr);
  write_text_file(dataset_meta_path(csv_path), meta.dump(2) + "\n");
}

// Reads a dataset CSV; if the metadata sidecar exists the provenance
// (seed, generator, truth) is restored, otherwise neutral values are used.
inline Dataset read_dataset(const std::filesystem::path& csv_path) {
  const CsvTable table = read_csv(csv_path);
  if (table.rows.empty())
    throw IoError("dataset has no rows: " + csv_path.string());
  const Index n = Index(table.rows.size());
  const Index p = Index(table.header.size());
  Matrix rows(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j)
      rows(i, j) = parse_double(table.rows[std::size_t(i)][std::size_t(j)]);

  GeneratorSpec gen = GeneratorSpec::iid();
  std::uint64_t seed = 0;
  std::optional<PpcaParams> truth;
  const std::filesystem::path meta_path = dataset_meta_path(csv_path);
  if (std::filesystem::exists(meta_path)) {
    Json meta;
    try {
      meta = Json::parse(read_text_file(meta_path));
    } catch (const Json::parse_error& err) {
      throw IoError("dataset metadata parse failure in " + meta_path.string() +
                    ": " + err.what());
    }
    gen = generator_from_json(meta.at("generator"));
    seed = meta.at("seed").get<std::uint64_t>();
    if (meta.contains("truth") && !meta.at("truth").is_null())
      truth = params_from_json(meta.at("truth"));
  }
  return Dataset(std::move(rows), gen, seed, std::move(truth));
}

// --- Experiment configs -----------------------------------------------------

inline Json theta0_spec_to_json(const Theta0Spec& spec) {
  if (spec.explicit_theta)
    return Json{{"explicit", params_to_json(*spec.explicit_theta)}};
  return Json{{"random", Json{{"seed", spec.seed}, {"scale", spec.scale}}}};
}

inline Theta0Spec theta0_spec_from_json(const Json& j) {
  if (j.contains("explicit"))
    return Theta0Spec::explicit_params(params_from_json(j.at("explicit")));
  if (j.contains("random")) {
    const Json& r = j.at("random");
    return Theta0Spec::random(r.at("seed").get<std::uint64_t>(),
                              r.value("scale", 1.0));
  }
  throw ConfigError("theta0 must contain either 'explicit' or 'random'");
}

// p, q, and seed are required; everything else defaults and the resolved
// values are echoed back (via experiment_config_to_json) into manifests.
inline ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig cfg;
  for (const char* key : {"p", "q", "seed"})
    if (!j.contains(key))
      throw ConfigError(std::string("experiment config: required field '") +
                        key + "' is missing");
  cfg.p = j.at("p").get<Index>();
  cfg.q = j.at("q").get<Index>();
  cfg.master_seed = j.at("seed").get<std::uint64_t>();
  cfg.theta0 = j.contains("theta0")
                   ? theta0_spec_from_json(j.at("theta0"))
                   : Theta0Spec::random(cfg.master_seed, 1.0);
  if (j.contains("n_grid")) {
    cfg.n_grid.clear();
    for (const auto& n : j.at("n_grid")) cfg.n_grid.push_back(n.get<Index>());
  } else {
    cfg.n_grid = {100, 1000, 10000, 100000};
  }
  cfg.reps = j.value("reps", 50);
  cfg.generator = j.contains("generator")
                      ? generator_from_json(j.at("generator"))
                      : GeneratorSpec::iid();
  cfg.eta = j.value("eta", 0.5);
  try {
    cfg.validate();
  } catch (const InvalidInputError& err) {
    throw ConfigError(std::string("experiment config: ") + err.what());
  }
  return cfg;
}

inline Json experiment_config_to_json(const ExperimentConfig& cfg) {
  Json grid = Json::array();
  for (Index n : cfg.n_grid) grid.push_back(n);
  return Json{{"p", cfg.p},
              {"q", cfg.q},
              {"seed", cfg.master_seed},
              {"theta0", theta0_spec_to_json(cfg.theta0)},
              {"n_grid", std::move(grid)},
              {"reps", cfg.reps},
              {"generator", generator_to_json(cfg.generator)},
              {"eta", cfg.eta}};
}

// --- Report tables ------------------------------------------------------------

inline CsvTable convergence_rows_csv(const std::vector<ConvergenceRow>& rows) {
  CsvTable table;
  table.header = {"n",          "rep",         "d_quotient", "cov_frob_err",
                  "sigma2_hat", "clamp_count", "runtime_ms"};
  table.rows.reserve(rows.size());
  for (const ConvergenceRow& r : rows)
    table.rows.push_back({format_index(r.n), std::to_string(r.rep),
                          format_double(r.d_quotient),
                          format_double(r.cov_frob_err),
                          format_double(r.sigma2_hat),
                          std::to_string(r.clamp_count),
                          format_double(r.runtime_ms)});
  return table;
}

// Long format for plotting: one (n, rep, metric, value) row per metric.
inline CsvTable convergence_long_csv(const std::vector<ConvergenceRow>& rows) {
  CsvTable table;
  table.header = {"n", "rep", "metric", "value"};
  table.rows.reserve(rows.size() * 4);
  for (const ConvergenceRow& r : rows) {
    const std::string n = format_index(r.n);
    const std::string rep = std::to_string(r.rep);
    table.rows.push_back({n, rep, "d_quotient", format_double(r.d_quotient)});
    table.rows.push_back(
        {n, rep, "cov_frob_err", format_double(r.cov_frob_err)});
    table.rows.push_back({n, rep, "sigma2_hat", format_double(r.sigma2_hat)});
    table.rows.push_back(
        {n, rep, "clamp_count", std::to_string(r.clamp_count)});
  }
  return table;
}

inline Json convergence_summary_json(const ExperimentConfig& cfg,
                                     const ConvergenceReport& report) {
  Json medians = Json::array();
  for (const MedianRow& m : report.medians)
    medians.push_back(Json{{"n", m.n},
                           {"median_d_quotient", m.median_d_quotient},
                           {"median_cov_frob_err", m.median_cov_frob_err}});
  return Json{{"config", experiment_config_to_json(cfg)},
              {"medians", std::move(medians)},
              {"loglog_slope_median_d_quotient", report.slope},
              {"degenerate_rows", report.degenerate_rows}};
}

inline CsvTable sup_ratio_csv(const SupRatioReport& report) {
  CsvTable table;
  table.header = {"n", "sup_log_ratio", "h_hat", "probe_count"};
  for (const SupRatioRow& r : report.rows)
    table.rows.push_back({format_index(r.n), format_double(r.sup_log_ratio),
                          format_double(r.h_hat),
                          std::to_string(r.probe_count)});
  return table;
}

inline CsvTable wald_decay_csv(const std::vector<WaldDecayRow>& rows) {
  CsvTable table;
  table.header = {"t", "log_density", "decay_bound"};
  for (const WaldDecayRow& r : rows)
    table.rows.push_back({format_double(r.t), format_double(r.log_density),
                          format_double(r.decay_bound)});
  return table;
}

inline CsvTable continuity_csv(const std::vector<ContinuityRow>& rows) {
  CsvTable table;
  table.header = {"i", "distance_to_c", "param_distance", "f_gap"};
  for (const ContinuityRow& r : rows)
    table.rows.push_back({std::to_string(r.i), format_double(r.distance_to_c),
                          format_double(r.param_dist),
                          format_double(r.f_gap)});
  return table;
}

inline CsvTable weak_lln_csv(const std::vector<WeakLlnRow>& rows) {
  CsvTable table;
  table.header = {"n", "mean_log_ratio", "var_of_mean"};
  for (const WeakLlnRow& r : rows)
    table.rows.push_back({format_index(r.n), format_double(r.mean_log_ratio),
                          format_double(r.var_of_mean)});
  return table;
}

inline CsvTable ray_chain_csv(const Eigen::Vector2d& x,
                              const Eigen::Vector2d& y, long k_max) {
  if (k_max < 1) throw InvalidInputError("ray_chain_csv: need k_max >= 1");
  CsvTable table;
  table.header = {"k", "distance", "value"};
  const double ambient = (x - y).norm();
  for (long k = 1; k <= k_max; ++k)
    table.rows.push_back({std::to_string(k),
                          format_double(ray_chain_bound(x, y, k)),
                          format_double(ambient)});
  return table;
}

inline CsvTable lift_discontinuity_csv(const std::vector<LiftSequenceRow>& rows) {
  CsvTable table;
  table.header = {"n", "distance", "value"};
  for (const LiftSequenceRow& r : rows)
    table.rows.push_back({std::to_string(r.n), format_double(r.distance),
                          format_double(r.value)});
  return table;
}

// --- Run manifest -------------------------------------------------------------

struct RunManifest {
  std::string command;
  Json resolved_config;
  std::vector<std::string> outputs;
  double wall_ms = 0.0;
  std::string version;
  std::uint64_t master_seed = 0;
};

inline Json manifest_to_json(const RunManifest& m) {
  Json outputs = Json::array();
  for (const std::string& path : m.outputs) outputs.push_back(path);
  return Json{{"command", m.command},
              {"config", m.resolved_config},
              {"outputs", std::move(outputs)},
              {"wall_ms", m.wall_ms},
              {"version", m.version},
              {"seed", m.master_seed}};
}

inline void write_manifest(const std::filesystem::path& path,
                           const RunManifest& m) {
  write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

}  // namespace ppcaq
