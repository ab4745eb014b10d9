// Batch front-end: simulate datasets, fit the closed-form estimator, run
// the experiment suites, and compute quotient-space distances between
// saved parameter files. Every command that writes files also writes a
// manifest recording the fully-resolved config, the artifact paths, the
// tool version, and the master seed. Exit codes: 0 success, 2 config or
// usage error, 3 I/O error, 4 numerical degeneracy.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppcaq/ppcaq.hpp"

namespace fs = std::filesystem;
using namespace ppcaq;

namespace {

Json load_config(const fs::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& err) {
    // err.what() carries the line/column anchor.
    throw ConfigError("config " + path.string() + ": " + err.what());
  }
}

void require_fields(const Json& j, std::initializer_list<const char*> keys) {
  for (const char* key : keys)
    if (!j.contains(key))
      throw ConfigError(std::string("config: required field '") + key +
                        "' is missing");
}

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() +
                        ": " + ec.message());
  return dir;
}

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  }
};

int run_simulate(const std::string& config_path, const std::string& out,
                 const std::optional<std::uint64_t>& seed_override,
                 bool dry_run) {
  Timer timer;
  Json j = load_config(config_path);
  if (seed_override) j["seed"] = *seed_override;
  require_fields(j, {"p", "q", "seed"});

  const Index p = j.at("p").get<Index>();
  const Index q = j.at("q").get<Index>();
  const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
  const Index n = j.value("n", Index(100));
  const GeneratorSpec generator = j.contains("generator")
                                      ? generator_from_json(j.at("generator"))
                                      : GeneratorSpec::iid();
  const Theta0Spec theta0_spec = j.contains("theta0")
                                     ? theta0_spec_from_json(j.at("theta0"))
                                     : Theta0Spec::random(seed, 1.0);
  if (n < 1) throw ConfigError("config: n must be >= 1");
  const PpcaParams theta0 = make_theta0(theta0_spec, p, q);

  Json resolved{{"p", p},
                {"q", q},
                {"seed", seed},
                {"n", n},
                {"generator", generator_to_json(generator)},
                {"theta0", theta0_spec_to_json(theta0_spec)}};
  if (dry_run) {
    std::cout << "dry-run: configuration valid; nothing written\n";
    return 0;
  }

  const Dataset data = sample(theta0, n, generator, seed);
  const fs::path dir = ensure_out_dir(out);
  const fs::path csv = dir / "data.csv";
  write_dataset(csv, data);

  RunManifest manifest;
  manifest.command = "simulate";
  manifest.resolved_config = std::move(resolved);
  manifest.outputs = {csv.string(), dataset_meta_path(csv).string()};
  manifest.wall_ms = timer.ms();
  manifest.version = kVersion;
  manifest.master_seed = seed;
  write_manifest(dir / "manifest.json", manifest);

  std::cout << "wrote " << csv.string() << " (n=" << n << ", p=" << p << ")\n";
  return 0;
}

int run_fit(const std::string& data_path, Index q, const std::string& out,
            bool dry_run) {
  Timer timer;
  const Dataset data = read_dataset(data_path);
  if (q < 1 || q >= data.p())
    throw ConfigError("fit: need 1 <= q < p (q=" + std::to_string(q) +
                      ", p=" + std::to_string(data.p()) + ")");
  if (dry_run) {
    std::cout << "dry-run: inputs valid; nothing written\n";
    return 0;
  }
  const FitResult fit = mle_fit(data, q);
  const fs::path out_path(out);
  if (out_path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(out_path.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory for " + out_path.string() + ": " +
                    ec.message());
  }
  write_text_file(out_path, fit_result_to_json(fit).dump(2) + "\n");

  RunManifest manifest;
  manifest.command = "fit";
  manifest.resolved_config = Json{{"data", data_path},
                                  {"q", q},
                                  {"out", out},
                                  {"generator",
                                   generator_to_json(data.generator())}};
  manifest.outputs = {out_path.string()};
  manifest.wall_ms = timer.ms();
  manifest.version = kVersion;
  manifest.master_seed = data.seed();
  write_manifest(fs::path(out_path.string() + ".manifest.json"), manifest);

  std::cout << "loglik=" << format_double(fit.loglik) << "\n"
            << "clamp_count=" << fit.clamped.size() << "\n";
  return 0;
}

int run_distance(const std::string& a_path, const std::string& b_path,
                 const std::string& theta0_path) {
  const PpcaParams a = read_params(a_path);
  const PpcaParams b = read_params(b_path);
  auto anchor = std::make_shared<const IdentifiedSet>(read_params(theta0_path));

  const double pd = param_distance(a, b);
  const double da = distance_to_identified_set(a, *anchor);
  const double db = distance_to_identified_set(b, *anchor);
  const double qd = quotient_distance({a, anchor}, {b, anchor});
  std::cout << "param_distance=" << format_double(pd) << "\n"
            << "distance_to_c_a=" << format_double(da) << "\n"
            << "distance_to_c_b=" << format_double(db) << "\n"
            << "quotient_distance=" << format_double(qd) << "\n";
  return 0;
}

int run_experiment(const std::string& config_path, const std::string& out,
                   const std::optional<std::uint64_t>& seed_override,
                   int threads, bool dry_run) {
  Timer timer;
  Json j = load_config(config_path);
  if (seed_override) j["seed"] = *seed_override;
  require_fields(j, {"kind"});
  const std::string kind = j.at("kind").get<std::string>();

  RunManifest manifest;
  manifest.command = "experiment";
  manifest.version = kVersion;

  if (kind == "consistency") {
    Json cfg_json = j;
    cfg_json.erase("kind");
    const ExperimentConfig cfg = experiment_config_from_json(cfg_json);
    manifest.resolved_config =
        Json{{"kind", kind}, {"experiment", experiment_config_to_json(cfg)}};
    manifest.master_seed = cfg.master_seed;
    if (dry_run) {
      std::cout << "dry-run: configuration valid; nothing written\n";
      return 0;
    }
    const ConvergenceReport report = run_consistency_experiment(cfg, threads);
    const fs::path dir = ensure_out_dir(out);
    const fs::path rows_csv = dir / "report.csv";
    const fs::path long_csv = dir / "report_long.csv";
    const fs::path summary = dir / "summary.json";
    write_csv(rows_csv, convergence_rows_csv(report.rows));
    write_csv(long_csv, convergence_long_csv(report.rows));
    write_text_file(summary,
                    convergence_summary_json(cfg, report).dump(2) + "\n");
    manifest.outputs = {rows_csv.string(), long_csv.string(), summary.string()};
    manifest.wall_ms = timer.ms();
    write_manifest(dir / "manifest.json", manifest);
    std::cout << "consistency experiment: " << report.rows.size()
              << " replications, slope=" << format_double(report.slope)
              << "\n";
    return 0;
  }

  if (kind == "sup-ratio") {
    Json cfg_json = j;
    cfg_json.erase("kind");
    const int restarts = cfg_json.value("restarts", 16);
    cfg_json.erase("restarts");
    const ExperimentConfig cfg = experiment_config_from_json(cfg_json);
    manifest.resolved_config = Json{{"kind", kind},
                                    {"experiment", experiment_config_to_json(cfg)},
                                    {"restarts", restarts}};
    manifest.master_seed = cfg.master_seed;
    if (dry_run) {
      std::cout << "dry-run: configuration valid; nothing written\n";
      return 0;
    }
    SupRatioReport report;
    for (std::size_t idx = 0; idx < cfg.n_grid.size(); ++idx)
      report.rows.push_back(estimate_sup_ratio(
          cfg, cfg.n_grid[idx],
          derive_seed(cfg.master_seed, "supratio", idx), {}, restarts));
    const fs::path dir = ensure_out_dir(out);
    const fs::path csv = dir / "sup_ratio.csv";
    write_csv(csv, sup_ratio_csv(report));
    Json rows = Json::array();
    for (const SupRatioRow& r : report.rows)
      rows.push_back(Json{{"n", r.n},
                          {"sup_log_ratio", r.sup_log_ratio},
                          {"h_hat", r.h_hat},
                          {"probe_count", r.probe_count}});
    const fs::path summary = dir / "summary.json";
    write_text_file(
        summary,
        Json{{"config", manifest.resolved_config},
             {"rows", std::move(rows)},
             {"note",
              "sup_log_ratio is a multistart lower bound on the true sup "
              "(heuristic certification, not exact global optimization)"}}
                .dump(2) +
            "\n");
    manifest.outputs = {csv.string(), summary.string()};
    manifest.wall_ms = timer.ms();
    write_manifest(dir / "manifest.json", manifest);
    std::cout << "sup-ratio experiment: " << report.rows.size() << " rows\n";
    return 0;
  }

  if (kind == "wald-diagnostics") {
    require_fields(j, {"p", "q", "seed"});
    const Index p = j.at("p").get<Index>();
    const Index q = j.at("q").get<Index>();
    const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
    std::vector<double> scale_grid;
    if (j.contains("scale_grid")) {
      for (const auto& t : j.at("scale_grid"))
        scale_grid.push_back(t.get<double>());
    } else {
      scale_grid = {1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6};
    }
    const std::string path_name = j.value("scale_path", "noise-only");
    WaldScalePath path;
    if (path_name == "noise-only")
      path = WaldScalePath::NoiseOnly;
    else if (path_name == "joint")
      path = WaldScalePath::Joint;
    else
      throw ConfigError("config: unknown scale_path '" + path_name + "'");
    const long i_max = j.value("continuity_i_max", 10000L);

    manifest.resolved_config = Json{{"kind", kind},
                                    {"p", p},
                                    {"q", q},
                                    {"seed", seed},
                                    {"scale_grid", scale_grid},
                                    {"scale_path", path_name},
                                    {"continuity_i_max", i_max},
                                    {"continuity_instance", "pinned-reference"}};
    manifest.master_seed = seed;

    std::optional<ExperimentConfig> lln_cfg;
    std::vector<Index> lln_grid;
    double lln_sigma2_factor = 2.0;
    if (j.contains("lln")) {
      const Json& lj = j.at("lln");
      require_fields(lj, {"p", "q", "m"});
      ExperimentConfig cfg;
      cfg.p = lj.at("p").get<Index>();
      cfg.q = lj.at("q").get<Index>();
      cfg.generator = GeneratorSpec::m_dependent(lj.at("m").get<int>());
      cfg.master_seed = seed;
      cfg.theta0 = Theta0Spec::random(seed, 1.0);
      if (lj.contains("n_grid"))
        for (const auto& n : lj.at("n_grid")) lln_grid.push_back(n.get<Index>());
      else
        lln_grid = {1000, 10000, 100000};
      cfg.n_grid = lln_grid;
      lln_sigma2_factor = lj.value("sigma2_factor", 2.0);
      if (!(lln_sigma2_factor > 0.0))
        throw ConfigError("config: lln.sigma2_factor must be positive");
      cfg.validate();
      lln_cfg = cfg;
      manifest.resolved_config["lln"] = Json{{"p", cfg.p},
                                             {"q", cfg.q},
                                             {"m", cfg.generator.m},
                                             {"n_grid", lln_grid},
                                             {"sigma2_factor",
                                              lln_sigma2_factor}};
    }

    if (dry_run) {
      std::cout << "dry-run: configuration valid; nothing written\n";
      return 0;
    }

    const PpcaParams theta1 = wald_reference_params(p, q, seed);
    const Vector x = wald_reference_observation(theta1, seed);
    const auto wald_rows = wald_decay_diagnostic(theta1, scale_grid, x, path);

    const ContinuityReference cont = continuity_reference();
    const auto cont_rows = continuity_diagnostic(cont.theta0, i_max, cont.x,
                                                 true, cont.perturbation);

    const fs::path dir = ensure_out_dir(out);
    const fs::path wald_csv_path = dir / "wald_decay.csv";
    const fs::path cont_csv_path = dir / "continuity.csv";
    write_csv(wald_csv_path, wald_decay_csv(wald_rows));
    write_csv(cont_csv_path, continuity_csv(cont_rows));
    manifest.outputs = {wald_csv_path.string(), cont_csv_path.string()};

    if (lln_cfg) {
      const PpcaParams lln_theta0 = make_theta0(*lln_cfg);
      const PpcaParams lln_theta(lln_theta0.w,
                                 lln_theta0.sigma2 * lln_sigma2_factor);
      const auto lln_rows = weak_lln_diagnostic(*lln_cfg, lln_theta, lln_grid);
      const fs::path lln_csv_path = dir / "weak_lln.csv";
      write_csv(lln_csv_path, weak_lln_csv(lln_rows));
      manifest.outputs.push_back(lln_csv_path.string());
    }

    manifest.wall_ms = timer.ms();
    write_manifest(dir / "manifest.json", manifest);
    std::cout << "wald diagnostics: " << wald_rows.size() << " decay rows, "
              << cont_rows.size() << " continuity rows\n";
    return 0;
  }

  if (kind == "counterexamples") {
    require_fields(j, {"seed"});
    const std::uint64_t seed = j.at("seed").get<std::uint64_t>();
    const long k_max = j.value("k_max", 2000L);
    const long n_max = j.value("n_max", 250L);
    if (k_max < 1 || n_max < 2)
      throw ConfigError("config: need k_max >= 1 and n_max >= 2");
    manifest.resolved_config =
        Json{{"kind", kind}, {"seed", seed}, {"k_max", k_max}, {"n_max", n_max}};
    manifest.master_seed = seed;
    if (dry_run) {
      std::cout << "dry-run: configuration valid; nothing written\n";
      return 0;
    }
    const fs::path dir = ensure_out_dir(out);
    const fs::path ray_csv = dir / "ray_chain.csv";
    const fs::path lift_csv = dir / "lift_discontinuity.csv";
    write_csv(ray_csv, ray_chain_csv(Eigen::Vector2d(1.0, 0.0),
                                     Eigen::Vector2d(0.0, 1.0), k_max));
    write_csv(lift_csv,
              lift_discontinuity_csv(lift_discontinuity_sequence(n_max)));
    manifest.outputs = {ray_csv.string(), lift_csv.string()};
    manifest.wall_ms = timer.ms();
    write_manifest(dir / "manifest.json", manifest);
    std::cout << "counterexamples: wrote ray chain and lift tables\n";
    return 0;
  }

  throw ConfigError("config: unknown experiment kind '" + kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PPCA quotient-space estimation and consistency experiments"};
  app.require_subcommand(1);

  std::string config_path, out, data_path, a_path, b_path, theta0_path;
  Index q = 0;
  std::uint64_t seed_value = 0;
  bool seed_given = false;
  int threads = 1;
  bool dry_run = false;

  CLI::App* simulate = app.add_subcommand("simulate", "sample a dataset");
  simulate->add_option("--config", config_path, "config JSON path")
      ->required();
  simulate->add_option("--out", out, "output directory")->required();
  simulate->add_option("--seed", seed_value, "override the config seed");
  simulate->add_flag("--dry-run", dry_run, "validate config, write nothing");

  CLI::App* fit = app.add_subcommand("fit", "closed-form maximum likelihood");
  fit->add_option("--data", data_path, "dataset CSV path")->required();
  fit->add_option("--q", q, "latent dimension")->required();
  fit->add_option("--out", out, "output JSON path")->required();
  fit->add_flag("--dry-run", dry_run, "validate inputs, write nothing");

  CLI::App* experiment =
      app.add_subcommand("experiment", "run an experiment suite");
  experiment->add_option("--config", config_path, "config JSON path")
      ->required();
  experiment->add_option("--out", out, "output directory")->required();
  experiment->add_option("--seed", seed_value, "override the config seed");
  experiment->add_option("--threads", threads, "worker threads")
      ->check(CLI::PositiveNumber);
  experiment->add_flag("--dry-run", dry_run, "validate config, write nothing");

  CLI::App* distance =
      app.add_subcommand("distance", "quotient distances between parameters");
  distance->add_option("--a", a_path, "first parameter JSON")->required();
  distance->add_option("--b", b_path, "second parameter JSON")->required();
  distance->add_option("--theta0", theta0_path, "anchor parameter JSON")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  seed_given = simulate->count("--seed") > 0 || experiment->count("--seed") > 0;
  const std::optional<std::uint64_t> seed_override =
      seed_given ? std::optional<std::uint64_t>(seed_value) : std::nullopt;

  try {
    if (simulate->parsed())
      return run_simulate(config_path, out, seed_override, dry_run);
    if (fit->parsed()) return run_fit(data_path, q, out, dry_run);
    if (experiment->parsed())
      return run_experiment(config_path, out, seed_override, threads, dry_run);
    if (distance->parsed())
      return run_distance(a_path, b_path, theta0_path);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return 2;
  } catch (const InvalidInputError& err) {
    std::cerr << "invalid input: " << err.what() << "\n";
    return 2;
  } catch (const IoError& err) {
    std::cerr << "i/o error: " << err.what() << "\n";
    return 3;
  } catch (const DegenerateDataError& err) {
    std::cerr << "degenerate data: " << err.what() << "\n";
    return 4;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return 4;
  } catch (const OracleFailureError& err) {
    std::cerr << "oracle failure: " << err.what() << "\n";
    return 4;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
