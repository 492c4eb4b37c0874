#include "loos/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include "loos/experiments.hpp"
#include "loos/io.hpp"
#include "loos/rng.hpp"

namespace loos {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split(const std::string& text, char sep = ',') {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const auto& s : split(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw std::invalid_argument(flag + ": '" + s + "' is not a number");
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  for (double v : parse_doubles(text, flag)) {
    if (!(v >= 1.0) || v != std::floor(v))
      throw std::invalid_argument(flag + ": expected positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

std::vector<Method> parse_methods(const std::string& text) {
  std::vector<Method> out;
  for (const auto& s : split(text)) out.push_back(Method::parse(s));
  if (out.empty()) throw std::invalid_argument("--methods: no methods given");
  return out;
}

/// "k=10,K=5" (either part optional).
OutlierPlan parse_outliers(const std::string& text) {
  OutlierPlan p;
  for (const auto& part : split(text)) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--outliers: expected k=<count>,K=<size>");
    const std::string key = part.substr(0, eq);
    const double v = parse_doubles(part.substr(eq + 1), "--outliers").at(0);
    if (key == "k") {
      if (v < 0.0 || v != std::floor(v)) throw std::invalid_argument("--outliers: k must be a count");
      p.count = static_cast<std::size_t>(v);
    } else if (key == "K") {
      p.magnitude = v;
    } else {
      throw std::invalid_argument("--outliers: unknown key '" + key + "'");
    }
  }
  return p;
}

Theta theta_from_list(const std::vector<double>& v, const std::string& flag) {
  if (v.size() < 2 || v.size() > 3)
    throw std::invalid_argument(flag + ": expected tau,kappa[,sigma_eps]");
  return Theta::natural(v[0], v[1], v.size() == 3 ? std::optional<double>(v[2]) : std::nullopt);
}

/// Flags shared by commands that build a StudyConfig; unset flags keep the
/// config-file or default value.
struct ModelFlags {
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::optional<std::string> model;
  std::optional<double> tau, kappa, sigma_eps;
  std::optional<std::size_t> nx, ny, replicates, n_train, n_test;
  std::optional<std::uint64_t> seed, design_seed;
  std::optional<std::string> beta;
  bool covariates = false;

  void add(CLI::App& app, bool with_preset) {
    app.add_option("--config", config, "JSON config file; flags override its values");
    if (with_preset)
      app.add_option("--preset", preset, "Named configuration: fig2, fig4, fig5, predictive");
    app.add_option("--model", model, "Model kind: direct, latent or nonstationary");
    app.add_option("--tau", tau, "True tau (tau_0 for the non-stationary model)");
    app.add_option("--kappa", kappa, "True kappa");
    app.add_option("--sigma-eps", sigma_eps, "True measurement noise sd (latent models)");
    app.add_option("--nx", nx, "Lattice nodes along x");
    app.add_option("--ny", ny, "Lattice nodes along y");
    app.add_option("--replicates,--reps", replicates, "Replicates per dataset");
    app.add_option("--n-train", n_train, "Observed nodes for latent models");
    app.add_option("--n-test", n_test, "Held-out nodes for latent models");
    app.add_option("--design-seed", design_seed, "Seed of the observation design");
    app.add_flag("--covariates", covariates, "Add the synthetic covariate mean [1, s1/10, sin(s2)]");
    app.add_option("--beta", beta, "Regression coefficients, comma separated");
    app.add_option("--seed", seed, "Random seed (required)");
  }

  StudyConfig resolve(bool& seed_given) const {
    StudyConfig c;
    seed_given = false;
    if (preset) c = StudyConfig::preset(*preset);
    if (config) {
      const std::string text = read_file(*config);
      c = config_from_json(text, c);
      try {
        seed_given = nlohmann::json::parse(text).contains("seed");
      } catch (const std::exception&) {
      }
    }
    if (model) {
      c.kind = parse_model_kind(*model);
      if (c.kind != ModelKind::Direct && !c.truth.log_sigma_eps) c.truth.log_sigma_eps = std::log(0.5);
      if (c.kind == ModelKind::Direct) c.truth.log_sigma_eps.reset();
    }
    if (tau) {
      if (!(*tau > 0.0)) throw std::invalid_argument("--tau must be positive");
      c.truth.log_tau = std::log(*tau);
    }
    if (kappa) {
      if (!(*kappa > 0.0)) throw std::invalid_argument("--kappa must be positive");
      c.truth.log_kappa = std::log(*kappa);
    }
    if (sigma_eps) {
      if (!(*sigma_eps > 0.0)) throw std::invalid_argument("--sigma-eps must be positive");
      c.truth.log_sigma_eps = std::log(*sigma_eps);
    }
    if (nx) c.lattice.nx = *nx;
    if (ny) c.lattice.ny = *ny;
    if (replicates) c.n_replicates = *replicates;
    if (n_train) c.n_train = *n_train;
    if (n_test) c.n_test = *n_test;
    if (design_seed) c.design_seed = *design_seed;
    if (covariates) c.covariates = true;
    if (beta) c.truth.beta = parse_doubles(*beta, "--beta");
    if (c.covariates && c.truth.beta.empty()) c.truth.beta = {1.0, 0.5, -0.5};
    if (seed) {
      c.seed = *seed;
      seed_given = true;
    }
    return c;
  }
};

void require_seed(bool given) {
  if (!given) throw std::invalid_argument("--seed is required for this command");
}

std::string hash_and_write(Manifest& manifest, const fs::path& dir, const std::string& name,
                           const std::string& text) {
  write_file(dir / name, text);
  const std::string h = content_hash(text);
  manifest.outputs.emplace_back(name, h);
  return h;
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------- commands

int cmd_simulate(const ModelFlags& flags, const std::optional<std::string>& outliers,
                 const std::string& out_dir, const std::string& name, std::ostream& out) {
  bool seed_given = false;
  StudyConfig c = flags.resolve(seed_given);
  require_seed(seed_given);
  c.validate();
  const ModelSpec model = c.model();
  Dataset data = simulate(model, c.truth, c.n_replicates, c.seed);
  if (outliers) {
    const OutlierPlan plan = parse_outliers(*outliers);
    data = inject_outliers(std::move(data), plan.count, plan.magnitude,
                           derive_seed(c.seed, 0, 1));
  }
  std::ostringstream json, csv;
  write_dataset_json(json, data);
  write_replicates_csv(csv, data);
  const fs::path dir(out_dir);
  write_file(dir / (name + ".json"), json.str());
  write_file(dir / (name + ".csv"), csv.str());
  const auto s = interpret_params(c.truth);
  out << "model = " << to_string(model.kind) << " (" << model.lattice.nx << "x" << model.lattice.ny
      << ", " << model.n_obs() << " observations)\n";
  out << "replicates = " << data.replicates.size() << '\n';
  out << "outliers = " << data.outlier_log.size() << '\n';
  out << "marginal_sd = " << fmt(s.marginal_sd, 4) << '\n';
  out << "practical_range = " << fmt(s.practical_range, 4) << '\n';
  out << "wrote " << (dir / (name + ".json")).string() << '\n';
  return kExitOk;
}

int cmd_fit(const std::string& data_path, const std::string& method_text,
            const std::optional<std::string>& init_text, const NelderMeadOptions& nm,
            bool no_timing, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const Method method = Method::parse(method_text);
  std::istringstream in(read_file(data_path));
  const Dataset data = read_dataset_json(in);
  const ModelSpec& model = data.model;
  Theta init;
  if (init_text) {
    init = theta_from_list(parse_doubles(*init_text, "--init"), "--init");
  } else if (data.truth) {
    init = *data.truth;
    init.log_tau += 0.25;
    init.log_kappa += 0.25;
    if (init.log_sigma_eps) *init.log_sigma_eps += 0.25;
  } else {
    init = Theta::natural(1.0, 1.0);
  }
  if (model.is_latent() && !init.log_sigma_eps) init.log_sigma_eps = 0.0;
  if (!model.is_latent()) init.log_sigma_eps.reset();
  init.beta.assign(model.n_beta(), 0.0);

  FitResult res = fit(Objective(method, data), init, nm);
  if (no_timing) res.wall_time = 0.0;
  std::ostringstream report, csv;
  write_fit_report(report, res, method, model);
  write_fit_csv(csv, res, method, model);
  const fs::path dir(out_dir);
  write_file(dir / "fit_report.txt", report.str());
  write_file(dir / "fit.csv", csv.str());
  out << report.str();
  if (!res.converged) err << "warning: optimizer did not converge\n";
  return kExitOk;
}

int cmd_study(const ModelFlags& flags, const std::optional<std::size_t>& repetitions,
              const std::optional<std::string>& methods, const std::vector<std::string>& outliers,
              bool predictive, bool no_timing, const std::string& out_dir, std::ostream& out) {
  bool seed_given = false;
  StudyConfig c = flags.resolve(seed_given);
  require_seed(seed_given);
  if (repetitions) c.n_repetitions = *repetitions;
  if (methods) c.methods = parse_methods(*methods);
  if (!outliers.empty()) {
    c.plans.clear();
    for (const auto& o : outliers) c.plans.push_back(parse_outliers(o));
  }
  if (no_timing) c.record_timing = false;
  predictive = predictive || (flags.preset && *flags.preset == "predictive");
  c.validate();

  const fs::path dir(out_dir);
  const std::string config_json = config_to_json(c);
  Manifest manifest;
  manifest.command = predictive ? "study predictive" : "study";
  manifest.config_hash = content_hash(config_json);
  manifest.seed = c.seed;
  manifest.entries.emplace_back("repetitions", std::to_string(c.n_repetitions));
  manifest.entries.emplace_back("timing", c.record_timing ? "recorded" : "off");
  hash_and_write(manifest, dir, "config.json", config_json);

  if (predictive) {
    const auto design = choose_observation_design(c.lattice, c.n_train, c.n_test, c.design_seed);
    const PredictiveResult res = predictive_study(c, design);
    std::ostringstream csv;
    write_predictive_csv(csv, res, c.plans);
    hash_and_write(manifest, dir, "predictive.csv", csv.str());
    out << "outliers_k,outlier_K,protocol,metric,mean_rel_diff,median_rel_diff,share_positive\n";
    for (std::size_t p = 0; p < c.plans.size(); ++p) {
      for (const char* protocol : {"train_loo", "test"}) {
        for (const char* metric : {"root", "rmse"}) {
          std::vector<double> v;
          for (const auto& r : res.rows)
            if (r.plan == p && r.protocol == protocol && r.metric == metric)
              v.push_back(r.relative_difference);
          double pos = 0.0;
          for (double x : v) pos += x > 0.0 ? 1.0 : 0.0;
          out << c.plans[p].count << ',' << fmt(c.plans[p].magnitude) << ',' << protocol << ','
              << metric << ',' << fmt(pairwise_sum(v) / static_cast<double>(v.size())) << ','
              << fmt(median(v)) << ',' << fmt(pos / static_cast<double>(v.size()), 3) << '\n';
        }
      }
    }
  } else {
    const StudyResult res = run_estimation_study(c);
    std::ostringstream est, summary;
    write_estimates_csv(est, res, c.plans);
    write_summary_csv(summary, res, c.plans);
    hash_and_write(manifest, dir, "estimates.csv", est.str());
    hash_and_write(manifest, dir, "summary.csv", summary.str());
    out << summary.str();
  }
  std::ostringstream m;
  write_manifest(m, manifest);
  write_file(dir / "manifest.txt", m.str());
  return kExitOk;
}

int cmd_godambe(const ModelFlags& flags, const std::vector<std::string>& thetas,
                const std::vector<std::string>& sd_ranges, std::size_t nsims,
                std::size_t reps_per_sim, double fd_step, const std::optional<std::string>& methods,
                const std::string& out_dir, std::ostream& out) {
  bool seed_given = false;
  StudyConfig c = flags.resolve(seed_given);
  require_seed(seed_given);
  if (c.kind != ModelKind::Direct)
    throw std::invalid_argument("--model: the Godambe table uses the direct model");
  c.validate();
  std::vector<Theta> list;
  for (const auto& t : thetas) list.push_back(theta_from_list(parse_doubles(t, "--theta"), "--theta"));
  for (const auto& t : sd_ranges) {
    const auto v = parse_doubles(t, "--sd-range");
    if (v.size() != 2) throw std::invalid_argument("--sd-range: expected sd,range");
    list.push_back(theta_from_sd_range(v[0], v[1]));
  }
  if (list.empty()) list.push_back(c.truth);
  const std::vector<Method> ms = methods ? parse_methods(*methods) : standard_methods(2.0);
  GodambeOptions opt;
  opt.n_sims = nsims;
  opt.reps_per_sim = reps_per_sim;
  opt.seed = c.seed;
  opt.fd_step = fd_step;
  if (nsims < 100) throw std::invalid_argument("--nsims must be at least 100");
  const auto rows = godambe_table(list, ms, c.model(), opt);

  std::ostringstream csv;
  write_godambe_csv(csv, rows);
  const fs::path dir(out_dir);
  Manifest manifest;
  manifest.command = "godambe";
  manifest.config_hash = content_hash(config_to_json(c));
  manifest.seed = c.seed;
  manifest.entries.emplace_back("nsims", std::to_string(nsims));
  manifest.entries.emplace_back("reps_per_sim", std::to_string(reps_per_sim));
  manifest.entries.emplace_back("fd_step", fmt(fd_step));
  hash_and_write(manifest, dir, "godambe.csv", csv.str());
  std::ostringstream m;
  write_manifest(m, manifest);
  write_file(dir / "manifest.txt", m.str());
  out << csv.str();
  return kExitOk;
}

int cmd_benchmark(const std::string& sizes, std::size_t timing_reps, bool fits,
                  const std::optional<std::uint64_t>& seed, const std::optional<double>& tau,
                  const std::optional<double>& kappa, const std::string& out_dir,
                  std::ostream& out) {
  require_seed(seed.has_value());
  RuntimeOptions opt;
  opt.sizes = parse_sizes(sizes, "--sizes");
  opt.n_timing_reps = timing_reps;
  opt.include_fits = fits;
  opt.seed = *seed;
  opt.theta = Theta::natural(tau.value_or(0.16), kappa.value_or(1.75));
  if (timing_reps < 5) throw std::invalid_argument("--timing-reps must be at least 5");
  const RuntimeResult res = runtime_scaling(opt);

  std::ostringstream csv;
  write_runtime_csv(csv, res);
  const fs::path dir(out_dir);
  Manifest manifest;
  manifest.command = "benchmark";
  manifest.config_hash = content_hash(sizes + ";" + std::to_string(timing_reps) + ";" +
                                      (fits ? "fits" : "evals"));
  manifest.seed = opt.seed;
  for (const auto& s : res.slopes)
    manifest.entries.emplace_back("slope " + s.method + " " + s.what, fmt(s.slope, 4));
  hash_and_write(manifest, dir, "runtime.csv", csv.str());
  std::ostringstream m;
  write_manifest(m, manifest);
  write_file(dir / "manifest.txt", m.str());
  out << csv.str();
  for (const auto& s : res.slopes)
    out << "slope " << s.method << ' ' << s.what << " = " << fmt(s.slope, 4) << '\n';
  return kExitOk;
}

int cmd_score(const std::string& rule_text, double mu, double sigma, const std::vector<double>& ys,
              bool negate, std::ostream& out) {
  const ScoringRule rule = ScoringRule::parse(rule_text);
  const GaussPredictive p(mu, sigma);
  for (double y : ys) {
    const double s = score(rule, p, y);
    out << rule.name() << ' ' << fmt(y, 10) << ' ' << fmt(negate ? -s : s, 12) << '\n';
  }
  return kExitOk;
}

int cmd_diagnose(const std::vector<std::string>& rules, const std::string& sigmas, double rel_step,
                 std::ostream& out) {
  std::vector<ScoringRule> list;
  for (const auto& r : rules) list.push_back(ScoringRule::parse(r));
  if (list.empty())
    list = {ScoringRule::log(), ScoringRule::crps(), ScoringRule::scrps(), ScoringRule::root(),
            ScoringRule::rcrps(2.0)};
  const auto s = parse_doubles(sigmas, "--sigmas");
  out << "rule,sensitivity_index,scale_exponent,measured_exponent,robust,scale_invariant\n";
  for (const auto& rule : list)
    out << rule.name() << ',' << rule.sensitivity_index() << ',' << fmt(rule.scale_exponent())
        << ',' << fmt(divergence_scale_exponent(rule, s, rel_step), 4) << ','
        << (rule.is_robust() ? "yes" : "no") << ',' << (rule.is_scale_invariant() ? "yes" : "no")
        << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leave-one-out scoring-rule estimation for Gaussian Markov random fields", "loos"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  std::optional<int> threads;
  app.add_option("--threads", threads, "Worker threads (default: all cores)")
      ->check(CLI::PositiveNumber);

  std::function<int()> action;

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a dataset and write JSON and CSV files");
  ModelFlags sim_flags;
  sim_flags.add(*sim, false);
  std::optional<std::string> sim_outliers;
  std::string sim_out = ".", sim_name = "dataset";
  sim->add_option("--outliers", sim_outliers, "Contamination plan k=<replicates>,K=<size>");
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_option("--name", sim_name, "Output file stem");
  sim->callback([&] {
    action = [&] { return cmd_simulate(sim_flags, sim_outliers, sim_out, sim_name, out); };
  });

  // fit
  auto* fitc = app.add_subcommand("fit", "Fit one method to a dataset file");
  std::string fit_data, fit_method = "ml", fit_out = ".";
  std::optional<std::string> fit_init;
  NelderMeadOptions fit_nm;
  bool fit_no_timing = false;
  fitc->add_option("--data", fit_data, "Dataset JSON file")->required();
  fitc->add_option("--method", fit_method, "ml | loos:log | loos:crps | loos:scrps | loos:root | loos:rcrps:<c>");
  fitc->add_option("--init", fit_init, "Starting point tau,kappa[,sigma_eps]");
  fitc->add_option("--xtol", fit_nm.xtol, "Simplex diameter tolerance");
  fitc->add_option("--ftol", fit_nm.ftol, "Simplex value-spread tolerance");
  fitc->add_option("--max-evals", fit_nm.max_evaluations, "Evaluation budget (0: 500 per parameter)");
  fitc->add_flag("--no-timing", fit_no_timing, "Report zero wall time for byte-identical output");
  fitc->add_option("--out", fit_out, "Output directory");
  fitc->callback([&] {
    action = [&] {
      return cmd_fit(fit_data, fit_method, fit_init, fit_nm, fit_no_timing, fit_out, out, err);
    };
  });

  // study
  auto* study = app.add_subcommand("study", "Run a replicated estimation or predictive study");
  ModelFlags study_flags;
  study_flags.add(*study, true);
  std::optional<std::size_t> study_reps;
  std::optional<std::string> study_methods;
  std::vector<std::string> study_outliers;
  bool study_predictive = false, study_no_timing = false;
  std::string study_out = ".";
  study->add_option("--repetitions", study_reps, "Number of simulated datasets");
  study->add_option("--methods", study_methods, "Comma-separated methods");
  study->add_option("--outliers", study_outliers, "Contamination plan k=<replicates>,K=<size>; repeatable");
  study->add_flag("--predictive", study_predictive, "Root-LOOS vs ML predictive comparison");
  study->add_flag("--no-timing", study_no_timing, "Write zero wall times for byte-identical output");
  study->add_option("--out", study_out, "Output directory");
  study->callback([&] {
    action = [&] {
      return cmd_study(study_flags, study_reps, study_methods, study_outliers, study_predictive,
                       study_no_timing, study_out, out);
    };
  });

  // godambe
  auto* god = app.add_subcommand("godambe", "Asymptotic standard deviations from the Godambe matrix");
  ModelFlags god_flags;
  god_flags.add(*god, false);
  std::vector<std::string> god_theta, god_sd_range;
  std::size_t god_nsims = 1000, god_reps = 1;
  double god_step = 1e-4;
  std::optional<std::string> god_methods;
  std::string god_out = ".";
  god->add_option("--theta", god_theta, "tau,kappa at which to evaluate; repeatable");
  god->add_option("--sd-range", god_sd_range, "Marginal sd and practical range; repeatable");
  god->add_option("--nsims", god_nsims, "Simulated datasets");
  god->add_option("--reps-per-sim", god_reps, "Replicates per simulated dataset");
  god->add_option("--fd-step", god_step, "Relative finite-difference step");
  god->add_option("--methods", god_methods, "Comma-separated methods");
  god->add_option("--out", god_out, "Output directory");
  god->callback([&] {
    action = [&] {
      return cmd_godambe(god_flags, god_theta, god_sd_range, god_nsims, god_reps, god_step,
                         god_methods, god_out, out);
    };
  });

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Time objective evaluations across lattice sizes");
  std::string bench_sizes = "400,1600,6400,25600", bench_out = ".";
  std::size_t bench_reps = 5;
  bool bench_fits = false;
  std::optional<std::uint64_t> bench_seed;
  std::optional<double> bench_tau, bench_kappa;
  bench->add_option("--sizes", bench_sizes, "Comma-separated node counts");
  bench->add_option("--timing-reps", bench_reps, "Timed repetitions per point (median, at least 5)");
  bench->add_flag("--fits", bench_fits, "Also time full fits");
  bench->add_option("--seed", bench_seed, "Random seed (required)");
  bench->add_option("--tau", bench_tau, "tau");
  bench->add_option("--kappa", bench_kappa, "kappa");
  bench->add_option("--out", bench_out, "Output directory");
  bench->callback([&] {
    action = [&] {
      return cmd_benchmark(bench_sizes, bench_reps, bench_fits, bench_seed, bench_tau, bench_kappa,
                           bench_out, out);
    };
  });

  // score
  auto* sc = app.add_subcommand("score", "Score Gaussian predictive N(mu, sigma^2) at observations");
  std::string sc_rule = "crps";
  double sc_mu = 0.0, sc_sigma = 1.0;
  std::vector<double> sc_y;
  bool sc_negate = false;
  sc->add_option("--rule", sc_rule, "log | crps | scrps | root | rcrps:<c>");
  sc->add_option("--mu", sc_mu, "Predictive mean");
  sc->add_option("--sigma", sc_sigma, "Predictive sd");
  sc->add_option("--y", sc_y, "Observation; repeatable")->required();
  sc->add_flag("--negate", sc_negate, "Print negatively oriented values (smaller is better)");
  sc->callback([&] {
    action = [&] { return cmd_score(sc_rule, sc_mu, sc_sigma, sc_y, sc_negate, out); };
  });

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "Scoring-rule sensitivity and scale diagnostics");
  std::vector<std::string> diag_rules;
  std::string diag_sigmas = "0.5,1,2,4";
  double diag_step = 1e-3;
  diag->add_option("--rule", diag_rules, "Rule to diagnose; repeatable (default: all)");
  diag->add_option("--sigmas", diag_sigmas, "Predictive sds for the exponent fit");
  diag->add_option("--rel-step", diag_step, "Location perturbation relative to sigma");
  diag->callback([&] { action = [&] { return cmd_diagnose(diag_rules, diag_sigmas, diag_step, out); }; });

  // version
  auto* ver = app.add_subcommand("version", "Print the build identifier");
  ver->callback([&] {
    action = [&] {
      out << version_string() << '\n';
      return kExitOk;
    };
  });

  std::vector<std::string> argv_storage{"loos"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (threads) omp_set_num_threads(*threads);
  try {
    return action();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace loos
