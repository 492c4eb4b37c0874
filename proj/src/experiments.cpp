#include "loos/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>
#include <omp.h>

#include "loos/rng.hpp"

namespace loos {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt(double v, int digits = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

Vector observed(std::span<const double> x, std::span<const std::size_t> idx) {
  Vector out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = x[idx[k]];
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Scoped single-thread region for timing runs.
class SingleThread {
 public:
  SingleThread() : saved_(omp_get_max_threads()) { omp_set_num_threads(1); }
  ~SingleThread() { omp_set_num_threads(saved_); }
  SingleThread(const SingleThread&) = delete;
  SingleThread& operator=(const SingleThread&) = delete;

 private:
  int saved_;
};

std::vector<EstimateRow> fit_all(const StudyConfig& config, const ModelSpec& model,
                                 const Dataset& data, std::size_t plan, std::size_t rep) {
  std::vector<EstimateRow> rows;
  const Theta init = config.initial_theta(model);
  const auto names = model.param_names();
  for (const Method& method : config.methods) {
    FitResult res;
    try {
      res = fit(Objective(method, data), init, config.optimizer);
    } catch (const std::exception&) {
      res = FitResult{init, std::nan(""), 0, false, 0.0};
      for (double& b : res.theta_hat.beta) b = std::nan("");
      res.theta_hat.log_tau = res.theta_hat.log_kappa = std::nan("");
      if (res.theta_hat.log_sigma_eps) res.theta_hat.log_sigma_eps = std::nan("");
    }
    const auto est = model.pack(res.theta_hat);
    for (std::size_t j = 0; j < names.size(); ++j)
      rows.push_back({plan, rep, method.name(), names[j], est[j],
                      config.record_timing ? res.wall_time : 0.0, res.n_evaluations,
                      res.converged});
  }
  return rows;
}

}  // namespace

// ---------------------------------------------------------------- config

void StudyConfig::validate() const {
  lattice.validate();
  if (n_replicates == 0) throw std::invalid_argument("replicates must be positive");
  if (n_repetitions == 0) throw std::invalid_argument("repetitions must be positive");
  if (methods.empty()) throw std::invalid_argument("methods must be nonempty");
  if (plans.empty()) throw std::invalid_argument("outliers must list at least one plan");
  for (const auto& p : plans) {
    if (p.count > n_replicates)
      throw std::invalid_argument("outliers.count exceeds the number of replicates");
    if (!(p.magnitude > 0.0)) throw std::invalid_argument("outliers.magnitude must be positive");
  }
  if (kind != ModelKind::Direct) {
    if (!truth.log_sigma_eps) throw std::invalid_argument("latent models need sigma_eps");
    if (n_train == 0) throw std::invalid_argument("n_train must be positive");
  }
  if (covariates && truth.beta.size() != 3)
    throw std::invalid_argument("beta must have 3 entries with synthetic covariates");
  if (!covariates && !truth.beta.empty())
    throw std::invalid_argument("beta given without covariates");
}

ModelSpec StudyConfig::model() const {
  ModelSpec m;
  m.kind = kind;
  m.lattice = lattice;
  if (covariates) m.covariates = synthetic_covariates(lattice);
  if (kind != ModelKind::Direct)
    m.obs_indices = choose_observation_design(lattice, n_train, n_test, design_seed).train;
  return m;
}

Theta StudyConfig::initial_theta(const ModelSpec& model) const {
  Theta t = truth;
  t.log_tau += init_offset;
  t.log_kappa += init_offset;
  if (model.is_latent() && t.log_sigma_eps) *t.log_sigma_eps += init_offset;
  t.beta.assign(model.n_beta(), 0.0);
  return t;
}

StudyConfig StudyConfig::preset(const std::string& name) {
  StudyConfig c;
  if (name == "fig2") {
    c.plans = {{0, 5.0}, {5, 5.0}, {10, 5.0}};
  } else if (name == "fig4" || name == "fig5") {
    c.kind = name == "fig4" ? ModelKind::Latent : ModelKind::LatentNonstationary;
    c.truth = Theta::natural(0.16, 1.75, 0.5);
    c.plans = {{0, 5.0}, {10, 5.0}};
  } else if (name == "predictive") {
    c.kind = ModelKind::Latent;
    c.truth = Theta::natural(0.16, 1.75, 0.5);
    c.plans = {{0, 5.0}, {10, 5.0}, {10, 10.0}};
    c.methods = {Method::ml(), Method::loos(ScoringRule::root())};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return c;
}

std::vector<std::string> StudyConfig::preset_names() { return {"fig2", "fig4", "fig5", "predictive"}; }

std::string config_to_json(const StudyConfig& c) {
  Json j;
  j["model"] = to_string(c.kind);
  j["tau"] = c.truth.tau();
  j["kappa"] = c.truth.kappa();
  if (c.truth.log_sigma_eps) j["sigma_eps"] = c.truth.sigma_eps();
  j["covariates"] = c.covariates;
  j["beta"] = c.truth.beta;
  j["nx"] = c.lattice.nx;
  j["ny"] = c.lattice.ny;
  j["x_range"] = {c.lattice.x_min, c.lattice.x_max};
  j["y_range"] = {c.lattice.y_min, c.lattice.y_max};
  j["replicates"] = c.n_replicates;
  j["repetitions"] = c.n_repetitions;
  Json plans = Json::array();
  for (const auto& p : c.plans) plans.push_back({{"count", p.count}, {"magnitude", p.magnitude}});
  j["outliers"] = plans;
  Json methods = Json::array();
  for (const auto& m : c.methods) methods.push_back(m.name());
  j["methods"] = methods;
  j["seed"] = c.seed;
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  j["design_seed"] = c.design_seed;
  j["init_offset"] = c.init_offset;
  j["xtol"] = c.optimizer.xtol;
  j["ftol"] = c.optimizer.ftol;
  j["max_evaluations"] = c.optimizer.max_evaluations;
  j["initial_step"] = c.optimizer.initial_step;
  j["record_timing"] = c.record_timing;
  return j.dump(2) + "\n";
}

StudyConfig config_from_json(const std::string& text, StudyConfig c) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  static const std::vector<std::string> known{
      "model",   "tau",        "kappa",    "sigma_eps",   "covariates",     "beta",
      "nx",      "ny",         "x_range",  "y_range",     "replicates",     "repetitions",
      "outliers", "methods",   "seed",     "n_train",     "n_test",         "design_seed",
      "init_offset", "xtol",   "ftol",     "max_evaluations", "initial_step", "record_timing",
      "preset"};
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw std::invalid_argument("unknown config key '" + key + "'");

  auto get = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(target);
    } catch (const Json::exception&) {
      throw std::invalid_argument(std::string("config field '") + key + "' has the wrong type");
    }
  };
  if (j.contains("preset")) {
    std::string p;
    get("preset", p);
    c = StudyConfig::preset(p);
  }
  if (j.contains("model")) {
    std::string m;
    get("model", m);
    c.kind = parse_model_kind(m);
    if (c.kind != ModelKind::Direct && !c.truth.log_sigma_eps) c.truth.log_sigma_eps = std::log(0.5);
    if (c.kind == ModelKind::Direct) c.truth.log_sigma_eps.reset();
  }
  double tau = c.truth.tau(), kappa = c.truth.kappa();
  get("tau", tau);
  get("kappa", kappa);
  if (!(tau > 0.0) || !(kappa > 0.0))
    throw std::invalid_argument("config fields 'tau' and 'kappa' must be positive");
  c.truth.log_tau = std::log(tau);
  c.truth.log_kappa = std::log(kappa);
  if (j.contains("sigma_eps")) {
    double s = 0.0;
    get("sigma_eps", s);
    if (!(s > 0.0)) throw std::invalid_argument("config field 'sigma_eps' must be positive");
    c.truth.log_sigma_eps = std::log(s);
  }
  get("covariates", c.covariates);
  get("beta", c.truth.beta);
  get("nx", c.lattice.nx);
  get("ny", c.lattice.ny);
  std::vector<double> range;
  if (j.contains("x_range")) {
    get("x_range", range);
    if (range.size() != 2) throw std::invalid_argument("config field 'x_range' needs two values");
    c.lattice.x_min = range[0];
    c.lattice.x_max = range[1];
  }
  if (j.contains("y_range")) {
    get("y_range", range);
    if (range.size() != 2) throw std::invalid_argument("config field 'y_range' needs two values");
    c.lattice.y_min = range[0];
    c.lattice.y_max = range[1];
  }
  get("replicates", c.n_replicates);
  get("repetitions", c.n_repetitions);
  if (j.contains("outliers")) {
    c.plans.clear();
    try {
      for (const auto& p : j.at("outliers"))
        c.plans.push_back({p.at("count").get<std::size_t>(), p.value("magnitude", 5.0)});
    } catch (const Json::exception&) {
      throw std::invalid_argument(
          "config field 'outliers' must be a list of {count, magnitude} objects");
    }
  }
  if (j.contains("methods")) {
    std::vector<std::string> names;
    get("methods", names);
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(Method::parse(n));
  }
  get("seed", c.seed);
  get("n_train", c.n_train);
  get("n_test", c.n_test);
  get("design_seed", c.design_seed);
  get("init_offset", c.init_offset);
  get("xtol", c.optimizer.xtol);
  get("ftol", c.optimizer.ftol);
  get("max_evaluations", c.optimizer.max_evaluations);
  get("initial_step", c.optimizer.initial_step);
  get("record_timing", c.record_timing);
  return c;
}

// ---------------------------------------------------------------- summaries

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

std::vector<SummaryRow> summarize(const std::vector<EstimateRow>& rows) {
  // Keyed by first appearance so the summary follows the row order.
  std::vector<std::tuple<std::size_t, std::string, std::string>> keys;
  std::map<std::tuple<std::size_t, std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rows) {
    auto key = std::make_tuple(r.plan, r.method, r.parameter);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) keys.push_back(key);
    if (std::isfinite(r.estimate)) it->second.push_back(r.estimate);
  }
  std::vector<SummaryRow> out;
  for (const auto& key : keys) {
    const auto& v = groups[key];
    double sd = std::nan("");
    if (v.size() > 1) {
      const double mean = pairwise_sum(v) / static_cast<double>(v.size());
      std::vector<double> sq(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
      sd = std::sqrt(pairwise_sum(sq) / static_cast<double>(v.size() - 1));
    }
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), median(v),
                   quantile(v, 0.75) - quantile(v, 0.25), sd, v.size()});
  }
  return out;
}

// ---------------------------------------------------------------- studies

StudyResult run_estimation_study(const StudyConfig& config) {
  config.validate();
  const ModelSpec model = config.model();
  const auto reps = static_cast<std::ptrdiff_t>(config.n_repetitions);
  std::vector<std::vector<EstimateRow>> per_rep(config.n_repetitions);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < reps; ++r) {
    const auto rep = static_cast<std::size_t>(r);
    const Dataset clean =
        simulate(model, config.truth, config.n_replicates, derive_seed(config.seed, rep, 0));
    for (std::size_t p = 0; p < config.plans.size(); ++p) {
      const Dataset data = inject_outliers(clean, config.plans[p].count, config.plans[p].magnitude,
                                           derive_seed(config.seed, rep, 1 + p));
      auto rows = fit_all(config, model, data, p, rep);
      per_rep[rep].insert(per_rep[rep].end(), rows.begin(), rows.end());
    }
  }

  StudyResult result;
  for (std::size_t p = 0; p < config.plans.size(); ++p)
    for (const auto& rows : per_rep)
      for (const auto& row : rows)
        if (row.plan == p) result.rows.push_back(row);
  result.summary = summarize(result.rows);
  return result;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope needs two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

RuntimeResult runtime_scaling(const RuntimeOptions& options) {
  if (options.sizes.size() < 2) throw std::invalid_argument("runtime scaling needs two sizes");
  if (options.n_timing_reps < 1) throw std::invalid_argument("n_timing_reps must be positive");
  const SingleThread single;
  RuntimeResult result;
  std::map<std::pair<std::string, std::string>, std::pair<Vector, Vector>> series;
  std::vector<std::pair<std::string, std::string>> order;
  auto record = [&](std::size_t n, const std::string& method, const std::string& what, double s) {
    result.rows.push_back({n, method, what, s});
    auto key = std::make_pair(method, what);
    if (!series.contains(key)) order.push_back(key);
    series[key].first.push_back(static_cast<double>(n));
    series[key].second.push_back(s);
  };

  for (std::size_t target : options.sizes) {
    ModelSpec model;
    model.lattice = LatticeSpec::for_size(target);
    const std::size_t n = model.lattice.size();
    const Dataset data = simulate(model, options.theta, 1, derive_seed(options.seed, n, 0));
    for (const Method& method : options.methods) {
      const Objective objective(method, data);
      volatile double sink = objective.value(options.theta);
      auto t0 = std::chrono::steady_clock::now();
      sink = objective.value(options.theta);
      const double single_eval = std::max(seconds_since(t0), 1e-7);
      const auto batch = static_cast<std::size_t>(std::ceil(0.02 / single_eval));
      std::vector<double> times;
      for (std::size_t k = 0; k < options.n_timing_reps; ++k) {
        t0 = std::chrono::steady_clock::now();
        for (std::size_t b = 0; b < batch; ++b) sink = objective.value(options.theta);
        times.push_back(seconds_since(t0) / static_cast<double>(batch));
      }
      (void)sink;
      record(n, method.name(), "eval", median(times));
      if (options.include_fits) {
        Theta init = options.theta;
        init.log_tau += 0.25;
        init.log_kappa += 0.25;
        record(n, method.name(), "fit", fit(objective, init).wall_time);
      }
    }
  }
  for (const auto& key : order) {
    const auto& [x, y] = series[key];
    result.slopes.push_back({key.first, key.second, log_log_slope(x, y)});
  }
  return result;
}

// ---------------------------------------------------------------- prediction

double relative_difference(double s_loos, double s_ml) {
  return 100.0 * (s_loos - s_ml) / std::abs(s_ml);
}

PredictiveScores predictive_scores(const Theta& theta, const ModelSpec& train_model,
                                   const std::vector<Vector>& train,
                                   std::span<const std::size_t> test_nodes,
                                   const std::vector<Vector>& test) {
  if (!train_model.is_latent()) throw std::invalid_argument("predictive scores need a latent model");
  if (train.size() != test.size()) throw DimensionMismatch("train and test replicate counts differ");
  const PrecisionBuilder builder(train_model);
  const LatentMarginal marginal(builder.build(theta), train_model.obs_indices, theta.sigma_eps());
  const Vector mu = mean_vector(theta, train_model);
  const Vector mu_y = observed(mu, train_model.obs_indices);
  const ScoringRule root = ScoringRule::root();

  Vector root_loo(train.size()), se_loo(train.size()), root_test(train.size()),
      se_test(train.size());
  for (std::size_t r = 0; r < train.size(); ++r) {
    const auto loo = marginal.loo_conditionals(train[r], mu_y);
    root_loo[r] = mean_score(root, loo, train[r]);
    Vector e(loo.size());
    for (std::size_t k = 0; k < loo.size(); ++k) e[k] = std::pow(loo[k].mu() - train[r][k], 2);
    se_loo[r] = pairwise_sum(e) / static_cast<double>(e.size());

    if (test[r].size() != test_nodes.size()) throw DimensionMismatch("test length differs");
    const auto pred = marginal.predict(train[r], mu, test_nodes);
    root_test[r] = mean_score(root, pred, test[r]);
    Vector et(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) et[k] = std::pow(pred[k].mu() - test[r][k], 2);
    se_test[r] = pairwise_sum(et) / static_cast<double>(et.size());
  }
  const double reps = static_cast<double>(train.size());
  return {pairwise_sum(root_loo) / reps, std::sqrt(pairwise_sum(se_loo) / reps),
          pairwise_sum(root_test) / reps, std::sqrt(pairwise_sum(se_test) / reps)};
}

PredictiveResult predictive_study(const StudyConfig& config, const ObservationDesign& design) {
  config.validate();
  if (config.kind == ModelKind::Direct)
    throw std::invalid_argument("the predictive study needs a latent model");
  if (design.train.empty() || design.test.empty())
    throw std::invalid_argument("the predictive study needs training and test nodes");

  ModelSpec joint = config.model();
  joint.obs_indices = design.train;
  joint.obs_indices.insert(joint.obs_indices.end(), design.test.begin(), design.test.end());
  ModelSpec train_model = joint;
  train_model.obs_indices = design.train;
  joint.validate();
  const std::size_t m = design.train.size();
  const Method loos_root = Method::loos(ScoringRule::root());
  const Theta init = config.initial_theta(train_model);

  const auto reps = static_cast<std::ptrdiff_t>(config.n_repetitions);
  std::vector<std::vector<PredictiveRow>> per_rep(config.n_repetitions);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < reps; ++r) {
    const auto rep = static_cast<std::size_t>(r);
    const Dataset all =
        simulate(joint, config.truth, config.n_replicates, derive_seed(config.seed, rep, 0));
    Dataset train;
    train.model = train_model;
    train.truth = config.truth;
    std::vector<Vector> test;
    for (const auto& y : all.replicates) {
      train.replicates.emplace_back(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(m));
      test.emplace_back(y.begin() + static_cast<std::ptrdiff_t>(m), y.end());
    }
    for (std::size_t p = 0; p < config.plans.size(); ++p) {
      const Dataset data = inject_outliers(train, config.plans[p].count, config.plans[p].magnitude,
                                           derive_seed(config.seed, rep, 1 + p));
      const FitResult f_root = fit(Objective(loos_root, data), init, config.optimizer);
      const FitResult f_ml = fit(Objective(Method::ml(), data), init, config.optimizer);
      const auto s_root =
          predictive_scores(f_root.theta_hat, train_model, data.replicates, design.test, test);
      const auto s_ml =
          predictive_scores(f_ml.theta_hat, train_model, data.replicates, design.test, test);
      auto add = [&](const char* protocol, const char* metric, double a, double b, bool lower) {
        const double rel = lower ? relative_difference(-a, -b) : relative_difference(a, b);
        per_rep[rep].push_back({p, rep, protocol, metric, a, b, rel});
      };
      add("train_loo", "root", s_root.root_train_loo, s_ml.root_train_loo, false);
      add("train_loo", "rmse", s_root.rmse_train_loo, s_ml.rmse_train_loo, true);
      add("test", "root", s_root.root_test, s_ml.root_test, false);
      add("test", "rmse", s_root.rmse_test, s_ml.rmse_test, true);
    }
  }
  PredictiveResult result;
  for (std::size_t p = 0; p < config.plans.size(); ++p)
    for (const auto& rows : per_rep)
      for (const auto& row : rows)
        if (row.plan == p) result.rows.push_back(row);
  return result;
}

// ---------------------------------------------------------------- Godambe

std::vector<GodambeRow> godambe_table(const std::vector<Theta>& thetas,
                                      const std::vector<Method>& methods, const ModelSpec& model,
                                      const GodambeOptions& options) {
  if (model.is_latent()) throw std::invalid_argument("the Godambe table uses the direct model");
  if (methods.empty()) throw std::invalid_argument("no methods requested");
  std::vector<GodambeRow> rows;
  const auto names = model.param_names();
  for (const Theta& theta : thetas) {
    std::vector<GodambeRow> block(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) block[j] = {theta, names[j], {}, {}};
    for (const Method& method : methods) {
      const GodambeResult g = godambe(theta, model, method, options);
      for (std::size_t j = 0; j < names.size(); ++j) {
        block[j].labels.push_back(method.label());
        block[j].sd.push_back(g.asymptotic_sd[j]);
      }
    }
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

// ---------------------------------------------------------------- output

void write_estimates_csv(std::ostream& out, const StudyResult& result,
                         const std::vector<OutlierPlan>& plans) {
  out << "outliers_k,outlier_K,repetition,method,parameter,estimate,wall_time_s,n_eval,converged\n";
  for (const auto& r : result.rows)
    out << plans.at(r.plan).count << ',' << fmt(plans.at(r.plan).magnitude) << ',' << r.repetition
        << ',' << r.method << ',' << r.parameter << ',' << fmt(r.estimate) << ','
        << fmt(r.wall_time, 6) << ',' << r.n_evaluations << ',' << (r.converged ? 1 : 0) << '\n';
}

void write_summary_csv(std::ostream& out, const StudyResult& result,
                       const std::vector<OutlierPlan>& plans) {
  out << "outliers_k,outlier_K,method,parameter,median,iqr,sd,count\n";
  for (const auto& s : result.summary)
    out << plans.at(s.plan).count << ',' << fmt(plans.at(s.plan).magnitude) << ',' << s.method
        << ',' << s.parameter << ',' << fmt(s.median) << ',' << fmt(s.iqr) << ',' << fmt(s.sd)
        << ',' << s.count << '\n';
}

void write_runtime_csv(std::ostream& out, const RuntimeResult& result) {
  out << "n,method,what,seconds\n";
  for (const auto& r : result.rows)
    out << r.n << ',' << r.method << ',' << r.what << ',' << fmt(r.seconds, 6) << '\n';
}

void write_godambe_csv(std::ostream& out, const std::vector<GodambeRow>& rows) {
  if (rows.empty()) return;
  out << "tau,kappa,parameter";
  for (const auto& l : rows.front().labels) out << ',' << l;
  out << '\n';
  for (const auto& r : rows) {
    out << fmt(r.theta.tau(), 6) << ',' << fmt(r.theta.kappa(), 6) << ',' << r.parameter;
    for (double v : r.sd) out << ',' << fmt(v, 6);
    out << '\n';
  }
}

void write_predictive_csv(std::ostream& out, const PredictiveResult& result,
                          const std::vector<OutlierPlan>& plans) {
  out << "outliers_k,outlier_K,repetition,protocol,metric,loos_root,ml,relative_difference\n";
  for (const auto& r : result.rows)
    out << plans.at(r.plan).count << ',' << fmt(plans.at(r.plan).magnitude) << ',' << r.repetition
        << ',' << r.protocol << ',' << r.metric << ',' << fmt(r.loos_value) << ','
        << fmt(r.ml_value) << ',' << fmt(r.relative_difference) << '\n';
}

std::string content_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(std::ostream& out, const Manifest& m) {
  out << "command = " << m.command << '\n';
  out << "version = " << version_string() << '\n';
  out << "config_hash = " << m.config_hash << '\n';
  out << "seed = " << m.seed << '\n';
  for (const auto& [k, v] : m.entries) out << k << " = " << v << '\n';
  for (const auto& [k, v] : m.outputs) out << "output " << k << " = " << v << '\n';
}

std::string version_string() { return std::string("loos ") + LOOS_VERSION; }

}  // namespace loos
