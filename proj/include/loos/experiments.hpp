#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "loos/estimators.hpp"

namespace loos {

/// Outliers in `count` distinct replicates, one per replicate, of size
/// |y| + magnitude.
struct OutlierPlan {
  std::size_t count = 0;
  double magnitude = 5.0;

  friend bool operator==(const OutlierPlan&, const OutlierPlan&) = default;
};

struct StudyConfig {
  ModelKind kind = ModelKind::Direct;
  Theta truth = Theta::natural(0.16, 1.75);
  LatticeSpec lattice;
  bool covariates = false;
  std::size_t n_replicates = 10;
  std::size_t n_repetitions = 300;
  std::vector<OutlierPlan> plans{OutlierPlan{}};
  std::vector<Method> methods = standard_methods(2.0);
  std::uint64_t seed = 1;
  /// Latent designs: training and test node counts and the design seed.
  std::size_t n_train = 300;
  std::size_t n_test = 60;
  std::uint64_t design_seed = 2024;
  /// Every fit starts from the true log-parameters plus this offset
  /// (regression coefficients start at zero).
  double init_offset = 0.25;
  NelderMeadOptions optimizer;
  /// Record wall-clock times; off gives byte-identical outputs across runs.
  bool record_timing = true;

  void validate() const;
  /// Model with the training observation design for latent kinds.
  ModelSpec model() const;
  Theta initial_theta(const ModelSpec& model) const;

  static StudyConfig preset(const std::string& name);
  static std::vector<std::string> preset_names();
};

/// Canonical JSON form, used for config files and the manifest hash.
std::string config_to_json(const StudyConfig& config);
/// Keys not present keep their defaults; unknown keys are errors.
StudyConfig config_from_json(const std::string& text, StudyConfig base = {});

struct EstimateRow {
  std::size_t plan;
  std::size_t repetition;
  std::string method;
  std::string parameter;
  double estimate;
  double wall_time;
  std::size_t n_evaluations;
  bool converged;
};

struct SummaryRow {
  std::size_t plan;
  std::string method;
  std::string parameter;
  double median;
  double iqr;
  double sd;
  std::size_t count;
};

struct StudyResult {
  std::vector<EstimateRow> rows;
  std::vector<SummaryRow> summary;
};

/// Per-method, per-parameter median, IQR (type-7 quantiles) and sample sd.
std::vector<SummaryRow> summarize(const std::vector<EstimateRow>& rows);
double median(std::vector<double> values);
double quantile(std::vector<double> values, double p);

/// Simulates, contaminates and fits every method for each repetition.
/// Repetition r uses data seed derive_seed(seed, r, 0) and outlier seed
/// derive_seed(seed, r, 1 + plan); all plans share the same clean data.
/// Repetitions run in parallel; rows are ordered by (plan, repetition,
/// method, parameter) whatever the schedule.
StudyResult run_estimation_study(const StudyConfig& config);

struct RuntimeRow {
  std::size_t n;
  std::string method;
  std::string what;  // "eval" or "fit"
  double seconds;
};

struct RuntimeSlope {
  std::string method;
  std::string what;
  double slope;
};

struct RuntimeResult {
  std::vector<RuntimeRow> rows;
  std::vector<RuntimeSlope> slopes;
};

struct RuntimeOptions {
  std::vector<std::size_t> sizes{400, 1600, 6400, 25600};
  Theta theta = Theta::natural(0.16, 1.75);
  std::vector<Method> methods{Method::ml(), Method::loos(ScoringRule::root())};
  std::size_t n_timing_reps = 5;
  bool include_fits = false;
  std::uint64_t seed = 1;
};

/// Direct-model timings: the median of n_timing_reps warm single-threaded
/// evaluations per size (short evaluations are timed in batches), and
/// optionally full fits. Slopes are least squares in log n vs log seconds.
RuntimeResult runtime_scaling(const RuntimeOptions& options);

/// Least-squares slope of log y against log x.
double log_log_slope(std::span<const double> x, std::span<const double> y);

struct PredictiveScores {
  double root_train_loo;
  double rmse_train_loo;
  double root_test;
  double rmse_test;
};

/// Mean Root score and RMSE of (i) leave-one-out conditionals on the
/// training data and (ii) predictions of the test observations given the
/// training data, all replicates pooled.
PredictiveScores predictive_scores(const Theta& theta, const ModelSpec& train_model,
                                   const std::vector<Vector>& train,
                                   std::span<const std::size_t> test_nodes,
                                   const std::vector<Vector>& test);

/// 100 (s_loos - s_ml) / |s_ml| for positively oriented scores, so positive
/// values favour the LOOS fit.
double relative_difference(double s_loos, double s_ml);

struct PredictiveRow {
  std::size_t plan;
  std::size_t repetition;
  std::string protocol;  // "train_loo" or "test"
  std::string metric;    // "root" or "rmse"
  double loos_value;
  double ml_value;
  double relative_difference;
};

struct PredictiveResult {
  std::vector<PredictiveRow> rows;
};

/// Root-LOOS against ML on latent data. Each repetition draws one latent
/// field per replicate, observed at training and test nodes alike, then
/// contaminates only the training values per plan.
PredictiveResult predictive_study(const StudyConfig& config, const ObservationDesign& design);

struct GodambeRow {
  Theta theta;
  std::string parameter;
  std::vector<std::string> labels;
  std::vector<double> sd;
};

/// Asymptotic sds for each (theta, parameter) row, one column per method.
std::vector<GodambeRow> godambe_table(const std::vector<Theta>& thetas,
                                      const std::vector<Method>& methods,
                                      const ModelSpec& model, const GodambeOptions& options);

void write_estimates_csv(std::ostream& out, const StudyResult& result,
                         const std::vector<OutlierPlan>& plans);
void write_summary_csv(std::ostream& out, const StudyResult& result,
                       const std::vector<OutlierPlan>& plans);
void write_runtime_csv(std::ostream& out, const RuntimeResult& result);
void write_godambe_csv(std::ostream& out, const std::vector<GodambeRow>& rows);
void write_predictive_csv(std::ostream& out, const PredictiveResult& result,
                          const std::vector<OutlierPlan>& plans);

/// FNV-1a 64-bit hash, printed as 16 hex digits.
std::string content_hash(const std::string& text);

struct Manifest {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> entries;
  /// Output file name and content hash.
  std::vector<std::pair<std::string, std::string>> outputs;
};

void write_manifest(std::ostream& out, const Manifest& manifest);

std::string version_string();

}  // namespace loos
