#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loos/gmrf.hpp"
#include "loos/linalg.hpp"
#include "loos/scoring.hpp"

namespace loos {

/// Leave-one-out conditionals of y ~ N(mu, Q^{-1}) read off the precision:
/// mean_i = y_i - (Q (y - mu))_i / Q_ii, sd_i = 1 / sqrt(Q_ii). One sparse
/// product, no factorization.
std::vector<GaussPredictive> loo_conditionals_direct(const SparseMatrix& q,
                                                     std::span<const double> mu,
                                                     std::span<const double> y);
std::vector<GaussPredictive> loo_conditionals_direct(const Theta& theta, std::span<const double> y,
                                                     const ModelSpec& model);

/// Factorized posterior precision Q_post = Q + A^T A / sigma^2 for one
/// parameter value, giving access to the precision P of the observation
/// marginal N(A mu, A Q^{-1} A^T + sigma^2 I) without forming it:
/// P = I / sigma^2 - A Q_post^{-1} A^T / sigma^4.
class LatentMarginal {
 public:
  LatentMarginal(const SparseMatrix& q, std::vector<std::size_t> obs, double sigma_eps);

  std::size_t n_obs() const { return obs_.size(); }
  /// Diagonal of P, computed on first use.
  const Vector& precision_diagonal() const;
  /// P r for r of length m.
  Vector apply_precision(std::span<const double> r) const;
  /// Conditionals of y_i given the other observations.
  std::vector<GaussPredictive> loo_conditionals(std::span<const double> y,
                                                std::span<const double> mu_y) const;
  /// log |Q_post| - log |Q| + m log sigma^2 = log |A Q^{-1} A^T + sigma^2 I|.
  /// Requires the prior precision factor, built on first use.
  double log_det_covariance() const;
  double log_density(std::span<const double> y, std::span<const double> mu_y) const;
  /// Predictive laws of new noisy observations at lattice nodes given y:
  /// posterior mean mu + Q_post^{-1} A^T (y - A mu) / sigma^2 and variance
  /// (Q_post^{-1})_jj + sigma^2.
  std::vector<GaussPredictive> predict(std::span<const double> y, std::span<const double> mu,
                                       std::span<const std::size_t> nodes) const;

 private:
  SparseMatrix q_;
  std::vector<std::size_t> obs_;
  double sigma2_;
  BandCholesky post_;
  mutable std::optional<Vector> diag_;
  mutable std::optional<double> log_det_q_;
};

std::vector<GaussPredictive> loo_conditionals_latent(const Theta& theta, std::span<const double> y,
                                                     const ModelSpec& model);

/// Estimation criterion: maximum likelihood or LOOS under a scoring rule.
struct Method {
  enum class Kind { LogLikelihood, Loos };
  Kind kind = Kind::LogLikelihood;
  std::optional<ScoringRule> rule;

  static Method ml() { return {}; }
  static Method loos(ScoringRule r) { return {Kind::Loos, r}; }
  /// Parses "ml" or "loos:<rule>", e.g. "loos:rcrps:2".
  static Method parse(const std::string& text);
  static std::string valid_forms();

  /// "ml" or "loos:<rule>".
  std::string name() const;
  /// Short table label: LL, Slog, CRPS, SCRPS, Sroot or rCRPS.
  std::string label() const;

  friend bool operator==(const Method&, const Method&) = default;
};

/// The six methods compared throughout: ML and LOOS under each rule, with
/// the rCRPS cutoff c.
std::vector<Method> standard_methods(double rcrps_cutoff = 2.0);

/// Value of a penalised evaluation. Points returning less than this are
/// infeasible.
inline constexpr double kPenaltyFloor = -1e10;

/// Objective averaged per observation and per replicate, so values are
/// comparable across lattice sizes and replicate counts. Positively oriented.
class Objective {
 public:
  Objective(Method method, Dataset data);

  const Method& method() const { return method_; }
  const Dataset& data() const { return data_; }
  const ModelSpec& model() const { return data_.model; }

  /// Per-replicate values at theta. Throws NotPositiveDefinite when Q or
  /// the posterior precision is not positive definite.
  Vector replicate_values(const Theta& theta) const;
  /// Mean of replicate_values.
  double value(const Theta& theta) const;
  /// Optimiser entry point. Returns kPenaltyFloor - max|params| for
  /// non-finite parameters, non-SPD matrices or non-finite values.
  double penalized(std::span<const double> params) const;

 private:
  Method method_;
  Dataset data_;
  PrecisionBuilder builder_;
};

double loos_objective(const Theta& theta, const Objective& objective);
double loglik_objective(const Theta& theta, const Objective& objective);

struct NelderMeadOptions {
  double xtol = 1e-6;
  double ftol = 1e-6;
  /// Zero means 500 per parameter.
  std::size_t max_evaluations = 0;
  double initial_step = 0.1;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value;
  std::size_t n_evaluations;
  bool converged;
};

/// Maximises f by the Nelder-Mead simplex method. Converged means the
/// simplex diameter (max-norm distance to the best vertex) is below xtol and
/// the spread of vertex values is below ftol. Running out of evaluations
/// returns the best vertex with converged unset.
NelderMeadResult nelder_mead_maximize(const std::function<double(std::span<const double>)>& f,
                                      std::vector<double> x0,
                                      const NelderMeadOptions& options = {});

struct FitResult {
  Theta theta_hat;
  double objective_value;
  std::size_t n_evaluations;
  bool converged;
  double wall_time;
};

FitResult fit(const Objective& objective, const Theta& init,
              const NelderMeadOptions& options = {});

struct GodambeResult {
  DenseMatrix j;
  DenseMatrix k;
  DenseMatrix v;
  Vector asymptotic_sd;
};

class SingularSensitivity : public std::runtime_error {
 public:
  SingularSensitivity(const std::string& what, Vector null_direction)
      : std::runtime_error(what), null_direction_(std::move(null_direction)) {}
  const Vector& null_direction() const { return null_direction_; }

 private:
  Vector null_direction_;
};

/// Sandwich variance from finite differences. `values(x)` returns the
/// per-dataset objective at x for every dataset, always in the same order.
/// Central differences with step fd_step * max(1, |x_j|) give per-dataset
/// gradients and Hessians; J averages gradient outer products and K averages
/// Hessians. Throws SingularSensitivity with the eigenvector of the
/// smallest-magnitude eigenvalue when K is numerically singular.
GodambeResult godambe_from_values(const std::function<Vector(std::span<const double>)>& values,
                                  std::span<const double> x0, double fd_step = 1e-4,
                                  const std::vector<std::string>& names = {});

struct GodambeOptions {
  std::size_t n_sims = 1000;
  std::size_t reps_per_sim = 1;
  std::uint64_t seed = 0;
  double fd_step = 1e-4;
};

/// Godambe matrix of a method at theta0, from n_sims datasets simulated
/// from the model at theta0.
GodambeResult godambe(const Theta& theta0, const ModelSpec& model, const Method& method,
                      const GodambeOptions& options);

/// Simulates n_reps replicates from the model at theta.
Dataset simulate(const ModelSpec& model, const Theta& theta, std::size_t n_reps,
                 std::uint64_t seed);

namespace serial {
std::vector<GaussPredictive> loo_conditionals_direct(const SparseMatrix& q,
                                                     std::span<const double> mu,
                                                     std::span<const double> y);
}  // namespace serial

}  // namespace loos
