#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace loos {

/// Univariate Gaussian predictive distribution N(mu, sigma^2).
///
/// sigma must be at least kMinSigma; below that the pair moments used by the
/// SCRPS and Root scores underflow and the log/sqrt terms turn into NaN.
class GaussPredictive {
 public:
  static constexpr double kMinSigma = 1e-12;

  GaussPredictive(double mu, double sigma);

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }

 private:
  double mu_;
  double sigma_;
};

enum class RuleKind { Log, Crps, Scrps, Root, Rcrps };

/// A proper scoring rule for Gaussian predictives. All values are positively
/// oriented: larger is better.
class ScoringRule {
 public:
  static ScoringRule log() { return ScoringRule(RuleKind::Log, std::nullopt); }
  static ScoringRule crps() { return ScoringRule(RuleKind::Crps, std::nullopt); }
  static ScoringRule scrps() { return ScoringRule(RuleKind::Scrps, std::nullopt); }
  static ScoringRule root() { return ScoringRule(RuleKind::Root, std::nullopt); }
  static ScoringRule rcrps(double cutoff);

  /// Parses "log", "crps", "scrps", "root", "rcrps:<c>".
  static ScoringRule parse(const std::string& text);

  RuleKind kind() const { return kind_; }
  std::optional<double> cutoff() const { return cutoff_; }

  /// Growth exponent of |S(P, y)| in |y| for Gaussian P.
  int sensitivity_index() const;
  /// Exponent p of the local divergence scaling 1/sigma^p.
  double scale_exponent() const;
  bool is_robust() const { return sensitivity_index() == 0; }
  bool is_scale_invariant() const { return scale_exponent() == 2.0; }

  /// Short identifier, e.g. "crps" or "rcrps:2".
  std::string name() const;

  friend bool operator==(const ScoringRule&, const ScoringRule&) = default;

 private:
  ScoringRule(RuleKind kind, std::optional<double> cutoff)
      : kind_(kind), cutoff_(cutoff) {}

  RuleKind kind_;
  std::optional<double> cutoff_;
};

double std_normal_pdf(double z);
/// Tail-safe standard normal CDF via erfc.
double std_normal_cdf(double z);

/// E|X - y| for X ~ p.
double abs_moment_gauss(const GaussPredictive& p, double y);
/// E|X - X'| for independent X, X' ~ p; equals 2 sigma / sqrt(pi).
double pair_abs_moment_gauss(const GaussPredictive& p);

/// E[min(|X|, c)] for X ~ N(mu, sigma^2). Even in mu and bounded by c.
double rcrps_h(double mu, double sigma, double c);

double score(const ScoringRule& rule, const GaussPredictive& p, double y);

/// Expected score E_{Y~truth} S(forecast, Y), closed form.
double expected_score(const ScoringRule& rule, const GaussPredictive& forecast,
                      const GaussPredictive& truth);

// Monte Carlo oracle for the generalised kernel score.

enum class OuterFunction { NegHalfX, NegLog, NegSqrt };

struct MonteCarloScore {
  double value;
  double std_error;
};

/// Evaluates the generalised kernel score from samples of the predictive.
///
/// The pair expectation E g(X, X') is the U-statistic over distinct pairs,
/// computed in O(N log N) from the sorted sample. The standard error is the
/// delta-method linearisation through the influence functions of both
/// expectations. With a cutoff the kernel is min(|x - y|, c). The NegLog
/// variant is reported in the SCRPS normalisation (half the raw kernel score
/// minus one), which is what the closed-form SCRPS uses.
MonteCarloScore kernel_score_mc(OuterFunction outer,
                                std::optional<double> cutoff,
                                std::span<const double> samples, double y);

/// Numerically estimates p in D(P_{mu + dmu, sigma}, P_{mu, sigma}) ~ sigma^-p
/// by a least-squares slope of log(D / dmu^2) against log(sigma), with the
/// location perturbed by dmu = rel_step * sigma.
double divergence_scale_exponent(const ScoringRule& rule,
                                 std::span<const double> sigmas,
                                 double rel_step);

/// Scores a batch of predictives against observations. OpenMP-parallel.
std::vector<double> score_all(const ScoringRule& rule,
                              std::span<const GaussPredictive> preds,
                              std::span<const double> ys);

/// Mean of a score batch with a fixed pairwise summation order.
double mean_score(const ScoringRule& rule,
                  std::span<const GaussPredictive> preds,
                  std::span<const double> ys);

namespace serial {
std::vector<double> score_all(const ScoringRule& rule,
                              std::span<const GaussPredictive> preds,
                              std::span<const double> ys);
}  // namespace serial

/// Sum with a fixed recursive halving order, independent of thread count.
double pairwise_sum(std::span<const double> values);

}  // namespace loos
