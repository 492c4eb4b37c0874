#include "loos/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace loos {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kSqrtPi = 1.77245385090551602730;

double pair_moment(double sigma) { return 2.0 * sigma / kSqrtPi; }

// E|Z| for Z ~ N(d, s^2), written with erf so the tails stay accurate.
double abs_moment(double d, double s) {
  const double z = d / s;
  return 2.0 * s * std_normal_pdf(z) + d * std::erf(z / std::numbers::sqrt2);
}

}  // namespace

GaussPredictive::GaussPredictive(double mu, double sigma)
    : mu_(mu), sigma_(sigma) {
  if (!std::isfinite(mu)) throw std::invalid_argument("GaussPredictive: mu must be finite");
  if (!std::isfinite(sigma) || sigma < kMinSigma)
    throw std::invalid_argument("GaussPredictive: sigma must be finite and >= 1e-12");
}

ScoringRule ScoringRule::rcrps(double cutoff) {
  if (!std::isfinite(cutoff) || cutoff <= 0.0)
    throw std::invalid_argument("rCRPS cutoff must be finite and positive");
  return ScoringRule(RuleKind::Rcrps, cutoff);
}

ScoringRule ScoringRule::parse(const std::string& text) {
  if (text == "log") return log();
  if (text == "crps") return crps();
  if (text == "scrps") return scrps();
  if (text == "root") return root();
  if (text.rfind("rcrps:", 0) == 0) {
    const std::string arg = text.substr(6);
    std::size_t used = 0;
    double c = 0.0;
    try {
      c = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size())
      throw std::invalid_argument("bad rCRPS cutoff in '" + text + "'");
    return rcrps(c);
  }
  if (text == "rcrps") return rcrps(2.0);
  throw std::invalid_argument("unknown scoring rule '" + text +
                              "' (expected log, crps, scrps, root, rcrps:<c>)");
}

int ScoringRule::sensitivity_index() const {
  switch (kind_) {
    case RuleKind::Log: return 2;
    case RuleKind::Crps:
    case RuleKind::Scrps:
    case RuleKind::Root: return 1;
    case RuleKind::Rcrps: return 0;
  }
  return -1;
}

double ScoringRule::scale_exponent() const {
  switch (kind_) {
    case RuleKind::Log:
    case RuleKind::Scrps: return 2.0;
    case RuleKind::Root: return 1.5;
    case RuleKind::Crps:
    case RuleKind::Rcrps: return 1.0;
  }
  return 0.0;
}

std::string ScoringRule::name() const {
  switch (kind_) {
    case RuleKind::Log: return "log";
    case RuleKind::Crps: return "crps";
    case RuleKind::Scrps: return "scrps";
    case RuleKind::Root: return "root";
    case RuleKind::Rcrps: {
      std::string c = std::to_string(*cutoff_);
      c.erase(c.find_last_not_of('0') + 1);
      if (!c.empty() && c.back() == '.') c.pop_back();
      return "rcrps:" + c;
    }
  }
  return "?";
}

double std_normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double abs_moment_gauss(const GaussPredictive& p, double y) {
  return abs_moment(p.mu() - y, p.sigma());
}

double pair_abs_moment_gauss(const GaussPredictive& p) { return pair_moment(p.sigma()); }

double rcrps_h(double mu, double sigma, double c) {
  const double m = std::abs(mu);
  const double s = sigma;
  // mu*(2 Phi(mu/s) - 1) is the stable form of -mu + 2 mu Phi(mu/s).
  return s * (2.0 * std_normal_pdf(m / s) - std_normal_pdf((c - m) / s) -
              std_normal_pdf((c + m) / s)) +
         m * std::erf(m / (s * std::numbers::sqrt2)) +
         (c - m) * std_normal_cdf((m - c) / s) +
         (m + c) * std_normal_cdf((-c - m) / s);
}

double score(const ScoringRule& rule, const GaussPredictive& p, double y) {
  const double d = p.mu() - y;
  const double s = p.sigma();
  switch (rule.kind()) {
    case RuleKind::Log: {
      const double z = d / s;
      return -0.5 * z * z - std::log(s) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    case RuleKind::Crps:
      return s / kSqrtPi - abs_moment(d, s);
    case RuleKind::Scrps: {
      const double e = pair_moment(s);
      return -abs_moment(d, s) / e - 0.5 * std::log(e);
    }
    case RuleKind::Root:
      return -abs_moment(d, s) / std::sqrt(pair_moment(s));
    case RuleKind::Rcrps: {
      const double c = *rule.cutoff();
      return 0.5 * rcrps_h(0.0, std::numbers::sqrt2 * s, c) - rcrps_h(d, s, c);
    }
  }
  return 0.0;
}

double expected_score(const ScoringRule& rule, const GaussPredictive& forecast,
                      const GaussPredictive& truth) {
  const double d = forecast.mu() - truth.mu();
  const double sp = forecast.sigma();
  const double st = truth.sigma();
  const double s_cross = std::hypot(sp, st);
  switch (rule.kind()) {
    case RuleKind::Log:
      return -std::log(sp) - 0.5 * std::log(2.0 * std::numbers::pi) -
             (st * st + d * d) / (2.0 * sp * sp);
    case RuleKind::Crps:
      return sp / kSqrtPi - abs_moment(d, s_cross);
    case RuleKind::Scrps: {
      const double e = pair_moment(sp);
      return -abs_moment(d, s_cross) / e - 0.5 * std::log(e);
    }
    case RuleKind::Root:
      return -abs_moment(d, s_cross) / std::sqrt(pair_moment(sp));
    case RuleKind::Rcrps: {
      const double c = *rule.cutoff();
      return 0.5 * rcrps_h(0.0, std::numbers::sqrt2 * sp, c) - rcrps_h(d, s_cross, c);
    }
  }
  return 0.0;
}

MonteCarloScore kernel_score_mc(OuterFunction outer, std::optional<double> cutoff,
                                std::span<const double> samples, double y) {
  const std::size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("kernel_score_mc needs at least 2 samples");
  if (cutoff && !(*cutoff > 0.0))
    throw std::invalid_argument("kernel_score_mc cutoff must be positive");
  const double c = cutoff.value_or(std::numeric_limits<double>::infinity());

  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + x[k];

  // gbar[k] = mean over j != k of min(|x_k - x_j|, c).
  std::vector<double> gbar(n);
  std::size_t lo = 0;  // first j with x_j > x_k - c
  std::size_t hi = 0;  // one past last j with x_j < x_k + c
  for (std::size_t k = 0; k < n; ++k) {
    while (x[lo] <= x[k] - c) ++lo;
    if (hi < k + 1) hi = k + 1;
    while (hi < n && x[hi] < x[k] + c) ++hi;
    const double xk = x[k];
    const double left = xk * static_cast<double>(k - lo) - (prefix[k] - prefix[lo]);
    const double right = (prefix[hi] - prefix[k + 1]) - xk * static_cast<double>(hi - k - 1);
    const std::size_t inside = hi - lo - 1;
    const double outside = static_cast<double>(n - 1 - inside);
    gbar[k] = (left + right + (outside > 0 ? c * outside : 0.0)) /
              static_cast<double>(n - 1);
  }

  std::vector<double> gy(n);
  for (std::size_t k = 0; k < n; ++k) gy[k] = std::min(std::abs(x[k] - y), c);

  const double a = pairwise_sum(gbar) / static_cast<double>(n);
  const double b = pairwise_sum(gy) / static_cast<double>(n);

  double h = 0.0, h1 = 0.0, h2 = 0.0, scale = 1.0, shift = 0.0;
  switch (outer) {
    case OuterFunction::NegHalfX:
      h = -0.5 * a;
      h1 = -0.5;
      h2 = 0.0;
      break;
    case OuterFunction::NegLog:
      if (!(a > 0.0)) throw std::domain_error("kernel_score_mc: pair expectation must be positive for -log");
      h = -std::log(a);
      h1 = -1.0 / a;
      h2 = 1.0 / (a * a);
      scale = 0.5;
      shift = -1.0;
      break;
    case OuterFunction::NegSqrt:
      if (!(a > 0.0)) throw std::domain_error("kernel_score_mc: pair expectation must be positive for -sqrt");
      h = -std::sqrt(a);
      h1 = -0.5 / std::sqrt(a);
      h2 = 0.25 / (a * std::sqrt(a));
      break;
  }
  const double raw = h + 2.0 * h1 * (b - a);
  const double d_a = scale * (-h1 + 2.0 * h2 * (b - a));
  const double d_b = scale * 2.0 * h1;

  std::vector<double> infl(n);
  for (std::size_t k = 0; k < n; ++k)
    infl[k] = d_a * 2.0 * (gbar[k] - a) + d_b * (gy[k] - b);
  const double mean_infl = pairwise_sum(infl) / static_cast<double>(n);
  for (auto& v : infl) v = (v - mean_infl) * (v - mean_infl);
  const double var = pairwise_sum(infl) / static_cast<double>(n - 1);

  return {scale * raw + shift, std::sqrt(var / static_cast<double>(n))};
}

double divergence_scale_exponent(const ScoringRule& rule, std::span<const double> sigmas,
                                 double rel_step) {
  if (sigmas.size() < 3) throw std::invalid_argument("need at least 3 sigma values");
  if (!(rel_step > 0.0)) throw std::invalid_argument("rel_step must be positive");
  std::vector<double> lx, ly;
  for (double sigma : sigmas) {
    const GaussPredictive truth(0.0, sigma);
    const double dmu = rel_step * sigma;
    const GaussPredictive moved(dmu, sigma);
    const double div = expected_score(rule, truth, truth) - expected_score(rule, moved, truth);
    if (!(div > 0.0))
      throw std::runtime_error("non-positive divergence for rule " + rule.name() +
                               "; the score is not behaving as proper");
    lx.push_back(std::log(sigma));
    ly.push_back(std::log(div / (dmu * dmu)));
  }
  for (std::size_t i = 0; i < lx.size(); ++i)
    for (std::size_t j = i + 1; j < lx.size(); ++j)
      if (lx[i] == lx[j]) throw std::invalid_argument("sigma values must be distinct");
  const double k = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= k;
  my /= k;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return -sxy / sxx;
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 16;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

std::vector<double> score_all(const ScoringRule& rule, std::span<const GaussPredictive> preds,
                              std::span<const double> ys) {
  if (preds.size() != ys.size()) throw std::invalid_argument("score_all: size mismatch");
  std::vector<double> out(preds.size());
  const auto n = static_cast<std::ptrdiff_t>(preds.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = score(rule, preds[i], ys[i]);
  return out;
}

double mean_score(const ScoringRule& rule, std::span<const GaussPredictive> preds,
                  std::span<const double> ys) {
  const auto s = score_all(rule, preds, ys);
  return pairwise_sum(s) / static_cast<double>(s.size());
}

namespace serial {
std::vector<double> score_all(const ScoringRule& rule, std::span<const GaussPredictive> preds,
                              std::span<const double> ys) {
  if (preds.size() != ys.size()) throw std::invalid_argument("score_all: size mismatch");
  std::vector<double> out;
  out.reserve(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) out.push_back(score(rule, preds[i], ys[i]));
  return out;
}
}  // namespace serial

}  // namespace loos
