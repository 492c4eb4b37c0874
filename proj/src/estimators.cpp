#include "loos/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace loos {

namespace {

Vector residual(std::span<const double> y, std::span<const double> mu) {
  if (y.size() != mu.size()) throw DimensionMismatch("observation and mean lengths differ");
  Vector r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) r[i] = y[i] - mu[i];
  return r;
}

template <class Spmv>
std::vector<GaussPredictive> direct_conditionals(const SparseMatrix& q, std::span<const double> mu,
                                                 std::span<const double> y, Spmv&& product) {
  if (q.rows() != y.size()) throw DimensionMismatch("Q and observation sizes differ");
  const Vector qr = product(q, residual(y, mu));
  const Vector d = q.diagonal_values();
  std::vector<GaussPredictive> out;
  out.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(d[i] > 0.0)) throw NotPositiveDefinite(i);
    out.emplace_back(y[i] - qr[i] / d[i], 1.0 / std::sqrt(d[i]));
  }
  return out;
}

Vector observed(std::span<const double> x, std::span<const std::size_t> idx) {
  Vector out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = x[idx[k]];
  return out;
}

SparseMatrix posterior_precision(const SparseMatrix& q, std::span<const std::size_t> obs,
                                 double sigma2) {
  std::vector<double> v(q.values().begin(), q.values().end());
  const auto off = q.offsets();
  const auto col = q.columns();
  for (std::size_t i : obs) {
    bool found = false;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      if (col[k] == i) {
        v[k] += 1.0 / sigma2;
        found = true;
        break;
      }
    }
    if (!found) throw std::logic_error("precision pattern lacks a diagonal entry");
  }
  return q.with_values(std::move(v));
}

double log_gauss_density(std::span<const double> r, std::span<const double> pr, double log_det_cov) {
  double quad = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) quad += r[i] * pr[i];
  const double m = static_cast<double>(r.size());
  return -0.5 * (m * std::log(2.0 * std::numbers::pi) + log_det_cov + quad);
}

}  // namespace

std::vector<GaussPredictive> loo_conditionals_direct(const SparseMatrix& q,
                                                     std::span<const double> mu,
                                                     std::span<const double> y) {
  return direct_conditionals(q, mu, y, [](const SparseMatrix& m, const Vector& x) { return spmv(m, x); });
}

std::vector<GaussPredictive> loo_conditionals_direct(const Theta& theta, std::span<const double> y,
                                                     const ModelSpec& model) {
  if (model.is_latent()) throw std::invalid_argument("direct conditionals need a direct model");
  const PrecisionBuilder builder(model);
  return loo_conditionals_direct(builder.build(theta), mean_vector(theta, model), y);
}

namespace serial {
std::vector<GaussPredictive> loo_conditionals_direct(const SparseMatrix& q,
                                                     std::span<const double> mu,
                                                     std::span<const double> y) {
  return direct_conditionals(q, mu, y,
                             [](const SparseMatrix& m, const Vector& x) { return serial::spmv(m, x); });
}
}  // namespace serial

LatentMarginal::LatentMarginal(const SparseMatrix& q, std::vector<std::size_t> obs,
                               double sigma_eps)
    : q_(q),
      obs_(std::move(obs)),
      sigma2_(sigma_eps * sigma_eps),
      post_(posterior_precision(q, obs_, sigma_eps * sigma_eps)) {
  if (!(sigma_eps > 0.0) || !std::isfinite(sigma_eps))
    throw std::invalid_argument("sigma_eps must be positive and finite");
}

const Vector& LatentMarginal::precision_diagonal() const {
  if (!diag_) {
    Vector d(obs_.size());
    const double s4 = sigma2_ * sigma2_;
    for (std::size_t k = 0; k < obs_.size(); ++k)
      d[k] = 1.0 / sigma2_ - post_.inverse_diagonal(obs_[k]) / s4;
    diag_ = std::move(d);
  }
  return *diag_;
}

Vector LatentMarginal::apply_precision(std::span<const double> r) const {
  if (r.size() != obs_.size()) throw DimensionMismatch("residual length differs from m");
  Vector at(post_.size(), 0.0);
  for (std::size_t k = 0; k < obs_.size(); ++k) at[obs_[k]] += r[k];
  const Vector w = post_.solve(at);
  Vector out(r.size());
  const double s4 = sigma2_ * sigma2_;
  for (std::size_t k = 0; k < obs_.size(); ++k) out[k] = r[k] / sigma2_ - w[obs_[k]] / s4;
  return out;
}

std::vector<GaussPredictive> LatentMarginal::loo_conditionals(std::span<const double> y,
                                                              std::span<const double> mu_y) const {
  const Vector r = residual(y, mu_y);
  const Vector pr = apply_precision(r);
  const Vector& d = precision_diagonal();
  std::vector<GaussPredictive> out;
  out.reserve(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (!(d[k] > 0.0)) throw NotPositiveDefinite(k);
    out.emplace_back(y[k] - pr[k] / d[k], 1.0 / std::sqrt(d[k]));
  }
  return out;
}

double LatentMarginal::log_det_covariance() const {
  if (!log_det_q_) log_det_q_ = BandCholesky(q_).log_det();
  return post_.log_det() - *log_det_q_ + static_cast<double>(obs_.size()) * std::log(sigma2_);
}

double LatentMarginal::log_density(std::span<const double> y, std::span<const double> mu_y) const {
  const Vector r = residual(y, mu_y);
  return log_gauss_density(r, apply_precision(r), log_det_covariance());
}

std::vector<GaussPredictive> LatentMarginal::predict(std::span<const double> y,
                                                     std::span<const double> mu,
                                                     std::span<const std::size_t> nodes) const {
  if (mu.size() != post_.size()) throw DimensionMismatch("mean length differs from n");
  const Vector r = residual(y, observed(mu, obs_));
  Vector at(post_.size(), 0.0);
  for (std::size_t k = 0; k < obs_.size(); ++k) at[obs_[k]] += r[k] / sigma2_;
  const Vector w = post_.solve(at);
  std::vector<GaussPredictive> out;
  out.reserve(nodes.size());
  for (std::size_t j : nodes) {
    if (j >= post_.size()) throw std::out_of_range("prediction node out of range");
    out.emplace_back(mu[j] + w[j], std::sqrt(post_.inverse_diagonal(j) + sigma2_));
  }
  return out;
}

std::vector<GaussPredictive> loo_conditionals_latent(const Theta& theta, std::span<const double> y,
                                                     const ModelSpec& model) {
  if (!model.is_latent()) throw std::invalid_argument("latent conditionals need a latent model");
  const PrecisionBuilder builder(model);
  const LatentMarginal marginal(builder.build(theta), model.obs_indices, theta.sigma_eps());
  return marginal.loo_conditionals(y, observed(mean_vector(theta, model), model.obs_indices));
}

// Method

Method Method::parse(const std::string& text) {
  if (text == "ml") return ml();
  const std::string prefix = "loos:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      return loos(ScoringRule::parse(text.substr(prefix.size())));
    } catch (const std::invalid_argument&) {
    }
  }
  throw std::invalid_argument("unknown method '" + text + "'; valid: " + valid_forms());
}

std::string Method::valid_forms() {
  return "ml, loos:log, loos:crps, loos:scrps, loos:root, loos:rcrps:<c>";
}

std::string Method::name() const {
  return kind == Kind::LogLikelihood ? "ml" : "loos:" + rule->name();
}

std::string Method::label() const {
  if (kind == Kind::LogLikelihood) return "LL";
  switch (rule->kind()) {
    case RuleKind::Log: return "Slog";
    case RuleKind::Crps: return "CRPS";
    case RuleKind::Scrps: return "SCRPS";
    case RuleKind::Root: return "Sroot";
    case RuleKind::Rcrps: return "rCRPS";
  }
  return "?";
}

std::vector<Method> standard_methods(double rcrps_cutoff) {
  return {Method::ml(),
          Method::loos(ScoringRule::log()),
          Method::loos(ScoringRule::scrps()),
          Method::loos(ScoringRule::root()),
          Method::loos(ScoringRule::crps()),
          Method::loos(ScoringRule::rcrps(rcrps_cutoff))};
}

// Objective

Objective::Objective(Method method, Dataset data)
    : method_(std::move(method)), data_(std::move(data)), builder_(data_.model) {
  if (method_.kind == Method::Kind::Loos && !method_.rule)
    throw std::invalid_argument("LOOS method without a scoring rule");
  data_.validate();
  if (data_.replicates.empty()) throw std::invalid_argument("dataset has no replicates");
}

Vector Objective::replicate_values(const Theta& theta) const {
  const ModelSpec& model = data_.model;
  const SparseMatrix q = builder_.build(theta);
  const Vector mu = mean_vector(theta, model);
  const std::size_t reps = data_.replicates.size();
  Vector out(reps);
  const bool ml = method_.kind == Method::Kind::LogLikelihood;

  if (!model.is_latent()) {
    if (ml) {
      const BandCholesky factor(q);
      const double n = static_cast<double>(q.rows());
      for (std::size_t r = 0; r < reps; ++r) {
        const Vector res = residual(data_.replicates[r], mu);
        const Vector qr = spmv(q, res);
        out[r] = log_gauss_density(res, qr, -factor.log_det()) / n;
      }
    } else {
      for (std::size_t r = 0; r < reps; ++r) {
        const auto conds = loo_conditionals_direct(q, mu, data_.replicates[r]);
        out[r] = mean_score(*method_.rule, conds, data_.replicates[r]);
      }
    }
    return out;
  }

  const LatentMarginal marginal(q, model.obs_indices, theta.sigma_eps());
  const Vector mu_y = observed(mu, model.obs_indices);
  const double m = static_cast<double>(model.obs_indices.size());
  for (std::size_t r = 0; r < reps; ++r) {
    const auto& y = data_.replicates[r];
    if (ml) {
      out[r] = marginal.log_density(y, mu_y) / m;
    } else {
      out[r] = mean_score(*method_.rule, marginal.loo_conditionals(y, mu_y), y);
    }
  }
  return out;
}

double Objective::value(const Theta& theta) const {
  const Vector v = replicate_values(theta);
  return pairwise_sum(v) / static_cast<double>(v.size());
}

double Objective::penalized(std::span<const double> params) const {
  double magnitude = 0.0;
  bool finite = true;
  for (double p : params) {
    if (!std::isfinite(p)) {
      finite = false;
    } else {
      magnitude = std::max(magnitude, std::abs(p));
    }
  }
  const double penalty = kPenaltyFloor - magnitude;
  if (!finite) return kPenaltyFloor - 1e10;
  try {
    const Theta theta = data_.model.unpack(params);
    if (!std::isfinite(theta.tau()) || !std::isfinite(theta.kappa()) || theta.tau() <= 0.0 ||
        theta.kappa() <= 0.0)
      return penalty;
    if (data_.model.is_latent() &&
        (!std::isfinite(theta.sigma_eps()) || theta.sigma_eps() <= 0.0))
      return penalty;
    const double v = value(theta);
    return std::isfinite(v) ? v : penalty;
  } catch (const NotPositiveDefinite&) {
    return penalty;
  } catch (const std::invalid_argument&) {
    return penalty;
  }
}

double loos_objective(const Theta& theta, const Objective& objective) {
  if (objective.method().kind != Method::Kind::Loos)
    throw std::invalid_argument("loos_objective needs a LOOS objective");
  return objective.value(theta);
}

double loglik_objective(const Theta& theta, const Objective& objective) {
  if (objective.method().kind != Method::Kind::LogLikelihood)
    throw std::invalid_argument("loglik_objective needs a likelihood objective");
  return objective.value(theta);
}

// Nelder-Mead

NelderMeadResult nelder_mead_maximize(const std::function<double(std::span<const double>)>& f,
                                      std::vector<double> x0, const NelderMeadOptions& options) {
  const std::size_t p = x0.size();
  if (p == 0) throw std::invalid_argument("empty starting point");
  for (double v : x0)
    if (!std::isfinite(v)) throw std::invalid_argument("starting point is not finite");
  const std::size_t budget = options.max_evaluations > 0 ? options.max_evaluations : 500 * p;

  // Past the budget a trial point scores as the worst possible vertex.
  std::size_t evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    if (evals >= budget) return -std::numeric_limits<double>::infinity();
    ++evals;
    return f(x);
  };

  // Work on the negated values so the simplex logic reads as minimisation.
  std::vector<std::vector<double>> pts(p + 1, x0);
  std::vector<double> fv(p + 1);
  for (std::size_t j = 0; j < p; ++j) pts[j + 1][j] += options.initial_step;
  for (std::size_t j = 0; j <= p; ++j) fv[j] = -eval(pts[j]);

  std::vector<std::size_t> order(p + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> sp(p + 1);
    std::vector<double> sf(p + 1);
    for (std::size_t k = 0; k <= p; ++k) {
      sp[k] = std::move(pts[order[k]]);
      sf[k] = fv[order[k]];
    }
    pts = std::move(sp);
    fv = std::move(sf);
  };
  auto converged = [&] {
    double diam = 0.0;
    for (std::size_t k = 1; k <= p; ++k)
      for (std::size_t j = 0; j < p; ++j) diam = std::max(diam, std::abs(pts[k][j] - pts[0][j]));
    return diam < options.xtol && (fv[p] - fv[0]) < options.ftol;
  };
  auto along = [&](const std::vector<double>& c, double t) {
    std::vector<double> x(p);
    for (std::size_t j = 0; j < p; ++j) x[j] = c[j] + t * (pts[p][j] - c[j]);
    return x;
  };

  sort_simplex();
  bool done = converged();
  while (!done && evals < budget) {
    std::vector<double> c(p, 0.0);
    for (std::size_t k = 0; k < p; ++k)
      for (std::size_t j = 0; j < p; ++j) c[j] += pts[k][j] / static_cast<double>(p);

    const auto xr = along(c, -1.0);
    const double fr = -eval(xr);
    if (fr < fv[0]) {
      const auto xe = along(c, -2.0);
      const double fe = -eval(xe);
      if (fe < fr) {
        pts[p] = xe;
        fv[p] = fe;
      } else {
        pts[p] = xr;
        fv[p] = fr;
      }
    } else if (fr < fv[p - 1]) {
      pts[p] = xr;
      fv[p] = fr;
    } else {
      const bool outside = fr < fv[p];
      const auto xc = along(c, outside ? -0.5 : 0.5);
      const double fc = -eval(xc);
      if (fc < (outside ? fr : fv[p])) {
        pts[p] = xc;
        fv[p] = fc;
      } else {
        for (std::size_t k = 1; k <= p; ++k) {
          for (std::size_t j = 0; j < p; ++j) pts[k][j] = pts[0][j] + 0.5 * (pts[k][j] - pts[0][j]);
          fv[k] = -eval(pts[k]);
        }
      }
    }
    sort_simplex();
    done = converged();
  }

  NelderMeadResult out;
  out.x = pts[0];
  out.value = -fv[0];
  out.n_evaluations = evals;
  out.converged = done && std::isfinite(out.value) && out.value > kPenaltyFloor;
  return out;
}

FitResult fit(const Objective& objective, const Theta& init, const NelderMeadOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const ModelSpec& model = objective.model();
  auto f = [&](std::span<const double> x) { return objective.penalized(x); };
  const NelderMeadResult nm = nelder_mead_maximize(f, model.pack(init), options);
  FitResult out;
  out.theta_hat = model.unpack(nm.x);
  out.objective_value = nm.value;
  out.n_evaluations = nm.n_evaluations;
  out.converged = nm.converged;
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// Godambe

GodambeResult godambe_from_values(const std::function<Vector(std::span<const double>)>& values,
                                  std::span<const double> x0, double fd_step,
                                  const std::vector<std::string>& names) {
  const std::size_t p = x0.size();
  if (p == 0) throw std::invalid_argument("empty parameter vector");
  if (!(fd_step > 0.0)) throw std::invalid_argument("fd_step must be positive");
  Vector h(p);
  for (std::size_t j = 0; j < p; ++j) h[j] = fd_step * std::max(1.0, std::abs(x0[j]));

  auto at = [&](std::initializer_list<std::pair<std::size_t, double>> moves) {
    std::vector<double> x(x0.begin(), x0.end());
    for (auto [j, s] : moves) x[j] += s * h[j];
    return values(x);
  };

  const Vector f0 = values(std::vector<double>(x0.begin(), x0.end()));
  const std::size_t n = f0.size();
  if (n == 0) throw std::invalid_argument("no datasets");
  std::vector<Vector> fp(p), fm(p);
  for (std::size_t j = 0; j < p; ++j) {
    fp[j] = at({{j, 1.0}});
    fm[j] = at({{j, -1.0}});
  }
  // cross[j][k] for j < k holds f(++) - f(+-) - f(-+) + f(--).
  std::vector<std::vector<Vector>> cross(p, std::vector<Vector>(p));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) {
      const Vector pp = at({{j, 1.0}, {k, 1.0}});
      const Vector pm = at({{j, 1.0}, {k, -1.0}});
      const Vector mp = at({{j, -1.0}, {k, 1.0}});
      const Vector mm = at({{j, -1.0}, {k, -1.0}});
      Vector c(n);
      for (std::size_t d = 0; d < n; ++d) c[d] = (pp[d] - pm[d]) - (mp[d] - mm[d]);
      cross[j][k] = std::move(c);
    }
  }

  GodambeResult out{DenseMatrix(p, p), DenseMatrix(p, p), DenseMatrix(p, p), Vector(p)};
  const double nd = static_cast<double>(n);
  Vector g(p);
  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t j = 0; j < p; ++j) g[j] = (fp[j][d] - fm[j][d]) / (2.0 * h[j]);
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < p; ++k) out.j(j, k) += g[j] * g[k] / nd;
    for (std::size_t j = 0; j < p; ++j) {
      out.k(j, j) += (fp[j][d] - 2.0 * f0[d] + fm[j][d]) / (h[j] * h[j]) / nd;
      for (std::size_t k = j + 1; k < p; ++k) {
        const double hjk = cross[j][k][d] / (4.0 * h[j] * h[k]) / nd;
        out.k(j, k) += hjk;
        out.k(k, j) += hjk;
      }
    }
  }

  Eigen::MatrixXd k(p, p), jm(p, p);
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = 0; b < p; ++b) {
      k(a, b) = out.k(a, b);
      jm(a, b) = out.j(a, b);
    }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const Eigen::VectorXd ev = eig.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  Eigen::Index smallest = 0;
  ev.cwiseAbs().minCoeff(&smallest);
  if (!std::isfinite(scale) || scale == 0.0 || std::abs(ev(smallest)) <= 1e-10 * scale) {
    Vector dir(p);
    for (std::size_t a = 0; a < p; ++a) dir[a] = eig.eigenvectors()(a, smallest);
    std::ostringstream msg;
    msg << "sensitivity matrix K is singular; null direction (";
    for (std::size_t a = 0; a < p; ++a) {
      if (a) msg << ", ";
      if (a < names.size()) msg << names[a] << "=";
      msg << dir[a];
    }
    msg << ")";
    throw SingularSensitivity(msg.str(), std::move(dir));
  }
  const Eigen::MatrixXd kinv =
      eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  Eigen::MatrixXd v = kinv * jm * kinv.transpose();
  v = 0.5 * (v + v.transpose()).eval();
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < p; ++b) out.v(a, b) = v(a, b);
    out.asymptotic_sd[a] = std::sqrt(std::max(0.0, v(a, a)));
  }
  return out;
}

Dataset simulate(const ModelSpec& model, const Theta& theta, std::size_t n_reps,
                 std::uint64_t seed) {
  model.validate();
  const PrecisionBuilder builder(model);
  const SparseMatrix q = builder.build(theta);
  const Vector mu = mean_vector(theta, model);
  Dataset d = model.is_latent() ? sample_latent(model, q, mu, theta.sigma_eps(), n_reps, seed)
                                : sample_direct(model, q, mu, n_reps, seed);
  d.truth = theta;
  return d;
}

GodambeResult godambe(const Theta& theta0, const ModelSpec& model, const Method& method,
                      const GodambeOptions& options) {
  if (options.n_sims < 2) throw std::invalid_argument("godambe needs at least two datasets");
  if (options.reps_per_sim == 0) throw std::invalid_argument("reps_per_sim must be positive");
  const Objective objective(method,
                            simulate(model, theta0, options.n_sims * options.reps_per_sim,
                                     options.seed));
  const std::size_t per = options.reps_per_sim;
  auto values = [&](std::span<const double> x) {
    const Vector reps = objective.replicate_values(model.unpack(x));
    Vector out(options.n_sims);
    for (std::size_t s = 0; s < options.n_sims; ++s)
      out[s] = pairwise_sum(std::span<const double>(reps).subspan(s * per, per)) /
               static_cast<double>(per);
    return out;
  };
  return godambe_from_values(values, model.pack(theta0), options.fd_step, model.param_names());
}

}  // namespace loos
