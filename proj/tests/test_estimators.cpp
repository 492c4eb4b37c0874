#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "loos/estimators.hpp"
#include "oracle.hpp"

using namespace loos;

namespace {

const Theta kTheta = Theta::natural(0.16, 1.75);
const double kLog2Pi = std::log(2 * std::numbers::pi);

ModelSpec direct_model(std::size_t nx, std::size_t ny) {
  ModelSpec m;
  m.lattice = {nx, ny, 0, 10, 0, 10};
  return m;
}

ModelSpec latent_model(std::size_t nx, std::size_t ny, std::size_t m_obs, std::uint64_t seed) {
  ModelSpec m = direct_model(nx, ny);
  m.kind = ModelKind::Latent;
  std::vector<std::size_t> all(m.n_nodes());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::mt19937_64 gen(seed);
  std::shuffle(all.begin(), all.end(), gen);
  m.obs_indices.assign(all.begin(), all.begin() + m_obs);
  std::sort(m.obs_indices.begin(), m.obs_indices.end());
  return m;
}

Eigen::MatrixXd projection(const ModelSpec& m) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m.obs_indices.size(), m.n_nodes());
  for (std::size_t k = 0; k < m.obs_indices.size(); ++k) a(k, m.obs_indices[k]) = 1.0;
  return a;
}

double dense_log_density(const Eigen::MatrixXd& cov, const Eigen::VectorXd& r) {
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  return -0.5 * (r.dot(llt.solve(r)) + log_det + r.size() * kLog2Pi);
}

}  // namespace

TEST(DirectConditionals, TwoNodeExample) {
  const auto q = SparseMatrix::from_triplets(2, 2, {{0, 0, 2}, {0, 1, -1}, {1, 0, -1}, {1, 1, 2}},
                                             true);
  const Vector mu{0, 0}, y{0, 1};
  const auto c = loo_conditionals_direct(q, mu, y);
  EXPECT_NEAR(c[0].mu(), 0.5, 1e-15);
  EXPECT_NEAR(c[0].sigma(), std::sqrt(0.5), 1e-15);
  const auto sigma = DenseMatrix::from_rows({{2.0 / 3, 1.0 / 3}, {1.0 / 3, 2.0 / 3}});
  const auto d = conditional_gauss_dense(mu, sigma, y, 0);
  EXPECT_NEAR(c[0].mu(), d.mu(), 1e-14);
  EXPECT_NEAR(c[0].sigma(), d.sigma(), 1e-14);
}

TEST(DirectConditionals, DiagonalPrecisionIgnoresOthers) {
  const Vector diag{1, 4, 9};
  const auto q = SparseMatrix::diagonal(diag);
  const Vector mu{1, -2, 3};
  for (const Vector& y : {Vector{0, 0, 0}, Vector{5, 6, -7}}) {
    const auto c = loo_conditionals_direct(q, mu, y);
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(c[i].mu(), mu[i]);
      EXPECT_DOUBLE_EQ(c[i].sigma(), 1.0 / std::sqrt(diag[i]));
    }
  }
}

TEST(DirectConditionals, LatticeMatchesCovarianceFormAtEveryNode) {
  const ModelSpec model = direct_model(20, 22);
  const auto q = PrecisionBuilder(model).build(kTheta);
  const auto data = simulate(model, kTheta, 1, 3);
  const auto& y = data.replicates[0];
  const Vector mu(model.n_nodes(), 0.0);
  const auto got = loo_conditionals_direct(kTheta, y, model);

  // Covariance form: Sigma_{-i,-i}^{-1} by the Woodbury update of Sigma^{-1},
  // both taken from the covariance, never from Q.
  const Eigen::MatrixXd sigma = oracle::to_eigen(q).inverse();
  const auto sigma_d = oracle::from_eigen(sigma);
  const auto sigma_inv = oracle::from_eigen(sigma.inverse());
  const std::size_t n = model.n_nodes();
  for (std::size_t i = 0; i < n; ++i) {
    const auto sub_inv = oracle::to_eigen(loo_inverse_update(sigma_inv, sigma_d, i));
    Eigen::VectorXd cross(n - 1), r(n - 1);
    for (std::size_t k = 0, o = 0; k < n; ++k)
      if (k != i) cross[o] = sigma(k, i), r[o++] = y[k] - mu[k];
    const Eigen::VectorXd w = sub_inv * cross;
    const double mean = mu[i] + w.dot(r);
    const double sd = std::sqrt(sigma(i, i) - w.dot(cross));
    EXPECT_NEAR(got[i].mu(), mean, 1e-8 * std::max(1.0, std::abs(mean))) << i;
    EXPECT_NEAR(got[i].sigma(), sd, 1e-8 * sd) << i;
  }
}

TEST(DirectConditionals, ParallelMatchesSerial) {
  const ModelSpec model = direct_model(80, 80);
  const auto q = PrecisionBuilder(model).build(kTheta);
  const auto data = simulate(model, kTheta, 1, 4);
  const Vector mu(model.n_nodes(), 0.3);
  const auto a = loo_conditionals_direct(q, mu, data.replicates[0]);
  const auto b = serial::loo_conditionals_direct(q, mu, data.replicates[0]);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mu(), b[i].mu());
    EXPECT_EQ(a[i].sigma(), b[i].sigma());
  }
  EXPECT_THROW(loo_conditionals_direct(q, mu, Vector(3)), DimensionMismatch);
}

TEST(LatentConditionals, HandBuiltThreeNodeModel) {
  const auto q = SparseMatrix::from_triplets(
      3, 3, {{0, 0, 2.0}, {0, 1, -0.8}, {1, 0, -0.8}, {1, 1, 2.5}, {1, 2, -1.0}, {2, 1, -1.0},
             {2, 2, 1.5}},
      true);
  const std::vector<std::size_t> obs{0, 2};
  const double s = 0.6;
  const LatentMarginal marginal(q, obs, s);
  const Eigen::MatrixXd cov = oracle::to_eigen(q).inverse();
  Eigen::MatrixXd sy(2, 2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) sy(a, b) = cov(obs[a], obs[b]) + (a == b ? s * s : 0.0);
  const Vector y{0.7, -1.2}, mu_y{0.1, 0.2};
  const auto got = marginal.loo_conditionals(y, mu_y);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto d = conditional_gauss_dense(mu_y, oracle::from_eigen(sy), y, i);
    EXPECT_NEAR(got[i].mu(), d.mu(), 1e-9);
    EXPECT_NEAR(got[i].sigma(), d.sigma(), 1e-9);
  }
  const Eigen::VectorXd r = oracle::to_eigen(y) - oracle::to_eigen(mu_y);
  EXPECT_NEAR(marginal.log_density(y, mu_y), dense_log_density(sy, r), 1e-9);
  EXPECT_NEAR(marginal.log_det_covariance(), std::log(sy.determinant()), 1e-12);
  const Eigen::MatrixXd p = sy.inverse();
  const auto pd = marginal.precision_diagonal();
  EXPECT_NEAR(pd[0], p(0, 0), 1e-12);
  EXPECT_NEAR(pd[1], p(1, 1), 1e-12);
}

TEST(LatentConditionals, LatticeMatchesDenseOracle) {
  const ModelSpec model = latent_model(7, 8, 30, 1);
  const Theta th = Theta::natural(0.4, 1.3, 0.35);
  const auto data = simulate(model, th, 1, 5);
  const auto& y = data.replicates[0];
  const auto got = loo_conditionals_latent(th, y, model);
  const auto q = PrecisionBuilder(model).build(th);
  const Eigen::MatrixXd a = projection(model);
  const Eigen::MatrixXd sy = a * oracle::to_eigen(q).inverse() * a.transpose() +
                             0.35 * 0.35 * Eigen::MatrixXd::Identity(30, 30);
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(30);
  for (int i = 0; i < 30; ++i) {
    const auto [m, sd] = oracle::covariance_conditional(sy, mu, oracle::to_eigen(y), i);
    EXPECT_NEAR(got[i].mu(), m, 1e-8 * std::max(1.0, std::abs(m)));
    EXPECT_NEAR(got[i].sigma(), sd, 1e-8 * sd);
  }
}

TEST(LatentConditionals, NoiselessLimitIsDirect) {
  ModelSpec model = direct_model(6, 6);
  const auto data = simulate(model, kTheta, 1, 6);
  const auto direct = loo_conditionals_direct(kTheta, data.replicates[0], model);
  model.kind = ModelKind::Latent;
  for (std::size_t i = 0; i < model.n_nodes(); ++i) model.obs_indices.push_back(i);
  Theta th = kTheta;
  th.log_sigma_eps = std::log(1e-4);
  const auto latent = loo_conditionals_latent(th, data.replicates[0], model);
  for (std::size_t i = 0; i < latent.size(); ++i) {
    EXPECT_NEAR(latent[i].mu(), direct[i].mu(), 1e-4);
    EXPECT_NEAR(latent[i].sigma(), direct[i].sigma(), 1e-4);
  }
}

TEST(LatentConditionals, UninformativeLimit) {
  const ModelSpec model = latent_model(6, 6, 12, 2);
  Theta th = Theta::natural(0.16, 1.75, 1e3, {});
  const Vector y(12, 2.5);
  const auto c = loo_conditionals_latent(th, y, model);
  for (const auto& p : c) {
    EXPECT_NEAR(p.sigma() / 1e3, 1.0, 0.01);
    EXPECT_NEAR(p.mu(), 0.0, 0.01);
  }
}

TEST(LatentMarginal, PredictMatchesDensePosterior) {
  const ModelSpec model = latent_model(6, 5, 10, 3);
  const Theta th = Theta::natural(0.5, 1.1, 0.4);
  const auto q = PrecisionBuilder(model).build(th);
  const LatentMarginal marginal(q, model.obs_indices, 0.4);
  const Vector mu(model.n_nodes(), 0.2);
  const auto data = simulate(model, th, 1, 8);
  const std::vector<std::size_t> nodes{0, 7, 29};
  const auto pred = marginal.predict(data.replicates[0], mu, nodes);

  const Eigen::MatrixXd a = projection(model);
  const Eigen::MatrixXd cov = oracle::to_eigen(q).inverse();
  const Eigen::MatrixXd sy = a * cov * a.transpose() + 0.16 * Eigen::MatrixXd::Identity(10, 10);
  const Eigen::MatrixXd gain = cov * a.transpose() * sy.inverse();
  const Eigen::VectorXd mu_e = Eigen::VectorXd::Constant(model.n_nodes(), 0.2);
  const Eigen::VectorXd post_mean = mu_e + gain * (oracle::to_eigen(data.replicates[0]) - a * mu_e);
  const Eigen::MatrixXd post_cov = cov - gain * a * cov;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    EXPECT_NEAR(pred[k].mu(), post_mean[nodes[k]], 1e-9);
    EXPECT_NEAR(pred[k].sigma(), std::sqrt(post_cov(nodes[k], nodes[k]) + 0.16), 1e-9);
  }
  EXPECT_THROW(marginal.predict(data.replicates[0], mu, std::vector<std::size_t>{30}),
               std::out_of_range);
}

TEST(Objective, PseudoLikelihoodIdentity) {
  const ModelSpec model = direct_model(9, 8);
  const auto data = simulate(model, kTheta, 4, 9);
  const Objective obj(Method::loos(ScoringRule::log()), data);
  const Theta th = Theta::natural(0.2, 1.5);
  const Eigen::MatrixXd q = oracle::to_eigen(PrecisionBuilder(model).build(th));
  const Eigen::VectorXd mu = Eigen::VectorXd::Zero(q.rows());
  double total = 0.0;
  for (const auto& y : data.replicates) {
    const Eigen::VectorXd ye = oracle::to_eigen(y);
    for (int i = 0; i < q.rows(); ++i) {
      const auto [m, sd] = oracle::precision_conditional(q, mu, ye, i);
      const double z = (ye[i] - m) / sd;
      total += -0.5 * z * z - std::log(sd) - 0.5 * kLog2Pi;
    }
  }
  const double expect = total / static_cast<double>(q.rows() * data.replicates.size());
  EXPECT_NEAR(loos_objective(th, obj), expect, 1e-12 * std::abs(expect));
}

TEST(Objective, CrpsAtZeroData) {
  const ModelSpec model = direct_model(5, 6);
  Dataset data;
  data.model = model;
  data.replicates = {Vector(30, 0.0)};
  const Objective obj(Method::loos(ScoringRule::crps()), data);
  const auto q = PrecisionBuilder(model).build(kTheta);
  double s = 0;
  for (double qii : q.diagonal_values()) {
    const double sd = 1.0 / std::sqrt(qii);
    s += sd / std::sqrt(std::numbers::pi) - 2 * sd * std_normal_pdf(0.0);
  }
  EXPECT_NEAR(obj.value(kTheta), s / 30, 1e-14);
}

TEST(Objective, DirectLikelihoodMatchesDenseDensity) {
  const ModelSpec model = direct_model(7, 6);
  const auto data = simulate(model, kTheta, 3, 10);
  const Objective obj(Method::ml(), data);
  const Theta th = Theta::natural(0.3, 1.2);
  const Eigen::MatrixXd cov = oracle::to_eigen(PrecisionBuilder(model).build(th)).inverse();
  double s = 0;
  for (const auto& y : data.replicates) s += dense_log_density(cov, oracle::to_eigen(y));
  EXPECT_NEAR(loglik_objective(th, obj), s / (3.0 * 42.0), 1e-9);

  Dataset zero = data;
  zero.replicates = {Vector(42, 0.0)};
  const double log_det_q = -std::log(cov.determinant());
  EXPECT_NEAR(Objective(Method::ml(), zero).value(th), 0.5 * log_det_q / 42 - 0.5 * kLog2Pi, 1e-10);
}

TEST(Objective, LatentLikelihoodMatchesDenseDensity) {
  const ModelSpec model = latent_model(6, 6, 14, 4);
  const Theta th = Theta::natural(0.3, 1.2, 0.5);
  const auto data = simulate(model, th, 2, 11);
  const Objective obj(Method::ml(), data);
  const Eigen::MatrixXd a = projection(model);
  const Eigen::MatrixXd sy =
      a * oracle::to_eigen(PrecisionBuilder(model).build(th)).inverse() * a.transpose() +
      0.25 * Eigen::MatrixXd::Identity(14, 14);
  double s = 0;
  for (const auto& y : data.replicates) s += dense_log_density(sy, oracle::to_eigen(y));
  EXPECT_NEAR(obj.value(th), s / 28.0, 1e-9);
}

TEST(Objective, StandardNormalLikelihoodAtZero) {
  // Lattice precisions are never the identity; use a one-node marginal with
  // negligible noise instead.
  const auto q = SparseMatrix::identity(1);
  const LatentMarginal m(q, {0}, 1e-6);
  const Vector zero{0.0};
  EXPECT_NEAR(m.log_density(zero, zero), -0.5 * kLog2Pi, 1e-9);
}

TEST(Objective, ExpectedValueHighestAtTruth) {
  const ModelSpec model = direct_model(5, 5);
  const auto data = simulate(model, kTheta, 1000, 12);
  const Theta doubled = Theta::natural(0.32, 1.75);
  const Objective log_loos(Method::loos(ScoringRule::log()), data);
  EXPECT_GT(log_loos.value(kTheta), log_loos.value(doubled));
  const Objective ml(Method::ml(), data);
  EXPECT_GT(ml.value(kTheta), ml.value(doubled));
  EXPECT_GT(ml.value(kTheta), ml.value(Theta::natural(0.16, 3.5)));
}

TEST(Objective, LoosDoesNotFactorize) {
  const ModelSpec model = direct_model(20, 22);
  const auto data = simulate(model, kTheta, 10, 13);
  for (const auto& m : standard_methods()) {
    const Objective obj(m, data);
    reset_factorization_count();
    obj.value(kTheta);
    if (m.kind == Method::Kind::Loos)
      EXPECT_EQ(factorization_count(), 0u) << m.name();
    else
      EXPECT_GE(factorization_count(), 1u);
  }
}

TEST(Objective, PenaltyPolicy) {
  const ModelSpec model = direct_model(5, 5);
  const Objective obj(Method::ml(), simulate(model, kTheta, 2, 14));
  const std::vector<double> nan_params{std::nan(""), 0.0};
  EXPECT_LT(obj.penalized(nan_params), kPenaltyFloor);
  const std::vector<double> huge{0.0, 800.0};
  EXPECT_DOUBLE_EQ(obj.penalized(huge), kPenaltyFloor - 800.0);
  const std::vector<double> ok = model.pack(kTheta);
  EXPECT_DOUBLE_EQ(obj.penalized(ok), obj.value(kTheta));
  EXPECT_THROW(loos_objective(kTheta, obj), std::invalid_argument);
}

TEST(Objective, RejectsBadInput) {
  Dataset empty;
  empty.model = direct_model(3, 3);
  EXPECT_THROW(Objective(Method::ml(), empty), std::invalid_argument);
  Dataset bad = empty;
  bad.replicates = {Vector(4)};
  EXPECT_THROW(Objective(Method::ml(), bad), std::invalid_argument);
  Method no_rule;
  no_rule.kind = Method::Kind::Loos;
  bad.replicates = {Vector(9)};
  EXPECT_THROW(Objective(no_rule, bad), std::invalid_argument);
}

TEST(NelderMead, QuadraticBowl) {
  const std::vector<double> target{0.7, -1.3};
  auto f = [&](std::span<const double> x) {
    return -((x[0] - target[0]) * (x[0] - target[0]) + (x[1] - target[1]) * (x[1] - target[1]));
  };
  const auto r = nelder_mead_maximize(f, {0.0, 0.0});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], target[0], 1e-4);
  EXPECT_NEAR(r.x[1], target[1], 1e-4);
  EXPECT_LE(r.n_evaluations, 1000u);
}

TEST(NelderMead, BudgetExhaustionIsNotConvergence) {
  auto f = [](std::span<const double> x) { return -std::abs(x[0] - 3.0) - std::abs(x[1]); };
  NelderMeadOptions o;
  o.max_evaluations = 10;
  const auto r = nelder_mead_maximize(f, {0.0, 1.0}, o);
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.n_evaluations, 10u);
  EXPECT_EQ(r.value, f(r.x));
}

TEST(NelderMead, PenaltyPointsNeverConverge) {
  auto f = [](std::span<const double> x) { return kPenaltyFloor - std::abs(x[0]); };
  const auto r = nelder_mead_maximize(f, {0.0});
  EXPECT_FALSE(r.converged);
  EXPECT_THROW(nelder_mead_maximize(f, {std::nan("")}), std::invalid_argument);
  EXPECT_THROW(nelder_mead_maximize(f, {}), std::invalid_argument);
}

TEST(Fit, RecoversTruthAndIsDeterministic) {
  const ModelSpec model = direct_model(20, 22);
  const auto data = simulate(model, kTheta, 10, 15);
  const Objective obj(Method::loos(ScoringRule::log()), data);
  const Theta init = Theta::natural(0.2, 1.4);
  const auto a = fit(obj, init);
  const auto b = fit(obj, init);
  EXPECT_TRUE(a.converged);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  EXPECT_EQ(a.n_evaluations, b.n_evaluations);
  EXPECT_NEAR(a.objective_value, obj.value(a.theta_hat), 1e-10);
  EXPECT_NEAR(a.theta_hat.log_tau, kTheta.log_tau, 0.2);
  EXPECT_NEAR(a.theta_hat.log_kappa, kTheta.log_kappa, 0.2);
  EXPECT_GT(a.wall_time, 0.0);
}

TEST(Fit, LatentWithCovariates) {
  ModelSpec model = latent_model(12, 12, 80, 5);
  model.covariates = synthetic_covariates(model.lattice);
  const Theta truth = Theta::natural(0.16, 1.75, 0.5, {1.0, 2.0, -0.5});
  const auto data = simulate(model, truth, 10, 16);
  Theta init = Theta::natural(0.2, 1.5, 0.6, {0.0, 0.0, 0.0});
  const auto r = fit(Objective(Method::ml(), data), init);
  EXPECT_NEAR(r.theta_hat.beta[0], 1.0, 0.75);
  EXPECT_NEAR(r.theta_hat.beta[2], -0.5, 0.3);
  EXPECT_TRUE(std::isfinite(r.objective_value));
}

TEST(Godambe, GaussianLocationToy) {
  std::mt19937_64 gen(17);
  std::normal_distribution<double> z;
  const double theta0 = 0.4;
  Vector ys(10'000);
  for (auto& y : ys) y = theta0 + z(gen);
  auto values = [&](std::span<const double> x) {
    Vector out(ys.size());
    for (std::size_t d = 0; d < ys.size(); ++d)
      out[d] = -0.5 * (ys[d] - x[0]) * (ys[d] - x[0]) - 0.5 * kLog2Pi;
    return out;
  };
  const std::vector<double> x0{theta0};
  const auto g = godambe_from_values(values, x0);
  // Var((y - theta)^2) = 2, so J has standard error sqrt(2 / N).
  const double se = std::sqrt(2.0 / 10'000);
  EXPECT_NEAR(g.v(0, 0), 1.0, 3 * se);
  EXPECT_NEAR(g.k(0, 0), -1.0, 1e-6);
  EXPECT_NEAR(g.j(0, 0), -g.k(0, 0), 0.05);
  EXPECT_NEAR(g.asymptotic_sd[0], std::sqrt(g.v(0, 0)), 1e-15);
}

TEST(Godambe, SingularSensitivityNamesDirection) {
  auto values = [](std::span<const double> x) {
    return Vector{-(x[0] - 1) * (x[0] - 1), -(x[0] + 1) * (x[0] + 1)};
  };
  const std::vector<double> x0{0.0, 0.5};
  try {
    godambe_from_values(values, x0, 1e-4, {"a", "b"});
    FAIL() << "expected SingularSensitivity";
  } catch (const SingularSensitivity& e) {
    EXPECT_NEAR(std::abs(e.null_direction()[1]), 1.0, 1e-12);
    EXPECT_NEAR(e.null_direction()[0], 0.0, 1e-12);
    EXPECT_NE(std::string(e.what()).find("b="), std::string::npos);
  }
}

TEST(Godambe, LatticeSandwichSymmetricPsd) {
  const ModelSpec model = direct_model(8, 8);
  GodambeOptions o;
  o.n_sims = 100;
  o.seed = 3;
  for (const auto& m : {Method::ml(), Method::loos(ScoringRule::root())}) {
    const auto g = godambe(kTheta, model, m, o);
    const Eigen::MatrixXd v = oracle::to_eigen(g.v);
    EXPECT_LE((v - v.transpose()).cwiseAbs().maxCoeff(), 1e-8);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8 * es.eigenvalues().cwiseAbs().maxCoeff());
    const Eigen::MatrixXd k = oracle::to_eigen(g.k);
    const Eigen::MatrixXd j = oracle::to_eigen(g.j);
    const Eigen::MatrixXd ref = k.inverse() * j * k.inverse().transpose();
    EXPECT_LE((v - ref).cwiseAbs().maxCoeff(), 1e-8 * ref.cwiseAbs().maxCoeff());
    for (int a = 0; a < 2; ++a) EXPECT_NEAR(g.asymptotic_sd[a], std::sqrt(v(a, a)), 1e-14);
  }
  o.reps_per_sim = 0;
  EXPECT_THROW(godambe(kTheta, model, Method::ml(), o), std::invalid_argument);
}

TEST(Method, ParseNameLabel) {
  EXPECT_EQ(Method::parse("ml"), Method::ml());
  EXPECT_EQ(Method::parse("loos:rcrps:2"), Method::loos(ScoringRule::rcrps(2)));
  EXPECT_EQ(Method::loos(ScoringRule::root()).name(), "loos:root");
  EXPECT_THROW(Method::parse("loos"), std::invalid_argument);
  EXPECT_THROW(Method::parse("mle"), std::invalid_argument);
  std::vector<std::string> labels;
  for (const auto& m : standard_methods()) {
    labels.push_back(m.label());
    EXPECT_EQ(Method::parse(m.name()), m);
  }
  EXPECT_EQ(labels, (std::vector<std::string>{"LL", "Slog", "SCRPS", "Sroot", "CRPS", "rCRPS"}));
  EXPECT_EQ(standard_methods().back().rule->cutoff(), 2.0);
}
