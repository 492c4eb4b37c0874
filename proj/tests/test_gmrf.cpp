#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "loos/gmrf.hpp"
#include "oracle.hpp"

using namespace loos;

namespace {

ModelSpec direct_model(std::size_t nx = 20, std::size_t ny = 22) {
  ModelSpec m;
  m.lattice.nx = nx;
  m.lattice.ny = ny;
  return m;
}

const Theta kTheta = Theta::natural(0.16, 1.75);

}  // namespace

TEST(Lattice, IndexingAndValidation) {
  const LatticeSpec l{4, 3, 0, 3, 0, 10};
  EXPECT_EQ(l.size(), 12u);
  EXPECT_EQ(l.index(2, 1), 9u);
  EXPECT_EQ(l.coord(9)[0], 1.0);
  EXPECT_EQ(l.coord(9)[1], 10.0);
  EXPECT_FALSE(l.is_interior(0));
  EXPECT_TRUE(l.is_interior(l.index(1, 1)));
  EXPECT_THROW((LatticeSpec{1, 2}).validate(), std::invalid_argument);
  EXPECT_THROW((LatticeSpec{3, 3, 1, 1, 0, 1}).validate(), std::invalid_argument);
  const auto s = LatticeSpec::for_size(1600);
  EXPECT_NEAR(static_cast<double>(s.size()), 1600.0, 100.0);
}

TEST(Fem, TwoByTwoUnitLattice) {
  const auto fem = build_fem_matrices({2, 2, 0, 1, 0, 1});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(fem.mass.at(i, i), 0.25);
  EXPECT_EQ(fem.mass.nnz(), 4u);
  const auto g1 = spmv(fem.stiffness, Vector(4, 1.0));
  for (double v : g1) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Fem, StiffnessSymmetricPsdWithConstantNullVector) {
  const auto fem = build_fem_matrices({5, 5, 0, 4, 0, 4});
  const Eigen::MatrixXd g = oracle::to_eigen(fem.stiffness);
  EXPECT_EQ((g - g.transpose()).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
  EXPECT_LT((g * Eigen::VectorXd::Ones(25)).cwiseAbs().maxCoeff(), 1e-13);
  // Interior 5-point stencil on a unit grid.
  EXPECT_DOUBLE_EQ(fem.stiffness.at(12, 12), 4.0);
  EXPECT_DOUBLE_EQ(fem.stiffness.at(12, 13), -1.0);
  EXPECT_DOUBLE_EQ(fem.stiffness.at(12, 17), -1.0);
  EXPECT_EQ(fem.stiffness.at(12, 18), 0.0);
}

TEST(Fem, MassSumsToArea) {
  const LatticeSpec l{20, 22, 0, 10, -1, 4};
  const auto fem = build_fem_matrices(l);
  double s = 0;
  for (double v : fem.mass.diagonal_values()) s += v;
  EXPECT_NEAR(s, 50.0, 1e-12);
  EXPECT_NEAR(fem.mass.at(0, 0), l.hx() * l.hy() / 4, 1e-15);
  EXPECT_NEAR(fem.mass.at(1, 1), l.hx() * l.hy() / 2, 1e-15);
  EXPECT_NEAR(fem.mass.at(l.index(3, 3), l.index(3, 3)), l.hx() * l.hy(), 1e-15);
}

TEST(Precision, MatchesDenseFormula) {
  const auto model = direct_model(6, 5);
  const auto fem = build_fem_matrices(model.lattice);
  const Theta th = Theta::natural(0.7, 1.3);
  const Eigen::MatrixXd c = oracle::to_eigen(fem.mass), g = oracle::to_eigen(fem.stiffness);
  const Eigen::MatrixXd k = th.kappa() * th.kappa() * c + g;
  const Eigen::MatrixXd ref = th.tau() * th.tau() * k * c.inverse() * k;
  const Eigen::MatrixXd q1 = oracle::to_eigen(build_precision(th, model, fem.mass, fem.stiffness));
  const Eigen::MatrixXd q2 = oracle::to_eigen(PrecisionBuilder(model).build(th));
  EXPECT_LT((q1 - ref).cwiseAbs().maxCoeff(), 1e-12 * ref.cwiseAbs().maxCoeff());
  EXPECT_LT((q2 - ref).cwiseAbs().maxCoeff(), 1e-12 * ref.cwiseAbs().maxCoeff());
}

TEST(Precision, ZeroStiffnessReducesToScaledMass) {
  const auto model = direct_model(2, 2);
  const auto fem = build_fem_matrices(model.lattice);
  const SparseMatrix zero = fem.stiffness.with_values(std::vector<double>(fem.stiffness.nnz(), 0.0));
  const Theta th = Theta::natural(0.5, 2.0);
  const auto q = build_precision(th, model, fem.mass, zero);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_NEAR(q.at(i, i), 0.25 * 16.0 * fem.mass.at(i, i), 1e-14);
}

TEST(Precision, ExactlySymmetricSpdAndSparse) {
  for (std::size_t n : {5u, 12u, 25u}) {
    const auto model = direct_model(n, n);
    const auto q = PrecisionBuilder(model).build(Theta::natural(0.4, 0.9));
    const Eigen::MatrixXd d = oracle::to_eigen(q);
    EXPECT_EQ((d - d.transpose()).cwiseAbs().maxCoeff(), 0.0);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d);
    EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
    for (std::size_t i = 0; i < q.rows(); ++i)
      EXPECT_LE(q.offsets()[i + 1] - q.offsets()[i], 13u);
  }
}

TEST(Precision, CentreMarginalVariance) {
  const auto model = direct_model();
  const auto q = PrecisionBuilder(model).build(kTheta);
  const BandCholesky f(q);
  const std::size_t centre = model.lattice.index(11, 10);
  const double expect = 1.0 / (4 * std::numbers::pi * 1.75 * 1.75 * 0.16 * 0.16);
  EXPECT_NEAR(expect, 1.016, 1e-3);
  EXPECT_NEAR(f.inverse_diagonal(centre), expect, 0.15 * expect);
}

TEST(Precision, NonstationaryScalesByNodeTau) {
  ModelSpec ns = direct_model(7, 6);
  ns.kind = ModelKind::LatentNonstationary;
  ns.obs_indices = {1, 2, 3};
  const Theta th = Theta::natural(0.3, 1.1, 0.5);
  const Eigen::MatrixXd q_ns = oracle::to_eigen(PrecisionBuilder(ns).build(th));
  ModelSpec st = ns;
  st.kind = ModelKind::Latent;
  Theta unit = th;
  unit.log_tau = 0.0;
  const Eigen::MatrixXd q_unit = oracle::to_eigen(PrecisionBuilder(st).build(unit));
  Eigen::VectorXd t(ns.n_nodes());
  for (std::size_t i = 0; i < ns.n_nodes(); ++i)
    t[i] = 0.3 * std::max(std::sqrt(std::abs(ns.lattice.coord(i)[0])), 1e-3);
  const Eigen::MatrixXd ref = t.asDiagonal() * q_unit * t.asDiagonal();
  EXPECT_LT((q_ns - ref).cwiseAbs().maxCoeff(), 1e-12 * ref.cwiseAbs().maxCoeff());
  const auto tv = tau_values(th, ns);
  for (std::size_t i = 0; i < tv.size(); ++i) EXPECT_NEAR(tv[i], t[i], 1e-15);

  // Constant tau: tau_0^2 times the unit-tau matrix is the stationary build.
  const Eigen::MatrixXd q_st = oracle::to_eigen(PrecisionBuilder(st).build(th));
  EXPECT_LT((q_st - 0.09 * q_unit).cwiseAbs().maxCoeff(), 1e-12 * q_st.cwiseAbs().maxCoeff());
  // Non-stationary Q stays SPD despite s1 = 0 on the left edge.
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q_ns);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(Precision, RejectsNonFiniteParameters) {
  const PrecisionBuilder b(direct_model(4, 4));
  Theta th = kTheta;
  th.log_kappa = std::nan("");
  EXPECT_THROW(b.build(th), std::invalid_argument);
  th = kTheta;
  th.log_tau = 1e6;
  EXPECT_THROW(b.build(th), std::invalid_argument);
}

TEST(Interpret, PaperParameters) {
  const auto s = interpret_params(kTheta);
  EXPECT_NEAR(s.marginal_sd, 1.008, 1e-3);
  EXPECT_NEAR(s.practical_range, 1.616, 1e-3);
  EXPECT_NEAR(interpret_params(Theta::natural(1.0, std::sqrt(8.0))).practical_range, 1.0, 1e-15);
  const double kappa = 2.0;
  const double tau = 1.0 / (std::sqrt(4 * std::numbers::pi) * kappa * 0.5);
  EXPECT_NEAR(interpret_params(Theta::natural(tau, kappa)).marginal_sd, 0.5, 1e-15);
  const auto back = theta_from_sd_range(0.5, 1.3);
  EXPECT_NEAR(interpret_params(back).marginal_sd, 0.5, 1e-14);
  EXPECT_NEAR(interpret_params(back).practical_range, 1.3, 1e-14);
}

TEST(Theta, PackUnpackRoundTrip) {
  ModelSpec m = direct_model(4, 4);
  m.kind = ModelKind::Latent;
  m.obs_indices = {5, 6};
  m.covariates = synthetic_covariates(m.lattice);
  const Theta th = Theta::natural(0.2, 1.5, 0.3, {1.0, -2.0, 0.5});
  const auto p = m.pack(th);
  EXPECT_EQ(p.size(), 6u);
  EXPECT_EQ(m.unpack(p), th);
  EXPECT_EQ(m.param_names(),
            (std::vector<std::string>{"log_tau", "log_kappa", "log_sigma_eps", "beta0", "beta1",
                                      "beta2"}));
  EXPECT_THROW(m.pack(Theta::natural(0.2, 1.5)), std::invalid_argument);
  EXPECT_THROW(m.unpack(std::vector<double>(3)), std::invalid_argument);
  EXPECT_THROW(Theta::natural(-1, 1), std::invalid_argument);
}

TEST(Model, ValidatesObservations) {
  ModelSpec m = direct_model(4, 4);
  m.kind = ModelKind::Latent;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m.obs_indices = {1, 1};
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m.obs_indices = {1, 16};
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m.obs_indices = {1, 15};
  EXPECT_NO_THROW(m.validate());
  EXPECT_EQ(parse_model_kind(to_string(ModelKind::LatentNonstationary)),
            ModelKind::LatentNonstationary);
  EXPECT_THROW(parse_model_kind("mesh"), std::invalid_argument);
}

TEST(Sampling, IdentityPrecisionIsStandardNormal) {
  const auto model = direct_model(2, 2);
  const auto d = sample_direct(model, SparseMatrix::identity(4), Vector(4, 0.0), 10'000, 3);
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0, s2 = 0;
    for (const auto& r : d.replicates) s += r[i], s2 += r[i] * r[i];
    EXPECT_NEAR(s / 1e4, 0.0, 0.04);
    EXPECT_NEAR(s2 / 1e4, 1.0, 0.05);
  }
}

TEST(Sampling, DeterministicPerSeed) {
  const auto model = direct_model(6, 6);
  const auto q = PrecisionBuilder(model).build(kTheta);
  const Vector mu(36, 0.0);
  const auto a = sample_direct(model, q, mu, 5, 42);
  const auto b = sample_direct(model, q, mu, 5, 42);
  const auto c = sample_direct(model, q, mu, 5, 43);
  EXPECT_EQ(a.replicates, b.replicates);
  EXPECT_NE(a.replicates, c.replicates);
  // Stream per replicate: a shorter run is a prefix of a longer one.
  const auto p = sample_direct(model, q, mu, 3, 42);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(p.replicates[r], a.replicates[r]);
}

TEST(Sampling, EmpiricalCovarianceMatchesInverse) {
  const auto model = direct_model();
  const auto q = PrecisionBuilder(model).build(kTheta);
  const std::size_t n_reps = 10'000;
  const auto d = sample_direct(model, q, Vector(model.n_nodes(), 0.0), n_reps, 7);
  const Eigen::MatrixXd cov = oracle::to_eigen(q).inverse();
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<std::size_t> pick(0, model.n_nodes() - 1);
  for (int t = 0; t < 20; ++t) {
    const std::size_t i = pick(gen);
    const std::size_t j = t % 4 == 0 ? i : pick(gen);
    double s = 0;
    for (const auto& r : d.replicates) s += r[i] * r[j];
    const double est = s / static_cast<double>(n_reps);
    const double se = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / n_reps);
    EXPECT_NEAR(est, cov(i, j), 3 * se) << i << "," << j;
  }
}

TEST(Sampling, LatentNoiseLimitsAndVariance) {
  ModelSpec m = direct_model(10, 10);
  m.kind = ModelKind::Latent;
  m.obs_indices = {11, 45, 88};
  const auto q = PrecisionBuilder(m).build(kTheta);
  const Vector mu(100, 0.0);
  const auto field = sample_direct(direct_model(10, 10), q, mu, 3, 9);
  const auto tiny = sample_latent(m, q, mu, 1e-8, 3, 9);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t k = 0; k < 3; ++k)
      EXPECT_NEAR(tiny.replicates[r][k], field.replicates[r][m.obs_indices[k]], 1e-6);

  const double sigma = 0.7;
  const auto d = sample_latent(m, q, mu, sigma, 10'000, 10);
  const Eigen::MatrixXd cov = oracle::to_eigen(q).inverse();
  for (std::size_t k = 0; k < 3; ++k) {
    double s2 = 0;
    for (const auto& r : d.replicates) s2 += r[k] * r[k];
    const double var = cov(m.obs_indices[k], m.obs_indices[k]) + sigma * sigma;
    EXPECT_NEAR(s2 / 1e4, var, 3 * var * std::sqrt(2.0 / 1e4));
  }
  EXPECT_EQ(sample_latent(m, q, mu, sigma, 4, 1).replicates,
            sample_latent(m, q, mu, sigma, 4, 1).replicates);
  EXPECT_THROW(sample_latent(m, q, mu, 0.0, 1, 1), std::invalid_argument);
}

TEST(Sampling, CovariateMean) {
  ModelSpec m = direct_model(8, 8);
  m.covariates = synthetic_covariates(m.lattice);
  const Theta th = Theta::natural(0.16, 1.75, std::nullopt, {2.0, -1.0, 0.5});
  const auto mu = mean_vector(th, m);
  for (std::size_t i = 0; i < 64; ++i) {
    const auto s = m.lattice.coord(i);
    EXPECT_DOUBLE_EQ(mu[i], 2.0 + -1.0 * (s[0] / 10) + 0.5 * std::sin(s[1]));
  }
  const auto q = PrecisionBuilder(m).build(th);
  const auto d = sample_direct(m, q, mu, 10'000, 12);
  const Eigen::MatrixXd cov = oracle::to_eigen(q).inverse();
  for (std::size_t i : {0u, 27u, 63u}) {
    double s = 0;
    for (const auto& r : d.replicates) s += r[i];
    EXPECT_NEAR(s / 1e4, mu[i], 3 * std::sqrt(cov(i, i) / 1e4));
  }
  EXPECT_THROW(mean_vector(Theta::natural(1, 1), m), std::invalid_argument);
}

TEST(Outliers, Examples) {
  Dataset d;
  d.model = direct_model(2, 5);
  for (int r = 0; r < 10; ++r) d.replicates.push_back(Vector(10, -3.0));
  const auto none = inject_outliers(d, 0, 5.0, 1);
  EXPECT_EQ(none.replicates, d.replicates);
  EXPECT_TRUE(none.outlier_log.empty());

  const auto all = inject_outliers(d, 10, 5.0, 1);
  ASSERT_EQ(all.outlier_log.size(), 10u);
  std::set<std::size_t> reps;
  for (const auto& o : all.outlier_log) {
    reps.insert(o.replicate);
    EXPECT_EQ(o.original, -3.0);
    EXPECT_EQ(o.replaced, 8.0);
    EXPECT_EQ(all.replicates[o.replicate][o.index], 8.0);
  }
  EXPECT_EQ(reps.size(), 10u);
  EXPECT_THROW(inject_outliers(d, 11, 5.0, 1), std::invalid_argument);
  EXPECT_THROW(inject_outliers(d, 1, 0.0, 1), std::invalid_argument);
}

TEST(Outliers, ChangesExactlyRequestedEntries) {
  const auto model = direct_model(6, 6);
  const auto q = PrecisionBuilder(model).build(kTheta);
  const auto clean = sample_direct(model, q, Vector(36, 0.0), 10, 5);
  for (std::size_t k : {1u, 4u, 10u}) {
    const auto dirty = inject_outliers(clean, k, 10.0, 77);
    std::size_t changed = 0;
    for (std::size_t r = 0; r < 10; ++r)
      for (std::size_t i = 0; i < 36; ++i)
        if (dirty.replicates[r][i] != clean.replicates[r][i]) {
          ++changed;
          EXPECT_GE(std::abs(dirty.replicates[r][i]), 10.0);
        }
    EXPECT_EQ(changed, k);
    EXPECT_EQ(dirty.replicates, inject_outliers(clean, k, 10.0, 77).replicates);
  }
}

TEST(Design, DisjointInteriorSorted) {
  const LatticeSpec l;
  const auto d = choose_observation_design(l, 300, 60, 2024);
  EXPECT_EQ(d.train.size(), 300u);
  EXPECT_EQ(d.test.size(), 60u);
  EXPECT_TRUE(std::is_sorted(d.train.begin(), d.train.end()));
  std::set<std::size_t> all(d.train.begin(), d.train.end());
  for (auto i : d.test) EXPECT_TRUE(all.insert(i).second);
  for (auto i : all) EXPECT_TRUE(l.is_interior(i));
  EXPECT_THROW(choose_observation_design(l, 400, 60, 1), std::invalid_argument);
}
