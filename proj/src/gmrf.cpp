#include "loos/gmrf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "loos/rng.hpp"

namespace loos {

namespace {

constexpr double kTauFloor = 1e-3;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite parameter: ") + what);
}

// Fisher-Yates prefix: k distinct uniform draws from [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Philox4x32& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_uniform() * static_cast<double>(n - i));
    std::swap(pool[i], pool[std::min(j, n - 1)]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

// ---------------------------------------------------------------- lattice

std::array<double, 2> LatticeSpec::coord(std::size_t i) const {
  const std::size_t row = i / nx, col = i % nx;
  return {x_min + static_cast<double>(col) * hx(), y_min + static_cast<double>(row) * hy()};
}

bool LatticeSpec::is_interior(std::size_t i) const {
  const std::size_t row = i / nx, col = i % nx;
  return row > 0 && row + 1 < ny && col > 0 && col + 1 < nx;
}

void LatticeSpec::validate() const {
  if (nx < 2 || ny < 2) throw std::invalid_argument("lattice needs at least 2 nodes per axis");
  if (!(x_max > x_min) || !(y_max > y_min))
    throw std::invalid_argument("lattice ranges must have positive length");
}

LatticeSpec LatticeSpec::for_size(std::size_t n) {
  const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  LatticeSpec l;
  l.nx = std::max<std::size_t>(side, 2);
  l.ny = std::max<std::size_t>((n + l.nx / 2) / l.nx, 2);
  return l;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Direct: return "direct";
    case ModelKind::Latent: return "latent";
    case ModelKind::LatentNonstationary: return "nonstationary";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "direct") return ModelKind::Direct;
  if (text == "latent") return ModelKind::Latent;
  if (text == "nonstationary" || text == "latent-nonstationary") return ModelKind::LatentNonstationary;
  throw std::invalid_argument("unknown model kind '" + text + "' (direct, latent, nonstationary)");
}

// ---------------------------------------------------------------- parameters

double Theta::tau() const { return std::exp(log_tau); }
double Theta::kappa() const { return std::exp(log_kappa); }
double Theta::sigma_eps() const {
  if (!log_sigma_eps) throw std::logic_error("theta has no measurement-noise parameter");
  return std::exp(*log_sigma_eps);
}

Theta Theta::natural(double tau, double kappa, std::optional<double> sigma_eps,
                     std::vector<double> beta) {
  if (!(tau > 0.0) || !(kappa > 0.0)) throw std::invalid_argument("tau and kappa must be positive");
  Theta t;
  t.log_tau = std::log(tau);
  t.log_kappa = std::log(kappa);
  if (sigma_eps) {
    if (!(*sigma_eps > 0.0)) throw std::invalid_argument("sigma_eps must be positive");
    t.log_sigma_eps = std::log(*sigma_eps);
  }
  t.beta = std::move(beta);
  return t;
}

void ModelSpec::validate() const {
  lattice.validate();
  if (covariates && covariates->rows() != lattice.size())
    throw std::invalid_argument("covariate rows must equal the node count");
  if (is_latent()) {
    if (obs_indices.empty()) throw std::invalid_argument("latent model needs observation indices");
    std::vector<std::size_t> sorted = obs_indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("observation indices must be distinct");
    if (sorted.back() >= lattice.size()) throw std::invalid_argument("observation index out of range");
  }
}

std::vector<double> ModelSpec::pack(const Theta& theta) const {
  if (theta.beta.size() != n_beta())
    throw std::invalid_argument("beta length must equal the covariate count");
  std::vector<double> p{theta.log_tau, theta.log_kappa};
  if (is_latent()) {
    if (!theta.log_sigma_eps) throw std::invalid_argument("latent model needs log_sigma_eps");
    p.push_back(*theta.log_sigma_eps);
  }
  p.insert(p.end(), theta.beta.begin(), theta.beta.end());
  return p;
}

Theta ModelSpec::unpack(std::span<const double> params) const {
  if (params.size() != n_params()) throw std::invalid_argument("parameter vector has wrong length");
  Theta t;
  t.log_tau = params[0];
  t.log_kappa = params[1];
  std::size_t k = 2;
  if (is_latent()) t.log_sigma_eps = params[k++];
  t.beta.assign(params.begin() + static_cast<std::ptrdiff_t>(k), params.end());
  return t;
}

std::vector<std::string> ModelSpec::param_names() const {
  std::vector<std::string> names{"log_tau", "log_kappa"};
  if (is_latent()) names.emplace_back("log_sigma_eps");
  for (std::size_t j = 0; j < n_beta(); ++j) names.push_back("beta" + std::to_string(j));
  return names;
}

DenseMatrix synthetic_covariates(const LatticeSpec& lattice) {
  DenseMatrix x(lattice.size(), 3);
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const auto s = lattice.coord(i);
    x(i, 0) = 1.0;
    x(i, 1) = s[0] / 10.0;
    x(i, 2) = std::sin(s[1]);
  }
  return x;
}

void Dataset::validate() const {
  model.validate();
  const std::size_t m = model.n_obs();
  for (const auto& r : replicates)
    if (r.size() != m) throw std::invalid_argument("replicate length differs from observation count");
  for (const auto& o : outlier_log)
    if (o.replicate >= replicates.size() || o.index >= m)
      throw std::invalid_argument("outlier log entry out of range");
}

// ---------------------------------------------------------------- FEM

FemMatrices build_fem_matrices(const LatticeSpec& lattice) {
  lattice.validate();
  const std::size_t n = lattice.size();
  const double hx = lattice.hx(), hy = lattice.hy();
  Vector mass(n);
  std::vector<Triplet> g;
  g.reserve(5 * n);
  for (std::size_t row = 0; row < lattice.ny; ++row)
    for (std::size_t col = 0; col < lattice.nx; ++col) {
      const double wx = (col == 0 || col + 1 == lattice.nx) ? 0.5 : 1.0;
      const double wy = (row == 0 || row + 1 == lattice.ny) ? 0.5 : 1.0;
      mass[lattice.index(row, col)] = hx * hy * wx * wy;
    }
  auto edge = [&](std::size_t a, std::size_t b, double w) {
    g.push_back({a, b, -w});
    g.push_back({b, a, -w});
    g.push_back({a, a, w});
    g.push_back({b, b, w});
  };
  for (std::size_t row = 0; row < lattice.ny; ++row)
    for (std::size_t col = 0; col + 1 < lattice.nx; ++col) {
      const double w = (row == 0 || row + 1 == lattice.ny) ? 0.5 : 1.0;
      edge(lattice.index(row, col), lattice.index(row, col + 1), w * hy / hx);
    }
  for (std::size_t row = 0; row + 1 < lattice.ny; ++row)
    for (std::size_t col = 0; col < lattice.nx; ++col) {
      const double w = (col == 0 || col + 1 == lattice.nx) ? 0.5 : 1.0;
      edge(lattice.index(row, col), lattice.index(row + 1, col), w * hx / hy);
    }
  return {SparseMatrix::diagonal(mass), SparseMatrix::from_triplets(n, n, std::move(g), true)};
}

Vector tau_values(const Theta& theta, const ModelSpec& model) {
  require_finite(theta.log_tau, "log_tau");
  const double tau = theta.tau();
  require_finite(tau, "tau");
  Vector t(model.n_nodes(), tau);
  if (model.kind == ModelKind::LatentNonstationary)
    for (std::size_t i = 0; i < t.size(); ++i)
      t[i] = tau * std::max(std::sqrt(std::abs(model.lattice.coord(i)[0])), kTauFloor);
  return t;
}

SparseMatrix build_precision(const Theta& theta, const ModelSpec& model, const SparseMatrix& mass,
                             const SparseMatrix& stiffness) {
  require_finite(theta.log_kappa, "log_kappa");
  const double k2 = theta.kappa() * theta.kappa();
  require_finite(k2, "kappa");
  const Vector c = mass.diagonal_values();
  Vector c_inv(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!(c[i] > 0.0)) throw std::invalid_argument("mass matrix must have a positive diagonal");
    c_inv[i] = 1.0 / c[i];
  }
  const SparseMatrix k = sparse_add(mass, k2, stiffness, 1.0);
  const SparseMatrix kck = symmetrized(sparse_triple_diag(k, c_inv, k));
  const Vector t = tau_values(theta, model);
  Vector v(kck.nnz());
  for (std::size_t i = 0; i < kck.rows(); ++i)
    for (std::size_t p = kck.offsets()[i]; p < kck.offsets()[i + 1]; ++p)
      v[p] = (t[i] * t[kck.columns()[p]]) * kck.values()[p];
  return SparseMatrix::from_csr(kck.rows(), kck.cols(),
                                {kck.offsets().begin(), kck.offsets().end()},
                                {kck.columns().begin(), kck.columns().end()}, std::move(v), true);
}

PrecisionBuilder::PrecisionBuilder(ModelSpec model)
    : model_(std::move(model)), fem_(build_fem_matrices(model_.lattice)) {
  model_.validate();
  const Vector c = fem_.mass.diagonal_values();
  Vector c_inv(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) c_inv[i] = 1.0 / c[i];
  const SparseMatrix gcg = symmetrized(sparse_triple_diag(fem_.stiffness, c_inv, fem_.stiffness));
  // G C^{-1} G contains the patterns of G and of the diagonal.
  pattern_ = gcg;
  const std::size_t nnz = gcg.nnz();
  c_vals_.assign(nnz, 0.0);
  g_vals_.assign(nnz, 0.0);
  gcg_vals_.assign(gcg.values().begin(), gcg.values().end());
  row_of_.resize(nnz);
  for (std::size_t i = 0; i < gcg.rows(); ++i)
    for (std::size_t k = gcg.offsets()[i]; k < gcg.offsets()[i + 1]; ++k) {
      const std::size_t j = gcg.columns()[k];
      row_of_[k] = i;
      c_vals_[k] = fem_.mass.at(i, j);
      g_vals_[k] = fem_.stiffness.at(i, j);
    }
}

SparseMatrix PrecisionBuilder::build(const Theta& theta) const {
  require_finite(theta.log_kappa, "log_kappa");
  const double k2 = theta.kappa() * theta.kappa();
  const double k4 = k2 * k2;
  require_finite(k4, "kappa");
  const Vector t = tau_values(theta, model_);
  const auto cols = pattern_.columns();
  Vector v(c_vals_.size());
  for (std::size_t k = 0; k < v.size(); ++k)
    v[k] = (t[row_of_[k]] * t[cols[k]]) * (k4 * c_vals_[k] + 2.0 * k2 * g_vals_[k] + gcg_vals_[k]);
  return pattern_.with_values(std::move(v));
}

Vector mean_vector(const Theta& theta, const ModelSpec& model) {
  if (!model.covariates) return Vector(model.n_nodes(), 0.0);
  if (theta.beta.size() != model.n_beta())
    throw std::invalid_argument("beta length must equal the covariate count");
  return matvec(*model.covariates, theta.beta);
}

MaternSummary interpret_params(const Theta& theta) {
  const double tau = theta.tau(), kappa = theta.kappa();
  return {1.0 / std::sqrt(4.0 * std::numbers::pi * kappa * kappa * tau * tau),
          std::sqrt(8.0) / kappa};
}

Theta theta_from_sd_range(double marginal_sd, double practical_range) {
  const double kappa = std::sqrt(8.0) / practical_range;
  const double tau = 1.0 / (std::sqrt(4.0 * std::numbers::pi) * kappa * marginal_sd);
  return Theta::natural(tau, kappa);
}

// ---------------------------------------------------------------- sampling

namespace {

std::vector<Vector> sample_fields(const SparseMatrix& q, std::span<const double> mu,
                                  std::size_t n_reps, std::uint64_t seed, double sigma_eps,
                                  const std::vector<std::size_t>* obs) {
  if (mu.size() != q.rows()) throw DimensionMismatch("sample: mean length differs from Q");
  const BandCholesky factor(q);
  const std::size_t n = q.rows();
  std::vector<Vector> out(n_reps);
  const auto reps = static_cast<std::ptrdiff_t>(n_reps);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < reps; ++r) {
    Philox4x32 rng(seed, static_cast<std::uint64_t>(r));
    Vector z(n);
    for (auto& v : z) v = rng.next_normal();
    Vector x = factor.backward(z);
    for (std::size_t i = 0; i < n; ++i) x[i] += mu[i];
    if (obs == nullptr) {
      out[r] = std::move(x);
    } else {
      Vector y(obs->size());
      for (std::size_t k = 0; k < obs->size(); ++k) y[k] = x[(*obs)[k]] + sigma_eps * rng.next_normal();
      out[r] = std::move(y);
    }
  }
  return out;
}

}  // namespace

Dataset sample_direct(const ModelSpec& model, const SparseMatrix& q, std::span<const double> mu,
                      std::size_t n_reps, std::uint64_t seed) {
  Dataset d;
  d.model = model;
  d.replicates = sample_fields(q, mu, n_reps, seed, 0.0, nullptr);
  return d;
}

Dataset sample_latent(const ModelSpec& model, const SparseMatrix& q, std::span<const double> mu,
                      double sigma_eps, std::size_t n_reps, std::uint64_t seed) {
  if (!(sigma_eps > 0.0)) throw std::invalid_argument("sigma_eps must be positive");
  if (!model.is_latent()) throw std::invalid_argument("sample_latent needs a latent model");
  model.validate();
  Dataset d;
  d.model = model;
  d.replicates = sample_fields(q, mu, n_reps, seed, sigma_eps, &model.obs_indices);
  return d;
}

Dataset inject_outliers(Dataset data, std::size_t n_contaminated, double magnitude,
                        std::uint64_t seed) {
  if (n_contaminated > data.replicates.size())
    throw std::invalid_argument("more contaminated replicates requested than exist");
  if (!(magnitude > 0.0)) throw std::invalid_argument("outlier magnitude must be positive");
  if (n_contaminated == 0) return data;
  Philox4x32 rng(seed, 0);
  const auto reps = sample_without_replacement(data.replicates.size(), n_contaminated, rng);
  for (std::size_t r : reps) {
    auto& y = data.replicates[r];
    const std::size_t i = std::min(
        static_cast<std::size_t>(rng.next_uniform() * static_cast<double>(y.size())), y.size() - 1);
    const double original = y[i];
    y[i] = std::abs(original) + magnitude;
    data.outlier_log.push_back({r, i, original, y[i]});
  }
  std::sort(data.outlier_log.begin(), data.outlier_log.end(),
            [](const OutlierRecord& a, const OutlierRecord& b) { return a.replicate < b.replicate; });
  return data;
}

ObservationDesign choose_observation_design(const LatticeSpec& lattice, std::size_t n_train,
                                            std::size_t n_test, std::uint64_t seed) {
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < lattice.size(); ++i)
    if (lattice.is_interior(i)) interior.push_back(i);
  if (n_train + n_test > interior.size())
    throw std::invalid_argument("not enough interior nodes for the requested design");
  Philox4x32 rng(seed, 0);
  const auto picks = sample_without_replacement(interior.size(), n_train + n_test, rng);
  ObservationDesign design;
  for (std::size_t k = 0; k < picks.size(); ++k)
    (k < n_train ? design.train : design.test).push_back(interior[picks[k]]);
  std::sort(design.train.begin(), design.train.end());
  std::sort(design.test.begin(), design.test.end());
  return design;
}

}  // namespace loos
