#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loos/linalg.hpp"

namespace loos {

/// Regular nx-by-ny node lattice over [x_min, x_max] x [y_min, y_max].
/// Node (row, col) has index row * nx + col; col runs along x, row along y.
struct LatticeSpec {
  std::size_t nx = 20;
  std::size_t ny = 22;
  double x_min = 0.0, x_max = 10.0;
  double y_min = 0.0, y_max = 10.0;

  std::size_t size() const { return nx * ny; }
  double hx() const { return (x_max - x_min) / static_cast<double>(nx - 1); }
  double hy() const { return (y_max - y_min) / static_cast<double>(ny - 1); }
  std::size_t index(std::size_t row, std::size_t col) const { return row * nx + col; }
  std::array<double, 2> coord(std::size_t i) const;
  bool is_interior(std::size_t i) const;
  void validate() const;

  /// Square-ish lattice over [0, 10]^2 with nx * ny close to n.
  static LatticeSpec for_size(std::size_t n);
};

enum class ModelKind { Direct, Latent, LatentNonstationary };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// Log-scale model parameters. For the non-stationary model log_tau is
/// log tau_0. beta multiplies the columns of the covariate design matrix.
struct Theta {
  double log_tau = 0.0;
  double log_kappa = 0.0;
  std::optional<double> log_sigma_eps;
  std::vector<double> beta;

  double tau() const;
  double kappa() const;
  double sigma_eps() const;

  static Theta natural(double tau, double kappa, std::optional<double> sigma_eps = std::nullopt,
                       std::vector<double> beta = {});

  friend bool operator==(const Theta&, const Theta&) = default;
};

struct ModelSpec {
  ModelKind kind = ModelKind::Direct;
  LatticeSpec lattice;
  /// n x p design; the mean is covariates * beta. Include a column of ones
  /// for an intercept.
  std::optional<DenseMatrix> covariates;
  /// Observed lattice nodes (the rows of the projection A). Ignored for Direct.
  std::vector<std::size_t> obs_indices;

  bool is_latent() const { return kind != ModelKind::Direct; }
  std::size_t n_nodes() const { return lattice.size(); }
  std::size_t n_obs() const { return is_latent() ? obs_indices.size() : lattice.size(); }
  std::size_t n_beta() const { return covariates ? covariates->cols() : 0; }
  /// Number of free log-parameters plus regression coefficients.
  std::size_t n_params() const { return 2 + (is_latent() ? 1 : 0) + n_beta(); }
  void validate() const;

  /// Packs theta into the optimiser vector (log tau, log kappa, [log sigma_eps], beta...).
  std::vector<double> pack(const Theta& theta) const;
  Theta unpack(std::span<const double> params) const;
  std::vector<std::string> param_names() const;
};

/// Design [1, x1, x2] with smooth synthetic covariates x1 = s1/10 and
/// x2 = sin(s2).
DenseMatrix synthetic_covariates(const LatticeSpec& lattice);

struct OutlierRecord {
  std::size_t replicate;
  std::size_t index;
  double original;
  double replaced;
};

struct Dataset {
  ModelSpec model;
  std::vector<Vector> replicates;
  std::vector<OutlierRecord> outlier_log;
  std::optional<Theta> truth;

  std::size_t n_replicates() const { return replicates.size(); }
  void validate() const;
};

struct FemMatrices {
  SparseMatrix mass;       // lumped, diagonal (C)
  SparseMatrix stiffness;  // Neumann stiffness (G)
};

/// Lumped mass and P1 stiffness on the lattice split into right triangles.
/// G has the 5-point stencil with weights hy/hx and hx/hy, halved on
/// boundary edges; G * 1 = 0.
FemMatrices build_fem_matrices(const LatticeSpec& lattice);

/// Q = T (kappa^2 C + G) C^{-1} (kappa^2 C + G) T, with T = tau I for the
/// stationary kinds and T = diag(tau_0 * max(sqrt|s_1|, 1e-3)) otherwise.
SparseMatrix build_precision(const Theta& theta, const ModelSpec& model,
                             const SparseMatrix& mass, const SparseMatrix& stiffness);

/// Per-node tau values.
Vector tau_values(const Theta& theta, const ModelSpec& model);

/// Precomputes C, G and G C^{-1} G on one pattern so each Q costs O(nnz).
class PrecisionBuilder {
 public:
  explicit PrecisionBuilder(ModelSpec model);

  const ModelSpec& model() const { return model_; }
  const FemMatrices& fem() const { return fem_; }
  SparseMatrix build(const Theta& theta) const;

 private:
  ModelSpec model_;
  FemMatrices fem_;
  SparseMatrix pattern_;
  Vector c_vals_, g_vals_, gcg_vals_;
  std::vector<std::size_t> row_of_;
};

/// Node-level mean: covariates * beta, or zero.
Vector mean_vector(const Theta& theta, const ModelSpec& model);

struct MaternSummary {
  double marginal_sd;
  double practical_range;
};

/// nu = 1, d = 2: sd = 1 / sqrt(4 pi kappa^2 tau^2), range = sqrt(8) / kappa.
MaternSummary interpret_params(const Theta& theta);
Theta theta_from_sd_range(double marginal_sd, double practical_range);

/// x = mu + L^{-T} z with L L^T = Q, one Philox stream per replicate.
Dataset sample_direct(const ModelSpec& model, const SparseMatrix& q, std::span<const double> mu,
                      std::size_t n_reps, std::uint64_t seed);

/// y = x[obs_indices] + sigma_eps * eps for latent x ~ N(mu, Q^{-1}).
Dataset sample_latent(const ModelSpec& model, const SparseMatrix& q, std::span<const double> mu,
                      double sigma_eps, std::size_t n_reps, std::uint64_t seed);

/// Replaces y_i by |y_i| + magnitude at one uniformly chosen index in each of
/// n_contaminated distinct, uniformly chosen replicates.
Dataset inject_outliers(Dataset data, std::size_t n_contaminated, double magnitude,
                        std::uint64_t seed);

struct ObservationDesign {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Disjoint train/test node sets drawn without replacement from interior
/// nodes, both sorted.
ObservationDesign choose_observation_design(const LatticeSpec& lattice, std::size_t n_train,
                                            std::size_t n_test, std::uint64_t seed);

}  // namespace loos
