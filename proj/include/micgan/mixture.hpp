#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "micgan/matrix.hpp"
#include "micgan/rng.hpp"

// Truncated CRP assignment sampling over a fixed set of K modes, Gaussian
// components with Normal-Inverse-Wishart updates, and mode weights.
namespace micgan::mixture {

struct CrpConfig {
  double alpha = 1.0;      // DP concentration
  std::size_t K = 20;      // truncation level
  std::size_t iters = 3;   // Gibbs sweeps per sampling call

  void validate() const;
};

// Per-datum mode indices plus per-mode counts, kept in sync.
class AssignmentState {
public:
  AssignmentState() = default;
  explicit AssignmentState(std::size_t num_modes) : counts_(num_modes, 0) {}
  // Throws IndexError if any mode index >= num_modes.
  AssignmentState(std::vector<std::uint32_t> modes, std::size_t num_modes);

  std::size_t size() const noexcept { return modes_.size(); }
  std::size_t num_modes() const noexcept { return counts_.size(); }
  std::uint32_t mode(std::size_t i) const { return modes_.at(i); }
  const std::vector<std::uint32_t>& modes() const noexcept { return modes_; }
  const std::vector<std::size_t>& counts() const noexcept { return counts_; }

  void push_back(std::uint32_t k);
  // Moves datum i to mode k, updating counts.
  void reassign(std::size_t i, std::uint32_t k);

  // Recounts from the mode array; throws InvariantError on any mismatch.
  void check() const;

  friend bool operator==(const AssignmentState&, const AssignmentState&) = default;

private:
  friend void gibbs_sweep(const Matrix&, AssignmentState&, const CrpConfig&, Rng&);
  std::vector<std::uint32_t> modes_;
  std::vector<std::size_t> counts_;
};

// Multivariate normal with a cached Cholesky factor and log-determinant.
class GaussianComponent {
public:
  GaussianComponent() = default;
  // Throws NumericError if `covariance` is not symmetric positive definite.
  GaussianComponent(std::vector<double> mean, Matrix covariance);

  std::size_t dim() const noexcept { return mean_.size(); }
  const std::vector<double>& mean() const noexcept { return mean_; }
  const Matrix& covariance() const noexcept { return covariance_; }
  const Matrix& cholesky() const noexcept { return chol_; }
  double log_det() const noexcept { return log_det_; }

  // Sigma^{-1} v.
  std::vector<double> precision_times(std::span<const double> v) const;

  friend bool operator==(const GaussianComponent&, const GaussianComponent&) = default;

private:
  std::vector<double> mean_;
  Matrix covariance_;
  Matrix chol_;
  double log_det_ = 0.0;
};

// Normal-Inverse-Wishart hyperparameters (mu0, kappa0, nu0, Psi).
struct GaussianPrior {
  std::vector<double> mu0;
  double kappa0 = 0.01;
  double nu0 = 0.0;
  Matrix psi;

  // mu0 = 0, kappa0 = 0.01, nu0 = d + 2, Psi = I.
  static GaussianPrior weakly_informative(std::size_t dim);
  std::size_t dim() const noexcept { return mu0.size(); }
  void validate() const;
};

struct NiwPosterior {
  std::vector<double> mu;
  double kappa = 0.0;
  double nu = 0.0;
  Matrix psi;
};

struct ModeWeights {
  std::vector<double> alpha;       // N_k / N
  std::vector<std::size_t> order;  // mode indices by descending alpha, ties lowest first
  std::vector<double> beta;        // alpha[order[r]]

  static ModeWeights uniform(std::size_t K);
  friend bool operator==(const ModeWeights&, const ModeWeights&) = default;
};

struct CrpPrior {
  std::vector<double> existing;  // N_k / (i - 1 + alpha)
  double new_table = 0.0;        // alpha / (i - 1 + alpha)
};

// Prior over the i-th draw (1-based) given counts of the first i-1 draws.
CrpPrior crp_prior_probs(std::span<const std::size_t> counts, double alpha, std::size_t i);

// Log probability of a full label sequence under the sequential CRP prior.
// Labels are table ids; a label seen for the first time opens a new table.
double crp_sequence_log_prior(std::span<const std::uint32_t> labels, double alpha);

// Draws a mode with probability proportional to N_k * p_{i,k} (no new-table
// term). `log_lik` holds log p_{i,k}; `counts` exclude datum i. If every
// product is zero, falls back to uniform over occupied modes, and to the
// likelihood alone when no mode is occupied.
std::size_t crp_posterior_sample(std::span<const double> log_lik,
                                 std::span<const std::size_t> counts, Rng& rng);

// c_i = argmax_k log p_{i,k}, ties to the lowest index.
AssignmentState argmax_init_assign(const Matrix& log_lik);

// `cfg.iters` sequential passes of remove / resample / reinsert.
void gibbs_sweep(const Matrix& log_lik, AssignmentState& state, const CrpConfig& cfg, Rng& rng);

// Argmax initialization followed by Gibbs sweeps.
AssignmentState crp_sample(const Matrix& log_lik, const CrpConfig& cfg, Rng& rng);

double gaussian_logpdf(const GaussianComponent& comp, std::span<const double> e);

NiwPosterior niw_posterior(const Matrix& group, const GaussianPrior& prior);

enum class ComponentUpdate { posterior_mode, posterior_sample };

// One component per group. posterior_mode gives mu_n and Psi_n / (nu_n + d + 1);
// empty groups give the prior mode. `jitter` * I is added before factoring.
std::vector<GaussianComponent> update_components(const std::vector<Matrix>& groups,
                                                 const GaussianPrior& prior,
                                                 ComponentUpdate how = ComponentUpdate::posterior_mode,
                                                 Rng* rng = nullptr, double jitter = 1e-6);

// K equidistant means with covariance cov_scale * I. For dim >= K the means
// are one-hot vectors; for dim == K - 1 they are the same simplex expressed
// in the (K-1)-dimensional hyperplane it spans. Pairwise distance is sqrt(2).
std::vector<GaussianComponent> init_components(std::size_t K, std::size_t dim,
                                               double cov_scale = 1.0);

ModeWeights mode_weights(std::span<const std::size_t> counts);

std::size_t effective_modes(std::span<const std::size_t> counts, double threshold_fraction);

// Rows of `embeddings` grouped by assigned mode.
std::vector<Matrix> group_by_mode(const Matrix& embeddings, const AssignmentState& state);

// CSV: index,assigned_mode,max_loglik
void write_assignments_csv(std::ostream& os, const AssignmentState& state, const Matrix& log_lik);

}  // namespace micgan::mixture
