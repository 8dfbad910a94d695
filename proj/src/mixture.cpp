#include "micgan/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "micgan/linalg.hpp"

namespace micgan::mixture {

void CrpConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ArgumentError("CrpConfig: alpha must be positive");
  if (K < 1) throw ArgumentError("CrpConfig: K must be >= 1");
  if (iters < 1) throw ArgumentError("CrpConfig: iters must be >= 1");
}

// ---------------------------------------------------------------------------
// AssignmentState

AssignmentState::AssignmentState(std::vector<std::uint32_t> modes, std::size_t num_modes)
    : modes_(std::move(modes)), counts_(num_modes, 0) {
  for (auto k : modes_) {
    if (k >= num_modes)
      throw IndexError("AssignmentState: mode " + std::to_string(k) + " >= K=" +
                       std::to_string(num_modes));
    ++counts_[k];
  }
}

void AssignmentState::push_back(std::uint32_t k) {
  if (k >= counts_.size()) throw IndexError("AssignmentState::push_back: mode out of range");
  modes_.push_back(k);
  ++counts_[k];
}

void AssignmentState::reassign(std::size_t i, std::uint32_t k) {
  if (k >= counts_.size()) throw IndexError("AssignmentState::reassign: mode out of range");
  auto& cur = modes_.at(i);
  --counts_[cur];
  cur = k;
  ++counts_[k];
}

void AssignmentState::check() const {
  std::vector<std::size_t> recount(counts_.size(), 0);
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    if (modes_[i] >= counts_.size())
      throw InvariantError("assignment " + std::to_string(i) + " has mode out of range");
    ++recount[modes_[i]];
  }
  if (recount != counts_) throw InvariantError("assignment counts do not match mode array");
  const std::size_t total = std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
  if (total != modes_.size())
    throw InvariantError("sum of counts " + std::to_string(total) + " != N " +
                         std::to_string(modes_.size()));
}

// ---------------------------------------------------------------------------
// GaussianComponent / prior

GaussianComponent::GaussianComponent(std::vector<double> mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size())
    throw ShapeError("GaussianComponent: covariance shape does not match mean");
  if (!linalg::is_symmetric(covariance_))
    throw NumericError("GaussianComponent: covariance is not symmetric");
  chol_ = linalg::cholesky(covariance_);
  log_det_ = linalg::log_det_from_cholesky(chol_);
}

std::vector<double> GaussianComponent::precision_times(std::span<const double> v) const {
  return linalg::backward_solve_transposed(chol_, linalg::forward_solve(chol_, v));
}

GaussianPrior GaussianPrior::weakly_informative(std::size_t dim) {
  GaussianPrior p;
  p.mu0.assign(dim, 0.0);
  p.kappa0 = 0.01;
  p.nu0 = static_cast<double>(dim) + 2.0;
  p.psi = Matrix::identity(dim);
  return p;
}

void GaussianPrior::validate() const {
  const auto d = static_cast<double>(dim());
  if (!(kappa0 > 0.0)) throw ArgumentError("GaussianPrior: kappa0 must be positive");
  if (!(nu0 > d - 1.0)) throw ArgumentError("GaussianPrior: nu0 must exceed d - 1");
  if (psi.rows() != dim() || psi.cols() != dim())
    throw ShapeError("GaussianPrior: Psi shape does not match mu0");
  if (!linalg::is_symmetric(psi)) throw ArgumentError("GaussianPrior: Psi is not symmetric");
  linalg::cholesky(psi);
}

ModeWeights ModeWeights::uniform(std::size_t K) {
  std::vector<std::size_t> ones(K, 1);
  return mode_weights(ones);
}

// ---------------------------------------------------------------------------
// CRP

CrpPrior crp_prior_probs(std::span<const std::size_t> counts, double alpha, std::size_t i) {
  if (!(alpha > 0.0)) throw ArgumentError("crp_prior_probs: alpha must be positive");
  if (i < 1) throw ArgumentError("crp_prior_probs: draw index is 1-based");
  const std::size_t seen = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (seen != i - 1)
    throw ArgumentError("crp_prior_probs: counts sum to " + std::to_string(seen) +
                        ", expected i - 1 = " + std::to_string(i - 1));
  const double denom = static_cast<double>(i - 1) + alpha;
  CrpPrior p;
  p.existing.reserve(counts.size());
  for (auto n : counts) p.existing.push_back(static_cast<double>(n) / denom);
  p.new_table = alpha / denom;
  return p;
}

double crp_sequence_log_prior(std::span<const std::uint32_t> labels, double alpha) {
  if (!(alpha > 0.0)) throw ArgumentError("crp_sequence_log_prior: alpha must be positive");
  std::vector<std::size_t> counts;
  double lp = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto k = labels[i];
    if (k >= counts.size()) counts.resize(k + 1, 0);
    const double denom = static_cast<double>(i) + alpha;
    lp += std::log((counts[k] > 0 ? static_cast<double>(counts[k]) : alpha) / denom);
    ++counts[k];
  }
  return lp;
}

std::size_t crp_posterior_sample(std::span<const double> log_lik,
                                 std::span<const std::size_t> counts, Rng& rng) {
  if (log_lik.size() != counts.size())
    throw ShapeError("crp_posterior_sample: likelihood row and counts differ in length");
  const std::size_t K = counts.size();
  if (K == 0) throw ShapeError("crp_posterior_sample: no modes");

  // Shift by the best occupied log-likelihood so the largest weight is N_k.
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k)
    if (counts[k] > 0) shift = std::max(shift, log_lik[k]);

  std::vector<double> w(K, 0.0);
  double total = 0.0;
  if (std::isfinite(shift)) {
    for (std::size_t k = 0; k < K; ++k) {
      if (counts[k] == 0) continue;
      w[k] = static_cast<double>(counts[k]) * std::exp(log_lik[k] - shift);
      total += w[k];
    }
  }
  if (total > 0.0) return rng.categorical(w);

  bool any_occupied = false;
  for (std::size_t k = 0; k < K; ++k) {
    w[k] = counts[k] > 0 ? 1.0 : 0.0;
    any_occupied = any_occupied || counts[k] > 0;
  }
  if (any_occupied) {
    spdlog::debug("crp_posterior_sample: zero likelihood on every occupied mode, sampling uniformly");
    return rng.categorical(w);
  }
  // No occupied modes (single datum removed): sample from the likelihood.
  double best = -std::numeric_limits<double>::infinity();
  for (double v : log_lik) best = std::max(best, v);
  if (!std::isfinite(best)) return rng.index(K);
  for (std::size_t k = 0; k < K; ++k) w[k] = std::exp(log_lik[k] - best);
  return rng.categorical(w);
}

AssignmentState argmax_init_assign(const Matrix& log_lik) {
  AssignmentState s(log_lik.cols());
  for (std::size_t i = 0; i < log_lik.rows(); ++i) {
    auto row = log_lik.row(i);
    std::size_t best = 0;
    for (std::size_t k = 1; k < row.size(); ++k)
      if (row[k] > row[best]) best = k;
    s.push_back(static_cast<std::uint32_t>(best));
  }
  return s;
}

void gibbs_sweep(const Matrix& log_lik, AssignmentState& state, const CrpConfig& cfg, Rng& rng) {
  cfg.validate();
  if (log_lik.rows() != state.size() || log_lik.cols() != state.num_modes())
    throw ShapeError("gibbs_sweep: likelihood matrix does not match assignment state");
  state.check();
  const std::size_t N = state.size();
  auto& counts = state.counts_;
  auto& modes = state.modes_;
  for (std::size_t it = 0; it < cfg.iters; ++it) {
    for (std::size_t i = 0; i < N; ++i) {
      --counts[modes[i]];
      const auto k = static_cast<std::uint32_t>(crp_posterior_sample(log_lik.row(i), counts, rng));
      modes[i] = k;
      ++counts[k];
    }
  }
  state.check();
}

AssignmentState crp_sample(const Matrix& log_lik, const CrpConfig& cfg, Rng& rng) {
  AssignmentState s = argmax_init_assign(log_lik);
  gibbs_sweep(log_lik, s, cfg, rng);
  return s;
}

// ---------------------------------------------------------------------------
// Gaussians

double gaussian_logpdf(const GaussianComponent& comp, std::span<const double> e) {
  const std::size_t d = comp.dim();
  if (e.size() != d)
    throw ShapeError("gaussian_logpdf: point has dim " + std::to_string(e.size()) +
                     ", component has " + std::to_string(d));
  std::vector<double> r(d);
  for (std::size_t j = 0; j < d; ++j) r[j] = e[j] - comp.mean()[j];
  const auto y = linalg::forward_solve(comp.cholesky(), r);
  double maha = 0.0;
  for (double v : y) maha += v * v;
  return -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + comp.log_det() + maha);
}

NiwPosterior niw_posterior(const Matrix& group, const GaussianPrior& prior) {
  const std::size_t d = prior.dim();
  if (group.rows() > 0 && group.cols() != d)
    throw ShapeError("niw_posterior: group dim does not match prior");
  const std::size_t n = group.rows();
  NiwPosterior post;
  post.kappa = prior.kappa0 + static_cast<double>(n);
  post.nu = prior.nu0 + static_cast<double>(n);
  post.psi = prior.psi;
  post.mu = prior.mu0;
  if (n == 0) return post;

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += group(i, j);
  for (auto& v : mean) v /= static_cast<double>(n);

  // Centered scatter.
  Matrix scatter(d, d);
  std::vector<double> r(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) r[j] = group(i, j) - mean[j];
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b <= a; ++b) scatter(a, b) += r[a] * r[b];
  }
  const double shrink = prior.kappa0 * static_cast<double>(n) / post.kappa;
  for (std::size_t j = 0; j < d; ++j)
    post.mu[j] = (prior.kappa0 * prior.mu0[j] + static_cast<double>(n) * mean[j]) / post.kappa;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b <= a; ++b) {
      const double v = prior.psi(a, b) + scatter(a, b) +
                       shrink * (mean[a] - prior.mu0[a]) * (mean[b] - prior.mu0[b]);
      post.psi(a, b) = v;
      post.psi(b, a) = v;
    }
  return post;
}

namespace {

Matrix add_jitter(Matrix m, double jitter) {
  for (std::size_t j = 0; j < m.rows(); ++j) m(j, j) += jitter;
  return m;
}

// Sigma ~ IW(psi, nu) by the Bartlett construction: with psi = U U^T and
// A lower-triangular Bartlett factor, Sigma = (U A^{-T})(U A^{-T})^T.
Matrix sample_inverse_wishart(const Matrix& psi, double nu, Rng& rng) {
  const std::size_t d = psi.rows();
  const Matrix u = linalg::cholesky(psi);
  Matrix a(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(rng.chi_squared(nu - static_cast<double>(i)));
    for (std::size_t j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  // Columns of A^{-T}: solve A^T x = e_j.
  Matrix a_inv_t(d, d);
  std::vector<double> ej(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    std::fill(ej.begin(), ej.end(), 0.0);
    ej[j] = 1.0;
    const auto col = linalg::backward_solve_transposed(a, ej);
    for (std::size_t i = 0; i < d; ++i) a_inv_t(i, j) = col[i];
  }
  Matrix b(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < d; ++p) s += u(i, p) * a_inv_t(p, j);
      b(i, j) = s;
    }
  Matrix sigma(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < d; ++p) s += b(i, p) * b(j, p);
      sigma(i, j) = s;
      sigma(j, i) = s;
    }
  return sigma;
}

}  // namespace

std::vector<GaussianComponent> update_components(const std::vector<Matrix>& groups,
                                                 const GaussianPrior& prior, ComponentUpdate how,
                                                 Rng* rng, double jitter) {
  prior.validate();
  if (how == ComponentUpdate::posterior_sample && rng == nullptr)
    throw ArgumentError("update_components: sampling requires an rng");
  const std::size_t d = prior.dim();
  std::vector<GaussianComponent> out;
  out.reserve(groups.size());
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const NiwPosterior post = niw_posterior(groups[k], prior);
    std::vector<double> mean;
    Matrix cov;
    if (how == ComponentUpdate::posterior_mode) {
      mean = post.mu;
      cov = post.psi;
      const double denom = post.nu + static_cast<double>(d) + 1.0;
      for (auto& v : cov.data()) v /= denom;
    } else {
      cov = sample_inverse_wishart(post.psi, post.nu, *rng);
      Matrix scaled = cov;
      for (auto& v : scaled.data()) v /= post.kappa;
      const Matrix l = linalg::cholesky(add_jitter(scaled, jitter));
      mean = post.mu;
      std::vector<double> xi(d);
      for (auto& v : xi) v = rng->normal();
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) mean[i] += l(i, j) * xi[j];
    }
    try {
      out.emplace_back(std::move(mean), add_jitter(linalg::symmetrized(cov), jitter));
    } catch (const NumericError& e) {
      throw NumericError("update_components: mode " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

std::vector<GaussianComponent> init_components(std::size_t K, std::size_t dim, double cov_scale) {
  if (!(cov_scale > 0.0)) throw ArgumentError("init_components: cov_scale must be positive");
  if (K < 1) throw ArgumentError("init_components: K must be >= 1");
  if (dim == 0 || (dim + 1 < K))
    throw ArgumentError("init_components: need dim >= K - 1 for equidistant means (K=" +
                        std::to_string(K) + ", dim=" + std::to_string(dim) + ")");
  std::vector<std::vector<double>> means(K, std::vector<double>(dim, 0.0));
  if (dim >= K) {
    for (std::size_t k = 0; k < K; ++k) means[k][k] = 1.0;
  } else {
    // dim == K - 1: center the one-hot simplex and express it in an
    // orthonormal basis of the sum-zero hyperplane (Helmert basis).
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t j = 0; j < dim; ++j) {
        // Basis vector j: (1,...,1,-(j+1),0,...)/sqrt((j+1)(j+2)) over j+2 entries.
        const double norm = std::sqrt(static_cast<double>((j + 1) * (j + 2)));
        double coord = 0.0;
        if (k <= j) coord = 1.0 / norm;
        else if (k == j + 1) coord = -static_cast<double>(j + 1) / norm;
        means[k][j] = coord;
      }
  }
  std::vector<GaussianComponent> out;
  out.reserve(K);
  Matrix cov = Matrix::identity(dim);
  for (auto& v : cov.data()) v *= cov_scale;
  for (auto& m : means) out.emplace_back(std::move(m), cov);
  return out;
}

// ---------------------------------------------------------------------------
// Weights

ModeWeights mode_weights(std::span<const std::size_t> counts) {
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw ArgumentError("mode_weights: all counts are zero");
  ModeWeights w;
  w.alpha.reserve(counts.size());
  for (auto n : counts) w.alpha.push_back(static_cast<double>(n) / static_cast<double>(total));
  w.order.resize(counts.size());
  std::iota(w.order.begin(), w.order.end(), std::size_t{0});
  std::stable_sort(w.order.begin(), w.order.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  w.beta.reserve(counts.size());
  for (auto k : w.order) w.beta.push_back(w.alpha[k]);
  return w;
}

std::size_t effective_modes(std::span<const std::size_t> counts, double threshold_fraction) {
  if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
    throw ArgumentError("effective_modes: threshold must be in (0,1)");
  const std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) return 0;
  std::size_t n = 0;
  for (auto c : counts)
    if (static_cast<double>(c) / static_cast<double>(total) >= threshold_fraction) ++n;
  return n;
}

std::vector<Matrix> group_by_mode(const Matrix& embeddings, const AssignmentState& state) {
  if (embeddings.rows() != state.size())
    throw ShapeError("group_by_mode: embedding count does not match assignments");
  const std::size_t d = embeddings.cols();
  std::vector<Matrix> groups;
  groups.reserve(state.num_modes());
  for (std::size_t k = 0; k < state.num_modes(); ++k) groups.emplace_back(state.counts()[k], d);
  std::vector<std::size_t> fill(state.num_modes(), 0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto k = state.mode(i);
    auto dst = groups[k].row(fill[k]++);
    auto src = embeddings.row(i);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return groups;
}

void write_assignments_csv(std::ostream& os, const AssignmentState& state, const Matrix& log_lik) {
  if (log_lik.rows() != state.size())
    throw ShapeError("write_assignments_csv: likelihood rows do not match assignments");
  os << "index,assigned_mode,max_loglik\n";
  char buf[64];
  for (std::size_t i = 0; i < state.size(); ++i) {
    auto row = log_lik.row(i);
    const double mx = *std::max_element(row.begin(), row.end());
    std::snprintf(buf, sizeof buf, "%.17g", mx);
    os << i << ',' << state.mode(i) << ',' << buf << '\n';
  }
}

}  // namespace micgan::mixture
