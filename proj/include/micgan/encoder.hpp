#pragma once

#include <ostream>
#include <span>
#include <vector>

#include "micgan/gan.hpp"
#include "micgan/matrix.hpp"
#include "micgan/mixture.hpp"
#include "micgan/nn.hpp"
#include "micgan/rng.hpp"

// Surrogate density classifier: an embedding network whose outputs are
// scored against the per-mode Gaussians. There is no softmax head; class
// evidence comes only from the Gaussian densities.
namespace micgan::encoder {

struct EncoderShape {
  std::size_t data_dim = 2;
  std::size_t embed_dim = 20;
  std::size_t hidden = 64;
  std::size_t depth = 3;
  double slope = 0.2;
};

struct EncoderNet {
  nn::Mlp net;  // data_dim -> embed_dim, linear output

  std::size_t embed_dim() const { return net.out_dim(); }
  static EncoderNet create(const EncoderShape& shape, Rng& rng);

  friend bool operator==(const EncoderNet&, const EncoderNet&) = default;
};

std::vector<double> embed(const EncoderNet& enc, std::span<const double> x);
Matrix embed_all(const EncoderNet& enc, const Matrix& samples);

// Negative Gaussian log-likelihood of e under `comp`.
double q_loss(std::span<const double> e, const mixture::GaussianComponent& comp);

struct LikelihoodMatrix {
  Matrix log_lik;               // N x K, log p_{i,k}
  std::vector<double> row_max;  // max_k log p_{i,k}
  Matrix embeddings;            // N x d_e
};

// Rows are independent, so they are evaluated in parallel.
LikelihoodMatrix likelihoods_from_embeddings(Matrix embeddings,
                                             const std::vector<mixture::GaussianComponent>& comps);

LikelihoodMatrix likelihoods(const EncoderNet& enc, const Matrix& samples,
                             const std::vector<mixture::GaussianComponent>& comps);

struct QLossAndGrads {
  double loss = 0.0;  // mean q_loss over the batch
  nn::ParamGrads grads;
};

// Mean q_loss of embed(x_b) under comps[ks[b]] and its parameter gradients.
QLossAndGrads q_loss_and_grads(const EncoderNet& enc, const Matrix& x,
                               std::span<const std::uint32_t> ks,
                               const std::vector<mixture::GaussianComponent>& comps);

struct QTraining {
  std::size_t samples = 16000;  // N_Q
  std::size_t batch = 256;
  nn::AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
};

// Re-initializes `enc` from `rng`, then trains it on generated samples
// labelled by the mode that produced them (modes drawn from `alpha`).
// The generator is only read. Returns the mean loss over the epoch.
double train_q_epoch(EncoderNet& enc, const EncoderShape& shape, const gan::GanPair& pair,
                     const gan::ModeLatents& modes,
                     const std::vector<mixture::GaussianComponent>& comps,
                     std::span<const double> alpha, const QTraining& cfg, Rng& rng);

// CSV: index,e_1..e_d,assigned_mode
void write_embeddings_csv(std::ostream& os, const Matrix& embeddings,
                          const mixture::AssignmentState& state);

}  // namespace micgan::encoder
