#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "micgan/matrix.hpp"
#include "micgan/nn.hpp"
#include "micgan/rng.hpp"

// Conditional generator/discriminator pair sharing one set of weights
// across all modes. Mode k selects the mapping through a fixed latent code
// C_k: added to the noise on the generator side, concatenated to the sample
// on the discriminator side.
namespace micgan::gan {

// K fixed codes of dimension d_C, one per mode. Never trained.
struct ModeLatents {
  Matrix codes;  // K x d_C

  std::size_t K() const noexcept { return codes.rows(); }
  std::size_t dim() const noexcept { return codes.cols(); }
  std::span<const double> code(std::size_t k) const;

  // i.i.d. standard-normal codes; any code closer than `min_separation` to an
  // earlier one is redrawn.
  static ModeLatents sample(std::size_t K, std::size_t dim, Rng& rng, double min_separation = 0.5);

  friend bool operator==(const ModeLatents&, const ModeLatents&) = default;
};

std::string latents_to_json(const ModeLatents& modes);
ModeLatents latents_from_json(const std::string& text);

struct NetworkShape {
  std::size_t data_dim = 2;
  std::size_t noise_dim = 32;  // equals the code dimension (additive conditioning)
  std::size_t hidden = 64;
  std::size_t depth = 3;
  double slope = 0.2;
};

struct GanPair {
  nn::Mlp generator;      // noise_dim -> data_dim
  nn::Mlp discriminator;  // data_dim + noise_dim -> 1 logit
  nn::AdamState g_opt;
  nn::AdamState d_opt;
  bool conditioned = false;

  std::size_t data_dim() const { return generator.out_dim(); }
  std::size_t noise_dim() const { return generator.in_dim(); }

  // The discriminator's condition columns start at zero, so flipping
  // `conditioned` leaves the function it computes unchanged at that moment.
  static GanPair create(const NetworkShape& shape, nn::AdamConfig adam, Rng& rng);
};

// rows x dim standard-normal noise.
Matrix sample_noise(std::size_t rows, std::size_t dim, Rng& rng);
// n i.i.d. draws from Categ(alpha).
std::vector<std::uint32_t> sample_modes(std::size_t n, std::span<const double> alpha, Rng& rng);

// Rows z_b + C_{k_b}.
Matrix generator_input(const ModeLatents& modes, const Matrix& z, std::span<const std::uint32_t> ks);

// Rows [x_b, C_{k_b}], or [x_b, 0] when `ks` is empty.
Matrix discriminator_input(const ModeLatents& modes, const Matrix& x,
                           std::span<const std::uint32_t> ks);

std::vector<double> generate(const GanPair& pair, const ModeLatents& modes,
                             std::span<const double> z, std::size_t k);

Matrix generate_batch(const GanPair& pair, const ModeLatents& modes, const Matrix& z,
                      std::span<const std::uint32_t> ks);

// Generator output on z + ((1 - t) C_a + t C_b).
std::vector<double> interpolate_modes(const GanPair& pair, const ModeLatents& modes,
                                      std::span<const double> z, std::size_t k_a,
                                      std::size_t k_b, double t);

// Sigmoid of the discriminator logit, strictly inside (0, 1). `k` is
// required when the pair is conditioned and ignored otherwise.
double discriminate(const GanPair& pair, const ModeLatents& modes, std::span<const double> x,
                    std::optional<std::size_t> k);

constexpr double kScoreClamp = 1e-7;

// -mean(log real) - mean(log(1 - fake)), scores clamped to [eps, 1 - eps].
double d_loss(std::span<const double> real_scores, std::span<const double> fake_scores);
// Non-saturating: -mean(log fake).
double g_loss(std::span<const double> fake_scores);

// One adversarial minibatch. `real_modes` is empty for an unconditioned
// discriminator.
struct Batch {
  Matrix real;
  std::vector<std::uint32_t> real_modes;
  Matrix z;
  std::vector<std::uint32_t> fake_modes;
};

struct LossAndGrads {
  double loss = 0.0;
  nn::ParamGrads grads;
};

LossAndGrads discriminator_pass(const GanPair& pair, const ModeLatents& modes, const Batch& batch);
LossAndGrads generator_pass(const GanPair& pair, const ModeLatents& modes, const Batch& batch);

struct StepLosses {
  double d_loss = 0.0;
  double g_loss = 0.0;
};

// One discriminator update then one generator update on the same batch.
StepLosses train_step(GanPair& pair, const ModeLatents& modes, const Batch& batch);

// Initialization-stage step: unconditioned discriminator, fake modes drawn
// from `alpha` (uniform in practice).
StepLosses init_stage_step(GanPair& pair, const ModeLatents& modes, const Matrix& real,
                           std::span<const double> alpha, Rng& rng);

// ACRP-stage step: real samples carry their assigned modes, fake modes are
// drawn from Categ(alpha). `alpha` must sum to 1.
StepLosses acrp_gan_step(GanPair& pair, const ModeLatents& modes, const Matrix& real,
                         std::span<const std::uint32_t> real_modes, std::span<const double> alpha,
                         Rng& rng);

}  // namespace micgan::gan
