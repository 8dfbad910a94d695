#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "micgan/encoder.hpp"
#include "micgan/error.hpp"
#include "support.hpp"

using namespace micgan;
using namespace micgan::encoder;
using testing_support::random_matrix;
using testing_support::random_spd;

namespace {

std::vector<mixture::GaussianComponent> random_components(std::size_t K, std::size_t d, Rng& rng) {
  std::vector<mixture::GaussianComponent> out;
  for (std::size_t k = 0; k < K; ++k) {
    const Matrix mu = random_matrix(1, d, rng);
    out.emplace_back(mu.data(), random_spd(d, rng, 0.5));
  }
  return out;
}

EncoderShape shape_of(std::size_t data_dim, std::size_t embed_dim, std::size_t hidden,
                      std::size_t depth) {
  EncoderShape s;
  s.data_dim = data_dim;
  s.embed_dim = embed_dim;
  s.hidden = hidden;
  s.depth = depth;
  return s;
}

// Gauss-Jordan inverse with partial pivoting.
Matrix inverse(Matrix a) {
  const std::size_t d = a.rows();
  Matrix inv(d, d);
  for (std::size_t i = 0; i < d; ++i) inv(i, i) = 1.0;
  for (std::size_t c = 0; c < d; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < d; ++r)
      if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
    for (std::size_t j = 0; j < d; ++j) {
      std::swap(a(c, j), a(piv, j));
      std::swap(inv(c, j), inv(piv, j));
    }
    const double p = a(c, c);
    for (std::size_t j = 0; j < d; ++j) {
      a(c, j) /= p;
      inv(c, j) /= p;
    }
    for (std::size_t r = 0; r < d; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      for (std::size_t j = 0; j < d; ++j) {
        a(r, j) -= f * a(c, j);
        inv(r, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

// Direct multivariate normal density via an explicit inverse.
double neg_log_density(std::span<const double> e, const mixture::GaussianComponent& c) {
  const std::size_t d = e.size();
  const Matrix inv = inverse(c.covariance());
  double quad = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      quad += (e[i] - c.mean()[i]) * inv(i, j) * (e[j] - c.mean()[j]);
  return 0.5 * (quad + c.log_det() + static_cast<double>(d) * std::log(2 * std::numbers::pi));
}

}  // namespace

TEST(Encoder, QLossMatchesDirectDensity) {
  Rng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t d = 1 + rng.index(6);
    const auto comps = random_components(1, d, rng);
    const Matrix e = random_matrix(1, d, rng);
    EXPECT_NEAR(q_loss(e.row(0), comps[0]), neg_log_density(e.row(0), comps[0]), 1e-10);
  }
}

TEST(Encoder, GradientsMatchFiniteDifferences) {
  Rng rng(2);
  for (int rep = 0; rep < 12; ++rep) {
    const std::size_t d = 1 + rng.index(3), de = 1 + rng.index(4), K = 1 + rng.index(4);
    const std::size_t B = 1 + rng.index(6);
    auto enc = EncoderNet::create(shape_of(d, de, 2 + rng.index(6), 1 + rng.index(2)), rng);
    const auto comps = random_components(K, de, rng);
    const Matrix x = random_matrix(B, d, rng);
    std::vector<std::uint32_t> ks(B);
    for (auto& k : ks) k = static_cast<std::uint32_t>(rng.index(K));
    const auto analytic = testing_support::flatten(q_loss_and_grads(enc, x, ks, comps).grads);
    const auto numeric = testing_support::numeric_gradient(
        enc.net, [&] { return q_loss_and_grads(enc, x, ks, comps).loss; });
    EXPECT_LT(testing_support::relative_error(analytic, numeric), 1e-6) << "rep " << rep;
  }
}

TEST(Encoder, LossAndGradsMeanAndErrors) {
  Rng rng(3);
  const auto enc = EncoderNet::create(shape_of(2, 3, 8, 2), rng);
  const auto comps = random_components(2, 3, rng);
  const Matrix x = random_matrix(4, 2, rng);
  const std::vector<std::uint32_t> ks{0, 1, 1, 0};
  double mean = 0.0;
  for (std::size_t b = 0; b < 4; ++b) mean += q_loss(embed(enc, x.row(b)), comps[ks[b]]) / 4;
  EXPECT_NEAR(q_loss_and_grads(enc, x, ks, comps).loss, mean, 1e-12);

  const std::vector<std::uint32_t> short_ks{0};
  const std::vector<std::uint32_t> bad_k{0, 1, 2, 0};
  EXPECT_THROW(q_loss_and_grads(enc, x, short_ks, comps), ShapeError);
  EXPECT_THROW(q_loss_and_grads(enc, x, bad_k, comps), IndexError);
  EXPECT_THROW(q_loss_and_grads(enc, x, ks, random_components(2, 2, rng)), ShapeError);
  EXPECT_THROW(q_loss_and_grads(enc, Matrix(0, 2), {}, comps), ArgumentError);
}

TEST(Encoder, LikelihoodMatrixShapesAndRowMax) {
  Rng rng(4);
  const auto enc = EncoderNet::create(shape_of(2, 3, 8, 2), rng);
  const auto comps = random_components(5, 3, rng);
  const Matrix x = random_matrix(300, 2, rng);
  const auto lik = likelihoods(enc, x, comps);
  ASSERT_EQ(lik.log_lik.rows(), 300u);
  ASSERT_EQ(lik.log_lik.cols(), 5u);
  EXPECT_EQ(lik.embeddings, embed_all(enc, x));
  for (std::size_t i = 0; i < 300; ++i) {
    double mx = -1e300;
    for (std::size_t k = 0; k < 5; ++k) {
      EXPECT_EQ(lik.log_lik(i, k), -q_loss(lik.embeddings.row(i), comps[k]));
      mx = std::max(mx, lik.log_lik(i, k));
    }
    EXPECT_EQ(lik.row_max[i], mx);
  }
  EXPECT_THROW(likelihoods(enc, x, random_components(2, 4, rng)), ShapeError);
}

TEST(Encoder, TrainEpochReinitializesFromRng) {
  Rng rng(5);
  gan::NetworkShape ns;
  ns.noise_dim = 4;
  ns.hidden = 8;
  ns.depth = 1;
  const auto pair = gan::GanPair::create(ns, {}, rng);
  const auto modes = gan::ModeLatents::sample(3, 4, rng);
  const auto comps = mixture::init_components(3, 3, 1.0);
  const std::vector<double> alpha{0.5, 0.3, 0.2};
  const auto shape = shape_of(2, 3, 8, 2);
  QTraining cfg;
  cfg.samples = 512;
  cfg.batch = 64;

  // Starting encoders differ; the result depends only on the rng state.
  Rng other(99);
  EncoderNet a = EncoderNet::create(shape, other);
  EncoderNet b = EncoderNet::create(shape_of(2, 3, 8, 2), other);
  Rng ra(7), rb(7);
  const double la = train_q_epoch(a, shape, pair, modes, comps, alpha, cfg, ra);
  const double lb = train_q_epoch(b, shape, pair, modes, comps, alpha, cfg, rb);
  EXPECT_EQ(a, b);
  EXPECT_EQ(la, lb);
  EXPECT_TRUE(std::isfinite(la));

  // Training reduces the loss relative to a fresh network on the same stream.
  Rng fresh_rng(7);
  const auto fresh = EncoderNet::create(shape, fresh_rng);
  Rng draw(11);
  const Matrix z = gan::sample_noise(2000, 4, draw);
  const auto ks = gan::sample_modes(2000, alpha, draw);
  const Matrix fake = gan::generate_batch(pair, modes, z, ks);
  EXPECT_LT(q_loss_and_grads(a, fake, ks, comps).loss, q_loss_and_grads(fresh, fake, ks, comps).loss);

  EXPECT_THROW(train_q_epoch(a, shape, pair, modes, mixture::init_components(2, 3), alpha, cfg, ra),
               ShapeError);
  QTraining zero = cfg;
  zero.batch = 0;
  EXPECT_THROW(train_q_epoch(a, shape, pair, modes, comps, alpha, zero, ra), ArgumentError);
}

TEST(Encoder, EmbeddingsCsv) {
  const Matrix e(2, 2, {0.5, -1.0, 0.25, 3.0});
  const mixture::AssignmentState s({1, 0}, 2);
  std::ostringstream os;
  write_embeddings_csv(os, e, s);
  EXPECT_EQ(os.str(), "index,e_1,e_2,assigned_mode\n0,0.5,-1,1\n1,0.25,3,0\n");
  const mixture::AssignmentState wrong({1}, 2);
  std::ostringstream o2;
  EXPECT_THROW(write_embeddings_csv(o2, e, wrong), ShapeError);
}
