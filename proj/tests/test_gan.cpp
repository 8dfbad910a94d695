#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "micgan/data.hpp"
#include "micgan/error.hpp"
#include "micgan/gan.hpp"
#include "micgan/metrics.hpp"
#include "support.hpp"

using namespace micgan;
using namespace testing_support;

namespace {

gan::NetworkShape small_shape(std::size_t noise = 4, std::size_t hidden = 8) {
  gan::NetworkShape s;
  s.data_dim = 2;
  s.noise_dim = noise;
  s.hidden = hidden;
  s.depth = 2;
  return s;
}

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

data::Dataset two_gaussians(Rng& rng, std::size_t per_mode = 500) {
  data::SyntheticSpec spec;
  spec.n_modes = 2;
  spec.counts = {per_mode};
  spec.sigma = {0.1};
  return data::generate(spec, rng);
}

Matrix rows_of(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), x.cols());
  for (std::size_t b = 0; b < idx.size(); ++b)
    for (std::size_t j = 0; j < x.cols(); ++j) out(b, j) = x(idx[b], j);
  return out;
}

}  // namespace

TEST(ModeLatents, SampleIsSeparatedAndDistinct) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto m = gan::ModeLatents::sample(12, 3, rng, 0.5);
    for (std::size_t a = 0; a < m.K(); ++a)
      for (std::size_t b = 0; b < a; ++b) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < 3; ++j) d2 += std::pow(m.code(a)[j] - m.code(b)[j], 2);
        EXPECT_GE(std::sqrt(d2), 0.5);
      }
  }
  Rng rng(1);
  EXPECT_THROW(gan::ModeLatents::sample(0, 3, rng), ShapeError);
  const auto m = gan::ModeLatents::sample(2, 3, rng);
  EXPECT_THROW(m.code(2), IndexError);
}

TEST(ModeLatents, JsonRoundTripIsExact) {
  Rng rng(2);
  const auto m = gan::ModeLatents::sample(5, 7, rng);
  EXPECT_EQ(gan::latents_from_json(gan::latents_to_json(m)), m);
  EXPECT_THROW(gan::latents_from_json("{not json"), FormatError);
  EXPECT_THROW(gan::latents_from_json(R"({"K":2,"d_C":1,"codes":[[1]]})"), FormatError);
}

TEST(Gan, GenerateAddsCodeToNoise) {
  Rng rng(3);
  const auto pair = gan::GanPair::create(small_shape(), {}, rng);
  const auto modes = gan::ModeLatents::sample(3, 4, rng);
  const std::vector<double> zero(4, 0.0);
  const Matrix c(1, 4, std::vector<double>(modes.code(1).begin(), modes.code(1).end()));
  EXPECT_EQ(gan::generate(pair, modes, zero, 1), nn::predict(pair.generator, c).data());
  const std::vector<double> z{0.1, -0.2, 0.3, 0.4};
  EXPECT_EQ(gan::generate(pair, modes, z, 2), gan::generate(pair, modes, z, 2));
  EXPECT_THROW(gan::generate(pair, modes, z, 3), IndexError);
  const std::vector<double> short_z{0.1, 0.2};
  EXPECT_THROW(gan::generate(pair, modes, short_z, 0), ShapeError);
}

TEST(Gan, IdentityGeneratorReturnsNoisePlusCode) {
  Rng rng(4);
  auto pair = gan::GanPair::create(small_shape(2), {}, rng);
  nn::DenseLayer id;
  id.weights = Matrix::identity(2);
  id.bias = {0.0, 0.0};
  pair.generator.layers = {id, id};
  const auto modes = gan::ModeLatents::sample(4, 2, rng);
  for (int rep = 0; rep < 10; ++rep) {
    const std::vector<double> z{rng.normal(), rng.normal()};
    const std::size_t k = rng.index(4);
    const auto x = gan::generate(pair, modes, z, k);
    EXPECT_DOUBLE_EQ(x[0], z[0] + modes.code(k)[0]);
    EXPECT_DOUBLE_EQ(x[1], z[1] + modes.code(k)[1]);
  }
}

TEST(Gan, DiscriminatorScoreRangeAndZeroWeights) {
  Rng rng(5);
  auto pair = gan::GanPair::create(small_shape(), {}, rng);
  const auto modes = gan::ModeLatents::sample(3, 4, rng);
  const std::vector<double> x{1e6, -1e6};
  const double p = gan::discriminate(pair, modes, x, std::nullopt);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);
  for (auto& l : pair.discriminator.layers) {
    l.weights.fill(0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  EXPECT_EQ(gan::discriminate(pair, modes, x, std::nullopt), 0.5);
  pair.conditioned = true;
  EXPECT_THROW(gan::discriminate(pair, modes, x, std::nullopt), ArgumentError);
  EXPECT_EQ(gan::discriminate(pair, modes, x, 1), 0.5);
}

TEST(Gan, ConditioningFlipKeepsScores) {
  Rng rng(6);
  auto pair = gan::GanPair::create(small_shape(), {}, rng);
  const auto modes = gan::ModeLatents::sample(3, 4, rng);
  const std::vector<double> x{0.3, -0.7};
  const double before = gan::discriminate(pair, modes, x, std::nullopt);
  pair.conditioned = true;
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(gan::discriminate(pair, modes, x, k), before);
}

TEST(Gan, LossValues) {
  const std::vector<double> half{0.5, 0.5, 0.5};
  EXPECT_NEAR(gan::d_loss(half, half), 2.0 * std::log(2.0), 1e-15);
  const std::vector<double> one{1.0};
  EXPECT_NEAR(gan::g_loss(one), 0.0, 1e-6);
  const std::vector<double> zero{0.0};
  EXPECT_TRUE(std::isfinite(gan::g_loss(zero)));
  EXPECT_NEAR(gan::g_loss(zero), -std::log(gan::kScoreClamp), 1e-9);
  EXPECT_THROW(gan::d_loss({}, half), ArgumentError);

  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> r(7), f(5);
    for (auto& v : r) v = rng.uniform(0.01, 0.99);
    for (auto& v : f) v = rng.uniform(0.01, 0.99);
    double lr = 0.0, lf = 0.0, lg = 0.0;
    for (double v : r) lr -= std::log(v);
    for (double v : f) {
      lf -= std::log(1.0 - v);
      lg -= std::log(v);
    }
    EXPECT_NEAR(gan::d_loss(r, f), lr / 7.0 + lf / 5.0, 1e-12);
    EXPECT_NEAR(gan::g_loss(f), lg / 5.0, 1e-12);
  }
}

TEST(Gan, PassGradientsMatchFiniteDifferences) {
  Rng rng(8);
  for (int rep = 0; rep < 6; ++rep) {
    const bool conditioned = rep % 2 == 1;
    auto pair = gan::GanPair::create(small_shape(3, 6), {}, rng);
    for (auto& l : pair.discriminator.layers)
      for (auto& v : l.weights.data()) v += 0.1 * rng.normal();
    pair.conditioned = conditioned;
    const auto modes = gan::ModeLatents::sample(3, 3, rng);
    gan::Batch batch;
    batch.real = random_matrix(5, 2, rng);
    batch.z = gan::sample_noise(4, 3, rng);
    batch.fake_modes = {0, 1, 2, 1};
    if (conditioned) batch.real_modes = {2, 0, 1, 1, 0};

    auto g = gan::generator_pass(pair, modes, batch);
    auto gnum = numeric_gradient(pair.generator,
                                 [&] { return gan::generator_pass(pair, modes, batch).loss; });
    EXPECT_LT(relative_error(flatten(g.grads), gnum), 1e-6);

    auto d = gan::discriminator_pass(pair, modes, batch);
    auto dnum = numeric_gradient(pair.discriminator,
                                 [&] { return gan::discriminator_pass(pair, modes, batch).loss; });
    EXPECT_LT(relative_error(flatten(d.grads), dnum), 1e-6);
  }
}

TEST(Gan, StepPreconditions) {
  Rng rng(9);
  auto pair = gan::GanPair::create(small_shape(), {}, rng);
  const auto modes = gan::ModeLatents::sample(2, 4, rng);
  const Matrix real = random_matrix(4, 2, rng);
  const std::vector<double> uniform{0.5, 0.5};
  const std::vector<std::uint32_t> rm{0, 1, 0, 1};
  EXPECT_THROW(gan::acrp_gan_step(pair, modes, real, rm, uniform, rng), ArgumentError);
  gan::init_stage_step(pair, modes, real, uniform, rng);
  pair.conditioned = true;
  EXPECT_THROW(gan::init_stage_step(pair, modes, real, uniform, rng), ArgumentError);
  const std::vector<double> unnormalized{0.5, 0.6};
  EXPECT_THROW(gan::acrp_gan_step(pair, modes, real, rm, unnormalized, rng), ArgumentError);
  const std::vector<std::uint32_t> short_modes{0};
  EXPECT_THROW(gan::acrp_gan_step(pair, modes, real, short_modes, uniform, rng), ArgumentError);
  gan::acrp_gan_step(pair, modes, real, rm, uniform, rng);
}

TEST(Gan, OneHotAlphaOnlyUsesThatCode) {
  Rng rng(10);
  auto pair = gan::GanPair::create(small_shape(), {}, rng);
  auto modes = gan::ModeLatents::sample(3, 4, rng);
  // Poison every other code: touching one would fail the finiteness checks.
  for (std::size_t k : {0u, 2u})
    for (auto& v : modes.codes.row(k)) v = std::numeric_limits<double>::quiet_NaN();
  pair.conditioned = true;
  const Matrix real = random_matrix(16, 2, rng);
  const std::vector<std::uint32_t> rm(16, 1);
  const std::vector<double> alpha{0.0, 1.0, 0.0};
  for (int s = 0; s < 5; ++s) EXPECT_NO_THROW(gan::acrp_gan_step(pair, modes, real, rm, alpha, rng));
}

TEST(Gan, ModeDrawsFollowCategorical) {
  Rng rng(11);
  const std::vector<double> alpha{0.5, 0.3, 0.15, 0.05};
  const std::size_t n = 10000;
  const auto ks = gan::sample_modes(n, alpha, rng);
  std::vector<double> counts(4, 0.0);
  for (auto k : ks) counts[k] += 1.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double sd = std::sqrt(n * alpha[k] * (1 - alpha[k]));
    EXPECT_LE(std::abs(counts[k] - n * alpha[k]), 3.0 * sd) << "mode " << k;
  }
}

TEST(Gan, InitStageUsesModesUniformly) {
  // Same draw order as init_stage_step: noise first, then modes.
  Rng rng(12);
  const std::size_t K = 5, steps = 10000;
  const std::vector<double> uniform(K, 1.0 / K);
  std::vector<double> counts(K, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    gan::sample_noise(1, 2, rng);
    counts[gan::sample_modes(1, uniform, rng)[0]] += 1.0;
  }
  const double p = 1.0 / K, sd = std::sqrt(steps * p * (1 - p));
  for (double c : counts) EXPECT_LE(std::abs(c - steps * p), 3.0 * sd);
}

TEST(Gan, InterpolationEndpointsAndContinuity) {
  Rng rng(13);
  const auto pair = gan::GanPair::create(small_shape(), {}, rng);
  const auto modes = gan::ModeLatents::sample(3, 4, rng);
  const std::vector<double> z{0.2, -0.1, 0.5, 1.0};
  EXPECT_EQ(gan::interpolate_modes(pair, modes, z, 0, 2, 0.0), gan::generate(pair, modes, z, 0));
  EXPECT_EQ(gan::interpolate_modes(pair, modes, z, 0, 2, 1.0), gan::generate(pair, modes, z, 2));
  EXPECT_THROW(gan::interpolate_modes(pair, modes, z, 0, 2, 1.5), ArgumentError);
  EXPECT_THROW(gan::interpolate_modes(pair, modes, z, 0, 3, 0.5), IndexError);

  // Leaky-ReLU MLPs are Lipschitz with constant <= product of weight norms.
  double lip = 1.0;
  for (const auto& l : pair.generator.layers) lip *= frobenius(l.weights);
  double code_dist = 0.0;
  for (std::size_t j = 0; j < 4; ++j) code_dist += std::pow(modes.code(0)[j] - modes.code(2)[j], 2);
  code_dist = std::sqrt(code_dist);
  std::vector<double> prev = gan::interpolate_modes(pair, modes, z, 0, 2, 0.0);
  for (int s = 1; s <= 10; ++s) {
    const auto cur = gan::interpolate_modes(pair, modes, z, 0, 2, s / 10.0);
    const double step = std::hypot(cur[0] - prev[0], cur[1] - prev[1]);
    EXPECT_LE(step, lip * code_dist / 10.0 + 1e-12);
    prev = cur;
  }
}

TEST(Gan, SingleCodeFoldsIntoGeneratorBias) {
  Rng rng(14);
  const auto pair = gan::GanPair::create(small_shape(), {}, rng);
  const auto modes = gan::ModeLatents::sample(1, 4, rng);
  auto folded = pair.generator;
  auto& first = folded.layers.front();
  for (std::size_t r = 0; r < first.out_dim(); ++r)
    for (std::size_t c = 0; c < first.in_dim(); ++c) first.bias[r] += first.weights(r, c) * modes.code(0)[c];
  const Matrix z = gan::sample_noise(8, 4, rng);
  const std::vector<std::uint32_t> ks(8, 0);
  const Matrix a = gan::generate_batch(pair, modes, z, ks);
  const Matrix b = nn::predict(folded, z);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.data()[i], b.data()[i], 1e-12);
}

TEST(Gan, InitCoversBothModesAndConditioningSeparatesThem) {
  Rng rng(15);
  const auto ds = two_gaussians(rng);
  auto shape = small_shape(8, 32);
  auto pair = gan::GanPair::create(shape, {1e-3, 0.5, 0.999, 1e-8}, rng);
  const auto modes = gan::ModeLatents::sample(2, 8, rng);
  const std::vector<double> uniform{0.5, 0.5};
  std::vector<std::size_t> idx(64);
  for (int s = 0; s < 1500; ++s) {
    for (auto& i : idx) i = rng.index(ds.size());
    gan::init_stage_step(pair, modes, rows_of(ds.samples, idx), uniform, rng);
  }
  const auto stats = data::label_statistics(ds);
  const Matrix z = gan::sample_noise(1000, 8, rng);
  const auto ks = gan::sample_modes(1000, uniform, rng);
  const auto cov = metrics::mode_coverage(gan::generate_batch(pair, modes, z, ks), stats.centers,
                                          std::vector<double>{0.1, 0.1}, 50);
  EXPECT_EQ(cov.modes_hit, 2u);

  pair.conditioned = true;
  std::vector<std::uint32_t> rm(64);
  for (int s = 0; s < 600; ++s) {
    for (std::size_t b = 0; b < 64; ++b) {
      idx[b] = rng.index(ds.size());
      rm[b] = static_cast<std::uint32_t>((*ds.labels)[idx[b]]);
    }
    gan::acrp_gan_step(pair, modes, rows_of(ds.samples, idx), rm, uniform, rng);
  }
  for (std::size_t m = 0; m < 2; ++m) {
    const auto& c = stats.centers[m];
    EXPECT_GT(gan::discriminate(pair, modes, c, m), gan::discriminate(pair, modes, c, 1 - m));
  }
}
