#include "micgan/gan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace micgan::gan {

namespace {

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

double clamp_score(double p) { return std::clamp(p, kScoreClamp, 1.0 - kScoreClamp); }

void check_mode(const ModeLatents& modes, std::size_t k) {
  if (k >= modes.K())
    throw IndexError("mode index " + std::to_string(k) + " >= K=" + std::to_string(modes.K()));
}

void check_alpha(std::span<const double> alpha, std::size_t K) {
  if (alpha.size() != K) throw ArgumentError("mode weights length does not match K");
  double s = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0)) throw ArgumentError("mode weights must be nonnegative");
    s += a;
  }
  if (std::abs(s - 1.0) > 1e-9) throw ArgumentError("mode weights are not normalized");
}

Matrix stack(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("stack: column mismatch");
  Matrix out(a.rows() + b.rows(), a.cols());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(),
            out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

// d/ds of -log(clamp(sigmoid(s))) and -log(1 - clamp(sigmoid(s))).
double grad_neg_log_p(double p) { return (p < kScoreClamp || p > 1.0 - kScoreClamp) ? 0.0 : p - 1.0; }
double grad_neg_log_1mp(double p) { return (p < kScoreClamp || p > 1.0 - kScoreClamp) ? 0.0 : p; }

}  // namespace

Matrix sample_noise(std::size_t rows, std::size_t dim, Rng& rng) {
  Matrix z(rows, dim);
  for (auto& v : z.data()) v = rng.normal();
  return z;
}

std::vector<std::uint32_t> sample_modes(std::size_t n, std::span<const double> alpha, Rng& rng) {
  std::vector<std::uint32_t> ks(n);
  for (auto& k : ks) k = static_cast<std::uint32_t>(rng.categorical(alpha));
  return ks;
}

std::span<const double> ModeLatents::code(std::size_t k) const {
  check_mode(*this, k);
  return codes.row(k);
}

ModeLatents ModeLatents::sample(std::size_t K, std::size_t dim, Rng& rng, double min_separation) {
  if (K == 0 || dim == 0) throw ShapeError("ModeLatents::sample: zero dimension");
  ModeLatents m;
  m.codes = Matrix(K, dim);
  for (std::size_t k = 0; k < K; ++k) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 10000)
        throw ArgumentError("ModeLatents::sample: cannot reach the requested separation");
      auto row = m.codes.row(k);
      for (auto& v : row) v = rng.normal();
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) {
        double d2 = 0.0;
        auto other = m.codes.row(j);
        for (std::size_t c = 0; c < dim; ++c) d2 += (row[c] - other[c]) * (row[c] - other[c]);
        ok = std::sqrt(d2) >= min_separation;
      }
      if (ok) break;
    }
  }
  return m;
}

std::string latents_to_json(const ModeLatents& modes) {
  nlohmann::json j;
  j["K"] = modes.K();
  j["d_C"] = modes.dim();
  auto codes = nlohmann::json::array();
  for (std::size_t k = 0; k < modes.K(); ++k) {
    auto r = modes.codes.row(k);
    codes.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["codes"] = std::move(codes);
  return j.dump(2);
}

ModeLatents latents_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("mode latents JSON: ") + e.what());
  }
  const auto K = j.at("K").get<std::size_t>();
  const auto d = j.at("d_C").get<std::size_t>();
  const auto& codes = j.at("codes");
  if (codes.size() != K) throw FormatError("mode latents JSON: code count != K");
  ModeLatents m;
  m.codes = Matrix(K, d);
  for (std::size_t k = 0; k < K; ++k) {
    const auto row = codes[k].get<std::vector<double>>();
    if (row.size() != d) throw FormatError("mode latents JSON: code length != d_C");
    std::copy(row.begin(), row.end(), m.codes.row(k).begin());
  }
  return m;
}

GanPair GanPair::create(const NetworkShape& shape, nn::AdamConfig adam, Rng& rng) {
  if (shape.data_dim == 0 || shape.noise_dim == 0 || shape.hidden == 0)
    throw ShapeError("GanPair::create: zero dimension");
  GanPair p;
  std::vector<std::size_t> gdims{shape.noise_dim};
  std::vector<std::size_t> ddims{shape.data_dim + shape.noise_dim};
  for (std::size_t l = 0; l < shape.depth; ++l) {
    gdims.push_back(shape.hidden);
    ddims.push_back(shape.hidden);
  }
  gdims.push_back(shape.data_dim);
  ddims.push_back(1);
  p.generator = nn::make_mlp(gdims, nn::Activation::leaky_relu, nn::Activation::linear,
                             shape.slope, {}, rng);
  p.discriminator = nn::make_mlp(ddims, nn::Activation::leaky_relu, nn::Activation::linear,
                                 shape.slope, {}, rng);
  auto& w = p.discriminator.layers.front().weights;
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = shape.data_dim; c < w.cols(); ++c) w(r, c) = 0.0;
  p.g_opt = nn::AdamState::for_net(p.generator, adam);
  p.d_opt = nn::AdamState::for_net(p.discriminator, adam);
  return p;
}

Matrix generator_input(const ModeLatents& modes, const Matrix& z,
                       std::span<const std::uint32_t> ks) {
  if (z.cols() != modes.dim())
    throw ShapeError("generator_input: noise dim " + std::to_string(z.cols()) +
                     " != code dim " + std::to_string(modes.dim()));
  if (ks.size() != z.rows()) throw ShapeError("generator_input: one mode per noise row required");
  Matrix in = z;
  for (std::size_t b = 0; b < z.rows(); ++b) {
    auto c = modes.code(ks[b]);
    auto r = in.row(b);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += c[j];
  }
  return in;
}

Matrix discriminator_input(const ModeLatents& modes, const Matrix& x,
                           std::span<const std::uint32_t> ks) {
  if (!ks.empty() && ks.size() != x.rows())
    throw ShapeError("discriminator_input: one mode per sample required");
  const std::size_t d = x.cols(), c = modes.dim();
  Matrix in(x.rows(), d + c);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    auto src = x.row(b);
    auto dst = in.row(b);
    std::copy(src.begin(), src.end(), dst.begin());
    if (!ks.empty()) {
      auto code = modes.code(ks[b]);
      std::copy(code.begin(), code.end(), dst.begin() + static_cast<std::ptrdiff_t>(d));
    }
  }
  return in;
}

std::vector<double> generate(const GanPair& pair, const ModeLatents& modes,
                             std::span<const double> z, std::size_t k) {
  check_mode(modes, k);
  if (z.size() != pair.noise_dim()) throw ShapeError("generate: noise length mismatch");
  Matrix zm(1, z.size(), std::vector<double>(z.begin(), z.end()));
  const std::uint32_t kk = static_cast<std::uint32_t>(k);
  Matrix out = nn::predict(pair.generator, generator_input(modes, zm, {&kk, 1}));
  return out.data();
}

Matrix generate_batch(const GanPair& pair, const ModeLatents& modes, const Matrix& z,
                      std::span<const std::uint32_t> ks) {
  return nn::predict(pair.generator, generator_input(modes, z, ks));
}

std::vector<double> interpolate_modes(const GanPair& pair, const ModeLatents& modes,
                                      std::span<const double> z, std::size_t k_a,
                                      std::size_t k_b, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ArgumentError("interpolate_modes: t must be in [0,1]");
  check_mode(modes, k_a);
  check_mode(modes, k_b);
  if (t == 0.0) return generate(pair, modes, z, k_a);
  if (t == 1.0) return generate(pair, modes, z, k_b);
  if (z.size() != pair.noise_dim()) throw ShapeError("interpolate_modes: noise length mismatch");
  auto ca = modes.code(k_a);
  auto cb = modes.code(k_b);
  Matrix in(1, z.size());
  for (std::size_t j = 0; j < z.size(); ++j) in(0, j) = z[j] + ((1.0 - t) * ca[j] + t * cb[j]);
  return nn::predict(pair.generator, in).data();
}

double discriminate(const GanPair& pair, const ModeLatents& modes, std::span<const double> x,
                    std::optional<std::size_t> k) {
  if (x.size() != pair.data_dim()) throw ShapeError("discriminate: sample length mismatch");
  if (pair.conditioned && !k) throw ArgumentError("discriminate: conditioned pair needs a mode");
  Matrix xm(1, x.size(), std::vector<double>(x.begin(), x.end()));
  std::vector<std::uint32_t> ks;
  if (pair.conditioned) {
    check_mode(modes, *k);
    ks.push_back(static_cast<std::uint32_t>(*k));
  }
  const double s = nn::predict(pair.discriminator, discriminator_input(modes, xm, ks))(0, 0);
  double p = sigmoid(s);
  if (p >= 1.0) p = std::nextafter(1.0, 0.0);
  if (p <= 0.0) p = std::numeric_limits<double>::min();
  return p;
}

double d_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.empty() || fake_scores.empty()) throw ArgumentError("d_loss: empty scores");
  double lr = 0.0, lf = 0.0;
  for (double p : real_scores) lr += std::log(clamp_score(p));
  for (double p : fake_scores) lf += std::log(1.0 - clamp_score(p));
  return -lr / static_cast<double>(real_scores.size()) - lf / static_cast<double>(fake_scores.size());
}

double g_loss(std::span<const double> fake_scores) {
  if (fake_scores.empty()) throw ArgumentError("g_loss: empty scores");
  double l = 0.0;
  for (double p : fake_scores) l += std::log(clamp_score(p));
  return -l / static_cast<double>(fake_scores.size());
}

namespace {

void check_batch(const GanPair& pair, const ModeLatents& modes, const Batch& batch) {
  if (batch.real.rows() == 0 || batch.z.rows() == 0) throw ArgumentError("empty batch");
  if (batch.real.cols() != pair.data_dim()) throw ShapeError("batch: real sample dim mismatch");
  if (batch.fake_modes.size() != batch.z.rows()) throw ShapeError("batch: fake modes mismatch");
  if (pair.conditioned && batch.real_modes.size() != batch.real.rows())
    throw ArgumentError("batch: conditioned discriminator needs a mode per real sample");
  if (modes.dim() != pair.noise_dim()) throw ShapeError("batch: code dim != noise dim");
}

std::span<const std::uint32_t> cond(const GanPair& pair, const std::vector<std::uint32_t>& ks) {
  if (!pair.conditioned) return {};
  return ks;
}

}  // namespace

LossAndGrads discriminator_pass(const GanPair& pair, const ModeLatents& modes, const Batch& batch) {
  check_batch(pair, modes, batch);
  const Matrix fake = generate_batch(pair, modes, batch.z, batch.fake_modes);
  const Matrix in = stack(discriminator_input(modes, batch.real, cond(pair, batch.real_modes)),
                          discriminator_input(modes, fake, cond(pair, batch.fake_modes)));
  const auto trace = nn::forward(pair.discriminator, in);
  const std::size_t nr = batch.real.rows(), nf = fake.rows();
  std::vector<double> pr(nr), pf(nf);
  Matrix grad(nr + nf, 1);
  for (std::size_t b = 0; b < nr; ++b) {
    pr[b] = sigmoid(trace.output(b, 0));
    grad(b, 0) = grad_neg_log_p(pr[b]) / static_cast<double>(nr);
  }
  for (std::size_t b = 0; b < nf; ++b) {
    pf[b] = sigmoid(trace.output(nr + b, 0));
    grad(nr + b, 0) = grad_neg_log_1mp(pf[b]) / static_cast<double>(nf);
  }
  LossAndGrads out;
  out.loss = d_loss(pr, pf);
  out.grads = nn::backward(pair.discriminator, trace, grad).params;
  return out;
}

LossAndGrads generator_pass(const GanPair& pair, const ModeLatents& modes, const Batch& batch) {
  check_batch(pair, modes, batch);
  const auto gtrace = nn::forward(pair.generator, generator_input(modes, batch.z, batch.fake_modes));
  const auto dtrace = nn::forward(
      pair.discriminator, discriminator_input(modes, gtrace.output, cond(pair, batch.fake_modes)));
  const std::size_t nf = batch.z.rows();
  std::vector<double> pf(nf);
  Matrix grad(nf, 1);
  for (std::size_t b = 0; b < nf; ++b) {
    pf[b] = sigmoid(dtrace.output(b, 0));
    grad(b, 0) = grad_neg_log_p(pf[b]) / static_cast<double>(nf);
  }
  const auto dgrads = nn::backward(pair.discriminator, dtrace, grad);
  const std::size_t d = pair.data_dim();
  Matrix dfake(nf, d);
  for (std::size_t b = 0; b < nf; ++b)
    for (std::size_t j = 0; j < d; ++j) dfake(b, j) = dgrads.input(b, j);
  LossAndGrads out;
  out.loss = g_loss(pf);
  out.grads = nn::backward(pair.generator, gtrace, dfake).params;
  return out;
}

StepLosses train_step(GanPair& pair, const ModeLatents& modes, const Batch& batch) {
  StepLosses losses;
  auto dpass = discriminator_pass(pair, modes, batch);
  losses.d_loss = dpass.loss;
  nn::adam_step(pair.discriminator, dpass.grads, pair.d_opt);
  auto gpass = generator_pass(pair, modes, batch);
  losses.g_loss = gpass.loss;
  nn::adam_step(pair.generator, gpass.grads, pair.g_opt);
  return losses;
}

StepLosses init_stage_step(GanPair& pair, const ModeLatents& modes, const Matrix& real,
                           std::span<const double> alpha, Rng& rng) {
  if (pair.conditioned)
    throw ArgumentError("init_stage_step: discriminator must be unconditioned");
  check_alpha(alpha, modes.K());
  Batch batch;
  batch.real = real;
  batch.z = sample_noise(real.rows(), pair.noise_dim(), rng);
  batch.fake_modes = sample_modes(real.rows(), alpha, rng);
  return train_step(pair, modes, batch);
}

StepLosses acrp_gan_step(GanPair& pair, const ModeLatents& modes, const Matrix& real,
                         std::span<const std::uint32_t> real_modes, std::span<const double> alpha,
                         Rng& rng) {
  if (!pair.conditioned) throw ArgumentError("acrp_gan_step: discriminator must be conditioned");
  check_alpha(alpha, modes.K());
  if (real_modes.size() != real.rows())
    throw ArgumentError("acrp_gan_step: one assigned mode per real sample required");
  Batch batch;
  batch.real = real;
  batch.real_modes.assign(real_modes.begin(), real_modes.end());
  batch.z = sample_noise(real.rows(), pair.noise_dim(), rng);
  batch.fake_modes = sample_modes(real.rows(), alpha, rng);
  return train_step(pair, modes, batch);
}

}  // namespace micgan::gan
