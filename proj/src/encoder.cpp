#include "micgan/encoder.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace micgan::encoder {

EncoderNet EncoderNet::create(const EncoderShape& shape, Rng& rng) {
  std::vector<std::size_t> dims{shape.data_dim};
  for (std::size_t l = 0; l < shape.depth; ++l) dims.push_back(shape.hidden);
  dims.push_back(shape.embed_dim);
  return {nn::make_mlp(dims, nn::Activation::leaky_relu, nn::Activation::linear, shape.slope, {},
                       rng)};
}

std::vector<double> embed(const EncoderNet& enc, std::span<const double> x) {
  Matrix xm(1, x.size(), std::vector<double>(x.begin(), x.end()));
  return nn::predict(enc.net, xm).data();
}

Matrix embed_all(const EncoderNet& enc, const Matrix& samples) {
  return nn::predict(enc.net, samples);
}

double q_loss(std::span<const double> e, const mixture::GaussianComponent& comp) {
  return -mixture::gaussian_logpdf(comp, e);
}

LikelihoodMatrix likelihoods_from_embeddings(Matrix embeddings,
                                             const std::vector<mixture::GaussianComponent>& comps) {
  const std::size_t N = embeddings.rows(), K = comps.size();
  for (const auto& c : comps)
    if (c.dim() != embeddings.cols())
      throw ShapeError("likelihoods: component dim does not match embedding dim");
  LikelihoodMatrix out;
  out.log_lik = Matrix(N, K);
  out.row_max.assign(N, 0.0);
#pragma omp parallel for schedule(static) if (N * K > 4096)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) {
    auto e = embeddings.row(static_cast<std::size_t>(i));
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      const double v = mixture::gaussian_logpdf(comps[k], e);
      out.log_lik(static_cast<std::size_t>(i), k) = v;
      mx = std::max(mx, v);
    }
    out.row_max[static_cast<std::size_t>(i)] = mx;
  }
  if (!out.log_lik.all_finite()) throw NumericError("likelihoods: non-finite log-likelihood");
  out.embeddings = std::move(embeddings);
  return out;
}

LikelihoodMatrix likelihoods(const EncoderNet& enc, const Matrix& samples,
                             const std::vector<mixture::GaussianComponent>& comps) {
  return likelihoods_from_embeddings(embed_all(enc, samples), comps);
}

QLossAndGrads q_loss_and_grads(const EncoderNet& enc, const Matrix& x,
                               std::span<const std::uint32_t> ks,
                               const std::vector<mixture::GaussianComponent>& comps) {
  if (ks.size() != x.rows()) throw ShapeError("q_loss_and_grads: one mode per sample required");
  if (x.rows() == 0) throw ArgumentError("q_loss_and_grads: empty batch");
  const std::size_t B = x.rows(), d_e = enc.embed_dim();
  const auto trace = nn::forward(enc.net, x);
  Matrix grad(B, d_e);
  std::vector<double> r(d_e);
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    if (ks[b] >= comps.size()) throw IndexError("q_loss_and_grads: mode out of range");
    const auto& comp = comps[ks[b]];
    if (comp.dim() != d_e) throw ShapeError("q_loss_and_grads: component dim != embedding dim");
    auto e = trace.output.row(b);
    loss += q_loss(e, comp);
    for (std::size_t j = 0; j < d_e; ++j) r[j] = e[j] - comp.mean()[j];
    const auto g = comp.precision_times(r);
    for (std::size_t j = 0; j < d_e; ++j) grad(b, j) = g[j] / static_cast<double>(B);
  }
  return {loss / static_cast<double>(B), nn::backward(enc.net, trace, grad).params};
}

double train_q_epoch(EncoderNet& enc, const EncoderShape& shape, const gan::GanPair& pair,
                     const gan::ModeLatents& modes,
                     const std::vector<mixture::GaussianComponent>& comps,
                     std::span<const double> alpha, const QTraining& cfg, Rng& rng) {
  if (comps.size() != modes.K()) throw ShapeError("train_q_epoch: one component per mode required");
  if (alpha.size() != modes.K()) throw ShapeError("train_q_epoch: alpha length != K");
  if (cfg.batch == 0) throw ArgumentError("train_q_epoch: batch size must be positive");
  enc = EncoderNet::create(shape, rng);
  auto opt = nn::AdamState::for_net(enc.net, cfg.adam);
  const std::size_t d_z = pair.noise_dim();

  double loss_sum = 0.0;
  std::size_t seen = 0;
  for (std::size_t done = 0; done < cfg.samples;) {
    const std::size_t B = std::min(cfg.batch, cfg.samples - done);
    Matrix z(B, d_z);
    for (auto& v : z.data()) v = rng.normal();
    std::vector<std::uint32_t> ks(B);
    for (auto& k : ks) k = static_cast<std::uint32_t>(rng.categorical(alpha));
    const Matrix fake = gan::generate_batch(pair, modes, z, ks);

    const auto lg = q_loss_and_grads(enc, fake, ks, comps);
    loss_sum += lg.loss * static_cast<double>(B);
    nn::adam_step(enc.net, lg.grads, opt);
    done += B;
    seen += B;
  }
  return seen ? loss_sum / static_cast<double>(seen) : 0.0;
}

void write_embeddings_csv(std::ostream& os, const Matrix& embeddings,
                          const mixture::AssignmentState& state) {
  if (embeddings.rows() != state.size())
    throw ShapeError("write_embeddings_csv: embedding count does not match assignments");
  os << "index";
  for (std::size_t j = 0; j < embeddings.cols(); ++j) os << ",e_" << (j + 1);
  os << ",assigned_mode\n";
  char buf[64];
  for (std::size_t i = 0; i < embeddings.rows(); ++i) {
    os << i;
    for (double v : embeddings.row(i)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      os << ',' << buf;
    }
    os << ',' << state.mode(i) << '\n';
  }
}

}  // namespace micgan::encoder
