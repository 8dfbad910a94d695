#include "micgan/acrp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "micgan/binary_io.hpp"
#include "micgan/error.hpp"

namespace micgan::acrp {

void TrainSchedule::validate() const {
  if (batch == 0) throw ArgumentError("schedule: batch must be positive");
  if (iters_1 == 0 || iters_2 == 0) throw ArgumentError("schedule: iters_1 and iters_2 must be positive");
  if (epochs > 0 && n_q == 0) throw ArgumentError("schedule: n_q must be positive");
  if (crp_stop_epoch > epochs) throw ArgumentError("schedule: crp_stop_epoch exceeds epochs");
  if (epochs > 0 && crp_stop_epoch == 0)
    throw ArgumentError("schedule: crp_stop_epoch must be >= 1 when epochs >= 1");
}

void ModelConfig::validate() const {
  if (net.data_dim == 0 || net.noise_dim == 0 || net.hidden == 0)
    throw ArgumentError("model: network sizes must be positive");
  if (!(net.slope > 0.0 && net.slope < 1.0)) throw ArgumentError("model: slope must be in (0,1)");
  if (encoder_hidden == 0) throw ArgumentError("model: encoder_hidden must be positive");
  if (q_batch == 0) throw ArgumentError("model: q_batch must be positive");
  if (!(kappa0 > 0.0)) throw ArgumentError("model: kappa0 must be positive");
  if (!(nu0_offset > -1.0)) throw ArgumentError("model: nu0 must exceed d_e - 1");
  if (!(code_separation >= 0.0)) throw ArgumentError("model: code_separation must be >= 0");
  if (!(init_cov_scale > 0.0)) throw ArgumentError("model: init_cov_scale must be positive");
}

void EvalConfig::validate() const {
  if (n_eval == 0) throw ArgumentError("eval: n_eval must be positive");
  if (jsd_bins == 0) throw ArgumentError("eval: jsd_bins must be positive");
  if (!(hit_fraction > 0.0 && hit_fraction <= 1.0)) throw ArgumentError("eval: hit_fraction must be in (0,1]");
  if (!(effective_threshold > 0.0 && effective_threshold < 1.0))
    throw ArgumentError("eval: effective_threshold must be in (0,1)");
}

encoder::EncoderShape TrainConfig::encoder_shape(std::size_t data_dim) const {
  return {data_dim, embed_dim(), model.encoder_hidden, model.encoder_depth, model.net.slope};
}

void TrainConfig::validate() const {
  effective_crp().validate();
  schedule.validate();
  model.validate();
  eval.validate();
  if (eval.top_n > crp.K) throw ArgumentError("eval: top_n exceeds K");
  const std::size_t de = embed_dim();
  if (de + 1 < crp.K) throw ArgumentError("model: embed_dim must be >= K - 1");
}

namespace {

const char* update_name(mixture::ComponentUpdate u) {
  return u == mixture::ComponentUpdate::posterior_mode ? "posterior_mode" : "posterior_sample";
}

nlohmann::json adam_json(const nn::AdamConfig& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

nn::AdamConfig adam_from(const nlohmann::json& j) {
  return {j.at("lr").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(),
          j.at("eps").get<double>()};
}

}  // namespace

nlohmann::json to_json(const TrainConfig& c) {
  const auto& s = c.schedule;
  const auto& m = c.model;
  const auto& e = c.eval;
  return {
      {"seed", c.seed},
      {"crp", {{"alpha", c.crp.alpha}, {"K", c.crp.K}}},
      {"schedule",
       {{"epochs", s.epochs}, {"n_init", s.n_init}, {"n_q", s.n_q}, {"n_gd", s.n_gd},
        {"iters_1", s.iters_1}, {"iters_2", s.iters_2}, {"batch", s.batch},
        {"crp_stop_epoch", s.crp_stop_epoch}}},
      {"model",
       {{"noise_dim", m.net.noise_dim}, {"hidden", m.net.hidden}, {"depth", m.net.depth},
        {"slope", m.net.slope}, {"embed_dim", c.embed_dim()}, {"encoder_hidden", m.encoder_hidden},
        {"encoder_depth", m.encoder_depth}, {"q_batch", m.q_batch}, {"gan_adam", adam_json(m.gan_adam)},
        {"q_adam", adam_json(m.q_adam)}, {"kappa0", m.kappa0}, {"nu0_offset", m.nu0_offset},
        {"code_separation", m.code_separation},
        {"init_cov_scale", m.init_cov_scale}, {"update", update_name(m.update)}}},
      {"eval",
       {{"n_eval", e.n_eval}, {"top_n", e.top_n}, {"jsd_bins", e.jsd_bins},
        {"hit_fraction", e.hit_fraction}, {"effective_threshold", e.effective_threshold}}},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  try {
    TrainConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.crp.alpha = j.at("crp").at("alpha").get<double>();
    c.crp.K = j.at("crp").at("K").get<std::size_t>();
    const auto& s = j.at("schedule");
    c.schedule = {s.at("epochs").get<std::size_t>(),  s.at("n_init").get<std::size_t>(),
                  s.at("n_q").get<std::size_t>(),     s.at("n_gd").get<std::size_t>(),
                  s.at("iters_1").get<std::size_t>(), s.at("iters_2").get<std::size_t>(),
                  s.at("batch").get<std::size_t>(),   s.at("crp_stop_epoch").get<std::size_t>()};
    c.crp.iters = c.schedule.iters_2;
    const auto& m = j.at("model");
    c.model.net.noise_dim = m.at("noise_dim").get<std::size_t>();
    c.model.net.hidden = m.at("hidden").get<std::size_t>();
    c.model.net.depth = m.at("depth").get<std::size_t>();
    c.model.net.slope = m.at("slope").get<double>();
    c.model.embed_dim = m.at("embed_dim").get<std::size_t>();
    c.model.encoder_hidden = m.at("encoder_hidden").get<std::size_t>();
    c.model.encoder_depth = m.at("encoder_depth").get<std::size_t>();
    c.model.q_batch = m.at("q_batch").get<std::size_t>();
    c.model.gan_adam = adam_from(m.at("gan_adam"));
    c.model.q_adam = adam_from(m.at("q_adam"));
    c.model.kappa0 = m.at("kappa0").get<double>();
    c.model.nu0_offset = m.at("nu0_offset").get<double>();
    c.model.code_separation = m.at("code_separation").get<double>();
    c.model.init_cov_scale = m.at("init_cov_scale").get<double>();
    const auto upd = m.at("update").get<std::string>();
    if (upd == "posterior_mode")
      c.model.update = mixture::ComponentUpdate::posterior_mode;
    else if (upd == "posterior_sample")
      c.model.update = mixture::ComponentUpdate::posterior_sample;
    else
      throw FormatError("train config: unknown component update '" + upd + "'");
    const auto& e = j.at("eval");
    c.eval.n_eval = e.at("n_eval").get<std::size_t>();
    c.eval.top_n = e.at("top_n").get<std::size_t>();
    c.eval.jsd_bins = e.at("jsd_bins").get<std::size_t>();
    c.eval.hit_fraction = e.at("hit_fraction").get<double>();
    c.eval.effective_threshold = e.at("effective_threshold").get<double>();
    return c;
  } catch (const nlohmann::json::exception& ex) {
    throw FormatError(std::string("train config JSON: ") + ex.what());
  }
}

// ---------------------------------------------------------------------------

void RunState::check(std::size_t n_data) const {
  const std::size_t K = modes.K();
  if (comps.size() != K) throw InvariantError("run state: component count != K");
  if (weights.alpha.size() != K) throw InvariantError("run state: weight vector length != K");
  if (assign.num_modes() != K && assign.size() > 0)
    throw InvariantError("run state: assignment mode count != K");
  if (pair.noise_dim() != modes.dim()) throw InvariantError("run state: code dim != noise dim");
  for (const auto& c : comps)
    if (c.dim() != enc.embed_dim()) throw InvariantError("run state: component dim != embedding dim");
  if (assign.size() > 0) {
    assign.check();
    const auto total = std::accumulate(assign.counts().begin(), assign.counts().end(), std::size_t{0});
    if (total != n_data)
      throw InvariantError("run state: sum of mode counts " + std::to_string(total) +
                           " != data size " + std::to_string(n_data));
    if (weights != mixture::mode_weights(assign.counts()))
      throw InvariantError("run state: mode weights not derived from counts");
  }
  const double s = std::accumulate(weights.alpha.begin(), weights.alpha.end(), 0.0);
  if (std::abs(s - 1.0) > 1e-12) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "run state: sum of alpha = %.17g", s);
    throw InvariantError(buf);
  }
}

std::uint64_t fingerprint(const data::Dataset& ds) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  const std::uint64_t dims[2] = {ds.size(), ds.dim()};
  mix(dims, sizeof dims);
  mix(ds.samples.data().data(), ds.samples.data().size() * sizeof(double));
  if (ds.labels) mix(ds.labels->data(), ds.labels->size() * sizeof(int));
  return h;
}

RunState make_state(const TrainConfig& cfg, const data::Dataset& ds) {
  cfg.validate();
  ds.validate();
  if (ds.size() == 0) throw ArgumentError("make_state: empty dataset");
  RunState st;
  st.rng = Rng(cfg.seed);
  auto shape = cfg.model.net;
  shape.data_dim = ds.dim();
  st.modes = gan::ModeLatents::sample(cfg.crp.K, shape.noise_dim, st.rng, cfg.model.code_separation);
  st.pair = gan::GanPair::create(shape, cfg.model.gan_adam, st.rng);
  st.enc = encoder::EncoderNet::create(cfg.encoder_shape(ds.dim()), st.rng);
  st.comps = mixture::init_components(cfg.crp.K, cfg.embed_dim(), cfg.model.init_cov_scale);
  st.assign = mixture::AssignmentState(cfg.crp.K);
  st.weights = mixture::ModeWeights::uniform(cfg.crp.K);
  st.data_fingerprint = fingerprint(ds);
  st.history = "[]";
  return st;
}

namespace {

Matrix sample_rows(const Matrix& x, std::size_t B, Rng& rng, std::vector<std::size_t>* idx_out) {
  Matrix out(B, x.cols());
  if (idx_out) idx_out->resize(B);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t i = rng.index(x.rows());
    if (idx_out) (*idx_out)[b] = i;
    auto src = x.row(i);
    std::copy(src.begin(), src.end(), out.row(b).begin());
  }
  return out;
}

std::size_t steps_for(std::size_t samples, std::size_t batch) { return (samples + batch - 1) / batch; }

}  // namespace

EpochLosses run_initialization(RunState& state, const data::Dataset& ds, const TrainConfig& cfg) {
  if (state.pair.conditioned) throw InvariantError("initialization: discriminator already conditioned");
  const std::size_t steps = steps_for(cfg.schedule.n_init, cfg.schedule.batch);
  const auto uniform = mixture::ModeWeights::uniform(state.K()).alpha;
  EpochLosses out;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t B = std::min(cfg.schedule.batch, cfg.schedule.n_init - s * cfg.schedule.batch);
    const Matrix real = sample_rows(ds.samples, B, state.rng, nullptr);
    const auto l = gan::init_stage_step(state.pair, state.modes, real, uniform, state.rng);
    out.d += l.d_loss;
    out.g += l.g_loss;
  }
  if (steps) {
    out.d /= static_cast<double>(steps);
    out.g /= static_cast<double>(steps);
  }
  state.initialized = true;
  return out;
}

EpochLosses run_acrp_epoch(RunState& state, const data::Dataset& ds, const TrainConfig& cfg,
                           bool sampling_enabled) {
  if (!state.initialized) throw InvariantError("ACRP epoch before initialization");
  const auto& sch = cfg.schedule;
  if (!state.pair.conditioned) state.pair.conditioned = true;
  ++state.epoch;
  EpochLosses out;

  const encoder::QTraining qcfg{sch.n_q, cfg.model.q_batch, cfg.model.q_adam};
  out.q = encoder::train_q_epoch(state.enc, cfg.encoder_shape(ds.dim()), state.pair, state.modes,
                                 state.comps, state.weights.alpha, qcfg, state.rng);

  if (sampling_enabled) {
    auto prior = mixture::GaussianPrior::weakly_informative(cfg.embed_dim());
    prior.kappa0 = cfg.model.kappa0;
    prior.nu0 = static_cast<double>(cfg.embed_dim()) + cfg.model.nu0_offset;
    for (std::size_t it = 0; it < sch.iters_1; ++it) {
      const auto lik = encoder::likelihoods(state.enc, ds.samples, state.comps);
      state.assign = mixture::crp_sample(lik.log_lik, cfg.effective_crp(), state.rng);
      state.assign.check();
      const auto groups = mixture::group_by_mode(lik.embeddings, state.assign);
      state.comps = mixture::update_components(groups, prior, cfg.model.update, &state.rng);
    }
    state.weights = mixture::mode_weights(state.assign.counts());
  } else if (state.assign.size() != ds.size()) {
    throw InvariantError("ACRP epoch: sampling disabled before any assignments exist");
  }

  const std::size_t steps = steps_for(sch.n_gd, sch.batch);
  std::vector<std::size_t> idx;
  std::vector<std::uint32_t> real_modes;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t B = std::min(sch.batch, sch.n_gd - s * sch.batch);
    const Matrix real = sample_rows(ds.samples, B, state.rng, &idx);
    real_modes.resize(B);
    for (std::size_t b = 0; b < B; ++b) real_modes[b] = state.assign.mode(idx[b]);
    const auto l = gan::acrp_gan_step(state.pair, state.modes, real, real_modes, state.weights.alpha,
                                      state.rng);
    out.d += l.d_loss;
    out.g += l.g_loss;
  }
  if (steps) {
    out.d /= static_cast<double>(steps);
    out.g /= static_cast<double>(steps);
  }
  state.check(ds.size());
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Assignments for a dataset other than the training set: MAP under the
// truncated posterior with the current counts.
std::vector<std::uint32_t> map_assign(const RunState& st, const data::Dataset& ds) {
  const auto lik = encoder::likelihoods(st.enc, ds.samples, st.comps);
  std::vector<std::uint32_t> out(ds.size());
  const auto& counts = st.assign.counts();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t k = 0; k < st.K(); ++k) {
      if (counts[k] == 0) continue;
      const double v = std::log(static_cast<double>(counts[k])) + lik.log_lik(i, k);
      if (v > best) {
        best = v;
        arg = static_cast<std::uint32_t>(k);
      }
    }
    out[i] = arg;
  }
  return out;
}

}  // namespace

Evaluation evaluate(const RunState& st, const data::Dataset& ds, const TrainConfig& cfg,
                    std::uint64_t tag) {
  Evaluation ev;
  ev.alpha = st.weights.alpha;
  const bool have_assign = st.assign.size() > 0;
  if (have_assign) ev.effective_modes = mixture::effective_modes(st.assign.counts(), cfg.eval.effective_threshold);

  if (!ds.labels) return ev;
  const auto stats = data::label_statistics(ds);
  const std::size_t M = stats.centers.size();

  if (have_assign) {
    const std::size_t n = cfg.eval.top_n ? cfg.eval.top_n : std::min(M, st.K());
    std::vector<std::uint32_t> modes =
        st.data_fingerprint == fingerprint(ds) ? st.assign.modes() : map_assign(st, ds);
    ev.purity = metrics::purity(modes, *ds.labels, st.weights, n);
    ev.purity_all = metrics::purity(modes, *ds.labels, st.weights, n, metrics::PurityNormalizer::all_data);
  }

  Rng rng(splitmix(cfg.seed ^ splitmix(tag)));
  const std::size_t n_eval = cfg.eval.n_eval;
  Matrix z(n_eval, st.pair.noise_dim());
  for (auto& v : z.data()) v = rng.normal();
  std::vector<std::uint32_t> ks(n_eval);
  for (auto& k : ks) k = static_cast<std::uint32_t>(rng.categorical(st.weights.alpha));
  const Matrix gen = gan::generate_batch(st.pair, st.modes, z, ks);

  const auto threshold = static_cast<std::size_t>(
      std::ceil(cfg.eval.hit_fraction * static_cast<double>(n_eval) / static_cast<double>(M)));

  std::vector<std::vector<std::size_t>> rows(M);
  for (std::size_t i = 0; i < ds.size(); ++i) rows[static_cast<std::size_t>((*ds.labels)[i])].push_back(i);
  std::vector<Matrix> true_by_mode;
  for (std::size_t m = 0; m < M; ++m) {
    Matrix g(rows[m].size(), ds.dim());
    for (std::size_t r = 0; r < rows[m].size(); ++r) {
      auto src = ds.samples.row(rows[m][r]);
      std::copy(src.begin(), src.end(), g.row(r).begin());
    }
    true_by_mode.push_back(std::move(g));
  }
  std::vector<double> sig = stats.sigmas;
  for (auto& s : sig) s = std::max(s, 1e-12);
  ev.coverage = metrics::mode_coverage(gen, stats.centers, sig, std::max<std::size_t>(threshold, 1));
  ev.jsd = metrics::matched_jsd(gen, ks, true_by_mode, stats.centers, sig, cfg.eval.jsd_bins);
  return ev;
}

nlohmann::json to_json(const Evaluation& ev) {
  nlohmann::json j;
  j["alpha"] = ev.alpha;
  j["effective_modes"] = ev.effective_modes;
  j["purity"] = ev.purity ? nlohmann::json(ev.purity->purity) : nlohmann::json(nullptr);
  j["purity_all"] = ev.purity_all ? nlohmann::json(ev.purity_all->purity) : nlohmann::json(nullptr);
  j["purity_report"] = ev.purity ? metrics::to_json(*ev.purity) : nlohmann::json(nullptr);
  j["coverage"] = ev.coverage ? metrics::to_json(*ev.coverage) : nlohmann::json(nullptr);
  j["jsd"] = ev.jsd ? metrics::to_json(*ev.jsd) : nlohmann::json(nullptr);
  return j;
}

namespace {

nlohmann::json epoch_entry(std::size_t epoch, const Evaluation& ev, const EpochLosses& l) {
  nlohmann::json e;
  e["epoch"] = epoch;
  e["purity"] = ev.purity ? nlohmann::json(ev.purity->purity) : nlohmann::json(nullptr);
  e["effective_modes"] = ev.effective_modes;
  e["alpha"] = ev.alpha;
  e["losses"] = {{"q", l.q}, {"d", l.d}, {"g", l.g}};
  e["modes_hit"] = ev.coverage ? nlohmann::json(ev.coverage->modes_hit) : nlohmann::json(nullptr);
  e["high_quality_fraction"] =
      ev.coverage ? nlohmann::json(ev.coverage->high_quality_fraction) : nlohmann::json(nullptr);
  e["mean_jsd"] = ev.jsd ? nlohmann::json(ev.jsd->mean) : nlohmann::json(nullptr);
  return e;
}

void append_history(RunState& st, const nlohmann::json& entry) {
  auto h = nlohmann::json::parse(st.history.empty() ? "[]" : st.history);
  h.push_back(entry);
  st.history = h.dump();
}

}  // namespace

RunResult run_full(const data::Dataset& ds, const TrainConfig& cfg, std::optional<RunState> resume,
                   const EpochCallback& on_epoch) {
  cfg.validate();
  RunState st = resume ? std::move(*resume) : make_state(cfg, ds);
  if (st.data_fingerprint != fingerprint(ds))
    throw ArgumentError("run_full: dataset does not match the resumed state");
  if (st.K() != cfg.crp.K) throw ArgumentError("run_full: K does not match the resumed state");

  if (!st.initialized) {
    const auto l = run_initialization(st, ds, cfg);
    const auto ev = evaluate(st, ds, cfg, 0);
    const auto entry = epoch_entry(0, ev, l);
    append_history(st, entry);
    spdlog::info("init done: d_loss {:.4f} g_loss {:.4f}", l.d, l.g);
    if (on_epoch) on_epoch(st, entry);
  }
  while (st.epoch < cfg.schedule.epochs) {
    const bool sampling = st.epoch + 1 <= cfg.schedule.crp_stop_epoch;
    const auto l = run_acrp_epoch(st, ds, cfg, sampling);
    const auto ev = evaluate(st, ds, cfg, st.epoch);
    const auto entry = epoch_entry(st.epoch, ev, l);
    append_history(st, entry);
    spdlog::info("epoch {}: purity {} effective_modes {} q {:.4f} d {:.4f} g {:.4f}", st.epoch,
                 entry["purity"].dump(), ev.effective_modes, l.q, l.d, l.g);
    if (on_epoch) on_epoch(st, entry);
  }

  RunResult res;
  res.report["config"] = to_json(cfg);
  res.report["per_epoch"] = nlohmann::json::parse(st.history);
  res.report["final_metrics"] = to_json(evaluate(st, ds, cfg, kFinalEvalTag));
  res.state = std::move(st);
  return res;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[9] = "MICGCKPT";
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(std::ostream& os, const RunState& st, const std::string& config_json) {
  bin::write_magic(os, kMagic);
  bin::write_u32(os, kVersion);
  bin::write_string(os, config_json);
  bin::write_u64(os, st.epoch);
  bin::write_u8(os, st.initialized ? 1 : 0);
  bin::write_u8(os, st.pair.conditioned ? 1 : 0);
  bin::write_u64(os, st.data_fingerprint);
  bin::write_u32(os, static_cast<std::uint32_t>(st.modes.K()));
  bin::write_u32(os, static_cast<std::uint32_t>(st.modes.dim()));
  bin::write_f64s(os, st.modes.codes.data());
  nn::save_mlp(os, st.pair.generator);
  nn::save_mlp(os, st.pair.discriminator);
  nn::save_adam(os, st.pair.g_opt);
  nn::save_adam(os, st.pair.d_opt);
  nn::save_mlp(os, st.enc.net);
  bin::write_u32(os, static_cast<std::uint32_t>(st.comps.size()));
  for (const auto& c : st.comps) {
    bin::write_u32(os, static_cast<std::uint32_t>(c.dim()));
    bin::write_f64s(os, c.mean());
    bin::write_f64s(os, c.covariance().data());
  }
  bin::write_u64(os, st.assign.size());
  for (auto m : st.assign.modes()) bin::write_u32(os, m);
  bin::write_string(os, st.rng.state());
  bin::write_string(os, st.history);
  if (!os) throw IoError("checkpoint: write failed");
}

RunState load_checkpoint(std::istream& is, std::string* config_json) {
  bin::expect_magic(is, kMagic, "checkpoint");
  const auto version = bin::read_u32(is);
  if (version != kVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  RunState st;
  auto cfg = bin::read_string(is);
  if (config_json) *config_json = std::move(cfg);
  st.epoch = bin::read_u64(is);
  st.initialized = bin::read_u8(is) != 0;
  const bool conditioned = bin::read_u8(is) != 0;
  st.data_fingerprint = bin::read_u64(is);
  const std::size_t K = bin::read_u32(is);
  const std::size_t dc = bin::read_u32(is);
  if (K == 0) throw FormatError("checkpoint: K must be positive");
  st.modes.codes = Matrix(K, dc, bin::read_f64s(is, K * dc));
  st.pair.generator = nn::load_mlp(is);
  st.pair.discriminator = nn::load_mlp(is);
  st.pair.g_opt = nn::load_adam(is, st.pair.generator);
  st.pair.d_opt = nn::load_adam(is, st.pair.discriminator);
  st.pair.conditioned = conditioned;
  st.enc.net = nn::load_mlp(is);
  const std::size_t nc = bin::read_u32(is);
  if (nc != K) throw FormatError("checkpoint: component count != K");
  for (std::size_t k = 0; k < nc; ++k) {
    const std::size_t d = bin::read_u32(is);
    auto mean = bin::read_f64s(is, d);
    Matrix cov(d, d, bin::read_f64s(is, d * d));
    try {
      st.comps.emplace_back(std::move(mean), std::move(cov));
    } catch (const NumericError& e) {
      throw FormatError(std::string("checkpoint: invalid component covariance: ") + e.what());
    }
  }
  const std::size_t n = bin::read_u64(is);
  std::vector<std::uint32_t> modes(n);
  for (auto& m : modes) m = bin::read_u32(is);
  try {
    st.assign = mixture::AssignmentState(std::move(modes), K);
  } catch (const IndexError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  st.weights = n ? mixture::mode_weights(st.assign.counts()) : mixture::ModeWeights::uniform(K);
  st.rng.set_state(bin::read_string(is));
  st.history = bin::read_string(is);
  try {
    if (!nlohmann::json::parse(st.history).is_array()) throw FormatError("checkpoint: history is not an array");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: history: ") + e.what());
  }
  return st;
}

void save_checkpoint(const std::filesystem::path& path, const RunState& state,
                     const std::string& config_json) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  save_checkpoint(os, state, config_json);
}

RunState load_checkpoint(const std::filesystem::path& path, std::string* config_json) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return load_checkpoint(is, config_json);
}

}  // namespace micgan::acrp
