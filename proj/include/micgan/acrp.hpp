#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "micgan/data.hpp"
#include "micgan/encoder.hpp"
#include "micgan/gan.hpp"
#include "micgan/metrics.hpp"
#include "micgan/mixture.hpp"
#include "micgan/rng.hpp"

// The two training stages: initialization with an unconditioned
// discriminator, then the adversarial CRP epoch loop.
namespace micgan::acrp {

struct TrainSchedule {
  std::size_t epochs = 20;
  std::size_t n_init = 200000;  // samples consumed by initialization
  std::size_t n_q = 16000;      // generated samples per encoder epoch
  std::size_t n_gd = 50000;     // real samples per GAN phase
  std::size_t iters_1 = 1;      // likelihood / sample / update rounds per epoch
  std::size_t iters_2 = 3;      // Gibbs sweeps per sampling call
  std::size_t batch = 128;
  std::size_t crp_stop_epoch = 10;

  void validate() const;
};

struct ModelConfig {
  gan::NetworkShape net;
  std::size_t embed_dim = 0;  // 0 means K
  std::size_t encoder_hidden = 64;
  std::size_t encoder_depth = 3;
  std::size_t q_batch = 256;
  nn::AdamConfig gan_adam{};
  nn::AdamConfig q_adam{1e-3, 0.9, 0.999, 1e-8};
  double kappa0 = 0.01;
  double nu0_offset = 2.0;  // nu0 = d_e + offset
  double code_separation = 0.5;
  double init_cov_scale = 0.005;  // initial component covariance is this times I
  mixture::ComponentUpdate update = mixture::ComponentUpdate::posterior_mode;

  void validate() const;
};

struct EvalConfig {
  std::size_t n_eval = 4000;
  std::size_t top_n = 0;  // 0 means the number of label classes, capped at K
  std::size_t jsd_bins = 10;
  double hit_fraction = 0.25;  // a true mode needs hit_fraction * n_eval / M points
  double effective_threshold = 0.02;

  void validate() const;
};

struct TrainConfig {
  mixture::CrpConfig crp;  // alpha and K; sweeps come from schedule.iters_2
  TrainSchedule schedule;
  ModelConfig model;
  EvalConfig eval;
  std::uint64_t seed = 0;

  std::size_t embed_dim() const { return model.embed_dim ? model.embed_dim : crp.K; }
  mixture::CrpConfig effective_crp() const { return {crp.alpha, crp.K, schedule.iters_2}; }
  encoder::EncoderShape encoder_shape(std::size_t data_dim) const;
  void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct RunState {
  gan::GanPair pair;
  gan::ModeLatents modes;
  encoder::EncoderNet enc;
  std::vector<mixture::GaussianComponent> comps;
  mixture::AssignmentState assign;  // empty until the first sampling pass
  mixture::ModeWeights weights;     // uniform until then, else from counts
  std::size_t epoch = 0;            // completed ACRP epochs
  bool initialized = false;
  Rng rng;
  std::uint64_t data_fingerprint = 0;
  std::string history;  // serialized per-epoch report entries

  std::size_t K() const { return modes.K(); }
  // Dimensional cross-checks plus count conservation; throws InvariantError.
  void check(std::size_t n_data) const;
};

// FNV-1a over the sample bytes and labels.
std::uint64_t fingerprint(const data::Dataset& ds);

RunState make_state(const TrainConfig& cfg, const data::Dataset& ds);

struct EpochLosses {
  double q = 0.0;
  double d = 0.0;
  double g = 0.0;
};

// Uniform mode sampling against an unconditioned discriminator.
EpochLosses run_initialization(RunState& state, const data::Dataset& ds, const TrainConfig& cfg);

// One ACRP epoch: condition D (once), retrain Q, optionally resample
// assignments and components, refresh weights, then GAN training.
EpochLosses run_acrp_epoch(RunState& state, const data::Dataset& ds, const TrainConfig& cfg,
                           bool sampling_enabled);

struct Evaluation {
  std::optional<metrics::PurityReport> purity;
  std::optional<metrics::PurityReport> purity_all;  // normalized by N
  std::optional<metrics::CoverageReport> coverage;
  std::optional<metrics::JsdReport> jsd;
  std::size_t effective_modes = 0;
  std::vector<double> alpha;
};

// Deterministic given (state, dataset, cfg, tag); draws only from an
// evaluation stream derived from cfg.seed and `tag`.
Evaluation evaluate(const RunState& state, const data::Dataset& ds, const TrainConfig& cfg,
                    std::uint64_t tag);
nlohmann::json to_json(const Evaluation& ev);

inline constexpr std::uint64_t kFinalEvalTag = 0xF1A1u;

struct RunResult {
  RunState state;
  nlohmann::json report;
};

using EpochCallback = std::function<void(const RunState&, const nlohmann::json& entry)>;

// Initialization then epochs with sampling enabled while epoch <=
// crp_stop_epoch. Passing `resume` continues from a saved state.
RunResult run_full(const data::Dataset& ds, const TrainConfig& cfg,
                   std::optional<RunState> resume = std::nullopt,
                   const EpochCallback& on_epoch = {});

// Binary checkpoint. `config_json` is stored verbatim alongside the state.
void save_checkpoint(std::ostream& os, const RunState& state, const std::string& config_json);
RunState load_checkpoint(std::istream& is, std::string* config_json = nullptr);
void save_checkpoint(const std::filesystem::path& path, const RunState& state,
                     const std::string& config_json);
RunState load_checkpoint(const std::filesystem::path& path, std::string* config_json = nullptr);

}  // namespace micgan::acrp
