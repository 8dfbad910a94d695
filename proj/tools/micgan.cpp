// micgan: dataset generation, training, evaluation, sampling, interpolation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "micgan/acrp.hpp"
#include "micgan/config.hpp"
#include "micgan/data.hpp"
#include "micgan/encoder.hpp"
#include "micgan/error.hpp"
#include "micgan/gan.hpp"
#include "micgan/mixture.hpp"

namespace fs = std::filesystem;
using namespace micgan;

namespace {

enum Exit { kOk = 0, kUsage = 2, kRuntime = 3, kIo = 4 };

std::ofstream open_out(const fs::path& p, bool binary = false) {
  std::ofstream os(p, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  return os;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_text(const fs::path& p, const std::string& text) {
  auto os = open_out(p);
  os << text;
  if (!os) throw IoError("write failed: " + p.string());
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

config::RunConfig load_config(const CommonArgs& a) {
  config::Overrides o;
  o.seed = a.seed;
  if (!a.out.empty()) o.out_dir = a.out;
  return config::load(a.config, config::process_env(), o);
}

// Checkpoint sidecar: the train config plus the data description.
struct CheckpointMeta {
  acrp::TrainConfig train;
  std::size_t image_rows = 0;
  std::size_t image_cols = 0;
};

CheckpointMeta parse_meta(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  CheckpointMeta m;
  m.train = acrp::train_config_from_json(j.at("train"));
  m.image_rows = j.value("image_rows", std::size_t{0});
  m.image_cols = j.value("image_cols", std::size_t{0});
  return m;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const CommonArgs& a) {
  const auto cfg = load_config(a);
  const auto ds = config::load_dataset(cfg.data, *cfg.seed);
  ensure_dir(cfg.out_dir);
  {
    auto os = open_out(cfg.out_dir / "dataset.csv");
    data::write_csv(os, ds);
    if (!os) throw IoError("write failed: dataset.csv");
  }
  nlohmann::json side;
  side["source"] = config::to_json(cfg.data);
  side["seed"] = *cfg.seed;
  side["rows"] = ds.size();
  side["dim"] = ds.dim();
  if (ds.labels) {
    std::map<int, std::size_t> hist;
    for (int l : *ds.labels) ++hist[l];
    nlohmann::json h = nlohmann::json::object();
    for (const auto& [l, c] : hist) h[std::to_string(l)] = c;
    side["label_counts"] = h;
  }
  write_text(cfg.out_dir / "dataset.json", side.dump(2) + "\n");
  std::cout << "rows " << ds.size() << " dim " << ds.dim();
  if (ds.labels) std::cout << " labels " << side["label_counts"].size();
  std::cout << "\n";
  return kOk;
}

void write_per_epoch_csv(const fs::path& p, const nlohmann::json& per_epoch) {
  auto os = open_out(p);
  os << "epoch,purity,effective_modes,modes_hit,high_quality_fraction,mean_jsd,q_loss,d_loss,g_loss\n";
  auto num = [](const nlohmann::json& v) { return v.is_null() ? std::string{} : fmt17(v.get<double>()); };
  for (const auto& e : per_epoch) {
    os << e["epoch"].get<std::size_t>() << ',' << num(e["purity"]) << ',' << e["effective_modes"].get<std::size_t>()
       << ',' << (e["modes_hit"].is_null() ? std::string{} : std::to_string(e["modes_hit"].get<std::size_t>()))
       << ',' << num(e["high_quality_fraction"]) << ',' << num(e["mean_jsd"]) << ','
       << num(e["losses"]["q"]) << ',' << num(e["losses"]["d"]) << ',' << num(e["losses"]["g"]) << '\n';
  }
}

int cmd_train(const CommonArgs& a, const std::string& resume) {
  const auto cfg = load_config(a);
  const auto ds = config::load_dataset(cfg.data, *cfg.seed);
  ensure_dir(cfg.out_dir);

  nlohmann::json meta;
  meta["train"] = acrp::to_json(cfg.train);
  meta["data"] = config::to_json(cfg.data);
  meta["image_rows"] = ds.image_rows;
  meta["image_cols"] = ds.image_cols;
  const std::string meta_text = meta.dump();

  std::optional<acrp::RunState> start;
  if (!resume.empty()) start = acrp::load_checkpoint(fs::path(resume));

  const fs::path ckpt = cfg.out_dir / "checkpoint.bin";
  auto result = acrp::run_full(ds, cfg.train, std::move(start),
                               [&](const acrp::RunState& st, const nlohmann::json&) {
                                 acrp::save_checkpoint(ckpt, st, meta_text);
                               });
  acrp::save_checkpoint(ckpt, result.state, meta_text);

  auto report = result.report;
  report["config"] = meta;
  write_text(cfg.out_dir / "report.json", report.dump(2) + "\n");
  write_per_epoch_csv(cfg.out_dir / "per_epoch.csv", report["per_epoch"]);
  write_text(cfg.out_dir / "latents.json", gan::latents_to_json(result.state.modes) + "\n");

  if (result.state.assign.size() == ds.size()) {
    const auto lik = encoder::likelihoods(result.state.enc, ds.samples, result.state.comps);
    auto os = open_out(cfg.out_dir / "assignments.csv");
    mixture::write_assignments_csv(os, result.state.assign, lik.log_lik);
    auto es = open_out(cfg.out_dir / "embeddings.csv");
    encoder::write_embeddings_csv(es, lik.embeddings, result.state.assign);
    const auto& fm = report["final_metrics"];
    if (!fm["purity_report"].is_null()) {
      auto ps = open_out(cfg.out_dir / "purity.csv");
      auto ev = acrp::evaluate(result.state, ds, cfg.train, acrp::kFinalEvalTag);
      metrics::write_purity_csv(ps, *ev.purity);
      if (ev.coverage) {
        auto cs = open_out(cfg.out_dir / "coverage.csv");
        metrics::write_coverage_csv(cs, *ev.coverage);
        auto js = open_out(cfg.out_dir / "jsd.csv");
        metrics::write_jsd_csv(js, *ev.jsd);
      }
    }
  }
  const auto& fm = report["final_metrics"];
  std::cout << "epochs " << result.state.epoch << " purity " << fm["purity"].dump() << " effective_modes "
            << fm["effective_modes"].dump() << "\n";
  return kOk;
}

int cmd_eval(const CommonArgs& a, const std::string& checkpoint) {
  std::string meta_text;
  const auto st = acrp::load_checkpoint(fs::path(checkpoint), &meta_text);
  const auto meta = parse_meta(meta_text);
  const auto cfg = load_config(a);
  const auto ds = config::load_dataset(cfg.data, *cfg.seed);
  if (ds.dim() != st.pair.data_dim())
    throw ArgumentError("eval: dataset dimension does not match the checkpoint");
  auto train = meta.train;
  const auto ev = acrp::evaluate(st, ds, train, acrp::kFinalEvalTag);
  const auto text = acrp::to_json(ev).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    ensure_dir(a.out);
    write_text(fs::path(a.out) / "metrics.json", text);
  }
  return kOk;
}

Matrix draw_noise(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix z(n, d);
  for (auto& v : z.data()) v = rng.normal();
  return z;
}

void write_pgm_grid(const fs::path& p, const Matrix& samples, std::size_t rows, std::size_t cols) {
  const std::size_t n = samples.rows();
  const auto per_row = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t grid_rows = (n + per_row - 1) / per_row;
  const std::size_t W = per_row * cols, H = grid_rows * rows;
  std::vector<unsigned char> img(W * H, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t gy = i / per_row, gx = i % per_row;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const double v = std::clamp((samples(i, r * cols + c) + 1.0) * 127.5, 0.0, 255.0);
        img[(gy * rows + r) * W + gx * cols + c] = static_cast<unsigned char>(std::lround(v));
      }
  }
  auto os = open_out(p, true);
  os << "P5\n" << W << ' ' << H << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (!os) throw IoError("write failed: " + p.string());
}

int cmd_sample(const CommonArgs& a, const std::string& checkpoint, std::size_t k, std::size_t count) {
  if (!a.seed) throw ArgumentError("sample: --seed is required");
  std::string meta_text;
  const auto st = acrp::load_checkpoint(fs::path(checkpoint), &meta_text);
  const auto meta = parse_meta(meta_text);
  if (k >= st.K()) throw IndexError("sample: mode " + std::to_string(k) + " out of range (K = " + std::to_string(st.K()) + ")");
  const Matrix z = draw_noise(count, st.pair.noise_dim(), *a.seed);
  const std::vector<std::uint32_t> ks(count, static_cast<std::uint32_t>(k));
  const Matrix x = count ? gan::generate_batch(st.pair, st.modes, z, ks) : Matrix(0, st.pair.data_dim());
  const fs::path out = a.out.empty() ? fs::path(".") : fs::path(a.out);
  ensure_dir(out);
  data::Dataset ds;
  ds.samples = x;
  {
    auto os = open_out(out / "samples.csv");
    data::write_csv(os, ds);
  }
  if (meta.image_rows && meta.image_cols && count)
    write_pgm_grid(out / "samples.pgm", x, meta.image_rows, meta.image_cols);
  std::cout << "rows " << count << "\n";
  return kOk;
}

int cmd_interpolate(const CommonArgs& a, const std::string& checkpoint, std::size_t ka, std::size_t kb,
                    std::size_t steps) {
  if (!a.seed) throw ArgumentError("interpolate: --seed is required");
  if (steps < 2) throw ArgumentError("interpolate: steps must be >= 2");
  const auto st = acrp::load_checkpoint(fs::path(checkpoint));
  if (ka >= st.K() || kb >= st.K()) throw IndexError("interpolate: mode index out of range");
  const Matrix z = draw_noise(1, st.pair.noise_dim(), *a.seed);
  const fs::path out = a.out.empty() ? fs::path(".") : fs::path(a.out);
  ensure_dir(out);
  auto os = open_out(out / "interpolation.csv");
  os << "step,t";
  for (std::size_t j = 0; j < st.pair.data_dim(); ++j) os << ",x_" << (j + 1);
  os << '\n';
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = s + 1 == steps ? 1.0 : static_cast<double>(s) / static_cast<double>(steps - 1);
    const auto x = gan::interpolate_modes(st.pair, st.modes, z.row(0), ka, kb, t);
    os << s << ',' << fmt17(t);
    for (double v : x) os << ',' << fmt17(v);
    os << '\n';
  }
  if (!os) throw IoError("write failed: interpolation.csv");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIC-GAN trainer: nonparametric mode discovery with conditional GANs"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  CommonArgs common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "INI config file");
    sub->add_option("--seed", common.seed, "RNG seed (u64)");
    sub->add_option("--out", common.out, "output directory");
  };

  auto* gen = app.add_subcommand("gen-data", "write a dataset CSV and JSON sidecar");
  add_common(gen);

  std::string resume;
  auto* train = app.add_subcommand("train", "run initialization and ACRP epochs");
  add_common(train);
  train->add_option("--resume", resume, "checkpoint to continue from");

  std::string checkpoint;
  auto* eval = app.add_subcommand("eval", "recompute final metrics for a checkpoint");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

  std::size_t mode = 0, count = 0;
  auto* sample = app.add_subcommand("sample", "generate samples from one mode");
  add_common(sample);
  sample->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  sample->add_option("--mode", mode, "mode index")->required();
  sample->add_option("--count", count, "number of samples")->required();

  std::size_t ka = 0, kb = 0, steps = 11;
  auto* interp = app.add_subcommand("interpolate", "walk between two mode codes");
  add_common(interp);
  interp->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  interp->add_option("--from", ka, "start mode")->required();
  interp->add_option("--to", kb, "end mode")->required();
  interp->add_option("--steps", steps, "path length (>= 2)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  auto logger = spdlog::stderr_color_mt("micgan");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*gen) return cmd_gen_data(common);
    if (*train) return cmd_train(common, resume);
    if (*eval) return cmd_eval(common, checkpoint);
    if (*sample) return cmd_sample(common, checkpoint, mode, count);
    if (*interp) return cmd_interpolate(common, checkpoint, ka, kb, steps);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kIo;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violated: " << e.what() << "\n";
    return kRuntime;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kRuntime;
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const IndexError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ShapeError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
