#include "micgan/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "micgan/error.hpp"

namespace micgan::config {

namespace pt = boost::property_tree;

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

namespace {

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const auto x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ArgumentError("config " + key + ": expected a non-negative integer, got '" + v + "'");
  }
}

double to_f64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ArgumentError("config " + key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  const auto s = boost::algorithm::to_lower_copy(v);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ArgumentError("config " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, v, boost::algorithm::is_any_of(", "), boost::algorithm::token_compress_on);
  parts.erase(std::remove(parts.begin(), parts.end(), std::string{}), parts.end());
  return parts;
}

struct Ctx {
  RunConfig cfg;
  std::filesystem::path base;
};

using Setter = std::function<void(Ctx&, const std::string& key, const std::string& value)>;

std::size_t as_size(const std::string& k, const std::string& v) { return static_cast<std::size_t>(to_u64(k, v)); }

const std::map<std::string, Setter>& schema() {
  static const std::map<std::string, Setter> s = {
      {"data.kind",
       [](Ctx& c, const std::string& k, const std::string& v) {
         if (v == "csv")
           c.cfg.data.kind = SourceKind::csv;
         else if (v == "idx")
           c.cfg.data.kind = SourceKind::idx;
         else {
           c.cfg.data.kind = SourceKind::synthetic;
           try {
             c.cfg.data.synthetic.kind = data::synthetic_kind_from_string(v);
           } catch (const ArgumentError&) {
             throw ArgumentError("config " + k + ": unknown data kind '" + v + "'");
           }
         }
       }},
      {"data.n_modes", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.data.synthetic.n_modes = as_size(k, v); }},
      {"data.sigma",
       [](Ctx& c, const std::string& k, const std::string& v) {
         auto& s = c.cfg.data.synthetic.sigma;
         s.clear();
         for (const auto& p : split_list(v)) s.push_back(to_f64(k, p));
       }},
      {"data.counts",
       [](Ctx& c, const std::string& k, const std::string& v) {
         auto& s = c.cfg.data.synthetic.counts;
         s.clear();
         for (const auto& p : split_list(v)) s.push_back(as_size(k, p));
       }},
      {"data.radius", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.data.synthetic.radius = to_f64(k, v); }},
      {"data.spacing", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.data.synthetic.spacing = to_f64(k, v); }},
      {"data.path", [](Ctx& c, const std::string&, const std::string& v) { c.cfg.data.path = c.base / v; }},
      {"data.labels", [](Ctx& c, const std::string&, const std::string& v) { c.cfg.data.labels = c.base / v; }},
      {"data.normalize", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.data.normalize = to_bool(k, v); }},

      {"crp.alpha", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.crp.alpha = to_f64(k, v); }},
      {"crp.k", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.crp.K = as_size(k, v); }},

      {"schedule.epochs", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.schedule.epochs = as_size(k, v); }},
      {"schedule.n_init", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.schedule.n_init = as_size(k, v); }},
      {"schedule.n_q", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.schedule.n_q = as_size(k, v); }},
      {"schedule.n_gd", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.schedule.n_gd = as_size(k, v); }},
      {"schedule.iters_1", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.schedule.iters_1 = as_size(k, v); }},
      {"schedule.iters_2", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.schedule.iters_2 = as_size(k, v); }},
      {"schedule.batch", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.schedule.batch = as_size(k, v); }},
      {"schedule.crp_stop_epoch", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.schedule.crp_stop_epoch = as_size(k, v); }},

      {"model.noise_dim", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.net.noise_dim = as_size(k, v); }},
      {"model.hidden", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.net.hidden = as_size(k, v); }},
      {"model.depth", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.net.depth = as_size(k, v); }},
      {"model.slope", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.net.slope = to_f64(k, v); }},
      {"model.embed_dim", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.embed_dim = as_size(k, v); }},
      {"model.encoder_hidden", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.encoder_hidden = as_size(k, v); }},
      {"model.encoder_depth", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.encoder_depth = as_size(k, v); }},
      {"model.q_batch", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.q_batch = as_size(k, v); }},
      {"model.gan_lr", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.gan_adam.lr = to_f64(k, v); }},
      {"model.gan_beta1", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.gan_adam.beta1 = to_f64(k, v); }},
      {"model.gan_beta2", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.gan_adam.beta2 = to_f64(k, v); }},
      {"model.q_lr", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.q_adam.lr = to_f64(k, v); }},
      {"model.q_beta1", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.q_adam.beta1 = to_f64(k, v); }},
      {"model.q_beta2", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.q_adam.beta2 = to_f64(k, v); }},
      {"model.kappa0", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.kappa0 = to_f64(k, v); }},
      {"model.nu0_offset", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.nu0_offset = to_f64(k, v); }},
      {"model.code_separation", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.code_separation = to_f64(k, v); }},
      {"model.init_cov_scale", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.model.init_cov_scale = to_f64(k, v); }},
      {"model.update",
       [](Ctx& c, const std::string& k, const std::string& v) {
         if (v == "posterior_mode")
           c.cfg.train.model.update = mixture::ComponentUpdate::posterior_mode;
         else if (v == "posterior_sample")
           c.cfg.train.model.update = mixture::ComponentUpdate::posterior_sample;
         else
           throw ArgumentError("config " + k + ": expected posterior_mode or posterior_sample");
       }},

      {"eval.n_eval", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.eval.n_eval = as_size(k, v); }},
      {"eval.top_n", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.eval.top_n = as_size(k, v); }},
      {"eval.jsd_bins", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.eval.jsd_bins = as_size(k, v); }},
      {"eval.hit_fraction", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.eval.hit_fraction = to_f64(k, v); }},
      {"eval.effective_threshold", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.train.eval.effective_threshold = to_f64(k, v); }},

      {"run.seed", [](Ctx& c, const std::string& k, const std::string& v) { c.cfg.seed = to_u64(k, v); }},
      {"run.out", [](Ctx& c, const std::string&, const std::string& v) { c.cfg.out_dir = v; }},
  };
  return s;
}

std::string env_name(const std::string& key) {
  auto n = "MICGAN_" + boost::algorithm::to_upper_copy(key);
  std::replace(n.begin(), n.end(), '.', '_');
  return n;
}

}  // namespace

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : schema()) out.push_back(k);
  return out;
}

RunConfig parse(std::istream& is, const EnvLookup& env, const std::filesystem::path& base_dir) {
  // '#' comment lines are accepted in addition to the parser's ';'.
  std::stringstream cleaned;
  std::string line;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string::npos && line[first] == '#') continue;
    cleaned << line << '\n';
  }
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(cleaned, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }

  std::map<std::string, std::string> values;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ArgumentError("config: key '" + section + "' outside any section");
    for (const auto& [key, node] : body) {
      const auto full = boost::algorithm::to_lower_copy(section + "." + key);
      if (!schema().count(full)) throw ArgumentError("config: unknown key '" + section + "." + key + "'");
      values[full] = boost::algorithm::trim_copy(node.data());
    }
  }
  if (env)
    for (const auto& [key, _] : schema())
      if (auto v = env(env_name(key))) values[key] = boost::algorithm::trim_copy(*v);

  Ctx ctx;
  ctx.base = base_dir;
  // `data.kind` first so that later keys see the final source kind.
  if (auto it = values.find("data.kind"); it != values.end()) schema().at(it->first)(ctx, it->first, it->second);
  for (const auto& [key, v] : values)
    if (key != "data.kind") schema().at(key)(ctx, key, v);
  ctx.cfg.train.crp.iters = ctx.cfg.train.schedule.iters_2;
  return ctx.cfg;
}

RunConfig load(const std::filesystem::path& path, const EnvLookup& env, const Overrides& flags) {
  RunConfig cfg;
  if (path.empty()) {
    std::istringstream empty;
    cfg = parse(empty, env, {});
  } else {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path.string());
    cfg = parse(is, env, path.parent_path());
  }
  if (flags.seed) cfg.seed = flags.seed;
  if (flags.out_dir) cfg.out_dir = *flags.out_dir;
  if (!cfg.seed) throw ArgumentError("config: a seed is required (run.seed, MICGAN_RUN_SEED or --seed)");
  cfg.train.seed = *cfg.seed;

  if (cfg.data.kind == SourceKind::synthetic) {
    cfg.data.synthetic.validate();
  } else {
    if (cfg.data.path.empty()) throw ArgumentError("config: data.path is required for csv/idx data");
    if (!std::filesystem::exists(cfg.data.path)) throw IoError("data file not found: " + cfg.data.path.string());
    if (cfg.data.labels && !std::filesystem::exists(*cfg.data.labels))
      throw IoError("label file not found: " + cfg.data.labels->string());
  }
  cfg.train.validate();
  return cfg;
}

data::Dataset load_dataset(const DataSource& src, std::uint64_t seed) {
  data::Dataset ds;
  switch (src.kind) {
    case SourceKind::synthetic: {
      Rng rng(seed);
      ds = data::generate(src.synthetic, rng);
      break;
    }
    case SourceKind::csv: {
      std::ifstream is(src.path);
      if (!is) throw IoError("cannot open " + src.path.string());
      ds = data::read_csv(is);
      break;
    }
    case SourceKind::idx:
      ds = data::load_idx(src.path, src.labels);
      break;
  }
  if (src.normalize) ds = data::normalize(std::move(ds));
  return ds;
}

nlohmann::json to_json(const DataSource& src) {
  nlohmann::json j;
  switch (src.kind) {
    case SourceKind::synthetic:
      j["kind"] = data::to_string(src.synthetic.kind);
      j["n_modes"] = src.synthetic.n_modes;
      j["sigma"] = src.synthetic.sigma;
      j["counts"] = src.synthetic.counts;
      j["radius"] = src.synthetic.radius;
      j["spacing"] = src.synthetic.spacing;
      break;
    case SourceKind::csv:
      j["kind"] = "csv";
      j["path"] = src.path.filename().string();
      break;
    case SourceKind::idx:
      j["kind"] = "idx";
      j["path"] = src.path.filename().string();
      if (src.labels) j["labels"] = src.labels->filename().string();
      break;
  }
  j["normalize"] = src.normalize;
  return j;
}

}  // namespace micgan::config
