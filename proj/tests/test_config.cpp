#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "micgan/config.hpp"
#include "micgan/error.hpp"

using namespace micgan;
using namespace micgan::config;
namespace fs = std::filesystem;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars = std::move(vars)](const std::string& k) -> std::optional<std::string> {
    auto it = vars.find(k);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

RunConfig parse_text(const std::string& text, std::map<std::string, std::string> env = {}) {
  std::istringstream is(text);
  return parse(is, env_of(std::move(env)));
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return path / name;
  }
};

}  // namespace

TEST(Config, ParsesSectionsAndLists) {
  const auto c = parse_text(
      "# comment\n"
      "[data]\nkind = unbalanced_mixture\nn_modes = 2\nsigma = 0.1, 0.05\ncounts = 900,100\n"
      "[crp]\nalpha = 0.5\nK = 7\n"
      "[schedule]\nepochs = 4\niters_2 = 5\ncrp_stop_epoch = 3\n"
      "[model]\nupdate = posterior_sample\ngan_lr = 0.001\n"
      "[run]\nseed = 12\n");
  EXPECT_EQ(c.data.kind, SourceKind::synthetic);
  EXPECT_EQ(c.data.synthetic.kind, data::SyntheticKind::unbalanced_mixture);
  EXPECT_EQ(c.data.synthetic.sigma, (std::vector<double>{0.1, 0.05}));
  EXPECT_EQ(c.data.synthetic.counts, (std::vector<std::size_t>{900, 100}));
  EXPECT_EQ(c.train.crp.K, 7u);
  EXPECT_EQ(c.train.crp.alpha, 0.5);
  EXPECT_EQ(c.train.crp.iters, 5u);
  EXPECT_EQ(c.train.schedule.epochs, 4u);
  EXPECT_EQ(c.train.model.update, mixture::ComponentUpdate::posterior_sample);
  EXPECT_EQ(c.train.model.gan_adam.lr, 0.001);
  EXPECT_EQ(c.seed, 12u);
}

TEST(Config, EmptyInputGivesDefaults) {
  const auto c = parse_text("");
  const acrp::TrainConfig d;
  EXPECT_EQ(acrp::to_json(c.train), acrp::to_json(d));
  EXPECT_FALSE(c.seed.has_value());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_text("[crp]\nbeta = 1\n"), ArgumentError);
  EXPECT_THROW(parse_text("[nope]\nK = 1\n"), ArgumentError);
  EXPECT_THROW(parse_text("[crp]\nK = -3\n"), ArgumentError);
  EXPECT_THROW(parse_text("[crp]\nK = 3x\n"), ArgumentError);
  EXPECT_THROW(parse_text("[crp]\nalpha = much\n"), ArgumentError);
  EXPECT_THROW(parse_text("[data]\nkind = spiral\n"), ArgumentError);
  EXPECT_THROW(parse_text("[data]\nnormalize = maybe\n"), ArgumentError);
  EXPECT_THROW(parse_text("K = 3\n"), ArgumentError);
  EXPECT_THROW(parse_text("[crp\nK = 3\n"), ArgumentError);
}

TEST(Config, PrecedenceFlagsOverEnvOverFile) {
  TempDir dir("micgan_test_cfg_prec");
  const auto path = dir.write("c.ini", "[crp]\nK = 4\nalpha = 2\n[run]\nseed = 1\nout = from_file\n");
  const auto env = env_of({{"MICGAN_CRP_K", "6"}, {"MICGAN_RUN_SEED", "2"}});

  const auto file_only = load(path, env_of({}), {});
  EXPECT_EQ(file_only.train.crp.K, 4u);
  EXPECT_EQ(file_only.seed, 1u);
  EXPECT_EQ(file_only.out_dir, "from_file");

  const auto with_env = load(path, env, {});
  EXPECT_EQ(with_env.train.crp.K, 6u);
  EXPECT_EQ(with_env.train.crp.alpha, 2.0);
  EXPECT_EQ(with_env.seed, 2u);
  EXPECT_EQ(with_env.train.seed, 2u);

  Overrides flags;
  flags.seed = 3;
  flags.out_dir = "from_flag";
  const auto with_flags = load(path, env, flags);
  EXPECT_EQ(with_flags.seed, 3u);
  EXPECT_EQ(with_flags.train.seed, 3u);
  EXPECT_EQ(with_flags.out_dir, "from_flag");
  EXPECT_EQ(with_flags.train.crp.K, 6u);
}

TEST(Config, LoadRequiresSeedAndInputs) {
  TempDir dir("micgan_test_cfg_load");
  const auto no_seed = dir.write("a.ini", "[crp]\nK = 4\n");
  EXPECT_THROW(load(no_seed, env_of({}), {}), ArgumentError);
  Overrides flags;
  flags.seed = 5;
  EXPECT_NO_THROW(load(no_seed, env_of({}), flags));
  EXPECT_NO_THROW(load({}, env_of({}), flags));

  const auto missing = dir.write("b.ini", "[data]\nkind = csv\npath = absent.csv\n[run]\nseed = 1\n");
  EXPECT_THROW(load(missing, env_of({}), {}), IoError);
  EXPECT_THROW(load(dir.path / "none.ini", env_of({}), flags), IoError);
  const auto invalid = dir.write("c.ini", "[schedule]\nepochs = 2\ncrp_stop_epoch = 5\n");
  EXPECT_THROW(load(invalid, env_of({}), flags), ArgumentError);
}

TEST(Config, CsvPathsResolveAgainstConfigDir) {
  TempDir dir("micgan_test_cfg_csv");
  dir.write("d.csv", "x_1,x_2,label\n0.5,1,0\n-1,2,1\n");
  const auto path = dir.write("c.ini", "[data]\nkind = csv\npath = d.csv\nnormalize = true\n[run]\nseed = 1\n");
  const auto cfg = load(path, env_of({}), {});
  EXPECT_EQ(cfg.data.path, dir.path / "d.csv");
  const auto ds = load_dataset(cfg.data, *cfg.seed);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.samples(0, 0), 1.0);
  EXPECT_EQ(ds.samples(1, 1), 1.0);
  EXPECT_EQ(to_json(cfg.data)["path"], "d.csv");
}

TEST(Config, SyntheticDatasetFollowsSeed) {
  const auto c = parse_text("[data]\nkind = grid\nn_modes = 4\ncounts = 10\n");
  const auto a = load_dataset(c.data, 1), b = load_dataset(c.data, 1), d = load_dataset(c.data, 2);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, d.samples);
  EXPECT_EQ(a.size(), 40u);
}

TEST(Config, EveryKnownKeyHasAnEnvName) {
  const auto keys = known_keys();
  EXPECT_GT(keys.size(), 30u);
  // Each key can be set from the environment alone.
  for (const auto& k : keys) {
    if (k == "data.kind" || k == "model.update" || k == "data.path" || k == "data.labels" ||
        k == "run.out")
      continue;
    std::string name = "MICGAN_" + k;
    for (auto& ch : name) ch = ch == '.' ? '_' : static_cast<char>(std::toupper(ch));
    const std::string value = k == "data.normalize" ? "true" : "1";
    EXPECT_NO_THROW(parse_text("", {{name, value}})) << k;
  }
}
