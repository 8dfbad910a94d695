#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "micgan/data.hpp"

namespace fs = std::filesystem;

namespace {

const char* const kTinyConfig =
    "[data]\nkind = ring\nn_modes = 4\ncounts = 50\n"
    "[crp]\nK = 5\n"
    "[schedule]\nepochs = 2\ncrp_stop_epoch = 1\nn_init = 512\nn_q = 256\nn_gd = 256\nbatch = 64\n"
    "[model]\nnoise_dim = 4\nhidden = 8\ndepth = 1\nencoder_hidden = 8\nencoder_depth = 1\n"
    "q_batch = 64\n"
    "[eval]\nn_eval = 200\n"
    "[run]\nseed = 3\n";

class Cli : public ::testing::Test {
protected:
  fs::path dir;

  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / (std::string("micgan_cli_") + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    write("tiny.ini", kTinyConfig);
  }
  void TearDown() override { fs::remove_all(dir); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }

  int run(const std::string& args) const {
    const std::string cmd = std::string(MICGAN_CLI_PATH) + " " + args + " >" +
                            (dir / "stdout.txt").string() + " 2>" + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string tiny() const { return "--config " + (dir / "tiny.ini").string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::size_t data_rows(const fs::path& p) {
  std::ifstream is(p);
  return micgan::data::read_csv(is).size();
}

}  // namespace

TEST_F(Cli, GenDataWritesCsvAndSidecar) {
  ASSERT_EQ(run("gen-data " + tiny() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("gen-data " + tiny() + " --out " + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a/dataset.csv"), slurp(dir / "b/dataset.csv"));
  std::ifstream is(dir / "a/dataset.csv");
  const auto ds = micgan::data::read_csv(is);
  EXPECT_EQ(ds.size(), 200u);
  const auto side = nlohmann::json::parse(slurp(dir / "a/dataset.json"));
  EXPECT_EQ(side["rows"], 200);
  EXPECT_EQ(side["label_counts"].size(), 4u);
  EXPECT_EQ(side["label_counts"]["3"], 50);
  ASSERT_EQ(run("gen-data " + tiny() + " --seed 4 --out " + (dir / "c").string()), 0);
  EXPECT_NE(slurp(dir / "a/dataset.csv"), slurp(dir / "c/dataset.csv"));
}

TEST_F(Cli, TrainEvalSampleInterpolate) {
  const auto out = dir / "run";
  ASSERT_EQ(run("train " + tiny() + " --out " + out.string()), 0) << slurp(dir / "stderr.txt");
  for (const char* f : {"report.json", "checkpoint.bin", "per_epoch.csv", "latents.json",
                        "assignments.csv", "embeddings.csv", "purity.csv", "coverage.csv", "jsd.csv"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["per_epoch"].size(), 3u);

  const auto ckpt = (out / "checkpoint.bin").string();
  ASSERT_EQ(run("eval " + tiny() + " --checkpoint " + ckpt + " --out " + (dir / "ev").string()), 0);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "ev/metrics.json")), report["final_metrics"]);

  ASSERT_EQ(run("sample --checkpoint " + ckpt + " --mode 2 --count 17 --seed 5 --out " +
                (dir / "s2").string()),
            0);
  EXPECT_EQ(data_rows(dir / "s2/samples.csv"), 17u);
  ASSERT_EQ(run("sample --checkpoint " + ckpt + " --mode 4 --count 1 --seed 5 --out " +
                (dir / "s4").string()),
            0);
  ASSERT_EQ(run("sample --checkpoint " + ckpt + " --mode 2 --count 1 --seed 5 --out " +
                (dir / "s2b").string()),
            0);

  ASSERT_EQ(run("interpolate --checkpoint " + ckpt + " --from 2 --to 4 --steps 2 --seed 5 --out " +
                (dir / "ip").string()),
            0);
  // Endpoints equal single-mode samples drawn with the same noise.
  std::ifstream ip(dir / "ip/interpolation.csv");
  std::string header, first, last;
  std::getline(ip, header);
  std::getline(ip, first);
  std::getline(ip, last);
  EXPECT_EQ(header, "step,t,x_1,x_2");
  auto tail = [](const std::string& row) { return row.substr(row.find(',', row.find(',') + 1) + 1); };
  auto sample_row = [&](const fs::path& p) {
    std::ifstream s(p);
    std::string h, row;
    std::getline(s, h);
    std::getline(s, row);
    return row.substr(0, row.rfind(','));  // drop the empty label column
  };
  EXPECT_EQ(tail(first), sample_row(dir / "s2b/samples.csv"));
  EXPECT_EQ(tail(last), sample_row(dir / "s4/samples.csv"));
}

TEST_F(Cli, TrainIsByteDeterministic) {
  ASSERT_EQ(run("train " + tiny() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("train " + tiny() + " --out " + (dir / "b").string()), 0);
  for (const char* f : {"report.json", "checkpoint.bin", "per_epoch.csv", "assignments.csv"})
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST_F(Cli, ResumeMatchesUninterruptedRun) {
  std::string text = kTinyConfig;
  text.replace(text.find("epochs = 2"), 10, "epochs = 1");
  write("short.ini", text);
  ASSERT_EQ(run("train " + tiny() + " --out " + (dir / "full").string()), 0);
  ASSERT_EQ(run("train --config " + (dir / "short.ini").string() + " --out " + (dir / "part").string()), 0);
  ASSERT_EQ(run("train " + tiny() + " --resume " + (dir / "part/checkpoint.bin").string() + " --out " +
                (dir / "resumed").string()),
            0)
      << slurp(dir / "stderr.txt");
  EXPECT_EQ(slurp(dir / "full/checkpoint.bin"), slurp(dir / "resumed/checkpoint.bin"));
}

TEST_F(Cli, EnvironmentOverridesFile) {
  ASSERT_EQ(run("gen-data " + tiny() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("gen-data " + tiny() + " --seed 3 --out " + (dir / "b").string()), 0);
  const std::string env = "MICGAN_DATA_COUNTS=7 ";
  const std::string cmd = env + MICGAN_CLI_PATH + " gen-data " + tiny() + " --out " +
                          (dir / "c").string() + " >/dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(slurp(dir / "a/dataset.csv"), slurp(dir / "b/dataset.csv"));
  EXPECT_EQ(data_rows(dir / "c/dataset.csv"), 28u);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("train --bogus-flag"), 2);
  write("bad.ini", "[crp]\nnot_a_key = 1\n[run]\nseed = 1\n");
  EXPECT_EQ(run("train --config " + (dir / "bad.ini").string()), 2);
  write("noseed.ini", "[crp]\nK = 3\n");
  EXPECT_EQ(run("gen-data --config " + (dir / "noseed.ini").string()), 2);
  EXPECT_EQ(run("train --config " + (dir / "missing.ini").string()), 4);

  // Output path under a regular file cannot be created.
  write("blocker", "x");
  EXPECT_EQ(run("gen-data " + tiny() + " --out " + (dir / "blocker/sub").string()), 4);

  ASSERT_EQ(run("train " + tiny() + " --out " + (dir / "run").string()), 0);
  const auto ckpt = (dir / "run/checkpoint.bin").string();
  EXPECT_EQ(run("sample --checkpoint " + ckpt + " --mode 5 --count 3 --seed 1"), 2);
  EXPECT_EQ(run("interpolate --checkpoint " + ckpt + " --from 0 --to 9 --seed 1"), 2);
  EXPECT_EQ(run("interpolate --checkpoint " + ckpt + " --from 0 --to 1 --steps 1 --seed 1"), 2);
  write("garbage.bin", "not a checkpoint");
  EXPECT_EQ(run("sample --checkpoint " + (dir / "garbage.bin").string() + " --mode 0 --count 1 --seed 1"), 4);

  // A NaN in the training data is a runtime numeric failure.
  write("nan.csv", "x_1,x_2,label\n0,0,0\nnan,1,1\n");
  write("nan.ini", "[data]\nkind = csv\npath = nan.csv\n[run]\nseed = 1\n");
  EXPECT_EQ(run("train --config " + (dir / "nan.ini").string() + " --out " + (dir / "n").string()), 3);
}
