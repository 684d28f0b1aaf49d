#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "latentpose/binary_io.hpp"
#include "latentpose/config.hpp"
#include "latentpose/errors.hpp"
#include "latentpose/model_io.hpp"
#include "latentpose/rng.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace latentpose;

namespace {

const char* kTinyConfig = R"(# small enough to train in seconds
seed = 1
data.n_train = 24
data.n_test = 8
camera.image_size = 16
camera.mm_per_pixel = 150
ae.layers = 60
ae.noise_sigmas = 40
ae.pretrain_epochs = 2
ae.finetune_epochs = 1
cnn.input_size = 16
cnn.kernel_sizes = 3, 2, 2
cnn.channels = 2, 4, 4
cnn.fc_widths = 16, 16, 16
train.latent_epochs = 2
train.finetune_epochs = 2
train.baseline_epochs = 2
baseline.pca_k = 10
baseline.extra_dim = 60
)";

struct RunResult {
  int code;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const char* cli = std::getenv("LATENTPOSE_CLI");
  if (!cli) return {-1, "LATENTPOSE_CLI not set"};
  const fs::path log = fs::temp_directory_path() / "latentpose_cli_test.log";
  const std::string cmd = std::string(cli) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("latentpose_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = root_ / "tiny.cfg";
    write_file(config_, kTinyConfig);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string common() const { return "--config " + config_.string(); }
  std::string data() const { return (root_ / "data").string(); }
  RunResult gen(const std::string& extra = "") {
    return run_cli("gen-data " + common() + " --out " + data() + " " + extra);
  }
  RunResult train(const std::string& stage, const fs::path& models, const std::string& extra = "") {
    return run_cli("train " + common() + " --stage " + stage + " --data " + data() +
                   " --models " + models.string() + " " + extra);
  }

  fs::path root_, config_;
};

}  // namespace

TEST(Config, DefaultsRoundTripAndHash) {
  const ExperimentConfig d;
  EXPECT_NO_THROW(d.validate());
  EXPECT_EQ(parse_config(to_text(d)), d);
  const ExperimentConfig t = parse_config(kTinyConfig);
  EXPECT_EQ(t.n_train, 24u);
  EXPECT_EQ(t.cnn_kernel_sizes, (std::array<std::size_t, 3>{3, 2, 2}));
  EXPECT_EQ(parse_config(to_text(t)), t);
  EXPECT_EQ(config_hash(t), config_hash(parse_config(to_text(t))));
  EXPECT_NE(config_hash(t), config_hash(d));
  EXPECT_EQ(config_hash(d).size(), 16u);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config("ae.lamda = 0.1\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = 1\nseed = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = banana\n"), ConfigError);
  EXPECT_THROW(parse_config("just words\n"), ConfigError);
  EXPECT_THROW(parse_config("ae.layers = 40\n"), ConfigError);
  EXPECT_THROW(parse_config("data.n_train = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("cnn.input_size = 64\n"), ConfigError);
  try {
    parse_config("seed = 1\nbogus.key = 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bogus.key"), std::string::npos);
  }
}

TEST(Config, AeUnitsFollowPoseScale) {
  ExperimentConfig c;
  c.ae_noise_sigmas = {40.0};
  c.ae_lambda = 0.1;
  const AeTrainConfig a = ae_train_config(c);
  EXPECT_DOUBLE_EQ(a.noise_sigmas[0], 0.04);
  EXPECT_DOUBLE_EQ(a.lambda, 0.1 / 1e6);
}

TEST(ModelIo, RoundTripAndCorruption) {
  RngStream rng(11);
  ModelFile m;
  m.kind = "test";
  m.set("alpha", "1");
  m.set("beta", "two words");
  m.add("w", oracle::random_tensor({3, 4}, rng));
  m.add("b", oracle::random_tensor({4}, rng));
  const std::string bytes = serialize_model(m);
  EXPECT_EQ(bytes.substr(0, 8), "LPMODEL1");
  EXPECT_EQ(parse_model(bytes), m);
  EXPECT_EQ(m.get("beta"), "two words");
  EXPECT_THROW(m.get("gamma"), FormatError);
  EXPECT_THROW(parse_model(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(parse_model(bytes + "x"), FormatError);
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(parse_model(bad), FormatError);
  bad = bytes;
  bad[8] = 9;
  EXPECT_THROW(parse_model(bad), FormatError);
}

TEST(ModelIo, AutoencoderConverterRoundTrip) {
  RngStream rng(12);
  const std::size_t hidden[] = {60, 70};
  const AutoEncoderParams ae = AutoEncoderParams::initialize(51, hidden, rng);
  EXPECT_EQ(autoencoder_from_model(parse_model(serialize_model(autoencoder_to_model(ae)))), ae);
  EXPECT_THROW(encoder_from_model(autoencoder_to_model(ae)), FormatError);
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run_cli("").code, 1);
  EXPECT_EQ(run_cli("frobnicate").code, 1);
  EXPECT_EQ(run_cli("train").code, 1);
  EXPECT_EQ(run_cli("train --stage nonsense --config /nonexistent.cfg").code, 1);
  EXPECT_EQ(run_cli("--help").code, 0);
}

TEST_F(CliRun, GenDataRefusesOverwriteAndSeedChangesHash) {
  auto r = gen();
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string manifest = read_file(root_ / "data" / "manifest.txt");
  r = gen();
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("--force"), std::string::npos);
  ASSERT_EQ(gen("--force").code, 0);
  EXPECT_EQ(read_file(root_ / "data" / "manifest.txt"), manifest);
  ASSERT_EQ(gen("--force --seed 2").code, 0);
  EXPECT_NE(read_file(root_ / "data" / "manifest.txt"), manifest);
}

TEST_F(CliRun, StageDependenciesAreNamed) {
  ASSERT_EQ(gen().code, 0);
  auto r = train("finetune", root_ / "models");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("latent"), std::string::npos) << r.output;
  r = train("latent", root_ / "models");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("ae"), std::string::npos) << r.output;
  r = run_cli("eval " + common() + " --data " + data() + " --models " + (root_ / "models").string() +
              " --out " + (root_ / "eval").string());
  EXPECT_EQ(r.code, 2);
  r = run_cli("train " + common() + " --stage ae --data " + (root_ / "missing").string() +
              " --models " + (root_ / "models").string());
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliRun, FullPipelineIsDeterministicAndReportsMatchSchema) {
  ASSERT_EQ(gen().code, 0);
  for (const fs::path& models : {root_ / "m1", root_ / "m2"})
    for (const char* stage : {"ae", "latent", "finetune", "direct", "pca", "extrafc"}) {
      const auto r = train(stage, models);
      ASSERT_EQ(r.code, 0) << stage << ": " << r.output;
    }
  for (const char* stage : {"ae", "latent", "finetune", "direct", "pca", "extrafc"}) {
    const std::string f = std::string(stage) + ".model";
    EXPECT_EQ(read_file(root_ / "m1" / f), read_file(root_ / "m2" / f)) << stage;
    const ModelFile m = load_model(root_ / "m1" / f);
    EXPECT_EQ(m.get("stage"), stage);
    EXPECT_EQ(m.get("config_hash"), config_hash(parse_config(kTinyConfig)));
    EXPECT_TRUE(fs::exists(root_ / "m1" / (std::string(stage) + "_loss.csv")));
  }
  EXPECT_EQ(train("ae", root_ / "m1").code, 1);

  for (const char* run : {"e1", "e2"}) {
    const auto r = run_cli("eval " + common() + " --references --data " + data() + " --models " +
                           (root_ / "m1").string() + " --out " + (root_ / run).string());
    ASSERT_EQ(r.code, 0) << r.output;
  }
  const std::string report = read_file(root_ / "e1" / "report.csv");
  EXPECT_EQ(report, read_file(root_ / "e2" / "report.csv"));
  std::istringstream lines(report);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "method,action,mpjpe_mm,lower_sum,upper_sum,full_sum");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5) << line;
  }
  // 7 methods x (4 actions + all)
  EXPECT_EQ(rows, 35u);
  EXPECT_NE(report.find("ground-truth,all,0.00,0.00,0.00,0.00"), std::string::npos);
  for (const char* m : {"OURS-FT", "OURS-noFT", "CNN-Direct", "CNN-ExtraFC", "CNN-PCA", "untrained"})
    EXPECT_NE(report.find(std::string(m) + ",all,"), std::string::npos) << m;
  EXPECT_TRUE(fs::exists(root_ / "e1" / "mpjpe_table.csv"));
  EXPECT_TRUE(fs::exists(root_ / "e1" / "eval_manifest.txt"));
  EXPECT_TRUE(fs::exists(root_ / "e1" / "heatmaps" / "OURS-FT.pgm"));
}

TEST_F(CliRun, SweepWritesOneRowPerValue) {
  ASSERT_EQ(gen().code, 0);
  auto r = run_cli("sweep " + common() + " --data " + data() + " --axis ae-layers --values 60 60-60 --out " +
                   (root_ / "sweep").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const std::string csv = read_file(root_ / "sweep" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "ae_layers,status,mpjpe_mm,lower_sum,upper_sum,full_sum,message");
  r = run_cli("sweep " + common() + " --data " + data() + " --values 40 --out " +
              (root_ / "sweep2").string());
  EXPECT_EQ(r.code, 2);
  const std::string failed = read_file(root_ / "sweep2" / "sweep.csv");
  EXPECT_NE(failed.find("40,failed"), std::string::npos) << failed;
}
