#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>

#include "cli_support.hpp"

namespace coop {
namespace {

namespace fs = std::filesystem;
using testing::run_coopctl;
using testing::scratch_dir;
using testing::slurp;

const std::string kSmall = "--set scene.train_scenes=6 --set scene.eval_scenes=4";

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_coopctl("").exit_code, 2);
  EXPECT_EQ(run_coopctl("frobnicate").exit_code, 2);
  EXPECT_EQ(run_coopctl("cost-report --bogus").exit_code, 2);
  EXPECT_EQ(run_coopctl("--help").exit_code, 0);
}

TEST(Cli, ConfigErrorsAreStructured) {
  const fs::path out = scratch_dir("config_error");
  const auto r = run_coopctl("cost-report --out " + out.string() + " --set matcher.tua=0.3");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.output.find("error: code=ConfigInvalid message=\""), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("matcher.tua"), std::string::npos);
}

TEST(Cli, MissingConfigFileIsIoFailure) {
  const fs::path out = scratch_dir("io_error");
  const auto r = run_coopctl("cost-report --out " + out.string() + " --config " + (out / "absent.json").string());
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("code=IoFailure"), std::string::npos) << r.output;
}

TEST(Cli, UnwritableOutputIsIoFailure) {
  const fs::path out = scratch_dir("blocked");
  { std::ofstream(out / "file") << "x"; }
  const auto r = run_coopctl("cost-report --out " + (out / "file" / "sub").string());
  EXPECT_EQ(r.exit_code, 3) << r.output;
}

TEST(Cli, CaaWithoutParamsIsConfigInvalid) {
  const fs::path out = scratch_dir("no_params");
  const auto r = run_coopctl("eval --out " + out.string() + " " + kSmall + " --set matcher.evaluate=[\\\"caa\\\"]");
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST(Cli, DivergenceExitCode) {
  const fs::path out = scratch_dir("diverge");
  const auto r = run_coopctl("train --out " + out.string() + " " + kSmall + " --set train.steps=50 --set train.learning_rate=1e12");
  EXPECT_EQ(r.exit_code, 4) << r.output;
  EXPECT_NE(r.output.find("code=DivergenceDetected"), std::string::npos);
}

TEST(Cli, SceneGenerationIsByteDeterministic) {
  const fs::path a = scratch_dir("scenes_a");
  const fs::path b = scratch_dir("scenes_b");
  ASSERT_EQ(run_coopctl("gen-scenes --out " + a.string() + " " + kSmall).exit_code, 0);
  ASSERT_EQ(run_coopctl("gen-scenes --out " + b.string() + " " + kSmall).exit_code, 0);
  int files = 0;
  for (const char* split : {"train", "eval"}) {
    for (const auto& entry : fs::directory_iterator(a / split)) {
      ++files;
      EXPECT_EQ(slurp(entry.path()), slurp(b / split / entry.path().filename())) << entry.path();
    }
  }
  EXPECT_EQ(files, 10);
  EXPECT_EQ(slurp(a / "manifest.json").find("\"command\": \"gen-scenes\""), 4u);
}

TEST(Cli, SmokePipeline) {
  const fs::path root = scratch_dir("pipeline");
  const std::string scenes = (root / "scenes").string();
  const std::string model = (root / "model").string();
  ASSERT_EQ(run_coopctl("gen-scenes --out " + scenes + " --set scene.train_scenes=20 --set scene.eval_scenes=20").exit_code, 0);
  const auto train = run_coopctl("train --out " + model + " --set data.scenes=" + scenes + " --set train.steps=200");
  ASSERT_EQ(train.exit_code, 0) << train.output;
  EXPECT_TRUE(fs::exists(root / "model" / "params.bin"));
  EXPECT_TRUE(fs::exists(root / "model" / "loss.csv"));

  const std::string common = " --set data.scenes=" + scenes + " --set data.params=" + model + "/params.bin";
  const auto eval = run_coopctl("eval --out " + (root / "eval").string() + common);
  ASSERT_EQ(eval.exit_code, 0) << eval.output;
  EXPECT_TRUE(fs::exists(root / "eval" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(root / "eval" / "detection_metrics.csv"));

  const auto sweep = run_coopctl("sweep-noise --out " + (root / "sweep").string() + common +
                                 " --set sweep.sigma_t=[0,0.6] --set sweep.sigma_r=[0,2]");
  ASSERT_EQ(sweep.exit_code, 0) << sweep.output;
  const std::string table = slurp(root / "sweep" / "sweep.csv");
  // Header plus 2 x 2 noise cells for each of the four default matchers.
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 17);
  EXPECT_TRUE(fs::exists(root / "sweep" / "sweep_plot.csv"));

  ASSERT_EQ(run_coopctl("compare-lift --out " + (root / "lift").string() + " --set lift.seeds=2").exit_code, 0);
  EXPECT_TRUE(fs::exists(root / "lift" / "lift.csv"));
  ASSERT_EQ(run_coopctl("cost-report --out " + (root / "cost").string()).exit_code, 0);
  EXPECT_NE(slurp(root / "cost" / "cost.json").find("\"ratio\""), std::string::npos);
  for (const char* d : {"model", "eval", "sweep", "lift", "cost"}) EXPECT_TRUE(fs::exists(root / d / "manifest.json"));
}

TEST(Cli, ManifestReproducesRun) {
  const fs::path a = scratch_dir("manifest_a");
  const fs::path b = scratch_dir("manifest_b");
  ASSERT_EQ(run_coopctl("compare-lift --out " + a.string() + " --seed 5 --set lift.seeds=2").exit_code, 0);
  ASSERT_EQ(run_coopctl("compare-lift --out " + b.string() + " --config " + (a / "manifest.json").string()).exit_code, 0);
  EXPECT_EQ(slurp(a / "lift.csv"), slurp(b / "lift.csv"));
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));
}

}  // namespace
}  // namespace coop
