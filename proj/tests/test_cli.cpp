#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(RNTC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("rntc_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("no-such-command"), 2);
  EXPECT_EQ(run("gen-data"), 2);
  const fs::path dir = scratch("usage");
  EXPECT_EQ(run("gen-data --count 1 --out " + (dir / "d.bin").string() + " --set train.nonsense=1"), 2);
  EXPECT_EQ(run("gen-data --count 1 --out " + (dir / "d.bin").string() + " --scale huge"), 2);
  fs::remove_all(dir);
}

TEST(Cli, IoErrorsExitWithThree) {
  const fs::path dir = scratch("io");
  EXPECT_EQ(run("report --in-dir " + dir.string()), 3);
  EXPECT_EQ(run("train --data " + (dir / "missing.bin").string() + " --out " + (dir / "m.ckpt").string()), 3);
  EXPECT_EQ(run("gen-data --count 1 --out /nonexistent_dir/d.bin"), 3);
  fs::remove_all(dir);
}

TEST(Cli, GenDataAndTrainAreByteStable) {
  const fs::path dir = scratch("stable");
  const std::string a = (dir / "a.bin").string(), b = (dir / "b.bin").string();
  ASSERT_EQ(run("gen-data --count 6 --seed 3 --out " + a), 0);
  ASSERT_EQ(run("gen-data --count 6 --seed 3 --out " + b), 0);
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_TRUE(fs::is_regular_file(a + ".config.ini"));

  const std::string train = " --epochs 1 --set train.nodes_per_sample=128 --set train.batch_size=2 --data " + a;
  ASSERT_EQ(run("train" + train + " --out " + (dir / "m1.ckpt").string()), 0);
  ASSERT_EQ(run("train" + train + " --out " + (dir / "m2.ckpt").string()), 0);
  EXPECT_EQ(slurp(dir / "m1.ckpt"), slurp(dir / "m2.ckpt"));
  EXPECT_EQ(slurp(dir / "m1.ckpt.history.csv"), slurp(dir / "m2.ckpt.history.csv"));

  ASSERT_EQ(run("eval-model --checkpoint " + (dir / "m1.ckpt").string() + " --data " + a + " --out " +
                (dir / "eval.csv").string()),
            0);
  EXPECT_NE(slurp(dir / "eval.csv").find("pair_id,split,iou"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, HjSolveWritesAValueGrid) {
  const fs::path dir = scratch("hj");
  std::ofstream(dir / "s.json") << R"({"obstacles": [{"center": [1.0, 0.0], "velocity": [0.0, 0.0], "radius": 0.3}]})";
  EXPECT_EQ(run("hj-solve --scenario-json " + (dir / "s.json").string() + " --out " + (dir / "v.bin").string()), 0);
  EXPECT_TRUE(fs::is_regular_file(dir / "v.bin"));
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_EQ(run("hj-solve --scenario-json " + (dir / "bad.json").string() + " --out " + (dir / "v.bin").string()), 2);
  fs::remove_all(dir);
}

TEST(Cli, BenchmarkAndReport) {
  const fs::path dir = scratch("bench");
  const std::string common = " --modes sdf,none --horizons 5 --scenarios 2 --seed 4";
  ASSERT_EQ(run("benchmark" + common + " --out-dir " + (dir / "a").string()), 0);
  ASSERT_EQ(run("benchmark" + common + " --out-dir " + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a" / "results.csv"), slurp(dir / "b" / "results.csv"));
  EXPECT_EQ(slurp(dir / "a" / "summary.csv"), slurp(dir / "b" / "summary.csv"));
  EXPECT_EQ(run("benchmark --modes rntc --horizons 5 --scenarios 1 --out-dir " + (dir / "c").string()), 2);
  EXPECT_EQ(run("report --in-dir " + (dir / "a").string()), 0);
  EXPECT_TRUE(fs::is_regular_file(dir / "a" / "success_vs_horizon.svg"));
  fs::remove_all(dir);
}
