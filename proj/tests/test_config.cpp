#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "rntc/config.hpp"
#include "rntc/errors.hpp"

using namespace rntc;

namespace {

std::string write_ini(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("rntc_test_" + name);
  std::ofstream(path) << text;
  return path.string();
}

}  // namespace

TEST(Config, DefaultsFollowTheScale) {
  const RunConfig desk = build_config({});
  EXPECT_EQ(desk.scale, Scale::Desk);
  EXPECT_EQ(desk.data_count, 1000);
  EXPECT_EQ(desk.train.epochs, 30);
  const RunConfig paper = build_config({{"run.scale", "paper"}});
  EXPECT_EQ(paper.data_count, 40000);
  EXPECT_EQ(paper.train.epochs, 100);
  EXPECT_EQ(paper.train.batch_size, 40);
  EXPECT_EQ(paper.train.gamma, 0.1);
  EXPECT_EQ(paper.label.geometry.nx, 100);
  EXPECT_EQ(paper.planner.geometry.nx, 100);
}

TEST(Config, ScaleIsAppliedBeforeOtherKeys) {
  const RunConfig c = build_config({{"train.epochs", "7"}, {"run.scale", "paper"}});
  EXPECT_EQ(c.train.epochs, 7);
  EXPECT_EQ(c.scale, Scale::Paper);
}

TEST(Config, RobotRadiusPropagates) {
  const RunConfig c = build_config({{"robot.radius", "0.4"}, {"robot.v_max", "0.7"}});
  EXPECT_EQ(c.scenario.robot_radius, 0.4);
  EXPECT_EQ(c.label.geometry.inflation, 0.4);
  EXPECT_EQ(c.planner.mpc.inflation, 0.4);
  EXPECT_EQ(c.planner.geometry.inflation, 0.4);
  EXPECT_EQ(c.planner.mpc.v_max, 0.7);
  EXPECT_EQ(c.label.limits.v_max, 0.7);
}

TEST(Config, ListsParse) {
  const RunConfig c = build_config({{"benchmark.modes", "none,rntc"}, {"benchmark.horizons", "5,15"},
                                    {"train.lr_drop_epochs", "3,4"}});
  EXPECT_EQ(c.modes, (std::vector<TerminalMode>{TerminalMode::None, TerminalMode::Rntc}));
  EXPECT_EQ(c.horizons, (std::vector<int>{5, 15}));
  EXPECT_EQ(c.train.lr_drop_epochs, (std::vector<int>{3, 4}));
}

TEST(Config, BadInputIsAConfigError) {
  EXPECT_THROW(build_config({{"train.nonsense", "1"}}), ConfigError);
  EXPECT_THROW(build_config({{"train.epochs", "many"}}), ConfigError);
  EXPECT_THROW(build_config({{"train.gamma", "1.5"}}), ConfigError);
  EXPECT_THROW(build_config({{"run.scale", "huge"}}), ConfigError);
  EXPECT_THROW(build_config({{"benchmark.modes", "vo"}}), ConfigError);
}

TEST(Config, EchoCoversEveryKeyAndHashIgnoresWorkers) {
  const RunConfig c = build_config({});
  const std::string echo = c.echo();
  for (const auto& key : config_keys()) EXPECT_NE(echo.find(key + " = "), std::string::npos) << key;
  const RunConfig more = build_config({{"run.workers", "4"}});
  EXPECT_EQ(c.hash(), more.hash());
  EXPECT_EQ(c.hash().size(), 16u);
  EXPECT_NE(c.hash(), build_config({{"train.epochs", "31"}}).hash());
}

TEST(Config, EchoRoundTripsThroughAFile) {
  const RunConfig c = build_config({{"train.learning_rate", "0.0003"}, {"mpc.safety_margin", "0.1"}});
  const std::string path = write_ini("echo.ini", c.echo());
  const RunConfig back = build_config(read_config_file(path));
  EXPECT_EQ(back.echo(), c.echo());
  EXPECT_EQ(back.hash(), c.hash());
  std::filesystem::remove(path);
}

TEST(Config, IniSectionsMapToKeys) {
  const std::string path = write_ini("sections.ini", "[train]\nepochs = 4\n[data]\ncount = 12\n");
  const RunConfig c = build_config(read_config_file(path));
  EXPECT_EQ(c.train.epochs, 4);
  EXPECT_EQ(c.data_count, 12);
  std::filesystem::remove(path);
  EXPECT_THROW(read_config_file(path), IoError);
}
