// Drives the gns executable end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gns/dataset/metadata.hpp"
#include "gns/dataset/npz.hpp"
#include "gns/train/checkpoint.hpp"
#include "support/vtk_reader.hpp"

namespace gns {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("gns_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" GNS_CLI_PATH "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  // Small dataset plus a small model so a training run takes well under a second.
  void make_data(const std::string& name = "data", const std::string& extra = "") const {
    const Result r = run("generate --particles 16 --steps 30 --trajectories 5 --seed 7 --out " + name + " " + extra);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static std::string small_model() {
    return "--latent-size 16 --hidden-size 16 --message-passing-steps 2 --particle-types 2 "
           "--embedding-size 4 --no-eval ";
  }

  std::vector<std::vector<std::string>> csv(const std::string& run_dir) const {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(slurp(dir_ / run_dir / "loss.csv"));
    for (std::string line; std::getline(in, line);) {
      std::vector<std::string> cells;
      std::istringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
      rows.push_back(cells);
    }
    return rows;
  }

  fs::path dir_;
};

TEST_F(Cli, GenerateWritesFourFiles) {
  const Result r = run("generate --particles 64 --steps 40 --trajectories 10 --seed 7 --out data/");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"train.npz", "valid.npz", "test.npz", "metadata.json"}) {
    EXPECT_TRUE(fs::is_regular_file(dir_ / "data" / f)) << f;
  }
  EXPECT_EQ(read_metadata(dir_ / "data" / "metadata.json").dim, 2u);
  const auto j = r.json();
  EXPECT_EQ(j["trajectories"]["train"], 8);
  EXPECT_EQ(j["trajectories"]["valid"], 1);
  EXPECT_EQ(j["trajectories"]["test"], 1);
  EXPECT_EQ(read_npz(dir_ / "data" / "train.npz").size(), 8u);
}

TEST_F(Cli, GenerateIsDeterministic) {
  make_data("a");
  make_data("b");
  make_data("c", "--seed 8");
  for (const char* f : {"train.npz", "valid.npz", "test.npz", "metadata.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_NE(slurp(dir_ / "a" / "train.npz"), slurp(dir_ / "c" / "train.npz"));
}

TEST_F(Cli, DegenerateBoundsExitTwoNamingTheFlag) {
  Result r = run("generate --bounds 0.5,0.5,0.1,0.9 --out data");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--bounds"), std::string::npos) << r.err;
  r = run("generate --bounds 0.1,0.9 --out data");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--bounds"), std::string::npos) << r.err;
}

TEST_F(Cli, UnwritableOutputExitsTwo) {
  std::ofstream(dir_ / "file") << "x";
  const Result r = run("generate --particles 4 --steps 10 --trajectories 3 --out file/sub");
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, MissingDatasetExitsTwo) {
  EXPECT_EQ(run("train --data nowhere --steps 1").code, 2);
}

TEST_F(Cli, UnknownFlagExitsTwo) {
  EXPECT_EQ(run("train --data x --stepz 1").code, 2);
}

TEST_F(Cli, TrainWritesParseableAppendOnlyLog) {
  make_data();
  const Result r = run("train --data data --out run --steps 7 --checkpoint-interval 3 " + small_model());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv("run");
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"step", "loss", "seconds"}));
  double last_seconds = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), 3u);
    EXPECT_EQ(std::stoul(rows[i][0]), i);
    EXPECT_GT(std::stod(rows[i][1]), 0.0);
    EXPECT_GE(std::stod(rows[i][2]), last_seconds);
    last_seconds = std::stod(rows[i][2]);
  }
  for (const char* f : {"checkpoint-00000003.bin", "checkpoint-00000006.bin", "checkpoint-00000007.bin",
                        "latest.bin"}) {
    EXPECT_TRUE(fs::is_regular_file(dir_ / "run" / f)) << f;
  }
  EXPECT_EQ(r.json()["steps_completed"], 7);
}

TEST_F(Cli, ResumeReproducesLossColumnBitwise) {
  make_data();
  const std::string common = "--data data --steps 10 --checkpoint-interval 4 " + small_model();
  ASSERT_EQ(run("train " + common + "--out full").code, 0);
  ASSERT_EQ(run("train " + common + "--out split --stop-at 4").code, 0);
  const Result r = run("train --data data --out split --resume split/checkpoint-00000004.bin --no-eval");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto a = csv("full");
  const auto b = csv("split");
  ASSERT_EQ(a.size(), 11u);
  ASSERT_EQ(b.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i][0], b[i][0]);
    EXPECT_EQ(a[i][1], b[i][1]) << "step " << a[i][0];
  }
  Checkpoint full = load_checkpoint(dir_ / "full" / "latest.bin");
  Checkpoint split = load_checkpoint(dir_ / "split" / "latest.bin");
  EXPECT_EQ(full.step, split.step);
  const auto fa = full.params.tensors();
  const auto fb = split.params.tensors();
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_EQ(*fa[i], *fb[i]) << "tensor " << i;
}

TEST_F(Cli, WorkerCountDoesNotChangeTheLoss) {
  make_data();
  const std::string common = "--data data --steps 8 --checkpoint-interval 0 " + small_model();
  ASSERT_EQ(run("train " + common + "--out w1 --workers 1 --batch 4").code, 0);
  ASSERT_EQ(run("train " + common + "--out w2 --workers 2 --batch 2").code, 0);
  const auto a = csv("w1");
  const auto b = csv("w2");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 1; i < a.size(); ++i) {
    const double la = std::stod(a[i][1]);
    const double lb = std::stod(b[i][1]);
    EXPECT_LE(std::abs(la - lb), 1e-10 * std::abs(la)) << "step " << i;
  }
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  make_data();
  std::ofstream(dir_ / "flat.json") << R"({"data": "data", "steps": 5, "latent_size": 16, "hidden-size": 16,
    "message-passing-steps": 2, "particle-types": 2, "embedding-size": 4, "no-eval": true, "out": "flat"})";
  Result r = run("train --config flat.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv("flat").size(), 6u);

  r = run("train --config flat.json --steps 3 --out override");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv("override").size(), 4u);

  std::ofstream(dir_ / "sectioned.json") << R"({"train": {"data": "data", "steps": 2, "latent-size": 16,
    "hidden-size": 16, "message-passing-steps": 2, "particle-types": 2, "embedding-size": 4,
    "no-eval": true, "out": "sectioned"}})";
  r = run("train --config sectioned.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(csv("sectioned").size(), 3u);
}

TEST_F(Cli, ConfigFileRejectsUnknownKeysAndBadJson) {
  make_data();
  std::ofstream(dir_ / "unknown.json") << R"({"data": "data", "stepz": 5})";
  EXPECT_EQ(run("train --config unknown.json").code, 2);
  std::ofstream(dir_ / "broken.json") << "{\"data\": ";
  EXPECT_EQ(run("train --config broken.json").code, 2);
}

TEST_F(Cli, RolloutZeroStepsReturnsInputFrames) {
  make_data();
  ASSERT_EQ(run("train --data data --out run --steps 2 " + small_model()).code, 0);
  const Result r = run("rollout --data data --checkpoint run/latest.bin --steps 0 --out pred.npz");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_TRUE(j["per_step_mse"].empty());
  EXPECT_TRUE(j["final_step_mse"].is_null());
  const TrajectorySet pred = read_npz(dir_ / "pred.npz");
  const TrajectorySet truth = read_npz(dir_ / "data" / "test.npz");
  ASSERT_EQ(pred.size(), truth.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    ASSERT_EQ(pred[i].steps, 6u);
    for (std::size_t t = 0; t < 6; ++t) EXPECT_EQ(pred[i].frame(t), truth[i].frame(t));
  }
}

TEST_F(Cli, RolloutPredictionsHaveDeclaredShapeAndAreDeterministic) {
  make_data();
  ASSERT_EQ(run("train --data data --out run --steps 2 " + small_model()).code, 0);
  const Result r = run("rollout --data data --split valid --checkpoint run/latest.bin --steps 9 --out a.npz");
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(run("rollout --data data --split valid --checkpoint run/latest.bin --steps 9 --out b.npz").code, 0);
  EXPECT_EQ(slurp(dir_ / "a.npz"), slurp(dir_ / "b.npz"));
  const TrajectorySet pred = read_npz(dir_ / "a.npz");
  ASSERT_EQ(pred.size(), 1u);
  EXPECT_EQ(pred[0].steps, 6u + 9u);
  EXPECT_EQ(pred[0].particles, 16u);
  EXPECT_EQ(pred[0].dim, 2u);
  const auto j = r.json();
  EXPECT_EQ(j["steps"], 9);
  EXPECT_EQ(j["per_step_mse"].size(), 9u);
  for (const auto& e : j["per_step_mse"]) EXPECT_GE(e.get<double>(), 0.0);
}

TEST_F(Cli, OracleRolloutTracksGroundTruth) {
  make_data();
  const Result r = run("rollout --data data --oracle --out oracle.npz");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_EQ(j["steps"], 24);
  for (const auto& e : j["per_step_mse"]) EXPECT_LT(e.get<double>(), 1e-10);
}

TEST_F(Cli, RolloutErrorPaths) {
  make_data();
  make_data("data3", "--dim 3 --particles 8");
  ASSERT_EQ(run("train --data data --out run --steps 1 " + small_model()).code, 0);
  EXPECT_EQ(run("rollout --data data3 --checkpoint run/latest.bin --out p.npz").code, 3);
  EXPECT_EQ(run("rollout --data data --checkpoint run/latest.bin --steps 25 --out p.npz").code, 2);
  EXPECT_EQ(run("rollout --data data --checkpoint missing.bin --out p.npz").code, 2);
  EXPECT_EQ(run("rollout --data data --out p.npz").code, 2);
  std::ofstream(dir_ / "garbage.bin") << "not a checkpoint";
  EXPECT_EQ(run("rollout --data data --checkpoint garbage.bin --out p.npz").code, 2);
}

TEST_F(Cli, ExportVtkMatchesTrajectory) {
  make_data();
  const Result r = run("export-vtk --input data/test.npz --out frames --prefix p");
  ASSERT_EQ(r.code, 0) << r.err;
  const TrajectorySet set = read_npz(dir_ / "data" / "test.npz");
  const Trajectory& t = set[0];
  EXPECT_EQ(r.json()["frames"], t.steps);
  for (std::size_t f = 0; f < t.steps; f += 7) {
    char name[32];
    std::snprintf(name, sizeof name, "p_%04zu.vtk", f);
    const auto parsed = testing::read_vtk_file((dir_ / "frames" / name).string());
    ASSERT_EQ(parsed.points.size(), 3 * t.particles);
    for (std::size_t p = 0; p < t.particles; ++p) {
      EXPECT_EQ(parsed.points[3 * p], t.at(f, p, 0));
      EXPECT_EQ(parsed.points[3 * p + 1], t.at(f, p, 1));
      EXPECT_EQ(parsed.points[3 * p + 2], 0.0);
    }
    EXPECT_EQ(parsed.particle_type, t.types);
  }
  EXPECT_EQ(run("export-vtk --input data/test.npz --out frames --trajectory 5").code, 2);
}

TEST_F(Cli, GradcheckPasses) {
  const Result r = run("gradcheck --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = r.json();
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_LT(j["max_relative_error"].get<double>(), 1e-4);
  EXPECT_EQ(run("gradcheck --tolerance 0").code, 1);
}

TEST_F(Cli, HelpExitsZero) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("train --help").code, 0);
}

}  // namespace
}  // namespace gns
