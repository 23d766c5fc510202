#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "gns/dataset/reference_sim.hpp"
#include "gns/errors.hpp"
#include "gns/train/config.hpp"

namespace gns {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,   // runtime failure (e.g. rollout diverged, gradcheck failed)
  kExitBadInput = 2,  // invalid flags, missing or unwritable files, malformed data
  kExitMismatch = 3,  // checkpoint does not fit the dataset
};

/// Invalid value for a specific command-line flag.
class UsageError : public Error {
 public:
  UsageError(const std::string& flag, const std::string& what)
      : Error("invalid " + flag + ": " + what), flag_(flag) {}
  const std::string& flag() const noexcept { return flag_; }

 private:
  std::string flag_;
};

/// A checkpoint's model does not fit the dataset it is applied to.
class ModelMismatchError : public Error {
 public:
  using Error::Error;
};

/// Maps an exception thrown by a command to its exit code.
int exit_code_for(const std::exception& e);

struct DatasetPaths {
  std::filesystem::path directory;
  std::filesystem::path metadata() const { return directory / "metadata.json"; }
  std::filesystem::path split(const std::string& name) const { return directory / (name + ".npz"); }
};

struct GenerateOptions {
  GeneratorConfig generator;  // generator.trajectories is the total count
  std::uint64_t seed = 0;
  std::filesystem::path out;
  double valid_fraction = 0.1;
  double test_fraction = 0.1;
};

/// Simulates, splits by trajectory (train first, then valid, then test) and
/// writes train/valid/test.npz plus metadata.json, whose statistics come
/// from the training split. Returns a JSON summary.
nlohmann::json run_generate(const GenerateOptions& options, std::ostream& log);

struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path out = "run";
  TrainConfig config;
  std::optional<std::filesystem::path> resume;
  std::optional<std::uint64_t> stop_at;
  std::size_t eval_windows = 0;  // 0: every validation window
  bool evaluate = true;
  std::size_t log_every = 100;   // progress lines on the log stream
};

/// Trains (or resumes) and appends `step,loss,seconds` rows to
/// <out>/loss.csv. Rows are flushed right before each checkpoint is saved,
/// so the log never runs ahead of the newest checkpoint. Checkpoints go to
/// <out>/checkpoint-<step>.bin and <out>/latest.bin.
nlohmann::json run_train(const TrainOptions& options, std::ostream& log);

struct RolloutOptions {
  std::filesystem::path data;
  std::filesystem::path checkpoint;  // unused with `oracle`
  std::filesystem::path out;         // predictions npz
  std::string split = "test";
  std::optional<std::size_t> steps;  // default: as many as the ground truth allows
  std::optional<std::size_t> max_trajectories;
  bool oracle = false;               // feed ground-truth accelerations instead of the model
};

/// Rolls out every selected trajectory from its first frames, writes the
/// predicted trajectories as npz and returns the RolloutReport JSON.
nlohmann::json run_rollout(const RolloutOptions& options, std::ostream& log);

struct ExportVtkOptions {
  std::filesystem::path input;  // dataset split or predictions npz
  std::filesystem::path out;
  std::size_t trajectory = 0;
  std::string prefix = "frame";
};

nlohmann::json run_export_vtk(const ExportVtkOptions& options, std::ostream& log);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t particles = 5;
  ModelConfig model = [] {
    ModelConfig c;
    c.latent_size = 16;
    c.mlp_hidden_size = 16;
    c.message_passing_steps = 2;
    c.particle_types = 3;
    c.embedding_size = 4;
    return c;
  }();
  double step = 1e-5;
  double tolerance = 1e-4;
};

/// Central finite differences against reverse-mode gradients for every
/// parameter of a small random model on a small random graph.
nlohmann::json run_gradcheck(const GradcheckOptions& options, std::ostream& log);

}  // namespace gns
