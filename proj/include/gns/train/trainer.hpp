#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "gns/dataset/metadata.hpp"
#include "gns/dataset/trajectory.hpp"
#include "gns/dataset/windows.hpp"
#include "gns/train/checkpoint.hpp"
#include "gns/train/config.hpp"
#include "gns/train/objective.hpp"
#include "gns/train/sampler.hpp"

namespace gns {

struct StepRecord {
  std::uint64_t step = 0;  // 1-based index of the completed step
  double loss = 0.0;       // pre-update global batch loss
  double learning_rate = 0.0;
  double seconds = 0.0;    // cumulative training wall clock
};

/// Data-parallel trainer with in-process workers.
///
/// Every step draws one global batch from the sampler. Worker w computes the
/// mean gradient over its slice of the batch on its own thread and private
/// tapes; after all workers join, their gradients are summed in worker order
/// and divided by the worker count, and a single Adam update is applied to
/// the one shared parameter set. Each window's training noise comes from a
/// generator seeded by (seed, global slot index), so the result does not
/// depend on which worker handled the window.
class Trainer {
 public:
  Trainer(TrainConfig config, const TrajectorySet& data, const Metadata& meta);
  /// Resumes from `checkpoint`, whose configuration is used. Throws
  /// CheckpointError if the dataset fingerprint differs.
  Trainer(Checkpoint checkpoint, const TrajectorySet& data, const Metadata& meta);

  StepRecord step();

  /// Steps until `until` (default: the configured schedule length), calling
  /// `on_step` after every step and `on_checkpoint` at each interval and at
  /// the end.
  void run(const std::function<void(const StepRecord&)>& on_step,
           const std::function<void(const Checkpoint&)>& on_checkpoint,
           std::optional<std::uint64_t> until = std::nullopt);

  Checkpoint checkpoint() const;

  std::uint64_t completed_steps() const { return step_; }
  const ModelParams& params() const { return params_; }
  const TrainConfig& config() const { return config_; }
  std::size_t window_count() const { return windows_.size(); }

 private:
  TrainingWindow prepared_window(std::size_t window, std::uint64_t slot) const;

  TrainConfig config_;
  const TrajectorySet* data_;
  Metadata meta_;
  std::vector<WindowIndex> windows_;
  std::uint64_t fingerprint_;
  ModelParams params_;
  AdamState optimizer_;
  WindowSampler sampler_;
  std::uint64_t step_ = 0;
  double elapsed_ = 0.0;
};

/// Trains from scratch for `config.steps` steps and returns the final
/// checkpoint; intermediate checkpoints go to `on_checkpoint`.
Checkpoint ddp_train(const TrajectorySet& data, const Metadata& meta, const TrainConfig& config,
                     const std::function<void(const StepRecord&)>& on_step = {},
                     const std::function<void(const Checkpoint&)>& on_checkpoint = {});

}  // namespace gns
