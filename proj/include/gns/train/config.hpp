#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "gns/core/model.hpp"
#include "gns/graph/features.hpp"
#include "gns/tensor/adam.hpp"

namespace gns {

struct TrainConfig {
  std::size_t batch_size = 2;  // windows per worker per step
  std::size_t workers = 1;
  std::size_t steps = 5000;    // length of the learning-rate schedule
  double learning_rate = 1e-4;
  double final_learning_rate = 1e-6;
  double noise_std = 3e-4;     // position units
  std::size_t checkpoint_interval = 1000;  // 0: final checkpoint only
  std::uint64_t seed = 0;
  AdamHyper adam;              // learning_rate inside is overwritten every step
  ModelConfig model;
  GraphOptions graph;

  std::size_t global_batch() const { return batch_size * workers; }

  /// Throws ConfigError.
  void validate() const;
};

/// lr(s) = lr0 * (lr1 / lr0)^(s / steps), exponential decay from the initial
/// to the final rate over the schedule.
double learning_rate_at(const TrainConfig& config, std::size_t step);

nlohmann::json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace gns
