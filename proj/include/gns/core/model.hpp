#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "gns/graph/features.hpp"
#include "gns/tensor/mlp.hpp"
#include "gns/tensor/tape.hpp"

namespace gns {

struct ModelConfig {
  std::size_t dim = 2;
  std::size_t input_sequence_length = 6;
  std::size_t latent_size = 128;
  std::size_t mlp_hidden_size = 128;
  std::size_t mlp_hidden_layers = 2;
  std::size_t message_passing_steps = 10;
  std::size_t particle_types = 9;
  std::size_t embedding_size = 16;
  std::size_t global_size = 0;
  bool residual = true;
  bool layer_norm = true;
  bool share_processor_weights = false;

  std::size_t kinematic_width() const { return (input_sequence_length - 1) * dim + 2 * dim; }
  std::size_t node_input_width() const { return kinematic_width() + embedding_size; }
  std::size_t edge_input_width() const { return dim + 1; }

  /// Throws ConfigError.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

nlohmann::json to_json(const ModelConfig& config);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j);

struct ProcessorStep {
  MlpParams edge;  // phi^e
  MlpParams node;  // phi^v
};

struct ModelParams {
  ModelConfig config;
  MlpParams node_encoder;
  MlpParams edge_encoder;
  std::vector<ProcessorStep> processor;  // one entry when weights are shared
  MlpParams decoder;
  Matrix embedding;  // particle_types x embedding_size

  static ModelParams create(const ModelConfig& config, std::uint64_t seed);

  /// Processor parameters used at message-passing step `m`.
  const ProcessorStep& step(std::size_t m) const;

  /// Throws ShapeError if any dimension chain disagrees with `config`.
  void validate() const;

  /// Every learnable matrix in a fixed order: node encoder, edge encoder,
  /// processor steps (edge then node), decoder, embedding.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
  std::size_t parameter_count() const;
};

struct LatentGraph {
  Var nodes;  // n x latent
  Var edges;  // E x latent
  std::span<const std::size_t> senders;
  std::span<const std::size_t> receivers;
};

LatentGraph encode(const EncodedGraph& g, const ModelParams& params, Tape& tape);

/// `global` is an invalid Var when the model has no global features.
LatentGraph process_step(const LatentGraph& lg, const ProcessorStep& step, Var global,
                         bool residual, Tape& tape);

Var decode(const LatentGraph& lg, const ModelParams& params, Tape& tape);

/// Full forward pass to normalized accelerations. `steps` defaults to the
/// configured number of message-passing steps; 0 skips the processor.
Var predict(const EncodedGraph& g, const ModelParams& params, Tape& tape,
            std::optional<std::size_t> steps = std::nullopt);

/// Forward pass without keeping the tape.
Matrix predict_value(const EncodedGraph& g, const ModelParams& params);

}  // namespace gns
