#pragma once

#include <cstddef>
#include <random>
#include <string_view>
#include <vector>

#include "gns/tensor/matrix.hpp"
#include "gns/tensor/tape.hpp"

namespace gns {

enum class Activation { relu, identity };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation activation);

struct LinearLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

/// Multi-layer perceptron: linear layers with `activation` between them and
/// an optional layer normalization (with learnable gain and bias) on the
/// final output.
struct MlpParams {
  std::vector<LinearLayer> layers;
  Activation activation = Activation::relu;
  bool layer_norm = false;
  Matrix norm_gain;  // 1 x out, present iff layer_norm
  Matrix norm_bias;  // 1 x out, present iff layer_norm

  /// `hidden_layers` hidden layers of width `hidden`, then the output layer.
  /// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the
  /// layer-norm gain starts at one and its bias at zero.
  static MlpParams create(std::size_t in, std::size_t hidden, std::size_t hidden_layers,
                          std::size_t out, bool layer_norm, std::mt19937_64& rng);

  std::size_t in_dim() const;
  std::size_t out_dim() const;

  /// Throws ShapeError if the layer chain or norm parameters are inconsistent.
  void validate() const;

  /// Every learnable matrix, in a fixed order.
  std::vector<Matrix*> tensors();
  std::vector<const Matrix*> tensors() const;
};

/// Forward pass recorded on `tape`; parameters are registered as leaves.
Var mlp_forward(const MlpParams& params, Var input, Tape& tape);

}  // namespace gns
