#include "gns/tensor/mlp.hpp"

#include <cmath>
#include <string>

#include "gns/errors.hpp"
#include "gns/tensor/ops.hpp"

namespace gns {

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation activation) {
  return activation == Activation::relu ? "relu" : "identity";
}

MlpParams MlpParams::create(std::size_t in, std::size_t hidden, std::size_t hidden_layers,
                            std::size_t out, bool layer_norm, std::mt19937_64& rng) {
  MlpParams p;
  p.layer_norm = layer_norm;
  std::size_t fan_in = in;
  for (std::size_t l = 0; l <= hidden_layers; ++l) {
    const std::size_t width = l == hidden_layers ? out : hidden;
    const double bound = fan_in == 0 ? 0.0 : 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    LinearLayer layer{Matrix(fan_in, width), Matrix(1, width)};
    for (double& w : layer.weight.values()) w = dist(rng);
    for (double& b : layer.bias.values()) b = dist(rng);
    p.layers.push_back(std::move(layer));
    fan_in = width;
  }
  if (layer_norm) {
    p.norm_gain = Matrix(1, out, 1.0);
    p.norm_bias = Matrix(1, out, 0.0);
  }
  return p;
}

std::size_t MlpParams::in_dim() const { return layers.empty() ? 0 : layers.front().weight.rows(); }

std::size_t MlpParams::out_dim() const {
  return layers.empty() ? 0 : layers.back().weight.cols();
}

void MlpParams::validate() const {
  if (layers.empty()) throw ShapeError("MLP has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LinearLayer& layer = layers[l];
    if (layer.bias.rows() != 1 || layer.bias.cols() != layer.weight.cols()) {
      throw ShapeError("MLP layer " + std::to_string(l) + ": bias " + layer.bias.shape_string() +
                       " does not match weight " + layer.weight.shape_string());
    }
    if (l > 0 && layers[l - 1].weight.cols() != layer.weight.rows()) {
      throw ShapeError("MLP layer " + std::to_string(l) + ": input width " +
                       std::to_string(layer.weight.rows()) + " does not chain with previous output " +
                       std::to_string(layers[l - 1].weight.cols()));
    }
  }
  if (layer_norm && (norm_gain.rows() != 1 || norm_gain.cols() != out_dim() ||
                     !norm_bias.same_shape(norm_gain))) {
    throw ShapeError("MLP layer-norm parameters do not match output width");
  }
}

std::vector<Matrix*> MlpParams::tensors() {
  std::vector<Matrix*> out;
  for (LinearLayer& layer : layers) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  if (layer_norm) {
    out.push_back(&norm_gain);
    out.push_back(&norm_bias);
  }
  return out;
}

std::vector<const Matrix*> MlpParams::tensors() const {
  std::vector<const Matrix*> out;
  for (Matrix* m : const_cast<MlpParams*>(this)->tensors()) out.push_back(m);
  return out;
}

Var mlp_forward(const MlpParams& params, Var input, Tape& tape) {
  params.validate();
  if (input.cols() != params.in_dim()) {
    throw ShapeError("mlp_forward: input width " + std::to_string(input.cols()) +
                     ", expected " + std::to_string(params.in_dim()));
  }
  Var h = input;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const LinearLayer& layer = params.layers[l];
    h = linear(h, tape.parameter(layer.weight), tape.parameter(layer.bias));
    if (l + 1 < params.layers.size() && params.activation == Activation::relu) h = relu(h);
  }
  if (params.layer_norm) {
    h = layer_norm(h, tape.parameter(params.norm_gain), tape.parameter(params.norm_bias));
  }
  return h;
}

}  // namespace gns
