#include "gns/core/model.hpp"

#include <random>
#include <string>

#include "gns/errors.hpp"
#include "gns/tensor/ops.hpp"

namespace gns {

void ModelConfig::validate() const {
  if (dim < 1 || dim > 3) throw ConfigError("model dim must be 1, 2 or 3");
  if (input_sequence_length < 2) throw ConfigError("input_sequence_length must be at least 2");
  if (latent_size == 0) throw ConfigError("latent_size must be positive");
  if (mlp_hidden_size == 0) throw ConfigError("mlp_hidden_size must be positive");
  if (message_passing_steps == 0) throw ConfigError("message_passing_steps must be at least 1");
  if (particle_types == 0) throw ConfigError("particle_types must be positive");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"dim", c.dim},
          {"input_sequence_length", c.input_sequence_length},
          {"latent_size", c.latent_size},
          {"mlp_hidden_size", c.mlp_hidden_size},
          {"mlp_hidden_layers", c.mlp_hidden_layers},
          {"message_passing_steps", c.message_passing_steps},
          {"particle_types", c.particle_types},
          {"embedding_size", c.embedding_size},
          {"global_size", c.global_size},
          {"residual", c.residual},
          {"layer_norm", c.layer_norm},
          {"share_processor_weights", c.share_processor_weights}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "dim") c.dim = value.get<std::size_t>();
      else if (key == "input_sequence_length") c.input_sequence_length = value.get<std::size_t>();
      else if (key == "latent_size") c.latent_size = value.get<std::size_t>();
      else if (key == "mlp_hidden_size") c.mlp_hidden_size = value.get<std::size_t>();
      else if (key == "mlp_hidden_layers") c.mlp_hidden_layers = value.get<std::size_t>();
      else if (key == "message_passing_steps") c.message_passing_steps = value.get<std::size_t>();
      else if (key == "particle_types") c.particle_types = value.get<std::size_t>();
      else if (key == "embedding_size") c.embedding_size = value.get<std::size_t>();
      else if (key == "global_size") c.global_size = value.get<std::size_t>();
      else if (key == "residual") c.residual = value.get<bool>();
      else if (key == "layer_norm") c.layer_norm = value.get<bool>();
      else if (key == "share_processor_weights") c.share_processor_weights = value.get<bool>();
      else throw ConfigError("unknown model setting '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelParams ModelParams::create(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  std::mt19937_64 rng(seed);
  const std::size_t L = c.latent_size;
  const std::size_t H = c.mlp_hidden_size;
  const std::size_t depth = c.mlp_hidden_layers;
  ModelParams p;
  p.config = c;
  p.node_encoder = MlpParams::create(c.node_input_width(), H, depth, L, c.layer_norm, rng);
  p.edge_encoder = MlpParams::create(c.edge_input_width(), H, depth, L, c.layer_norm, rng);
  const std::size_t blocks = c.share_processor_weights ? 1 : c.message_passing_steps;
  for (std::size_t m = 0; m < blocks; ++m) {
    ProcessorStep s;
    s.edge = MlpParams::create(3 * L + c.global_size, H, depth, L, c.layer_norm, rng);
    s.node = MlpParams::create(2 * L + c.global_size, H, depth, L, c.layer_norm, rng);
    p.processor.push_back(std::move(s));
  }
  p.decoder = MlpParams::create(L, H, depth, c.dim, false, rng);
  p.embedding = Matrix(c.particle_types, c.embedding_size);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : p.embedding.values()) v = normal(rng);
  return p;
}

const ProcessorStep& ModelParams::step(std::size_t m) const {
  if (processor.empty()) throw ShapeError("model has no processor parameters");
  return config.share_processor_weights ? processor.front() : processor.at(m);
}

namespace {

void expect_mlp(const MlpParams& mlp, std::size_t in, std::size_t out, const std::string& name) {
  mlp.validate();
  if (mlp.in_dim() != in || mlp.out_dim() != out) {
    throw ShapeError(name + ": maps " + std::to_string(mlp.in_dim()) + " -> " +
                     std::to_string(mlp.out_dim()) + ", expected " + std::to_string(in) + " -> " +
                     std::to_string(out));
  }
}

}  // namespace

void ModelParams::validate() const {
  const ModelConfig& c = config;
  c.validate();
  const std::size_t L = c.latent_size;
  expect_mlp(node_encoder, c.node_input_width(), L, "node encoder");
  expect_mlp(edge_encoder, c.edge_input_width(), L, "edge encoder");
  const std::size_t blocks = c.share_processor_weights ? 1 : c.message_passing_steps;
  if (processor.size() != blocks) {
    throw ShapeError("processor has " + std::to_string(processor.size()) + " blocks, expected " +
                     std::to_string(blocks));
  }
  for (std::size_t m = 0; m < processor.size(); ++m) {
    expect_mlp(processor[m].edge, 3 * L + c.global_size, L, "processor edge MLP " + std::to_string(m));
    expect_mlp(processor[m].node, 2 * L + c.global_size, L, "processor node MLP " + std::to_string(m));
  }
  expect_mlp(decoder, L, c.dim, "decoder");
  if (decoder.layer_norm) throw ShapeError("decoder must not use layer normalization");
  if (embedding.rows() != c.particle_types || embedding.cols() != c.embedding_size) {
    throw ShapeError("type embedding is " + embedding.shape_string() + ", expected " +
                     std::to_string(c.particle_types) + "x" + std::to_string(c.embedding_size));
  }
}

std::vector<Matrix*> ModelParams::tensors() {
  std::vector<Matrix*> out;
  auto append = [&out](MlpParams& mlp) {
    for (Matrix* m : mlp.tensors()) out.push_back(m);
  };
  append(node_encoder);
  append(edge_encoder);
  for (ProcessorStep& s : processor) {
    append(s.edge);
    append(s.node);
  }
  append(decoder);
  out.push_back(&embedding);
  return out;
}

std::vector<const Matrix*> ModelParams::tensors() const {
  std::vector<const Matrix*> out;
  for (Matrix* m : const_cast<ModelParams*>(this)->tensors()) out.push_back(m);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* m : tensors()) n += m->size();
  return n;
}

LatentGraph encode(const EncodedGraph& g, const ModelParams& params, Tape& tape) {
  const ModelConfig& c = params.config;
  const std::size_t n = g.node_count();
  if (g.node_features.cols() != c.kinematic_width()) {
    throw ShapeError("encode: node features are " + g.node_features.shape_string() +
                     ", model expects width " + std::to_string(c.kinematic_width()));
  }
  if (g.edge_features.cols() != c.edge_input_width() || g.edge_features.rows() != g.edge_count()) {
    throw ShapeError("encode: edge features are " + g.edge_features.shape_string() +
                     ", model expects width " + std::to_string(c.edge_input_width()));
  }
  if (g.types.size() != n || g.receivers.size() != g.senders.size()) {
    throw ShapeError("encode: graph arrays disagree on particle or edge count");
  }
  std::vector<std::size_t> type_rows(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (g.types[p] < 0 || static_cast<std::size_t>(g.types[p]) >= c.particle_types) {
      throw IndexError("encode: particle type " + std::to_string(g.types[p]) +
                       " outside the embedding table of " + std::to_string(c.particle_types));
    }
    type_rows[p] = static_cast<std::size_t>(g.types[p]);
  }
  const Var kinematic = tape.constant(g.node_features);
  const Var embedded = gather_rows(tape.parameter(params.embedding), type_rows);
  const Var node_in[] = {kinematic, embedded};
  LatentGraph lg;
  lg.nodes = mlp_forward(params.node_encoder, concat_cols(node_in), tape);
  lg.edges = mlp_forward(params.edge_encoder, tape.constant(g.edge_features), tape);
  lg.senders = g.senders;
  lg.receivers = g.receivers;
  return lg;
}

LatentGraph process_step(const LatentGraph& lg, const ProcessorStep& step, Var global,
                         bool residual, Tape& tape) {
  const std::size_t n = lg.nodes.rows();
  const std::size_t edges = lg.senders.size();
  if (lg.edges.rows() != edges || lg.receivers.size() != edges) {
    throw ShapeError("process_step: edge latents do not match connectivity");
  }
  std::vector<Var> edge_in = {lg.edges, gather_rows(lg.nodes, lg.receivers),
                              gather_rows(lg.nodes, lg.senders)};
  if (global.valid()) edge_in.push_back(tile_rows(global, edges));
  Var e = mlp_forward(step.edge, concat_cols(edge_in), tape);
  if (residual) e = add(lg.edges, e);

  const Var aggregated = scatter_sum(e, lg.receivers, n);
  std::vector<Var> node_in = {aggregated, lg.nodes};
  if (global.valid()) node_in.push_back(tile_rows(global, n));
  Var v = mlp_forward(step.node, concat_cols(node_in), tape);
  if (residual) v = add(lg.nodes, v);

  LatentGraph out = lg;
  out.nodes = v;
  out.edges = e;
  return out;
}

Var decode(const LatentGraph& lg, const ModelParams& params, Tape& tape) {
  return mlp_forward(params.decoder, lg.nodes, tape);
}

Var predict(const EncodedGraph& g, const ModelParams& params, Tape& tape,
            std::optional<std::size_t> steps) {
  const ModelConfig& c = params.config;
  Var global;
  if (c.global_size > 0) {
    if (g.global.rows() != 1 || g.global.cols() != c.global_size) {
      throw ShapeError("predict: global features are " + g.global.shape_string() + ", expected 1x" +
                       std::to_string(c.global_size));
    }
    global = tape.constant(g.global);
  } else if (!g.global.empty()) {
    throw ShapeError("predict: graph carries global features but the model takes none");
  }
  const std::size_t m_steps = steps.value_or(c.message_passing_steps);
  if (m_steps > c.message_passing_steps) {
    throw ContractError("predict: " + std::to_string(m_steps) + " steps requested, model has " +
                        std::to_string(c.message_passing_steps));
  }
  LatentGraph lg = encode(g, params, tape);
  for (std::size_t m = 0; m < m_steps; ++m) {
    lg = process_step(lg, params.step(m), global, c.residual, tape);
  }
  return decode(lg, params, tape);
}

Matrix predict_value(const EncodedGraph& g, const ModelParams& params) {
  Tape tape;
  return predict(g, params, tape).value();
}

}  // namespace gns
