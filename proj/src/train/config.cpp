#include "gns/train/config.hpp"

#include <cmath>
#include <string>

#include "gns/errors.hpp"

namespace gns {

void TrainConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (!(learning_rate > 0.0) || !(final_learning_rate > 0.0)) {
    throw ConfigError("learning rates must be positive");
  }
  if (!(noise_std >= 0.0)) throw ConfigError("noise_std must be non-negative");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (graph.radius < 0.0) throw ConfigError("connectivity radius override must be non-negative");
  model.validate();
}

double learning_rate_at(const TrainConfig& config, std::size_t step) {
  const double fraction = static_cast<double>(step) / static_cast<double>(config.steps);
  return config.learning_rate *
         std::pow(config.final_learning_rate / config.learning_rate, fraction);
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"workers", c.workers},
          {"steps", c.steps},
          {"learning_rate", c.learning_rate},
          {"final_learning_rate", c.final_learning_rate},
          {"noise_std", c.noise_std},
          {"checkpoint_interval", c.checkpoint_interval},
          {"seed", c.seed},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
          {"model", to_json(c.model)},
          {"graph", {{"radius", c.graph.radius}, {"self_edges", c.graph.self_edges}}}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("training config must be a JSON object");
  TrainConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "workers") c.workers = value.get<std::size_t>();
      else if (key == "steps") c.steps = value.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "final_learning_rate") c.final_learning_rate = value.get<double>();
      else if (key == "noise_std") c.noise_std = value.get<double>();
      else if (key == "checkpoint_interval") c.checkpoint_interval = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "model") c.model = model_config_from_json(value);
      else if (key == "adam") {
        for (const auto& [k, v] : value.items()) {
          if (k == "beta1") c.adam.beta1 = v.get<double>();
          else if (k == "beta2") c.adam.beta2 = v.get<double>();
          else if (k == "epsilon") c.adam.epsilon = v.get<double>();
          else throw ConfigError("unknown Adam setting '" + k + "'");
        }
      } else if (key == "graph") {
        for (const auto& [k, v] : value.items()) {
          if (k == "radius") c.graph.radius = v.get<double>();
          else if (k == "self_edges") c.graph.self_edges = v.get<bool>();
          else throw ConfigError("unknown graph setting '" + k + "'");
        }
      } else {
        throw ConfigError("unknown training setting '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace gns
