// gns: dataset generation, training, rollout and VTK export.
//
// Reports go to stdout as JSON, progress to stderr. Every subcommand also
// reads `--config <file.json>`; explicit flags win over the file.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gns/app/commands.hpp"

namespace {

const std::vector<std::string> kSubcommands = {"generate", "train", "rollout", "export-vtk", "gradcheck"};

// JSON config reader. Objects become sections, arrays become multi-value
// inputs. A file without a top-level subcommand key applies to the one
// being invoked.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ParseError(std::string("config file is not valid JSON: ") + e.what(),
                            CLI::ExitCodes::ConfigError);
    }
    if (!j.is_object()) {
      throw CLI::ParseError("config file must hold a JSON object", CLI::ExitCodes::ConfigError);
    }
    const bool sectioned = std::any_of(kSubcommands.begin(), kSubcommands.end(),
                                       [&](const std::string& s) { return j.contains(s); });
    std::vector<CLI::ConfigItem> items;
    if (sectioned || subcommand_.empty()) {
      flatten(j, {}, items);
    } else {
      flatten(j, {subcommand_}, items);
    }
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ParseError("config values must be strings, numbers, booleans or arrays of those",
                          CLI::ExitCodes::ConfigError);
  }

  static void flatten(const nlohmann::json& object, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : object.items()) {
      std::string name = key;
      std::replace(name.begin(), name.end(), '_', '-');
      if (value.is_object()) {
        auto nested = parents;
        nested.push_back(name);
        flatten(value, nested, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = name;
      if (value.is_array()) {
        for (const auto& element : value) item.inputs.push_back(scalar(element));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }

  std::string subcommand_;
};

std::string detect_subcommand(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (std::find(kSubcommands.begin(), kSubcommands.end(), a) != kSubcommands.end()) return a;
  }
  return {};
}

std::vector<std::pair<double, double>> pair_up(const std::vector<double>& flat) {
  if (flat.size() % 2 != 0) throw gns::UsageError("--bounds", "expected low,high pairs, got an odd count");
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < flat.size(); i += 2) out.emplace_back(flat[i], flat[i + 1]);
  return out;
}

void add_model_flags(CLI::App* sub, gns::ModelConfig& m) {
  sub->add_option("--latent-size", m.latent_size, "Latent width of nodes and edges")->capture_default_str();
  sub->add_option("--hidden-size", m.mlp_hidden_size, "Hidden width of every MLP")->capture_default_str();
  sub->add_option("--hidden-layers", m.mlp_hidden_layers, "Hidden layers per MLP")->capture_default_str();
  sub->add_option("--message-passing-steps", m.message_passing_steps, "Processor steps M")->capture_default_str();
  sub->add_option("--particle-types", m.particle_types, "Rows of the type embedding")->capture_default_str();
  sub->add_option("--embedding-size", m.embedding_size, "Width of the type embedding")->capture_default_str();
  sub->add_option("--global-size", m.global_size, "Width of the global feature (0: none)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Particle dynamics with a learned graph network simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.config_formatter(std::make_shared<JsonConfig>(detect_subcommand(argc, argv)));
  app.set_config("--config", "", "JSON file mirroring the flags; explicit flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);

  // generate
  gns::GenerateOptions gen;
  std::vector<double> gen_bounds;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "Simulate a reference dataset and split it");
  generate->add_option("--particles", gen.generator.particles, "Particles per trajectory")->capture_default_str();
  generate->add_option("--steps", gen.generator.steps, "Frames per trajectory")->capture_default_str();
  generate->add_option("--trajectories", gen.generator.trajectories, "Total trajectories")->capture_default_str();
  generate->add_option("--dim", gen.generator.dim, "Spatial dimension")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_option("--dt", gen.generator.dt, "Time step")->capture_default_str();
  generate->add_option("--gravity", gen.generator.gravity, "Acceleration along the last axis")->capture_default_str();
  generate->add_option("--restitution", gen.generator.restitution, "Wall restitution")->capture_default_str();
  generate->add_option("--stiffness", gen.generator.stiffness, "Pair repulsion stiffness")->capture_default_str();
  generate->add_option("--repulsion-range", gen.generator.repulsion_range, "Pair repulsion range")
      ->capture_default_str();
  generate->add_option("--radius", gen.generator.connectivity_radius, "Connectivity radius written to metadata")
      ->capture_default_str();
  generate->add_option("--lattice-spacing", gen.generator.lattice_spacing, "Initial lattice spacing")
      ->capture_default_str();
  generate->add_option("--lattice-jitter", gen.generator.lattice_jitter, "Jitter as a fraction of the spacing")
      ->capture_default_str();
  generate->add_option("--initial-speed", gen.generator.initial_speed, "Initial speed scale")->capture_default_str();
  generate->add_option("--bounds", gen_bounds, "low,high per axis (default 0.1,0.9 each)")->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  generate->add_option("--valid-fraction", gen.valid_fraction, "Share of trajectories for valid.npz")
      ->capture_default_str();
  generate->add_option("--test-fraction", gen.test_fraction, "Share of trajectories for test.npz")
      ->capture_default_str();

  // train
  gns::TrainOptions tr;
  std::string tr_data, tr_out = tr.out.string(), tr_resume;
  std::uint64_t tr_stop = 0;
  bool tr_no_eval = false, tr_no_layer_norm = false, tr_no_residual = false;
  auto* train = app.add_subcommand("train", "Train a model (data-parallel across workers)");
  train->add_option("--data", tr_data, "Dataset directory")->required();
  train->add_option("--out", tr_out, "Run directory for checkpoints and loss.csv")->capture_default_str();
  train->add_option("--steps", tr.config.steps, "Total optimizer steps")->capture_default_str();
  train->add_option("--workers", tr.config.workers, "Data-parallel workers")->capture_default_str();
  train->add_option("--batch", tr.config.batch_size, "Windows per worker per step")->capture_default_str();
  train->add_option("--lr", tr.config.learning_rate, "Initial learning rate")->capture_default_str();
  train->add_option("--final-lr", tr.config.final_learning_rate, "Learning rate at the last step")
      ->capture_default_str();
  train->add_option("--noise-std", tr.config.noise_std, "Input noise std")->capture_default_str();
  train->add_option("--checkpoint-interval", tr.config.checkpoint_interval, "Steps between checkpoints (0: end only)")
      ->capture_default_str();
  train->add_option("--seed", tr.config.seed, "Random seed")->capture_default_str();
  train->add_option("--beta1", tr.config.adam.beta1, "Adam beta1")->capture_default_str();
  train->add_option("--beta2", tr.config.adam.beta2, "Adam beta2")->capture_default_str();
  train->add_option("--epsilon", tr.config.adam.epsilon, "Adam epsilon")->capture_default_str();
  train->add_option("--radius", tr.config.graph.radius, "Connectivity radius override (0: from metadata)")
      ->capture_default_str();
  train->add_flag("--self-edges", tr.config.graph.self_edges, "Connect every particle to itself");
  add_model_flags(train, tr.config.model);
  train->add_flag("--no-layer-norm", tr_no_layer_norm, "Disable layer norm");
  train->add_flag("--no-residual", tr_no_residual, "Disable residual updates");
  train->add_flag("--share-processor", tr.config.model.share_processor_weights, "One set of processor weights");
  auto* resume_opt = train->add_option("--resume", tr_resume, "Continue from this checkpoint");
  auto* stop_opt = train->add_option("--stop-at", tr_stop, "Stop after this many completed steps");
  train->add_option("--eval-windows", tr.eval_windows, "Validation windows (0: all)")->capture_default_str();
  train->add_flag("--no-eval", tr_no_eval, "Skip the validation pass");
  train->add_option("--log-every", tr.log_every, "Progress line interval")->capture_default_str();

  // rollout
  gns::RolloutOptions ro;
  std::string ro_data, ro_ckpt, ro_out;
  std::size_t ro_steps = 0, ro_max = 0;
  auto* rollout = app.add_subcommand("rollout", "Roll out a trained model from the first frames");
  rollout->add_option("--data", ro_data, "Dataset directory")->required();
  auto* ckpt_opt = rollout->add_option("--checkpoint", ro_ckpt, "Trained checkpoint");
  rollout->add_option("--out", ro_out, "Predictions npz")->required();
  rollout->add_option("--split", ro.split, "Split to roll out")->capture_default_str();
  auto* ro_steps_opt = rollout->add_option("--steps", ro_steps, "Rollout steps K (default: all available)");
  auto* ro_max_opt = rollout->add_option("--max-trajectories", ro_max, "Limit the number of trajectories");
  rollout->add_flag("--oracle", ro.oracle, "Use ground-truth accelerations instead of a model");

  // export-vtk
  gns::ExportVtkOptions vx;
  std::string vx_in, vx_out;
  auto* export_vtk = app.add_subcommand("export-vtk", "Write one legacy VTK file per frame");
  export_vtk->add_option("--input", vx_in, "Trajectory npz (dataset split or predictions)")->required();
  export_vtk->add_option("--out", vx_out, "Output directory")->required();
  export_vtk->add_option("--trajectory", vx.trajectory, "Trajectory index")->capture_default_str();
  export_vtk->add_option("--prefix", vx.prefix, "File name prefix")->capture_default_str();

  // gradcheck
  gns::GradcheckOptions gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every parameter gradient");
  gradcheck->add_option("--seed", gc.seed, "Random seed")->capture_default_str();
  gradcheck->add_option("--particles", gc.particles, "Particles in the random graph")->capture_default_str();
  gradcheck->add_option("--dim", gc.model.dim, "Spatial dimension")->capture_default_str();
  gradcheck->add_option("--fd-step", gc.step, "Central difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error")->capture_default_str();
  add_model_flags(gradcheck, gc.model);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? gns::kExitOk : gns::kExitBadInput;
  }

  try {
    nlohmann::json report;
    if (*generate) {
      gen.out = gen_out;
      if (!gen_bounds.empty()) gen.generator.bounds = pair_up(gen_bounds);
      else gen.generator.bounds.assign(gen.generator.dim, {0.1, 0.9});
      report = gns::run_generate(gen, std::cerr);
    } else if (*train) {
      tr.data = tr_data;
      tr.out = tr_out;
      if (*resume_opt) tr.resume = tr_resume;
      if (*stop_opt) tr.stop_at = tr_stop;
      tr.evaluate = !tr_no_eval;
      tr.config.model.layer_norm = !tr_no_layer_norm;
      tr.config.model.residual = !tr_no_residual;
      tr.config.adam.learning_rate = tr.config.learning_rate;
      report = gns::run_train(tr, std::cerr);
    } else if (*rollout) {
      ro.data = ro_data;
      ro.out = ro_out;
      if (!ro.oracle && !*ckpt_opt) throw gns::UsageError("--checkpoint", "required unless --oracle is given");
      ro.checkpoint = ro_ckpt;
      if (*ro_steps_opt) ro.steps = ro_steps;
      if (*ro_max_opt) ro.max_trajectories = ro_max;
      report = gns::run_rollout(ro, std::cerr);
    } else if (*export_vtk) {
      vx.input = vx_in;
      vx.out = vx_out;
      report = gns::run_export_vtk(vx, std::cerr);
    } else if (*gradcheck) {
      report = gns::run_gradcheck(gc, std::cerr);
    }
    std::cout << report.dump(2) << std::endl;
    if (report.contains("passed") && !report["passed"].get<bool>()) return gns::kExitFailure;
    return gns::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gns::exit_code_for(e);
  }
}
