#include "gns/app/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "gns/app/report.hpp"
#include "gns/app/vtk.hpp"
#include "gns/core/rollout.hpp"
#include "gns/dataset/npz.hpp"
#include "gns/dataset/statistics.hpp"
#include "gns/tensor/ops.hpp"
#include "gns/train/checkpoint.hpp"
#include "gns/train/evaluate.hpp"
#include "gns/train/trainer.hpp"

namespace gns {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ModelMismatchError*>(&e)) return kExitMismatch;
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const CodecError*>(&e) ||
      dynamic_cast<const IoError*>(&e) || dynamic_cast<const CheckpointError*>(&e) ||
      dynamic_cast<const ContractError*>(&e)) {
    return kExitBadInput;
  }
  return kExitFailure;
}

namespace {

std::string shortest(double v) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc() ? std::string(buf, end) : std::string("nan");
}

void ensure_directory(const std::filesystem::path& dir, const std::string& flag) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw UsageError(flag, "cannot create directory " + dir.string() +
                               (ec ? ": " + ec.message() : std::string()));
  }
}

void require_file(const std::filesystem::path& path, const std::string& flag) {
  if (!std::filesystem::is_regular_file(path)) throw UsageError(flag, path.string() + " does not exist");
}

TrajectorySet subset(const TrajectorySet& all, std::size_t first, std::size_t count) {
  TrajectorySet out;
  for (std::size_t i = first; i < first + count; ++i) out.trajectories.push_back(all[i]);
  return out;
}

std::int64_t max_type(const TrajectorySet& set) {
  std::int64_t best = -1;
  for (const Trajectory& t : set.trajectories) {
    for (std::int64_t v : t.types) best = std::max(best, v);
  }
  return best;
}

bool within_bounds(std::span<const Matrix> frames, const Metadata& meta) {
  for (const Matrix& f : frames) {
    for (std::size_t p = 0; p < f.rows(); ++p) {
      for (std::size_t d = 0; d < f.cols(); ++d) {
        if (!(f(p, d) >= meta.bounds[d].first && f(p, d) <= meta.bounds[d].second)) return false;
      }
    }
  }
  return true;
}

std::string checkpoint_name(std::uint64_t step) {
  std::string digits = std::to_string(step);
  if (digits.size() < 8) digits.insert(0, 8 - digits.size(), '0');
  return "checkpoint-" + digits + ".bin";
}

}  // namespace

nlohmann::json run_generate(const GenerateOptions& o, std::ostream& log) {
  const GeneratorConfig& g = o.generator;
  if (o.out.empty()) throw UsageError("--out", "an output directory is required");
  if (g.dim != 2 && g.dim != 3) throw UsageError("--dim", "must be 2 or 3");
  if (g.bounds.size() != g.dim) {
    throw UsageError("--bounds", "expected " + std::to_string(2 * g.dim) + " numbers (low,high per axis), got " +
                                     std::to_string(2 * g.bounds.size()));
  }
  for (std::size_t d = 0; d < g.dim; ++d) {
    const auto [low, high] = g.bounds[d];
    if (!std::isfinite(low) || !std::isfinite(high) || !(low < high)) {
      throw UsageError("--bounds", "axis " + std::to_string(d) + " has low " + shortest(low) +
                                       " not below high " + shortest(high));
    }
  }
  if (!(o.valid_fraction >= 0.0 && o.test_fraction >= 0.0 && o.valid_fraction + o.test_fraction < 1.0)) {
    throw UsageError("--valid-fraction/--test-fraction", "fractions must be non-negative and sum below 1");
  }
  g.validate();
  const auto n_valid = static_cast<std::size_t>(std::llround(o.valid_fraction * static_cast<double>(g.trajectories)));
  const auto n_test = static_cast<std::size_t>(std::llround(o.test_fraction * static_cast<double>(g.trajectories)));
  if (n_valid + n_test >= g.trajectories) {
    throw UsageError("--trajectories", "too few trajectories to leave any for training");
  }
  const std::size_t n_train = g.trajectories - n_valid - n_test;
  ensure_directory(o.out, "--out");

  log << "generating " << g.trajectories << " trajectories of " << g.particles << " particles x "
      << g.steps << " steps\n";
  auto [all, meta] = generate_reference(g, o.seed);
  const TrajectorySet train = subset(all, 0, n_train);
  const TrajectorySet valid = subset(all, n_train, n_valid);
  const TrajectorySet test = subset(all, n_train + n_valid, n_test);
  meta.stats = compute_statistics(train);

  const DatasetPaths paths{o.out};
  write_npz(paths.split("train"), train);
  write_npz(paths.split("valid"), valid);
  write_npz(paths.split("test"), test);
  write_metadata(paths.metadata(), meta);
  return {{"out", o.out.string()},
          {"dim", meta.dim},
          {"particles", g.particles},
          {"steps", g.steps},
          {"trajectories", {{"train", n_train}, {"valid", n_valid}, {"test", n_test}}},
          {"fingerprint", fingerprint(train)}};
}

nlohmann::json run_train(const TrainOptions& o, std::ostream& log) {
  const DatasetPaths paths{o.data};
  if (o.data.empty()) throw UsageError("--data", "a dataset directory is required");
  require_file(paths.metadata(), "--data");
  require_file(paths.split("train"), "--data");
  const Metadata meta = read_metadata(paths.metadata());
  const TrajectorySet train = read_npz(paths.split("train"));
  if (train.size() == 0) throw UsageError("--data", "training split is empty");

  std::optional<Trainer> trainer;
  if (o.resume) {
    require_file(*o.resume, "--resume");
    Checkpoint c = load_checkpoint(*o.resume);
    if (c.params.config.dim != meta.dim) {
      throw ModelMismatchError("checkpoint model is " + std::to_string(c.params.config.dim) +
                               "-D but the dataset is " + std::to_string(meta.dim) + "-D");
    }
    log << "resuming from " << o.resume->string() << " at step " << c.step << "\n";
    trainer.emplace(std::move(c), train, meta);
  } else {
    TrainConfig config = o.config;
    config.model.dim = meta.dim;
    config.validate();
    if (max_type(train) >= static_cast<std::int64_t>(config.model.particle_types)) {
      throw UsageError("--particle-types", "dataset uses type " + std::to_string(max_type(train)) +
                                               " but the model has " +
                                               std::to_string(config.model.particle_types) + " types");
    }
    trainer.emplace(config, train, meta);
  }
  if (max_type(train) >= static_cast<std::int64_t>(trainer->params().config.particle_types)) {
    throw ModelMismatchError("dataset particle types exceed the checkpoint's embedding table");
  }

  ensure_directory(o.out, "--out");
  const std::filesystem::path log_path = o.out / "loss.csv";
  if (!std::filesystem::exists(log_path)) {
    std::ofstream header(log_path);
    if (!header) throw IoError("cannot write " + log_path.string());
    header << "step,loss,seconds\n";
  }
  std::string pending;
  double final_loss = std::nan("");
  std::filesystem::path last_checkpoint;

  auto on_step = [&](const StepRecord& r) {
    char seconds[32];
    std::snprintf(seconds, sizeof seconds, "%.3f", r.seconds);
    pending += std::to_string(r.step) + "," + shortest(r.loss) + "," + seconds + "\n";
    final_loss = r.loss;
    if (o.log_every > 0 && r.step % o.log_every == 0) {
      log << "step " << r.step << " loss " << r.loss << " lr " << r.learning_rate << " (" << seconds
          << " s)\n";
    }
  };
  auto on_checkpoint = [&](const Checkpoint& c) {
    {
      std::ofstream csv(log_path, std::ios::app);
      if (!csv) throw IoError("cannot append to " + log_path.string());
      csv << pending;
      if (!csv) throw IoError("write failed for " + log_path.string());
    }
    pending.clear();
    last_checkpoint = o.out / checkpoint_name(c.step);
    save_checkpoint(last_checkpoint, c);
    save_checkpoint(o.out / "latest.bin", c);
    log << "checkpoint " << last_checkpoint.string() << "\n";
  };
  trainer->run(on_step, on_checkpoint, o.stop_at);
  if (last_checkpoint.empty()) {
    // Nothing left to train; still leave a checkpoint of the current state.
    on_checkpoint(trainer->checkpoint());
  }

  nlohmann::json report = {{"steps_completed", trainer->completed_steps()},
                           {"final_loss", std::isfinite(final_loss) ? nlohmann::json(final_loss) : nlohmann::json()},
                           {"seconds", trainer->checkpoint().elapsed_seconds},
                           {"checkpoint", last_checkpoint.string()},
                           {"loss_log", log_path.string()}};
  if (o.evaluate && std::filesystem::is_regular_file(paths.split("valid"))) {
    const TrajectorySet valid = read_npz(paths.split("valid"));
    if (valid.size() > 0) {
      const OneStepEvaluation e =
          evaluate_one_step(trainer->params(), valid, meta, o.eval_windows, trainer->config().graph);
      report["validation"] = {{"one_step_mse", e.mse},
                              {"zero_baseline_mse", e.baseline},
                              {"ratio", e.ratio()},
                              {"windows", e.windows}};
      log << "validation one-step MSE " << e.mse << " (zero baseline " << e.baseline << ")\n";
    }
  }
  return report;
}

nlohmann::json run_rollout(const RolloutOptions& o, std::ostream& log) {
  const DatasetPaths paths{o.data};
  if (o.out.empty()) throw UsageError("--out", "an output npz path is required");
  require_file(paths.metadata(), "--data");
  require_file(paths.split(o.split), "--split");
  const Metadata meta = read_metadata(paths.metadata());
  const TrajectorySet data = read_npz(paths.split(o.split));

  std::optional<ModelParams> params;
  std::size_t seed_frames = kInputSequenceLength;
  GraphOptions graph;
  if (!o.oracle) {
    require_file(o.checkpoint, "--checkpoint");
    Checkpoint c = load_checkpoint(o.checkpoint);
    if (c.params.config.dim != meta.dim) {
      throw ModelMismatchError("checkpoint model is " + std::to_string(c.params.config.dim) +
                               "-D but the dataset is " + std::to_string(meta.dim) + "-D");
    }
    if (max_type(data) >= static_cast<std::int64_t>(c.params.config.particle_types)) {
      throw ModelMismatchError("dataset particle type " + std::to_string(max_type(data)) +
                               " is outside the checkpoint's embedding table");
    }
    seed_frames = c.params.config.input_sequence_length;
    graph = c.config.graph;
    params = std::move(c.params);
  }

  const std::size_t count = std::min(data.size(), o.max_trajectories.value_or(data.size()));
  if (count == 0) throw UsageError("--split", "no trajectories to roll out");
  std::size_t shortest_truth = SIZE_MAX;
  for (std::size_t i = 0; i < count; ++i) {
    if (data[i].steps < seed_frames) {
      throw UsageError("--split", "trajectory " + std::to_string(i) + " has fewer than " +
                                      std::to_string(seed_frames) + " frames");
    }
    shortest_truth = std::min(shortest_truth, data[i].steps - seed_frames);
  }
  const std::size_t steps = o.steps.value_or(shortest_truth);
  if (steps > shortest_truth) {
    throw UsageError("--steps", std::to_string(steps) + " exceeds the " + std::to_string(shortest_truth) +
                                    " ground-truth steps available");
  }

  RolloutReportBuilder builder(seed_frames, steps);
  TrajectorySet predictions;
  double seconds = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const Trajectory& truth = data[i];
    std::vector<Matrix> frames;
    for (std::size_t t = 0; t < truth.steps; ++t) frames.push_back(truth.frame(t));
    const std::span<const Matrix> initial(frames.data(), seed_frames);

    const auto start = std::chrono::steady_clock::now();
    std::vector<Matrix> predicted;
    if (o.oracle) {
      const AccelerationModel oracle = [&](std::span<const Matrix>, std::size_t k) {
        return target_acceleration(make_window(data, {i, k}, seed_frames), meta);
      };
      predicted = rollout(initial, oracle, meta, steps);
    } else {
      predicted = rollout(initial, truth.types, *params, meta, steps, graph);
    }
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    builder.add(predicted, frames, within_bounds(predicted, meta));
    Trajectory out(predicted.size(), truth.particles, truth.dim);
    for (std::size_t t = 0; t < predicted.size(); ++t) out.set_frame(t, predicted[t]);
    out.types = truth.types;
    predictions.trajectories.push_back(std::move(out));
    log << "trajectory " << i << ": " << steps << " steps\n";
  }
  if (o.out.has_parent_path()) ensure_directory(o.out.parent_path(), "--out");
  write_npz(o.out, predictions);

  nlohmann::json report = to_json(builder.finish(seconds));
  report["predictions"] = o.out.string();
  report["oracle"] = o.oracle;
  return report;
}

nlohmann::json run_export_vtk(const ExportVtkOptions& o, std::ostream& log) {
  require_file(o.input, "--input");
  if (o.out.empty()) throw UsageError("--out", "an output directory is required");
  const TrajectorySet set = read_npz(o.input);
  if (o.trajectory >= set.size()) {
    throw UsageError("--trajectory", std::to_string(o.trajectory) + " is out of range for " +
                                         std::to_string(set.size()) + " trajectories");
  }
  const Trajectory& t = set[o.trajectory];
  if (t.dim != 2 && t.dim != 3) throw UsageError("--input", "VTK export needs 2-D or 3-D positions");
  ensure_directory(o.out, "--out");
  const auto files = export_vtk(t, o.out, o.prefix);
  log << "wrote " << files.size() << " VTK frames to " << o.out.string() << "\n";
  nlohmann::json report = {{"directory", o.out.string()}, {"frames", files.size()}};
  if (!files.empty()) {
    report["first"] = files.front().filename().string();
    report["last"] = files.back().filename().string();
  }
  return report;
}

nlohmann::json run_gradcheck(const GradcheckOptions& o, std::ostream& log) {
  if (o.particles < 2) throw UsageError("--particles", "need at least two particles");
  if (!(o.step > 0.0)) throw UsageError("--fd-step", "must be positive");
  ModelParams params = ModelParams::create(o.model, o.seed);
  std::mt19937_64 rng(o.seed + 1);
  std::uniform_real_distribution<double> uniform(0.0, 0.3);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double radius = 0.25;

  Matrix x(o.particles, o.model.dim);
  for (double& v : x.values()) v = uniform(rng);
  const Edges edges = radius_graph(x, radius);
  EncodedGraph g;
  g.senders = edges.senders;
  g.receivers = edges.receivers;
  g.edge_features = edge_features(x, g.senders, g.receivers, radius);
  g.node_features = Matrix(o.particles, o.model.kinematic_width());
  for (double& v : g.node_features.values()) v = normal(rng);
  for (std::size_t p = 0; p < o.particles; ++p) {
    g.types.push_back(static_cast<std::int64_t>(p % o.model.particle_types));
  }
  if (o.model.global_size > 0) {
    g.global = Matrix(1, o.model.global_size);
    for (double& v : g.global.values()) v = normal(rng);
  }
  Matrix target(o.particles, o.model.dim);
  for (double& v : target.values()) v = normal(rng);

  auto loss_value = [&] {
    Tape t;
    return mean_squared_error(predict(g, params, t), t.constant(target)).value()(0, 0);
  };
  Tape tape;
  const Var l = mean_squared_error(predict(g, params, tape), tape.constant(target));
  tape.backward(l);

  double worst = 0.0;
  std::size_t checked = 0;
  nlohmann::json groups = nlohmann::json::array();
  for (Matrix* m : params.tensors()) {
    const Matrix analytic = tape.gradient(*m);
    double group_worst = 0.0;
    for (std::size_t i = 0; i < m->size(); ++i) {
      const double saved = m->data()[i];
      m->data()[i] = saved + o.step;
      const double up = loss_value();
      m->data()[i] = saved - o.step;
      const double down = loss_value();
      m->data()[i] = saved;
      const double numeric = (up - down) / (2.0 * o.step);
      const double a = analytic.data()[i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
      group_worst = std::max(group_worst, err);
      ++checked;
    }
    groups.push_back({{"shape", m->shape_string()}, {"max_relative_error", group_worst}});
    worst = std::max(worst, group_worst);
  }
  log << "checked " << checked << " parameters on a graph of " << o.particles << " particles and "
      << g.edge_count() << " edges\n";
  return {{"parameters", checked},
          {"edges", g.edge_count()},
          {"max_relative_error", worst},
          {"tolerance", o.tolerance},
          {"passed", worst < o.tolerance},
          {"groups", groups}};
}

}  // namespace gns
