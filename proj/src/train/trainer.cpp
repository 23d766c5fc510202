#include "gns/train/trainer.hpp"

#include <chrono>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <utility>

#include "gns/errors.hpp"

namespace gns {

namespace {

WindowSampler fresh_sampler(const TrainConfig& c, std::size_t windows) {
  c.validate();
  return WindowSampler(windows, c.workers, c.batch_size, c.seed);
}

void check_dataset(const ModelConfig& model, const Metadata& meta) {
  if (model.dim != meta.dim) {
    throw ShapeError("model dimension " + std::to_string(model.dim) + " does not match dataset dimension " +
                     std::to_string(meta.dim));
  }
}

}  // namespace

Trainer::Trainer(TrainConfig config, const TrajectorySet& data, const Metadata& meta)
    : config_(std::move(config)),
      data_(&data),
      meta_(meta),
      windows_(enumerate_windows(data, config_.model.input_sequence_length)),
      fingerprint_(fingerprint(data)),
      params_(ModelParams::create(config_.model, config_.seed)),
      optimizer_(AdamState::for_params(std::as_const(params_).tensors(), config_.adam)),
      sampler_(fresh_sampler(config_, windows_.size())) {
  check_dataset(config_.model, meta_);
}

Trainer::Trainer(Checkpoint c, const TrajectorySet& data, const Metadata& meta)
    : config_(std::move(c.config)),
      data_(&data),
      meta_(meta),
      windows_(enumerate_windows(data, config_.model.input_sequence_length)),
      fingerprint_(fingerprint(data)),
      params_(std::move(c.params)),
      optimizer_(std::move(c.optimizer)),
      sampler_(windows_.size(), config_.workers, config_.batch_size, std::move(c.sampler)),
      step_(c.step),
      elapsed_(c.elapsed_seconds) {
  if (c.dataset_fingerprint != fingerprint_) {
    throw CheckpointError("checkpoint was trained on a different dataset (fingerprint mismatch)");
  }
  check_dataset(params_.config, meta_);
  params_.validate();
}

TrainingWindow Trainer::prepared_window(std::size_t window, std::uint64_t slot) const {
  TrainingWindow w = make_window(*data_, windows_[window], config_.model.input_sequence_length);
  if (config_.noise_std == 0.0) return w;
  std::seed_seq seq{static_cast<std::uint32_t>(config_.seed), static_cast<std::uint32_t>(config_.seed >> 32),
                    static_cast<std::uint32_t>(slot), static_cast<std::uint32_t>(slot >> 32)};
  std::mt19937_64 rng(seq);
  return inject_noise(w, config_.noise_std, rng);
}

StepRecord Trainer::step() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::size_t> global = sampler_.next();
  const std::uint64_t first_slot = step_ * config_.global_batch();
  const std::size_t workers = config_.workers;

  std::vector<GradientResult> results(workers);
  std::vector<std::exception_ptr> failures(workers);
  auto work = [&](std::size_t w) {
    try {
      std::vector<TrainingWindow> batch;
      for (std::size_t k = w; k < global.size(); k += workers) {
        batch.push_back(prepared_window(global[k], first_slot + k));
      }
      results[w] = batch_gradient(batch, params_, meta_, config_.graph);
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(work, w);
  work(0);
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  const GradientResult averaged = average(results);
  const double lr = learning_rate_at(config_, step_);
  apply_gradient(params_, optimizer_, averaged, lr);
  ++step_;
  elapsed_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {step_, averaged.loss, lr, elapsed_};
}

void Trainer::run(const std::function<void(const StepRecord&)>& on_step,
                  const std::function<void(const Checkpoint&)>& on_checkpoint,
                  std::optional<std::uint64_t> until) {
  const std::uint64_t last = until.value_or(config_.steps);
  while (step_ < last) {
    const StepRecord r = step();
    if (on_step) on_step(r);
    const bool interval = config_.checkpoint_interval > 0 && step_ % config_.checkpoint_interval == 0;
    if (on_checkpoint && (interval || step_ == last)) on_checkpoint(checkpoint());
  }
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.params = params_;
  c.optimizer = optimizer_;
  c.step = step_;
  c.sampler = sampler_.state();
  c.config = config_;
  c.dataset_fingerprint = fingerprint_;
  c.elapsed_seconds = elapsed_;
  return c;
}

Checkpoint ddp_train(const TrajectorySet& data, const Metadata& meta, const TrainConfig& config,
                     const std::function<void(const StepRecord&)>& on_step,
                     const std::function<void(const Checkpoint&)>& on_checkpoint) {
  Trainer trainer(config, data, meta);
  trainer.run(on_step, on_checkpoint);
  return trainer.checkpoint();
}

}  // namespace gns
