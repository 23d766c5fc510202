#include "gns/train/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "gns/errors.hpp"

namespace gns {

std::vector<std::vector<std::size_t>> shard_windows(std::span<const std::size_t> order,
                                                    std::size_t workers) {
  if (workers == 0) throw ContractError("shard_windows: need at least one worker");
  std::vector<std::vector<std::size_t>> shards(workers);
  for (std::size_t k = 0; k < order.size(); ++k) shards[k % workers].push_back(order[k]);
  return shards;
}

namespace {

void check_sizes(std::size_t count, std::size_t workers, std::size_t batch) {
  if (workers == 0 || batch == 0) throw ConfigError("sampler: workers and batch must be positive");
  if (count < workers * batch) {
    throw ConfigError("sampler: " + std::to_string(count) + " windows cannot fill a global batch of " +
                      std::to_string(workers * batch));
  }
}

}  // namespace

WindowSampler::WindowSampler(std::size_t window_count, std::size_t workers, std::size_t batch_size,
                             std::uint64_t seed)
    : count_(window_count), workers_(workers), batch_(batch_size), engine_(seed) {
  check_sizes(count_, workers_, batch_);
  new_epoch();
  state_.epoch = 0;
}

WindowSampler::WindowSampler(std::size_t window_count, std::size_t workers, std::size_t batch_size,
                             SamplerState state)
    : count_(window_count), workers_(workers), batch_(batch_size), state_(std::move(state)) {
  check_sizes(count_, workers_, batch_);
  std::istringstream in(state_.engine);
  in >> engine_;
  if (!in || state_.order.size() != count_ || state_.cursor > count_) {
    throw CheckpointError("sampler state does not match the dataset");
  }
}

void WindowSampler::new_epoch() {
  state_.order.resize(count_);
  std::iota(state_.order.begin(), state_.order.end(), std::uint64_t{0});
  std::shuffle(state_.order.begin(), state_.order.end(), engine_);
  state_.cursor = 0;
  ++state_.epoch;
}

std::vector<std::size_t> WindowSampler::next() {
  const std::size_t global = workers_ * batch_;
  if (state_.cursor + global > count_) new_epoch();
  std::vector<std::size_t> out(state_.order.begin() + static_cast<std::ptrdiff_t>(state_.cursor),
                               state_.order.begin() + static_cast<std::ptrdiff_t>(state_.cursor + global));
  state_.cursor += global;
  return out;
}

std::vector<std::size_t> WindowSampler::worker_slice(std::span<const std::size_t> global,
                                                     std::size_t w) const {
  std::vector<std::size_t> out;
  for (std::size_t k = w; k < global.size(); k += workers_) out.push_back(global[k]);
  return out;
}

SamplerState WindowSampler::state() const {
  SamplerState s = state_;
  std::ostringstream out;
  out << engine_;
  s.engine = out.str();
  return s;
}

}  // namespace gns
