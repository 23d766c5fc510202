#include "gns/train/trainer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "gns/errors.hpp"
#include "gns/train/evaluate.hpp"
#include "small_problem.hpp"

namespace gns {
namespace {

std::vector<double> flat(const ModelParams& p) {
  std::vector<double> out;
  for (const Matrix* m : p.tensors()) out.insert(out.end(), m->values().begin(), m->values().end());
  return out;
}

TEST(ScheduleTest, ExponentialDecay) {
  TrainConfig c;
  c.steps = 1000;
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 0), 1e-4);
  EXPECT_NEAR(learning_rate_at(c, 500), 1e-5, 1e-18);
  EXPECT_NEAR(learning_rate_at(c, 1000), 1e-6, 1e-19);
}

TEST(ConfigTest, ValidationAndJson) {
  TrainConfig c = testing::small_train_config();
  c.workers = 3;
  c.graph.radius = 0.05;
  const TrainConfig back = train_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  c.workers = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(train_config_from_json({{"noise_std", -1.0}}), ConfigError);
  EXPECT_THROW(train_config_from_json({{"bogus", 1}}), ConfigError);
}

TEST(ShardTest, FourThousandWindowsFourWorkers) {
  std::vector<std::size_t> order(4000);
  std::iota(order.begin(), order.end(), 0);
  const auto shards = shard_windows(order, 4);
  ASSERT_EQ(shards.size(), 4u);
  for (const auto& s : shards) EXPECT_EQ(s.size(), 1000u);
}

TEST(ShardTest, BalancedAndDisjoint) {
  for (std::size_t n = 0; n < 60; ++n) {
    for (std::size_t w = 1; w <= 7; ++w) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      const auto shards = shard_windows(order, w);
      std::size_t lo = n, hi = 0, total = 0;
      std::set<std::size_t> seen;
      for (const auto& s : shards) {
        lo = std::min(lo, s.size());
        hi = std::max(hi, s.size());
        total += s.size();
        seen.insert(s.begin(), s.end());
      }
      EXPECT_LE(hi - lo, 1u);
      EXPECT_EQ(total, n);
      EXPECT_EQ(seen.size(), n);
    }
  }
}

TEST(SamplerTest, EpochIsPermutationAndWorkersDrawTheirShards) {
  WindowSampler s(23, 2, 3, 5);
  const std::vector<std::uint64_t> order = s.order();
  std::vector<std::size_t> order_sz(order.begin(), order.end());
  const auto shards = shard_windows(order_sz, 2);
  std::vector<std::size_t> drawn0, drawn1;
  for (int k = 0; k < 3; ++k) {  // 23 / 6 = 3 steps per epoch
    const auto g = s.next();
    ASSERT_EQ(g.size(), 6u);
    for (std::size_t x : s.worker_slice(g, 0)) drawn0.push_back(x);
    for (std::size_t x : s.worker_slice(g, 1)) drawn1.push_back(x);
  }
  EXPECT_EQ(drawn0, std::vector<std::size_t>(shards[0].begin(), shards[0].begin() + 9));
  EXPECT_EQ(drawn1, std::vector<std::size_t>(shards[1].begin(), shards[1].begin() + 9));
  std::set<std::uint64_t> unique(order.begin(), order.end());
  EXPECT_EQ(unique.size(), 23u);
  s.next();
  EXPECT_EQ(s.state().epoch, 1u);
}

TEST(SamplerTest, StateRoundTrip) {
  WindowSampler a(50, 1, 4, 9);
  for (int k = 0; k < 17; ++k) a.next();
  WindowSampler b(50, 1, 4, a.state());
  for (int k = 0; k < 40; ++k) EXPECT_EQ(a.next(), b.next());
  EXPECT_THROW(WindowSampler(3, 2, 2, 1), ConfigError);
}

TEST(DdpTest, SingleWorkerEqualsSequentialTrainStep) {
  const auto problem = testing::small_problem();
  TrainConfig c = testing::small_train_config();
  c.noise_std = 0.0;
  c.steps = 5;
  Trainer trainer(c, problem.data, problem.meta);

  ModelParams params = ModelParams::create(c.model, c.seed);
  AdamState state = AdamState::for_params(std::as_const(params).tensors(), c.adam);
  WindowSampler sampler(trainer.window_count(), 1, c.batch_size, c.seed);
  const auto windows = enumerate_windows(problem.data);
  for (std::size_t s = 0; s < c.steps; ++s) {
    std::vector<TrainingWindow> batch;
    for (std::size_t k : sampler.next()) batch.push_back(make_window(problem.data, windows[k]));
    const double expected = train_step(batch, params, state, problem.meta, learning_rate_at(c, s));
    EXPECT_EQ(trainer.step().loss, expected);
  }
  EXPECT_EQ(flat(trainer.params()), flat(params));
}

TEST(DdpTest, TwoWorkersBatchOneMatchOneWorkerBatchTwo) {
  const auto problem = testing::small_problem();
  TrainConfig one = testing::small_train_config();
  one.workers = 1;
  one.batch_size = 2;
  TrainConfig two = one;
  two.workers = 2;
  two.batch_size = 1;
  Trainer a(one, problem.data, problem.meta);
  Trainer b(two, problem.data, problem.meta);
  for (int s = 0; s < 10; ++s) {
    const StepRecord ra = a.step();
    const StepRecord rb = b.step();
    EXPECT_EQ(ra.loss, rb.loss);
  }
  const auto pa = flat(a.params());
  const auto pb = flat(b.params());
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) ASSERT_NEAR(pa[i], pb[i], 1e-12 * std::max(1.0, std::abs(pa[i])));
}

TEST(DdpTest, FourWorkersMatchOneWorkerWithinTolerance) {
  const auto problem = testing::small_problem();
  TrainConfig one = testing::small_train_config();
  one.workers = 1;
  one.batch_size = 4;
  TrainConfig four = one;
  four.workers = 2;
  four.batch_size = 2;
  Trainer a(one, problem.data, problem.meta);
  Trainer b(four, problem.data, problem.meta);
  for (int s = 0; s < 5; ++s) EXPECT_NEAR(a.step().loss, b.step().loss, 1e-12);
  const auto pa = flat(a.params());
  const auto pb = flat(b.params());
  for (std::size_t i = 0; i < pa.size(); ++i) ASSERT_NEAR(pa[i], pb[i], 1e-10 * std::max(1.0, std::abs(pa[i])));
}

TEST(DdpTest, WorkerFailurePropagates) {
  auto problem = testing::small_problem();
  for (auto& t : problem.data.trajectories) t.types.assign(t.types.size(), 5);  // beyond the table
  TrainConfig c = testing::small_train_config();
  c.workers = 2;
  c.batch_size = 1;
  Trainer trainer(c, problem.data, problem.meta);
  EXPECT_THROW(trainer.step(), IndexError);
  EXPECT_EQ(trainer.completed_steps(), 0u);
}

TEST(DdpTest, DimensionMismatchIsShapeError) {
  const auto problem = testing::small_problem();
  TrainConfig c = testing::small_train_config();
  c.model.dim = 3;
  EXPECT_THROW(Trainer(c, problem.data, problem.meta), ShapeError);
}

TEST(CheckpointTest, RoundTripIsBitwise) {
  const auto problem = testing::small_problem();
  Trainer t(testing::small_train_config(), problem.data, problem.meta);
  for (int s = 0; s < 3; ++s) t.step();
  const Checkpoint c = t.checkpoint();
  const Checkpoint back = decode_checkpoint(encode_checkpoint(c));
  EXPECT_EQ(flat(back.params), flat(c.params));
  ASSERT_EQ(back.optimizer.first_moment.size(), c.optimizer.first_moment.size());
  for (std::size_t i = 0; i < c.optimizer.first_moment.size(); ++i) {
    EXPECT_EQ(back.optimizer.first_moment[i], c.optimizer.first_moment[i]);
    EXPECT_EQ(back.optimizer.second_moment[i], c.optimizer.second_moment[i]);
  }
  EXPECT_EQ(back.optimizer.step, 3u);
  EXPECT_EQ(back.step, 3u);
  EXPECT_EQ(back.sampler, c.sampler);
  EXPECT_EQ(back.dataset_fingerprint, c.dataset_fingerprint);
  EXPECT_EQ(to_json(back.config), to_json(c.config));
  EXPECT_EQ(back.params.config, c.params.config);
}

TEST(CheckpointTest, CorruptionIsDetected) {
  const auto problem = testing::small_problem();
  Trainer t(testing::small_train_config(), problem.data, problem.meta);
  const std::vector<std::uint8_t> bytes = encode_checkpoint(t.checkpoint());

  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 100);
  try {
    decode_checkpoint(truncated);
    FAIL() << "truncated checkpoint accepted";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("checksum"), std::string::npos);
  }
  std::vector<std::uint8_t> flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x40;
  EXPECT_THROW(decode_checkpoint(flipped), CheckpointError);
  std::vector<std::uint8_t> version = bytes;
  version[8] = 99;
  EXPECT_THROW(decode_checkpoint(version), CheckpointError);
  std::vector<std::uint8_t> magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(magic), CheckpointError);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.bin"), CheckpointError);
}

TEST(CheckpointTest, SaveLoadFile) {
  const auto problem = testing::small_problem();
  Trainer t(testing::small_train_config(), problem.data, problem.meta);
  t.step();
  const auto path = std::filesystem::temp_directory_path() / "gns_checkpoint_test.bin";
  save_checkpoint(path, t.checkpoint());
  EXPECT_EQ(flat(load_checkpoint(path).params), flat(t.params()));
  std::filesystem::remove(path);
}

TEST(CheckpointTest, RestartReproducesLossSequenceBitwise) {
  const auto problem = testing::small_problem();
  TrainConfig c = testing::small_train_config();
  c.steps = 30;
  c.workers = 2;
  c.batch_size = 1;
  std::vector<double> straight, resumed;
  Trainer full(c, problem.data, problem.meta);
  full.run([&](const StepRecord& r) { straight.push_back(r.loss); }, {});

  Trainer first(c, problem.data, problem.meta);
  first.run([&](const StepRecord& r) { resumed.push_back(r.loss); }, {}, 13);
  const Checkpoint saved = decode_checkpoint(encode_checkpoint(first.checkpoint()));
  Trainer second(saved, problem.data, problem.meta);
  second.run([&](const StepRecord& r) { resumed.push_back(r.loss); }, {});
  EXPECT_EQ(resumed, straight);
  EXPECT_EQ(flat(second.params()), flat(full.params()));
}

TEST(CheckpointTest, ResumeOnOtherDatasetFails) {
  const auto problem = testing::small_problem();
  const auto other = testing::small_problem(12, 30, 2, 4);
  Trainer t(testing::small_train_config(), problem.data, problem.meta);
  EXPECT_THROW(Trainer(t.checkpoint(), other.data, other.meta), CheckpointError);
}

TEST(CheckpointTest, IntervalCallbacks) {
  const auto problem = testing::small_problem();
  TrainConfig c = testing::small_train_config();
  c.steps = 10;
  c.checkpoint_interval = 4;
  std::vector<std::uint64_t> at;
  ddp_train(problem.data, problem.meta, c, {}, [&](const Checkpoint& k) { at.push_back(k.step); });
  EXPECT_EQ(at, (std::vector<std::uint64_t>{4, 8, 10}));
}

TEST(EvaluateTest, ZeroNetworkMatchesBaseline) {
  const auto problem = testing::small_problem();
  TrainConfig c = testing::small_train_config();
  c.model.layer_norm = false;
  ModelParams p = ModelParams::create(c.model, 1);
  for (Matrix* m : p.tensors()) m->fill(0.0);
  const OneStepEvaluation e = evaluate_one_step(p, problem.data, problem.meta);
  EXPECT_EQ(e.windows, 2u * 24);
  EXPECT_GT(e.baseline, 0.0);
  EXPECT_DOUBLE_EQ(e.mse, e.baseline);
  EXPECT_LE(evaluate_one_step(p, problem.data, problem.meta, 10).windows, 10u);
}

}  // namespace
}  // namespace gns
