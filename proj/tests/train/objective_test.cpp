#include "gns/train/objective.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gns/errors.hpp"
#include "gns/tensor/ops.hpp"
#include "small_problem.hpp"
#include "support/finite_difference.hpp"

namespace gns {
namespace {

using testing::random_matrix;

TEST(LossTest, ZeroWhenEqual) {
  const Matrix a{{1.0, 2.0}, {3.0, -4.0}};
  EXPECT_EQ(loss(a, a), 0.0);
}

TEST(LossTest, UnitOffsetGivesOne) {
  const Matrix a{{1.0, 2.0}, {3.0, -4.0}};
  const Matrix b{{2.0, 3.0}, {4.0, -3.0}};
  EXPECT_EQ(loss(b, a), 1.0);
}

TEST(LossTest, MatchesDoubleLoop) {
  std::mt19937_64 rng(1);
  const Matrix p = random_matrix(17, 3, rng);
  const Matrix t = random_matrix(17, 3, rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < 17; ++i) {
    for (std::size_t d = 0; d < 3; ++d) acc += (p(i, d) - t(i, d)) * (p(i, d) - t(i, d));
  }
  EXPECT_NEAR(loss(p, t), acc / 51.0, 1e-15);
  Tape tape;
  EXPECT_NEAR(mean_squared_error(tape.constant(p), tape.constant(t)).value()(0, 0), loss(p, t), 1e-15);
}

TEST(LossTest, NonNegativeAndZeroOnlyAtEquality) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix p = random_matrix(4, 2, rng);
    Matrix t = p;
    EXPECT_EQ(loss(p, t), 0.0);
    t(rng() % 4, rng() % 2) += 1e-3;
    EXPECT_GT(loss(p, t), 0.0);
  }
}

TEST(LossTest, ShapeMismatch) { EXPECT_THROW(loss(Matrix(2, 2), Matrix(2, 3)), ShapeError); }

TrainingWindow sample_window() {
  const auto problem = testing::small_problem();
  return make_window(problem.data, {0, 3});
}

TEST(NoiseTest, ZeroStdIsIdentity) {
  const TrainingWindow w = sample_window();
  std::mt19937_64 rng(3);
  const TrainingWindow out = inject_noise(w, 0.0, rng);
  for (std::size_t k = 0; k < w.inputs.size(); ++k) EXPECT_EQ(out.inputs[k], w.inputs[k]);
  EXPECT_EQ(out.target, w.target);
}

TEST(NoiseTest, DeterministicForSeed) {
  const TrainingWindow w = sample_window();
  std::mt19937_64 a(4), b(4);
  const TrainingWindow x = inject_noise(w, 1e-3, a);
  const TrainingWindow y = inject_noise(w, 1e-3, b);
  for (std::size_t k = 0; k < w.inputs.size(); ++k) EXPECT_EQ(x.inputs[k], y.inputs[k]);
}

TEST(NoiseTest, FirstInputAndTargetUntouched) {
  const TrainingWindow w = sample_window();
  std::mt19937_64 rng(5);
  const TrainingWindow out = inject_noise(w, 1e-3, rng);
  EXPECT_EQ(out.inputs.front(), w.inputs.front());
  EXPECT_EQ(out.target, w.target);
  EXPECT_FALSE(out.inputs.back() == w.inputs.back());
  EXPECT_THROW(inject_noise(w, -1.0, rng), ContractError);
}

TEST(NoiseTest, FinalDisplacementHasRequestedStd) {
  TrainingWindow w;
  for (int k = 0; k < 6; ++k) w.inputs.push_back(Matrix{{0.5, 0.5}});
  w.target = Matrix{{0.5, 0.5}};
  std::mt19937_64 rng(6);
  const double std = 3e-4;
  double sum = 0.0, sum2 = 0.0, mid2 = 0.0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const TrainingWindow out = inject_noise(w, std, rng);
    const double d = out.inputs[5](0, 0) - 0.5;
    sum += d;
    sum2 += d * d;
    const double m = out.inputs[1](0, 1) - 0.5;
    mid2 += m * m;
  }
  const double mean = sum / draws;
  const double measured = std::sqrt(sum2 / draws - mean * mean);
  EXPECT_NEAR(measured, std, 0.05 * std);
  // One increment has std / sqrt(5).
  EXPECT_NEAR(std::sqrt(mid2 / draws), std / std::sqrt(5.0), 0.05 * std / std::sqrt(5.0));
}

TEST(TrainStepTest, GradientIsMeanOfWindowGradients) {
  const auto problem = testing::small_problem();
  const TrainConfig c = testing::small_train_config();
  const ModelParams params = ModelParams::create(c.model, 1);
  std::vector<TrainingWindow> batch;
  for (std::size_t s : {0u, 5u, 9u}) batch.push_back(make_window(problem.data, {s % 2, s}));

  // Oracle: one tape over the whole batch with the averaged loss.
  Tape tape;
  std::vector<Var> losses;
  for (const TrainingWindow& w : batch) {
    const EncodedGraph g = build_graph(w.inputs, w.types, problem.meta);
    losses.push_back(mean_squared_error(predict(g, params, tape),
                                        tape.constant(target_acceleration(w, problem.meta))));
  }
  Var total = losses[0];
  for (std::size_t k = 1; k < losses.size(); ++k) total = add(total, losses[k]);
  const Var mean = scale(total, 1.0 / 3.0);
  tape.backward(mean);

  const GradientResult r = batch_gradient(batch, params, problem.meta);
  EXPECT_NEAR(r.loss, mean.value()(0, 0), 1e-12);
  const auto tensors = params.tensors();
  ASSERT_EQ(r.gradient.size(), tensors.size());
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    EXPECT_LE(max_abs_diff(r.gradient[i], tape.gradient(*tensors[i])), 1e-12) << "tensor " << i;
  }
}

TEST(TrainStepTest, SameBatchSameLoss) {
  const auto problem = testing::small_problem();
  const TrainConfig c = testing::small_train_config();
  const std::vector<TrainingWindow> batch{make_window(problem.data, {1, 4})};
  ModelParams a = ModelParams::create(c.model, 2);
  ModelParams b = ModelParams::create(c.model, 2);
  AdamState sa = AdamState::for_params(std::as_const(a).tensors());
  AdamState sb = AdamState::for_params(std::as_const(b).tensors());
  EXPECT_EQ(train_step(batch, a, sa, problem.meta, 1e-3), train_step(batch, b, sb, problem.meta, 1e-3));
  EXPECT_THROW(train_step({}, a, sa, problem.meta, 1e-3), ContractError);
}

TEST(TrainStepTest, OverfitsSingleTrajectory) {
  const auto problem = testing::small_problem(10, 20, 1, 9);
  const TrainConfig c = testing::small_train_config();
  ModelParams params = ModelParams::create(c.model, 3);
  AdamState state = AdamState::for_params(std::as_const(params).tensors());
  std::vector<TrainingWindow> batch;
  for (const WindowIndex& w : enumerate_windows(problem.data)) batch.push_back(make_window(problem.data, w));
  batch.resize(4);
  const double first = train_step(batch, params, state, problem.meta, 1e-3);
  double last = first;
  for (int s = 0; s < 99; ++s) last = train_step(batch, params, state, problem.meta, 1e-3);
  EXPECT_LT(last, 0.5 * first);
}

}  // namespace
}  // namespace gns
