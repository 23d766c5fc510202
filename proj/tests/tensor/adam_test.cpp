#include "gns/tensor/adam.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "gns/errors.hpp"

namespace gns {
namespace {

TEST(AdamTest, ZeroGradientLeavesParametersAndDecaysMoments) {
  Matrix p{{1.0, -2.0}};
  std::vector<Matrix*> params{&p};
  AdamState s = AdamState::for_params(std::vector<const Matrix*>{&p});
  adam_step(params, std::vector<Matrix>{Matrix(1, 2)}, s);
  EXPECT_EQ(p, (Matrix{{1.0, -2.0}}));
  EXPECT_EQ(s.step, 1u);

  s.first_moment[0] = Matrix{{0.5, -0.5}};
  s.second_moment[0] = Matrix{{0.25, 0.25}};
  adam_step(params, std::vector<Matrix>{Matrix(1, 2)}, s);
  EXPECT_DOUBLE_EQ(s.first_moment[0](0, 0), 0.9 * 0.5);
  EXPECT_DOUBLE_EQ(s.second_moment[0](0, 1), 0.999 * 0.25);
  EXPECT_EQ(s.step, 2u);
}

TEST(AdamTest, FirstStepMovesByLearningRateAgainstGradientSign) {
  Matrix p{{0.0, 1.0, 2.0}};
  std::vector<Matrix*> params{&p};
  AdamState s = AdamState::for_params(std::vector<const Matrix*>{&p}, {0.01, 0.9, 0.999, 1e-8});
  const Matrix g{{3.0, -0.25, 1e-3}};
  adam_step(params, std::vector<Matrix>{g}, s);
  // m_hat = g, v_hat = g^2 after bias correction -> step = lr * g / (|g| + eps)
  for (std::size_t i = 0; i < 3; ++i) {
    const double gi = g(0, i);
    const double expected = (i * 1.0) - 0.01 * gi / (std::abs(gi) + 1e-8);
    EXPECT_NEAR(p(0, i), expected, 1e-15);
  }
}

TEST(AdamTest, ReproducibleBitwise) {
  auto run = [] {
    Matrix p{{0.3, -0.7}, {1.1, 0.0}};
    std::vector<Matrix*> params{&p};
    AdamState s = AdamState::for_params(std::vector<const Matrix*>{&p});
    for (int k = 0; k < 5; ++k) {
      adam_step(params, std::vector<Matrix>{Matrix{{0.1 * k, -1.0}, {2.0, 0.5}}}, s);
    }
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(AdamTest, ShapeMismatch) {
  Matrix p(2, 2);
  std::vector<Matrix*> params{&p};
  AdamState s = AdamState::for_params(std::vector<const Matrix*>{&p});
  EXPECT_THROW(adam_step(params, std::vector<Matrix>{Matrix(2, 3)}, s), ShapeError);
  EXPECT_THROW(adam_step(params, std::vector<Matrix>{}, s), ShapeError);
}

}  // namespace
}  // namespace gns
