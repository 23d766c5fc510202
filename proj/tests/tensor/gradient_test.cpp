#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <vector>

#include "gns/errors.hpp"
#include "gns/tensor/mlp.hpp"
#include "gns/tensor/ops.hpp"
#include "support/finite_difference.hpp"

namespace gns {
namespace {

using testing::central_difference;
using testing::max_relative_error;
using testing::random_matrix;

// Builds loss = MSE(op(params...), target) on a fresh tape each call.
using Graph = std::function<Var(Tape&, std::vector<Var>&)>;

void expect_gradients_match(std::vector<Matrix>& params, const Graph& graph, double tol = 1e-5) {
  Tape tape;
  std::vector<Var> leaves;
  for (const Matrix& p : params) leaves.push_back(tape.parameter(p));
  Var loss = graph(tape, leaves);
  tape.backward(loss);
  std::vector<Matrix> analytic;
  for (const Matrix& p : params) analytic.push_back(tape.gradient(p));

  auto f = [&] {
    Tape t;
    std::vector<Var> l;
    for (const Matrix& p : params) l.push_back(t.parameter(p));
    return graph(t, l).value()(0, 0);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix numeric = central_difference(params[i], f);
    EXPECT_LT(max_relative_error(analytic[i], numeric), tol) << "parameter " << i;
  }
}

class GradientTest : public ::testing::Test {
 protected:
  std::mt19937_64 rng{2024};
  Matrix target(std::size_t r, std::size_t c) { return random_matrix(r, c, rng); }
};

TEST_F(GradientTest, SumOfParameterIsAllOnes) {
  Tape tape;
  Matrix p(3, 4, 0.5);
  tape.backward(sum(tape.parameter(p)));
  EXPECT_EQ(tape.gradient(p), Matrix(3, 4, 1.0));
}

TEST_F(GradientTest, MseOfEqualMatricesHasZeroGradient) {
  Tape tape;
  Matrix p = random_matrix(3, 2, rng);
  Matrix q = p;
  tape.backward(mean_squared_error(tape.parameter(p), tape.parameter(q)));
  EXPECT_EQ(tape.gradient(p), Matrix(3, 2));
  EXPECT_EQ(tape.gradient(q), Matrix(3, 2));
}

TEST_F(GradientTest, NonScalarLossIsAContractError) {
  Tape tape;
  Matrix p(2, 2);
  EXPECT_THROW(tape.backward(tape.parameter(p)), ContractError);
}

TEST_F(GradientTest, UnusedParameterHasZeroGradient) {
  Tape tape;
  Matrix used(1, 1, 2.0), unused(2, 2, 1.0);
  tape.parameter(unused);
  tape.backward(sum(tape.parameter(used)));
  EXPECT_EQ(tape.gradient(unused), Matrix(2, 2));
}

TEST_F(GradientTest, Matmul) {
  std::vector<Matrix> p{random_matrix(4, 3, rng), random_matrix(3, 5, rng)};
  const Matrix t = target(4, 5);
  expect_gradients_match(p, [&](Tape& tape, std::vector<Var>& v) {
    return mean_squared_error(matmul(v[0], v[1]), tape.constant(t));
  });
}

TEST_F(GradientTest, Linear) {
  std::vector<Matrix> p{random_matrix(6, 3, rng), random_matrix(3, 2, rng),
                        random_matrix(1, 2, rng)};
  const Matrix t = target(6, 2);
  expect_gradients_match(p, [&](Tape& tape, std::vector<Var>& v) {
    return mean_squared_error(linear(v[0], v[1], v[2]), tape.constant(t));
  });
}

TEST_F(GradientTest, AddSubScaleRelu) {
  std::vector<Matrix> p{random_matrix(4, 3, rng), random_matrix(4, 3, rng)};
  const Matrix t = target(4, 3);
  expect_gradients_match(p, [&](Tape& tape, std::vector<Var>& v) {
    Var h = relu(add(scale(v[0], 1.7), sub(v[1], v[0])));
    return mean_squared_error(h, tape.constant(t));
  });
}

TEST_F(GradientTest, LayerNorm) {
  std::vector<Matrix> p{random_matrix(5, 7, rng), random_matrix(1, 7, rng),
                        random_matrix(1, 7, rng)};
  const Matrix t = target(5, 7);
  expect_gradients_match(p, [&](Tape& tape, std::vector<Var>& v) {
    return mean_squared_error(layer_norm(v[0], v[1], v[2]), tape.constant(t));
  });
}

TEST_F(GradientTest, ConcatTileGatherScatter) {
  std::vector<Matrix> p{random_matrix(4, 2, rng), random_matrix(4, 3, rng),
                        random_matrix(1, 2, rng)};
  const std::vector<std::size_t> senders{0, 1, 1, 3, 2, 0};
  const std::vector<std::size_t> receivers{1, 0, 2, 2, 3, 3};
  const Matrix t = target(4, 7);
  expect_gradients_match(p, [&](Tape& tape, std::vector<Var>& v) {
    const std::array parts{v[0], v[1], tile_rows(v[2], 4)};
    Var nodes = concat_cols(parts);
    Var messages = gather_rows(nodes, senders);
    Var agg = scatter_sum(relu(messages), receivers, 4);
    return mean_squared_error(agg, tape.constant(t));
  });
}

TEST_F(GradientTest, RandomMlpWithMse) {
  MlpParams mlp = MlpParams::create(3, 8, 2, 4, true, rng);
  const Matrix input = random_matrix(4, 3, rng);
  const Matrix t = target(4, 4);
  auto tensors = mlp.tensors();

  Tape tape;
  tape.backward(mean_squared_error(mlp_forward(mlp, tape.constant(input), tape), tape.constant(t)));
  auto f = [&] {
    Tape inner;
    return mean_squared_error(mlp_forward(mlp, inner.constant(input), inner), inner.constant(t))
        .value()(0, 0);
  };
  for (Matrix* m : tensors) {
    const Matrix analytic = tape.gradient(*m);
    const Matrix numeric = central_difference(*m, f);
    EXPECT_LT(max_relative_error(analytic, numeric), 1e-5);
  }
}

TEST_F(GradientTest, BackwardIsDeterministic) {
  MlpParams mlp = MlpParams::create(3, 16, 2, 2, true, rng);
  const Matrix input = random_matrix(10, 3, rng);
  auto run = [&] {
    Tape tape;
    tape.backward(sum(mlp_forward(mlp, tape.constant(input), tape)));
    std::vector<Matrix> g;
    for (Matrix* m : mlp.tensors()) g.push_back(tape.gradient(*m));
    return g;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace gns
