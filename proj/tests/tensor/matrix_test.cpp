#include "gns/tensor/matrix.hpp"

#include <gtest/gtest.h>

#include "gns/errors.hpp"

namespace gns {
namespace {

TEST(MatrixTest, InitializerListIsRowMajor) {
  Matrix m{{1, 2, 3}, {4, 5, 6}};
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m.cols(), 3u);
  EXPECT_EQ(m(1, 0), 4.0);
  EXPECT_EQ(m.data()[2], 3.0);
  EXPECT_EQ(m.row(1)[2], 6.0);
}

TEST(MatrixTest, RaggedInitializerThrows) {
  EXPECT_THROW((Matrix{{1, 2}, {3}}), ShapeError);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(MatrixTest, EqualityIsShapeAware) {
  EXPECT_EQ(Matrix(2, 3), Matrix(2, 3));
  EXPECT_FALSE(Matrix(2, 3) == Matrix(3, 2));
  EXPECT_EQ(Matrix(0, 128), Matrix(0, 128));
}

TEST(MatrixTest, AccumulateRequiresSameShape) {
  Matrix a(2, 2, 1.0);
  a += Matrix(2, 2, 2.0);
  EXPECT_EQ(a, Matrix(2, 2, 3.0));
  EXPECT_THROW(a += Matrix(1, 2), ShapeError);
}

}  // namespace
}  // namespace gns
