#include <gtest/gtest.h>

#include <random>

#include "mosaic/affine.hpp"
#include "mosaic/errors.hpp"
#include "support.hpp"

using namespace mosaic;

TEST(Affine, ApplyExamples) {
  EXPECT_EQ(apply(AffineTransform2::identity(), {7.0, -2.0}), Point2(7.0, -2.0));
  EXPECT_EQ(apply(AffineTransform2({1, 0, 3, 0, 1, 5}), {2.0, 2.0}), Point2(5.0, 7.0));
  EXPECT_EQ(apply(AffineTransform2::scaling(2.0), {1.0, 3.0}), Point2(2.0, 6.0));
}

TEST(Affine, ComposeExamples) {
  const AffineTransform2 t({1.5, 0.2, 3.0, -0.1, 0.9, 4.0});
  EXPECT_EQ(compose(AffineTransform2::identity(), t), t);
  EXPECT_EQ(compose(AffineTransform2::translation(1, 0), AffineTransform2::translation(2, 0)),
            AffineTransform2::translation(3, 0));
  EXPECT_EQ(apply(compose(AffineTransform2::scaling(2.0), AffineTransform2::translation(1, 1)), {0.0, 0.0}),
            Point2(2.0, 2.0));
}

TEST(Affine, InvertExamples) {
  EXPECT_EQ(invert(AffineTransform2::identity()), AffineTransform2::identity());
  EXPECT_EQ(invert(AffineTransform2::translation(3, 5)), AffineTransform2::translation(-3, -5));
  EXPECT_EQ(invert(AffineTransform2::scaling(2.0)), AffineTransform2::scaling(0.5));
}

TEST(Affine, SingularInverseThrows) {
  const AffineTransform2 s({1, 2, 0, 2, 4, 0});
  EXPECT_FALSE(is_invertible(s));
  EXPECT_THROW(invert(s), SingularTransformError);
  EXPECT_THROW(invert(AffineTransform2({0, 0, 1, 0, 0, 1})), SingularTransformError);
}

TEST(Affine, HomogeneousRoundTrip) {
  const AffineTransform2 t({1.5, 0.2, 3.0, -0.1, 0.9, 4.0});
  const Eigen::Matrix3d h = t.homogeneous();
  EXPECT_EQ(h.row(2), Eigen::RowVector3d(0, 0, 1));
  EXPECT_EQ(AffineTransform2::from_homogeneous(h), t);
  Eigen::Matrix3d bad = h;
  bad(2, 0) = 1e-3;
  EXPECT_THROW(AffineTransform2::from_homogeneous(bad), InvalidArgument);
  EXPECT_EQ(AffineTransform2::from_vec(t.vec()), t);
}

TEST(Affine, GroupPropertiesOnRandomTransforms) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = test::random_affine(rng, 0.4);
    const auto b = test::random_affine(rng, 0.4);
    const auto c = test::random_affine(rng, 0.4);
    const Point2 p(10.0 * trial, -3.0);
    EXPECT_LT((apply(compose(a, b), p) - apply(a, apply(b, p))).norm(), 1e-9);
    EXPECT_LT(max_abs_difference(compose(compose(a, b), c), compose(a, compose(b, c))), 1e-9);
    EXPECT_LT(max_abs_difference(compose(a, invert(a)), AffineTransform2::identity()), 1e-9);
    EXPECT_LT(max_abs_difference(compose(invert(a), a), AffineTransform2::identity()), 1e-9);
  }
}

TEST(Affine, FrameDomain) {
  const FrameDomain d(100.0, 50.0);
  EXPECT_EQ(d.centre(), Point2(50.0, 25.0));
  EXPECT_DOUBLE_EQ(d.diagonal(), std::sqrt(12500.0));
  EXPECT_TRUE(d.contains({0.0, 50.0}));
  EXPECT_FALSE(d.contains({100.1, 10.0}));
  EXPECT_THROW(FrameDomain(0.0, 10.0), InvalidArgument);
  EXPECT_THROW(FrameDomain(10.0, -1.0), InvalidArgument);
}
