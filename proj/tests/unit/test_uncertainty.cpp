#include <gtest/gtest.h>

#include <random>

#include <Eigen/Dense>

#include "mosaic/errors.hpp"
#include "mosaic/uncertainty.hpp"
#include "support.hpp"

using namespace mosaic;

namespace {

const std::vector<Point2> kSquare{{10, 10}, {90, 10}, {90, 90}, {10, 90}};

struct Instance {
  std::vector<CorrespondenceSet> sets;
  int n = 0;
};

Instance noisy_instance(std::mt19937_64& rng, int n, double sigma) {
  Instance in;
  in.n = n;
  const auto truth = test::random_truth(rng, n, 0.1);
  for (int k = 0; k + 1 < n; ++k) {
    in.sets.push_back(test::exact_correspondence(truth, {k, k + 1}, test::random_points(rng, 4), sigma, &rng));
  }
  if (n > 2) in.sets.push_back(test::exact_correspondence(truth, {0, n - 1}, kSquare, sigma, &rng));
  return in;
}

BundleSystem build(const Instance& in, int reference = 0) {
  BundleSystem sys(in.n, reference);
  for (const auto& c : in.sets) sys.stage(c);
  sys.refresh();
  return sys;
}

Eigen::VectorXd pair_gradient(const CorrespondenceSet& c, const Eigen::VectorXd& theta, int n, int r) {
  const PairBlocks pb = assemble_pair_blocks(c, n, r);
  const Eigen::MatrixXd a = pb.dense(6 * (n - 1));
  return a * (a.transpose() * theta - pb.b);
}

}  // namespace

TEST(Uncertainty, CrossDerivativeColumnsMatchFiniteDifferences) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = noisy_instance(rng, 3, 1.0);
    const BundleSystem sys = build(in, trial % 3);
    for (const auto& c : in.sets) {
      const auto cols = cross_derivative_columns(c, sys.theta(), in.n, sys.reference());
      ASSERT_EQ(cols.size(), 2 * c.size());
      for (std::size_t l = 0; l < c.size(); ++l) {
        for (int d = 0; d < 2; ++d) {
          const double h = 1e-5;
          CorrespondenceSet plus = c;
          CorrespondenceSet minus = c;
          plus.points_i[l][d] += h;
          minus.points_i[l][d] -= h;
          const Eigen::VectorXd fd = (pair_gradient(plus, sys.theta(), in.n, sys.reference()) -
                                      pair_gradient(minus, sys.theta(), in.n, sys.reference())) /
                                     (2 * h);
          Eigen::VectorXd col = Eigen::VectorXd::Zero(fd.size());
          const auto& dc = cols[2 * l + static_cast<std::size_t>(d)];
          if (dc.band_j >= 0) col.segment<6>(6 * dc.band_j) += dc.f_j;
          if (dc.band_i >= 0) col.segment<6>(6 * dc.band_i) += dc.f_i;
          EXPECT_LT((col - fd).norm(), 1e-4 * std::max(1.0, fd.norm()));
          int nonzeros = 0;
          for (Eigen::Index q = 0; q < col.size(); ++q) nonzeros += col[q] != 0.0;
          EXPECT_LE(nonzeros, 12);
        }
      }
    }
  }
}

TEST(Uncertainty, CovarianceMatchesFiniteDifferenceJacobian) {
  std::mt19937_64 rng(2);
  const Instance in = noisy_instance(rng, 3, 1.0);
  const BundleSystem sys = build(in);
  const ReconstructionBelief b = propagate_covariance(sys);
  // J = d theta_hat / d m_hat by central differences on the re-solved system.
  std::vector<Eigen::VectorXd> jcols;
  for (std::size_t s = 0; s < in.sets.size(); ++s) {
    for (std::size_t l = 0; l < in.sets[s].size(); ++l) {
      for (int d = 0; d < 2; ++d) {
        const double h = 1e-5;
        Instance plus = in;
        Instance minus = in;
        plus.sets[s].points_i[l][d] += h;
        minus.sets[s].points_i[l][d] -= h;
        jcols.push_back((build(plus).theta() - build(minus).theta()) / (2 * h));
      }
    }
  }
  Eigen::MatrixXd j(sys.n_unknowns(), static_cast<Eigen::Index>(jcols.size()));
  for (std::size_t q = 0; q < jcols.size(); ++q) j.col(static_cast<Eigen::Index>(q)) = jcols[q];
  const Eigen::MatrixXd ref = j * j.transpose();
  EXPECT_LT((b.covariance - ref).norm(), 1e-4 * ref.norm());
}

TEST(Uncertainty, SigmaScaling) {
  std::mt19937_64 rng(3);
  Instance in = noisy_instance(rng, 4, 1.0);
  const auto base = propagate_covariance(build(in));
  for (auto& c : in.sets) c.sigma = 2.0;
  const auto doubled = propagate_covariance(build(in));
  EXPECT_LT((doubled.covariance - 4.0 * base.covariance).norm(), 1e-10 * base.covariance.norm());
  for (auto& c : in.sets) c.sigma = 0.0;
  EXPECT_EQ(propagate_covariance(build(in)).covariance.norm(), 0.0);
}

TEST(Uncertainty, CovarianceIsSymmetricPsd) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Instance in = noisy_instance(rng, 6, 1.0);
    const auto b = propagate_covariance(build(in, trial % 6));
    EXPECT_EQ((b.covariance - b.covariance.transpose()).norm(), 0.0);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(b.covariance).eigenvalues().minCoeff();
    EXPECT_GE(min_eig, -1e-8 * b.covariance.trace());
  }
}

TEST(Uncertainty, UnsolvedSystemThrows) {
  BundleSystem sys(3);
  EXPECT_THROW(propagate_covariance(sys), UnderDeterminedError);
}

TEST(Uncertainty, PairMarginal) {
  std::mt19937_64 rng(5);
  const Instance in = noisy_instance(rng, 4, 1.0);
  const auto b = propagate_covariance(build(in));
  const PairMarginal ref = pair_marginal(b, 0, 2);
  EXPECT_EQ(ref.mean.head<6>(), AffineTransform2::identity().vec());
  EXPECT_EQ(ref.covariance.block(0, 0, 6, 6).norm(), 0.0);
  EXPECT_EQ(ref.covariance.block(0, 6, 6, 6).norm(), 0.0);

  const PairMarginal ij = pair_marginal(b, 1, 3);
  const PairMarginal ji = pair_marginal(b, 3, 1);
  EXPECT_EQ(ij.mean.head<6>(), ji.mean.tail<6>());
  EXPECT_EQ(ij.covariance.block(0, 0, 6, 6), ji.covariance.block(6, 6, 6, 6));
  EXPECT_EQ(ij.covariance.block(0, 6, 6, 6), ji.covariance.block(6, 0, 6, 6));
  EXPECT_EQ(ij.covariance.block(0, 0, 6, 6), b.covariance.block(0, 0, 6, 6));
  EXPECT_EQ(ij.covariance.block(6, 6, 6, 6), b.covariance.block(12, 12, 6, 6));
}

TEST(Uncertainty, MoreLandmarksShrinkPredictiveCovariance) {
  const std::vector<Point2> pts{{10, 10}, {90, 15}, {50, 85}, {20, 70}, {75, 60}, {40, 30}, {60, 45}, {85, 88}};
  const Point2 probe(120.0, -30.0);
  Eigen::Matrix<double, 2, 6> j = Eigen::Matrix<double, 2, 6>::Zero();
  j.block<1, 3>(0, 0) << probe.x(), probe.y(), 1.0;
  j.block<1, 3>(1, 3) << probe.x(), probe.y(), 1.0;
  Eigen::Matrix2d previous = Eigen::Matrix2d::Constant(1e300);
  for (int count : {3, 4, 8}) {
    std::vector<Point2> pj(pts.begin(), pts.begin() + count);
    BundleSystem sys(2);
    sys.add_correspondence({{0, 1}, pj, pj, 1.0});
    const auto b = propagate_covariance(sys);
    const Eigen::Matrix2d c = j * b.covariance * j.transpose();
    if (count > 3) {
      EXPECT_LT(c.trace(), previous.trace());
      EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(previous - c).eigenvalues().minCoeff(), -1e-9);
    }
    previous = c;
  }
}
