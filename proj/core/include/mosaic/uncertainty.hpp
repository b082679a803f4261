#pragma once

#include <vector>

#include <Eigen/Core>

#include "mosaic/affine.hpp"
#include "mosaic/block_cholesky.hpp"
#include "mosaic/bundle_adjust.hpp"

namespace mosaic {

using Vector12d = Eigen::Matrix<double, 12, 1>;
using Matrix12d = Eigen::Matrix<double, 12, 12>;

struct ReconstructionBelief {
  int n_frames = 0;
  int reference = 0;
  Eigen::VectorXd mean;        // vec_aff of the non-reference frames
  Eigen::MatrixXd covariance;  // 6(N-1) square

  int unknown_block(int n) const { return n == reference ? -1 : (n > reference ? n - 1 : n); }
  AffineTransform2 transform(int n) const;
};

// Derivative of S theta - v with respect to one noisy coordinate of x̂_i (column of F).
struct DerivativeColumn {
  int band_j = -1;
  int band_i = -1;
  Vector6d f_j = Vector6d::Zero();
  Vector6d f_i = Vector6d::Zero();
};

// Columns ordered landmark-major: column 2l + d is coordinate d of points_i[l].
std::vector<DerivativeColumn> cross_derivative_columns(const CorrespondenceSet& c, const Eigen::VectorXd& theta,
                                                       int n_frames, int reference);

// sum_c sigma_c^2 f_c f_c^T over all correspondences of the system.
BlockSymmetricMatrix noise_moment_matrix(const BundleSystem& sys);

// Sigma_Theta = S^-1 M S^-1. Throws UnderDeterminedError if the system is not solvable.
ReconstructionBelief propagate_covariance(const BundleSystem& sys);

struct PairMarginal {
  Vector12d mean;
  Matrix12d covariance;
};

// Stacked (Theta_i, Theta_j); the reference block is the identity with zero covariance.
PairMarginal pair_marginal(const ReconstructionBelief& b, int i, int j);

}  // namespace mosaic
