#include "mosaic/uncertainty.hpp"

#include <algorithm>

#include "mosaic/errors.hpp"

namespace mosaic {

namespace {

constexpr int kPanelBlocks = 20;

void check_frame(int n, int n_frames) {
  if (n < 0 || n >= n_frames) throw InvalidArgument("frame index out of range");
}

}  // namespace

AffineTransform2 ReconstructionBelief::transform(int n) const {
  check_frame(n, n_frames);
  const int b = unknown_block(n);
  if (b < 0) return AffineTransform2::identity();
  return AffineTransform2::from_vec(mean.segment<6>(6 * b));
}

std::vector<DerivativeColumn> cross_derivative_columns(const CorrespondenceSet& c, const Eigen::VectorXd& theta,
                                                       int n_frames, int reference) {
  const PairBlocks pb = assemble_pair_blocks(c, n_frames, reference);
  const int l_count = static_cast<int>(c.size());

  Eigen::VectorXd r = -pb.b;
  if (pb.band_j >= 0) r.noalias() += pb.a_j.transpose() * theta.segment<6>(6 * pb.band_j);
  if (pb.band_i >= 0) r.noalias() += pb.a_i.transpose() * theta.segment<6>(6 * pb.band_i);

  Eigen::Matrix2d lin_i = Eigen::Matrix2d::Identity();
  if (pb.band_i >= 0) lin_i = AffineTransform2::from_vec(theta.segment<6>(6 * pb.band_i)).linear();

  std::vector<DerivativeColumn> cols(static_cast<std::size_t>(2 * l_count));
  for (int l = 0; l < l_count; ++l) {
    const Point2& xj = c.points_j[static_cast<std::size_t>(l)];
    const Point2& xi = c.points_i[static_cast<std::size_t>(l)];
    for (int d = 0; d < 2; ++d) {
      DerivativeColumn& col = cols[static_cast<std::size_t>(2 * l + d)];
      col.band_j = pb.band_j;
      col.band_i = pb.band_i;
      for (int k = 0; k < 2; ++k) {
        const double dr = -lin_i(k, d);
        col.f_j.segment<3>(3 * k) += dr * Eigen::Vector3d(xj.x(), xj.y(), 1.0);
        col.f_i.segment<3>(3 * k) -= dr * Eigen::Vector3d(xi.x(), xi.y(), 1.0);
        col.f_i(3 * k + d) -= r[k * l_count + l];
      }
      if (pb.band_j < 0) col.f_j.setZero();
      if (pb.band_i < 0) col.f_i.setZero();
    }
  }
  return cols;
}

BlockSymmetricMatrix noise_moment_matrix(const BundleSystem& sys) {
  BlockSymmetricMatrix m(sys.n_frames() - 1);
  for (const auto& c : sys.correspondences()) {
    const double var = c.sigma * c.sigma;
    Block6 jj = Block6::Zero();
    Block6 ii = Block6::Zero();
    Block6 ji = Block6::Zero();
    int band_j = -1;
    int band_i = -1;
    for (const auto& col : cross_derivative_columns(c, sys.theta(), sys.n_frames(), sys.reference())) {
      band_j = col.band_j;
      band_i = col.band_i;
      jj.noalias() += var * col.f_j * col.f_j.transpose();
      ii.noalias() += var * col.f_i * col.f_i.transpose();
      ji.noalias() += var * col.f_j * col.f_i.transpose();
    }
    if (band_j >= 0) m.add(band_j, band_j, jj);
    if (band_i >= 0) m.add(band_i, band_i, ii);
    if (band_j >= 0 && band_i >= 0) m.add(band_j, band_i, ji);
  }
  return m;
}

ReconstructionBelief propagate_covariance(const BundleSystem& sys) {
  ReconstructionBelief belief;
  belief.n_frames = sys.n_frames();
  belief.reference = sys.reference();
  if (!sys.solved()) throw UnderDeterminedError("bundle system has not been solved", {});
  belief.mean = sys.theta();

  const int n_blocks = sys.n_frames() - 1;
  const int n = 6 * n_blocks;
  belief.covariance.setZero(n, n);
  if (n_blocks == 0) return belief;

  const BlockSymmetricMatrix m = noise_moment_matrix(sys);
  const BlockCholesky& factor = sys.factor();
  RowPanel y;
  for (int first = 0; first < n_blocks; first += kPanelBlocks) {
    const int last = std::min(n_blocks, first + kPanelBlocks);
    const RowPanel x = factor.inverse_columns(first, last);
    m.multiply(x, y);
    factor.solve_in_place(y);
    belief.covariance.middleCols(6 * first, 6 * (last - first)) = y;
  }
  constexpr int tile = 64;
  for (int c0 = 0; c0 < n; c0 += tile) {
    for (int r0 = c0; r0 < n; r0 += tile) {
      const int rows = std::min(tile, n - r0);
      const int cols = std::min(tile, n - c0);
      Eigen::MatrixXd avg = 0.5 * (belief.covariance.block(r0, c0, rows, cols) +
                                   belief.covariance.block(c0, r0, cols, rows).transpose());
      belief.covariance.block(r0, c0, rows, cols) = avg;
      belief.covariance.block(c0, r0, cols, rows) = avg.transpose();
    }
  }
  return belief;
}

PairMarginal pair_marginal(const ReconstructionBelief& b, int i, int j) {
  check_frame(i, b.n_frames);
  check_frame(j, b.n_frames);
  if (i == j) throw InvalidArgument("pair marginal needs two distinct frames");
  PairMarginal out;
  out.mean.head<6>() = b.transform(i).vec();
  out.mean.tail<6>() = b.transform(j).vec();
  out.covariance.setZero();
  const int bi = b.unknown_block(i);
  const int bj = b.unknown_block(j);
  if (bi >= 0) out.covariance.topLeftCorner<6, 6>() = b.covariance.block<6, 6>(6 * bi, 6 * bi);
  if (bj >= 0) out.covariance.bottomRightCorner<6, 6>() = b.covariance.block<6, 6>(6 * bj, 6 * bj);
  if (bi >= 0 && bj >= 0) {
    out.covariance.topRightCorner<6, 6>() = b.covariance.block<6, 6>(6 * bi, 6 * bj);
    out.covariance.bottomLeftCorner<6, 6>() = b.covariance.block<6, 6>(6 * bj, 6 * bi);
  }
  return out;
}

}  // namespace mosaic
