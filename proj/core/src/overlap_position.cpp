#include "mosaic/overlap_position.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "mosaic/errors.hpp"

namespace mosaic {

double OverlapEstimate::refined() const {
  if (!mc) return upper;
  return std::clamp(*mc, lower, upper);
}

SquareHalfLengths square_half_lengths(const FrameDomain& dom) {
  return {std::min(dom.width, dom.height) / (2.0 * std::sqrt(2.0)), 0.5 * dom.diagonal()};
}

double eigenvalue_floor(const FrameDomain& dom) { return 1e-12 * dom.max_side() * dom.max_side(); }

Point2 mapped_centre(const AffineTransform2& ti, const AffineTransform2& tj, const FrameDomain& dom) {
  return apply(invert(tj), apply(ti, dom.centre()));
}

Matrix2x12d centre_jacobian(const AffineTransform2& ti, const AffineTransform2& tj, const FrameDomain& dom) {
  if (!is_invertible(tj)) throw SingularTransformError("frame transform has a singular linear part");
  const Eigen::Matrix2d lj_inv = tj.linear().inverse();
  const Eigen::Vector3d g(dom.centre().x(), dom.centre().y(), 1.0);
  const Point2 m = mapped_centre(ti, tj, dom);
  const Eigen::Vector3d gm(m.x(), m.y(), 1.0);
  Matrix2x12d j;
  for (int r = 0; r < 2; ++r) {
    for (int k = 0; k < 2; ++k) {
      j.block<1, 3>(r, 3 * k) = lj_inv(r, k) * g.transpose();
      j.block<1, 3>(r, 6 + 3 * k) = -lj_inv(r, k) * gm.transpose();
    }
  }
  return j;
}

CentreDistribution centre_distribution(const AffineTransform2& ti, const AffineTransform2& tj, const Matrix12d& cov12,
                                       const FrameDomain& dom) {
  CentreDistribution cd;
  const Matrix2x12d j = centre_jacobian(ti, tj, dom);
  cd.mean = mapped_centre(ti, tj, dom);
  cd.covariance = j * cov12 * j.transpose();
  cd.covariance = 0.5 * (cd.covariance + cd.covariance.transpose()).eval();
  cd.displacement = dom.centre() - cd.mean;

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cd.covariance);
  const double floor = eigenvalue_floor(dom);
  cd.nu1 = std::max(es.eigenvalues()[1], floor);
  cd.nu2 = std::max(es.eigenvalues()[0], floor);
  cd.u1 = es.eigenvectors().col(1).normalized();
  cd.u2 = es.eigenvectors().col(0).normalized();
  if (cd.displacement.dot(cd.u1) < 0.0) cd.u1 = -cd.u1;
  if (cd.displacement.dot(cd.u2) < 0.0) cd.u2 = -cd.u2;
  return cd;
}

double square_overlap_factor(double x, double nu, double a) {
  const double s = std::sqrt(2.0 * nu);
  x = std::abs(x);
  if (x - a > 0.0) return 0.5 * (std::erfc((x - a) / s) - std::erfc((x + a) / s));
  return 0.5 * (std::erf((x + a) / s) - std::erf((x - a) / s));
}

OverlapBounds overlap_bounds(const CentreDistribution& cd, const FrameDomain& dom) {
  const SquareHalfLengths a = square_half_lengths(dom);
  const double floor = eigenvalue_floor(dom);
  const double nu1 = std::max(cd.nu1, floor);
  const double nu2 = std::max(cd.nu2, floor);
  const double x1 = cd.displacement.dot(cd.u1);
  const double x2 = cd.displacement.dot(cd.u2);
  OverlapBounds b;
  b.lower = square_overlap_factor(x1, nu1, a.inner) * square_overlap_factor(x2, nu2, a.inner);
  b.upper = square_overlap_factor(x1, nu1, a.outer) * square_overlap_factor(x2, nu2, a.outer);
  b.lower = std::clamp(b.lower, 0.0, 1.0);
  b.upper = std::clamp(b.upper, b.lower, 1.0);
  return b;
}

double overlap_probability_mc(const CentreDistribution& cd, const FrameDomain& dom, int n_samples,
                              std::uint64_t seed) {
  if (n_samples < 1) throw InvalidArgument("Monte Carlo estimate needs at least one sample");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cd.covariance);
  const Eigen::Vector2d sd = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::Matrix2d root = es.eigenvectors() * sd.asDiagonal();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  int inside = 0;
  for (int s = 0; s < n_samples; ++s) {
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    const Point2 p = cd.mean + root * Eigen::Vector2d(z1, z2);
    if (dom.contains(p)) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(n_samples);
}

}  // namespace mosaic
