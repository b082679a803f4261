#include "mosaic/affine.hpp"

#include <algorithm>
#include <cmath>

#include "mosaic/errors.hpp"

namespace mosaic {

FrameDomain::FrameDomain(double w, double h) : width(w), height(h) {
  if (!(w > 0.0) || !(h > 0.0) || !std::isfinite(w) || !std::isfinite(h)) {
    throw InvalidArgument("frame domain needs positive finite width and height");
  }
}

double FrameDomain::diagonal() const { return std::hypot(width, height); }

AffineTransform2 AffineTransform2::from_vec(const Vector6d& v) {
  return AffineTransform2({v[0], v[1], v[2], v[3], v[4], v[5]});
}

AffineTransform2 AffineTransform2::from_homogeneous(const Eigen::Matrix3d& m) {
  if (m(2, 0) != 0.0 || m(2, 1) != 0.0 || m(2, 2) != 1.0) {
    throw InvalidArgument("homogeneous affine matrix must end with row (0, 0, 1)");
  }
  return AffineTransform2({m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2)});
}

Vector6d AffineTransform2::vec() const {
  Vector6d v;
  v << p_[0], p_[1], p_[2], p_[3], p_[4], p_[5];
  return v;
}

Eigen::Matrix3d AffineTransform2::homogeneous() const {
  Eigen::Matrix3d m;
  m << p_[0], p_[1], p_[2], p_[3], p_[4], p_[5], 0.0, 0.0, 1.0;
  return m;
}

Eigen::Matrix2d AffineTransform2::linear() const {
  Eigen::Matrix2d m;
  m << p_[0], p_[1], p_[3], p_[4];
  return m;
}

bool AffineTransform2::is_translation() const {
  return p_[0] == 1.0 && p_[1] == 0.0 && p_[3] == 0.0 && p_[4] == 1.0;
}

Point2 apply(const AffineTransform2& t, const Point2& p) {
  return {t[0] * p.x() + t[1] * p.y() + t[2], t[3] * p.x() + t[4] * p.y() + t[5]};
}

AffineTransform2 compose(const AffineTransform2& a, const AffineTransform2& b) {
  return AffineTransform2({a[0] * b[0] + a[1] * b[3], a[0] * b[1] + a[1] * b[4],
                           a[0] * b[2] + a[1] * b[5] + a[2], a[3] * b[0] + a[4] * b[3],
                           a[3] * b[1] + a[4] * b[4], a[3] * b[2] + a[4] * b[5] + a[5]});
}

bool is_invertible(const AffineTransform2& t) {
  const double scale = std::max({std::abs(t[0]), std::abs(t[1]), std::abs(t[3]), std::abs(t[4])});
  const double det = t.determinant();
  return std::isfinite(det) && scale > 0.0 && std::abs(det) >= 1e-12 * scale * scale;
}

AffineTransform2 invert(const AffineTransform2& t) {
  if (!is_invertible(t)) {
    throw SingularTransformError("affine transform has a singular linear part");
  }
  const double inv_det = 1.0 / t.determinant();
  const double a = t[4] * inv_det;
  const double b = -t[1] * inv_det;
  const double c = -t[3] * inv_det;
  const double d = t[0] * inv_det;
  return AffineTransform2({a, b, -(a * t[2] + b * t[5]), c, d, -(c * t[2] + d * t[5])});
}

double max_abs_difference(const AffineTransform2& a, const AffineTransform2& b) {
  double m = 0.0;
  for (int k = 0; k < 6; ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace mosaic
