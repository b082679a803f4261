#pragma once

#include <array>

#include <Eigen/Core>

namespace mosaic {

using Point2 = Eigen::Vector2d;
using Vector6d = Eigen::Matrix<double, 6, 1>;

struct FrameDomain {
  double width = 100.0;
  double height = 100.0;

  FrameDomain() = default;
  FrameDomain(double w, double h);

  Point2 centre() const { return {0.5 * width, 0.5 * height}; }
  double diagonal() const;
  double max_side() const { return width > height ? width : height; }
  double area() const { return width * height; }
  bool contains(const Point2& p) const {
    return p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height;
  }
};

// Planar affine map (t1 t2 t3; t4 t5 t6; 0 0 1).
class AffineTransform2 {
 public:
  using Params = std::array<double, 6>;

  AffineTransform2() : p_{1.0, 0.0, 0.0, 0.0, 1.0, 0.0} {}
  explicit AffineTransform2(const Params& p) : p_(p) {}

  static AffineTransform2 identity() { return {}; }
  static AffineTransform2 translation(double tx, double ty) {
    return AffineTransform2({1.0, 0.0, tx, 0.0, 1.0, ty});
  }
  static AffineTransform2 scaling(double s) { return AffineTransform2({s, 0.0, 0.0, 0.0, s, 0.0}); }
  static AffineTransform2 from_vec(const Vector6d& v);
  static AffineTransform2 from_homogeneous(const Eigen::Matrix3d& m);

  const Params& params() const { return p_; }
  double operator[](int k) const { return p_[static_cast<std::size_t>(k)]; }

  Vector6d vec() const;
  Eigen::Matrix3d homogeneous() const;
  Eigen::Matrix2d linear() const;
  Eigen::Vector2d offset() const { return {p_[2], p_[5]}; }
  double determinant() const { return p_[0] * p_[4] - p_[1] * p_[3]; }
  bool is_translation() const;

  bool operator==(const AffineTransform2& o) const { return p_ == o.p_; }

 private:
  Params p_;
};

Point2 apply(const AffineTransform2& t, const Point2& p);

// apply(compose(a, b), p) == apply(a, apply(b, p))
AffineTransform2 compose(const AffineTransform2& a, const AffineTransform2& b);

bool is_invertible(const AffineTransform2& t);

// Throws SingularTransformError.
AffineTransform2 invert(const AffineTransform2& t);

double max_abs_difference(const AffineTransform2& a, const AffineTransform2& b);

}  // namespace mosaic
