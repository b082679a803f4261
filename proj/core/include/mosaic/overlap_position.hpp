#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "mosaic/affine.hpp"
#include "mosaic/uncertainty.hpp"

namespace mosaic {

using Matrix2x12d = Eigen::Matrix<double, 2, 12>;

struct CentreDistribution {
  Point2 mean = Point2::Zero();                              // γ̂_ij in I_j
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();      // Σ_γ, unclamped
  double nu1 = 0.0;                                          // clamped, nu1 >= nu2
  double nu2 = 0.0;
  Eigen::Vector2d u1 = Eigen::Vector2d::UnitX();
  Eigen::Vector2d u2 = Eigen::Vector2d::UnitY();
  Eigen::Vector2d displacement = Eigen::Vector2d::Zero();   // γ - γ̂_ij
};

struct SquareHalfLengths {
  double inner = 0.0;
  double outer = 0.0;
};

struct OverlapBounds {
  double lower = 0.0;
  double upper = 0.0;
};

struct OverlapEstimate {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> mc;
  int n_samples = 0;

  // MC estimate clamped into [lower, upper]; the upper bound when no MC is available.
  double refined() const;
};

inline constexpr int kDefaultMcSamples = 4096;

SquareHalfLengths square_half_lengths(const FrameDomain& dom);
double eigenvalue_floor(const FrameDomain& dom);

// Θ_j^-1 Θ_i applied to the frame centre.
Point2 mapped_centre(const AffineTransform2& ti, const AffineTransform2& tj, const FrameDomain& dom);
// Derivative of mapped_centre with respect to (vec(Θ_i), vec(Θ_j)).
Matrix2x12d centre_jacobian(const AffineTransform2& ti, const AffineTransform2& tj, const FrameDomain& dom);

// Throws SingularTransformError when Θ_j is singular.
CentreDistribution centre_distribution(const AffineTransform2& ti, const AffineTransform2& tj, const Matrix12d& cov12,
                                       const FrameDomain& dom);

// Mass of N(x, nu) inside [-a, a].
double square_overlap_factor(double x, double nu, double a);

OverlapBounds overlap_bounds(const CentreDistribution& cd, const FrameDomain& dom);

double overlap_probability_mc(const CentreDistribution& cd, const FrameDomain& dom, int n_samples,
                              std::uint64_t seed);

}  // namespace mosaic
