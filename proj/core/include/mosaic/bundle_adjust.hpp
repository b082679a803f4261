#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mosaic/affine.hpp"
#include "mosaic/block_cholesky.hpp"

namespace mosaic {

// Ordered frame pair, 0-based.
struct FramePair {
  int i = 0;
  int j = 0;

  FramePair canonical() const { return i < j ? *this : FramePair{j, i}; }
  auto operator<=>(const FramePair&) const = default;
};

struct FramePairHash {
  std::size_t operator()(const FramePair& p) const noexcept {
    return std::hash<std::uint64_t>()((static_cast<std::uint64_t>(static_cast<std::uint32_t>(p.i)) << 32) |
                                      static_cast<std::uint32_t>(p.j));
  }
};

inline constexpr int kMinLandmarks = 3;

struct CorrespondenceSet {
  FramePair pair;
  std::vector<Point2> points_j;  // in I_j
  std::vector<Point2> points_i;  // in I_i
  double sigma = 1.0;

  std::size_t size() const { return points_j.size(); }
  // Throws InvalidArgument.
  void validate(int n_frames) const;
};

// The two nonzero 6-row bands of A_ij and the vector b_ij. A band index of -1 means the reference frame.
struct PairBlocks {
  int band_j = -1;
  int band_i = -1;
  Eigen::Matrix<double, 6, Eigen::Dynamic> a_j;
  Eigen::Matrix<double, 6, Eigen::Dynamic> a_i;
  Eigen::VectorXd b;

  Eigen::MatrixXd dense(int n_unknowns) const;
};

// Needs i != j and both in range; any landmark count >= 1.
PairBlocks assemble_pair_blocks(const CorrespondenceSet& c, int n_frames, int reference);

// Row-stacked vec of a 2 x L point list: (x_1..x_L, y_1..y_L).
Eigen::VectorXd vec_row(const std::vector<Point2>& points);

class BundleSystem {
 public:
  explicit BundleSystem(int n_frames, int reference = 0);

  int n_frames() const { return n_frames_; }
  int reference() const { return reference_; }
  int n_unknowns() const { return 6 * (n_frames_ - 1); }
  // Unknown block of frame n, or -1 for the reference.
  int unknown_block(int n) const { return n == reference_ ? -1 : (n > reference_ ? n - 1 : n); }
  int frame_of_block(int b) const { return b >= reference_ ? b + 1 : b; }

  // Updates S and v, replacing any earlier measurement of the same unordered pair. Does not solve.
  void stage(CorrespondenceSet c);
  // Refactors S and re-solves. Throws UnderDeterminedError.
  void refresh();
  // stage + refresh; on failure the system is left as before the call.
  void add_correspondence(CorrespondenceSet c);

  bool solved() const { return solved_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  AffineTransform2 transform(int n) const;
  std::vector<AffineTransform2> transforms() const;

  const BlockSymmetricMatrix& normal_matrix() const { return s_; }
  const Eigen::VectorXd& rhs() const { return v_; }
  const BlockCholesky& factor() const { return factor_; }

  // Correspondences in insertion order.
  const std::vector<CorrespondenceSet>& correspondences() const { return sets_; }
  const CorrespondenceSet* find(FramePair p) const;

  // Sum of squared mosaic-space residuals at the given unknown vector.
  double objective(const Eigen::VectorXd& theta) const;
  double objective(const std::vector<AffineTransform2>& transforms) const;

  std::vector<int> frames_disconnected_from_reference() const;

 private:
  void accumulate(const CorrespondenceSet& c, double sign);

  int n_frames_;
  int reference_;
  BlockSymmetricMatrix s_;
  Eigen::VectorXd v_;
  BlockCholesky factor_;
  Eigen::VectorXd theta_;
  bool solved_ = false;
  std::vector<CorrespondenceSet> sets_;
  std::map<FramePair, std::size_t> index_;
};

std::vector<AffineTransform2> solve(BundleSystem& sys);

}  // namespace mosaic
