#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "mosaic/affine.hpp"
#include "mosaic/bundle_adjust.hpp"
#include "mosaic/overlap_external.hpp"
#include "mosaic/session.hpp"

namespace mosaic {

struct TrajectoryTruth {
  std::vector<AffineTransform2> transforms;  // Θ_n with Θ_1 = identity
  std::vector<Point2> positions;             // trajectory coordinates of each frame centre
  FrameDomain domain;
  std::optional<SignatureSet> signatures;

  int size() const { return static_cast<int>(transforms.size()); }
  bool translation_only() const;
};

inline constexpr int kDefaultRasterFrames = 1000;
inline constexpr double kDefaultCircleRadius = 250.0;
inline constexpr int kDefaultLandmarks = 4;

TrajectoryTruth generate_raster(int n, double dx, double dy, const FrameDomain& dom = {});
// δx = width / 3, δy = height / 3.
TrajectoryTruth generate_raster(int n, const FrameDomain& dom = {});
// Carries the angle-mod-π signatures (cos 4πn/N, sin 4πn/N).
TrajectoryTruth generate_circle(int n, double radius = kDefaultCircleRadius, const FrameDomain& dom = {});
// Re-gauges so that the first transform is the identity.
TrajectoryTruth truth_from_transforms(std::vector<AffineTransform2> transforms, const FrameDomain& dom);

// Centre of I_i mapped by the true transforms lies in Ω of I_j.
bool truly_overlaps(const TrajectoryTruth& truth, FramePair p);

// |Ω_i ∩ Ω_j| / |Ω|; throws UnsupportedError for non-translation truths.
double ideal_external_probability(const TrajectoryTruth& truth, int i, int j);

class IdealExternalOverlap final : public ExternalOverlap {
 public:
  explicit IdealExternalOverlap(std::shared_ptr<const TrajectoryTruth> truth);
  double probability(int i, int j) const override { return ideal_external_probability(*truth_, i, j); }
  std::unique_ptr<ExternalOverlap> clone() const override { return std::make_unique<IdealExternalOverlap>(*this); }

 private:
  std::shared_ptr<const TrajectoryTruth> truth_;
};

// Ω_j ∩ (Θ_j^-1 Θ_i)(Ω) in I_j coordinates, as a convex polygon.
std::vector<Point2> overlap_polygon(const TrajectoryTruth& truth, FramePair p);

// Grid of n points inset 10% from the bounding box of a convex polygon, kept only if inside.
// Returns an empty list when fewer than n points (or only collinear points) fit.
std::vector<Point2> grid_landmarks(const std::vector<Point2>& polygon, int n);

// Noiseless gold-standard correspondence for a truly overlapping pair.
std::optional<CorrespondenceSet> true_correspondence(const TrajectoryTruth& truth, FramePair p, int n_landmarks);

Feedback simulated_agent(const TrajectoryTruth& truth, FramePair p, int n_landmarks, double sigma, std::uint64_t seed);

class Agent {
 public:
  virtual ~Agent() = default;
  virtual Feedback answer(FramePair p) = 0;
};

class SimulatedAgent final : public Agent {
 public:
  SimulatedAgent(std::shared_ptr<const TrajectoryTruth> truth, int n_landmarks, double sigma, std::uint64_t seed);
  Feedback answer(FramePair p) override;

 private:
  std::shared_ptr<const TrajectoryTruth> truth_;
  int n_landmarks_;
  double sigma_;
  std::uint64_t seed_;
};

// Answers Overlap with stored correspondences, NoOverlap for every other pair.
class ReplayAgent final : public Agent {
 public:
  explicit ReplayAgent(std::vector<CorrespondenceSet> known);
  Feedback answer(FramePair p) override;

 private:
  std::map<FramePair, CorrespondenceSet> known_;
};

// Correspondences on every consecutive pair (n, n+1). Throws if the agent declines one.
std::vector<CorrespondenceSet> initial_chain(Agent& agent, int n_frames);

struct ImageRaster {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved

  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) *
                      static_cast<std::size_t>(channels) +
                  static_cast<std::size_t>(c)];
  }
};

// Smooth deterministic value-noise texture.
ImageRaster procedural_texture(int width, int height, std::uint64_t seed);

struct TextureLayout {
  int origin_x = 0;  // texture pixel of canvas (0, 0)
  int origin_y = 0;
  int width = 0;
  int height = 0;
};

// Smallest texture size holding every frame of a translation truth.
TextureLayout texture_layout(const TrajectoryTruth& truth, int margin = 0);

// One domain-sized crop per frame at its true (rounded) position. Throws when a crop leaves the texture.
std::vector<ImageRaster> texture_crop_sequence(const ImageRaster& source, const TrajectoryTruth& truth,
                                               const TextureLayout& layout);

}  // namespace mosaic
