#pragma once

#include <vector>

#include "mosaic/reward.hpp"

namespace mosaic {

inline constexpr double kElibolOverlapThreshold = 0.99;

// Empty result: no candidate passed the overlap filter.
std::vector<PairScore> elibol_suggest(const SessionState& s, int top_k = 1);
std::vector<PairScore> elibol_suggest_exhaustive(const SessionState& s, int top_k = 1);

struct WarpedFrame {
  Point2 centre;
  double radius = 0.0;  // mean distance of the warped corners to the warped centre
};

WarpedFrame warp_frame(const AffineTransform2& t, const FrameDomain& dom);

// Throws InvalidArgument for a degenerate (zero radius) frame.
double sawhney_arc_length(const std::vector<AffineTransform2>& recon, const FrameDomain& dom, int i, int j);
double sawhney_arc_length(const WarpedFrame& a, const WarpedFrame& b);

struct OverlapGraph {
  struct Edge {
    int to;
    double weight;
  };
  std::vector<WarpedFrame> frames;
  std::vector<std::vector<Edge>> adjacency;

  int size() const { return static_cast<int>(frames.size()); }
};

OverlapGraph build_overlap_graph(const std::vector<AffineTransform2>& recon, const std::vector<FramePair>& positives,
                                 const FrameDomain& dom);

// Dijkstra distances from source (infinity for unreachable vertices).
std::vector<double> shortest_path_lengths(const OverlapGraph& g, int source);

// Reward (1 - l)+ * (L / l - 1)+, with l = 0 and L > 0 mapped to +infinity.
double sawhney_reward(double arc, double path);

std::vector<PairScore> sawhney_suggest(const SessionState& s, const OverlapGraph& g, int top_k = 1);
std::vector<PairScore> sawhney_suggest(const SessionState& s, int top_k = 1);
std::vector<PairScore> sawhney_suggest_naive(const SessionState& s, const OverlapGraph& g, int top_k = 1);

}  // namespace mosaic
