#pragma once

#include <memory>
#include <vector>

#include "mosaic/overlap_position.hpp"
#include "mosaic/session.hpp"

namespace mosaic {

struct PairScore {
  FramePair pair;
  double informativeness = 0.0;
  double p_ext = 1.0;
  OverlapEstimate overlap;
  double expected_reward = 0.0;
  double upper_bound = 0.0;
  std::uint64_t seed = 0;
};

// Ranking order: higher reward first, then lexicographic pair.
bool ranks_before(const PairScore& a, const PairScore& b);

double informativeness(const Eigen::Matrix2d& sigma_gamma);
double expected_reward(double p_ext, double p_pos, double u);

// Relative-centre distributions for all pairs of one reconstruction snapshot.
class CentreCalculator {
 public:
  CentreCalculator(const std::vector<AffineTransform2>& transforms, std::shared_ptr<const ReconstructionBelief> belief,
                   const FrameDomain& domain);

  Point2 mean(int i, int j) const;
  CentreDistribution operator()(int i, int j) const;

 private:
  const std::vector<AffineTransform2>& transforms_;
  std::shared_ptr<const ReconstructionBelief> belief_;
  FrameDomain domain_;
  std::vector<Eigen::Matrix2d> lin_inv_;
  std::vector<Eigen::Matrix2d> g_;  // (I ⊗ γ̃ᵀ) Σ_nn (I ⊗ γ̃)
};

enum class ScoreMode { ours, external_only, position_only };

std::vector<PairScore> suggest_pruned(const SessionState& s, ScoreMode mode, int top_k = 1);
std::vector<PairScore> suggest_exhaustive(const SessionState& s, ScoreMode mode, int top_k = 1);

// Throws ExhaustedError when no candidate remains.
std::vector<PairScore> suggest_next(const SessionState& s, int top_k = 1);

enum class AblationMode { external_only, position_only };
std::vector<PairScore> ablation_suggest(const SessionState& s, AblationMode mode, int top_k = 1);

// Dispatch by the session's strategy. An empty result means no candidate passed the strategy's filter.
std::vector<PairScore> suggest(const SessionState& s, int top_k = 1);

}  // namespace mosaic
