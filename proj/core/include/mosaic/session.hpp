#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "mosaic/affine.hpp"
#include "mosaic/bundle_adjust.hpp"
#include "mosaic/overlap_external.hpp"
#include "mosaic/overlap_position.hpp"
#include "mosaic/uncertainty.hpp"

namespace mosaic {

enum class Strategy { ours, elibol, sawhney, external_only, position_only };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view name);
std::string strategy_names();

// Registration-independent overlap probability P^ext.
class ExternalOverlap {
 public:
  virtual ~ExternalOverlap() = default;
  virtual double probability(int i, int j) const = 0;
  virtual void update(const std::vector<FramePair>& /*positives*/, const std::vector<FramePair>& /*negatives*/) {}
  virtual std::unique_ptr<ExternalOverlap> clone() const = 0;
};

// P^ext = 1 for every pair (no external information).
class UniformExternalOverlap final : public ExternalOverlap {
 public:
  double probability(int, int) const override { return 1.0; }
  std::unique_ptr<ExternalOverlap> clone() const override { return std::make_unique<UniformExternalOverlap>(*this); }
};

// Signature-based model with online weight learning.
class LearnedExternalOverlap final : public ExternalOverlap {
 public:
  LearnedExternalOverlap(SignatureSet signatures, ExternalModel model, LbfgsOptions options = {});
  LearnedExternalOverlap(SignatureSet signatures, double beta = kDefaultBeta);

  double probability(int i, int j) const override;
  void update(const std::vector<FramePair>& positives, const std::vector<FramePair>& negatives) override;
  std::unique_ptr<ExternalOverlap> clone() const override { return std::make_unique<LearnedExternalOverlap>(*this); }

  const SignatureSet& signatures() const { return signatures_; }
  const ExternalModel& model() const { return model_; }
  void set_model(ExternalModel m) { model_ = std::move(m); }
  const std::optional<WeightUpdate>& last_update() const { return last_update_; }

 private:
  SignatureSet signatures_;
  ExternalModel model_;
  LbfgsOptions options_;
  std::optional<WeightUpdate> last_update_;
};

struct SessionConfig {
  Strategy strategy = Strategy::ours;
  std::uint64_t seed = 1;
  int mc_samples = kDefaultMcSamples;
  // Stop when the best expected reward falls below this floor (0 disables).
  double reward_floor = 0.0;
  // Propagate Σ_Θ after each accepted annotation. Defaults to whether the strategy reads it.
  std::optional<bool> track_covariance;
};

struct Feedback {
  bool overlap = false;
  CorrespondenceSet correspondences;

  static Feedback no_overlap() { return {}; }
  static Feedback with(CorrespondenceSet c) { return {true, std::move(c)}; }
};

class SessionState {
 public:
  // initial must contain every consecutive pair (n, n+1).
  SessionState(int n_frames, FrameDomain domain, std::vector<CorrespondenceSet> initial,
               std::unique_ptr<ExternalOverlap> external, SessionConfig config = {}, int reference = 0);

  SessionState(const SessionState& other);
  SessionState& operator=(const SessionState&) = delete;

  int n_frames() const { return bundle_.n_frames(); }
  int reference() const { return bundle_.reference(); }
  const FrameDomain& domain() const { return domain_; }
  const SessionConfig& config() const { return config_; }
  Strategy strategy() const { return config_.strategy; }
  bool tracks_covariance() const;
  // Starts at 1; incremented by every feedback.
  int iteration() const { return iteration_; }

  const BundleSystem& bundle() const { return bundle_; }
  const std::vector<AffineTransform2>& transforms() const { return transforms_; }
  // Null when covariance is not tracked.
  std::shared_ptr<const ReconstructionBelief> belief() const { return belief_; }
  const ExternalOverlap& external() const { return *external_; }
  ExternalOverlap& external() { return *external_; }

  const std::vector<FramePair>& positives() const { return positives_; }
  const std::vector<FramePair>& negatives() const { return negatives_; }
  bool is_annotated(FramePair p) const { return annotated_.count(p.canonical()) > 0; }
  bool is_candidate(FramePair p) const;
  // Unannotated pairs (i, j), i < j, j - i >= 2, in lexicographic order.
  std::vector<FramePair> candidates() const;
  std::size_t candidate_count() const;

  // MC seed for scoring pair p at the current iteration.
  std::uint64_t pair_seed(FramePair p) const;

  // Throws AlreadyAnnotatedError, InvalidArgument, UnderDeterminedError. Strong guarantee.
  void record_feedback(FramePair pair, const Feedback& feedback);

  // Restores a negative label without refitting the external model (archive replay).
  void restore_negative(FramePair pair);
  // Restores iteration counter (archive replay).
  void set_iteration(int k) { iteration_ = k; }

 private:
  void refresh_estimates();

  FrameDomain domain_;
  SessionConfig config_;
  BundleSystem bundle_;
  std::vector<AffineTransform2> transforms_;
  std::shared_ptr<const ReconstructionBelief> belief_;
  std::unique_ptr<ExternalOverlap> external_;
  std::vector<FramePair> positives_;
  std::vector<FramePair> negatives_;
  std::unordered_set<FramePair, FramePairHash> annotated_;
  int iteration_ = 1;
};

}  // namespace mosaic
