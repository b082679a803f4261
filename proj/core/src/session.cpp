#include "mosaic/session.hpp"

#include <array>
#include <utility>

#include "mosaic/errors.hpp"
#include "mosaic/random.hpp"

namespace mosaic {

namespace {

constexpr std::array<std::pair<Strategy, std::string_view>, 5> kStrategyNames{{
    {Strategy::ours, "ours"},
    {Strategy::elibol, "elibol"},
    {Strategy::sawhney, "sawhney"},
    {Strategy::external_only, "external-only"},
    {Strategy::position_only, "position-only"},
}};

}  // namespace

std::string_view to_string(Strategy s) {
  for (const auto& [k, name] : kStrategyNames) {
    if (k == s) return name;
  }
  return "unknown";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (const auto& [k, n] : kStrategyNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string strategy_names() {
  std::string out;
  for (const auto& [k, name] : kStrategyNames) {
    if (!out.empty()) out += ", ";
    out += name;
  }
  return out;
}

LearnedExternalOverlap::LearnedExternalOverlap(SignatureSet signatures, ExternalModel model, LbfgsOptions options)
    : signatures_(std::move(signatures)), model_(std::move(model)), options_(options) {
  if (model_.weights.size() != signatures_.dimension()) {
    throw InvalidArgument("external model dimension does not match the signatures");
  }
}

LearnedExternalOverlap::LearnedExternalOverlap(SignatureSet signatures, double beta)
    : LearnedExternalOverlap(signatures, ExternalModel::uniform(signatures.dimension(), beta)) {}

double LearnedExternalOverlap::probability(int i, int j) const {
  return similarity_probability(model_, signatures_.signature(i), signatures_.signature(j));
}

void LearnedExternalOverlap::update(const std::vector<FramePair>& positives, const std::vector<FramePair>& negatives) {
  last_update_ = update_weights(model_, positives, negatives, signatures_, options_);
  model_ = last_update_->model;
}

SessionState::SessionState(int n_frames, FrameDomain domain, std::vector<CorrespondenceSet> initial,
                           std::unique_ptr<ExternalOverlap> external, SessionConfig config, int reference)
    : domain_(domain), config_(config), bundle_(n_frames, reference), external_(std::move(external)) {
  if (!external_) external_ = std::make_unique<UniformExternalOverlap>();
  if (config_.mc_samples < 1) throw InvalidArgument("mc_samples must be at least 1");
  for (auto& c : initial) {
    if (is_annotated(c.pair)) throw InvalidArgument("initial correspondences contain a duplicate pair");
    annotated_.insert(c.pair.canonical());
    positives_.push_back(c.pair);
    bundle_.stage(std::move(c));
  }
  for (int n = 0; n + 1 < n_frames; ++n) {
    if (!is_annotated({n, n + 1})) {
      throw InvalidArgument("initial correspondences miss the consecutive pair (" + std::to_string(n + 1) + ", " +
                            std::to_string(n + 2) + ")");
    }
  }
  bundle_.refresh();
  refresh_estimates();
}

SessionState::SessionState(const SessionState& other)
    : domain_(other.domain_),
      config_(other.config_),
      bundle_(other.bundle_),
      transforms_(other.transforms_),
      belief_(other.belief_),
      external_(other.external_->clone()),
      positives_(other.positives_),
      negatives_(other.negatives_),
      annotated_(other.annotated_),
      iteration_(other.iteration_) {}

bool SessionState::tracks_covariance() const {
  return config_.track_covariance.value_or(config_.strategy != Strategy::sawhney);
}

void SessionState::refresh_estimates() {
  transforms_ = bundle_.transforms();
  if (tracks_covariance()) {
    belief_ = std::make_shared<const ReconstructionBelief>(propagate_covariance(bundle_));
  } else {
    belief_.reset();
  }
}

bool SessionState::is_candidate(FramePair p) const {
  const FramePair c = p.canonical();
  return c.i >= 0 && c.j < n_frames() && c.j - c.i >= 2 && !is_annotated(c);
}

std::vector<FramePair> SessionState::candidates() const {
  std::vector<FramePair> out;
  out.reserve(candidate_count());
  for (int i = 0; i < n_frames(); ++i) {
    for (int j = i + 2; j < n_frames(); ++j) {
      if (!annotated_.count({i, j})) out.push_back({i, j});
    }
  }
  return out;
}

std::size_t SessionState::candidate_count() const {
  const std::size_t n = static_cast<std::size_t>(n_frames());
  const std::size_t all = n >= 2 ? (n - 1) * (n - 2) / 2 : 0;
  std::size_t annotated_far = 0;
  for (const auto& p : annotated_) {
    if (p.j - p.i >= 2) ++annotated_far;
  }
  return all - annotated_far;
}

std::uint64_t SessionState::pair_seed(FramePair p) const {
  const FramePair c = p.canonical();
  return derive_seed({config_.seed, static_cast<std::uint64_t>(c.i + 1), static_cast<std::uint64_t>(c.j + 1),
                      static_cast<std::uint64_t>(iteration_)});
}

void SessionState::record_feedback(FramePair pair, const Feedback& feedback) {
  if (pair.i < 0 || pair.j < 0 || pair.i >= n_frames() || pair.j >= n_frames() || pair.i == pair.j) {
    throw InvalidArgument("feedback pair out of range");
  }
  if (is_annotated(pair)) {
    throw AlreadyAnnotatedError("pair (" + std::to_string(pair.i + 1) + ", " + std::to_string(pair.j + 1) +
                                ") is already annotated");
  }
  if (feedback.overlap) {
    const CorrespondenceSet& c = feedback.correspondences;
    if (c.pair.canonical() != pair.canonical()) {
      throw InvalidArgument("correspondences belong to a different pair than the feedback");
    }
    c.validate(n_frames());
    bundle_.add_correspondence(c);
    positives_.push_back(c.pair);
  } else {
    negatives_.push_back(pair);
  }
  annotated_.insert(pair.canonical());
  external_->update(positives_, negatives_);
  if (feedback.overlap) refresh_estimates();
  ++iteration_;
}

void SessionState::restore_negative(FramePair pair) {
  if (pair.i < 0 || pair.j < 0 || pair.i >= n_frames() || pair.j >= n_frames() || pair.i == pair.j) {
    throw InvalidArgument("archived pair out of range");
  }
  if (is_annotated(pair)) throw InvalidArgument("archive lists a pair twice");
  negatives_.push_back(pair);
  annotated_.insert(pair.canonical());
}

}  // namespace mosaic
