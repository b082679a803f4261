#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mosaic/evaluation.hpp"
#include "mosaic/session.hpp"
#include "mosaic/simulator.hpp"

namespace mosaic::io {

// All indices in files are 1-based.

std::string trajectory_to_json(const TrajectoryTruth& truth);
TrajectoryTruth trajectory_from_json(const std::string& text);

// CSV (one row of D floats per frame) or JSON (array of arrays), chosen by extension.
SignatureSet read_signatures(const std::filesystem::path& path, bool allow_negative = false);
void write_signatures_csv(const std::filesystem::path& path, const SignatureSet& signatures);

std::string correspondences_to_json(const std::vector<CorrespondenceSet>& sets);
std::vector<CorrespondenceSet> correspondences_from_json(const std::string& text, double default_sigma = 1.0);

std::string ground_truth_to_json(const GroundTruthLandmarks& gt);
GroundTruthLandmarks ground_truth_from_json(const std::string& text);

struct LogEntry {
  int k = 0;
  std::optional<FramePair> pair;
  std::string outcome;
  double expected_reward = 0.0;
  std::optional<double> rmsd;
  std::string timestamp;
};

struct SessionArchive {
  int n_frames = 0;
  int reference = 0;
  FrameDomain domain;
  Strategy strategy = Strategy::ours;
  double beta = kDefaultBeta;
  double sigma = 1.0;
  std::uint64_t seed = 1;
  int budget = 50;
  int mc_samples = kDefaultMcSamples;
  int iteration = 1;
  std::vector<CorrespondenceSet> positives;  // insertion order, initial chain first
  std::vector<FramePair> negatives;
  std::optional<std::vector<double>> weights;
  std::vector<LogEntry> log;
  std::vector<double> theta;
};

SessionArchive make_archive(const SessionState& session, double beta, double sigma, int budget,
                            std::vector<LogEntry> log);
std::string archive_to_json(const SessionArchive& archive);
SessionArchive archive_from_json(const std::string& text);

// Rebuilds the session; learned external weights are restored, not re-fitted.
std::unique_ptr<SessionState> restore_session(const SessionArchive& archive, std::unique_ptr<ExternalOverlap> external);

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

std::string utc_timestamp();

}  // namespace mosaic::io
