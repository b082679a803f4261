#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mosaic/evaluation.hpp"
#include "mosaic/session.hpp"
#include "mosaic/simulator.hpp"

namespace mosaic::service {

// Files of a session directory.
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kTrajectoryFile = "trajectory.json";
inline constexpr const char* kSignaturesFile = "signatures.csv";
inline constexpr const char* kInitialFile = "initial.json";
inline constexpr const char* kGroundTruthFile = "ground_truth.json";
inline constexpr const char* kArchiveFile = "archive.json";
inline constexpr const char* kFramesDir = "frames";

std::filesystem::path frame_path(const std::filesystem::path& dir, int n);  // n is 1-based

struct SessionDirConfig {
  int n_frames = 0;
  FrameDomain domain;
  Strategy strategy = Strategy::ours;
  double beta = kDefaultBeta;
  double sigma = 1.0;
  std::uint64_t seed = 1;
  int budget = 50;
  int mc_samples = kDefaultMcSamples;
  int n_landmarks = kDefaultLandmarks;
  ExternalMode external = ExternalMode::automatic;  // automatic: learned when signatures exist
  bool signatures_signed = false;
};

std::string config_to_json(const SessionDirConfig& c);
SessionDirConfig config_from_json(const std::string& text);

struct SimulateOptions {
  SessionDirConfig config;  // n_frames and domain are taken from the truth
  int gt_min_gap = 0;       // 0 means default_gt_min_gap
  bool write_frames = true;
  int texture_margin = 8;
  std::uint64_t texture_seed = 7;
};

// Writes config, trajectory, signatures (if any), the noisy initial chain, ground truth and frame crops.
void write_simulated_session(const std::filesystem::path& dir, const TrajectoryTruth& truth,
                             SimulateOptions options);

}  // namespace mosaic::service
