#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mosaic/affine.hpp"
#include "mosaic/bundle_adjust.hpp"
#include "mosaic/session.hpp"
#include "mosaic/simulator.hpp"

namespace mosaic {

struct GroundTruthCorrespondence {
  FramePair pair;
  std::vector<Point2> points_j;
  std::vector<Point2> points_i;
};

using GroundTruthLandmarks = std::vector<GroundTruthCorrespondence>;

void validate_ground_truth(const GroundTruthLandmarks& gt, int n_frames);

struct RmsdOptions {
  bool normalize = true;  // divide each pair's RMS error by the frame diagonal
};

double pairwise_rmsd(const std::vector<AffineTransform2>& recon, const GroundTruthLandmarks& gt,
                     const FrameDomain& dom, RmsdOptions options = {});

int default_gt_min_gap(int n_frames);

// Truly overlapping pairs with |i - j| >= min_gap, each with noiseless grid landmarks.
GroundTruthLandmarks make_ground_truth(const TrajectoryTruth& truth, int min_gap,
                                       int n_landmarks = kDefaultLandmarks);

enum class TrajectoryKind { raster, circle };
enum class ExternalMode { automatic, ideal, learned, none };

std::optional<TrajectoryKind> parse_trajectory(std::string_view name);
std::optional<ExternalMode> parse_external_mode(std::string_view name);
std::string_view to_string(TrajectoryKind k);
std::string_view to_string(ExternalMode m);

struct ExperimentConfig {
  TrajectoryKind trajectory = TrajectoryKind::raster;
  int n_frames = kDefaultRasterFrames;
  double step_x = 0.0;  // raster; 0 means width / 3
  double step_y = 0.0;  // raster; 0 means height / 3
  double radius = kDefaultCircleRadius;
  FrameDomain domain;
  Strategy strategy = Strategy::ours;
  int budget = 50;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double sigma = 1.0;
  int n_landmarks = kDefaultLandmarks;
  int mc_samples = kDefaultMcSamples;
  double beta = kDefaultBeta;
  ExternalMode external = ExternalMode::automatic;
  int gt_min_gap = 0;  // 0 means default_gt_min_gap(n_frames)
  bool normalize_rmsd = true;
  double reward_floor = 0.0;
};

struct ExperimentRow {
  int iteration = 0;
  std::uint64_t seed = 0;
  double rmsd = 0.0;
  std::optional<FramePair> suggested;
  std::string outcome;
  double expected_reward = 0.0;
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  std::vector<double> mean_curve;  // mean RMSD per iteration across seeds
};

TrajectoryTruth make_truth(const ExperimentConfig& config);
std::unique_ptr<ExternalOverlap> make_external(const ExperimentConfig& config,
                                               std::shared_ptr<const TrajectoryTruth> truth);

using RowCallback = std::function<void(const ExperimentRow&)>;

// Runs `budget` suggest/answer/update steps on an initialized session; row 0 is the initial state.
std::vector<ExperimentRow> run_loop(SessionState& session, Agent& agent, const GroundTruthLandmarks& gt, int budget,
                                    std::uint64_t seed, RmsdOptions rmsd = {}, const RowCallback& on_row = {});

ExperimentResult run_experiment(const ExperimentConfig& config, const RowCallback& on_row = {});

std::vector<double> mean_curve(const std::vector<ExperimentRow>& rows);

void write_results_csv(std::ostream& os, const std::vector<ExperimentRow>& rows);
void write_curve_csv(std::ostream& os, const std::map<std::string, std::vector<double>>& curves);
void write_svg_plot(std::ostream& os, const std::map<std::string, std::vector<double>>& curves,
                    const std::string& y_label = "mean RMSD");

}  // namespace mosaic
