#include "session_dir.hpp"

#include <cstdio>

#include <json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <spdlog/spdlog.h>

#include "mosaic/errors.hpp"
#include "mosaic/io.hpp"

namespace mosaic::service {

using nlohmann::json;

std::filesystem::path frame_path(const std::filesystem::path& dir, int n) {
  char name[32];
  std::snprintf(name, sizeof(name), "frame_%06d.png", n);
  return dir / kFramesDir / name;
}

std::string config_to_json(const SessionDirConfig& c) {
  json doc = {{"n_frames", c.n_frames},
              {"domain", {{"width", c.domain.width}, {"height", c.domain.height}}},
              {"strategy", std::string(to_string(c.strategy))},
              {"beta", c.beta},
              {"sigma", c.sigma},
              {"seed", c.seed},
              {"budget", c.budget},
              {"mc_samples", c.mc_samples},
              {"n_landmarks", c.n_landmarks},
              {"external", std::string(to_string(c.external))},
              {"signatures_signed", c.signatures_signed}};
  return doc.dump(1);
}

SessionDirConfig config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  try {
    SessionDirConfig c;
    c.n_frames = doc.at("n_frames").get<int>();
    c.domain = FrameDomain(doc.at("domain").at("width").get<double>(), doc.at("domain").at("height").get<double>());
    const auto strategy = parse_strategy(doc.value("strategy", std::string("ours")));
    if (!strategy) throw InvalidArgument("config names an unknown strategy");
    c.strategy = *strategy;
    c.beta = doc.value("beta", kDefaultBeta);
    c.sigma = doc.value("sigma", 1.0);
    c.seed = doc.value("seed", std::uint64_t{1});
    c.budget = doc.value("budget", 50);
    c.mc_samples = doc.value("mc_samples", kDefaultMcSamples);
    c.n_landmarks = doc.value("n_landmarks", kDefaultLandmarks);
    const auto external = parse_external_mode(doc.value("external", std::string("auto")));
    if (!external) throw InvalidArgument("config names an unknown external mode");
    c.external = *external;
    c.signatures_signed = doc.value("signatures_signed", false);
    return c;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("unexpected config content: ") + e.what());
  }
}

void write_simulated_session(const std::filesystem::path& dir, const TrajectoryTruth& truth, SimulateOptions options) {
  std::filesystem::create_directories(dir);
  SessionDirConfig& cfg = options.config;
  cfg.n_frames = truth.size();
  cfg.domain = truth.domain;
  cfg.signatures_signed = truth.signatures && truth.signatures->has_negative();

  io::write_text_atomic(dir / kConfigFile, config_to_json(cfg));
  io::write_text_atomic(dir / kTrajectoryFile, io::trajectory_to_json(truth));
  if (truth.signatures) io::write_signatures_csv(dir / kSignaturesFile, *truth.signatures);

  auto shared = std::make_shared<const TrajectoryTruth>(truth);
  SimulatedAgent agent(shared, cfg.n_landmarks, cfg.sigma, cfg.seed);
  io::write_text_atomic(dir / kInitialFile, io::correspondences_to_json(initial_chain(agent, truth.size())));

  const int gap = options.gt_min_gap > 0 ? options.gt_min_gap : default_gt_min_gap(truth.size());
  io::write_text_atomic(dir / kGroundTruthFile, io::ground_truth_to_json(make_ground_truth(truth, gap)));

  if (!options.write_frames) return;
  if (!truth.translation_only()) {
    spdlog::warn("frame crops are only rendered for translation trajectories; skipping images");
    return;
  }
  const TextureLayout layout = texture_layout(truth, options.texture_margin);
  const ImageRaster texture = procedural_texture(layout.width, layout.height, options.texture_seed);
  const auto crops = texture_crop_sequence(texture, truth, layout);
  std::filesystem::create_directories(dir / kFramesDir);
  for (std::size_t n = 0; n < crops.size(); ++n) {
    const ImageRaster& c = crops[n];
    const cv::Mat img(c.height, c.width, CV_8UC(c.channels), const_cast<std::uint8_t*>(c.pixels.data()));
    const auto path = frame_path(dir, static_cast<int>(n) + 1);
    if (!cv::imwrite(path.string(), img)) throw InvalidArgument("cannot write " + path.string());
  }
}

}  // namespace mosaic::service
