#include "service.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mosaic/errors.hpp"
#include "mosaic/overlap_position.hpp"

#include <httplib.h>

namespace mosaic::service {

using nlohmann::json;

namespace {

HttpResult json_result(int status, const json& body) { return {status, body.dump(), "application/json"}; }

HttpResult error_result(int status, const std::string& reason) { return json_result(status, {{"error", reason}}); }

std::unique_ptr<ExternalOverlap> make_service_external(const std::filesystem::path& dir, const SessionDirConfig& c) {
  const bool has_signatures = std::filesystem::exists(dir / kSignaturesFile);
  ExternalMode mode = c.external;
  if (mode == ExternalMode::automatic) mode = has_signatures ? ExternalMode::learned : ExternalMode::none;
  if (mode == ExternalMode::ideal) throw InvalidArgument("the ideal external model is only available in simulation runs");
  if (mode == ExternalMode::learned) {
    if (!has_signatures) throw InvalidArgument("learned external model requested but signatures.csv is missing");
    SignatureSet sigs = io::read_signatures(dir / kSignaturesFile, c.signatures_signed);
    if (sigs.size() != c.n_frames) throw InvalidArgument("signatures.csv has a row count different from n_frames");
    return std::make_unique<LearnedExternalOverlap>(std::move(sigs), c.beta);
  }
  return std::make_unique<UniformExternalOverlap>();
}

std::vector<Point2> parse_points(const json& a) {
  if (!a.is_array()) throw InvalidArgument("points must be an array of [x, y]");
  std::vector<Point2> pts;
  for (const auto& p : a) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw InvalidArgument("points must be [x, y] number pairs");
    }
    pts.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return pts;
}

json ellipse_json(const SessionState& s, int n) {
  const auto belief = s.belief();
  const int b = belief ? belief->unknown_block(n) : -1;
  if (b < 0) return nullptr;
  const Eigen::Matrix<double, 6, 6> cov = belief->covariance.block<6, 6>(6 * b, 6 * b);
  const Point2 g = s.domain().centre();
  Eigen::Matrix<double, 2, 6> j = Eigen::Matrix<double, 2, 6>::Zero();
  j.block<1, 3>(0, 0) << g.x(), g.y(), 1.0;
  j.block<1, 3>(1, 3) << g.x(), g.y(), 1.0;
  const Eigen::Matrix2d c = j * cov * j.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (c + c.transpose()));
  const Point2 centre = apply(s.transforms()[static_cast<std::size_t>(n)], g);
  const Eigen::Vector2d major = es.eigenvectors().col(1);
  return {{"cx", centre.x()},
          {"cy", centre.y()},
          {"nu1", std::max(es.eigenvalues()(1), 0.0)},
          {"nu2", std::max(es.eigenvalues()(0), 0.0)},
          {"angle", std::atan2(major.y(), major.x())}};
}

json log_json(const io::LogEntry& e) {
  json o = {{"k", e.k}, {"outcome", e.outcome}, {"expected_reward", e.expected_reward}, {"timestamp", e.timestamp}};
  if (e.pair) {
    o["i"] = e.pair->i + 1;
    o["j"] = e.pair->j + 1;
  }
  if (e.rmsd) o["rmsd"] = *e.rmsd;
  return o;
}

}  // namespace

SessionService::SessionService(std::filesystem::path dir) : dir_(std::move(dir)) {
  config_ = config_from_json(io::read_text(dir_ / kConfigFile));
  if (std::filesystem::exists(dir_ / kGroundTruthFile)) {
    gt_ = io::ground_truth_from_json(io::read_text(dir_ / kGroundTruthFile));
    validate_ground_truth(*gt_, config_.n_frames);
  }
  auto external = make_service_external(dir_, config_);
  if (std::filesystem::exists(dir_ / kArchiveFile)) {
    const io::SessionArchive a = io::archive_from_json(io::read_text(dir_ / kArchiveFile));
    if (a.n_frames != config_.n_frames) throw InvalidArgument("archive.json does not match config.json");
    session_ = io::restore_session(a, std::move(external));
    log_ = a.log;
    resumed_ = true;
    spdlog::info("resumed session at iteration {}", session_->iteration());
  } else {
    SessionConfig sc;
    sc.strategy = config_.strategy;
    sc.seed = config_.seed;
    sc.mc_samples = config_.mc_samples;
    session_ = std::make_unique<SessionState>(
        config_.n_frames, config_.domain,
        io::correspondences_from_json(io::read_text(dir_ / kInitialFile), config_.sigma), std::move(external), sc);
  }
  if (gt_) initial_rmsd_ = pairwise_rmsd(session_->transforms(), *gt_, config_.domain);
  std::lock_guard lock(mutate_);
  publish();
}

void SessionService::publish() {
  const SessionState& s = *session_;
  json frames = json::array();
  for (int n = 0; n < s.n_frames(); ++n) {
    const auto& p = s.transforms()[static_cast<std::size_t>(n)].params();
    frames.push_back({{"n", n + 1}, {"params", std::vector<double>(p.begin(), p.end())}, {"ellipse", ellipse_json(s, n)}});
  }
  json progress = json::array();
  for (const auto& e : log_) progress.push_back(log_json(e));
  json info = {{"config", json::parse(config_to_json(config_))},
               {"k", s.iteration()},
               {"n_frames", s.n_frames()},
               {"positives", s.positives().size()},
               {"negatives", s.negatives().size()},
               {"candidates", s.candidate_count()},
               {"resumed", resumed_}};
  info["initial_rmsd"] = initial_rmsd_ ? json(*initial_rmsd_) : json(nullptr);
  info["outstanding"] =
      outstanding_ ? json{{"i", outstanding_->pair.i + 1}, {"j", outstanding_->pair.j + 1}} : json(nullptr);

  auto m = std::make_shared<const std::string>(json{{"frames", frames}}.dump());
  auto p = std::make_shared<const std::string>(progress.dump());
  auto i = std::make_shared<const std::string>(info.dump());
  std::lock_guard lock(snapshot_mutex_);
  mosaic_json_ = std::move(m);
  progress_json_ = std::move(p);
  session_json_ = std::move(i);
}

std::shared_ptr<const std::string> SessionService::snapshot(const std::shared_ptr<const std::string>& s) const {
  std::lock_guard lock(snapshot_mutex_);
  return s;
}

void SessionService::save_archive() {
  const io::SessionArchive a = io::make_archive(*session_, config_.beta, config_.sigma, config_.budget, log_);
  io::write_text_atomic(dir_ / kArchiveFile, io::archive_to_json(a));
}

HttpResult SessionService::get_session() const { return {200, *snapshot(session_json_), "application/json"}; }
HttpResult SessionService::get_mosaic() const { return {200, *snapshot(mosaic_json_), "application/json"}; }
HttpResult SessionService::get_progress() const { return {200, *snapshot(progress_json_), "application/json"}; }

HttpResult SessionService::get_suggestion() {
  std::lock_guard lock(mutate_);
  if (!outstanding_) {
    const auto best = suggest(*session_, 1);
    if (best.empty()) return error_result(404, "no candidate pairs remain");
    outstanding_ = best.front();
    publish();
  }
  const int i = outstanding_->pair.i + 1;
  const int j = outstanding_->pair.j + 1;
  return json_result(200, {{"i", i},
                           {"j", j},
                           {"k", session_->iteration()},
                           {"expected_reward", outstanding_->expected_reward},
                           {"frame_urls", {"/frames/" + std::to_string(i) + ".png", "/frames/" + std::to_string(j) + ".png"}}});
}

HttpResult SessionService::post_annotation(const std::string& body) {
  std::unique_lock lock(mutate_, std::try_to_lock);
  if (!lock.owns_lock()) return error_result(409, "another annotation is being processed");

  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    return error_result(400, std::string("malformed JSON: ") + e.what());
  }
  FramePair pair;
  Feedback feedback;
  try {
    if (!doc.is_object() || !doc.contains("i") || !doc.contains("j") || !doc.contains("overlap")) {
      throw InvalidArgument("annotation needs i, j and overlap");
    }
    if (!doc["i"].is_number_integer() || !doc["j"].is_number_integer() || !doc["overlap"].is_boolean()) {
      throw InvalidArgument("i and j must be integers and overlap a boolean");
    }
    pair = {doc["i"].get<int>() - 1, doc["j"].get<int>() - 1};
    if (doc["overlap"].get<bool>()) {
      CorrespondenceSet c;
      c.pair = pair;
      c.points_j = parse_points(doc.value("points_j", json::array()));
      c.points_i = parse_points(doc.value("points_i", json::array()));
      c.sigma = config_.sigma;
      c.validate(session_->n_frames());
      feedback = Feedback::with(std::move(c));
    }
  } catch (const Error& e) {
    return error_result(400, e.what());
  }

  if (!outstanding_) return error_result(409, "no suggestion is outstanding; GET /api/suggestion first");
  if (pair.canonical() != outstanding_->pair.canonical()) {
    return error_result(409, "annotation does not match the outstanding suggestion (" +
                                 std::to_string(outstanding_->pair.i + 1) + ", " +
                                 std::to_string(outstanding_->pair.j + 1) + ")");
  }

  const int k = session_->iteration();
  try {
    session_->record_feedback(pair, feedback);
  } catch (const AlreadyAnnotatedError& e) {
    return error_result(409, e.what());
  } catch (const UnderDeterminedError& e) {
    return error_result(422, e.what());
  } catch (const Error& e) {
    return error_result(400, e.what());
  }

  io::LogEntry entry;
  entry.k = k;
  entry.pair = pair.canonical();
  entry.outcome = feedback.overlap ? "overlap" : "no-overlap";
  entry.expected_reward = outstanding_->expected_reward;
  entry.timestamp = io::utc_timestamp();
  if (gt_) entry.rmsd = pairwise_rmsd(session_->transforms(), *gt_, config_.domain);
  log_.push_back(entry);
  outstanding_.reset();
  save_archive();
  publish();

  json out = {{"k", session_->iteration()}, {"outcome", entry.outcome}};
  if (entry.rmsd) out["rmsd"] = *entry.rmsd;
  return json_result(200, out);
}

HttpResult SessionService::get_frame(int n) const {
  if (n < 1 || n > config_.n_frames) return error_result(404, "frame index out of range");
  const auto path = frame_path(dir_, n);
  if (!std::filesystem::exists(path)) return error_result(404, "frame image not found");
  return {200, io::read_text(path), "image/png"};
}

void SessionService::mount(httplib::Server& server) {
  const auto send = [](httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type.c_str());
  };
  server.Get("/api/session", [this, send](const httplib::Request&, httplib::Response& res) { send(res, get_session()); });
  server.Get("/api/suggestion",
             [this, send](const httplib::Request&, httplib::Response& res) { send(res, get_suggestion()); });
  server.Post("/api/annotation", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, post_annotation(req.body));
  });
  server.Get("/api/mosaic", [this, send](const httplib::Request&, httplib::Response& res) { send(res, get_mosaic()); });
  server.Get("/api/progress",
             [this, send](const httplib::Request&, httplib::Response& res) { send(res, get_progress()); });
  server.Get(R"(/frames/(\d+)\.png)", [this, send](const httplib::Request& req, httplib::Response& res) {
    int n = 0;
    try {
      n = std::stoi(req.matches[1].str());
    } catch (const std::exception&) {
      n = 0;
    }
    send(res, get_frame(n));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    spdlog::error("request failed: {}", what);
    res.status = 500;
    res.set_content(json{{"error", what}}.dump(), "application/json");
  });
}

}  // namespace mosaic::service
