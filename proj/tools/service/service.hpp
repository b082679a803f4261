#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mosaic/evaluation.hpp"
#include "mosaic/io.hpp"
#include "mosaic/reward.hpp"
#include "mosaic/session.hpp"
#include "session_dir.hpp"

namespace httplib {
class Server;
}

namespace mosaic::service {

struct HttpResult {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// One interactive session backed by a session directory. Mutations are serialized; the mosaic and
// progress views are served from immutable snapshots.
class SessionService {
 public:
  // Resumes from archive.json when present.
  explicit SessionService(std::filesystem::path dir);

  HttpResult get_session() const;
  HttpResult get_suggestion();
  HttpResult post_annotation(const std::string& body);
  HttpResult get_mosaic() const;
  HttpResult get_progress() const;
  HttpResult get_frame(int n) const;  // 1-based

  void mount(httplib::Server& server);

  bool resumed() const { return resumed_; }
  const std::filesystem::path& directory() const { return dir_; }

 private:
  void publish();  // requires mutate_
  void save_archive();
  std::shared_ptr<const std::string> snapshot(const std::shared_ptr<const std::string>& s) const;

  std::filesystem::path dir_;
  SessionDirConfig config_;
  std::optional<GroundTruthLandmarks> gt_;
  std::unique_ptr<SessionState> session_;
  std::vector<io::LogEntry> log_;
  std::optional<PairScore> outstanding_;
  std::optional<double> initial_rmsd_;
  bool resumed_ = false;

  std::mutex mutate_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const std::string> session_json_;
  std::shared_ptr<const std::string> mosaic_json_;
  std::shared_ptr<const std::string> progress_json_;
};

}  // namespace mosaic::service
