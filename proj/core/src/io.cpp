#include "mosaic/io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mosaic/errors.hpp"

namespace mosaic::io {

using nlohmann::json;

namespace {

json points_to_json(const std::vector<Point2>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.x(), p.y()});
  return a;
}

std::vector<Point2> points_from_json(const json& a) {
  std::vector<Point2> pts;
  for (const auto& p : a) {
    if (!p.is_array() || p.size() != 2) throw InvalidArgument("points must be [x, y] pairs");
    pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  }
  return pts;
}

json correspondence_to_json(const CorrespondenceSet& c) {
  return {{"i", c.pair.i + 1}, {"j", c.pair.j + 1}, {"points_j", points_to_json(c.points_j)},
          {"points_i", points_to_json(c.points_i)}, {"sigma", c.sigma}};
}

CorrespondenceSet correspondence_from_json(const json& o, double default_sigma) {
  CorrespondenceSet c;
  c.pair = {o.at("i").get<int>() - 1, o.at("j").get<int>() - 1};
  c.points_j = points_from_json(o.at("points_j"));
  c.points_i = points_from_json(o.at("points_i"));
  c.sigma = o.value("sigma", default_sigma);
  return c;
}

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed JSON: ") + e.what());
  }
}

template <class F>
auto guarded(F f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("unexpected JSON content: ") + e.what());
  }
}

}  // namespace

std::string trajectory_to_json(const TrajectoryTruth& truth) {
  json frames = json::array();
  for (std::size_t n = 0; n < truth.transforms.size(); ++n) {
    const auto& p = truth.transforms[n].params();
    json f = {{"n", n + 1}, {"params", std::vector<double>(p.begin(), p.end())}};
    if (n < truth.positions.size()) f["position"] = {truth.positions[n].x(), truth.positions[n].y()};
    frames.push_back(std::move(f));
  }
  json doc = {{"domain", {{"width", truth.domain.width}, {"height", truth.domain.height}}}, {"frames", frames}};
  return doc.dump(1);
}

TrajectoryTruth trajectory_from_json(const std::string& text) {
  const json doc = parse(text);
  return guarded([&] {
    TrajectoryTruth t;
    t.domain = FrameDomain(doc.at("domain").at("width").get<double>(), doc.at("domain").at("height").get<double>());
    const auto& frames = doc.at("frames");
    t.transforms.resize(frames.size());
    t.positions.resize(frames.size());
    for (const auto& f : frames) {
      const int n = f.at("n").get<int>() - 1;
      if (n < 0 || n >= static_cast<int>(frames.size())) throw InvalidArgument("trajectory frame index out of range");
      const auto p = f.at("params").get<std::vector<double>>();
      if (p.size() != 6) throw InvalidArgument("trajectory params must have 6 entries");
      t.transforms[static_cast<std::size_t>(n)] = AffineTransform2({p[0], p[1], p[2], p[3], p[4], p[5]});
      if (f.contains("position")) {
        t.positions[static_cast<std::size_t>(n)] = Point2(f["position"].at(0).get<double>(), f["position"].at(1).get<double>());
      } else {
        t.positions[static_cast<std::size_t>(n)] = apply(t.transforms[static_cast<std::size_t>(n)], t.domain.centre());
      }
    }
    return t;
  });
}

SignatureSet read_signatures(const std::filesystem::path& path, bool allow_negative) {
  const std::string text = read_text(path);
  std::vector<std::vector<double>> rows;
  if (path.extension() == ".json") {
    rows = guarded([&] { return parse(text).get<std::vector<std::vector<double>>>(); });
  } else {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<double> row;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) {
        try {
          row.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw InvalidArgument("signature file contains a non-numeric entry: '" + cell + "'");
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return SignatureSet::from_rows(rows, allow_negative);
}

void write_signatures_csv(const std::filesystem::path& path, const SignatureSet& signatures) {
  std::ostringstream os;
  os.precision(17);
  for (int n = 0; n < signatures.size(); ++n) {
    for (int d = 0; d < signatures.dimension(); ++d) os << (d ? "," : "") << signatures.signature(n)[d];
    os << '\n';
  }
  write_text_atomic(path, os.str());
}

std::string correspondences_to_json(const std::vector<CorrespondenceSet>& sets) {
  json a = json::array();
  for (const auto& c : sets) a.push_back(correspondence_to_json(c));
  return a.dump(1);
}

std::vector<CorrespondenceSet> correspondences_from_json(const std::string& text, double default_sigma) {
  const json doc = parse(text);
  return guarded([&] {
    std::vector<CorrespondenceSet> out;
    for (const auto& o : doc) out.push_back(correspondence_from_json(o, default_sigma));
    return out;
  });
}

std::string ground_truth_to_json(const GroundTruthLandmarks& gt) {
  json a = json::array();
  for (const auto& g : gt) {
    a.push_back({{"i", g.pair.i + 1}, {"j", g.pair.j + 1}, {"points_j", points_to_json(g.points_j)},
                 {"points_i", points_to_json(g.points_i)}});
  }
  return a.dump(1);
}

GroundTruthLandmarks ground_truth_from_json(const std::string& text) {
  const json doc = parse(text);
  return guarded([&] {
    GroundTruthLandmarks gt;
    for (const auto& o : doc) {
      gt.push_back({{o.at("i").get<int>() - 1, o.at("j").get<int>() - 1}, points_from_json(o.at("points_j")),
                    points_from_json(o.at("points_i"))});
    }
    return gt;
  });
}

SessionArchive make_archive(const SessionState& session, double beta, double sigma, int budget,
                            std::vector<LogEntry> log) {
  SessionArchive a;
  a.n_frames = session.n_frames();
  a.reference = session.reference();
  a.domain = session.domain();
  a.strategy = session.strategy();
  a.beta = beta;
  a.sigma = sigma;
  a.seed = session.config().seed;
  a.budget = budget;
  a.mc_samples = session.config().mc_samples;
  a.iteration = session.iteration();
  a.positives = session.bundle().correspondences();
  a.negatives = session.negatives();
  if (const auto* learned = dynamic_cast<const LearnedExternalOverlap*>(&session.external())) {
    const auto& w = learned->model().weights;
    a.weights = std::vector<double>(w.data(), w.data() + w.size());
  }
  a.log = std::move(log);
  const auto& theta = session.bundle().theta();
  a.theta.assign(theta.data(), theta.data() + theta.size());
  return a;
}

std::string archive_to_json(const SessionArchive& a) {
  json positives = json::array();
  for (const auto& c : a.positives) positives.push_back(correspondence_to_json(c));
  json negatives = json::array();
  for (const auto& p : a.negatives) negatives.push_back({p.i + 1, p.j + 1});
  json log = json::array();
  for (const auto& e : a.log) {
    json o = {{"k", e.k}, {"outcome", e.outcome}, {"expected_reward", e.expected_reward}, {"timestamp", e.timestamp}};
    if (e.pair) {
      o["i"] = e.pair->i + 1;
      o["j"] = e.pair->j + 1;
    }
    if (e.rmsd) o["rmsd"] = *e.rmsd;
    log.push_back(std::move(o));
  }
  json doc = {
      {"config",
       {{"strategy", std::string(to_string(a.strategy))},
        {"beta", a.beta},
        {"sigma", a.sigma},
        {"seed", a.seed},
        {"budget", a.budget},
        {"mc_samples", a.mc_samples},
        {"reference", a.reference + 1},
        {"domain", {{"width", a.domain.width}, {"height", a.domain.height}}}}},
      {"n_frames", a.n_frames},
      {"iteration", a.iteration},
      {"positives", positives},
      {"negatives", negatives},
      {"log", log},
      {"theta", a.theta},
  };
  if (a.weights) doc["weights"] = *a.weights;
  return doc.dump(1);
}

SessionArchive archive_from_json(const std::string& text) {
  const json doc = parse(text);
  return guarded([&] {
    SessionArchive a;
    const auto& cfg = doc.at("config");
    const auto strategy = parse_strategy(cfg.at("strategy").get<std::string>());
    if (!strategy) throw InvalidArgument("archive names an unknown strategy");
    a.strategy = *strategy;
    a.beta = cfg.value("beta", kDefaultBeta);
    a.sigma = cfg.value("sigma", 1.0);
    a.seed = cfg.value("seed", std::uint64_t{1});
    a.budget = cfg.value("budget", 50);
    a.mc_samples = cfg.value("mc_samples", kDefaultMcSamples);
    a.reference = cfg.value("reference", 1) - 1;
    a.domain = FrameDomain(cfg.at("domain").at("width").get<double>(), cfg.at("domain").at("height").get<double>());
    a.n_frames = doc.at("n_frames").get<int>();
    a.iteration = doc.value("iteration", 1);
    for (const auto& o : doc.at("positives")) a.positives.push_back(correspondence_from_json(o, a.sigma));
    for (const auto& p : doc.at("negatives")) a.negatives.push_back({p.at(0).get<int>() - 1, p.at(1).get<int>() - 1});
    if (doc.contains("weights")) a.weights = doc["weights"].get<std::vector<double>>();
    for (const auto& o : doc.value("log", json::array())) {
      LogEntry e;
      e.k = o.at("k").get<int>();
      if (o.contains("i")) e.pair = FramePair{o["i"].get<int>() - 1, o["j"].get<int>() - 1};
      e.outcome = o.value("outcome", "");
      e.expected_reward = o.value("expected_reward", 0.0);
      if (o.contains("rmsd")) e.rmsd = o["rmsd"].get<double>();
      e.timestamp = o.value("timestamp", "");
      a.log.push_back(std::move(e));
    }
    a.theta = doc.value("theta", std::vector<double>{});
    return a;
  });
}

std::unique_ptr<SessionState> restore_session(const SessionArchive& a, std::unique_ptr<ExternalOverlap> external) {
  if (a.weights) {
    auto* learned = dynamic_cast<LearnedExternalOverlap*>(external.get());
    if (learned == nullptr) throw InvalidArgument("archive has learned weights but no signature model was supplied");
    ExternalModel m = learned->model();
    if (static_cast<int>(a.weights->size()) != m.weights.size()) {
      throw InvalidArgument("archived weights do not match the signature dimension");
    }
    m.weights = Eigen::Map<const Eigen::VectorXd>(a.weights->data(), static_cast<Eigen::Index>(a.weights->size()));
    m.beta = a.beta;
    learned->set_model(std::move(m));
  }
  SessionConfig cfg;
  cfg.strategy = a.strategy;
  cfg.seed = a.seed;
  cfg.mc_samples = a.mc_samples;
  auto s = std::make_unique<SessionState>(a.n_frames, a.domain, a.positives, std::move(external), cfg, a.reference);
  for (const auto& p : a.negatives) s->restore_negative(p);
  s->set_iteration(a.iteration);
  return s;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw InvalidArgument("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace mosaic::io
