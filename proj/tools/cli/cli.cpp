#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "mosaic/errors.hpp"
#include "mosaic/evaluation.hpp"
#include "mosaic/io.hpp"
#include "service.hpp"
#include "session_dir.hpp"

#include <httplib.h>

namespace mosaic::cli {

namespace {

std::string default_session_dir() {
  const char* env = std::getenv("MOSAIC_SESSION_DIR");
  return env && *env ? env : "session";
}

// "1..5", "1,2,7" or "3".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  try {
    if (dots != std::string::npos) {
      const std::uint64_t lo = std::stoull(text.substr(0, dots));
      const std::uint64_t hi = std::stoull(text.substr(dots + 2));
      if (hi < lo) throw InvalidArgument("empty seed range " + text);
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      std::istringstream in(text);
      std::string item;
      while (std::getline(in, item, ',')) seeds.push_back(std::stoull(item));
    }
  } catch (const std::logic_error&) {
    throw InvalidArgument("cannot parse seeds '" + text + "'; use e.g. 1..5 or 1,2,3");
  }
  if (seeds.empty()) throw InvalidArgument("no seeds given");
  return seeds;
}

CLI::Validator strategy_validator() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        return parse_strategy(s) ? std::string() : "unknown strategy '" + s + "'; valid: " + strategy_names();
      },
      "STRATEGY");
}

struct SimulateArgs {
  std::string kind;
  int n = 0;
  double radius = kDefaultCircleRadius;
  double step_x = 0.0;
  double step_y = 0.0;
  double width = 100.0;
  double height = 100.0;
  double sigma = 1.0;
  std::uint64_t seed = 1;
  int landmarks = kDefaultLandmarks;
  std::string strategy = "ours";
  int budget = 50;
  double beta = kDefaultBeta;
  int mc_samples = kDefaultMcSamples;
  int gt_min_gap = 0;
  bool no_frames = false;
  std::string out;
};

struct RunArgs {
  std::string trajectory = "raster";
  int n = kDefaultRasterFrames;
  double radius = kDefaultCircleRadius;
  double step_x = 0.0;
  double step_y = 0.0;
  double width = 100.0;
  double height = 100.0;
  std::string strategy = "ours";
  int budget = 50;
  std::string seeds = "1..5";
  double sigma = 1.0;
  int landmarks = kDefaultLandmarks;
  int mc_samples = kDefaultMcSamples;
  double beta = kDefaultBeta;
  std::string external = "auto";
  int gt_min_gap = 0;
  bool no_normalize = false;
  std::string out = "results.csv";
  std::string curve;
  std::string svg;
};

struct ServeArgs {
  std::string dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
};

struct EvalArgs {
  std::vector<std::string> results;
  std::string curve;
  std::string svg;
  std::string session;
  std::string export_gold;
};

std::atomic<httplib::Server*> g_server{nullptr};

void stop_server(int) {
  if (auto* s = g_server.load()) s->stop();
}

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  const FrameDomain dom(a.width, a.height);
  TrajectoryTruth truth;
  if (a.kind == "raster") {
    truth = generate_raster(a.n, a.step_x > 0 ? a.step_x : dom.width / 3.0, a.step_y > 0 ? a.step_y : dom.height / 3.0, dom);
  } else {
    truth = generate_circle(a.n, a.radius, dom);
  }
  service::SimulateOptions o;
  o.config.strategy = *parse_strategy(a.strategy);
  o.config.sigma = a.sigma;
  o.config.seed = a.seed;
  o.config.n_landmarks = a.landmarks;
  o.config.budget = a.budget;
  o.config.beta = a.beta;
  o.config.mc_samples = a.mc_samples;
  o.gt_min_gap = a.gt_min_gap;
  o.write_frames = !a.no_frames;
  const std::string dir = a.out.empty() ? default_session_dir() : a.out;
  service::write_simulated_session(dir, truth, o);
  out << "wrote " << truth.size() << "-frame " << a.kind << " session to " << dir << '\n';
  return 0;
}

int do_run(const RunArgs& a, std::ostream& out) {
  ExperimentConfig cfg;
  cfg.trajectory = *parse_trajectory(a.trajectory);
  cfg.n_frames = a.n;
  cfg.radius = a.radius;
  cfg.step_x = a.step_x;
  cfg.step_y = a.step_y;
  cfg.domain = FrameDomain(a.width, a.height);
  cfg.strategy = *parse_strategy(a.strategy);
  cfg.budget = a.budget;
  cfg.seeds = parse_seeds(a.seeds);
  cfg.sigma = a.sigma;
  cfg.n_landmarks = a.landmarks;
  cfg.mc_samples = a.mc_samples;
  cfg.beta = a.beta;
  cfg.external = *parse_external_mode(a.external);
  cfg.gt_min_gap = a.gt_min_gap;
  cfg.normalize_rmsd = !a.no_normalize;

  const ExperimentResult r = run_experiment(cfg, [](const ExperimentRow& row) {
    spdlog::info("seed {} iteration {}: rmsd {:.6g} ({})", row.seed, row.iteration, row.rmsd, row.outcome);
  });
  {
    std::ofstream f(a.out);
    if (!f) throw InvalidArgument("cannot write " + a.out);
    write_results_csv(f, r.rows);
  }
  const std::map<std::string, std::vector<double>> curves{{a.strategy, r.mean_curve}};
  if (!a.curve.empty()) {
    std::ofstream f(a.curve);
    write_curve_csv(f, curves);
  }
  if (!a.svg.empty()) {
    std::ofstream f(a.svg);
    write_svg_plot(f, curves);
  }
  out << "wrote " << r.rows.size() << " rows to " << a.out << '\n';
  return 0;
}

int do_serve(const ServeArgs& a, std::ostream& out) {
  const std::string dir = a.dir.empty() ? default_session_dir() : a.dir;
  service::SessionService svc(dir);
  httplib::Server server;
  svc.mount(server);
  if (!a.static_dir.empty() && !server.set_mount_point("/", a.static_dir)) {
    throw InvalidArgument("static directory " + a.static_dir + " does not exist");
  }
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  out << "serving " << dir << " on http://" << a.host << ':' << a.port << '\n' << std::flush;
  const bool ok = server.listen(a.host, a.port);
  g_server = nullptr;
  if (!ok && server.is_running()) return 1;
  return ok ? 0 : 1;
}

// Parses a results CSV written by `run` into rows.
std::vector<ExperimentRow> read_results_csv(const std::string& path) {
  std::istringstream in(io::read_text(path));
  std::string line;
  std::getline(in, line);
  if (line.rfind("iteration,seed,rmsd", 0) != 0) throw InvalidArgument(path + " is not a results CSV");
  std::vector<ExperimentRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    if (cells.size() < 3) throw InvalidArgument("short row in " + path);
    ExperimentRow r;
    r.iteration = std::stoi(cells[0]);
    r.seed = std::stoull(cells[1]);
    r.rmsd = std::stod(cells[2]);
    rows.push_back(r);
  }
  return rows;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
  if (a.results.empty() && a.session.empty()) throw InvalidArgument("eval needs --results or --session");
  if (!a.results.empty()) {
    std::map<std::string, std::vector<double>> curves;
    for (const auto& path : a.results) {
      curves[std::filesystem::path(path).stem().string()] = mean_curve(read_results_csv(path));
    }
    if (!a.curve.empty()) {
      std::ofstream f(a.curve);
      write_curve_csv(f, curves);
    } else {
      write_curve_csv(out, curves);
    }
    if (!a.svg.empty()) {
      std::ofstream f(a.svg);
      write_svg_plot(f, curves);
    }
  }
  if (!a.session.empty()) {
    const std::filesystem::path dir = a.session;
    const auto cfg = service::config_from_json(io::read_text(dir / service::kConfigFile));
    const auto archive = io::archive_from_json(io::read_text(dir / service::kArchiveFile));
    if (std::filesystem::exists(dir / service::kGroundTruthFile)) {
      const auto gt = io::ground_truth_from_json(io::read_text(dir / service::kGroundTruthFile));
      std::vector<AffineTransform2> recon(static_cast<std::size_t>(archive.n_frames), AffineTransform2::identity());
      for (int n = 0, b = 0; n < archive.n_frames; ++n) {
        if (n == archive.reference) continue;
        Vector6d p;
        for (int q = 0; q < 6; ++q) p[q] = archive.theta.at(static_cast<std::size_t>(6 * b + q));
        recon[static_cast<std::size_t>(n)] = AffineTransform2::from_vec(p);
        ++b;
      }
      out << "iteration " << archive.iteration << " rmsd " << pairwise_rmsd(recon, gt, cfg.domain) << '\n';
    }
    if (!a.export_gold.empty()) {
      GroundTruthLandmarks gold;
      for (const auto& c : archive.positives) {
        if (std::abs(c.pair.j - c.pair.i) >= 2) gold.push_back({c.pair, c.points_j, c.points_i});
      }
      io::write_text_atomic(a.export_gold, io::ground_truth_to_json(gold));
      out << "exported " << gold.size() << " annotated pairs to " << a.export_gold << '\n';
    }
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Active annotation of long-range correspondences for mosaicking"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic session directory");
  simulate->add_option("kind", sim.kind, "raster or circle")->required()->check(CLI::IsMember({"raster", "circle"}));
  simulate->add_option("--n", sim.n, "number of frames")->required()->check(CLI::Range(3, 1000000));
  simulate->add_option("--radius", sim.radius, "circle radius")->capture_default_str();
  simulate->add_option("--step-x", sim.step_x, "raster step along x (default width/3)");
  simulate->add_option("--step-y", sim.step_y, "raster step along y (default height/3)");
  simulate->add_option("--width", sim.width, "frame width")->capture_default_str();
  simulate->add_option("--height", sim.height, "frame height")->capture_default_str();
  simulate->add_option("--sigma", sim.sigma, "landmark noise of the initial chain")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "noise and suggestion seed")->capture_default_str();
  simulate->add_option("--landmarks", sim.landmarks, "landmarks per pair")->capture_default_str();
  simulate->add_option("--strategy", sim.strategy, "strategy served by `serve`")->capture_default_str()->check(
      strategy_validator());
  simulate->add_option("--budget", sim.budget, "annotation budget")->capture_default_str();
  simulate->add_option("--beta", sim.beta, "external model slope")->capture_default_str();
  simulate->add_option("--mc-samples", sim.mc_samples, "Monte Carlo samples")->capture_default_str();
  simulate->add_option("--gt-min-gap", sim.gt_min_gap, "minimum |i-j| of ground-truth pairs (0: N/10)");
  simulate->add_flag("--no-frames", sim.no_frames, "skip frame images");
  simulate->add_option("--out", sim.out, "session directory (default $MOSAIC_SESSION_DIR or ./session)");

  RunArgs ra;
  auto* runc = app.add_subcommand("run", "Run a simulated annotation experiment and write a results CSV");
  runc->add_option("--trajectory", ra.trajectory, "raster or circle")->capture_default_str()->check(
      CLI::IsMember({"raster", "circle"}));
  runc->add_option("--n", ra.n, "number of frames")->capture_default_str()->check(CLI::Range(3, 1000000));
  runc->add_option("--radius", ra.radius, "circle radius")->capture_default_str();
  runc->add_option("--step-x", ra.step_x, "raster step along x (default width/3)");
  runc->add_option("--step-y", ra.step_y, "raster step along y (default height/3)");
  runc->add_option("--width", ra.width, "frame width")->capture_default_str();
  runc->add_option("--height", ra.height, "frame height")->capture_default_str();
  runc->add_option("--strategy", ra.strategy, strategy_names())->capture_default_str()->check(strategy_validator());
  runc->add_option("--budget", ra.budget, "interactions per seed")->capture_default_str()->check(CLI::NonNegativeNumber);
  runc->add_option("--seeds", ra.seeds, "seed list: 1..5 or 1,2,3")->capture_default_str();
  runc->add_option("--sigma", ra.sigma, "landmark noise")->capture_default_str();
  runc->add_option("--landmarks", ra.landmarks, "landmarks per pair")->capture_default_str();
  runc->add_option("--mc-samples", ra.mc_samples, "Monte Carlo samples")->capture_default_str();
  runc->add_option("--beta", ra.beta, "external model slope")->capture_default_str();
  runc->add_option("--external", ra.external, "auto, ideal, learned or none")->capture_default_str()->check(
      CLI::IsMember({"auto", "ideal", "learned", "none"}));
  runc->add_option("--gt-min-gap", ra.gt_min_gap, "minimum |i-j| of ground-truth pairs (0: N/10)");
  runc->add_flag("--no-normalize", ra.no_normalize, "report RMSD in pixels");
  runc->add_option("--out", ra.out, "results CSV")->capture_default_str();
  runc->add_option("--curve", ra.curve, "mean-curve CSV");
  runc->add_option("--svg", ra.svg, "mean-curve plot");

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Serve one interactive session over HTTP");
  serve->add_option("--session", sv.dir, "session directory (default $MOSAIC_SESSION_DIR or ./session)");
  serve->add_option("--host", sv.host, "bind address")->capture_default_str();
  serve->add_option("--port", sv.port, "port")->capture_default_str()->check(CLI::Range(1, 65535));
  serve->add_option("--static", sv.static_dir, "directory served at / (annotator UI build)");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Summarize result CSVs or score a session archive");
  eval->add_option("--results", ev.results, "results CSV (repeatable)");
  eval->add_option("--curve", ev.curve, "mean-curve CSV output (default stdout)");
  eval->add_option("--svg", ev.svg, "mean-curve plot output");
  eval->add_option("--session", ev.session, "session directory with archive.json");
  eval->add_option("--export-gold", ev.export_gold, "write annotated long-range pairs as ground-truth JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*simulate) return do_simulate(sim, out);
    if (*runc) return do_run(ra, out);
    if (*serve) return do_serve(sv, out);
    if (*eval) return do_eval(ev, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace mosaic::cli
