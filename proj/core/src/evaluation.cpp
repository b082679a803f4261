#include "mosaic/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mosaic/errors.hpp"
#include "mosaic/reward.hpp"

namespace mosaic {

namespace {

std::string number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string outcome_name(const Feedback& f) { return f.overlap ? "overlap" : "no-overlap"; }

}  // namespace

void validate_ground_truth(const GroundTruthLandmarks& gt, int n_frames) {
  for (const auto& g : gt) {
    if (g.pair.i < 0 || g.pair.j < 0 || g.pair.i >= n_frames || g.pair.j >= n_frames || g.pair.i == g.pair.j) {
      throw InvalidArgument("ground-truth pair out of range");
    }
    if (g.points_i.size() != g.points_j.size() || g.points_j.empty()) {
      throw InvalidArgument("ground-truth point lists must be nonempty and equally long");
    }
  }
}

double pairwise_rmsd(const std::vector<AffineTransform2>& recon, const GroundTruthLandmarks& gt,
                     const FrameDomain& dom, RmsdOptions options) {
  validate_ground_truth(gt, static_cast<int>(recon.size()));
  if (gt.empty()) return 0.0;
  double total = 0.0;
  for (const auto& g : gt) {
    const AffineTransform2 t =
        compose(invert(recon[static_cast<std::size_t>(g.pair.j)]), recon[static_cast<std::size_t>(g.pair.i)]);
    double sq = 0.0;
    for (std::size_t l = 0; l < g.points_i.size(); ++l) sq += (apply(t, g.points_i[l]) - g.points_j[l]).squaredNorm();
    double rms = std::sqrt(sq / static_cast<double>(g.points_i.size()));
    if (options.normalize) rms /= dom.diagonal();
    total += rms;
  }
  return total / static_cast<double>(gt.size());
}

int default_gt_min_gap(int n_frames) { return std::max(2, n_frames / 10); }

GroundTruthLandmarks make_ground_truth(const TrajectoryTruth& truth, int min_gap, int n_landmarks) {
  GroundTruthLandmarks gt;
  for (int i = 0; i < truth.size(); ++i) {
    for (int j = i + std::max(min_gap, 1); j < truth.size(); ++j) {
      if (auto c = true_correspondence(truth, {i, j}, n_landmarks)) {
        gt.push_back({c->pair, std::move(c->points_j), std::move(c->points_i)});
      }
    }
  }
  return gt;
}

std::optional<TrajectoryKind> parse_trajectory(std::string_view name) {
  if (name == "raster") return TrajectoryKind::raster;
  if (name == "circle") return TrajectoryKind::circle;
  return std::nullopt;
}

std::optional<ExternalMode> parse_external_mode(std::string_view name) {
  if (name == "auto") return ExternalMode::automatic;
  if (name == "ideal") return ExternalMode::ideal;
  if (name == "learned") return ExternalMode::learned;
  if (name == "none") return ExternalMode::none;
  return std::nullopt;
}

std::string_view to_string(TrajectoryKind k) { return k == TrajectoryKind::raster ? "raster" : "circle"; }

std::string_view to_string(ExternalMode m) {
  switch (m) {
    case ExternalMode::automatic:
      return "auto";
    case ExternalMode::ideal:
      return "ideal";
    case ExternalMode::learned:
      return "learned";
    case ExternalMode::none:
      return "none";
  }
  return "auto";
}

TrajectoryTruth make_truth(const ExperimentConfig& config) {
  if (config.trajectory == TrajectoryKind::raster) {
    const double dx = config.step_x > 0.0 ? config.step_x : config.domain.width / 3.0;
    const double dy = config.step_y > 0.0 ? config.step_y : config.domain.height / 3.0;
    return generate_raster(config.n_frames, dx, dy, config.domain);
  }
  return generate_circle(config.n_frames, config.radius, config.domain);
}

std::unique_ptr<ExternalOverlap> make_external(const ExperimentConfig& config,
                                               std::shared_ptr<const TrajectoryTruth> truth) {
  ExternalMode mode = config.external;
  if (mode == ExternalMode::automatic) {
    mode = truth->signatures ? ExternalMode::learned
                             : (truth->translation_only() ? ExternalMode::ideal : ExternalMode::none);
  }
  switch (mode) {
    case ExternalMode::ideal:
      return std::make_unique<IdealExternalOverlap>(std::move(truth));
    case ExternalMode::learned:
      if (!truth->signatures) throw InvalidArgument("learned external model needs signatures");
      return std::make_unique<LearnedExternalOverlap>(*truth->signatures, config.beta);
    case ExternalMode::none:
    case ExternalMode::automatic:
      break;
  }
  return std::make_unique<UniformExternalOverlap>();
}

std::vector<ExperimentRow> run_loop(SessionState& session, Agent& agent, const GroundTruthLandmarks& gt, int budget,
                                    std::uint64_t seed, RmsdOptions rmsd, const RowCallback& on_row) {
  std::vector<ExperimentRow> rows;
  auto emit = [&](ExperimentRow row) {
    if (on_row) on_row(row);
    rows.push_back(std::move(row));
  };
  ExperimentRow initial;
  initial.iteration = 0;
  initial.seed = seed;
  initial.rmsd = pairwise_rmsd(session.transforms(), gt, session.domain(), rmsd);
  initial.outcome = "initial";
  emit(initial);

  for (int t = 1; t <= budget; ++t) {
    ExperimentRow row;
    row.iteration = t;
    row.seed = seed;
    if (session.candidate_count() == 0) break;
    const std::vector<PairScore> best = suggest(session, 1);
    if (best.empty()) {
      row.outcome = "no-candidate";
    } else {
      const PairScore& top = best.front();
      if (session.config().reward_floor > 0.0 && top.expected_reward < session.config().reward_floor) break;
      row.suggested = top.pair;
      row.expected_reward = top.expected_reward;
      const Feedback f = agent.answer(top.pair);
      session.record_feedback(top.pair, f);
      row.outcome = outcome_name(f);
    }
    row.rmsd = pairwise_rmsd(session.transforms(), gt, session.domain(), rmsd);
    emit(std::move(row));
  }
  return rows;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RowCallback& on_row) {
  if (config.budget < 0) throw InvalidArgument("budget must be nonnegative");
  if (config.seeds.empty()) throw InvalidArgument("at least one seed is required");
  auto truth = std::make_shared<const TrajectoryTruth>(make_truth(config));
  const int min_gap = config.gt_min_gap > 0 ? config.gt_min_gap : default_gt_min_gap(config.n_frames);
  const GroundTruthLandmarks gt = make_ground_truth(*truth, min_gap, config.n_landmarks);

  ExperimentResult result;
  for (std::uint64_t seed : config.seeds) {
    SimulatedAgent agent(truth, config.n_landmarks, config.sigma, seed);
    SessionConfig sc;
    sc.strategy = config.strategy;
    sc.seed = seed;
    sc.mc_samples = config.mc_samples;
    sc.reward_floor = config.reward_floor;
    SessionState session(truth->size(), truth->domain, initial_chain(agent, truth->size()),
                         make_external(config, truth), sc);
    auto rows = run_loop(session, agent, gt, config.budget, seed, {config.normalize_rmsd}, on_row);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  result.mean_curve = mean_curve(result.rows);
  return result;
}

std::vector<double> mean_curve(const std::vector<ExperimentRow>& rows) {
  std::vector<double> sum;
  std::vector<int> count;
  for (const auto& r : rows) {
    const std::size_t t = static_cast<std::size_t>(r.iteration);
    if (sum.size() <= t) {
      sum.resize(t + 1, 0.0);
      count.resize(t + 1, 0);
    }
    sum[t] += r.rmsd;
    ++count[t];
  }
  for (std::size_t t = 0; t < sum.size(); ++t) sum[t] = count[t] ? sum[t] / count[t] : 0.0;
  return sum;
}

void write_results_csv(std::ostream& os, const std::vector<ExperimentRow>& rows) {
  os << "iteration,seed,rmsd,suggested_i,suggested_j,outcome\n";
  for (const auto& r : rows) {
    os << r.iteration << ',' << r.seed << ',' << number(r.rmsd) << ',';
    if (r.suggested) {
      os << r.suggested->i + 1 << ',' << r.suggested->j + 1;
    } else {
      os << ',';
    }
    os << ',' << r.outcome << '\n';
  }
}

void write_curve_csv(std::ostream& os, const std::map<std::string, std::vector<double>>& curves) {
  std::size_t len = 0;
  os << "iteration";
  for (const auto& [name, c] : curves) {
    os << ',' << name;
    len = std::max(len, c.size());
  }
  os << '\n';
  for (std::size_t t = 0; t < len; ++t) {
    os << t;
    for (const auto& [name, c] : curves) {
      os << ',';
      if (t < c.size()) os << number(c[t]);
    }
    os << '\n';
  }
}

void write_svg_plot(std::ostream& os, const std::map<std::string, std::vector<double>>& curves,
                    const std::string& y_label) {
  constexpr double width = 640.0;
  constexpr double height = 400.0;
  constexpr double left = 70.0;
  constexpr double right = 150.0;
  constexpr double top = 20.0;
  constexpr double bottom = 50.0;
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::size_t len = 1;
  double y_max = 0.0;
  for (const auto& [name, c] : curves) {
    len = std::max(len, c.size());
    for (double v : c) y_max = std::max(y_max, v);
  }
  if (y_max <= 0.0) y_max = 1.0;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  auto px = [&](std::size_t t) { return left + plot_w * (len > 1 ? static_cast<double>(t) / static_cast<double>(len - 1) : 0.0); };
  auto py = [&](double v) { return top + plot_h * (1.0 - v / y_max); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << left + plot_w << "\" y2=\"" << top + plot_h
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">interactions</text>\n";
  os << "<text x=\"15\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 15 " << top + plot_h / 2
     << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
  os << "<text x=\"" << left - 5 << "\" y=\"" << top + 5 << "\" text-anchor=\"end\" font-size=\"10\">" << number(y_max)
     << "</text>\n";
  os << "<text x=\"" << left + plot_w << "\" y=\"" << top + plot_h + 15 << "\" text-anchor=\"end\" font-size=\"10\">"
     << len - 1 << "</text>\n";
  std::size_t k = 0;
  for (const auto& [name, c] : curves) {
    const char* colour = colours[k % 6];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t t = 0; t < c.size(); ++t) os << px(t) << ',' << py(c[t]) << ' ';
    os << "\"/>\n";
    const double ly = top + 20.0 * static_cast<double>(k + 1);
    os << "<text x=\"" << left + plot_w + 10 << "\" y=\"" << ly << "\" fill=\"" << colour << "\">" << name << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
}

}  // namespace mosaic
