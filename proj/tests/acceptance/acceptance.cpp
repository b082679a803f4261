#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mosaic/baselines.hpp"
#include "mosaic/evaluation.hpp"
#include "mosaic/overlap_external.hpp"
#include "mosaic/overlap_position.hpp"
#include "mosaic/reward.hpp"
#include "mosaic/uncertainty.hpp"
#include "support.hpp"

using namespace mosaic;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// 1. Noiseless recovery on a 50-frame affine chain.
Outcome noiseless_recovery() {
  std::mt19937_64 rng(101);
  const int n = 50;
  const auto truth = test::random_truth(rng, n, 0.05);
  std::vector<CorrespondenceSet> sets;
  for (int k = 0; k + 1 < n; ++k) sets.push_back(test::exact_correspondence(truth, {k, k + 1}, test::random_points(rng, 4)));
  const auto t0 = Clock::now();
  BundleSystem sys(n);
  for (auto& c : sets) sys.stage(c);
  sys.refresh();
  const auto recon = sys.transforms();
  const double elapsed = seconds_since(t0);
  double err = 0.0;
  for (int k = 0; k < n; ++k) err = std::max(err, (recon[k].vec() - truth[k].vec()).cwiseAbs().maxCoeff());
  return {err < 1e-7 && elapsed < 1.0, fmt("max param error %.3g (< 1e-7), %.3f s (< 1 s)", err, elapsed)};
}

// 2. Incremental updates equal a batch rebuild.
Outcome incremental_equals_batch() {
  std::mt19937_64 rng(102);
  const int n = 30;
  const auto truth = test::random_truth(rng, n, 0.05);
  BundleSystem inc(n);
  for (int k = 0; k + 1 < n; ++k) {
    inc.stage(test::exact_correspondence(truth, {k, k + 1}, test::random_points(rng, 4), 1.0, &rng));
  }
  inc.refresh();
  std::uniform_int_distribution<int> frame(0, n - 1);
  int ops = 0;
  while (ops < 100) {
    const int i = frame(rng);
    const int j = frame(rng);
    if (i == j) continue;
    inc.add_correspondence(test::exact_correspondence(truth, FramePair{i, j}.canonical(), test::random_points(rng, 5), 1.0, &rng));
    ++ops;
  }
  BundleSystem batch(n);
  for (const auto& c : inc.correspondences()) batch.stage(c);
  batch.refresh();
  const double rel = (inc.theta() - batch.theta()).norm() / batch.theta().norm();
  return {rel < 1e-8, fmt("%d operations, relative difference %.3g (< 1e-8)", ops, rel)};
}

// 3. Haralick covariance against Monte Carlo resampling.
Outcome covariance_fidelity() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(103);
  const auto truth = test::random_truth(rng, 3, 0.05);
  std::vector<CorrespondenceSet> clean;
  for (FramePair p : {FramePair{0, 1}, FramePair{1, 2}, FramePair{0, 2}}) {
    auto c = test::exact_correspondence(truth, p, test::random_points(rng, 6));
    c.sigma = 1.0;
    clean.push_back(c);
  }
  BundleSystem ref(3);
  for (const auto& c : clean) ref.stage(c);
  ref.refresh();
  const Eigen::MatrixXd sigma_h = propagate_covariance(ref).covariance;

  const int draws = 10000;
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd samples(ref.n_unknowns(), draws);
  for (int d = 0; d < draws; ++d) {
    BundleSystem sys(3);
    for (auto c : clean) {
      for (auto& p : c.points_i) p += Point2(g(rng), g(rng));
      sys.stage(std::move(c));
    }
    sys.refresh();
    samples.col(d) = sys.theta();
  }
  const Eigen::VectorXd mean = samples.rowwise().mean();
  const Eigen::MatrixXd centred = samples.colwise() - mean;
  const Eigen::MatrixXd emp = centred * centred.transpose() / (draws - 1);
  const double rel = (emp - sigma_h).norm() / sigma_h.norm();
  const double elapsed = seconds_since(t0);
  return {rel < 0.15 && elapsed < 60.0,
          fmt("relative Frobenius error %.4f (< 0.15) over %d resamples, %.2f s (< 60 s)", rel, draws, elapsed)};
}

Eigen::VectorXd pair_gradient(const CorrespondenceSet& c, const Eigen::VectorXd& theta, int n, int r) {
  const PairBlocks pb = assemble_pair_blocks(c, n, r);
  const Eigen::MatrixXd a = pb.dense(6 * (n - 1));
  return a * (a.transpose() * theta - pb.b);
}

// 4. Centre Jacobian and cross-derivative columns against finite differences.
Outcome jacobian_checks() {
  std::mt19937_64 rng(104);
  const FrameDomain dom;
  double worst_centre = 0.0;
  double worst_cross = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto ti = test::random_affine(rng, 0.5, 200.0);
    const auto tj = test::random_affine(rng, 0.5, 200.0);
    const Matrix2x12d j = centre_jacobian(ti, tj, dom);
    Matrix2x12d fd;
    for (int q = 0; q < 12; ++q) {
      const double h = 1e-6;
      auto at = [&](double sgn) {
        Vector6d vi = ti.vec();
        Vector6d vj = tj.vec();
        (q < 6 ? vi[q] : vj[q - 6]) += sgn * h;
        return mapped_centre(AffineTransform2::from_vec(vi), AffineTransform2::from_vec(vj), dom);
      };
      fd.col(q) = (at(1.0) - at(-1.0)) / (2 * h);
    }
    worst_centre = std::max(worst_centre, (j - fd).norm() / fd.norm());

    const auto truth = test::random_truth(rng, 3, 0.1);
    std::vector<CorrespondenceSet> sets;
    for (FramePair p : {FramePair{0, 1}, FramePair{1, 2}, FramePair{0, 2}}) {
      sets.push_back(test::exact_correspondence(truth, p, test::random_points(rng, 4), 1.0, &rng));
    }
    BundleSystem sys(3, trial % 3);
    for (const auto& c : sets) sys.stage(c);
    sys.refresh();
    for (const auto& c : sets) {
      const auto cols = cross_derivative_columns(c, sys.theta(), 3, sys.reference());
      for (std::size_t l = 0; l < c.size(); ++l) {
        for (int d = 0; d < 2; ++d) {
          const double h = 1e-5;
          CorrespondenceSet plus = c, minus = c;
          plus.points_i[l][d] += h;
          minus.points_i[l][d] -= h;
          const Eigen::VectorXd fdc =
              (pair_gradient(plus, sys.theta(), 3, sys.reference()) - pair_gradient(minus, sys.theta(), 3, sys.reference())) /
              (2 * h);
          Eigen::VectorXd col = Eigen::VectorXd::Zero(fdc.size());
          const auto& dc = cols[2 * l + static_cast<std::size_t>(d)];
          if (dc.band_j >= 0) col.segment<6>(6 * dc.band_j) += dc.f_j;
          if (dc.band_i >= 0) col.segment<6>(6 * dc.band_i) += dc.f_i;
          worst_cross = std::max(worst_cross, (col - fdc).norm() / std::max(fdc.norm(), 1e-12));
        }
      }
    }
  }
  return {worst_centre < 1e-4 && worst_cross < 1e-4,
          fmt("worst relative error: centre Jacobian %.3g, cross-derivative columns %.3g (< 1e-4)", worst_centre,
              worst_cross)};
}

// 5. Bracketing of Monte Carlo estimates by the analytic bounds.
Outcome bound_bracketing() {
  std::mt19937_64 rng(105);
  const FrameDomain dom;
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> logscale(-4.0, 1.0);
  const int cases = 1000;
  const int n = 10000;
  int ordered = 0;
  int inside = 0;
  for (int t = 0; t < cases; ++t) {
    const auto ti = test::random_affine(rng, 0.3, 150.0);
    const auto tj = test::random_affine(rng, 0.3, 150.0);
    Matrix12d b;
    for (int r = 0; r < 12; ++r) {
      for (int c = 0; c < 12; ++c) b(r, c) = g(rng);
    }
    const Matrix12d cov = std::pow(10.0, logscale(rng)) * b * b.transpose() / 12.0;
    const auto cd = centre_distribution(ti, tj, cov, dom);
    const auto bounds = overlap_bounds(cd, dom);
    const double p = overlap_probability_mc(cd, dom, n, static_cast<std::uint64_t>(t) + 1);
    ordered += bounds.lower <= bounds.upper;
    const double se_lo = std::sqrt(bounds.lower * (1 - bounds.lower) / n);
    const double se_hi = std::sqrt(bounds.upper * (1 - bounds.upper) / n);
    inside += p >= bounds.lower - 3 * se_lo && p <= bounds.upper + 3 * se_hi;
  }
  const double frac = static_cast<double>(inside) / cases;
  return {ordered == cases && frac >= 0.99,
          fmt("Lambda <= Upsilon in %d/%d; MC inside 3-SE bracket in %.1f%% (>= 99%%)", ordered, cases, 100 * frac)};
}

// 6. Asymptotic balance for isotropic covariances.
Outcome asymptotic_balance(bool squared_half_length) {
  const FrameDomain dom;
  const auto a = square_half_lengths(dom);
  const double m2 = dom.max_side() * dom.max_side();
  double worst = 0.0;
  std::string values;
  for (double scale : {1e4, 1e6, 1e8}) {
    const double nu = scale * m2;
    Matrix12d c = Matrix12d::Zero();
    c(2, 2) = c(5, 5) = nu;
    const auto cd = centre_distribution(AffineTransform2::identity(), AffineTransform2::identity(), c, dom);
    const auto b = overlap_bounds(cd, dom);
    const double root = std::sqrt(cd.nu1 * cd.nu2);
    const double in_ref = squared_half_length ? 2 * a.inner * a.inner / std::numbers::pi : 2 * a.inner / std::numbers::pi;
    const double out_ref = squared_half_length ? 2 * a.outer * a.outer / std::numbers::pi : 2 * a.outer / std::numbers::pi;
    const double e_in = std::abs(b.lower * root / in_ref - 1.0);
    const double e_out = std::abs(b.upper * root / out_ref - 1.0);
    worst = std::max({worst, e_in, e_out});
    values += fmt(" [%.0e: %.4g vs %.4g, %.4g vs %.4g]", scale, b.lower * root, in_ref, b.upper * root, out_ref);
  }
  return {worst < 0.01, fmt("worst relative deviation %.3g (< 0.01);", worst) + values};
}

// 7. External model gradient and the non-increase guarantee.
Outcome external_model() {
  std::mt19937_64 rng(107);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> frame(0, 59);
  double worst_grad = 0.0;
  int increases = 0;
  int fresh = 0;
  int fresh_decreased = 0;
  int fresh_below_previous = 0;
  double smallest_drop = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd m(60, 16);
    for (int r = 0; r < 60; ++r) {
      for (int c = 0; c < 16; ++c) m(r, c) = u(rng) * u(rng);
    }
    const auto sig = SignatureSet::from_matrix(m);
    std::vector<FramePair> pos, neg;
    for (int k = 0; k < 10; ++k) {
      const int i = frame(rng);
      const int j = (i + 1 + frame(rng) % 58) % 60;
      (k < 6 ? pos : neg).push_back(FramePair{i, j}.canonical());
    }
    const auto pairs = make_labeled_pairs(pos, neg);
    Eigen::VectorXd w(16);
    for (int d = 0; d < 16; ++d) w[d] = 1.0 + 2.0 * u(rng);
    const auto lg = loss_and_gradient(w, 10.0, pairs, sig);
    Eigen::VectorXd fd(16);
    for (int d = 0; d < 16; ++d) {
      Eigen::VectorXd wp = w, wm = w;
      wp[d] += 1e-6;
      wm[d] -= 1e-6;
      fd[d] = (loss_and_gradient(wp, 10.0, pairs, sig).loss - loss_and_gradient(wm, 10.0, pairs, sig).loss) / 2e-6;
    }
    worst_grad = std::max(worst_grad, (lg.gradient - fd).norm() / fd.norm());

    // Online sequence: chain positives, negatives arriving one at a time.
    const auto w1 = ExternalModel::uniform(16);
    ExternalModel model = w1;
    std::vector<FramePair> chain;
    for (int k = 0; k + 1 < 60; ++k) chain.push_back({k, k + 1});
    std::vector<FramePair> negatives;
    for (int step = 0; step < 5; ++step) {
      FramePair p{};
      do {
        p = FramePair{frame(rng), frame(rng)}.canonical();
      } while (p.j - p.i < 2);
      const double before = similarity_probability(model, sig.signature(p.i), sig.signature(p.j));
      const double base = similarity_probability(w1, sig.signature(p.i), sig.signature(p.j));
      negatives.push_back(p);
      model = update_weights(model, chain, negatives, sig).model;
      const double after = similarity_probability(model, sig.signature(p.i), sig.signature(p.j));
      ++fresh;
      fresh_decreased += after < base;
      fresh_below_previous += after < before;
      smallest_drop = std::min(smallest_drop, 1.0 - after / base);
      for (int i = 0; i < 60; ++i) {
        for (int j = i + 1; j < 60; ++j) {
          increases += similarity_probability(model, sig.signature(i), sig.signature(j)) >
                       similarity_probability(w1, sig.signature(i), sig.signature(j));
        }
      }
    }
  }
  return {worst_grad < 1e-5 && increases == 0 && fresh_decreased == fresh,
          fmt("gradient relative error %.3g (< 1e-5); pairs above the w=1 probability: %d; fresh negatives below "
              "w=1: %d/%d (smallest relative drop %.3g); below pre-update weights: %d/%d",
              worst_grad, increases, fresh_decreased, fresh, smallest_drop, fresh_below_previous, fresh)};
}

// 8. Heap pruning against exhaustive ranking.
Outcome pruning_soundness() {
  int identical = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = test::random_session(1000 + seed, 30);
    const auto a = suggest_pruned(*s, ScoreMode::ours, 5);
    const auto b = suggest_exhaustive(*s, ScoreMode::ours, 5);
    bool same = a.size() == b.size() && a.size() == 5;
    for (std::size_t k = 0; same && k < a.size(); ++k) {
      same = a[k].pair == b[k].pair && a[k].expected_reward == b[k].expected_reward;
    }
    identical += same;
  }
  return {identical == 20, fmt("identical top-5 in %d/20 sessions", identical)};
}

ExperimentResult experiment(TrajectoryKind kind, Strategy s, int budget) {
  ExperimentConfig cfg;
  cfg.trajectory = kind;
  cfg.n_frames = 1000;
  cfg.strategy = s;
  cfg.budget = budget;
  cfg.seeds = {1, 2, 3, 4, 5};
  const auto t0 = Clock::now();
  auto r = run_experiment(cfg);
  std::cerr << "  " << to_string(kind) << " " << to_string(s) << " budget " << budget << ": "
            << fmt("%.1f s", seconds_since(t0)) << "\n";
  return r;
}

// 9. Raster ordering claim.
Outcome raster_reproduction() {
  const auto t0 = Clock::now();
  const auto ours = experiment(TrajectoryKind::raster, Strategy::ours, 10);
  const auto sawhney = experiment(TrajectoryKind::raster, Strategy::sawhney, 10);
  const auto elibol = experiment(TrajectoryKind::raster, Strategy::elibol, 10);
  const double elapsed = seconds_since(t0);
  const double o = ours.mean_curve.at(10), s = sawhney.mean_curve.at(10), e = elibol.mean_curve.at(10);
  bool first_ok = true;
  std::string firsts;
  for (const auto& row : ours.rows) {
    if (row.iteration != 1) continue;
    const bool ok = row.suggested && row.suggested->j == 1000 - 1 - row.suggested->i && row.suggested->i + 1 <= 50;
    first_ok &= ok;
    firsts += row.suggested ? fmt(" (%d,%d)", row.suggested->i + 1, row.suggested->j + 1) : std::string(" none");
  }
  return {o < s && o < e && first_ok,
          fmt("mean RMSD at k=10: ours %.4g, sawhney %.4g, elibol %.4g; first suggestions", o, s, e) + firsts +
              fmt("; %.0f s (target < 600 s)", elapsed)};
}

// 10. Circle ordering claim.
Outcome circle_reproduction() {
  const auto ours = experiment(TrajectoryKind::circle, Strategy::ours, 5);
  const auto ext = experiment(TrajectoryKind::circle, Strategy::external_only, 5);
  const auto sawhney = experiment(TrajectoryKind::circle, Strategy::sawhney, 50);
  const auto elibol = experiment(TrajectoryKind::circle, Strategy::elibol, 50);
  auto drop = [](const std::vector<double>& c, std::size_t k) { return 1.0 - c.at(k) / c.at(0); };
  const double d_ours = drop(ours.mean_curve, 5);
  const double d_saw = drop(sawhney.mean_curve, 50);
  const double d_eli = drop(elibol.mean_curve, 50);
  const bool a = d_ours > 0.5;
  const bool b = d_saw < 0.1;
  const bool c = d_eli < 0.1;
  const bool d = ext.mean_curve.at(5) > ours.mean_curve.at(5);
  auto mark = [](bool ok) { return ok ? "ok" : "FAILED"; };
  return {a && b && c && d,
          fmt("ours drop at k=5 %.1f%% (> 50%%) %s; sawhney drop at k=50 %.1f%% (< 10%%) %s; elibol drop at k=50 "
              "%.1f%% (< 10%%) %s; external-only %.4g vs ours %.4g at k=5 %s",
              100 * d_ours, mark(a), 100 * d_saw, mark(b), 100 * d_eli, mark(c), ext.mean_curve.at(5),
              ours.mean_curve.at(5), mark(d))};
}

// 11. One suggest -> feedback -> re-solve cycle at N = 1000.
Outcome interactive_latency() {
  SessionConfig cfg;
  auto sim = test::make_sim_session(generate_raster(1000), cfg);
  double worst = 0.0;
  std::string cycles;
  for (int k = 0; k < 3; ++k) {
    const auto t0 = Clock::now();
    const FramePair p = suggest_next(*sim.session).front().pair;
    sim.session->record_feedback(p, sim.agent->answer(p));
    const double dt = seconds_since(t0);
    worst = std::max(worst, dt);
    cycles += fmt(" %.2f", dt);
  }
  return {worst < 5.0, "cycle times (s):" + cycles + " (< 5 s)"};
}

// 12. Bit-identical result CSVs.
Outcome determinism() {
  int identical = 0;
  int total = 0;
  for (TrajectoryKind kind : {TrajectoryKind::raster, TrajectoryKind::circle}) {
    for (Strategy s : {Strategy::ours, Strategy::elibol, Strategy::sawhney, Strategy::external_only,
                       Strategy::position_only}) {
      ExperimentConfig cfg;
      cfg.trajectory = kind;
      cfg.n_frames = 200;
      cfg.radius = 60.0;
      cfg.strategy = s;
      cfg.budget = 5;
      cfg.seeds = {1, 2};
      std::ostringstream a, b;
      write_results_csv(a, run_experiment(cfg).rows);
      write_results_csv(b, run_experiment(cfg).rows);
      identical += a.str() == b.str();
      ++total;
    }
  }
  return {identical == total, fmt("%d/%d configurations bit-identical", identical, total)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1", noiseless_recovery},
      {"2", incremental_equals_batch},
      {"3", covariance_fidelity},
      {"4", jacobian_checks},
      {"5", bound_bracketing},
      {"6", [] { return asymptotic_balance(false); }},
      {"6b", [] { return asymptotic_balance(true); }},
      {"7", external_model},
      {"8", pruning_soundness},
      {"9", raster_reproduction},
      {"10", circle_reproduction},
      {"11", interactive_latency},
      {"12", determinism},
  };
  std::string only;
  for (int k = 1; k < argc; ++k) {
    const std::string a = argv[k];
    if (a == "--only" && k + 1 < argc) {
      only = argv[++k];
    } else {
      std::cerr << "usage: mosaic_acceptance [--only ID]\n";
      return 2;
    }
  }
  int failed = 0;
  int ran = 0;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && only != id) continue;
    ++ran;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << std::endl;
  }
  if (ran == 0) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
