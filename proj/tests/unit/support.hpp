#pragma once

#include <memory>
#include <random>
#include <vector>

#include <Eigen/LU>

#include "mosaic/affine.hpp"
#include "mosaic/bundle_adjust.hpp"
#include "mosaic/evaluation.hpp"
#include "mosaic/session.hpp"
#include "mosaic/simulator.hpp"

namespace mosaic::test {

inline AffineTransform2 random_affine(std::mt19937_64& rng, double linear_noise = 0.2, double offset = 50.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return AffineTransform2({1.0 + linear_noise * u(rng), linear_noise * u(rng), offset * u(rng), linear_noise * u(rng),
                           1.0 + linear_noise * u(rng), offset * u(rng)});
}

inline std::vector<Point2> random_points(std::mt19937_64& rng, int n, const FrameDomain& dom = {}) {
  std::uniform_real_distribution<double> ux(0.0, dom.width);
  std::uniform_real_distribution<double> uy(0.0, dom.height);
  std::vector<Point2> pts;
  for (int k = 0; k < n; ++k) pts.emplace_back(ux(rng), uy(rng));
  return pts;
}

// points_i = Θ_i^-1 Θ_j points_j, optionally perturbed.
inline CorrespondenceSet exact_correspondence(const std::vector<AffineTransform2>& truth, FramePair p,
                                              std::vector<Point2> points_j, double sigma = 0.0,
                                              std::mt19937_64* rng = nullptr) {
  CorrespondenceSet c;
  c.pair = p;
  c.sigma = sigma;
  const AffineTransform2 m = compose(invert(truth[static_cast<std::size_t>(p.i)]), truth[static_cast<std::size_t>(p.j)]);
  std::normal_distribution<double> g(0.0, 1.0);
  for (const auto& x : points_j) {
    Point2 y = apply(m, x);
    if (rng && sigma > 0.0) y += sigma * Point2(g(*rng), g(*rng));
    c.points_i.push_back(y);
  }
  c.points_j = std::move(points_j);
  return c;
}

inline std::vector<AffineTransform2> random_truth(std::mt19937_64& rng, int n, double linear_noise = 0.05) {
  std::vector<AffineTransform2> t{AffineTransform2::identity()};
  for (int k = 1; k < n; ++k) t.push_back(compose(t.back(), random_affine(rng, linear_noise, 30.0)));
  return t;
}

// Session on a small raster with a noisy simulated chain and (optionally) the ideal external model.
struct SimSession {
  std::shared_ptr<const TrajectoryTruth> truth;
  std::unique_ptr<SimulatedAgent> agent;
  std::unique_ptr<SessionState> session;
};

inline SimSession make_sim_session(TrajectoryTruth truth, SessionConfig config, double sigma = 1.0,
                                   bool ideal = true) {
  SimSession s;
  s.truth = std::make_shared<const TrajectoryTruth>(std::move(truth));
  s.agent = std::make_unique<SimulatedAgent>(s.truth, kDefaultLandmarks, sigma, config.seed);
  std::unique_ptr<ExternalOverlap> ext;
  if (s.truth->signatures) {
    ext = std::make_unique<LearnedExternalOverlap>(*s.truth->signatures);
  } else if (ideal) {
    ext = std::make_unique<IdealExternalOverlap>(s.truth);
  }
  s.session = std::make_unique<SessionState>(s.truth->size(), s.truth->domain, initial_chain(*s.agent, s.truth->size()),
                                             std::move(ext), config);
  return s;
}

// Random affine chain, noisy correspondences on every consecutive pair plus a few extras, random signatures.
inline std::unique_ptr<SessionState> random_session(std::uint64_t seed, int n, Strategy strategy = Strategy::ours) {
  std::mt19937_64 rng(seed);
  const auto truth = random_truth(rng, n, 0.03);
  std::vector<CorrespondenceSet> init;
  for (int k = 0; k + 1 < n; ++k) {
    init.push_back(exact_correspondence(truth, {k, k + 1}, random_points(rng, 4), 1.0, &rng));
  }
  std::uniform_int_distribution<int> frame(0, n - 1);
  for (int e = 0; e < 3; ++e) {
    const int i = frame(rng);
    const int j = frame(rng);
    if (std::abs(i - j) < 2) continue;
    const FramePair p = FramePair{i, j}.canonical();
    bool dup = false;
    for (const auto& c : init) dup |= c.pair == p;
    if (!dup) init.push_back(exact_correspondence(truth, p, random_points(rng, 4), 1.0, &rng));
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd sig(n, 5);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < 5; ++c) sig(r, c) = u(rng);
  }
  SessionConfig cfg;
  cfg.strategy = strategy;
  cfg.seed = seed;
  cfg.mc_samples = 500;
  return std::make_unique<SessionState>(n, FrameDomain{}, std::move(init),
                                        std::make_unique<LearnedExternalOverlap>(SignatureSet::from_matrix(sig)), cfg);
}

}  // namespace mosaic::test
