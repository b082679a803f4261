#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mosaic/errors.hpp"
#include "mosaic/evaluation.hpp"
#include "mosaic/reward.hpp"
#include "support.hpp"

using namespace mosaic;

namespace {

void expect_same_ranking(const std::vector<PairScore>& a, const std::vector<PairScore>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].pair, b[k].pair) << k;
    EXPECT_EQ(a[k].expected_reward, b[k].expected_reward) << k;
  }
}

}  // namespace

TEST(Informativeness, Examples) {
  EXPECT_NEAR(informativeness(Eigen::Vector2d(4.0, 9.0).asDiagonal()), 6.0, 1e-15);
  EXPECT_EQ(informativeness(Eigen::Matrix2d::Zero()), 0.0);
  Eigen::Matrix2d indefinite;
  indefinite << 1.0, 2.0, 2.0, 1.0;
  EXPECT_EQ(informativeness(indefinite), 0.0);
  Eigen::Matrix2d c;
  c << 5.0, 1.5, 1.5, 2.0;
  const double t = 0.7;
  Eigen::Matrix2d r;
  r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  EXPECT_NEAR(informativeness(r * c * r.transpose()), informativeness(c), 1e-10);
}

TEST(ExpectedReward, Examples) {
  EXPECT_EQ(expected_reward(1.0, 0.0, 5.0), 0.0);
  EXPECT_EQ(expected_reward(1.0, 0.5, 6.0), 3.0);
  EXPECT_EQ(expected_reward(0.5, 0.5, 8.0), 2.0);
}

TEST(ExpectedReward, AsymptoticIsotropicBound) {
  const FrameDomain dom;
  const auto a = square_half_lengths(dom);
  for (double nu : {1e8, 1e10}) {
    Matrix12d c = Matrix12d::Zero();
    c(2, 2) = c(5, 5) = nu;
    const auto cd = centre_distribution(AffineTransform2::translation(300, 200), AffineTransform2::identity(), c, dom);
    const auto b = overlap_bounds(cd, dom);
    const double u = informativeness(cd.covariance);
    EXPECT_NEAR(b.lower * u / (2 * a.inner * a.inner / std::numbers::pi), 1.0, 1e-2);
    EXPECT_NEAR(b.upper * u / (2 * a.outer * a.outer / std::numbers::pi), 1.0, 1e-2);
  }
}

TEST(CentreCalculator, MatchesDirectPropagation) {
  auto s = test::random_session(11, 12);
  const CentreCalculator calc(s->transforms(), s->belief(), s->domain());
  const auto& b = *s->belief();
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 12; ++j) {
      if (i == j) continue;
      const auto direct = centre_distribution(s->transforms()[i], s->transforms()[j], pair_marginal(b, i, j).covariance,
                                              s->domain());
      const auto fast = calc(i, j);
      EXPECT_LT((fast.mean - direct.mean).norm(), 1e-9 * (1.0 + direct.mean.norm()));
      EXPECT_LT((fast.covariance - direct.covariance).norm(), 1e-8 * (1.0 + direct.covariance.norm())) << i << "," << j;
    }
  }
}

TEST(SuggestNext, ThreeFrames) {
  auto sim = test::make_sim_session(generate_raster(4), {});
  ASSERT_EQ(sim.session->n_frames(), 4);
  std::vector<CorrespondenceSet> chain;
  for (int k = 0; k < 2; ++k) chain.push_back(*true_correspondence(*sim.truth, {k, k + 1}, 4));
  SessionState s(3, FrameDomain{}, chain, nullptr);
  const auto r = suggest_next(s);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].pair, (FramePair{0, 2}));
  s.record_feedback({0, 2}, Feedback::no_overlap());
  EXPECT_THROW(suggest_next(s), ExhaustedError);
}

TEST(SuggestNext, PrunedEqualsExhaustive) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto s = test::random_session(seed, 30);
    for (ScoreMode mode : {ScoreMode::ours, ScoreMode::external_only, ScoreMode::position_only}) {
      for (int k : {1, 5}) expect_same_ranking(suggest_pruned(*s, mode, k), suggest_exhaustive(*s, mode, k));
    }
  }
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SessionConfig cfg;
    cfg.seed = seed;
    cfg.mc_samples = 500;
    auto sim = test::make_sim_session(generate_raster(30), cfg);
    for (int step = 0; step < 4; ++step) {
      for (ScoreMode mode : {ScoreMode::ours, ScoreMode::external_only, ScoreMode::position_only}) {
        expect_same_ranking(suggest_pruned(*sim.session, mode, 3), suggest_exhaustive(*sim.session, mode, 3));
      }
      const FramePair p = suggest_next(*sim.session).front().pair;
      sim.session->record_feedback(p, sim.agent->answer(p));
    }
  }
}

TEST(SuggestNext, ExclusionAndDeterminism) {
  SessionConfig cfg;
  cfg.mc_samples = 300;
  auto a = test::make_sim_session(generate_raster(24), cfg);
  auto b = test::make_sim_session(generate_raster(24), cfg);
  for (int step = 0; step < 12; ++step) {
    const auto ra = suggest_next(*a.session, 10);
    const auto rb = suggest_next(*b.session, 10);
    expect_same_ranking(ra, rb);
    for (const auto& ps : ra) {
      EXPECT_FALSE(a.session->is_annotated(ps.pair));
      EXPECT_GE(ps.pair.j - ps.pair.i, 2);
    }
    const FramePair p = ra.front().pair;
    a.session->record_feedback(p, a.agent->answer(p));
    b.session->record_feedback(p, b.agent->answer(p));
  }
  EXPECT_EQ(a.session->iteration(), 13);
}

TEST(SuggestNext, RasterPicksMirroredLongRangePair) {
  auto sim = test::make_sim_session(generate_raster(200), {});
  const FramePair p = suggest_next(*sim.session).front().pair;
  EXPECT_EQ(p.i + p.j, 199);
  EXPECT_TRUE(truly_overlaps(*sim.truth, p));
}

TEST(RecordFeedback, InformativenessCollapses) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    SessionConfig cfg;
    cfg.seed = seed;
    auto sim = test::make_sim_session(generate_raster(40), cfg);
    const FramePair p = suggest_next(*sim.session).front().pair;
    const double before = CentreCalculator(sim.session->transforms(), sim.session->belief(), sim.session->domain())
                              .operator()(p.i, p.j)
                              .covariance.determinant();
    const Feedback fb = sim.agent->answer(p);
    ASSERT_TRUE(fb.overlap);
    sim.session->record_feedback(p, fb);
    const double after = CentreCalculator(sim.session->transforms(), sim.session->belief(), sim.session->domain())
                             .operator()(p.i, p.j)
                             .covariance.determinant();
    EXPECT_LT(std::sqrt(std::max(after, 0.0)), std::sqrt(before));
  }
}

TEST(RecordFeedback, NegativeLowersExternalProbability) {
  auto sim = test::make_sim_session(generate_circle(60), {});
  const FramePair p{3, 8};
  ASSERT_FALSE(truly_overlaps(*sim.truth, p));
  const double before = sim.session->external().probability(p.i, p.j);
  sim.session->record_feedback(p, sim.agent->answer(p));
  EXPECT_LT(sim.session->external().probability(p.i, p.j), before);
  EXPECT_EQ(sim.session->negatives().size(), 1u);
  for (int k = 0; k < 5; ++k) {
    for (const auto& ps : suggest_next(*sim.session, 20)) EXPECT_NE(ps.pair, p);
  }
  EXPECT_THROW(sim.session->record_feedback(p, Feedback::no_overlap()), AlreadyAnnotatedError);
}

TEST(RecordFeedback, LoopClosureReducesError) {
  const auto truth = std::make_shared<const TrajectoryTruth>(generate_circle(10, 60.0));
  SimulatedAgent agent(truth, 4, 1.0, 3);
  SessionState s(10, truth->domain, initial_chain(agent, 10), nullptr);
  const auto gt = make_ground_truth(*truth, 2);
  ASSERT_FALSE(gt.empty());
  const double before = pairwise_rmsd(s.transforms(), gt, s.domain());
  const FramePair p{0, 9};
  ASSERT_FALSE(s.is_annotated(p));
  s.record_feedback(p, Feedback::with(*true_correspondence(*truth, p, 4)));
  EXPECT_LT(pairwise_rmsd(s.transforms(), gt, s.domain()), before);
}

TEST(RecordFeedback, RejectsMismatchedCorrespondences) {
  auto sim = test::make_sim_session(generate_raster(10), {});
  auto c = *true_correspondence(*sim.truth, {0, 9}, 4);
  EXPECT_THROW(sim.session->record_feedback({1, 8}, Feedback::with(c)), InvalidArgument);
  EXPECT_THROW(sim.session->record_feedback({0, 10}, Feedback::no_overlap()), InvalidArgument);
  EXPECT_FALSE(sim.session->is_annotated({1, 8}));
  EXPECT_EQ(sim.session->iteration(), 1);
}
