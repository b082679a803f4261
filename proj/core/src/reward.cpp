#include "mosaic/reward.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "mosaic/baselines.hpp"
#include "mosaic/errors.hpp"

namespace mosaic {

namespace {

double quad(const Eigen::Ref<const Eigen::Matrix3d>& m, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return a.dot(m * b);
}

Eigen::Matrix2d lifted(const Eigen::Ref<const Eigen::MatrixXd>& block, const Eigen::Vector3d& a,
                       const Eigen::Vector3d& b) {
  Eigen::Matrix2d out;
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) out(k, l) = quad(block.block<3, 3>(3 * k, 3 * l), a, b);
  }
  return out;
}

CentreDistribution finish(const Point2& mean, const Eigen::Matrix2d& cov, const FrameDomain& dom) {
  CentreDistribution cd;
  cd.mean = mean;
  cd.covariance = 0.5 * (cov + cov.transpose());
  cd.displacement = dom.centre() - mean;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cd.covariance);
  const double floor = eigenvalue_floor(dom);
  cd.nu1 = std::max(es.eigenvalues()[1], floor);
  cd.nu2 = std::max(es.eigenvalues()[0], floor);
  cd.u1 = es.eigenvectors().col(1).normalized();
  cd.u2 = es.eigenvectors().col(0).normalized();
  if (cd.displacement.dot(cd.u1) < 0.0) cd.u1 = -cd.u1;
  if (cd.displacement.dot(cd.u2) < 0.0) cd.u2 = -cd.u2;
  return cd;
}

void require_candidates(const SessionState& s) {
  if (s.candidate_count() == 0) throw ExhaustedError("every candidate pair has been annotated");
}

std::shared_ptr<const ReconstructionBelief> require_belief(const SessionState& s) {
  auto b = s.belief();
  if (!b) throw InvalidArgument("strategy needs a propagated covariance but the session does not track it");
  return b;
}

struct Candidate {
  FramePair pair;
  OverlapBounds bounds;
  double p_ext = 1.0;
  double u = 0.0;
  double upper = 0.0;
};

Candidate bound_candidate(const SessionState& s, const CentreCalculator& calc, FramePair p, ScoreMode mode) {
  Candidate c;
  c.pair = p;
  c.p_ext = mode == ScoreMode::position_only ? 1.0 : s.external().probability(p.i, p.j);
  if (c.p_ext <= 0.0) return c;
  const CentreDistribution cd = calc(p.i, p.j);
  c.u = informativeness(cd.covariance);
  if (mode == ScoreMode::external_only) {
    c.bounds = {1.0, 1.0};
  } else {
    c.bounds = overlap_bounds(cd, s.domain());
  }
  c.upper = expected_reward(c.p_ext, c.bounds.upper, c.u);
  return c;
}

PairScore refine(const SessionState& s, const CentreCalculator& calc, const Candidate& c, ScoreMode mode,
                 bool skip_zero) {
  PairScore ps;
  ps.pair = c.pair;
  ps.p_ext = c.p_ext;
  ps.informativeness = c.u;
  ps.upper_bound = c.upper;
  ps.overlap.lower = c.bounds.lower;
  ps.overlap.upper = c.bounds.upper;
  ps.seed = s.pair_seed(c.pair);
  if (mode != ScoreMode::external_only && !(skip_zero && c.upper <= 0.0) && c.p_ext > 0.0) {
    ps.overlap.mc = overlap_probability_mc(calc(c.pair.i, c.pair.j), s.domain(), s.config().mc_samples, ps.seed);
    ps.overlap.n_samples = s.config().mc_samples;
  }
  const double p_pos = mode == ScoreMode::external_only ? 1.0 : ps.overlap.refined();
  ps.expected_reward = c.p_ext > 0.0 ? expected_reward(c.p_ext, p_pos, c.u) : 0.0;
  if (skip_zero && c.upper <= 0.0) ps.expected_reward = 0.0;
  return ps;
}

void keep_top(std::vector<PairScore>& best, PairScore ps, std::size_t k) {
  auto pos = std::lower_bound(best.begin(), best.end(), ps, ranks_before);
  best.insert(pos, std::move(ps));
  if (best.size() > k) best.pop_back();
}

}  // namespace

bool ranks_before(const PairScore& a, const PairScore& b) {
  if (a.expected_reward != b.expected_reward) return a.expected_reward > b.expected_reward;
  return a.pair < b.pair;
}

double informativeness(const Eigen::Matrix2d& sigma_gamma) {
  return std::sqrt(std::max(sigma_gamma.determinant(), 0.0));
}

double expected_reward(double p_ext, double p_pos, double u) { return p_ext * p_pos * u; }

CentreCalculator::CentreCalculator(const std::vector<AffineTransform2>& transforms,
                                   std::shared_ptr<const ReconstructionBelief> belief, const FrameDomain& domain)
    : transforms_(transforms), belief_(std::move(belief)), domain_(domain) {
  const std::size_t n = transforms.size();
  lin_inv_.resize(n);
  g_.assign(n, Eigen::Matrix2d::Zero());
  const Eigen::Vector3d gt(domain.centre().x(), domain.centre().y(), 1.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (!is_invertible(transforms[k])) {
      lin_inv_[k].setConstant(std::numeric_limits<double>::quiet_NaN());
    } else {
      lin_inv_[k] = transforms[k].linear().inverse();
    }
    if (belief_) {
      const int b = belief_->unknown_block(static_cast<int>(k));
      if (b >= 0) g_[k] = lifted(belief_->covariance.block<6, 6>(6 * b, 6 * b), gt, gt);
    }
  }
}

Point2 CentreCalculator::mean(int i, int j) const {
  const auto& tj = transforms_[static_cast<std::size_t>(j)];
  if (!is_invertible(tj)) throw SingularTransformError("frame transform has a singular linear part");
  return lin_inv_[static_cast<std::size_t>(j)] *
         (apply(transforms_[static_cast<std::size_t>(i)], domain_.centre()) - tj.offset());
}

CentreDistribution CentreCalculator::operator()(int i, int j) const {
  const Point2 m = mean(i, j);
  Eigen::Matrix2d inner = Eigen::Matrix2d::Zero();
  if (belief_) {
    const Eigen::Vector3d gt(domain_.centre().x(), domain_.centre().y(), 1.0);
    const Eigen::Vector3d gm(m.x(), m.y(), 1.0);
    const int bi = belief_->unknown_block(i);
    const int bj = belief_->unknown_block(j);
    inner = g_[static_cast<std::size_t>(i)];
    if (bj >= 0) {
      inner += lifted(belief_->covariance.block<6, 6>(6 * bj, 6 * bj), gm, gm);
      if (bi >= 0) {
        const Eigen::Matrix2d c = lifted(belief_->covariance.block<6, 6>(6 * bi, 6 * bj), gt, gm);
        inner -= c + c.transpose();
      }
    }
  }
  const Eigen::Matrix2d& l = lin_inv_[static_cast<std::size_t>(j)];
  return finish(m, l * inner * l.transpose(), domain_);
}

std::vector<PairScore> suggest_pruned(const SessionState& s, ScoreMode mode, int top_k) {
  require_candidates(s);
  const auto belief = require_belief(s);
  const CentreCalculator calc(s.transforms(), belief, s.domain());
  const std::size_t k = static_cast<std::size_t>(std::max(top_k, 1));

  std::vector<Candidate> heap;
  heap.reserve(s.candidate_count());
  const int n = s.n_frames();
  // Column-major Σ: iterate j outer so that the Σ_ij blocks are read contiguously.
  for (int j = 2; j < n; ++j) {
    for (int i = 0; i + 2 <= j; ++i) {
      if (s.is_annotated({i, j})) continue;
      heap.push_back(bound_candidate(s, calc, {i, j}, mode));
    }
  }
  auto heap_less = [](const Candidate& a, const Candidate& b) {
    if (a.upper != b.upper) return a.upper < b.upper;
    return b.pair < a.pair;
  };
  std::make_heap(heap.begin(), heap.end(), heap_less);

  std::vector<PairScore> best;
  while (!heap.empty()) {
    const Candidate& top = heap.front();
    if (best.size() == k && top.upper < best.back().expected_reward) break;
    if (best.size() == k && top.upper == best.back().expected_reward && best.back().pair < top.pair) {
      // Equal bound cannot beat the k-th entry on reward, and loses the tie-break.
      std::pop_heap(heap.begin(), heap.end(), heap_less);
      heap.pop_back();
      continue;
    }
    PairScore ps = refine(s, calc, top, mode, true);
    std::pop_heap(heap.begin(), heap.end(), heap_less);
    heap.pop_back();
    keep_top(best, std::move(ps), k);
  }
  return best;
}

std::vector<PairScore> suggest_exhaustive(const SessionState& s, ScoreMode mode, int top_k) {
  require_candidates(s);
  const auto belief = require_belief(s);
  const CentreCalculator calc(s.transforms(), belief, s.domain());
  const std::size_t k = static_cast<std::size_t>(std::max(top_k, 1));
  std::vector<PairScore> best;
  for (const FramePair& p : s.candidates()) {
    keep_top(best, refine(s, calc, bound_candidate(s, calc, p, mode), mode, false), k);
  }
  return best;
}

std::vector<PairScore> suggest_next(const SessionState& s, int top_k) {
  return suggest_pruned(s, ScoreMode::ours, top_k);
}

std::vector<PairScore> ablation_suggest(const SessionState& s, AblationMode mode, int top_k) {
  return suggest_pruned(s, mode == AblationMode::external_only ? ScoreMode::external_only : ScoreMode::position_only,
                        top_k);
}

std::vector<PairScore> suggest(const SessionState& s, int top_k) {
  switch (s.strategy()) {
    case Strategy::ours:
      return suggest_next(s, top_k);
    case Strategy::external_only:
      return ablation_suggest(s, AblationMode::external_only, top_k);
    case Strategy::position_only:
      return ablation_suggest(s, AblationMode::position_only, top_k);
    case Strategy::elibol:
      return elibol_suggest(s, top_k);
    case Strategy::sawhney:
      return sawhney_suggest(s, top_k);
  }
  throw InvalidArgument("unknown strategy");
}

}  // namespace mosaic
