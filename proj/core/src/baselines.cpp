#include "mosaic/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include <Eigen/LU>

#include "mosaic/errors.hpp"

namespace mosaic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_candidates(const SessionState& s) {
  if (s.candidate_count() == 0) throw ExhaustedError("every candidate pair has been annotated");
}

std::shared_ptr<const ReconstructionBelief> require_belief(const SessionState& s) {
  auto b = s.belief();
  if (!b) throw InvalidArgument("strategy needs a propagated covariance but the session does not track it");
  return b;
}

void keep_top(std::vector<PairScore>& best, PairScore ps, std::size_t k) {
  auto pos = std::lower_bound(best.begin(), best.end(), ps, ranks_before);
  best.insert(pos, std::move(ps));
  if (best.size() > k) best.pop_back();
}

struct ElibolCandidate {
  FramePair pair;
  OverlapBounds bounds;
  double informativeness = 0.0;
  double upper = 0.0;
};

std::optional<ElibolCandidate> elibol_bound(const SessionState& s, const CentreCalculator& calc, FramePair p,
                                            bool prefilter) {
  if (prefilter) {
    const double reach = std::sqrt(2.0) * square_half_lengths(s.domain()).outer;
    if ((s.domain().centre() - calc.mean(p.i, p.j)).norm() >= reach) return std::nullopt;
  }
  const CentreDistribution cd = calc(p.i, p.j);
  const OverlapBounds b = overlap_bounds(cd, s.domain());
  if (b.upper < kElibolOverlapThreshold) return std::nullopt;
  const double det = cd.covariance.determinant();
  const double info = det > 0.0 ? std::max(0.0, std::log(det)) : 0.0;
  return ElibolCandidate{p, b, info, expected_reward(1.0, b.upper, info)};
}

PairScore elibol_score(const SessionState& s, const CentreCalculator& calc, const ElibolCandidate& c) {
  PairScore ps;
  ps.pair = c.pair;
  ps.seed = s.pair_seed(c.pair);
  ps.overlap.lower = c.bounds.lower;
  ps.overlap.upper = c.bounds.upper;
  ps.overlap.mc = overlap_probability_mc(calc(c.pair.i, c.pair.j), s.domain(), s.config().mc_samples, ps.seed);
  ps.overlap.n_samples = s.config().mc_samples;
  ps.informativeness = c.informativeness;
  ps.expected_reward = expected_reward(1.0, ps.overlap.refined(), c.informativeness);
  ps.upper_bound = c.upper;
  return ps;
}

// Monte Carlo only runs while a candidate's bound can still reach the current top-k.
std::vector<PairScore> elibol_impl(const SessionState& s, int top_k, bool prefilter) {
  require_candidates(s);
  const CentreCalculator calc(s.transforms(), require_belief(s), s.domain());
  const std::size_t k = static_cast<std::size_t>(std::max(top_k, 1));
  std::vector<ElibolCandidate> pool;
  const int n = s.n_frames();
  for (int j = 2; j < n; ++j) {
    for (int i = 0; i + 2 <= j; ++i) {
      if (s.is_annotated({i, j})) continue;
      if (auto c = elibol_bound(s, calc, {i, j}, prefilter)) pool.push_back(*c);
    }
  }
  std::sort(pool.begin(), pool.end(), [](const ElibolCandidate& a, const ElibolCandidate& b) {
    return a.upper != b.upper ? a.upper > b.upper : a.pair < b.pair;
  });
  std::vector<PairScore> best;
  for (const auto& c : pool) {
    if (best.size() == k && c.upper < best.back().expected_reward) break;
    keep_top(best, elibol_score(s, calc, c), k);
  }
  return best;
}

PairScore sawhney_score(const SessionState& s, FramePair p, double arc, double path) {
  PairScore ps;
  ps.pair = p;
  ps.seed = s.pair_seed(p);
  ps.p_ext = 1.0;
  ps.overlap.lower = ps.overlap.upper = std::max(0.0, 1.0 - arc);
  ps.informativeness = arc == 0.0 ? (path > 0.0 ? kInf : 0.0) : std::max(0.0, path / arc - 1.0);
  ps.expected_reward = sawhney_reward(arc, path);
  ps.upper_bound = ps.expected_reward;
  return ps;
}

}  // namespace

std::vector<PairScore> elibol_suggest(const SessionState& s, int top_k) { return elibol_impl(s, top_k, true); }

std::vector<PairScore> elibol_suggest_exhaustive(const SessionState& s, int top_k) {
  return elibol_impl(s, top_k, false);
}

WarpedFrame warp_frame(const AffineTransform2& t, const FrameDomain& dom) {
  WarpedFrame f;
  f.centre = apply(t, dom.centre());
  const Point2 corners[4] = {{0.0, 0.0}, {dom.width, 0.0}, {dom.width, dom.height}, {0.0, dom.height}};
  for (const auto& c : corners) f.radius += (apply(t, c) - f.centre).norm();
  f.radius *= 0.25;
  return f;
}

double sawhney_arc_length(const WarpedFrame& a, const WarpedFrame& b) {
  const double den = 2.0 * std::min(a.radius, b.radius);
  if (!(den > 0.0)) throw InvalidArgument("degenerate warped frame with zero radius");
  const double num = std::max(0.0, (a.centre - b.centre).norm() - std::abs(a.radius - b.radius));
  return num / den;
}

double sawhney_arc_length(const std::vector<AffineTransform2>& recon, const FrameDomain& dom, int i, int j) {
  return sawhney_arc_length(warp_frame(recon.at(static_cast<std::size_t>(i)), dom),
                            warp_frame(recon.at(static_cast<std::size_t>(j)), dom));
}

OverlapGraph build_overlap_graph(const std::vector<AffineTransform2>& recon, const std::vector<FramePair>& positives,
                                 const FrameDomain& dom) {
  OverlapGraph g;
  g.frames.reserve(recon.size());
  for (const auto& t : recon) g.frames.push_back(warp_frame(t, dom));
  g.adjacency.resize(recon.size());
  for (const auto& p : positives) {
    const double w = sawhney_arc_length(g.frames[static_cast<std::size_t>(p.i)], g.frames[static_cast<std::size_t>(p.j)]);
    g.adjacency[static_cast<std::size_t>(p.i)].push_back({p.j, w});
    g.adjacency[static_cast<std::size_t>(p.j)].push_back({p.i, w});
  }
  return g;
}

std::vector<double> shortest_path_lengths(const OverlapGraph& g, int source) {
  std::vector<double> dist(static_cast<std::size_t>(g.size()), kInf);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  dist[static_cast<std::size_t>(source)] = 0.0;
  q.push({0.0, source});
  while (!q.empty()) {
    const auto [d, u] = q.top();
    q.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& e : g.adjacency[static_cast<std::size_t>(u)]) {
      const double nd = d + e.weight;
      if (nd < dist[static_cast<std::size_t>(e.to)]) {
        dist[static_cast<std::size_t>(e.to)] = nd;
        q.push({nd, e.to});
      }
    }
  }
  return dist;
}

double sawhney_reward(double arc, double path) {
  if (arc >= 1.0) return 0.0;
  if (arc == 0.0) return path > 0.0 ? kInf : 0.0;
  return (1.0 - arc) * std::max(0.0, path / arc - 1.0);
}

std::vector<PairScore> sawhney_suggest(const SessionState& s, const OverlapGraph& g, int top_k) {
  require_candidates(s);
  const std::size_t k = static_cast<std::size_t>(std::max(top_k, 1));
  const int n = s.n_frames();

  std::vector<int> order(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) order[static_cast<std::size_t>(v)] = v;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return g.frames[static_cast<std::size_t>(a)].centre.x() < g.frames[static_cast<std::size_t>(b)].centre.x();
  });
  double r_max = 0.0;
  for (const auto& f : g.frames) r_max = std::max(r_max, f.radius);

  // Pairs with arc < 1 have centres closer than R_i + R_j <= 2 R_max.
  std::map<int, std::vector<std::pair<int, double>>> near;
  for (std::size_t a = 0; a < order.size(); ++a) {
    const int u = order[a];
    const double xu = g.frames[static_cast<std::size_t>(u)].centre.x();
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      const int w = order[b];
      if (g.frames[static_cast<std::size_t>(w)].centre.x() - xu >= 2.0 * r_max) break;
      const FramePair p = FramePair{u, w}.canonical();
      if (!s.is_candidate(p)) continue;
      const double arc = sawhney_arc_length(g.frames[static_cast<std::size_t>(p.i)], g.frames[static_cast<std::size_t>(p.j)]);
      if (arc < 1.0) near[p.i].push_back({p.j, arc});
    }
  }

  std::vector<PairScore> best;
  for (const auto& [i, list] : near) {
    const std::vector<double> dist = shortest_path_lengths(g, i);
    for (const auto& [j, arc] : list) {
      PairScore ps = sawhney_score(s, {i, j}, arc, dist[static_cast<std::size_t>(j)]);
      if (ps.expected_reward > 0.0) keep_top(best, std::move(ps), k);
    }
  }
  if (best.size() < k) {
    std::vector<PairScore> positive = best;
    for (int i = 0; i < n && best.size() < k; ++i) {
      for (int j = i + 2; j < n && best.size() < k; ++j) {
        const FramePair p{i, j};
        if (!s.is_candidate(p)) continue;
        const bool taken = std::any_of(positive.begin(), positive.end(), [&](const PairScore& q) { return q.pair == p; });
        if (taken) continue;
        const double arc = sawhney_arc_length(g.frames[static_cast<std::size_t>(i)], g.frames[static_cast<std::size_t>(j)]);
        PairScore ps = sawhney_score(s, p, arc, shortest_path_lengths(g, i)[static_cast<std::size_t>(j)]);
        best.push_back(std::move(ps));
      }
    }
  }
  return best;
}

std::vector<PairScore> sawhney_suggest(const SessionState& s, int top_k) {
  return sawhney_suggest(s, build_overlap_graph(s.transforms(), s.positives(), s.domain()), top_k);
}

std::vector<PairScore> sawhney_suggest_naive(const SessionState& s, const OverlapGraph& g, int top_k) {
  require_candidates(s);
  const std::size_t k = static_cast<std::size_t>(std::max(top_k, 1));
  std::vector<PairScore> best;
  for (int i = 0; i < s.n_frames(); ++i) {
    const std::vector<double> dist = shortest_path_lengths(g, i);
    for (int j = i + 2; j < s.n_frames(); ++j) {
      if (!s.is_candidate({i, j})) continue;
      const double arc = sawhney_arc_length(g.frames[static_cast<std::size_t>(i)], g.frames[static_cast<std::size_t>(j)]);
      keep_top(best, sawhney_score(s, {i, j}, arc, dist[static_cast<std::size_t>(j)]), k);
    }
  }
  return best;
}

}  // namespace mosaic
