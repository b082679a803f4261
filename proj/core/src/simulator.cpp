#include "mosaic/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <spdlog/spdlog.h>

#include "mosaic/errors.hpp"
#include "mosaic/random.hpp"

namespace mosaic {

namespace {

void check_pair(const TrajectoryTruth& truth, FramePair p) {
  if (p.i < 0 || p.j < 0 || p.i >= truth.size() || p.j >= truth.size() || p.i == p.j) {
    throw InvalidArgument("pair out of range for the trajectory");
  }
}

std::vector<Point2> rectangle(const FrameDomain& dom) {
  return {{0.0, 0.0}, {dom.width, 0.0}, {dom.width, dom.height}, {0.0, dom.height}};
}

// Keep the part of a polygon on the side where f(p) >= 0 (f affine).
template <class F>
std::vector<Point2> clip(const std::vector<Point2>& poly, F f) {
  std::vector<Point2> out;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Point2& a = poly[k];
    const Point2& b = poly[(k + 1) % poly.size()];
    const double fa = f(a);
    const double fb = f(b);
    if (fa >= 0.0) out.push_back(a);
    if ((fa >= 0.0) != (fb >= 0.0)) out.push_back(a + (b - a) * (fa / (fa - fb)));
  }
  return out;
}

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

bool inside_convex(const std::vector<Point2>& poly, const Point2& p) {
  double sign = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Point2& a = poly[k];
    const Point2& b = poly[(k + 1) % poly.size()];
    const double c = cross(b - a, p - a);
    if (std::abs(c) < 1e-12) continue;
    if (sign == 0.0) sign = c;
    if (c * sign < 0.0) return false;
  }
  return true;
}

bool non_collinear(const std::vector<Point2>& pts) {
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      for (std::size_t c = b + 1; c < pts.size(); ++c) {
        if (std::abs(cross(pts[b] - pts[a], pts[c] - pts[a])) > 1e-9) return true;
      }
    }
  }
  return false;
}

AffineTransform2 relative(const TrajectoryTruth& truth, FramePair p) {
  return compose(invert(truth.transforms[static_cast<std::size_t>(p.j)]), truth.transforms[static_cast<std::size_t>(p.i)]);
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

bool TrajectoryTruth::translation_only() const {
  return std::all_of(transforms.begin(), transforms.end(), [](const AffineTransform2& t) { return t.is_translation(); });
}

TrajectoryTruth generate_raster(int n, double dx, double dy, const FrameDomain& dom) {
  if (n < 2 || n % 2 != 0) throw InvalidArgument("raster trajectory needs an even number of frames >= 2");
  if (!(dx > 0.0) || !(dy > 0.0)) throw InvalidArgument("raster steps must be positive");
  TrajectoryTruth t;
  t.domain = dom;
  for (int k = 1; k <= n; ++k) {
    if (k <= n / 2) {
      t.positions.emplace_back(k * dx, 0.0);
    } else {
      t.positions.emplace_back((n - k + 1) * dx, dy);
    }
  }
  for (const auto& p : t.positions) {
    const Point2 d = p - t.positions.front();
    t.transforms.push_back(AffineTransform2::translation(d.x(), d.y()));
  }
  return t;
}

TrajectoryTruth generate_raster(int n, const FrameDomain& dom) {
  return generate_raster(n, dom.width / 3.0, dom.height / 3.0, dom);
}

TrajectoryTruth generate_circle(int n, double radius, const FrameDomain& dom) {
  if (n < 2) throw InvalidArgument("circle trajectory needs at least 2 frames");
  if (!(radius > 0.0)) throw InvalidArgument("circle radius must be positive");
  TrajectoryTruth t;
  t.domain = dom;
  Eigen::MatrixXd sig(n, 2);
  for (int k = 1; k <= n; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n;
    t.positions.emplace_back(radius * std::cos(a), radius * std::sin(a));
    sig(k - 1, 0) = std::cos(2.0 * a);
    sig(k - 1, 1) = std::sin(2.0 * a);
  }
  for (const auto& p : t.positions) {
    const Point2 d = p - t.positions.front();
    t.transforms.push_back(AffineTransform2::translation(d.x(), d.y()));
  }
  t.signatures = SignatureSet::from_matrix(sig, true);
  return t;
}

TrajectoryTruth truth_from_transforms(std::vector<AffineTransform2> transforms, const FrameDomain& dom) {
  if (transforms.empty()) throw InvalidArgument("trajectory needs at least one frame");
  const AffineTransform2 gauge = invert(transforms.front());
  TrajectoryTruth t;
  t.domain = dom;
  for (auto& x : transforms) {
    x = compose(gauge, x);
    t.positions.push_back(apply(x, dom.centre()));
  }
  t.transforms = std::move(transforms);
  t.transforms.front() = AffineTransform2::identity();
  return t;
}

bool truly_overlaps(const TrajectoryTruth& truth, FramePair p) {
  check_pair(truth, p);
  return truth.domain.contains(apply(relative(truth, p), truth.domain.centre()));
}

double ideal_external_probability(const TrajectoryTruth& truth, int i, int j) {
  check_pair(truth, {i, j});
  const auto& ti = truth.transforms[static_cast<std::size_t>(i)];
  const auto& tj = truth.transforms[static_cast<std::size_t>(j)];
  if (!ti.is_translation() || !tj.is_translation()) {
    throw UnsupportedError("ideal external model needs translation-only truth");
  }
  const Eigen::Vector2d d = ti.offset() - tj.offset();
  const double ox = std::max(0.0, truth.domain.width - std::abs(d.x()));
  const double oy = std::max(0.0, truth.domain.height - std::abs(d.y()));
  return ox * oy / truth.domain.area();
}

IdealExternalOverlap::IdealExternalOverlap(std::shared_ptr<const TrajectoryTruth> truth) : truth_(std::move(truth)) {
  if (!truth_ || !truth_->translation_only()) {
    throw UnsupportedError("ideal external model needs translation-only truth");
  }
}

std::vector<Point2> overlap_polygon(const TrajectoryTruth& truth, FramePair p) {
  check_pair(truth, p);
  const AffineTransform2 t = relative(truth, p);
  std::vector<Point2> poly;
  for (const auto& c : rectangle(truth.domain)) poly.push_back(apply(t, c));
  const double w = truth.domain.width;
  const double h = truth.domain.height;
  poly = clip(poly, [](const Point2& q) { return q.x(); });
  poly = clip(poly, [w](const Point2& q) { return w - q.x(); });
  poly = clip(poly, [](const Point2& q) { return q.y(); });
  poly = clip(poly, [h](const Point2& q) { return h - q.y(); });
  return poly;
}

std::vector<Point2> grid_landmarks(const std::vector<Point2>& polygon, int n) {
  if (n < 1 || polygon.size() < 3) return {};
  Eigen::Vector2d lo = polygon.front();
  Eigen::Vector2d hi = polygon.front();
  for (const auto& q : polygon) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  const Eigen::Vector2d size = hi - lo;
  if (size.minCoeff() <= 1e-9) return {};
  const int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  std::vector<Point2> pts;
  for (int r = 0; r < k && static_cast<int>(pts.size()) < n; ++r) {
    for (int c = 0; c < k && static_cast<int>(pts.size()) < n; ++c) {
      const double fx = k == 1 ? 0.5 : 0.1 + 0.8 * c / (k - 1);
      const double fy = k == 1 ? 0.5 : 0.1 + 0.8 * r / (k - 1);
      const Point2 q(lo.x() + fx * size.x(), lo.y() + fy * size.y());
      if (inside_convex(polygon, q)) pts.push_back(q);
    }
  }
  if (static_cast<int>(pts.size()) < n) return {};
  if (n >= 3 && !non_collinear(pts)) return {};
  return pts;
}

std::optional<CorrespondenceSet> true_correspondence(const TrajectoryTruth& truth, FramePair p, int n_landmarks) {
  if (!truly_overlaps(truth, p)) return std::nullopt;
  std::vector<Point2> pts_j = grid_landmarks(overlap_polygon(truth, p), n_landmarks);
  if (pts_j.empty()) return std::nullopt;
  const AffineTransform2 back = invert(relative(truth, p));
  CorrespondenceSet c;
  c.pair = p;
  c.sigma = 0.0;
  for (const auto& q : pts_j) c.points_i.push_back(apply(back, q));
  c.points_j = std::move(pts_j);
  return c;
}

Feedback simulated_agent(const TrajectoryTruth& truth, FramePair p, int n_landmarks, double sigma,
                         std::uint64_t seed) {
  check_pair(truth, p);
  if (!(sigma >= 0.0)) throw InvalidArgument("agent noise must be nonnegative");
  if (!truly_overlaps(truth, p)) return Feedback::no_overlap();
  auto c = true_correspondence(truth, p, n_landmarks);
  if (!c) {
    spdlog::warn("overlap of frames {} and {} too small for {} landmarks; answering no overlap", p.i + 1, p.j + 1,
                 n_landmarks);
    return Feedback::no_overlap();
  }
  c->sigma = sigma;
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& q : c->points_i) {
      const double ex = noise(rng);
      const double ey = noise(rng);
      q += Eigen::Vector2d(ex, ey);
    }
  }
  return Feedback::with(std::move(*c));
}

SimulatedAgent::SimulatedAgent(std::shared_ptr<const TrajectoryTruth> truth, int n_landmarks, double sigma,
                               std::uint64_t seed)
    : truth_(std::move(truth)), n_landmarks_(n_landmarks), sigma_(sigma), seed_(seed) {}

Feedback SimulatedAgent::answer(FramePair p) {
  return simulated_agent(*truth_, p, n_landmarks_, sigma_,
                         derive_seed({seed_, static_cast<std::uint64_t>(p.i + 1), static_cast<std::uint64_t>(p.j + 1)}));
}

ReplayAgent::ReplayAgent(std::vector<CorrespondenceSet> known) {
  for (auto& c : known) known_[c.pair.canonical()] = std::move(c);
}

Feedback ReplayAgent::answer(FramePair p) {
  auto it = known_.find(p.canonical());
  if (it == known_.end()) return Feedback::no_overlap();
  return Feedback::with(it->second);
}

std::vector<CorrespondenceSet> initial_chain(Agent& agent, int n_frames) {
  std::vector<CorrespondenceSet> out;
  out.reserve(static_cast<std::size_t>(std::max(n_frames - 1, 0)));
  for (int n = 0; n + 1 < n_frames; ++n) {
    Feedback f = agent.answer({n, n + 1});
    if (!f.overlap) {
      throw InvalidArgument("consecutive frames " + std::to_string(n + 1) + " and " + std::to_string(n + 2) +
                            " do not overlap");
    }
    out.push_back(std::move(f.correspondences));
  }
  return out;
}

ImageRaster procedural_texture(int width, int height, std::uint64_t seed) {
  if (width < 1 || height < 1) throw InvalidArgument("texture size must be positive");
  ImageRaster img;
  img.width = width;
  img.height = height;
  img.channels = 3;
  img.pixels.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, 0);
  const int octaves = 4;
  std::vector<double> acc(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3, 0.0);
  for (int ch = 0; ch < 3; ++ch) {
    double amplitude = 1.0;
    double total = 0.0;
    for (int o = 0; o < octaves; ++o) {
      const int cell = std::max(2, 64 >> o);
      const int gw = width / cell + 2;
      const int gh = height / cell + 2;
      std::mt19937_64 rng(derive_seed({seed, static_cast<std::uint64_t>(ch), static_cast<std::uint64_t>(o)}));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> grid(static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh));
      for (auto& g : grid) g = u(rng);
      for (int y = 0; y < height; ++y) {
        const int gy = y / cell;
        const double ty = smoothstep(static_cast<double>(y % cell) / cell);
        for (int x = 0; x < width; ++x) {
          const int gx = x / cell;
          const double tx = smoothstep(static_cast<double>(x % cell) / cell);
          auto g = [&](int a, int b) { return grid[static_cast<std::size_t>(b) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(a)]; };
          const double v = (1 - ty) * ((1 - tx) * g(gx, gy) + tx * g(gx + 1, gy)) +
                           ty * ((1 - tx) * g(gx, gy + 1) + tx * g(gx + 1, gy + 1));
          acc[(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3 +
              static_cast<std::size_t>(ch)] += amplitude * v;
        }
      }
      total += amplitude;
      amplitude *= 0.5;
    }
    for (std::size_t k = static_cast<std::size_t>(ch); k < acc.size(); k += 3) {
      img.pixels[k] = static_cast<std::uint8_t>(std::clamp(std::lround(255.0 * acc[k] / total), 0L, 255L));
    }
  }
  return img;
}

TextureLayout texture_layout(const TrajectoryTruth& truth, int margin) {
  if (!truth.translation_only()) throw UnsupportedError("texture crops need translation-only truth");
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
  for (const auto& t : truth.transforms) {
    min_x = std::min(min_x, std::round(t[2]));
    min_y = std::min(min_y, std::round(t[5]));
    max_x = std::max(max_x, std::round(t[2]));
    max_y = std::max(max_y, std::round(t[5]));
  }
  TextureLayout l;
  l.origin_x = static_cast<int>(-min_x) + margin;
  l.origin_y = static_cast<int>(-min_y) + margin;
  l.width = static_cast<int>(max_x - min_x + std::ceil(truth.domain.width)) + 2 * margin;
  l.height = static_cast<int>(max_y - min_y + std::ceil(truth.domain.height)) + 2 * margin;
  return l;
}

std::vector<ImageRaster> texture_crop_sequence(const ImageRaster& source, const TrajectoryTruth& truth,
                                               const TextureLayout& layout) {
  if (!truth.translation_only()) throw UnsupportedError("texture crops need translation-only truth");
  const int w = static_cast<int>(std::lround(truth.domain.width));
  const int h = static_cast<int>(std::lround(truth.domain.height));
  std::vector<ImageRaster> crops;
  crops.reserve(truth.transforms.size());
  for (std::size_t n = 0; n < truth.transforms.size(); ++n) {
    const int x0 = layout.origin_x + static_cast<int>(std::lround(truth.transforms[n][2]));
    const int y0 = layout.origin_y + static_cast<int>(std::lround(truth.transforms[n][5]));
    if (x0 < 0 || y0 < 0 || x0 + w > source.width || y0 + h > source.height) {
      throw InvalidArgument("frame " + std::to_string(n + 1) + " exceeds the texture bounds");
    }
    ImageRaster crop;
    crop.width = w;
    crop.height = h;
    crop.channels = source.channels;
    crop.pixels.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * static_cast<std::size_t>(source.channels));
    const std::size_t row = static_cast<std::size_t>(w) * static_cast<std::size_t>(source.channels);
    for (int y = 0; y < h; ++y) {
      const auto* src = source.pixels.data() +
                        (static_cast<std::size_t>(y0 + y) * static_cast<std::size_t>(source.width) + static_cast<std::size_t>(x0)) *
                            static_cast<std::size_t>(source.channels);
      std::copy(src, src + row, crop.pixels.data() + static_cast<std::size_t>(y) * row);
    }
    crops.push_back(std::move(crop));
  }
  return crops;
}

}  // namespace mosaic
