#include "mosaic/bundle_adjust.hpp"

#include <cmath>
#include <queue>
#include <sstream>
#include <string>

#include "mosaic/errors.hpp"

namespace mosaic {

namespace {

void check_frame(int n, int n_frames) {
  if (n < 0 || n >= n_frames) {
    throw InvalidArgument("frame index " + std::to_string(n + 1) + " out of range 1.." + std::to_string(n_frames));
  }
}

Eigen::Matrix<double, 6, Eigen::Dynamic> band(const std::vector<Point2>& pts, double sign) {
  const int l = static_cast<int>(pts.size());
  Eigen::Matrix<double, 6, Eigen::Dynamic> a = Eigen::Matrix<double, 6, Eigen::Dynamic>::Zero(6, 2 * l);
  for (int k = 0; k < 2; ++k) {
    for (int c = 0; c < l; ++c) {
      const Point2& p = pts[static_cast<std::size_t>(c)];
      a(3 * k + 0, k * l + c) = sign * p.x();
      a(3 * k + 1, k * l + c) = sign * p.y();
      a(3 * k + 2, k * l + c) = sign;
    }
  }
  return a;
}

std::string frame_list(const std::vector<int>& frames) {
  std::ostringstream os;
  for (std::size_t k = 0; k < frames.size(); ++k) os << (k ? ", " : "") << frames[k] + 1;
  return os.str();
}

}  // namespace

void CorrespondenceSet::validate(int n_frames) const {
  check_frame(pair.i, n_frames);
  check_frame(pair.j, n_frames);
  if (pair.i == pair.j) throw InvalidArgument("correspondence pair needs two distinct frames");
  if (points_i.size() != points_j.size()) {
    throw InvalidArgument("correspondence point lists differ in length");
  }
  if (points_j.size() < static_cast<std::size_t>(kMinLandmarks)) {
    throw InvalidArgument("correspondence needs at least 3 landmark pairs, got " + std::to_string(points_j.size()));
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("correspondence sigma must be nonnegative");
  for (std::size_t k = 0; k < points_j.size(); ++k) {
    if (!points_j[k].allFinite() || !points_i[k].allFinite()) {
      throw InvalidArgument("correspondence contains a non-finite coordinate");
    }
  }
}

Eigen::VectorXd vec_row(const std::vector<Point2>& points) {
  const Eigen::Index l = static_cast<Eigen::Index>(points.size());
  Eigen::VectorXd v(2 * l);
  for (Eigen::Index c = 0; c < l; ++c) {
    v[c] = points[static_cast<std::size_t>(c)].x();
    v[l + c] = points[static_cast<std::size_t>(c)].y();
  }
  return v;
}

Eigen::MatrixXd PairBlocks::dense(int n_unknowns) const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_unknowns, b.size());
  if (band_j >= 0) a.middleRows(6 * band_j, 6) += a_j;
  if (band_i >= 0) a.middleRows(6 * band_i, 6) += a_i;
  return a;
}

PairBlocks assemble_pair_blocks(const CorrespondenceSet& c, int n_frames, int reference) {
  check_frame(c.pair.i, n_frames);
  check_frame(c.pair.j, n_frames);
  check_frame(reference, n_frames);
  if (c.pair.i == c.pair.j) throw InvalidArgument("correspondence pair needs two distinct frames");
  if (c.points_i.size() != c.points_j.size() || c.points_j.empty()) {
    throw InvalidArgument("correspondence point lists must be nonempty and equally long");
  }
  auto unknown = [&](int n) { return n == reference ? -1 : (n > reference ? n - 1 : n); };

  PairBlocks pb;
  pb.band_j = unknown(c.pair.j);
  pb.band_i = unknown(c.pair.i);
  pb.a_j = band(c.points_j, 1.0);
  pb.a_i = band(c.points_i, -1.0);
  pb.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * c.size()));
  if (c.pair.i == reference) pb.b += vec_row(c.points_i);
  if (c.pair.j == reference) pb.b -= vec_row(c.points_j);
  return pb;
}

BundleSystem::BundleSystem(int n_frames, int reference)
    : n_frames_(n_frames), reference_(reference) {
  if (n_frames < 1) throw InvalidArgument("bundle adjustment needs at least one frame");
  check_frame(reference, n_frames);
  s_ = BlockSymmetricMatrix(n_frames - 1);
  v_ = Eigen::VectorXd::Zero(n_unknowns());
  theta_ = Eigen::VectorXd::Zero(n_unknowns());
  for (int b = 0; b < n_frames - 1; ++b) theta_.segment<6>(6 * b) = AffineTransform2::identity().vec();
}

void BundleSystem::accumulate(const CorrespondenceSet& c, double sign) {
  const PairBlocks pb = assemble_pair_blocks(c, n_frames_, reference_);
  if (pb.band_j >= 0) {
    s_.add(pb.band_j, pb.band_j, sign * (pb.a_j * pb.a_j.transpose()));
    v_.segment<6>(6 * pb.band_j) += sign * (pb.a_j * pb.b);
  }
  if (pb.band_i >= 0) {
    s_.add(pb.band_i, pb.band_i, sign * (pb.a_i * pb.a_i.transpose()));
    v_.segment<6>(6 * pb.band_i) += sign * (pb.a_i * pb.b);
  }
  if (pb.band_j >= 0 && pb.band_i >= 0) {
    s_.add(pb.band_j, pb.band_i, sign * (pb.a_j * pb.a_i.transpose()));
  }
}

void BundleSystem::stage(CorrespondenceSet c) {
  c.validate(n_frames_);
  const FramePair key = c.pair.canonical();
  accumulate(c, 1.0);
  if (auto it = index_.find(key); it != index_.end()) {
    accumulate(sets_[it->second], -1.0);
    sets_[it->second] = std::move(c);
  } else {
    index_.emplace(key, sets_.size());
    sets_.push_back(std::move(c));
  }
  solved_ = false;
}

void BundleSystem::refresh() {
  try {
    factor_ = BlockCholesky(s_);
  } catch (const FactorizationError& e) {
    std::vector<int> frames = frames_disconnected_from_reference();
    if (frames.empty()) frames.push_back(frame_of_block(e.block()));
    solved_ = false;
    const std::string what = "under-determined bundle adjustment (" + std::string(e.what()) +
                             "); insufficiently constrained frames: " + frame_list(frames);
    throw UnderDeterminedError(what, std::move(frames));
  }
  theta_ = factor_.solve(v_);
  solved_ = true;
}

void BundleSystem::add_correspondence(CorrespondenceSet c) {
  c.validate(n_frames_);
  const BlockSymmetricMatrix s_before = s_;
  const Eigen::VectorXd v_before = v_;
  const auto sets_before = sets_;
  const auto index_before = index_;
  const bool solved_before = solved_;
  BlockCholesky factor_before = factor_;
  stage(std::move(c));
  try {
    refresh();
  } catch (...) {
    s_ = s_before;
    v_ = v_before;
    sets_ = sets_before;
    index_ = index_before;
    factor_ = std::move(factor_before);
    solved_ = solved_before;
    throw;
  }
}

AffineTransform2 BundleSystem::transform(int n) const {
  check_frame(n, n_frames_);
  const int b = unknown_block(n);
  if (b < 0) return AffineTransform2::identity();
  return AffineTransform2::from_vec(theta_.segment<6>(6 * b));
}

std::vector<AffineTransform2> BundleSystem::transforms() const {
  std::vector<AffineTransform2> out;
  out.reserve(static_cast<std::size_t>(n_frames_));
  for (int n = 0; n < n_frames_; ++n) out.push_back(transform(n));
  return out;
}

const CorrespondenceSet* BundleSystem::find(FramePair p) const {
  auto it = index_.find(p.canonical());
  return it == index_.end() ? nullptr : &sets_[it->second];
}

double BundleSystem::objective(const Eigen::VectorXd& theta) const {
  double total = 0.0;
  for (const auto& c : sets_) {
    const PairBlocks pb = assemble_pair_blocks(c, n_frames_, reference_);
    Eigen::VectorXd r = -pb.b;
    if (pb.band_j >= 0) r.noalias() += pb.a_j.transpose() * theta.segment<6>(6 * pb.band_j);
    if (pb.band_i >= 0) r.noalias() += pb.a_i.transpose() * theta.segment<6>(6 * pb.band_i);
    total += r.squaredNorm();
  }
  return total;
}

double BundleSystem::objective(const std::vector<AffineTransform2>& transforms) const {
  double total = 0.0;
  for (const auto& c : sets_) {
    const auto& ti = transforms[static_cast<std::size_t>(c.pair.i)];
    const auto& tj = transforms[static_cast<std::size_t>(c.pair.j)];
    for (std::size_t l = 0; l < c.size(); ++l) {
      total += (apply(tj, c.points_j[l]) - apply(ti, c.points_i[l])).squaredNorm();
    }
  }
  return total;
}

std::vector<int> BundleSystem::frames_disconnected_from_reference() const {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n_frames_));
  for (const auto& c : sets_) {
    adj[static_cast<std::size_t>(c.pair.i)].push_back(c.pair.j);
    adj[static_cast<std::size_t>(c.pair.j)].push_back(c.pair.i);
  }
  std::vector<char> seen(static_cast<std::size_t>(n_frames_), 0);
  std::queue<int> q;
  q.push(reference_);
  seen[static_cast<std::size_t>(reference_)] = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int w : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = 1;
        q.push(w);
      }
    }
  }
  std::vector<int> out;
  for (int n = 0; n < n_frames_; ++n) {
    if (!seen[static_cast<std::size_t>(n)]) out.push_back(n);
  }
  return out;
}

std::vector<AffineTransform2> solve(BundleSystem& sys) {
  if (!sys.solved()) sys.refresh();
  return sys.transforms();
}

}  // namespace mosaic
