#include "mosaic/block_cholesky.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>

namespace mosaic {

BlockSymmetricMatrix::BlockSymmetricMatrix(int n_blocks)
    : diag_(static_cast<std::size_t>(n_blocks), Block6::Zero()),
      lower_(static_cast<std::size_t>(n_blocks)) {}

void BlockSymmetricMatrix::add(int r, int c, const Block6& b) {
  if (r == c) {
    diag_[static_cast<std::size_t>(r)] += b;
  } else if (r > c) {
    auto [it, inserted] = lower_[static_cast<std::size_t>(c)].try_emplace(r, b);
    if (!inserted) it->second += b;
  } else {
    auto [it, inserted] = lower_[static_cast<std::size_t>(r)].try_emplace(c, b.transpose());
    if (!inserted) it->second += b.transpose();
  }
}

Block6 BlockSymmetricMatrix::block(int r, int c) const {
  if (r == c) return diag_[static_cast<std::size_t>(r)];
  if (r > c) {
    const auto& col = lower_[static_cast<std::size_t>(c)];
    auto it = col.find(r);
    return it == col.end() ? Block6::Zero() : it->second;
  }
  return block(c, r).transpose();
}

bool BlockSymmetricMatrix::has_block(int r, int c) const {
  if (r == c) return true;
  if (r < c) std::swap(r, c);
  return lower_[static_cast<std::size_t>(c)].count(r) > 0;
}

Eigen::VectorXd BlockSymmetricMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(size());
  for (int c = 0; c < n_blocks(); ++c) {
    y.segment<6>(6 * c).noalias() += diag_[static_cast<std::size_t>(c)] * x.segment<6>(6 * c);
    for (const auto& [r, b] : lower_[static_cast<std::size_t>(c)]) {
      y.segment<6>(6 * r).noalias() += b * x.segment<6>(6 * c);
      y.segment<6>(6 * c).noalias() += b.transpose() * x.segment<6>(6 * r);
    }
  }
  return y;
}

void BlockSymmetricMatrix::multiply(const RowPanel& x, RowPanel& y) const {
  y.setZero(x.rows(), x.cols());
  for (int c = 0; c < n_blocks(); ++c) {
    y.middleRows<6>(6 * c).noalias() += diag_[static_cast<std::size_t>(c)] * x.middleRows<6>(6 * c);
    for (const auto& [r, b] : lower_[static_cast<std::size_t>(c)]) {
      y.middleRows<6>(6 * r).noalias() += b * x.middleRows<6>(6 * c);
      y.middleRows<6>(6 * c).noalias() += b.transpose() * x.middleRows<6>(6 * r);
    }
  }
}

Eigen::MatrixXd BlockSymmetricMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
  for (int c = 0; c < n_blocks(); ++c) {
    m.block<6, 6>(6 * c, 6 * c) = diag_[static_cast<std::size_t>(c)];
    for (const auto& [r, b] : lower_[static_cast<std::size_t>(c)]) {
      m.block<6, 6>(6 * r, 6 * c) = b;
      m.block<6, 6>(6 * c, 6 * r) = b.transpose();
    }
  }
  return m;
}

BlockCholesky::BlockCholesky(const BlockSymmetricMatrix& a, double relative_pivot_tolerance) {
  const int n = a.n_blocks();
  perm_.resize(static_cast<std::size_t>(n));
  iperm_.resize(static_cast<std::size_t>(n));
  if (n == 0) return;

  std::vector<Eigen::Triplet<double>> triplets;
  for (int c = 0; c < n; ++c) {
    triplets.emplace_back(c, c, 1.0);
    for (const auto& entry : a.column(c)) {
      triplets.emplace_back(entry.first, c, 1.0);
      triplets.emplace_back(c, entry.first, 1.0);
    }
  }
  Eigen::SparseMatrix<double> pattern(n, n);
  pattern.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> ordering;
  Eigen::AMDOrdering<int>()(pattern, ordering);
  for (int k = 0; k < n; ++k) {
    perm_[static_cast<std::size_t>(k)] = ordering.indices()[k];
    iperm_[static_cast<std::size_t>(ordering.indices()[k])] = k;
  }

  // Working copy in permuted numbering, strictly-lower blocks per column.
  std::vector<Block6> work_diag(static_cast<std::size_t>(n));
  std::vector<std::map<int, Block6>> work(static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c) {
    const int pc = iperm_[static_cast<std::size_t>(c)];
    work_diag[static_cast<std::size_t>(pc)] = a.diagonal(c);
    for (const auto& [r, b] : a.column(c)) {
      const int pr = iperm_[static_cast<std::size_t>(r)];
      if (pr > pc) {
        work[static_cast<std::size_t>(pc)][pr] = b;
      } else {
        work[static_cast<std::size_t>(pr)][pc] = b.transpose();
      }
    }
  }

  diag_.resize(static_cast<std::size_t>(n));
  cols_.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    const Block6 original = a.diagonal(perm_[uk]);
    Eigen::LLT<Block6> llt(work_diag[uk]);
    if (llt.info() != Eigen::Success) {
      throw FactorizationError("normal matrix is not positive definite", perm_[uk]);
    }
    const Block6 l = llt.matrixL();
    for (int d = 0; d < 6; ++d) {
      const double ref = original(d, d);
      if (!(ref > 0.0) || l(d, d) * l(d, d) < relative_pivot_tolerance * ref) {
        throw FactorizationError("normal matrix is numerically rank deficient", perm_[uk]);
      }
    }
    diag_[uk] = l;
    const Block6 l_inv_t = l.triangularView<Eigen::Lower>().solve(Block6::Identity()).transpose();

    auto& col = cols_[uk];
    col.reserve(work[uk].size());
    for (const auto& [r, b] : work[uk]) col.emplace_back(r, b * l_inv_t);
    work[uk].clear();

    for (std::size_t x = 0; x < col.size(); ++x) {
      const auto& [ri, li] = col[x];
      work_diag[static_cast<std::size_t>(ri)].noalias() -= li * li.transpose();
      for (std::size_t y = 0; y < x; ++y) {
        const auto& [rj, lj] = col[y];
        // rj < ri since col is sorted by row.
        auto [it, inserted] = work[static_cast<std::size_t>(rj)].try_emplace(ri, Block6::Zero());
        it->second.noalias() -= li * lj.transpose();
      }
    }
  }
}

std::size_t BlockCholesky::factor_blocks() const {
  std::size_t count = diag_.size();
  for (const auto& c : cols_) count += c.size();
  return count;
}

void BlockCholesky::forward(RowPanel& y, int start) const {
  const int n = n_blocks();
  for (int k = start; k < n; ++k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    auto yk = y.middleRows<6>(6 * k);
    diag_[uk].triangularView<Eigen::Lower>().solveInPlace(yk);
    for (const auto& [r, l] : cols_[uk]) y.middleRows<6>(6 * r).noalias() -= l * yk;
  }
}

void BlockCholesky::backward(RowPanel& y) const {
  for (int k = n_blocks() - 1; k >= 0; --k) {
    const std::size_t uk = static_cast<std::size_t>(k);
    auto yk = y.middleRows<6>(6 * k);
    for (const auto& [r, l] : cols_[uk]) yk.noalias() -= l.transpose() * y.middleRows<6>(6 * r);
    diag_[uk].transpose().triangularView<Eigen::Upper>().solveInPlace(yk);
  }
}

void BlockCholesky::solve_in_place(RowPanel& x) const {
  const int n = n_blocks();
  RowPanel y(x.rows(), x.cols());
  for (int k = 0; k < n; ++k) y.middleRows<6>(6 * k) = x.middleRows<6>(6 * perm_[static_cast<std::size_t>(k)]);
  forward(y, 0);
  backward(y);
  for (int k = 0; k < n; ++k) x.middleRows<6>(6 * perm_[static_cast<std::size_t>(k)]) = y.middleRows<6>(6 * k);
}

Eigen::VectorXd BlockCholesky::solve(const Eigen::VectorXd& b) const {
  RowPanel x = b;
  solve_in_place(x);
  return x.col(0);
}

RowPanel BlockCholesky::inverse_columns(int first, int last) const {
  const int n = n_blocks();
  const int width = 6 * (last - first);
  RowPanel y = RowPanel::Zero(6 * n, width);
  int start = n;
  for (int c = first; c < last; ++c) {
    const int pc = iperm_[static_cast<std::size_t>(c)];
    y.block<6, 6>(6 * pc, 6 * (c - first)).setIdentity();
    start = std::min(start, pc);
  }
  forward(y, start);
  backward(y);
  RowPanel x(6 * n, width);
  for (int k = 0; k < n; ++k) x.middleRows<6>(6 * perm_[static_cast<std::size_t>(k)]) = y.middleRows<6>(6 * k);
  return x;
}

}  // namespace mosaic
