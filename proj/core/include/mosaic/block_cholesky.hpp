#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace mosaic {

using Block6 = Eigen::Matrix<double, 6, 6>;
using RowPanel = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Symmetric matrix made of 6x6 blocks. Only blocks on or below the diagonal are kept.
class BlockSymmetricMatrix {
 public:
  BlockSymmetricMatrix() = default;
  explicit BlockSymmetricMatrix(int n_blocks);

  int n_blocks() const { return static_cast<int>(diag_.size()); }
  int size() const { return 6 * n_blocks(); }

  // Adds b at (r, c); for r < c the transpose is added at (c, r).
  void add(int r, int c, const Block6& b);
  Block6 block(int r, int c) const;
  bool has_block(int r, int c) const;

  const Block6& diagonal(int k) const { return diag_[static_cast<std::size_t>(k)]; }
  // Strictly-lower blocks of block column c, keyed by block row.
  const std::map<int, Block6>& column(int c) const { return lower_[static_cast<std::size_t>(c)]; }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  // y = A x on row-major panels with 6 * n_blocks() rows.
  void multiply(const RowPanel& x, RowPanel& y) const;
  Eigen::MatrixXd dense() const;

 private:
  std::vector<Block6> diag_;
  std::vector<std::map<int, Block6>> lower_;
};

class FactorizationError : public std::runtime_error {
 public:
  FactorizationError(const std::string& what, int block) : std::runtime_error(what), block_(block) {}
  int block() const { return block_; }

 private:
  int block_;
};

// Cholesky factor P A P^T = L L^T of a block-sparse SPD matrix under a fill-reducing block ordering.
class BlockCholesky {
 public:
  BlockCholesky() = default;
  // Throws FactorizationError naming the failing (original) block index.
  explicit BlockCholesky(const BlockSymmetricMatrix& a, double relative_pivot_tolerance = 1e-13);

  int n_blocks() const { return static_cast<int>(perm_.size()); }
  bool empty() const { return perm_.empty(); }
  std::size_t factor_blocks() const;

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  // In-place solve of A X = B for each column of a row-major panel.
  void solve_in_place(RowPanel& x) const;
  // Columns [6 * first, 6 * last) of A^{-1}.
  RowPanel inverse_columns(int first, int last) const;

  const std::vector<int>& permutation() const { return perm_; }

 private:
  void forward(RowPanel& y, int start) const;
  void backward(RowPanel& y) const;

  std::vector<int> perm_;   // perm_[new] = old
  std::vector<int> iperm_;  // iperm_[old] = new
  std::vector<Block6> diag_;
  std::vector<std::vector<std::pair<int, Block6>>> cols_;
};

}  // namespace mosaic
