#pragma once

// Cholesky factorization of the Schur matrix at the granularity of variable
// blocks: blocks are eliminated in minimum-degree order and every nonzero
// block pair is held as a dense matrix.

#include <cstdint>
#include <vector>

#include "relent/linalg.hpp"

namespace relent::sdp {

class BlockSchur {
 public:
  /// `sizes[g]` variables per group, laid out contiguously; each clique lists
  /// groups coupled by one cone.
  BlockSchur(std::vector<int> sizes, const std::vector<std::vector<int>>& cliques);

  void clear();
  int group_of(int var) const { return group_of_[var]; }
  int local_of(int var) const { return local_of_[var]; }
  /// Storage of block (row_group, col_group), or of its transpose when
  /// `transposed` is set. Diagonal blocks hold only their lower triangle.
  linalg::RMatrix& block(int row_group, int col_group, bool& transposed);
  double max_diag() const;
  /// Factors M + reg I; false if not numerically positive definite.
  bool factor(double reg);
  void solve_in_place(linalg::RMatrix& b) const;
  linalg::RVector solve(const linalg::RVector& b) const;

 private:
  int block_index(int row_group, int col_group) const;

  std::vector<int> sizes_, offsets_, pos_, order_;
  std::vector<int> group_of_, local_of_;
  std::vector<std::vector<int>> below_;  // groups eliminated after, per group
  std::vector<int> index_;  // row_group * groups + col_group -> block, -1 if structurally zero
  std::vector<linalg::RMatrix> a_, l_;
};

}  // namespace relent::sdp
