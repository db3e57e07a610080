#include "sdp_schur.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include <Eigen/Cholesky>

namespace relent::sdp {

using linalg::RMatrix;
using linalg::RVector;

BlockSchur::BlockSchur(std::vector<int> sizes, const std::vector<std::vector<int>>& cliques)
    : sizes_(std::move(sizes)) {
  const int g = static_cast<int>(sizes_.size());
  offsets_.assign(g + 1, 0);
  for (int k = 0; k < g; ++k) offsets_[k + 1] = offsets_[k] + sizes_[k];
  group_of_.resize(offsets_[g]);
  local_of_.resize(offsets_[g]);
  for (int k = 0; k < g; ++k)
    for (int i = 0; i < sizes_[k]; ++i) {
      group_of_[offsets_[k] + i] = k;
      local_of_[offsets_[k] + i] = i;
    }

  std::vector<std::set<int>> adj(g);
  for (const auto& c : cliques)
    for (int u : c)
      for (int v : c)
        if (u != v) adj[u].insert(v);

  // Greedy minimum weighted degree; ties go to the lower group index.
  std::vector<char> done(g, 0);
  below_.resize(g);
  pos_.assign(g, -1);
  for (int step = 0; step < g; ++step) {
    int best = -1;
    long long best_w = std::numeric_limits<long long>::max();
    for (int k = 0; k < g; ++k) {
      if (done[k]) continue;
      long long w = 0;
      for (int n : adj[k]) w += sizes_[n];
      if (w < best_w) best_w = w, best = k;
    }
    done[best] = 1;
    pos_[best] = step;
    order_.push_back(best);
    below_[best].assign(adj[best].begin(), adj[best].end());
    for (int u : adj[best]) {
      adj[u].erase(best);
      for (int v : adj[best])
        if (u != v) adj[u].insert(v);
    }
    adj[best].clear();
  }

  index_.assign(static_cast<std::size_t>(g) * g, -1);
  auto alloc = [&](int r, int c) {
    index_[static_cast<std::size_t>(r) * g + c] = static_cast<int>(a_.size());
    a_.push_back(RMatrix::Zero(sizes_[r], sizes_[c]));
  };
  for (int k = 0; k < g; ++k) {
    alloc(k, k);
    for (int r : below_[k]) alloc(r, k);
  }
  // Later steps index blocks of `below_` in elimination order.
  for (auto& b : below_) std::sort(b.begin(), b.end(), [&](int x, int y) { return pos_[x] < pos_[y]; });
}

int BlockSchur::block_index(int row_group, int col_group) const {
  return index_[static_cast<std::size_t>(row_group) * sizes_.size() + col_group];
}

void BlockSchur::clear() {
  for (auto& m : a_) m.setZero();
}

RMatrix& BlockSchur::block(int row_group, int col_group, bool& transposed) {
  transposed = pos_[row_group] < pos_[col_group];
  return transposed ? a_[block_index(col_group, row_group)] : a_[block_index(row_group, col_group)];
}

double BlockSchur::max_diag() const {
  double m = 0.0;
  for (std::size_t k = 0; k < sizes_.size(); ++k) {
    m = std::max(m, a_[block_index(static_cast<int>(k), static_cast<int>(k))].diagonal().cwiseAbs().maxCoeff());
  }
  return m;
}

bool BlockSchur::factor(double reg) {
  l_ = a_;
  for (std::size_t k = 0; k < sizes_.size(); ++k) {
    l_[block_index(static_cast<int>(k), static_cast<int>(k))].diagonal().array() += reg;
  }
  for (int c : order_) {
    RMatrix& d = l_[block_index(c, c)];
    Eigen::LLT<Eigen::Ref<RMatrix>> llt(d);
    if (llt.info() != Eigen::Success) return false;
    for (int r : below_[c]) {
      RMatrix& b = l_[block_index(r, c)];
      d.transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(b);
    }
    for (std::size_t p = 0; p < below_[c].size(); ++p) {
      const int r1 = below_[c][p];
      const RMatrix& l1 = l_[block_index(r1, c)];
      l_[block_index(r1, r1)].selfadjointView<Eigen::Lower>().rankUpdate(l1, -1.0);
      for (std::size_t q = 0; q < p; ++q) {
        const int r2 = below_[c][q];
        l_[block_index(r1, r2)].noalias() -= l1 * l_[block_index(r2, c)].transpose();
      }
    }
  }
  return true;
}

void BlockSchur::solve_in_place(RMatrix& b) const {
  for (int c : order_) {
    auto bc = b.middleRows(offsets_[c], sizes_[c]);
    l_[block_index(c, c)].triangularView<Eigen::Lower>().solveInPlace(bc);
    for (int r : below_[c]) b.middleRows(offsets_[r], sizes_[r]).noalias() -= l_[block_index(r, c)] * bc;
  }
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const int c = *it;
    auto bc = b.middleRows(offsets_[c], sizes_[c]);
    for (int r : below_[c]) bc.noalias() -= l_[block_index(r, c)].transpose() * b.middleRows(offsets_[r], sizes_[r]);
    l_[block_index(c, c)].triangularView<Eigen::Lower>().transpose().solveInPlace(bc);
  }
}

RVector BlockSchur::solve(const RVector& b) const {
  RMatrix x = b;
  solve_in_place(x);
  return x.col(0);
}

}  // namespace relent::sdp
