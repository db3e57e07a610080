#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "relent/sdp.hpp"

namespace relent::sdp {

using linalg::CMatrix;
using linalg::Complex;
using linalg::RMatrix;
using linalg::RVector;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

using ColSuperop = Eigen::SparseMatrix<Complex, Eigen::ColMajor>;
using Entries = std::vector<std::pair<int, Complex>>;  // (row-major vec index, value)

// vec(Phi(B_j)) for the superoperator of Phi, merged and sorted.
Entries apply_to_basis(const ColSuperop& s, int j, int in) {
  Entries out;
  for (const auto& [a, b, v] : HermitianBasis::element(j, in)) {
    for (ColSuperop::InnerIterator it(s, a * in + b); it; ++it) out.emplace_back(it.row(), v * it.value());
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  Entries merged;
  for (const auto& e : out) {
    if (!merged.empty() && merged.back().first == e.first) {
      merged.back().second += e.second;
    } else {
      merged.push_back(e);
    }
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(), [](const auto& e) { return e.second == Complex(0.0); }),
               merged.end());
  return merged;
}

// Real symmetric image of a Hermitian matrix given by its entries.
Triplets embed_entries(const Entries& entries, int out) {
  Triplets t;
  for (const auto& [idx, v] : entries) {
    const int r = idx / out, c = idx % out;
    if (out == 1) {
      if (v.real() != 0.0) t.emplace_back(0, 0, v.real());
      continue;
    }
    if (v.real() != 0.0) {
      t.emplace_back(r, c, v.real());
      t.emplace_back(r + out, c + out, v.real());
    }
    if (v.imag() != 0.0) {
      t.emplace_back(r + out, c, v.imag());
      t.emplace_back(r, c + out, -v.imag());
    }
  }
  return t;
}

// Coordinates of a Hermitian matrix given by its entries: (basis index, value).
std::vector<std::pair<int, double>> coordinates_of(const Entries& entries, int out) {
  std::map<int, double> acc;
  for (const auto& [idx, v] : entries) {
    const int r = idx / out, c = idx % out;
    if (r == c) {
      acc[idx] += v.real();
    } else if (r < c) {
      acc[r * out + c] += std::sqrt(2.0) * v.real();
      acc[c * out + r] += std::sqrt(2.0) * v.imag();
    }
  }
  std::vector<std::pair<int, double>> res;
  for (const auto& [k, v] : acc)
    if (v != 0.0) res.emplace_back(k, v);
  return res;
}

RMatrix embed_constant(const HermitianMatrix& k) {
  if (k.dim() == 1) return RMatrix::Constant(1, 1, k(0, 0).real());
  return embed(k.matrix());
}

// Sums the maps of terms that reference the same block.
std::map<std::string, LinearMap> merge_terms(const AffineOperatorExpr& expr) {
  std::map<std::string, LinearMap> merged;
  for (const auto& t : expr.terms) {
    auto it = merged.find(t.block);
    if (it == merged.end()) {
      merged.emplace(t.block, t.map);
    } else {
      it->second = it->second + t.map;
    }
  }
  return merged;
}

}  // namespace

std::vector<double> HermitianBasis::coordinates(const HermitianMatrix& v) {
  const int d = v.dim();
  std::vector<double> y(static_cast<std::size_t>(d) * d);
  for (int a = 0; a < d; ++a) {
    y[a * d + a] = v(a, a).real();
    for (int b = a + 1; b < d; ++b) {
      y[a * d + b] = std::sqrt(2.0) * v(a, b).real();
      y[b * d + a] = std::sqrt(2.0) * v(a, b).imag();
    }
  }
  return y;
}

HermitianMatrix HermitianBasis::matrix(const double* y, int d) {
  CMatrix m(d, d);
  for (int a = 0; a < d; ++a) {
    m(a, a) = y[a * d + a];
    for (int b = a + 1; b < d; ++b) {
      const Complex v(y[a * d + b] * kInvSqrt2, y[b * d + a] * kInvSqrt2);
      m(a, b) = v;
      m(b, a) = std::conj(v);
    }
  }
  return HermitianMatrix::symmetrized(m);
}

std::vector<std::tuple<int, int, Complex>> HermitianBasis::element(int j, int d) {
  const int a = j / d, b = j % d;
  if (a == b) return {{a, a, Complex(1.0)}};
  if (a < b) return {{a, b, Complex(kInvSqrt2)}, {b, a, Complex(kInvSqrt2)}};
  // a > b: i(E_ba - E_ab)/sqrt2
  return {{b, a, Complex(0.0, kInvSqrt2)}, {a, b, Complex(0.0, -kInvSqrt2)}};
}

RMatrix embed(const CMatrix& h) {
  const auto n = h.rows();
  RMatrix e(2 * n, 2 * n);
  e.topLeftCorner(n, n) = h.real();
  e.bottomRightCorner(n, n) = h.real();
  e.bottomLeftCorner(n, n) = h.imag();
  e.topRightCorner(n, n) = -h.imag();
  return e;
}

HermitianMatrix extract(const RMatrix& e) {
  if (e.rows() != e.cols() || e.rows() % 2 != 0) throw ValidationError("extract: expected an even square matrix");
  const auto n = e.rows() / 2;
  const RMatrix re = 0.5 * (e.topLeftCorner(n, n) + e.bottomRightCorner(n, n));
  const RMatrix im = 0.5 * (e.bottomLeftCorner(n, n) - e.topRightCorner(n, n));
  CMatrix m(n, n);
  m.real() = re;
  m.imag() = im;
  return HermitianMatrix::symmetrized(m);
}

Assignment StandardForm::assignment(const RVector& y) const {
  Assignment out;
  for (const auto& g : groups) out.emplace(g.block, HermitianBasis::matrix(y.data() + g.offset, g.dim));
  return out;
}

StandardForm embed_hermitian(const SdpProblem& problem) {
  problem.validate();
  StandardForm f;
  std::map<std::string, const StandardForm::VarGroup*> group_of;
  f.groups.reserve(problem.blocks().size());
  for (const auto& b : problem.blocks()) {
    f.groups.push_back({b.id, f.num_vars, b.dim, b.trace_norm_bound});
    f.num_vars += HermitianBasis::size(b.dim);
  }
  for (const auto& g : f.groups) group_of[g.block] = &g;

  f.c = RVector::Zero(f.num_vars);
  f.c0 = problem.objective.constant;
  for (const auto& t : problem.objective.terms) {
    const auto* g = group_of.at(t.block);
    const auto y = HermitianBasis::coordinates(t.weight);
    for (std::size_t k = 0; k < y.size(); ++k) f.c[g->offset + static_cast<int>(k)] += y[k];
  }

  // Implicit cones of PSD variable blocks.
  for (const auto& b : problem.blocks()) {
    if (b.kind != BlockKind::Psd) continue;
    const auto* g = group_of.at(b.id);
    StandardForm::ConeBlock cone;
    cone.label = b.id + " >= 0";
    cone.embedded = b.dim > 1;
    cone.size = cone.embedded ? 2 * b.dim : 1;
    cone.f0 = RMatrix::Zero(cone.size, cone.size);
    for (int j = 0; j < HermitianBasis::size(b.dim); ++j) {
      Entries e;
      for (const auto& [r, c, v] : HermitianBasis::element(j, b.dim)) e.emplace_back(r * b.dim + c, v);
      cone.vars.push_back(g->offset + j);
      cone.coefficients.push_back(embed_entries(e, b.dim));
    }
    f.cones.push_back(std::move(cone));
  }

  std::vector<Eigen::Triplet<double>> eq_trip;
  std::vector<double> rhs;
  auto add_row = [&](const std::vector<std::pair<int, double>>& coeffs, double value, std::string label) {
    const int row = static_cast<int>(rhs.size());
    for (const auto& [col, v] : coeffs) eq_trip.emplace_back(row, col, v);
    rhs.push_back(value);
    f.eq_labels.push_back(std::move(label));
  };

  for (const auto& mc : problem.matrix_constraints) {
    const int out = mc.expr.output_dim;
    const auto merged = merge_terms(mc.expr);
    if (mc.relation == MatrixRelation::Psd) {
      StandardForm::ConeBlock cone;
      cone.label = mc.label;
      cone.embedded = out > 1;
      cone.size = cone.embedded ? 2 * out : 1;
      cone.f0 = -embed_constant(mc.expr.constant);
      for (const auto& [block, map] : merged) {
        const auto* g = group_of.at(block);
        const ColSuperop s = map.superop();
        for (int j = 0; j < HermitianBasis::size(g->dim); ++j) {
          Triplets t = embed_entries(apply_to_basis(s, j, g->dim), out);
          if (t.empty()) continue;
          cone.vars.push_back(g->offset + j);
          cone.coefficients.push_back(std::move(t));
        }
      }
      f.cones.push_back(std::move(cone));
    } else {
      // One equality row per output basis coordinate.
      std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(out) * out);
      for (const auto& [block, map] : merged) {
        const auto* g = group_of.at(block);
        const ColSuperop s = map.superop();
        for (int j = 0; j < HermitianBasis::size(g->dim); ++j) {
          for (const auto& [m, v] : coordinates_of(apply_to_basis(s, j, g->dim), out)) {
            rows[m].emplace_back(g->offset + j, v);
          }
        }
      }
      const auto k = HermitianBasis::coordinates(mc.expr.constant);
      for (std::size_t m = 0; m < rows.size(); ++m) {
        if (rows[m].empty() && k[m] == 0.0) continue;
        add_row(rows[m], -k[m], mc.label + "[" + std::to_string(m) + "]");
      }
    }
  }

  for (const auto& sc : problem.scalar_constraints) {
    std::vector<std::pair<int, double>> coeffs;
    for (const auto& t : sc.functional.terms) {
      const auto* g = group_of.at(t.block);
      const auto y = HermitianBasis::coordinates(t.weight);
      for (std::size_t k = 0; k < y.size(); ++k)
        if (y[k] != 0.0) coeffs.emplace_back(g->offset + static_cast<int>(k), y[k]);
    }
    if (sc.relation == ScalarRelation::Zero) {
      add_row(coeffs, -sc.functional.constant, sc.label);
      continue;
    }
    StandardForm::ConeBlock cone;
    cone.label = sc.label;
    cone.embedded = false;
    cone.size = 1;
    cone.f0 = RMatrix::Constant(1, 1, -sc.functional.constant);
    std::map<int, double> acc;
    for (const auto& [col, v] : coeffs) acc[col] += v;
    for (const auto& [col, v] : acc) {
      cone.vars.push_back(col);
      cone.coefficients.push_back({Eigen::Triplet<double>(0, 0, v)});
    }
    f.cones.push_back(std::move(cone));
  }

  f.eq.resize(static_cast<Eigen::Index>(rhs.size()), f.num_vars);
  f.eq.setFromTriplets(eq_trip.begin(), eq_trip.end());
  f.eq.makeCompressed();
  f.eq_rhs = Eigen::Map<const RVector>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  return f;
}

}  // namespace relent::sdp
